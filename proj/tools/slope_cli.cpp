#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "slope/config.hpp"
#include "slope/records.hpp"
#include "slope/report.hpp"
#include "slope/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Off-policy evaluation experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string records_dir;
  std::string kind_name;
  std::string out_file;
  int workers = 1;
  std::uint64_t master_seed = 0;
  bool seed_set = false;

  CLI::App* run = app.add_subcommand("run", "Run all conditions and replicates of a config");
  run->add_option("--config", config_path, "Experiment config file")->required();
  run->add_option("--out", out_dir, "Output directory for records")->required();
  run->add_option("--workers", workers, "Parallel worker threads");
  run->add_option("--master-seed", master_seed, "Override the config master seed")
      ->each([&](const std::string&) { seed_set = true; });

  CLI::App* report = app.add_subcommand("report", "Aggregate records into plot data");
  report->add_option("--records", records_dir, "Directory holding records.csv")->required();
  report->add_option("--kind", kind_name, "ecdf | pairwise | learning_curve | summary_table")
      ->required();
  report->add_option("--out", out_file, "Output file")->required();

  CLI::App* list = app.add_subcommand("list-conditions", "Print the expanded condition grid");
  list->add_option("--config", config_path, "Experiment config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      slope::harness::ExperimentConfig config = slope::harness::load_config(config_path);
      slope::harness::RunOptions options;
      options.workers = workers;
      if (seed_set) options.master_seed = master_seed;
      auto records = slope::harness::run_experiment(config, out_dir, options);
      std::cout << "wrote " << records.size() << " records to " << out_dir << "/records.csv\n";
    } else if (report->parsed()) {
      auto records = slope::harness::read_records_csv(records_dir + "/records.csv");
      slope::harness::write_report(records, slope::harness::parse_report_kind(kind_name),
                                   out_file);
      std::cout << "wrote " << out_file << "\n";
    } else if (list->parsed()) {
      slope::harness::ExperimentConfig config = slope::harness::load_config(config_path);
      for (const auto& condition : slope::harness::expand_grid(config)) {
        std::cout << condition.id << "\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
