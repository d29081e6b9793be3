#pragma once

#include <optional>
#include <string>
#include <vector>

#include "slope/config.hpp"
#include "slope/records.hpp"

namespace slope::harness {

struct RunOptions {
  int workers = 1;
  std::optional<std::uint64_t> master_seed;  // overrides the config value
};

//! Run every condition x replicate of the config, evaluating all methods on
//! the same logged data (paired design). Records stream into
//! <out_dir>/records.partial.csv as they finish; on completion the canonical
//! sorted records.csv and manifest.json are written. Reruns resume from the
//! partial file, skipping (condition, replicate) units that already carry
//! every method.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config, const std::string& out_dir,
                                      const RunOptions& options = {});

//! Evaluate all methods on one replicate. Exposed for tests.
std::vector<RunRecord> run_replicate(const ExperimentConfig& config, const Condition& condition,
                                     long replicate);

}  // namespace slope::harness
