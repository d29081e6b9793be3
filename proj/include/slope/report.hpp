#pragma once

#include <string>
#include <vector>

#include "slope/records.hpp"

namespace slope::harness {

enum class ReportKind { ecdf, pairwise, learning_curve, summary_table };

ReportKind parse_report_kind(const std::string& name);

//! Render records into plot-ready CSV text.
//!   ecdf:           method,x,y              (normalized-MSE empirical CDF)
//!   pairwise:       significance matrix with a trailing column-mean row
//!   learning_curve: n,method,mse,se2        (se2 = 2 standard errors of MSE)
//!   summary_table:  condition_id,method,replicates,mse,mean_chosen_param
std::string render_report(const std::vector<RunRecord>& records, ReportKind kind,
                          double alpha = 0.05);

void write_report(const std::vector<RunRecord>& records, ReportKind kind,
                  const std::string& out_path, double alpha = 0.05);

}  // namespace slope::harness
