#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "driftlab/harness/experiments.hpp"

namespace driftlab::harness {

inline const std::vector<std::string> kCsvColumns = {
    "run_id", "seed", "T", "variant", "sum_d", "sum_kappa", "c_t",
    "empirical_risk", "population_risk", "gap", "aux1", "aux2"};

/// Locale-independent text with 17 significant digits; "nan" and "inf" for
/// non-finite values.
std::string format_double(double v);

std::string runs_csv(const std::vector<RunResult>& runs);

/// Writes runs.csv and summary.json into `dir` (created if needed).
void write_outputs(const ExperimentOutput& out, const std::filesystem::path& dir);

/// Calls fn(i) for i in [0, n) on up to `workers` threads. The first exception
/// by index is rethrown after all workers finish.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace driftlab::harness
