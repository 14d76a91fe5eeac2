#include "driftlab/harness/report.hpp"

#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace driftlab::harness {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                 std::chars_format::general, 17);
  if (res.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf.data(), res.ptr);
}

std::string runs_csv(const std::vector<RunResult>& runs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) {
    os << (i ? "," : "") << kCsvColumns[i];
  }
  os << '\n';
  for (const auto& r : runs) {
    os << r.run_id << ',' << r.seed << ',' << r.T << ',' << r.variant << ','
       << format_double(r.sum_d) << ',' << format_double(r.sum_kappa) << ','
       << format_double(r.c_t) << ',' << format_double(r.empirical_risk) << ','
       << format_double(r.population_risk) << ',' << format_double(r.gap) << ','
       << format_double(r.aux1) << ',' << format_double(r.aux2) << '\n';
  }
  return os.str();
}

void write_outputs(const ExperimentOutput& out, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());
  auto write = [&](const std::string& name, const std::string& text) {
    const auto path = dir / name;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    f << text;
    if (!f) throw std::runtime_error("failed writing '" + path.string() + "'");
  };
  write("runs.csv", runs_csv(out.runs));
  write("summary.json", out.summary.dump(2) + "\n");
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t nthreads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (nthreads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace driftlab::harness
