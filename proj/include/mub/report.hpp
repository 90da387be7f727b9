#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mub/branch_bound.hpp"
#include "mub/musb_model.hpp"
#include "mub/stationary_search.hpp"

namespace mub {

/// Flat outcome record shared by every subcommand. Field order is the CSV
/// column order: status, vars, eqns, iterations, regions, residual, lambda,
/// pruned_fraction, eta_seconds, seed, point.
struct Report {
  std::string status;
  long long vars = 0;
  long long eqns = 0;
  std::optional<long long> iterations;
  std::optional<long long> regions;
  std::optional<double> residual;
  std::optional<double> lambda;
  std::optional<double> pruned_fraction;
  std::optional<double> eta_seconds;
  std::optional<std::uint64_t> seed;
  std::vector<double> point;

  friend bool operator==(const Report&, const Report&) = default;
};

enum class ReportFormat { Json, Csv, Table };

ReportFormat parse_report_format(const std::string& text);

std::string write_report(const Report& report, ReportFormat format);
Report parse_report(const std::string& text, ReportFormat format);

Report count_report(const ProblemSpec& spec);
Report search_report(const EquationSystem& system, const SearchOutcome& outcome);
Report prove_report(const EquationSystem& system, const BnbOutcome& outcome);

/// One JSON object per run: tool version, argv, config echo, spec, seeds,
/// UTC timestamps and the outcome report.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::vector<std::pair<std::string, std::string>> config;  // flag -> value
  std::optional<ProblemSpec> spec;
  std::vector<std::uint64_t> seeds;
  std::string started;
  std::string finished;
  std::optional<Report> outcome;

  std::string to_json() const;
};

std::string utc_timestamp();

extern const char* const kToolVersion;

}  // namespace mub
