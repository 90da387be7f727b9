#include "mub/report.hpp"

#include <chrono>
#include <ctime>
#include <sstream>

#include <json.hpp>

#include "mub/errors.hpp"

namespace mub {

const char* const kToolVersion = "1.0.0";

namespace {

using ojson = nlohmann::ordered_json;

constexpr const char* kColumns[] = {"status",      "vars",          "eqns",   "iterations",
                                    "regions",     "residual",      "lambda", "pruned_fraction",
                                    "eta_seconds", "seed",          "point"};

std::string join_point(const std::vector<double>& p, char sep) {
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) out += sep;
    out += format_double(p[i]);
  }
  return out;
}

std::vector<double> split_point(const std::string& text, char sep) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

// Ordered (name, text) cells of the present fields; absent optionals are "".
std::vector<std::pair<std::string, std::string>> cells(const Report& r) {
  auto opt_int = [](const std::optional<long long>& v) { return v ? std::to_string(*v) : ""; };
  auto opt_dbl = [](const std::optional<double>& v) { return v ? format_double(*v) : ""; };
  return {{"status", r.status},
          {"vars", std::to_string(r.vars)},
          {"eqns", std::to_string(r.eqns)},
          {"iterations", opt_int(r.iterations)},
          {"regions", opt_int(r.regions)},
          {"residual", opt_dbl(r.residual)},
          {"lambda", opt_dbl(r.lambda)},
          {"pruned_fraction", opt_dbl(r.pruned_fraction)},
          {"eta_seconds", opt_dbl(r.eta_seconds)},
          {"seed", r.seed ? std::to_string(*r.seed) : ""},
          {"point", join_point(r.point, ';')}};
}

void assign(Report& r, const std::string& key, const std::string& value) {
  if (value.empty() && key != "status") return;
  if (key == "status") r.status = value;
  else if (key == "vars") r.vars = std::stoll(value);
  else if (key == "eqns") r.eqns = std::stoll(value);
  else if (key == "iterations") r.iterations = std::stoll(value);
  else if (key == "regions") r.regions = std::stoll(value);
  else if (key == "residual") r.residual = std::stod(value);
  else if (key == "lambda") r.lambda = std::stod(value);
  else if (key == "pruned_fraction") r.pruned_fraction = std::stod(value);
  else if (key == "eta_seconds") r.eta_seconds = std::stod(value);
  else if (key == "seed") r.seed = std::stoull(value);
  else if (key == "point") r.point = split_point(value, value.find(';') != std::string::npos ? ';' : ',');
  else throw ValidationError("report: unknown field '" + key + "'");
}

ojson to_json_object(const Report& r) {
  ojson j;
  j["status"] = r.status;
  j["vars"] = r.vars;
  j["eqns"] = r.eqns;
  if (r.iterations) j["iterations"] = *r.iterations;
  if (r.regions) j["regions"] = *r.regions;
  if (r.residual) j["residual"] = *r.residual;
  if (r.lambda) j["lambda"] = *r.lambda;
  if (r.pruned_fraction) j["pruned_fraction"] = *r.pruned_fraction;
  if (r.eta_seconds) j["eta_seconds"] = *r.eta_seconds;
  if (r.seed) j["seed"] = *r.seed;
  if (!r.point.empty()) j["point"] = r.point;
  return j;
}

}  // namespace

ReportFormat parse_report_format(const std::string& text) {
  if (text == "json") return ReportFormat::Json;
  if (text == "csv") return ReportFormat::Csv;
  if (text == "table") return ReportFormat::Table;
  throw ValidationError("unknown report format '" + text + "' (json, csv, table)");
}

std::string write_report(const Report& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Json:
      return to_json_object(report).dump() + "\n";
    case ReportFormat::Csv: {
      std::string head, row;
      for (const auto& [k, v] : cells(report)) {
        head += (head.empty() ? "" : ",") + k;
        row += (k == "status" ? "" : ",") + v;
      }
      return head + "\n" + row + "\n";
    }
    case ReportFormat::Table: {
      std::ostringstream out;
      for (const auto& [k, v] : cells(report)) {
        if (v.empty()) continue;
        out << k << std::string(k.size() < 16 ? 16 - k.size() : 1, ' ')
            << (k == "point" ? join_point(report.point, ',') : v) << "\n";
      }
      return out.str();
    }
  }
  return {};
}

Report parse_report(const std::string& text, ReportFormat format) {
  Report r;
  switch (format) {
    case ReportFormat::Json: {
      const auto j = nlohmann::json::parse(text);
      r.status = j.at("status").get<std::string>();
      r.vars = j.at("vars").get<long long>();
      r.eqns = j.at("eqns").get<long long>();
      if (j.contains("iterations")) r.iterations = j["iterations"].get<long long>();
      if (j.contains("regions")) r.regions = j["regions"].get<long long>();
      if (j.contains("residual")) r.residual = j["residual"].get<double>();
      if (j.contains("lambda")) r.lambda = j["lambda"].get<double>();
      if (j.contains("pruned_fraction")) r.pruned_fraction = j["pruned_fraction"].get<double>();
      if (j.contains("eta_seconds")) r.eta_seconds = j["eta_seconds"].get<double>();
      if (j.contains("seed")) r.seed = j["seed"].get<std::uint64_t>();
      if (j.contains("point")) r.point = j["point"].get<std::vector<double>>();
      return r;
    }
    case ReportFormat::Csv: {
      std::istringstream in(text);
      std::string head, row;
      if (!std::getline(in, head) || !std::getline(in, row)) {
        throw ValidationError("report: csv needs a header and one row");
      }
      std::vector<std::string> keys, values;
      std::string cell;
      std::istringstream hs(head), rs(row);
      while (std::getline(hs, cell, ',')) keys.push_back(cell);
      while (std::getline(rs, cell, ',')) values.push_back(cell);
      values.resize(keys.size());
      for (std::size_t i = 0; i < keys.size(); ++i) assign(r, keys[i], values[i]);
      return r;
    }
    case ReportFormat::Table: {
      std::istringstream in(text);
      std::string line;
      while (std::getline(in, line)) {
        const auto cut = line.find(' ');
        if (cut == std::string::npos) continue;
        const auto start = line.find_first_not_of(' ', cut);
        assign(r, line.substr(0, cut), start == std::string::npos ? "" : line.substr(start));
      }
      return r;
    }
  }
  return r;
}

Report count_report(const ProblemSpec& spec) {
  const CountProfile c = count_profile(spec);
  Report r;
  r.status = "ok";
  r.vars = c.variables;
  r.eqns = c.reported_equalities;
  return r;
}

Report search_report(const EquationSystem& system, const SearchOutcome& outcome) {
  Report r;
  r.status = to_string(outcome.status);
  r.vars = static_cast<long long>(system.num_vars());
  r.eqns = system.reported_equalities;
  r.iterations = outcome.iterations;
  r.residual = outcome.combined_value;
  r.seed = outcome.seed;
  r.point.assign(outcome.point.data(), outcome.point.data() + outcome.point.size());
  return r;
}

Report prove_report(const EquationSystem& system, const BnbOutcome& outcome) {
  Report r;
  r.status = to_string(outcome.status);
  r.vars = static_cast<long long>(system.num_vars());
  r.eqns = system.reported_equalities;
  r.regions = outcome.regions_processed;
  if (outcome.status == BnbStatus::FeasiblePoint) r.residual = outcome.residual;
  r.lambda = outcome.root_lambda;
  r.pruned_fraction = outcome.pruned_fraction;
  if (outcome.estimate) r.eta_seconds = std::max(0.0, *outcome.estimate - outcome.elapsed);
  r.point.assign(outcome.point.data(), outcome.point.data() + outcome.point.size());
  return r;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string RunManifest::to_json() const {
  ojson j;
  j["tool"] = "mub";
  j["version"] = kToolVersion;
  j["command"] = command;
  j["argv"] = argv;
  ojson cfg = ojson::object();
  for (const auto& [k, v] : config) cfg[k] = v;
  j["config"] = cfg;
  if (spec) {
    j["spec"] = {{"d", spec->d},
                 {"sizes", spec->sizes},
                 {"vector_swap", spec->vector_swap},
                 {"set_swap", spec->set_swap},
                 {"conjugation", spec->conjugation},
                 {"reduction", spec->reduction == Reduction::Full ? "full" : "none"}};
  }
  j["seeds"] = seeds;
  j["started"] = started;
  j["finished"] = finished;
  if (outcome) j["outcome"] = to_json_object(*outcome);
  return j.dump();
}

}  // namespace mub
