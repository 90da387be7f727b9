// Command-line front end: counts, build, search, prove, verify.

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mub/branch_bound.hpp"
#include "mub/errors.hpp"
#include "mub/musb_model.hpp"
#include "mub/report.hpp"
#include "mub/stationary_search.hpp"

namespace {

using namespace mub;

constexpr int kExitVerdict = 0;
constexpr int kExitError = 1;
constexpr int kExitInconclusive = 2;

struct ProblemOptions {
  int dim = 0;
  std::vector<int> sizes;
  bool no_vector_swap = false;
  bool no_set_swap = false;
  bool no_conjugation = false;
};

struct OutputOptions {
  std::string format = "json";
  std::string out;
  std::string manifest;
};

void add_problem_options(CLI::App* cmd, ProblemOptions& p, bool sizes_required = true) {
  cmd->add_option("--dim,-d", p.dim, "Dimension d")->required()->check(CLI::Range(2, 64));
  auto* s = cmd->add_option("--sizes,-s", p.sizes, "Set sizes, comma separated")->delimiter(',');
  if (sizes_required) s->required();
  cmd->add_flag("--no-vector-swap", p.no_vector_swap, "Drop vector-swap inequalities");
  cmd->add_flag("--no-set-swap", p.no_set_swap, "Drop set-swap inequalities");
  cmd->add_flag("--no-conjugation", p.no_conjugation, "Drop the conjugation inequality");
}

void add_output_options(CLI::App* cmd, OutputOptions& o, const std::string& default_format) {
  o.format = default_format;
  cmd->add_option("--format,-f", o.format, "Report format")
      ->check(CLI::IsMember({"json", "csv", "table"}))
      ->capture_default_str();
  cmd->add_option("--out,-o", o.out, "Write the report to PATH instead of stdout");
  cmd->add_option("--manifest", o.manifest, "Write the run manifest to PATH instead of stderr");
}

ProblemSpec make_spec(const ProblemOptions& p) {
  ProblemSpec spec;
  spec.d = p.dim;
  spec.sizes = p.sizes;
  if (!std::is_sorted(spec.sizes.rbegin(), spec.sizes.rend())) {
    std::sort(spec.sizes.begin(), spec.sizes.end(), std::greater<>());
    std::cerr << "warning: sizes sorted to non-increasing order\n";
  }
  spec.vector_swap = !p.no_vector_swap;
  spec.set_swap = !p.no_set_swap;
  spec.conjugation = !p.no_conjugation;
  spec.validate();
  return spec;
}

int default_workers() {
  if (const char* env = std::getenv("MUB_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring invalid MUB_THREADS='" << env << "'\n";
  }
  return 1;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << text;
}

void emit_manifest(RunManifest& m, const OutputOptions& o) {
  m.finished = utc_timestamp();
  const std::string line = m.to_json() + "\n";
  if (o.manifest.empty()) {
    std::cerr << line;
  } else {
    emit(line, o.manifest);
  }
}

// Every option of the subcommand as (name, value) for the manifest.
std::vector<std::pair<std::string, std::string>> config_echo(const CLI::App* cmd) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const CLI::Option* opt : cmd->get_options()) {
    if (opt->get_name() == "--help") continue;
    std::string value;
    if (opt->get_expected_max() == 0) {
      value = opt->count() > 0 ? "true" : "false";
    } else if (opt->count() > 0) {
      value = CLI::detail::join(opt->results(), ",");
    } else {
      value = opt->get_default_str();
    }
    out.emplace_back(opt->get_name(), value);
  }
  return out;
}

std::vector<double> read_point(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    return nlohmann::json::parse(text).at("point").get<std::vector<double>>();
  }
  std::string cleaned = text;
  std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
  std::istringstream in(cleaned);
  std::vector<double> out;
  double v;
  while (in >> v) out.push_back(v);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feasibility prover for mutually unbiased (sub-)bases"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  // counts
  ProblemOptions counts_p;
  OutputOptions counts_o;
  bool unreduced = false;
  int bases = 0;
  auto* counts = app.add_subcommand("counts", "Variable and equation counts");
  add_problem_options(counts, counts_p, false);
  add_output_options(counts, counts_o, "table");
  counts->add_flag("--unreduced", unreduced, "Count the unreduced formulation");
  counts->add_option("--bases,-n", bases, "Number of full bases (with --unreduced)")
      ->check(CLI::Range(2, 1000));

  // build
  ProblemOptions build_p;
  std::string build_out, build_manifest;
  auto* build = app.add_subcommand("build", "Write the reduced equation system");
  add_problem_options(build, build_p);
  build->add_option("--out,-o", build_out, "Write the system to PATH instead of stdout");
  build->add_option("--manifest", build_manifest, "Write the run manifest to PATH");

  // search
  ProblemOptions search_p;
  OutputOptions search_o;
  SearchConfig scfg;
  std::string integrate_var = "aux", trace_path;
  int search_workers = default_workers();
  auto* search = app.add_subcommand("search", "Newton search on the integrated objective");
  add_problem_options(search, search_p);
  add_output_options(search, search_o, "json");
  search->add_option("--alpha", scfg.alpha, "Step scale in (0, 1]")->capture_default_str();
  search->add_option("--max-iters", scfg.max_iters, "Iteration limit")->capture_default_str();
  search->add_option("--tol", scfg.tol, "Combined-objective tolerance")->capture_default_str();
  search->add_option("--residual-tol", scfg.residual_tol, "Per-equation residual post-check")
      ->capture_default_str();
  search->add_option("--damping", scfg.damping, "Hessian diagonal damping")->capture_default_str();
  search->add_option("--seed", scfg.seed, "RNG seed")->capture_default_str();
  search->add_option("--starts", scfg.starts, "Independent starts")->capture_default_str();
  search->add_option("--integrate-var", integrate_var, "'aux' or a variable index")
      ->capture_default_str();
  search->add_option("--trace", trace_path, "Write iteration,combined CSV to PATH");
  search->add_option("--workers", search_workers, "Concurrent starts (default MUB_THREADS or 1)")
      ->default_val(search_workers);

  // prove
  ProblemOptions prove_p;
  OutputOptions prove_o;
  BnbConfig bcfg;
  std::string queue = "lifo";
  bool no_polish = false, no_products = false, no_early = false;
  bcfg.workers = default_workers();
  auto* prove = app.add_subcommand("prove", "Branch-and-bound over moment relaxations");
  add_problem_options(prove, prove_p);
  add_output_options(prove, prove_o, "json");
  prove->add_option("--level", bcfg.level, "Relaxation level")
      ->check(CLI::IsMember({1, 2}))
      ->capture_default_str();
  prove->add_option("--eps-err", bcfg.eps_err, "Monomial error threshold")->capture_default_str();
  prove->add_option("--eps-infeas", bcfg.eps_infeas, "Pruning margin on lambda")
      ->capture_default_str();
  prove->add_option("--queue", queue, "lifo or best_first")
      ->check(CLI::IsMember({"lifo", "best_first"}))
      ->capture_default_str();
  prove->add_option("--workers", bcfg.workers, "Worker threads (default MUB_THREADS or 1)")
      ->default_val(bcfg.workers);
  prove->add_option("--max-regions", bcfg.max_regions, "Region budget")->capture_default_str();
  prove->add_option("--progress-interval", bcfg.progress_interval,
                    "Seconds between progress lines (0: off)")
      ->capture_default_str();
  prove->add_option("--export-sdpa", bcfg.export_sdpa_dir, "Dump region programs to DIR");
  prove->add_option("--export-every", bcfg.export_every, "Export every Nth region")
      ->capture_default_str();
  prove->add_option("--solver-max-iters", bcfg.solver.max_iters, "Solver iteration cap")
      ->capture_default_str();
  prove->add_option("--min-width-fraction", bcfg.min_width_fraction, "Split clamp")
      ->capture_default_str();
  prove->add_flag("--mccormick", bcfg.relaxation.cross_mccormick, "Add cross-term McCormick cuts");
  prove->add_flag("--no-equality-products", no_products, "Level 2 without equality products");
  prove->add_flag("--no-polish", no_polish, "Disable local polishing of relaxation points");
  prove->add_flag("--no-early-branch", no_early, "Solve unprunable regions to optimality");

  // verify
  ProblemOptions verify_p;
  OutputOptions verify_o;
  std::string point_path;
  double verify_tol = 1e-6;
  auto* verify = app.add_subcommand("verify", "Check a candidate point against the system");
  add_problem_options(verify, verify_p);
  add_output_options(verify, verify_o, "json");
  verify->add_option("--point", point_path, "Report JSON or whitespace/comma separated values")
      ->required();
  verify->add_option("--residual-tol", verify_tol, "Acceptance threshold")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  RunManifest manifest;
  manifest.argv.assign(argv, argv + argc);
  manifest.started = utc_timestamp();

  try {
    if (*counts) {
      manifest.command = "counts";
      manifest.config = config_echo(counts);
      ProblemSpec spec;
      if (unreduced) {
        const int n = bases > 0 ? bases : static_cast<int>(counts_p.sizes.size());
        if (n < 2) throw ValidationError("--unreduced needs --bases N (N >= 2) or --sizes");
        spec.d = counts_p.dim;
        spec.sizes.assign(static_cast<std::size_t>(n), counts_p.dim);
        spec.reduction = Reduction::None;
      } else {
        if (counts_p.sizes.empty()) throw ValidationError("--sizes is required without --unreduced");
        spec = make_spec(counts_p);
      }
      manifest.spec = spec;
      const Report r = count_report(spec);
      manifest.outcome = r;
      emit(write_report(r, parse_report_format(counts_o.format)), counts_o.out);
      emit_manifest(manifest, counts_o);
      return kExitVerdict;
    }

    if (*build) {
      manifest.command = "build";
      manifest.config = config_echo(build);
      const ProblemSpec spec = make_spec(build_p);
      manifest.spec = spec;
      const EquationSystem system = build_problem(spec);
      emit(to_text(system), build_out);
      Report r;
      r.status = "ok";
      r.vars = static_cast<long long>(system.num_vars());
      r.eqns = system.reported_equalities;
      manifest.outcome = r;
      OutputOptions o;
      o.manifest = build_manifest;
      emit_manifest(manifest, o);
      return kExitVerdict;
    }

    if (*search) {
      manifest.command = "search";
      manifest.config = config_echo(search);
      const ProblemSpec spec = make_spec(search_p);
      manifest.spec = spec;
      const EquationSystem system = build_problem(spec);
      if (integrate_var != "aux") {
        scfg.integration_variable = static_cast<VarIndex>(std::stoul(integrate_var));
      }
      scfg.record_trace = !trace_path.empty();
      scfg.workers = search_workers;
      const SearchOutcome o = run_search(system, scfg);
      if (!trace_path.empty()) {
        std::ostringstream t;
        t << "iteration,combined\n";
        for (std::size_t i = 0; i < o.trace.size(); ++i) {
          t << i + 1 << "," << format_double(o.trace[i]) << "\n";
        }
        emit(t.str(), trace_path);
      }
      const Report r = search_report(system, o);
      manifest.seeds = {scfg.seed};
      manifest.outcome = r;
      std::cerr << "max_equation_residual=" << format_double(o.max_equation_residual)
                << " start=" << o.start_index << "\n";
      emit(write_report(r, parse_report_format(search_o.format)), search_o.out);
      emit_manifest(manifest, search_o);
      return o.status == SearchStatus::Converged ? kExitVerdict : kExitInconclusive;
    }

    if (*prove) {
      manifest.command = "prove";
      manifest.config = config_echo(prove);
      const ProblemSpec spec = make_spec(prove_p);
      manifest.spec = spec;
      const EquationSystem system = build_problem(spec);
      bcfg.queue = parse_queue_order(queue);
      bcfg.polish = !no_polish;
      bcfg.early_branch = !no_early;
      bcfg.relaxation.equality_products = !no_products;
      if (bcfg.progress_interval > 0) {
        bcfg.on_progress = [](const ProgressEstimate& p) { std::cerr << p.line() << "\n"; };
      }
      const BnbOutcome o = run_branch_and_bound(system, bcfg);
      if (!o.cause.empty()) std::cerr << "stopped: " << o.cause << "\n";
      const Report r = prove_report(system, o);
      manifest.outcome = r;
      emit(write_report(r, parse_report_format(prove_o.format)), prove_o.out);
      emit_manifest(manifest, prove_o);
      return o.status == BnbStatus::Budget ? kExitInconclusive : kExitVerdict;
    }

    if (*verify) {
      manifest.command = "verify";
      manifest.config = config_echo(verify);
      const ProblemSpec spec = make_spec(verify_p);
      manifest.spec = spec;
      const EquationSystem system = build_problem(spec);
      const std::vector<double> pt = read_point(point_path);
      const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(pt.data(), static_cast<Eigen::Index>(pt.size()));
      const CandidateSolution c = verify_candidate(system, x);
      // Symmetry inequalities only pick a representative; they are reported, not enforced.
      const bool ok = c.max_residual <= verify_tol;
      Report r;
      r.status = ok ? "verified" : "rejected";
      r.vars = static_cast<long long>(system.num_vars());
      r.eqns = system.reported_equalities;
      r.residual = c.max_residual;
      r.point = pt;
      std::cerr << "reconstruction_error=" << format_double(reconstruction_error(system, x))
                << " violated_inequalities=" << c.violated_inequalities.size() << "\n";
      manifest.outcome = r;
      emit(write_report(r, parse_report_format(verify_o.format)), verify_o.out);
      emit_manifest(manifest, verify_o);
      return ok ? kExitVerdict : kExitInconclusive;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
