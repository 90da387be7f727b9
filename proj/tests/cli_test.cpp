#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mub/report.hpp"

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr discarded unless err_path is given.
Run mub_cli(const std::string& args, const std::string& err_path = "/dev/null",
            const std::string& env = "") {
  const std::string cmd = env + " " + MUB_CLI_PATH + " " + args + " 2>" + err_path;
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

std::filesystem::path scratch(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("mub_cli_test_" + name);
}

}  // namespace

TEST_CASE("counts") {
  Run r = mub_cli("counts --dim 6 --sizes 3,3,3,3 --format json");
  CHECK(r.code == 0);
  CHECK(r.out == "{\"status\":\"ok\",\"vars\":122,\"eqns\":109}\n");

  r = mub_cli("counts --dim 6 --sizes 3,3,3,3");
  CHECK(r.code == 0);
  CHECK(r.out == slurp(std::filesystem::path(MUB_GOLDEN_DIR) / "counts_d6_3333.txt"));

  r = mub_cli("counts --unreduced --dim 6 --bases 4");
  CHECK(r.code == 0);
  CHECK(r.out == slurp(std::filesystem::path(MUB_GOLDEN_DIR) / "counts_unreduced_d6_n4.txt"));
  CHECK(mub::parse_report(r.out, mub::ReportFormat::Table).vars == 360);
}

TEST_CASE("usage errors exit 1") {
  CHECK(mub_cli("counts --dim 6 --sizes 3,3 --bogus").code == 1);
  CHECK(mub_cli("").code == 1);
  CHECK(mub_cli("frobnicate").code == 1);
  CHECK(mub_cli("counts --dim 3 --sizes 4,1").code == 1);
  CHECK(mub_cli("counts --dim 3 --sizes 3,1 --format xml").code == 1);
  CHECK(mub_cli("-h").code == 0);
  CHECK(mub_cli("prove -h").out.find("--eps-infeas") != std::string::npos);
}

TEST_CASE("unsorted sizes are sorted with a warning") {
  const auto err = scratch("sort.err");
  const Run r = mub_cli("counts --dim 3 --sizes 1,2,1,1,1 --format json", err.string());
  CHECK(r.code == 0);
  CHECK(r.out == "{\"status\":\"ok\",\"vars\":18,\"eqns\":18}\n");
  CHECK(slurp(err).find("warning: sizes sorted") != std::string::npos);
  std::filesystem::remove(err);
}

TEST_CASE("build writes the system text") {
  const auto path = scratch("system.txt");
  const Run r = mub_cli("build --dim 3 --sizes 2,1,1,1,1 --out " + path.string());
  CHECK(r.code == 0);
  CHECK(r.out.empty());
  const std::string text = slurp(path);
  CHECK(text.rfind("dim 3\nsizes 2 1 1 1 1\n", 0) == 0);
  CHECK(text.find("variables 18\n") != std::string::npos);
  CHECK(mub_cli("build --dim 3 --sizes 2,1,1,1,1").out == text);
  std::filesystem::remove(path);
}

TEST_CASE("search reports and exit codes") {
  Run r = mub_cli("search --dim 2 --sizes 2,2,2 --seed 1");
  CHECK(r.code == 0);
  const mub::Report rep = mub::parse_report(r.out, mub::ReportFormat::Json);
  CHECK(rep.status == "converged");
  REQUIRE(rep.residual);
  CHECK(*rep.residual <= 1e-13);
  CHECK(rep.point.size() == 10);

  r = mub_cli("search --dim 2 --sizes 2,1,1,1 --max-iters 300 --format csv");
  CHECK(r.code == 2);
  CHECK(mub::parse_report(r.out, mub::ReportFormat::Csv).status == "iteration_limit");

  const auto trace = scratch("trace.csv");
  r = mub_cli("search --dim 2 --sizes 2,1,1,1 --max-iters 50 --trace " + trace.string());
  CHECK(r.code == 2);
  const std::string t = slurp(trace);
  CHECK(t.rfind("iteration,combined\n1,", 0) == 0);
  CHECK(std::count(t.begin(), t.end(), '\n') == 51);
  std::filesystem::remove(trace);
}

TEST_CASE("prove, manifest and progress") {
  const auto out = scratch("prove.json");
  const auto manifest = scratch("manifest.json");
  const auto err = scratch("prove.err");
  Run r = mub_cli("prove --dim 2 --sizes 2,1,1,1 --progress-interval 0.000001 --out " + out.string() +
                      " --manifest " + manifest.string(),
                  err.string());
  CHECK(r.code == 0);
  const mub::Report rep = mub::parse_report(slurp(out), mub::ReportFormat::Json);
  CHECK(rep.status == "proven_infeasible");
  REQUIRE(rep.pruned_fraction);
  CHECK(*rep.pruned_fraction == doctest::Approx(1.0).epsilon(1e-9));
  const std::string m = slurp(manifest);
  CHECK(m.find("\"command\":\"prove\"") != std::string::npos);
  CHECK(m.find("\"--queue\":\"lifo\"") != std::string::npos);
  CHECK(m.find("\"--mccormick\":\"false\"") != std::string::npos);
  CHECK(std::count(m.begin(), m.end(), '\n') == 1);
  const std::string progress = slurp(err);
  CHECK(progress.find("pruned=") != std::string::npos);
  CHECK(progress.find(" regions=") != std::string::npos);
  CHECK(progress.find(" eta=") != std::string::npos);

  r = mub_cli("prove --dim 3 --sizes 2,1,1,1,1 --max-regions 3 --format table");
  CHECK(r.code == 2);
  CHECK(r.out.rfind("status          budget\n", 0) == 0);

  for (const auto& p : {out, manifest, err}) std::filesystem::remove(p);
}

TEST_CASE("MUB_THREADS sets the default worker count") {
  const auto manifest = scratch("threads.json");
  const Run r = mub_cli("prove --dim 2 --sizes 2,1,1,1 --manifest " + manifest.string(), "/dev/null",
                        "MUB_THREADS=3");
  CHECK(r.code == 0);
  CHECK(slurp(manifest).find("\"--workers\":\"3\"") != std::string::npos);
  std::filesystem::remove(manifest);
}

TEST_CASE("verify") {
  const auto point = scratch("point.json");
  Run r = mub_cli("search --dim 2 --sizes 2,2,2 --seed 2 --out " + point.string());
  REQUIRE(r.code == 0);
  r = mub_cli("verify --dim 2 --sizes 2,2,2 --point " + point.string());
  CHECK(r.code == 0);
  CHECK(mub::parse_report(r.out, mub::ReportFormat::Json).status == "verified");

  {
    std::ofstream f(point);
    f << "0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0\n";
  }
  r = mub_cli("verify --dim 2 --sizes 2,2,2 --point " + point.string());
  CHECK(r.code == 2);
  CHECK(mub::parse_report(r.out, mub::ReportFormat::Json).status == "rejected");

  {
    std::ofstream f(point);
    f << "0.1 0.2 0.3 0.4\n";
  }
  CHECK(mub_cli("verify --dim 2 --sizes 2,2,2 --point " + point.string()).code == 1);
  CHECK(mub_cli("verify --dim 2 --sizes 2,2,2 --point /nonexistent/file").code == 1);
  std::filesystem::remove(point);
}
