#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cmp/config.hpp"
#include "cmp/run.hpp"
#include "doctest.h"

using namespace cmp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("cmp_test_run_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string value_of(const std::string& text, const std::string& key) {
  const auto at = text.find(key + " = ");
  if (at == std::string::npos) return {};
  const auto start = at + key.size() + 3;
  return text.substr(start, text.find('\n', start) - start);
}

int run_text(const std::string& text, const fs::path& out, std::string* log = nullptr) {
  ConfigOverrides o;
  o.out_dir = out;
  std::ostringstream os;
  const int code = run(parse_config(text, o), os);
  if (log) *log = os.str();
  return code;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CMP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("solve on the unit square with A = 0") {
  auto out = scratch("solve");
  const double vol = 63.0 * 63.0 / (64.0 * 64.0);
  std::ostringstream text;
  text.precision(17);
  text << "shape = rectangle\nh = 0.015625\nA = 0\nM = " << vol << "\n";
  REQUIRE(run_text(text.str(), out) == kExitOk);
  const std::string summary = slurp(out / "summary.txt");
  CHECK(value_of(summary, "alternations") == "1");
  CHECK(std::abs(std::stod(value_of(summary, "eigenvalue")) - 2 * M_PI * M_PI) <=
        0.01 * 2 * M_PI * M_PI);
  CHECK(slurp(out / "status.txt") == "complete\n");
  for (const char* f : {"density.csv", "eigenfunction.csv", "partition.txt", "trace.jsonl",
                        "contours.csv", "phi.pgm", "low_set.pgm", "config.txt"}) {
    CAPTURE(f);
    CHECK(fs::exists(out / f));
  }
  // Self-describing headers.
  const std::string density = slurp(out / "density.csv");
  CHECK(density.rfind("# config_hash", 0) == 0);
  CHECK(density.find("lambda_low") != std::string::npos);
  CHECK(slurp(out / "phi.pgm").find("P5") == 0);
}

TEST_CASE("artifacts are byte-reproducible") {
  const std::string text =
      "subcommand = sweep\nshape = disk\nh = 0.125\nA = 0.5\nM = 2.5\nseeds = 3,1,2\n";
  auto a = scratch("repro_a"), b = scratch("repro_b"), c = scratch("repro_c");
  REQUIRE(run_text(text, a) == kExitOk);
  REQUIRE(run_text(text, b) == kExitOk);
  REQUIRE(run_text(text + "threads = 3\n", c) == kExitOk);
  CHECK(slurp(a / "sweep.csv") == slurp(b / "sweep.csv"));
  // Thread count changes the config hash line only.
  auto strip_headers = [](const std::string& s) {
    std::istringstream in(s);
    std::string line, out;
    while (std::getline(in, line))
      if (line.rfind('#', 0) != 0) out += line + '\n';
    return out;
  };
  CHECK(strip_headers(slurp(a / "sweep.csv")) == strip_headers(slurp(c / "sweep.csv")));

  const std::string solve = "shape = disk\nh = 0.1\nA = 0.5\nM = 2.5\ninit = random\nseeds = 4\n";
  auto d = scratch("repro_d"), e = scratch("repro_e");
  REQUIRE(run_text(solve, d) == kExitOk);
  REQUIRE(run_text(solve, e) == kExitOk);
  for (const char* f : {"density.csv", "eigenfunction.csv", "contours.csv", "phi.pgm",
                        "low_set.pgm", "trace.jsonl", "partition.txt"}) {
    CAPTURE(f);
    CHECK(slurp(d / f) == slurp(e / f));
  }
}

TEST_CASE("sweep rows follow the seed list") {
  auto out = scratch("sweep");
  REQUIRE(run_text("subcommand = sweep\nshape = rectangle\nh = 0.125\nA = 0.5\nM = 0.7\n"
                   "seeds = 5,2,9\nsweep_A = 0.3,0.5\n",
                   out) == kExitOk);
  std::istringstream in(slurp(out / "sweep.csv"));
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#' && line.rfind("seed,", 0) != 0) rows.push_back(line);
  REQUIRE(rows.size() == 6);
  auto seed_and_bound = [](const std::string& row) {
    const auto comma = row.find(',');
    return std::make_pair(std::stoi(row.substr(0, comma)), std::stod(row.substr(comma + 1)));
  };
  CHECK(seed_and_bound(rows[0]) == std::make_pair(5, 0.3));
  CHECK(seed_and_bound(rows[2]) == std::make_pair(9, 0.3));
  CHECK(seed_and_bound(rows[3]) == std::make_pair(5, 0.5));
}

TEST_CASE("oracle subcommand reports MATCH on a 3x3 grid") {
  auto out = scratch("oracle");
  REQUIRE(run_text("subcommand = oracle\nshape = rectangle\nbox = 0,4,0,4\nh = 1\n"
                   "lambda_low = 1\nlambda_high = 2\nM = 12\n",
                   out) == kExitOk);
  const std::string rep = slurp(out / "oracle_report.txt");
  CHECK(value_of(rep, "verdict") == "MATCH");
  CHECK(value_of(rep, "candidates") == "84");
}

TEST_CASE("check and plate subcommands") {
  auto out = scratch("check");
  REQUIRE(run_text("subcommand = check\nshape = rectangle\nh = 0.0625\nbackground = bump\n"
                   "A = 0.5\nM = 0.6\nseeds = 1,2\n",
                   out) == kExitOk);
  const std::string rep = slurp(out / "check_report.txt");
  CHECK(rep.find("FAIL") == std::string::npos);
  CHECK(rep.find("PASS") != std::string::npos);

  auto plate = scratch("plate");
  REQUIRE(run_text("subcommand = plate\nshape = rectangle\nh = 0.0625\nA = 0.5\nM = 0.6\n",
                   plate) == kExitOk);
  CHECK(value_of(slurp(plate / "summary.txt"), "monotone") == "true");
  CHECK(fs::exists(plate / "partition.txt"));
}

TEST_CASE("solver failure writes an incomplete status") {
  auto out = scratch("fail");
  std::string log;
  CHECK(run_text("shape = disk\nh = 0.1\nA = 0.5\nM = 2.5\nmax_outer_iterations = 1\n", out,
                 &log) == kExitSolverError);
  CHECK(slurp(out / "status.txt").rfind("incomplete:", 0) == 0);
  CHECK(log.find("solver error") != std::string::npos);
}

TEST_CASE("command-line exit codes") {
  auto dir = scratch("cli");
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  };
  const auto good = write("good.cfg", "shape = disk\nh = 0.1\nA = 0.5\nM = 2.5\n");
  const auto bad = write("bad.cfg", "shape = disk\nh = 0.1\nA = 0.5\nM = 200\n");
  const auto slow = write("slow.cfg",
                          "shape = disk\nh = 0.1\nA = 0.5\nM = 2.5\nmax_outer_iterations = 1\n");
  const std::string out = (dir / "out").string();
  CHECK(run_cli("solve --config " + good + " --out " + out) == 0);
  CHECK(fs::exists(dir / "out" / "summary.txt"));
  CHECK(run_cli("solve --config " + bad + " --out " + out) == 1);
  CHECK(run_cli("solve --config " + slow + " --out " + out) == 2);
  CHECK(run_cli("solve --config " + (dir / "missing.cfg").string()) == 1);
  CHECK(run_cli("sweep --config " + good + " --out " + out + " --seed-list 1,2") == 0);
  CHECK(run_cli("bake --config " + good) != 0);
}
