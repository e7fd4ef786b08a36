#pragma once

// Line-based `key = value` run configuration.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cmp/eigensolver.hpp"
#include "cmp/grid.hpp"
#include "cmp/optimizer.hpp"

namespace cmp {

enum class Subcommand { solve, oracle, sweep, check, plate };

std::string to_string(Subcommand s);
Subcommand parse_subcommand(std::string_view name);

struct ExportToggles {
  bool fields = true;
  bool trace = true;
  bool contours = true;
  bool images = true;
  bool grid = false;
  bool matrix = false;
};

struct RunConfig {
  Subcommand subcommand = Subcommand::solve;

  std::string shape;
  int dimension = 2;
  double h = 0.0;
  std::vector<Interval> box;  // empty: derived from the shape
  std::vector<double> center;
  double radius = 1.0;
  double r_in = 0.5;
  double r_out = 1.0;
  double lobe = 1.0;
  double neck_length = 0.5;
  double neck_width = 0.125;

  std::string background = "flat";  // flat | bump | constant
  double background_amplitude = 0.3;
  double background_width = 0.25;

  std::optional<double> sup_bound;  // A
  double lambda_low = 0.0;
  double lambda_high = 0.0;
  double mass = 0.0;
  int n = 0;
  int order = 2;
  bool order_explicit = false;

  SolverOptions solver;
  std::string init = "uniform";  // uniform | random
  std::vector<std::uint64_t> seeds;
  std::vector<double> sweep_sup_bounds;
  int check_levels = 3;
  int threads = 1;
  std::filesystem::path out_dir = ".";
  ExportToggles exports;

  GridSpec grid_spec() const;
  ProblemSpec problem() const;
  ProblemSpec problem_for_bound(double sup_bound) const;

  // Validated configuration echoed as `key = value` lines in a fixed order.
  std::string canonical_text() const;
  // FNV-1a 64 of canonical_text(), hex.
  std::string hash() const;
};

// Command-line values that take precedence over the file.
struct ConfigOverrides {
  std::optional<Subcommand> subcommand;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::filesystem::path> out_dir;
};

// Parses and validates; throws InputError naming the offending key.
RunConfig parse_config(std::string_view text, const ConfigOverrides& overrides = {});
RunConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

std::vector<std::uint64_t> parse_seed_list(std::string_view text);

}  // namespace cmp
