#pragma once

// Alternating minimization of the first eigenvalue over box-constrained
// densities of fixed mass: solve for the eigenpair at the current density,
// then rearrange the density onto the super-level set of phi^2 (bathtub
// step), until the high-density set stops moving.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cmp/eigensolver.hpp"
#include "cmp/grid.hpp"
#include "cmp/operators.hpp"

namespace cmp {

struct ProblemSpec {
  double lambda_low = 1.0;
  double lambda_high = 1.0;
  double mass = 1.0;
  int order = 2;
  // Exponent relating density and conformal factor: rho = e^{n u}.
  int n = 2;

  static ProblemSpec from_conformal(double sup_bound, int n, double mass, int order = 2);
  static ProblemSpec from_bounds(double lambda_low, double lambda_high, double mass,
                                 int order = 2, int n = 2);

  // Box ordering and lambda_low |Omega| <= M <= lambda_high |Omega|.
  void validate(double volume) const;
};

// (e^{-nA}, e^{nA}); throws InputError for A < 0.
std::pair<double, double> conformal_bounds(double sup_bound, int n);

// Background volume of the high-density set: (M - lambda vol) / (Lambda - lambda).
double target_high_mass(const ProblemSpec& spec, double volume);

struct DensityField {
  std::vector<double> rho;
  double mass = 0.0;

  // u_i = log(rho_i) / n
  std::vector<double> conformal_factor(int n) const;
};

// sum_i rho_i e^{2 w_i} h^d, compensated.
double density_mass(const Grid& grid, std::span<const double> rho);

struct LevelSetPartition {
  std::vector<std::int32_t> low;   // D, ascending
  std::vector<std::int32_t> high;  // D^c, ascending
  std::int32_t fractional = -1;
  // |phi| at the fractional node, or at the last node filled with the high value.
  double threshold = 0.0;

  bool has_fractional() const { return fractional >= 0; }
  // Compares the node sets only.
  bool same_sets(const LevelSetPartition& other) const {
    return low == other.low && high == other.high && fractional == other.fractional;
  }
};

// Partition read off a density; nullopt when more than one node is strictly
// between the bounds.
std::optional<LevelSetPartition> classify_density(const ProblemSpec& spec,
                                                  std::span<const double> rho);

std::size_t symmetric_difference(std::span<const std::int32_t> a, std::span<const std::int32_t> b);

struct Rearrangement {
  DensityField density;
  LevelSetPartition partition;
};

// Fill the high value in order of descending phi^2 (ties: lower node index
// first) until the high-set budget is spent; the node where the budget runs
// out mid-cell takes the one intermediate value that makes the mass exact.
Rearrangement bathtub_rearrange(std::span<const double> phi, const Grid& grid,
                                const ProblemSpec& spec);

// Same greedy fill along an explicit node priority order.
Rearrangement fill_in_order(std::span<const std::int32_t> order, const Grid& grid,
                            const ProblemSpec& spec);

enum class TerminalStatus { converged, cycling, max_iter };

std::string to_string(TerminalStatus status);

struct TraceRecord {
  int iteration = 0;
  double eigenvalue = 0.0;
  double threshold = 0.0;
  std::size_t set_change = 0;
  double residual = 0.0;
  int inner_iterations = 0;
};

struct OptimizationTrace {
  std::vector<TraceRecord> records;
  TerminalStatus status = TerminalStatus::max_iter;

  // mu_{k+1} <= mu_k + slack |mu_k| for every step.
  bool monotone(double slack = 1e-9) const;
};

struct InitialDensity {
  enum class Kind { uniform, seeded_random, given };

  Kind kind = Kind::uniform;
  std::uint64_t seed = 0;
  std::vector<double> rho;

  static InitialDensity uniform() { return {}; }
  static InitialDensity random(std::uint64_t seed) { return {Kind::seeded_random, seed, {}}; }
  static InitialDensity given(std::vector<double> rho) { return {Kind::given, 0, std::move(rho)}; }
};

// Random two-valued feasible density: the greedy fill along a seeded
// permutation of the nodes.
Rearrangement random_density(const Grid& grid, const ProblemSpec& spec, std::uint64_t seed);

struct Solution {
  DensityField density;
  EigenPair eigenpair;
  LevelSetPartition partition;
  OptimizationTrace trace;
};

Solution minimize(const Grid& grid, const ProblemSpec& spec, const InitialDensity& init,
                  const SolverOptions& opts);

// Variant reusing an assembled stiffness matrix.
Solution minimize(const Grid& grid, const StiffnessMatrix& stiffness, const ProblemSpec& spec,
                  const InitialDensity& init, const SolverOptions& opts);

struct SolutionClass {
  std::size_t representative = 0;  // index into MultiStartResult::runs
  std::vector<std::size_t> members;
};

struct MultiStartResult {
  std::vector<std::uint64_t> seeds;
  std::vector<Solution> runs;  // runs[i] started from seeds[i]
  std::vector<SolutionClass> classes;

  std::size_t best_run() const;
};

// Two solutions are the same class when their eigenvalues agree to 1e-8
// relative and their low sets differ in at most 1% of the nodes.
bool same_solution_class(const Solution& a, const Solution& b, std::int32_t node_count);

// Independent seeded-random runs. Runs may execute on up to `threads` workers;
// results are ordered by seed position regardless.
MultiStartResult multi_start(const Grid& grid, const ProblemSpec& spec,
                             std::span<const std::uint64_t> seeds, const SolverOptions& opts,
                             int threads = 1);

}  // namespace cmp
