#pragma once

// Independent checks on optimizer output: exhaustive optima on tiny grids,
// sub-level and connectivity tests, level-curve extraction, difference-based
// regularity trends and radial symmetry on disks.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "cmp/grid.hpp"
#include "cmp/optimizer.hpp"

namespace cmp {

struct DenseEigenPair {
  double eigenvalue = 0.0;
  std::vector<double> vector;  // phi^T W phi = 1
};

// Dense Cholesky factorization of a symmetric positive definite matrix,
// row-major lower triangle.
class DenseCholesky {
 public:
  explicit DenseCholesky(const CsrMatrix& a);
  std::vector<double> solve(std::span<const double> b) const;
  std::int32_t size() const { return n_; }

 private:
  std::int32_t n_;
  std::vector<double> l_;
};

// Inverse iteration with direct solves; independent of the CG path.
DenseEigenPair dense_first_eigenpair(const CsrMatrix& a, const DenseCholesky& chol,
                                     std::span<const double> weights);

struct OracleCandidate {
  std::uint32_t high_mask = 0;  // bit i set: node i holds lambda_high
  std::int32_t fractional = -1;
  double eigenvalue = 0.0;

  std::vector<std::int32_t> high_nodes() const;
};

struct OracleResult {
  DensityField density;
  DenseEigenPair eigenpair;
  LevelSetPartition partition;
  // Every candidate, sorted by (eigenvalue, lexicographic high set, fractional).
  std::vector<OracleCandidate> ranking;

  double best_eigenvalue() const { return ranking.front().eigenvalue; }
  // Candidates whose eigenvalue is within rel_tol of the best.
  std::vector<OracleCandidate> optimal_set(double rel_tol) const;
};

// Exhaustive search over high-set placements with the fractional node tried
// at every remaining position. Requires uniform node volumes and at most
// `node_cap` (at most 32) nodes; throws InputError("oracle scale exceeded").
OracleResult enumerate_optimal(const Grid& grid, const ProblemSpec& spec,
                               std::int32_t node_cap = 20);

struct SublevelReport {
  bool holds = true;
  // max_{D} phi^2 - min_{D^c} phi^2; positive values are violations.
  double margin = 0.0;
};

SublevelReport sublevel_check(std::span<const double> phi, const LevelSetPartition& partition);

// Components of the node set under axis-neighbor (2d) connectivity.
int count_components(std::span<const std::int32_t> nodes, const Grid& grid);

struct Polyline {
  std::vector<std::array<double, 2>> points;
  bool closed = false;
};

struct ContourSet {
  std::vector<Polyline> curves;
  // Components of {phi > c}.
  int high_components = 0;

  int closed_curves() const;
};

// Marching squares over the lattice with zero Dirichlet values outside the
// grid. Saddle cells are resolved by the cell-center average. Planar only.
ContourSet extract_contour(std::span<const double> phi, double level, const Grid& grid);

// sup over nodes and axes of |forward difference| (order 1) or |pure second
// difference| (order 2), with zero values off the grid.
double sup_pure_difference(const Grid& grid, std::span<const double> values, int order);

struct RegularityReport {
  int order = 2;
  std::vector<double> spacings;
  std::vector<double> sups;
  std::vector<double> ratios;  // sups[k+1] / sups[k]

  bool bounded(double limit = 1.5) const;
};

struct FieldLevel {
  const Grid* grid;
  std::vector<double> values;
};

RegularityReport regularity_from_fields(std::span<const FieldLevel> levels, int order);

// Solve the composite problem at h, h/2, ... (`levels` grids) from uniform
// starts and track second differences of the L2-normalized eigenfunction.
// spec.mass refers to the base grid; finer levels keep the same fraction of
// their discrete volume.
RegularityReport regularity_trend(const GridSpec& base, const ProblemSpec& spec, int levels,
                                  const SolverOptions& opts,
                                  std::vector<Solution>* solutions = nullptr);

// Fraction of nodes whose membership in `set` disagrees with the majority in
// their radius bin (bin width h). Disk grids only.
double radial_deviation(std::span<const std::int32_t> set, const Grid& grid);

}  // namespace cmp
