#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cmp/error.hpp"
#include "cmp/operators.hpp"

namespace cmp {

struct SolverOptions {
  double cg_rel_tol = 1e-10;
  double eig_rel_tol = 1e-9;
  // Inverse power iterations per eigen solve.
  int max_outer_iterations = 500;
  // Eigen solve / rearrangement alternations per minimize run.
  int max_alternations = 200;
  // Vectors carried by the inverse iteration (1 or 2). With 2 the leading pair
  // is extracted by Rayleigh-Ritz and the rate is mu_1/mu_3 instead of mu_1/mu_2.
  int block_size = 2;

  void validate() const;
};

struct EigenPair {
  double eigenvalue = 0.0;
  // Normalized so that phi^T W phi = 1; positive at the entry of largest magnitude.
  std::vector<double> vector;
  // ||A phi - mu W phi|| / (mu ||W phi||), as measured on the returned pair.
  double residual = 0.0;
  int iterations = 0;
  // Geometric-mean contraction of the residual over the last iterations.
  double rate_estimate = 0.0;
  bool gap_warning = false;
};

class EigenNonConvergence : public SolverError {
 public:
  EigenNonConvergence(const std::string& what, EigenPair best)
      : SolverError(what), best_(std::move(best)) {}
  const EigenPair& best() const { return best_; }

 private:
  EigenPair best_;
};

struct CgStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

// Jacobi-preconditioned conjugate gradients. `guess` (optional) seeds the
// iteration. Throws SolverError("CG stagnation") after 10 n iterations.
std::vector<double> solve_spd(const CsrMatrix& a, std::span<const double> b, double tol,
                              std::span<const double> guess = {}, CgStats* stats = nullptr);

inline std::vector<double> solve_spd(const StiffnessMatrix& a, std::span<const double> b,
                                     double tol, std::span<const double> guess = {},
                                     CgStats* stats = nullptr) {
  return solve_spd(a.matrix(), b, tol, guess, stats);
}

// Smallest eigenpair of A phi = mu W phi by inverse power iteration. The start
// vector defaults to all ones.
EigenPair first_eigenpair(const StiffnessMatrix& a, const WeightVector& w,
                          const SolverOptions& opts, std::span<const double> start = {});

double rayleigh_quotient(const StiffnessMatrix& a, const WeightVector& w,
                         std::span<const double> x);

}  // namespace cmp
