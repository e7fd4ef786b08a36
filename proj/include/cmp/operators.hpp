#pragma once

// Stiffness and weight operators for the generalized problem A phi = mu W phi.
// Node volumes h^d cancel in the Rayleigh quotient and appear on neither side.

#include <span>
#include <vector>

#include "cmp/grid.hpp"
#include "cmp/sparse.hpp"

namespace cmp {

struct OperatorSpec {
  // 2: Dirichlet Laplacian. 4: clamped bilaplacian (value and normal derivative zero).
  int order = 2;
};

class StiffnessMatrix {
 public:
  StiffnessMatrix(CsrMatrix matrix, int order) : matrix_(std::move(matrix)), order_(order) {}

  const CsrMatrix& matrix() const { return matrix_; }
  int order() const { return order_; }
  std::int32_t size() const { return matrix_.size(); }
  void multiply(std::span<const double> x, std::span<double> y) const { matrix_.multiply(x, y); }

  friend bool operator==(const StiffnessMatrix&, const StiffnessMatrix&) = default;

 private:
  CsrMatrix matrix_;
  int order_;
};

// Diagonal of W: sigma_i = rho_i e^{2 w_i}.
struct WeightVector {
  std::vector<double> values;
};

// Order 2 is the (2d+1)-point stencil with Dirichlet rows eliminated. Order 4
// squares the Dirichlet Laplacian and adds, for every exterior lattice point y
// next to the grid, the term (1/2)(Delta phi(y))^2 with Delta phi(y) evaluated
// from ghost values mirrored through y. On boxes this reproduces the 13-point
// stencil with reflected ghosts exactly, and it is symmetric positive definite
// on every mask.
StiffnessMatrix assemble_stiffness(const Grid& grid, OperatorSpec spec);

WeightVector assemble_weight(const Grid& grid, std::span<const double> rho);

}  // namespace cmp
