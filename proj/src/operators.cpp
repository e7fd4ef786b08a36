#include "cmp/operators.hpp"

#include <cmath>
#include <map>
#include <string>

#include "cmp/error.hpp"

namespace cmp {
namespace {

std::vector<Triplet> laplacian_triplets(const Grid& grid) {
  const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
  const int dirs = grid.directions();
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(grid.size()) * (dirs + 1));
  for (std::int32_t i = 0; i < grid.size(); ++i) {
    t.push_back({i, i, dirs * inv_h2});
    for (int dir = 0; dir < dirs; ++dir) {
      const std::int32_t j = grid.neighbor(i, dir);
      if (j != Grid::kAbsent) t.push_back({i, j, -inv_h2});
    }
  }
  return t;
}

// Exterior lattice points adjacent to the grid, with the linear form
// h^2 Delta phi(y) = sum_j c_j phi_j. Along each axis through y the pair
// (y - e, y + e) contributes phi_a + phi_b when both are nodes, 2 phi_a when
// only a is a node (its mirror image is a ghost) and nothing otherwise.
std::map<std::vector<std::int32_t>, std::map<std::int32_t, double>> exterior_forms(
    const Grid& grid) {
  const int d = grid.dimension();
  std::map<std::vector<std::int32_t>, std::map<std::int32_t, double>> forms;
  std::vector<std::int32_t> y(static_cast<std::size_t>(d));
  std::vector<std::int32_t> probe(static_cast<std::size_t>(d));
  for (std::int32_t i = 0; i < grid.size(); ++i) {
    for (int dir = 0; dir < grid.directions(); ++dir) {
      if (grid.neighbor(i, dir) != Grid::kAbsent) continue;
      const auto c = grid.coords(i);
      std::copy(c.begin(), c.end(), y.begin());
      y[dir / 2] += (dir % 2 == 0) ? -1 : 1;
      if (forms.contains(y)) continue;
      auto& form = forms[y];
      for (int k = 0; k < d; ++k) {
        std::copy(y.begin(), y.end(), probe.begin());
        probe[k] = y[k] - 1;
        const std::int32_t a = grid.index_at(probe);
        probe[k] = y[k] + 1;
        const std::int32_t b = grid.index_at(probe);
        if (a != Grid::kAbsent && b != Grid::kAbsent) {
          form[a] += 1.0;
          form[b] += 1.0;
        } else if (a != Grid::kAbsent) {
          form[a] += 2.0;
        } else if (b != Grid::kAbsent) {
          form[b] += 2.0;
        }
      }
    }
  }
  return forms;
}

CsrMatrix bilaplacian(const Grid& grid) {
  const CsrMatrix lap = CsrMatrix::from_triplets(grid.size(), laplacian_triplets(grid));
  const auto rp = lap.row_ptr();
  const auto ci = lap.col_index();
  const auto v = lap.values();

  // L^2 over interior nodes; L is symmetric so (L^2)_ij = sum_k L_ik L_kj.
  std::vector<Triplet> t;
  for (std::int32_t i = 0; i < grid.size(); ++i)
    for (std::int32_t a = rp[i]; a < rp[i + 1]; ++a) {
      const std::int32_t k = ci[a];
      for (std::int32_t b = rp[k]; b < rp[k + 1]; ++b) t.push_back({i, ci[b], v[a] * v[b]});
    }

  const double h2 = grid.spacing() * grid.spacing();
  const double scale = 0.5 / (h2 * h2);
  for (const auto& [point, form] : exterior_forms(grid))
    for (const auto& [j, cj] : form)
      for (const auto& [k, ck] : form) t.push_back({j, k, scale * cj * ck});
  return CsrMatrix::from_triplets(grid.size(), std::move(t));
}

}  // namespace

StiffnessMatrix assemble_stiffness(const Grid& grid, OperatorSpec spec) {
  if (spec.order == 2) return {CsrMatrix::from_triplets(grid.size(), laplacian_triplets(grid)), 2};
  if (spec.order == 4) {
    if (!grid.flat()) throw InputError("flat background required for GJMS case");
    return {bilaplacian(grid), 4};
  }
  throw InputError("operator order must be 2 or 4, got " + std::to_string(spec.order));
}

WeightVector assemble_weight(const Grid& grid, std::span<const double> rho) {
  if (static_cast<std::int32_t>(rho.size()) != grid.size())
    throw InputError("density size does not match grid");
  WeightVector w;
  w.values.resize(rho.size());
  for (std::int32_t i = 0; i < grid.size(); ++i) {
    if (!(rho[i] > 0.0) || !std::isfinite(rho[i]))
      throw InputError("density must be strictly positive at node " + std::to_string(i));
    w.values[i] = rho[i] * grid.background_weight(i);
  }
  return w;
}

}  // namespace cmp
