#include "cmp/verify.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <limits>
#include <unordered_map>

#include "cmp/error.hpp"

namespace cmp {

DenseCholesky::DenseCholesky(const CsrMatrix& a) : n_(a.size()) {
  const std::size_t n = static_cast<std::size_t>(n_);
  l_.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      l_[i * n + j] = a.entry(static_cast<std::int32_t>(i), static_cast<std::int32_t>(j));
  for (std::size_t j = 0; j < n; ++j) {
    double d = l_[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= l_[j * n + k] * l_[j * n + k];
    if (!(d > 0.0)) throw SolverError("dense Cholesky: matrix is not positive definite");
    const double ljj = std::sqrt(d);
    l_[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = l_[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= l_[i * n + k] * l_[j * n + k];
      l_[i * n + j] = s / ljj;
    }
  }
}

std::vector<double> DenseCholesky::solve(std::span<const double> b) const {
  const std::size_t n = static_cast<std::size_t>(n_);
  std::vector<double> y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) y[i] -= l_[i * n + k] * y[k];
    y[i] /= l_[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) y[i] -= l_[k * n + i] * y[k];
    y[i] /= l_[i * n + i];
  }
  return y;
}

namespace {

double plain_wdot(std::span<const double> x, std::span<const double> w,
                  std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * w[i] * y[i];
  return s;
}

double plain_quadratic(const CsrMatrix& a, std::span<const double> x) {
  const auto rp = a.row_ptr();
  const auto ci = a.col_index();
  const auto v = a.values();
  double s = 0.0;
  for (std::int32_t r = 0; r < a.size(); ++r) {
    double row = 0.0;
    for (std::int32_t k = rp[r]; k < rp[r + 1]; ++k) row += v[k] * x[ci[k]];
    s += x[r] * row;
  }
  return s;
}

}  // namespace

DenseEigenPair dense_first_eigenpair(const CsrMatrix& a, const DenseCholesky& chol,
                                     std::span<const double> weights) {
  const std::size_t n = static_cast<std::size_t>(a.size());
  std::vector<double> x(n, 1.0);
  std::vector<double> wx(n);
  double mu = std::numeric_limits<double>::infinity();
  int quiet = 0;
  for (int it = 0; it < 20000; ++it) {
    for (std::size_t i = 0; i < n; ++i) wx[i] = weights[i] * x[i];
    x = chol.solve(wx);
    const double s = std::sqrt(plain_wdot(x, weights, x));
    for (double& v : x) v /= s;
    const double next = plain_quadratic(a, x);
    quiet = std::abs(next - mu) <= 1e-15 * std::abs(next) ? quiet + 1 : 0;
    mu = next;
    if (quiet >= 3) break;
  }
  std::size_t imax = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(x[i]) > std::abs(x[imax])) imax = i;
  if (x[imax] < 0.0)
    for (double& v : x) v = -v;
  return {mu, std::move(x)};
}

std::vector<std::int32_t> OracleCandidate::high_nodes() const {
  std::vector<std::int32_t> out;
  for (std::uint32_t m = high_mask; m != 0; m &= m - 1)
    out.push_back(static_cast<std::int32_t>(std::countr_zero(m)));
  return out;
}

std::vector<OracleCandidate> OracleResult::optimal_set(double rel_tol) const {
  std::vector<OracleCandidate> out;
  const double best = best_eigenvalue();
  for (const auto& c : ranking)
    if (c.eigenvalue <= best + rel_tol * std::abs(best)) out.push_back(c);
  return out;
}

namespace {

// Lexicographic order of the sorted index lists of two equal-size sets: the
// set owning the lowest differing element comes first.
bool lex_less(std::uint32_t a, std::uint32_t b) {
  const std::uint32_t diff = a ^ b;
  if (diff == 0) return false;
  return (a & (diff & (~diff + 1))) != 0;
}

}  // namespace

OracleResult enumerate_optimal(const Grid& grid, const ProblemSpec& spec, std::int32_t node_cap) {
  const std::int32_t n = grid.size();
  if (n > node_cap || n > 32)
    throw InputError("oracle scale exceeded: " + std::to_string(n) + " nodes, cap " +
                     std::to_string(std::min(node_cap, 32)));
  const double v = grid.volume_weight(0);
  for (std::int32_t i = 1; i < n; ++i)
    if (grid.volume_weight(i) != v) throw InputError("oracle requires uniform node volumes");

  const double volume = domain_volume(grid);
  const double high_volume = target_high_mass(spec, volume);
  const bool two_valued = spec.lambda_high > spec.lambda_low;
  int k = two_valued ? static_cast<int>(std::floor(high_volume / v * (1.0 + 1e-12))) : 0;
  k = std::min(k, static_cast<int>(n));
  const double remainder = two_valued ? high_volume - k * v : 0.0;
  const bool fractional = remainder > 1e-12 * v && k < n;
  const double frac_value =
      spec.lambda_low + (spec.lambda_high - spec.lambda_low) * (remainder / v);

  const StiffnessMatrix a = assemble_stiffness(grid, OperatorSpec{spec.order});
  const DenseCholesky chol(a.matrix());

  auto density_of = [&](std::uint32_t mask, std::int32_t frac) {
    std::vector<double> rho(static_cast<std::size_t>(n), spec.lambda_low);
    for (std::int32_t i = 0; i < n; ++i)
      if (mask >> i & 1u) rho[i] = spec.lambda_high;
    if (frac >= 0) rho[frac] = frac_value;
    return rho;
  };
  auto weights_of = [&](const std::vector<double>& rho) {
    std::vector<double> w(rho.size());
    for (std::int32_t i = 0; i < n; ++i) w[i] = rho[i] * grid.background_weight(i);
    return w;
  };

  OracleResult out;
  // Gosper's hack walks all k-subsets of n bits in increasing numeric order.
  const std::uint64_t limit = std::uint64_t{1} << n;
  std::uint64_t mask = k == 0 ? 0 : (std::uint64_t{1} << k) - 1;
  while (mask < limit) {
    const auto m32 = static_cast<std::uint32_t>(mask);
    if (fractional) {
      for (std::int32_t f = 0; f < n; ++f) {
        if (m32 >> f & 1u) continue;
        const auto w = weights_of(density_of(m32, f));
        out.ranking.push_back({m32, f, dense_first_eigenpair(a.matrix(), chol, w).eigenvalue});
      }
    } else {
      const auto w = weights_of(density_of(m32, -1));
      out.ranking.push_back({m32, -1, dense_first_eigenpair(a.matrix(), chol, w).eigenvalue});
    }
    if (mask == 0) break;
    const std::uint64_t low = mask & (~mask + 1);
    const std::uint64_t ripple = mask + low;
    mask = ripple | (((mask ^ ripple) >> 2) / low);
  }

  std::stable_sort(out.ranking.begin(), out.ranking.end(),
                   [](const OracleCandidate& x, const OracleCandidate& y) {
                     if (x.eigenvalue != y.eigenvalue) return x.eigenvalue < y.eigenvalue;
                     if (x.high_mask != y.high_mask) return lex_less(x.high_mask, y.high_mask);
                     return x.fractional < y.fractional;
                   });

  const OracleCandidate& best = out.ranking.front();
  out.density.rho = density_of(best.high_mask, best.fractional);
  out.density.mass = density_mass(grid, out.density.rho);
  out.eigenpair = dense_first_eigenpair(a.matrix(), chol, weights_of(out.density.rho));
  LevelSetPartition& p = out.partition;
  p.fractional = best.fractional;
  double min_high = std::numeric_limits<double>::infinity();
  for (std::int32_t i = 0; i < n; ++i) {
    if (i == best.fractional) continue;
    if (best.high_mask >> i & 1u) {
      p.high.push_back(i);
      min_high = std::min(min_high, std::abs(out.eigenpair.vector[i]));
    } else {
      p.low.push_back(i);
    }
  }
  p.threshold = p.has_fractional() ? std::abs(out.eigenpair.vector[p.fractional])
                : p.high.empty()   ? 0.0
                                   : min_high;
  return out;
}

SublevelReport sublevel_check(std::span<const double> phi, const LevelSetPartition& partition) {
  if (partition.low.empty() || partition.high.empty())
    return {true, -std::numeric_limits<double>::infinity()};
  double max_low = 0.0;
  for (const std::int32_t i : partition.low) max_low = std::max(max_low, phi[i] * phi[i]);
  double min_high = std::numeric_limits<double>::infinity();
  for (const std::int32_t j : partition.high) min_high = std::min(min_high, phi[j] * phi[j]);
  const double margin = max_low - min_high;
  return {margin <= 1e-14, margin};
}

int count_components(std::span<const std::int32_t> nodes, const Grid& grid) {
  std::vector<std::uint8_t> member(static_cast<std::size_t>(grid.size()), 0);
  for (const std::int32_t i : nodes) member[i] = 1;
  std::deque<std::int32_t> queue;
  int parts = 0;
  for (const std::int32_t s : nodes) {
    if (member[s] != 1) continue;
    ++parts;
    member[s] = 2;
    queue.push_back(s);
    while (!queue.empty()) {
      const std::int32_t i = queue.front();
      queue.pop_front();
      for (int dir = 0; dir < grid.directions(); ++dir) {
        const std::int32_t j = grid.neighbor(i, dir);
        if (j != Grid::kAbsent && member[j] == 1) {
          member[j] = 2;
          queue.push_back(j);
        }
      }
    }
  }
  return parts;
}

int ContourSet::closed_curves() const {
  return static_cast<int>(
      std::count_if(curves.begin(), curves.end(), [](const Polyline& p) { return p.closed; }));
}

ContourSet extract_contour(std::span<const double> phi, double level, const Grid& grid) {
  if (grid.dimension() != 2) throw InputError("extract_contour requires a planar grid");
  const std::int32_t nx = grid.lattice_points(0);
  const std::int32_t ny = grid.lattice_points(1);
  const double h = grid.spacing();
  const double x0 = grid.spec().box[0].lo;
  const double y0 = grid.spec().box[1].lo;

  std::vector<double> value(static_cast<std::size_t>(nx) * ny, 0.0);
  for (std::int32_t i = 0; i < grid.size(); ++i) {
    const auto c = grid.coords(i);
    value[static_cast<std::size_t>(c[0]) * ny + c[1]] = phi[i];
  }
  auto at = [&](std::int32_t i, std::int32_t j) {
    return value[static_cast<std::size_t>(i) * ny + j];
  };
  // Edge ids: 2*(i*ny+j) for (i,j)-(i+1,j), 2*(i*ny+j)+1 for (i,j)-(i,j+1).
  auto hedge = [&](std::int32_t i, std::int32_t j) { return 2 * (std::int64_t{i} * ny + j); };
  auto vedge = [&](std::int32_t i, std::int32_t j) { return 2 * (std::int64_t{i} * ny + j) + 1; };
  auto point_on = [&](std::int64_t e) {
    const std::int64_t base = e / 2;
    const auto i = static_cast<std::int32_t>(base / ny);
    const auto j = static_cast<std::int32_t>(base % ny);
    const bool horizontal = e % 2 == 0;
    const double va = at(i, j);
    const double vb = horizontal ? at(i + 1, j) : at(i, j + 1);
    const double t = (level - va) / (vb - va);
    return horizontal ? std::array<double, 2>{x0 + (i + t) * h, y0 + j * h}
                      : std::array<double, 2>{x0 + i * h, y0 + (j + t) * h};
  };

  std::unordered_map<std::int64_t, std::vector<std::int64_t>> links;
  std::vector<std::int64_t> ordered_edges;
  auto connect = [&](std::int64_t a, std::int64_t b) {
    for (const std::int64_t e : {a, b})
      if (!links.contains(e)) ordered_edges.push_back(e);
    links[a].push_back(b);
    links[b].push_back(a);
  };

  for (std::int32_t i = 0; i + 1 < nx; ++i) {
    for (std::int32_t j = 0; j + 1 < ny; ++j) {
      const bool c00 = at(i, j) >= level;
      const bool c10 = at(i + 1, j) >= level;
      const bool c11 = at(i + 1, j + 1) >= level;
      const bool c01 = at(i, j + 1) >= level;
      const std::int64_t bottom = hedge(i, j), right = vedge(i + 1, j);
      const std::int64_t top = hedge(i, j + 1), left = vedge(i, j);
      std::vector<std::int64_t> cut;
      if (c00 != c10) cut.push_back(bottom);
      if (c10 != c11) cut.push_back(right);
      if (c11 != c01) cut.push_back(top);
      if (c01 != c00) cut.push_back(left);
      if (cut.size() == 2) {
        connect(cut[0], cut[1]);
      } else if (cut.size() == 4) {
        const double center = 0.25 * (at(i, j) + at(i + 1, j) + at(i + 1, j + 1) + at(i, j + 1));
        // Isolate the corners on the side opposite to the center value.
        const bool isolate_above = center < level;
        if (c00 == isolate_above) connect(bottom, left);
        if (c10 == isolate_above) connect(bottom, right);
        if (c11 == isolate_above) connect(right, top);
        if (c01 == isolate_above) connect(top, left);
      }
    }
  }

  ContourSet out;
  std::unordered_map<std::int64_t, bool> used;
  auto walk = [&](std::int64_t start) {
    Polyline line;
    std::int64_t prev = -1, cur = start;
    while (true) {
      used[cur] = true;
      line.points.push_back(point_on(cur));
      std::int64_t next = -1;
      for (const std::int64_t nb : links[cur])
        if (nb != prev && !used[nb]) {
          next = nb;
          break;
        }
      if (next < 0) {
        for (const std::int64_t nb : links[cur])
          if (nb == start && nb != prev && line.points.size() > 2) line.closed = true;
        break;
      }
      prev = cur;
      cur = next;
    }
    if (line.closed) line.points.push_back(line.points.front());
    out.curves.push_back(std::move(line));
  };
  for (const std::int64_t e : ordered_edges)
    if (!used[e] && links[e].size() == 1) walk(e);
  for (const std::int64_t e : ordered_edges)
    if (!used[e]) walk(e);

  std::vector<std::int32_t> above;
  for (std::int32_t i = 0; i < grid.size(); ++i)
    if (phi[i] > level) above.push_back(i);
  out.high_components = count_components(above, grid);
  return out;
}

double sup_pure_difference(const Grid& grid, std::span<const double> values, int order) {
  if (order != 1 && order != 2) throw InputError("difference order must be 1 or 2");
  const double h = grid.spacing();
  auto val = [&](std::int32_t j) { return j == Grid::kAbsent ? 0.0 : values[j]; };
  double sup = 0.0;
  for (std::int32_t i = 0; i < grid.size(); ++i) {
    for (int axis = 0; axis < grid.dimension(); ++axis) {
      const double minus = val(grid.neighbor(i, 2 * axis));
      const double plus = val(grid.neighbor(i, 2 * axis + 1));
      const double d = order == 1 ? (plus - values[i]) / h
                                  : (plus - 2.0 * values[i] + minus) / (h * h);
      sup = std::max(sup, std::abs(d));
    }
  }
  return sup;
}

bool RegularityReport::bounded(double limit) const {
  return std::all_of(ratios.begin(), ratios.end(), [&](double r) { return r <= limit; });
}

RegularityReport regularity_from_fields(std::span<const FieldLevel> levels, int order) {
  RegularityReport rep;
  rep.order = order;
  for (const FieldLevel& lv : levels) {
    rep.spacings.push_back(lv.grid->spacing());
    rep.sups.push_back(sup_pure_difference(*lv.grid, lv.values, order));
  }
  for (std::size_t k = 1; k < rep.sups.size(); ++k)
    rep.ratios.push_back(rep.sups[k] / rep.sups[k - 1]);
  return rep;
}

RegularityReport regularity_trend(const GridSpec& base, const ProblemSpec& spec, int levels,
                                  const SolverOptions& opts, std::vector<Solution>* solutions) {
  if (levels < 2) throw InputError("regularity trend needs at least two refinement levels");
  std::vector<Grid> grids;
  std::vector<FieldLevel> fields;
  grids.reserve(static_cast<std::size_t>(levels));
  GridSpec gs = base;
  for (int l = 0; l < levels; ++l) {
    grids.push_back(build_grid(gs));
    gs.spacing *= 0.5;
  }
  const double base_volume = domain_volume(grids.front());
  for (const Grid& g : grids) {
    ProblemSpec level = spec;
    level.mass = spec.mass * domain_volume(g) / base_volume;
    Solution sol = minimize(g, level, InitialDensity::uniform(), opts);
    // phi^T W phi = 1 omits h^d; rescale to unit weighted L2 norm.
    const double scale = 1.0 / std::sqrt(g.node_volume());
    std::vector<double> v = sol.eigenpair.vector;
    for (double& x : v) x *= scale;
    fields.push_back({&g, std::move(v)});
    if (solutions) solutions->push_back(std::move(sol));
  }
  return regularity_from_fields(fields, 2);
}

double radial_deviation(std::span<const std::int32_t> set, const Grid& grid) {
  const auto* ball = std::get_if<Ball>(&grid.spec().shape);
  if (ball == nullptr) throw InputError("radial_deviation requires a disk grid");
  const double h = grid.spacing();
  std::vector<std::uint8_t> member(static_cast<std::size_t>(grid.size()), 0);
  for (const std::int32_t i : set) member[i] = 1;
  std::unordered_map<std::int64_t, std::array<std::int64_t, 2>> bins;
  for (std::int32_t i = 0; i < grid.size(); ++i) {
    double r2 = 0.0;
    for (int k = 0; k < grid.dimension(); ++k) {
      const double c = k < static_cast<int>(ball->center.size()) ? ball->center[k] : 0.0;
      const double d = grid.position(i, k) - c;
      r2 += d * d;
    }
    const auto bin = static_cast<std::int64_t>(std::floor(std::sqrt(r2) / h));
    ++bins[bin][member[i]];
  }
  std::int64_t minority = 0;
  for (const auto& [bin, counts] : bins) minority += std::min(counts[0], counts[1]);
  return static_cast<double>(minority) / grid.size();
}

}  // namespace cmp
