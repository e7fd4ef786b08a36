#include "cmp/grid.hpp"

#include <cmath>
#include <cstdio>
#include <deque>
#include <ostream>

#include "cmp/error.hpp"

namespace cmp {
namespace {

double squared_distance(std::span<const double> x, const std::vector<double>& c) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - (k < c.size() ? c[k] : 0.0);
    s += d * d;
  }
  return s;
}

struct InsideTest {
  const GridSpec& spec;
  double tol;

  bool operator()(const Rectangle&, std::span<const double>) const { return true; }

  bool operator()(const Ball& b, std::span<const double> x) const {
    return squared_distance(x, b.center) < b.radius * b.radius * (1.0 - 1e-12);
  }

  bool operator()(const Annulus& a, std::span<const double> x) const {
    const double r2 = squared_distance(x, a.center);
    return r2 > a.inner_radius * a.inner_radius * (1.0 + 1e-12) &&
           r2 < a.outer_radius * a.outer_radius * (1.0 - 1e-12);
  }

  bool operator()(const Dumbbell& d, std::span<const double> p) const {
    const double x = p[0] - spec.box[0].lo;
    const double y = p[1] - spec.box[1].lo;
    const double a = d.lobe;
    const bool in_y = y > tol && y < a - tol;
    const bool left = x > tol && x < a - tol && in_y;
    const bool right = x > a + d.neck_length + tol && x < 2 * a + d.neck_length - tol && in_y;
    const bool neck = x >= a - tol && x <= a + d.neck_length + tol &&
                      std::abs(y - 0.5 * a) < 0.5 * d.neck_width - tol;
    return left || right || neck;
  }

  bool operator()(const MaskShape& m, std::span<const double> x) const { return m.inside(x); }
};

void validate(const GridSpec& spec) {
  if (spec.dimension < 1) throw InputError("grid dimension must be >= 1");
  if (!(spec.spacing > 0.0) || !std::isfinite(spec.spacing))
    throw InputError("grid spacing h must be positive");
  if (static_cast<int>(spec.box.size()) != spec.dimension)
    throw InputError("bounding box needs one interval per axis");
  for (const Interval& iv : spec.box)
    if (!(iv.hi > iv.lo)) throw InputError("bounding box is degenerate on some axis");
  if (const auto* d = std::get_if<Dumbbell>(&spec.shape)) {
    if (spec.dimension != 2) throw InputError("dumbbell shape is planar only");
    if (d->neck_width < 2.0 * spec.spacing * (1.0 - 1e-12))
      throw InputError("dumbbell neck width must be >= 2h");
    if (!(d->lobe > 0.0) || !(d->neck_length > 0.0) || d->neck_width >= d->lobe)
      throw InputError("dumbbell dimensions are inconsistent");
  }
  if (const auto* a = std::get_if<Annulus>(&spec.shape)) {
    if (!(a->inner_radius >= 0.0) || !(a->outer_radius > a->inner_radius))
      throw InputError("annulus needs 0 <= r_in < r_out");
  }
  if (const auto* b = std::get_if<Ball>(&spec.shape)) {
    if (!(b->radius > 0.0)) throw InputError("disk radius must be positive");
  }
  if (const auto* m = std::get_if<MaskShape>(&spec.shape)) {
    if (!m->inside) throw InputError("mask shape needs a predicate");
  }
}

bool declared_connected(const Shape& shape) {
  if (const auto* m = std::get_if<MaskShape>(&shape)) return m->connected;
  return true;
}

}  // namespace

GridSpec GridSpec::rectangle(std::vector<Interval> box, double h) {
  GridSpec s;
  s.dimension = static_cast<int>(box.size());
  s.spacing = h;
  s.box = std::move(box);
  return s;
}

GridSpec GridSpec::unit_cube(int dimension, double h) {
  return rectangle(std::vector<Interval>(static_cast<std::size_t>(dimension), Interval{0.0, 1.0}),
                   h);
}

GridSpec GridSpec::disk(std::vector<double> center, double radius, double h) {
  GridSpec s;
  s.dimension = static_cast<int>(center.size());
  s.spacing = h;
  for (double c : center) s.box.push_back({c - radius, c + radius});
  s.shape = Ball{std::move(center), radius};
  return s;
}

GridSpec GridSpec::annulus(std::vector<double> center, double inner, double outer, double h) {
  GridSpec s;
  s.dimension = static_cast<int>(center.size());
  s.spacing = h;
  for (double c : center) s.box.push_back({c - outer, c + outer});
  s.shape = Annulus{std::move(center), inner, outer};
  return s;
}

GridSpec GridSpec::dumbbell(double lobe, double neck_length, double neck_width, double h) {
  GridSpec s;
  s.dimension = 2;
  s.spacing = h;
  s.box = {{0.0, 2.0 * lobe + neck_length}, {0.0, lobe}};
  s.shape = Dumbbell{lobe, neck_length, neck_width};
  return s;
}

std::string GridSpec::shape_name() const {
  struct Namer {
    std::string operator()(const Rectangle&) const { return "rectangle"; }
    std::string operator()(const Ball&) const { return "disk"; }
    std::string operator()(const Annulus&) const { return "annulus"; }
    std::string operator()(const Dumbbell&) const { return "dumbbell"; }
    std::string operator()(const MaskShape& m) const { return m.name; }
  };
  return std::visit(Namer{}, shape);
}

std::vector<double> Grid::position(std::int32_t node) const {
  std::vector<double> x(static_cast<std::size_t>(spec_.dimension));
  for (int k = 0; k < spec_.dimension; ++k) x[k] = position(node, k);
  return x;
}

std::int32_t Grid::index_at(std::span<const std::int32_t> multi_index) const {
  std::size_t lin = 0;
  for (int k = 0; k < spec_.dimension; ++k) {
    const std::int32_t i = multi_index[k];
    if (i < 0 || i >= extent_[k]) return kAbsent;
    lin = lin * static_cast<std::size_t>(extent_[k]) + static_cast<std::size_t>(i);
  }
  return lattice_[lin];
}

Grid build_grid(const GridSpec& spec) {
  validate(spec);
  Grid g;
  g.spec_ = spec;
  const int d = spec.dimension;
  const double h = spec.spacing;
  g.node_volume_ = std::pow(h, d);

  std::size_t total = 1;
  for (int k = 0; k < d; ++k) {
    const double cells = (spec.box[k].hi - spec.box[k].lo) / h;
    const auto n = static_cast<std::int32_t>(std::floor(cells + 1e-9));
    if (n < 1) throw InputError("bounding box narrower than one cell");
    g.extent_.push_back(n + 1);
    total *= static_cast<std::size_t>(n + 1);
  }
  g.lattice_.assign(total, Grid::kAbsent);

  const InsideTest inside{spec, 1e-9 * h};
  std::vector<std::int32_t> idx(static_cast<std::size_t>(d), 0);
  std::vector<double> x(static_cast<std::size_t>(d));
  for (std::size_t lin = 0; lin < total; ++lin) {
    // Decode lin with axis 0 most significant so that lin order is lexicographic.
    std::size_t rem = lin;
    for (int k = d - 1; k >= 0; --k) {
      idx[k] = static_cast<std::int32_t>(rem % static_cast<std::size_t>(g.extent_[k]));
      rem /= static_cast<std::size_t>(g.extent_[k]);
    }
    bool on_box_boundary = false;
    for (int k = 0; k < d; ++k) {
      if (idx[k] == 0 || idx[k] == g.extent_[k] - 1) on_box_boundary = true;
      x[k] = spec.box[k].lo + idx[k] * h;
    }
    if (on_box_boundary) continue;
    if (!std::visit([&](const auto& s) { return inside(s, x); }, spec.shape)) continue;
    g.lattice_[lin] = static_cast<std::int32_t>(g.coords_.size() / static_cast<std::size_t>(d));
    g.coords_.insert(g.coords_.end(), idx.begin(), idx.end());
    const double w = spec.background ? spec.background(x) : 0.0;
    if (!std::isfinite(w)) throw InputError("background exponent is not finite");
    g.exponent_.push_back(w);
    g.weight_.push_back(std::exp(2.0 * w));
    if (w != 0.0) g.flat_ = false;
  }
  if (g.weight_.empty()) throw InputError("degenerate domain: grid has no interior nodes");
  if (d != 2 && !g.flat_) throw InputError("flat background required for d != 2");

  const std::int32_t n = g.size();
  g.neighbors_.assign(static_cast<std::size_t>(n) * 2 * d, Grid::kAbsent);
  g.boundary_adjacent_.assign(static_cast<std::size_t>(n), 0);
  std::vector<std::int32_t> probe(static_cast<std::size_t>(d));
  for (std::int32_t i = 0; i < n; ++i) {
    const auto c = g.coords(i);
    for (int k = 0; k < d; ++k) {
      for (int s = 0; s < 2; ++s) {
        std::copy(c.begin(), c.end(), probe.begin());
        probe[k] += s == 0 ? -1 : 1;
        const std::int32_t j = g.index_at(probe);
        g.neighbors_[static_cast<std::size_t>(i) * 2 * d + 2 * k + s] = j;
        if (j == Grid::kAbsent) g.boundary_adjacent_[i] = 1;
      }
    }
  }

  if (declared_connected(spec.shape)) {
    const int parts = grid_components(g);
    if (parts > 1)
      g.warnings_.push_back("interior is disconnected: " + std::to_string(parts) +
                            " components");
  }
  return g;
}

double domain_volume(const Grid& grid) {
  double s = 0.0;
  for (std::int32_t i = 0; i < grid.size(); ++i) s += grid.volume_weight(i);
  return s;
}

std::vector<std::int32_t> mirror_map(const Grid& grid, int axis) {
  const std::int32_t n = grid.size();
  std::vector<std::int32_t> map(static_cast<std::size_t>(n));
  std::vector<std::int32_t> probe(static_cast<std::size_t>(grid.dimension()));
  const std::int32_t last = grid.lattice_points(axis) - 1;
  for (std::int32_t i = 0; i < n; ++i) {
    const auto c = grid.coords(i);
    std::copy(c.begin(), c.end(), probe.begin());
    probe[axis] = last - probe[axis];
    const std::int32_t j = grid.index_at(probe);
    if (j == Grid::kAbsent) return {};
    map[i] = j;
  }
  return map;
}

int grid_components(const Grid& grid) {
  const std::int32_t n = grid.size();
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(n), 0);
  std::deque<std::int32_t> queue;
  int parts = 0;
  for (std::int32_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    ++parts;
    seen[s] = 1;
    queue.push_back(s);
    while (!queue.empty()) {
      const std::int32_t i = queue.front();
      queue.pop_front();
      for (int dir = 0; dir < grid.directions(); ++dir) {
        const std::int32_t j = grid.neighbor(i, dir);
        if (j != Grid::kAbsent && !seen[j]) {
          seen[j] = 1;
          queue.push_back(j);
        }
      }
    }
  }
  return parts;
}

void write_grid_csv(const Grid& grid, std::ostream& os) {
  const int d = grid.dimension();
  os << "node";
  for (int k = 0; k < d; ++k) os << ",i" << k;
  for (int k = 0; k < d; ++k) os << ",x" << k;
  os << ",background_weight\n";
  char buf[64];
  for (std::int32_t i = 0; i < grid.size(); ++i) {
    os << i;
    for (int k = 0; k < d; ++k) os << ',' << grid.coords(i)[k];
    for (int k = 0; k < d; ++k) {
      std::snprintf(buf, sizeof buf, ",%.17g", grid.position(i, k));
      os << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g\n", grid.background_weight(i));
    os << buf;
  }
}

}  // namespace cmp
