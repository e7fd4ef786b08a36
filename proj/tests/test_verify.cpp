#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "cmp/error.hpp"
#include "cmp/verify.hpp"
#include "doctest.h"

using namespace cmp;

namespace {

Grid box_grid(int interior) {
  const double e = interior + 1.0;
  return build_grid(GridSpec::rectangle({{0, e}, {0, e}}, 1.0));
}

std::vector<double> sample(const Grid& g, double (*f)(double, double)) {
  std::vector<double> v(g.size());
  for (std::int32_t i = 0; i < g.size(); ++i) v[i] = f(g.position(i, 0), g.position(i, 1));
  return v;
}

}  // namespace

TEST_CASE("dense Cholesky and dense eigenpair") {
  auto a = CsrMatrix::from_triplets(2, {{0, 0, 4}, {0, 1, 1}, {1, 0, 1}, {1, 1, 3}});
  DenseCholesky chol(a);
  auto x = chol.solve(std::vector<double>{1, 2});
  CHECK(4 * x[0] + x[1] == doctest::Approx(1.0));
  CHECK(x[0] + 3 * x[1] == doctest::Approx(2.0));
  auto ep = dense_first_eigenpair(a, chol, std::vector<double>{1, 1});
  CHECK(ep.eigenvalue == doctest::Approx((7 - std::sqrt(5.0)) / 2).epsilon(1e-13));
  auto indefinite = CsrMatrix::from_triplets(1, {{0, 0, -1}});
  CHECK_THROWS(DenseCholesky{indefinite});
}

TEST_CASE("oracle: counting and symmetry on the 2x2 grid") {
  Grid g = box_grid(2);
  auto spec = ProblemSpec::from_bounds(1, 2, 5);
  auto res = enumerate_optimal(g, spec);
  CHECK(res.ranking.size() == 4);
  CHECK_FALSE(res.partition.has_fractional());
  // All four corners are equivalent under the square's symmetry group.
  CHECK(res.optimal_set(1e-12).size() == 4);
  for (std::size_t k = 1; k < res.ranking.size(); ++k)
    CHECK(res.ranking[k - 1].eigenvalue <= res.ranking[k].eigenvalue);
  CHECK(res.ranking.front().high_nodes().size() == 1);
  CHECK(sublevel_check(res.eigenpair.vector, res.partition).holds);

  spec.mass = 5.5;
  auto frac = enumerate_optimal(g, spec);
  CHECK(frac.ranking.size() == 4 * 3);
  CHECK(frac.partition.has_fractional());
  CHECK(std::abs(density_mass(g, frac.density.rho) - 5.5) <= 1e-12 * 5.5);
}

TEST_CASE("oracle: 3x3 optimal set is closed under the symmetry group") {
  Grid g = box_grid(3);
  auto spec = ProblemSpec::from_bounds(1, 2, 12);
  auto res = enumerate_optimal(g, spec);
  CHECK(res.ranking.size() == 84);  // C(9, 3)
  auto opt = res.optimal_set(1e-12);
  std::set<std::uint32_t> masks;
  for (const auto& c : opt) masks.insert(c.high_mask);
  const auto mx = mirror_map(g, 0), my = mirror_map(g, 1);
  for (std::uint32_t m : masks) {
    std::uint32_t a = 0, b = 0;
    for (int i = 0; i < 9; ++i)
      if (m >> i & 1u) {
        a |= 1u << mx[i];
        b |= 1u << my[i];
      }
    CHECK(masks.count(a) == 1);
    CHECK(masks.count(b) == 1);
  }
  CHECK(sublevel_check(res.eigenpair.vector, res.partition).holds);
}

TEST_CASE("oracle errors") {
  CHECK_THROWS_WITH_AS(enumerate_optimal(box_grid(5), ProblemSpec::from_bounds(1, 2, 30)),
                       doctest::Contains("oracle scale exceeded"), InputError);
  GridSpec s = GridSpec::rectangle({{0, 3}, {0, 3}}, 1.0);
  s.background = [](std::span<const double> x) { return 0.1 * x[0]; };
  Grid curved = build_grid(s);
  CHECK_THROWS_AS(enumerate_optimal(curved, ProblemSpec::from_bounds(1, 2, 5.5)), InputError);
}

TEST_CASE("sublevel check") {
  std::vector<double> phi{0.1, 0.2, 0.3, 0.4};
  LevelSetPartition good;
  good.low = {0, 1};
  good.high = {2, 3};
  CHECK(sublevel_check(phi, good).holds);
  CHECK(sublevel_check(phi, good).margin == doctest::Approx(0.04 - 0.09));
  LevelSetPartition swapped;
  swapped.low = {0, 2};
  swapped.high = {1, 3};
  auto rep = sublevel_check(phi, swapped);
  CHECK_FALSE(rep.holds);
  CHECK(rep.margin > 0.0);
  LevelSetPartition empty_high;
  empty_high.low = {0, 1, 2, 3};
  CHECK(sublevel_check(phi, empty_high).holds);
}

TEST_CASE("components") {
  Grid g = build_grid(GridSpec::unit_cube(2, 0.125));
  CHECK(count_components({}, g) == 0);
  std::vector<std::int32_t> all(g.size());
  for (std::int32_t i = 0; i < g.size(); ++i) all[i] = i;
  CHECK(count_components(all, g) == 1);
  // Remove the middle column.
  std::vector<std::int32_t> split;
  for (std::int32_t i = 0; i < g.size(); ++i)
    if (g.coords(i)[0] != 4) split.push_back(i);
  CHECK(count_components(split, g) == 2);
  // Diagonal neighbors are not connected.
  const std::int32_t diag[] = {0, 8};
  CHECK(g.coords(8)[0] == 2);
  CHECK(g.coords(8)[1] == 2);
  CHECK(count_components(diag, g) == 2);
}

TEST_CASE("contours") {
  Grid g = build_grid(GridSpec::unit_cube(2, 1.0 / 16));
  SUBCASE("linear field") {
    auto phi = sample(g, [](double x, double) { return x; });
    auto cs = extract_contour(phi, 0.53, g);
    // The zero padding adds crossings next to the right edge; the rest is straight.
    REQUIRE(cs.curves.size() == 1);
    int interior = 0;
    for (const auto& p : cs.curves[0].points)
      if (p[1] > 0.06 && p[1] < 0.94 && p[0] < 0.9) {
        CHECK(p[0] == doctest::Approx(0.53));
        ++interior;
      }
    CHECK(interior >= 10);
    CHECK(cs.high_components == 1);
  }
  SUBCASE("level above the maximum") {
    auto phi = sample(g, [](double x, double) { return x; });
    CHECK(extract_contour(phi, 2.0, g).curves.empty());
  }
  SUBCASE("two bumps give two closed curves") {
    auto phi = sample(g, [](double x, double y) {
      return std::exp(-40 * ((x - 0.3) * (x - 0.3) + (y - 0.5) * (y - 0.5))) +
             std::exp(-40 * ((x - 0.7) * (x - 0.7) + (y - 0.5) * (y - 0.5)));
    });
    auto cs = extract_contour(phi, 0.5, g);
    CHECK(cs.closed_curves() == 2);
    CHECK(cs.high_components == 2);
  }
  SUBCASE("saddle cell stays consistent") {
    auto phi = sample(g, [](double x, double y) { return (x - 0.5) * (y - 0.5) + 0.5; });
    auto cs = extract_contour(phi, 0.5, g);
    for (const auto& c : cs.curves) CHECK(c.points.size() >= 2);
  }
}

TEST_CASE("radial contour on a disk") {
  const double h = 1.0 / 32;
  Grid g = build_grid(GridSpec::disk({0, 0}, 1.0, h));
  auto phi = sample(g, [](double x, double y) { return 1.0 - (x * x + y * y); });
  auto cs = extract_contour(phi, 0.75, g);
  REQUIRE(cs.curves.size() == 1);
  CHECK(cs.curves[0].closed);
  for (const auto& p : cs.curves[0].points)
    CHECK(std::abs(std::hypot(p[0], p[1]) - 0.5) <= 2 * h);
  CHECK_THROWS_AS(extract_contour(std::vector<double>(27, 1.0), 0.5,
                                  build_grid(GridSpec::unit_cube(3, 0.25))),
                  InputError);
}

TEST_CASE("pure differences") {
  Grid g = build_grid(GridSpec::unit_cube(2, 1.0 / 16));
  // Quadratic in each variable and zero on the boundary: differences are exact.
  auto phi = sample(g, [](double x, double y) { return x * (1 - x) * y * (1 - y); });
  CHECK(sup_pure_difference(g, phi, 2) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sup_pure_difference(g, phi, 1) > 0.0);
  CHECK_THROWS_AS(sup_pure_difference(g, phi, 3), InputError);
}

TEST_CASE("regularity detector") {
  std::vector<Grid> grids;
  for (int n : {16, 32, 64}) grids.push_back(build_grid(GridSpec::unit_cube(2, 1.0 / n)));

  SUBCASE("smooth field is bounded") {
    std::vector<FieldLevel> levels;
    for (const Grid& g : grids)
      levels.push_back({&g, sample(g, [](double x, double y) {
                          return std::sin(M_PI * x) * std::sin(M_PI * y);
                        })});
    auto rep = regularity_from_fields(levels, 2);
    CHECK(rep.bounded());
    for (double r : rep.ratios) CHECK(r == doctest::Approx(1.0).epsilon(0.02));
  }
  SUBCASE("kinked field is flagged") {
    std::vector<FieldLevel> levels;
    for (const Grid& g : grids)
      levels.push_back({&g, sample(g, [](double x, double y) {
                          return (0.5 - std::abs(x - 0.5)) * y * (1 - y);
                        })});
    auto rep = regularity_from_fields(levels, 2);
    CHECK_FALSE(rep.bounded());
    for (double r : rep.ratios) CHECK(r >= 1.9);
  }
  SUBCASE("jump is flagged one derivative lower") {
    std::vector<FieldLevel> levels;
    for (const Grid& g : grids)
      levels.push_back({&g, sample(g, [](double x, double y) {
                          return ((x > 0.5 + 1e-9) ? 1.0 : 0.0) * y * (1 - y);
                        })});
    auto rep = regularity_from_fields(levels, 1);
    CHECK_FALSE(rep.bounded());
  }
  SUBCASE("unweighted eigenfunction trend tends to 1") {
    Grid g = build_grid(GridSpec::unit_cube(2, 1.0 / 16));
    auto rep = regularity_trend(GridSpec::unit_cube(2, 1.0 / 16),
                                ProblemSpec::from_conformal(0.0, 2, domain_volume(g)), 3, {});
    REQUIRE(rep.ratios.size() == 2);
    for (double r : rep.ratios) CHECK(r == doctest::Approx(1.0).epsilon(0.05));
    CHECK_THROWS_AS(regularity_trend(GridSpec::unit_cube(2, 1.0 / 16),
                                     ProblemSpec::from_conformal(0.0, 2, 1.0), 1, {}),
                    InputError);
  }
}

TEST_CASE("radial deviation") {
  const double h = 1.0 / 32;
  Grid g = build_grid(GridSpec::disk({0, 0}, 1.0, h));
  std::vector<std::int32_t> annulus, half;
  for (std::int32_t i = 0; i < g.size(); ++i) {
    if (std::floor(std::hypot(g.position(i, 0), g.position(i, 1)) / h) >= 19) annulus.push_back(i);
    if (g.position(i, 0) < 0.0) half.push_back(i);
  }
  CHECK(radial_deviation(annulus, g) == 0.0);
  CHECK(radial_deviation(half, g) == doctest::Approx(0.5).epsilon(0.05));
  CHECK_THROWS_AS(radial_deviation(annulus, build_grid(GridSpec::unit_cube(2, h))), InputError);
}
