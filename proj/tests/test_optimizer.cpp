#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "cmp/error.hpp"
#include "cmp/optimizer.hpp"
#include "cmp/verify.hpp"
#include "doctest.h"

using namespace cmp;

namespace {

// Unit-volume nodes: a 1 x n strip at h = 1.
Grid strip(int n) {
  return build_grid(GridSpec::rectangle({{0.0, n + 1.0}, {0.0, 2.0}}, 1.0));
}

void check_density_invariants(const Grid& g, const ProblemSpec& spec, const DensityField& d,
                              const LevelSetPartition& p) {
  int intermediate = 0;
  for (double v : d.rho) {
    CHECK(v >= spec.lambda_low);
    CHECK(v <= spec.lambda_high);
    intermediate += v != spec.lambda_low && v != spec.lambda_high;
  }
  CHECK(intermediate <= 1);
  CHECK(std::abs(density_mass(g, d.rho) - spec.mass) <= 1e-12 * spec.mass);
  CHECK(p.low.size() + p.high.size() + (p.has_fractional() ? 1 : 0) ==
        static_cast<std::size_t>(g.size()));
  std::vector<std::int32_t> all(p.low);
  all.insert(all.end(), p.high.begin(), p.high.end());
  if (p.has_fractional()) all.push_back(p.fractional);
  std::sort(all.begin(), all.end());
  CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
}

}  // namespace

TEST_CASE("conformal bounds") {
  CHECK(conformal_bounds(0.0, 2) == std::pair<double, double>{1.0, 1.0});
  auto [lo, hi] = conformal_bounds(std::log(2.0), 2);
  CHECK(lo == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(hi == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(std::abs(lo * hi - 1.0) <= 1e-14);
  auto [lo4, hi4] = conformal_bounds(0.5, 4);
  CHECK(lo4 == doctest::Approx(std::exp(-2.0)));
  CHECK(hi4 == doctest::Approx(std::exp(2.0)));
  CHECK_THROWS_AS(conformal_bounds(-0.1, 2), InputError);
  auto spec = ProblemSpec::from_conformal(std::log(2.0), 2, 1.0);
  CHECK(spec.lambda_low == lo);
}

TEST_CASE("high-set budget") {
  auto spec = ProblemSpec::from_bounds(0.25, 4.0, 0.25);
  CHECK(target_high_mass(spec, 1.0) == 0.0);
  spec.mass = 4.0;
  CHECK(target_high_mass(spec, 1.0) == doctest::Approx(1.0));
  spec.mass = 1.0;
  CHECK(target_high_mass(spec, 1.0) == doctest::Approx(0.2));
  spec.mass = 5.0;
  CHECK_THROWS_WITH_AS(target_high_mass(spec, 1.0), doctest::Contains("mass outside conformal box"),
                       InputError);
  CHECK(target_high_mass(ProblemSpec::from_bounds(1, 1, 1), 1.0) == 0.0);
  CHECK_THROWS_AS(ProblemSpec::from_bounds(2, 1, 1).validate(1.0), InputError);
}

TEST_CASE("bathtub: two nodes without a fractional node") {
  Grid g = strip(2);
  REQUIRE(g.size() == 2);
  auto spec = ProblemSpec::from_bounds(1, 3, 4);
  std::vector<double> phi{1.0, 2.0};
  auto r = bathtub_rearrange(phi, g, spec);
  CHECK(r.density.rho == std::vector<double>{1.0, 3.0});
  CHECK_FALSE(r.partition.has_fractional());
  CHECK(r.partition.threshold == 2.0);
  CHECK(r.partition.high == std::vector<std::int32_t>{1});
}

TEST_CASE("bathtub: three nodes with a fractional node") {
  Grid g = strip(3);
  auto spec = ProblemSpec::from_bounds(1, 2, 4.5);
  std::vector<double> phi{3.0, 2.0, 1.0};
  auto r = bathtub_rearrange(phi, g, spec);
  CHECK(r.density.rho == std::vector<double>{2.0, 1.5, 1.0});
  CHECK(r.partition.fractional == 1);
  CHECK(r.partition.threshold == 2.0);
  check_density_invariants(g, spec, r.density, r.partition);

  // The weighted energy sum phi^2 rho is maximal over a fine sampling of the
  // feasible simplex slice.
  const double best = 9 * r.density.rho[0] + 4 * r.density.rho[1] + 1 * r.density.rho[2];
  double sampled = -std::numeric_limits<double>::infinity();
  const int steps = 200;
  for (int a = 0; a <= steps; ++a)
    for (int b = 0; b <= steps; ++b) {
      const double r0 = 1.0 + double(a) / steps, r1 = 1.0 + double(b) / steps;
      const double r2 = 4.5 - r0 - r1;
      if (r2 < 1.0 || r2 > 2.0) continue;
      sampled = std::max(sampled, 9 * r0 + 4 * r1 + r2);
    }
  CHECK(sampled <= best + 1e-12);
}

TEST_CASE("bathtub: constant phi fills by node index") {
  Grid g = build_grid(GridSpec::unit_cube(2, 0.25));
  auto spec = ProblemSpec::from_bounds(1, 2, 0.84375);  // 4.5 high nodes
  std::vector<double> phi(g.size(), 0.7);
  auto r = bathtub_rearrange(phi, g, spec);
  check_density_invariants(g, spec, r.density, r.partition);
  // High nodes are the lowest indices, D is the tail.
  for (std::size_t k = 0; k < r.partition.high.size(); ++k)
    CHECK(r.partition.high[k] == static_cast<std::int32_t>(k));
  CHECK(r.partition.low.front() > r.partition.high.back());
  // Sign of phi plays no role.
  std::vector<double> neg(g.size(), -0.7);
  CHECK(bathtub_rearrange(neg, g, spec).density.rho == r.density.rho);
}

TEST_CASE("bathtub: errors") {
  Grid g = strip(3);
  auto spec = ProblemSpec::from_bounds(1, 2, 4.5);
  CHECK_THROWS_AS(bathtub_rearrange(std::vector<double>{0, 0, 0}, g, spec), InputError);
  CHECK_THROWS_AS(bathtub_rearrange(std::vector<double>{1, 2}, g, spec), InputError);
  spec.mass = 7.0;
  CHECK_THROWS_AS(bathtub_rearrange(std::vector<double>{1, 2, 3}, g, spec), InputError);
}

TEST_CASE("bathtub: property sweep on random fields and curved backgrounds") {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  GridSpec gs = GridSpec::disk({0, 0}, 1.0, 0.1);
  gs.background = [](std::span<const double> x) { return 0.3 * x[0] * x[1]; };
  Grid g = build_grid(gs);
  const double vol = domain_volume(g);
  for (int trial = 0; trial < 50; ++trial) {
    const double lo = 0.1 + unit(gen), hi = lo + 0.1 + 3 * unit(gen);
    auto spec = ProblemSpec::from_bounds(lo, hi, vol * (lo + (hi - lo) * unit(gen)));
    std::vector<double> phi(g.size());
    for (double& v : phi) v = unit(gen) - 0.3;
    auto r = bathtub_rearrange(phi, g, spec);
    check_density_invariants(g, spec, r.density, r.partition);
    CHECK(sublevel_check(phi, r.partition).holds);
    // Ties: quantized fields still satisfy everything.
    for (double& v : phi) v = std::round(v * 4) / 4 + 0.01;
    auto q = bathtub_rearrange(phi, g, spec);
    check_density_invariants(g, spec, q.density, q.partition);
    CHECK(sublevel_check(phi, q.partition).holds);
  }
}

TEST_CASE("classify and compare partitions") {
  auto spec = ProblemSpec::from_bounds(1, 2, 1);
  auto p = classify_density(spec, std::vector<double>{1, 2, 1.5, 1});
  REQUIRE(p);
  CHECK(p->low == std::vector<std::int32_t>{0, 3});
  CHECK(p->high == std::vector<std::int32_t>{1});
  CHECK(p->fractional == 2);
  CHECK_FALSE(classify_density(spec, std::vector<double>{1.2, 1.5}));
  const std::int32_t a[] = {1, 2, 5}, b[] = {2, 3, 5, 7};
  CHECK(symmetric_difference(a, b) == 3);
  CHECK(symmetric_difference(a, a) == 0);
}

TEST_CASE("random densities are feasible and seed-deterministic") {
  Grid g = build_grid(GridSpec::disk({0, 0}, 1.0, 0.1));
  auto spec = ProblemSpec::from_bounds(0.25, 4, M_PI);
  auto r1 = random_density(g, spec, 17);
  auto r2 = random_density(g, spec, 17);
  auto r3 = random_density(g, spec, 18);
  CHECK(r1.density.rho == r2.density.rho);
  CHECK(r1.density.rho != r3.density.rho);
  check_density_invariants(g, spec, r1.density, r1.partition);
}

TEST_CASE("no freedom: lambda_low == lambda_high") {
  Grid g = build_grid(GridSpec::unit_cube(2, 1.0 / 16));
  const double vol = domain_volume(g);
  auto spec = ProblemSpec::from_conformal(0.0, 2, vol);
  auto sol = minimize(g, spec, InitialDensity::uniform(), {});
  CHECK(sol.trace.records.size() == 1);
  CHECK(sol.trace.status == TerminalStatus::converged);
  for (double v : sol.density.rho) CHECK(v == 1.0);
  WeightVector w{std::vector<double>(g.size(), 1.0)};
  CHECK(sol.eigenpair.eigenvalue ==
        doctest::Approx(first_eigenpair(assemble_stiffness(g, {2}), w, {}).eigenvalue));
}

TEST_CASE("2x2 grid matches the oracle") {
  Grid g = build_grid(GridSpec::rectangle({{0, 3}, {0, 3}}, 1.0));
  REQUIRE(g.size() == 4);
  auto spec = ProblemSpec::from_bounds(1, 2, 5);
  auto oracle = enumerate_optimal(g, spec);
  CHECK(oracle.ranking.size() == 4);
  const std::uint64_t seeds[] = {1, 2, 3, 4, 5, 6, 7, 8};
  auto ms = multi_start(g, spec, seeds, {});
  const double mu = ms.runs[ms.best_run()].eigenpair.eigenvalue;
  CHECK(std::abs(mu - oracle.best_eigenvalue()) <= 1e-10 * mu);
}

TEST_CASE("minimize: traces, restarts and status") {
  Grid g = build_grid(GridSpec::unit_cube(2, 1.0 / 24));
  auto spec = ProblemSpec::from_bounds(0.25, 4, 0.8);
  auto sol = minimize(g, spec, InitialDensity::random(3), {});
  CHECK(sol.trace.monotone());
  CHECK(sol.trace.status == TerminalStatus::converged);
  check_density_invariants(g, spec, sol.density, sol.partition);
  CHECK(sublevel_check(sol.eigenpair.vector, sol.partition).holds);
  CHECK(sol.trace.records.back().set_change == 0);

  // Restarting from the terminal density is a fixed point.
  auto again = minimize(g, spec, InitialDensity::given(sol.density.rho), {});
  CHECK(again.trace.records.size() == 1);
  CHECK(again.partition.same_sets(sol.partition));

  SolverOptions capped;
  capped.max_alternations = 1;
  auto cut = minimize(g, spec, InitialDensity::random(3), capped);
  CHECK(cut.trace.status == TerminalStatus::max_iter);
  CHECK(to_string(TerminalStatus::max_iter) == "max-iter");

  std::vector<double> bad(g.size(), 4.0);
  CHECK_THROWS_AS(minimize(g, spec, InitialDensity::given(bad), {}), InputError);
}

TEST_CASE("multi_start: ordering, determinism and threads") {
  Grid g = build_grid(GridSpec::unit_cube(2, 1.0 / 16));
  auto spec = ProblemSpec::from_bounds(0.25, 4, 0.6);
  const std::uint64_t one[] = {5};
  auto single = multi_start(g, spec, one, {});
  CHECK(single.runs.size() == 1);
  CHECK(single.classes.size() == 1);

  const std::uint64_t seeds[] = {4, 1, 9, 2};
  auto serial = multi_start(g, spec, seeds, {}, 1);
  auto parallel = multi_start(g, spec, seeds, {}, 3);
  REQUIRE(serial.runs.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(serial.seeds[i] == seeds[i]);
    CHECK(serial.runs[i].density.rho == parallel.runs[i].density.rho);
    CHECK(serial.runs[i].eigenpair.eigenvalue == parallel.runs[i].eigenpair.eigenvalue);
  }
  std::size_t members = 0;
  for (const auto& c : serial.classes) members += c.members.size();
  CHECK(members == 4);
  CHECK_THROWS_AS(multi_start(g, spec, std::span<const std::uint64_t>{}, {}), InputError);
}

TEST_CASE("solution classes") {
  Solution a, b;
  a.eigenpair.eigenvalue = 10.0;
  b.eigenpair.eigenvalue = 10.0 * (1 + 5e-9);
  a.partition.low = {0, 1, 2};
  b.partition.low = {0, 1, 3};
  CHECK(same_solution_class(a, b, 200));
  CHECK_FALSE(same_solution_class(a, b, 100));
  b.eigenpair.eigenvalue = 10.0 * (1 + 5e-8);
  CHECK_FALSE(same_solution_class(a, b, 200));
}
