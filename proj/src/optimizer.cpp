#include "cmp/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <thread>

#include "cmp/error.hpp"

namespace cmp {
namespace {

// Neumaier-compensated sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace

std::pair<double, double> conformal_bounds(double sup_bound, int n) {
  if (!std::isfinite(sup_bound)) throw InputError("conformal bound A must be finite");
  if (sup_bound < 0.0) throw InputError("conformal bound A must be >= 0");
  if (n < 1) throw InputError("exponent n must be >= 1");
  return {std::exp(-n * sup_bound), std::exp(n * sup_bound)};
}

ProblemSpec ProblemSpec::from_conformal(double sup_bound, int n, double mass, int order) {
  const auto [lo, hi] = conformal_bounds(sup_bound, n);
  return {lo, hi, mass, order, n};
}

ProblemSpec ProblemSpec::from_bounds(double lambda_low, double lambda_high, double mass,
                                     int order, int n) {
  return {lambda_low, lambda_high, mass, order, n};
}

void ProblemSpec::validate(double volume) const {
  if (!(lambda_low > 0.0) || !(lambda_high >= lambda_low) || !std::isfinite(lambda_high))
    throw InputError("density bounds must satisfy 0 < lambda_low <= lambda_high < inf");
  if (!(mass > 0.0) || !std::isfinite(mass)) throw InputError("mass M must be positive");
  const double slack = 1e-12 * mass;
  if (mass < lambda_low * volume - slack || mass > lambda_high * volume + slack)
    throw InputError("mass outside conformal box: need lambda_low*|Omega| <= M <= "
                     "lambda_high*|Omega| (lambda_low*|Omega| = " +
                     std::to_string(lambda_low * volume) + ", lambda_high*|Omega| = " +
                     std::to_string(lambda_high * volume) + ", M = " + std::to_string(mass) + ")");
}

double target_high_mass(const ProblemSpec& spec, double volume) {
  spec.validate(volume);
  if (spec.lambda_high == spec.lambda_low) return 0.0;
  const double v = (spec.mass - spec.lambda_low * volume) / (spec.lambda_high - spec.lambda_low);
  return std::clamp(v, 0.0, volume);
}

std::vector<double> DensityField::conformal_factor(int n) const {
  std::vector<double> u(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) u[i] = std::log(rho[i]) / n;
  return u;
}

double density_mass(const Grid& grid, std::span<const double> rho) {
  CompensatedSum s;
  for (std::int32_t i = 0; i < grid.size(); ++i) s.add(rho[i] * grid.volume_weight(i));
  return s.value();
}

std::optional<LevelSetPartition> classify_density(const ProblemSpec& spec,
                                                  std::span<const double> rho) {
  LevelSetPartition p;
  for (std::int32_t i = 0; i < static_cast<std::int32_t>(rho.size()); ++i) {
    if (rho[i] == spec.lambda_low) {
      p.low.push_back(i);
    } else if (rho[i] == spec.lambda_high) {
      p.high.push_back(i);
    } else {
      if (p.fractional >= 0) return std::nullopt;
      p.fractional = i;
    }
  }
  return p;
}

std::size_t symmetric_difference(std::span<const std::int32_t> a,
                                 std::span<const std::int32_t> b) {
  std::size_t count = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++count;
      ++i;
    } else {
      ++count;
      ++j;
    }
  }
  return count + (a.size() - i) + (b.size() - j);
}

Rearrangement fill_in_order(std::span<const std::int32_t> order, const Grid& grid,
                            const ProblemSpec& spec) {
  const double volume = domain_volume(grid);
  double budget = target_high_mass(spec, volume);
  const std::int32_t n = grid.size();
  if (static_cast<std::int32_t>(order.size()) != n)
    throw InputError("fill order must list every node once");

  Rearrangement out;
  std::vector<double>& rho = out.density.rho;
  rho.assign(static_cast<std::size_t>(n), spec.lambda_low);
  LevelSetPartition& part = out.partition;
  const bool two_valued = spec.lambda_high > spec.lambda_low;

  for (const std::int32_t i : order) {
    if (!two_valued || budget <= 0.0) break;
    const double v = grid.volume_weight(i);
    if (budget >= v * (1.0 - 1e-12)) {
      rho[i] = spec.lambda_high;
      budget -= v;
    } else {
      if (budget > 1e-12 * v) part.fractional = i;
      budget = 0.0;
    }
  }

  if (part.fractional >= 0) {
    // Intermediate value from the exact mass balance of the other nodes.
    CompensatedSum rest;
    for (std::int32_t i = 0; i < n; ++i)
      if (i != part.fractional) rest.add(rho[i] * grid.volume_weight(i));
    const double value = (spec.mass - rest.value()) / grid.volume_weight(part.fractional);
    rho[part.fractional] = std::clamp(value, spec.lambda_low, spec.lambda_high);
    if (rho[part.fractional] == spec.lambda_low || rho[part.fractional] == spec.lambda_high)
      part.fractional = -1;
  }
  for (std::int32_t i = 0; i < n; ++i) {
    if (i == part.fractional) continue;
    if (two_valued && rho[i] == spec.lambda_high)
      part.high.push_back(i);
    else
      part.low.push_back(i);
  }
  out.density.mass = density_mass(grid, rho);
  return out;
}

Rearrangement bathtub_rearrange(std::span<const double> phi, const Grid& grid,
                                const ProblemSpec& spec) {
  const std::int32_t n = grid.size();
  if (static_cast<std::int32_t>(phi.size()) != n)
    throw InputError("eigenfunction size does not match grid");
  bool nonzero = false;
  for (double v : phi) {
    if (!std::isfinite(v)) throw InputError("eigenfunction has non-finite entries");
    nonzero = nonzero || v != 0.0;
  }
  if (!nonzero) throw InputError("eigenfunction is identically zero");

  std::vector<std::int32_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
    return phi[a] * phi[a] > phi[b] * phi[b];
  });
  Rearrangement out = fill_in_order(order, grid, spec);

  // High nodes form a prefix of `order`, followed by the fractional node if any.
  LevelSetPartition& part = out.partition;
  const std::size_t filled = part.high.size();
  const std::int32_t node = part.has_fractional() ? part.fractional
                            : filled > 0          ? order[filled - 1]
                                                  : order.front();
  part.threshold = std::abs(phi[node]);
  return out;
}

std::string to_string(TerminalStatus status) {
  switch (status) {
    case TerminalStatus::converged: return "converged";
    case TerminalStatus::cycling: return "cycling";
    case TerminalStatus::max_iter: return "max-iter";
  }
  return "unknown";
}

bool OptimizationTrace::monotone(double slack) const {
  for (std::size_t k = 1; k < records.size(); ++k) {
    const double prev = records[k - 1].eigenvalue;
    if (records[k].eigenvalue > prev + slack * std::abs(prev)) return false;
  }
  return true;
}

Rearrangement random_density(const Grid& grid, const ProblemSpec& spec, std::uint64_t seed) {
  std::vector<std::int32_t> order(static_cast<std::size_t>(grid.size()));
  std::iota(order.begin(), order.end(), 0);
  // Fisher-Yates with an explicit index draw so the permutation depends only
  // on the mt19937_64 stream, not on the standard library's shuffle.
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return fill_in_order(order, grid, spec);
}

Solution minimize(const Grid& grid, const ProblemSpec& spec, const InitialDensity& init,
                  const SolverOptions& opts) {
  return minimize(grid, assemble_stiffness(grid, OperatorSpec{spec.order}), spec, init, opts);
}

Solution minimize(const Grid& grid, const StiffnessMatrix& stiffness, const ProblemSpec& spec,
                  const InitialDensity& init, const SolverOptions& opts) {
  opts.validate();
  if (stiffness.order() != spec.order)
    throw InputError("stiffness order does not match problem order");
  if (stiffness.size() != grid.size()) throw InputError("stiffness size does not match grid");
  const double volume = domain_volume(grid);
  spec.validate(volume);

  std::vector<double> rho;
  switch (init.kind) {
    case InitialDensity::Kind::uniform:
      rho.assign(static_cast<std::size_t>(grid.size()),
                 std::clamp(spec.mass / volume, spec.lambda_low, spec.lambda_high));
      break;
    case InitialDensity::Kind::seeded_random:
      rho = random_density(grid, spec, init.seed).density.rho;
      break;
    case InitialDensity::Kind::given:
      rho = init.rho;
      if (static_cast<std::int32_t>(rho.size()) != grid.size())
        throw InputError("initial density size does not match grid");
      for (double v : rho)
        if (v < spec.lambda_low || v > spec.lambda_high)
          throw InputError("initial density violates the box bounds");
      if (std::abs(density_mass(grid, rho) - spec.mass) > 1e-12 * spec.mass)
        throw InputError("initial density does not carry the prescribed mass");
      break;
  }

  std::optional<LevelSetPartition> current = classify_density(spec, rho);
  std::optional<LevelSetPartition> previous;
  std::vector<double> warm;

  Solution sol;
  for (int k = 0; k < opts.max_alternations; ++k) {
    const WeightVector w = assemble_weight(grid, rho);
    EigenPair ep = first_eigenpair(stiffness, w, opts, warm);
    Rearrangement next = bathtub_rearrange(ep.vector, grid, spec);

    TraceRecord rec;
    rec.iteration = k;
    rec.eigenvalue = ep.eigenvalue;
    rec.threshold = next.partition.threshold;
    rec.set_change = symmetric_difference(
        next.partition.low,
        current ? std::span<const std::int32_t>(current->low) : std::span<const std::int32_t>());
    rec.residual = ep.residual;
    rec.inner_iterations = ep.iterations;
    sol.trace.records.push_back(rec);

    const bool unchanged = current && current->same_sets(next.partition);
    const bool cycling = !unchanged && previous && previous->same_sets(next.partition);
    if (unchanged || cycling || k + 1 == opts.max_alternations) {
      sol.trace.status = unchanged  ? TerminalStatus::converged
                         : cycling ? TerminalStatus::cycling
                                   : TerminalStatus::max_iter;
      sol.density.rho = std::move(rho);
      sol.density.mass = density_mass(grid, sol.density.rho);
      if (unchanged) {
        sol.partition = std::move(next.partition);
      } else if (current) {
        sol.partition = std::move(*current);
      } else {
        sol.partition = std::move(next.partition);
      }
      sol.eigenpair = std::move(ep);
      return sol;
    }
    previous = std::move(current);
    current = std::move(next.partition);
    rho = std::move(next.density.rho);
    warm = std::move(ep.vector);
  }
  return sol;  // unreachable: the loop returns on its last pass
}

std::size_t MultiStartResult::best_run() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i)
    if (runs[i].eigenpair.eigenvalue < runs[best].eigenpair.eigenvalue) best = i;
  return best;
}

bool same_solution_class(const Solution& a, const Solution& b, std::int32_t node_count) {
  const double ma = a.eigenpair.eigenvalue;
  const double mb = b.eigenpair.eigenvalue;
  if (std::abs(ma - mb) > 1e-8 * std::max(std::abs(ma), std::abs(mb))) return false;
  return static_cast<double>(symmetric_difference(a.partition.low, b.partition.low)) <=
         0.01 * node_count;
}

MultiStartResult multi_start(const Grid& grid, const ProblemSpec& spec,
                             std::span<const std::uint64_t> seeds, const SolverOptions& opts,
                             int threads) {
  if (seeds.empty()) throw InputError("multi_start needs at least one seed");
  const StiffnessMatrix stiffness = assemble_stiffness(grid, OperatorSpec{spec.order});

  MultiStartResult out;
  out.seeds.assign(seeds.begin(), seeds.end());
  out.runs.resize(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        out.runs[i] = minimize(grid, stiffness, spec, InitialDensity::random(seeds[i]), opts);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int workers = std::clamp<int>(threads, 1, static_cast<int>(seeds.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (std::size_t i = 0; i < out.runs.size(); ++i) {
    bool placed = false;
    for (SolutionClass& c : out.classes) {
      if (same_solution_class(out.runs[c.representative], out.runs[i], grid.size())) {
        c.members.push_back(i);
        placed = true;
        break;
      }
    }
    if (!placed) out.classes.push_back({i, {i}});
  }
  return out;
}

}  // namespace cmp
