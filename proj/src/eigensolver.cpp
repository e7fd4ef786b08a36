#include "cmp/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "cmp/kernels.hpp"

namespace cmp {

void SolverOptions::validate() const {
  auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!in_unit(cg_rel_tol)) throw InputError("cg_rel_tol must lie in (0, 1)");
  if (!in_unit(eig_rel_tol)) throw InputError("eig_rel_tol must lie in (0, 1)");
  if (max_outer_iterations < 1) throw InputError("max_outer_iterations must be >= 1");
  if (max_alternations < 1) throw InputError("max_alternations must be >= 1");
  if (block_size != 1 && block_size != 2) throw InputError("block_size must be 1 or 2");
}

std::vector<double> solve_spd(const CsrMatrix& a, std::span<const double> b, double tol,
                              std::span<const double> guess, CgStats* stats) {
  const std::size_t n = static_cast<std::size_t>(a.size());
  std::vector<double> x(n, 0.0);
  const double bnorm = kernels::norm2(b);
  if (bnorm == 0.0) {
    if (stats) *stats = {};
    return x;
  }
  std::vector<double> inv_diag = a.diagonal();
  for (double& v : inv_diag) v = 1.0 / v;

  std::vector<double> r(b.begin(), b.end());
  std::vector<double> ap(n);
  if (!guess.empty()) {
    std::copy(guess.begin(), guess.end(), x.begin());
    a.multiply(x, ap);
    kernels::axpy(-1.0, ap, r);
  }
  std::vector<double> z(n);
  kernels::hadamard(inv_diag, r, z);
  std::vector<double> p = z;
  double rz = kernels::dot(r, z);
  const int cap = static_cast<int>(std::min<std::size_t>(10 * n, 2'000'000'000));
  double rnorm = kernels::norm2(r);
  int it = 0;
  while (rnorm > tol * bnorm) {
    if (it >= cap)
      throw SolverError("CG stagnation: relative residual " + std::to_string(rnorm / bnorm) +
                        " after " + std::to_string(it) + " iterations");
    a.multiply(p, ap);
    const double pap = kernels::dot(p, ap);
    if (!(pap > 0.0)) throw SolverError("CG stagnation: matrix is not positive definite");
    const double alpha = rz / pap;
    kernels::axpy(alpha, p, x);
    kernels::axpy(-alpha, ap, r);
    kernels::hadamard(inv_diag, r, z);
    const double rz_next = kernels::dot(r, z);
    kernels::xpay(z, rz_next / rz, p);
    rz = rz_next;
    rnorm = kernels::norm2(r);
    ++it;
  }
  if (stats) *stats = {it, rnorm / bnorm};
  return x;
}

double rayleigh_quotient(const StiffnessMatrix& a, const WeightVector& w,
                         std::span<const double> x) {
  std::vector<double> ax(x.size());
  a.multiply(x, ax);
  return kernels::dot(x, ax) / kernels::wdot(x, w.values, x);
}

namespace {

// Normalizes x to x^T W x = 1 with the largest-magnitude entry positive.
void normalize(std::vector<double>& x, std::span<const double> w) {
  const double s = std::sqrt(kernels::wdot(x, w, x));
  std::size_t imax = 0;
  for (std::size_t i = 1; i < x.size(); ++i)
    if (std::abs(x[i]) > std::abs(x[imax])) imax = i;
  const double f = (x[imax] < 0.0 ? -1.0 : 1.0) / s;
  for (double& v : x) v *= f;
}

double splitmix_unit(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-52 - 1.0;
}

// Makes v W-orthogonal to the W-unit vector u (two passes), then W-unit.
void orthonormalize_against(std::vector<double>& v, std::span<const double> u,
                            std::span<const double> w) {
  for (int pass = 0; pass < 2; ++pass) kernels::axpy(-kernels::wdot(u, w, v), u, v);
  const double s = std::sqrt(kernels::wdot(v, w, v));
  if (!(s > 0.0)) throw SolverError("inverse iteration: block vectors became dependent");
  for (double& x : v) x /= s;
}

}  // namespace

EigenPair first_eigenpair(const StiffnessMatrix& a, const WeightVector& w,
                          const SolverOptions& opts, std::span<const double> start) {
  opts.validate();
  const std::size_t n = static_cast<std::size_t>(a.size());
  if (w.values.size() != n) throw InputError("weight vector size does not match matrix");
  const std::span<const double> wv = w.values;
  const bool block = opts.block_size == 2 && n >= 2;

  std::vector<double> x = start.empty() ? std::vector<double>(n, 1.0)
                                        : std::vector<double>(start.begin(), start.end());
  if (kernels::wdot(x, wv, x) == 0.0) throw InputError("start vector is zero");
  normalize(x, wv);

  std::vector<double> ax(n), wx(n), r(n), guess(n);
  a.multiply(x, ax);
  double mu = kernels::dot(x, ax);

  // Companion vector: fixed pseudo-random entries, W-orthogonal to x.
  std::vector<double> x2;
  double mu2 = 0.0;
  if (block) {
    x2.resize(n);
    std::uint64_t state = 0x9e3779b97f4a7c15ULL;
    for (double& v : x2) v = splitmix_unit(state);
    orthonormalize_against(x2, x, wv);
    std::vector<double> ax2(n);
    a.multiply(x2, ax2);
    mu2 = kernels::dot(x2, ax2);
  }

  EigenPair best;
  best.eigenvalue = mu;
  best.residual = INFINITY;
  std::vector<double> residual_history;

  for (int it = 1; it <= opts.max_outer_iterations; ++it) {
    kernels::hadamard(wv, x, wx);
    for (std::size_t i = 0; i < n; ++i) guess[i] = x[i] / mu;
    std::vector<double> y = solve_spd(a.matrix(), wx, opts.cg_rel_tol, guess);
    if (block) {
      kernels::hadamard(wv, x2, wx);
      for (std::size_t i = 0; i < n; ++i) guess[i] = x2[i] / mu2;
      std::vector<double> y2 = solve_spd(a.matrix(), wx, opts.cg_rel_tol, guess);
      normalize(y, wv);
      orthonormalize_against(y2, y, wv);
      // 2x2 Rayleigh-Ritz on span{y, y2}.
      std::vector<double> ay(n), ay2(n);
      a.multiply(y, ay);
      a.multiply(y2, ay2);
      const double h11 = kernels::dot(y, ay);
      const double h22 = kernels::dot(y2, ay2);
      const double h12 = 0.5 * (kernels::dot(y, ay2) + kernels::dot(y2, ay));
      const double angle = 0.5 * std::atan2(2.0 * h12, h11 - h22);
      double c = std::cos(angle), s = std::sin(angle);
      // The rotation by `angle` maps y to the eigenvector of the larger Ritz value.
      const double top = c * c * h11 + 2.0 * c * s * h12 + s * s * h22;
      const double other = s * s * h11 - 2.0 * c * s * h12 + c * c * h22;
      if (top < other) {
        x2.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          const double u = c * y[i] + s * y2[i];
          const double v = -s * y[i] + c * y2[i];
          y[i] = u;
          x2[i] = v;
        }
        mu2 = other;
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          const double u = -s * y[i] + c * y2[i];
          const double v = c * y[i] + s * y2[i];
          y[i] = u;
          x2[i] = v;
        }
        mu2 = top;
      }
    }
    normalize(y, wv);
    x = std::move(y);

    a.multiply(x, ax);
    const double mu_next = kernels::dot(x, ax);
    kernels::hadamard(wv, x, wx);
    std::copy(ax.begin(), ax.end(), r.begin());
    kernels::axpy(-mu_next, wx, r);
    const double res = kernels::norm2(r) / (std::abs(mu_next) * kernels::norm2(wx));
    const double change = std::abs(mu_next - mu) / std::abs(mu_next);
    mu = mu_next;
    residual_history.push_back(res);

    if (res < best.residual) {
      best.eigenvalue = mu;
      best.vector = x;
      best.residual = res;
      best.iterations = it;
    }
    if (change <= opts.eig_rel_tol && res <= 10.0 * opts.eig_rel_tol) {
      EigenPair out;
      out.vector = std::move(x);
      out.eigenvalue = mu;
      out.residual = res;
      out.iterations = it;
      const std::size_t m = residual_history.size();
      if (m >= 3) {
        const std::size_t k = std::min<std::size_t>(m - 1, 5);
        out.rate_estimate =
            std::pow(residual_history[m - 1] / residual_history[m - 1 - k], 1.0 / k);
      }
      out.gap_warning = out.rate_estimate > 0.999;
      return out;
    }
  }
  best.gap_warning = true;
  throw EigenNonConvergence("inverse iteration did not converge in " +
                                std::to_string(opts.max_outer_iterations) +
                                " iterations (best residual " + std::to_string(best.residual) +
                                ")",
                            std::move(best));
}

}  // namespace cmp
