#include "cmp/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace cmp::kernels {

#ifndef CMP_HAVE_AVX2_KERNELS
const KernelTable* avx2_table() { return nullptr; }
#endif

bool avx2_supported() {
#if defined(CMP_HAVE_AVX2_KERNELS) && (defined(__x86_64__) || defined(_M_X64))
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok;
#else
  return false;
#endif
}

namespace {

Backend initial_backend() {
  const char* env = std::getenv("CMP_KERNELS");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return Backend::scalar;
  return avx2_supported() ? Backend::avx2 : Backend::scalar;
}

std::atomic<Backend>& backend_slot() {
  static std::atomic<Backend> slot{initial_backend()};
  return slot;
}

}  // namespace

Backend active_backend() { return backend_slot().load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
  if (backend == Backend::avx2 && !avx2_supported())
    throw std::invalid_argument("AVX2 kernels are not available on this CPU/build");
  backend_slot().store(backend, std::memory_order_relaxed);
}

std::string_view backend_name(Backend backend) {
  return backend == Backend::avx2 ? "avx2" : "scalar";
}

const KernelTable& active_table() {
  return active_backend() == Backend::avx2 ? *avx2_table() : scalar_table();
}

double dot(std::span<const double> x, std::span<const double> y) {
  return active_table().dot(x.data(), y.data(), x.size());
}

double wdot(std::span<const double> x, std::span<const double> w, std::span<const double> y) {
  return active_table().wdot(x.data(), w.data(), y.data(), x.size());
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  active_table().axpy(a, x.data(), y.data(), x.size());
}

void xpay(std::span<const double> x, double a, std::span<double> y) {
  active_table().xpay(x.data(), a, y.data(), x.size());
}

void hadamard(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  active_table().hadamard(a.data(), b.data(), out.data(), a.size());
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

}  // namespace cmp::kernels
