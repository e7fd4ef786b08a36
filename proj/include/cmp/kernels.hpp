#pragma once

// Dense vector and CSR kernels used by the iterative solvers.
//
// Every kernel has a scalar reference implementation. On x86-64 builds an
// AVX2/FMA variant is compiled into a separate translation unit and selected
// at runtime when the CPU reports support. Setting CMP_KERNELS=scalar in the
// environment pins the scalar path.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace cmp::kernels {

enum class Backend { scalar, avx2 };

struct KernelTable {
  double (*dot)(const double* x, const double* y, std::size_t n);
  // sum_i x_i * w_i * y_i
  double (*wdot)(const double* x, const double* w, const double* y, std::size_t n);
  // y <- y + a x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y <- x + a y
  void (*xpay)(const double* x, double a, double* y, std::size_t n);
  // out <- a .* b
  void (*hadamard)(const double* a, const double* b, double* out, std::size_t n);
  // y <- M x for a CSR matrix with `rows` rows
  void (*spmv)(const std::int32_t* row_ptr, const std::int32_t* col, const double* val,
               const double* x, double* y, std::size_t rows);
};

const KernelTable& scalar_table();

// nullptr when the AVX2 variant was not compiled in.
const KernelTable* avx2_table();

bool avx2_supported();

Backend active_backend();

// Throws std::invalid_argument when the backend is not usable on this CPU.
void set_backend(Backend backend);

std::string_view backend_name(Backend backend);

const KernelTable& active_table();

double dot(std::span<const double> x, std::span<const double> y);
double wdot(std::span<const double> x, std::span<const double> w, std::span<const double> y);
void axpy(double a, std::span<const double> x, std::span<double> y);
void xpay(std::span<const double> x, double a, std::span<double> y);
void hadamard(std::span<const double> a, std::span<const double> b, std::span<double> out);
double norm2(std::span<const double> x);

// RAII guard used by tests and benchmarks to switch backends temporarily.
class ScopedBackend {
 public:
  explicit ScopedBackend(Backend backend) : previous_(active_backend()) { set_backend(backend); }
  ~ScopedBackend() { set_backend(previous_); }
  ScopedBackend(const ScopedBackend&) = delete;
  ScopedBackend& operator=(const ScopedBackend&) = delete;

 private:
  Backend previous_;
};

}  // namespace cmp::kernels
