#pragma once

// Dense double-precision inner loops used by the MLP, subspace maps and the
// Kalman covariance updates. Every routine has a scalar reference version;
// AVX2+FMA (x86-64) and NEON (aarch64) variants are selected at runtime.
//
// Matrix arguments are row-major unless noted. A column-major Eigen matrix of
// shape (r x c) is the row-major (c x r) matrix, which is how callers pass
// Eigen storage to these kernels.

#include <cstddef>
#include <span>
#include <string_view>

namespace subkalman::kernels {

enum class Isa { Scalar, Avx2, Neon };

struct KernelTable {
  Isa isa;
  const char* name;
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = A x, A is rows x cols
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // y += A^T x, A is rows x cols, x has `rows` entries, y has `cols`
  void (*gemv_t)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // A += alpha * x y^T, A is rows x cols
  void (*ger)(double alpha, const double* x, std::size_t rows, const double* y, std::size_t cols,
              double* a);
};

const KernelTable& scalar_table();

// Null when the variant was not compiled in or the CPU lacks the extension.
const KernelTable* avx2_table();
const KernelTable* neon_table();

// The table used by the span wrappers below. Chosen once on first use: the best
// supported variant, unless SUBKALMAN_SIMD=scalar|avx2|neon says otherwise.
const KernelTable& active();

// Forces a variant; returns false (and changes nothing) if it is unavailable.
// Not safe to call while other threads are running kernels.
bool select(Isa isa);

std::string_view isa_name(Isa isa);

double dot(std::span<const double> x, std::span<const double> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void gemv(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
          std::span<double> y);
void gemv_t(std::span<const double> a, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y);
void ger(double alpha, std::span<const double> x, std::span<const double> y, std::span<double> a);

}  // namespace subkalman::kernels
