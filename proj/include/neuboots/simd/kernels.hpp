#pragma once

// Vector kernels behind every dense-layer inner loop.
//
// Each backend provides the same four primitives. The scalar table is the
// reference; SIMD tables are selected at runtime from CPU features and must
// agree with it (axpy/mul bit-exactly, dot up to summation order).
//
// Selection order: NEUBOOTS_SIMD environment variable (scalar | avx2 | neon),
// then the best backend the CPU supports.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace neuboots::simd {

enum class Backend { scalar, avx2, neon };

struct KernelTable {
  Backend backend;
  const char* name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] = fma(alpha, x[i], y[i])
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out[i] = a[i] * b[i]; out may alias a or b.
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  // x[i] *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
};

const KernelTable& scalar_kernels() noexcept;
// nullptr when the backend was not compiled in or the CPU lacks support.
const KernelTable* avx2_kernels() noexcept;
const KernelTable* neon_kernels() noexcept;

std::vector<Backend> available_backends();
const KernelTable* kernels_for(Backend backend) noexcept;

// Table used by the library. Stable for the process unless set_backend is called.
const KernelTable& active() noexcept;
// Returns false (and changes nothing) if the backend is unavailable.
bool set_backend(Backend backend) noexcept;
std::string_view backend_name(Backend backend) noexcept;

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline void mul(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  active().mul(a.data(), b.data(), out.data(), a.size());
}
inline void scale(double alpha, std::span<double> x) { active().scale(alpha, x.data(), x.size()); }

}  // namespace neuboots::simd
