#include <atomic>
#include <cstdlib>
#include <string_view>

#include "neuboots/simd/kernels.hpp"

namespace neuboots::simd {

namespace detail {
#if defined(NEUBOOTS_HAVE_AVX2)
extern const KernelTable kAvx2;
#endif
#if defined(NEUBOOTS_HAVE_NEON)
extern const KernelTable kNeon;
#endif
}  // namespace detail

const KernelTable* avx2_kernels() noexcept {
#if defined(NEUBOOTS_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &detail::kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_kernels() noexcept {
#if defined(NEUBOOTS_HAVE_NEON)
  return &detail::kNeon;
#else
  return nullptr;
#endif
}

const KernelTable* kernels_for(Backend backend) noexcept {
  switch (backend) {
    case Backend::scalar:
      return &scalar_kernels();
    case Backend::avx2:
      return avx2_kernels();
    case Backend::neon:
      return neon_kernels();
  }
  return nullptr;
}

std::vector<Backend> available_backends() {
  std::vector<Backend> out{Backend::scalar};
  if (avx2_kernels() != nullptr) out.push_back(Backend::avx2);
  if (neon_kernels() != nullptr) out.push_back(Backend::neon);
  return out;
}

std::string_view backend_name(Backend backend) noexcept {
  switch (backend) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
    case Backend::neon:
      return "neon";
  }
  return "unknown";
}

namespace {

const KernelTable* select_default() noexcept {
  if (const char* env = std::getenv("NEUBOOTS_SIMD")) {
    const std::string_view want(env);
    for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon}) {
      if (want == backend_name(b)) {
        if (const KernelTable* t = kernels_for(b)) return t;
      }
    }
  }
  if (const KernelTable* t = avx2_kernels()) return t;
  if (const KernelTable* t = neon_kernels()) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& active_slot() noexcept {
  static std::atomic<const KernelTable*> slot{select_default()};
  return slot;
}

}  // namespace

const KernelTable& active() noexcept { return *active_slot().load(std::memory_order_acquire); }

bool set_backend(Backend backend) noexcept {
  const KernelTable* table = kernels_for(backend);
  if (table == nullptr) return false;
  active_slot().store(table, std::memory_order_release);
  return true;
}

}  // namespace neuboots::simd
