#pragma once

// Entry points of the per-ISA translation units. Those units are compiled with
// ISA-specific flags and must not instantiate standard-library templates, so this
// header only uses plain pointers.

#include <cstddef>

#define LIDKIT_DECLARE_KERNELS(suffix, T)                                                                   \
    void gemm_##suffix(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t a_rs,           \
                       std::size_t a_cs, const T* b, std::size_t ldb, T* c, std::size_t ldc, bool accumulate); \
    T dot_##suffix(const T* x, const T* y, std::size_t n);                                                  \
    void axpy_##suffix(std::size_t n, T alpha, const T* x, T* y);

namespace lidkit::simd::detail {

LIDKIT_DECLARE_KERNELS(scalar_f32, float)
LIDKIT_DECLARE_KERNELS(scalar_f64, double)
LIDKIT_DECLARE_KERNELS(avx2_f32, float)
LIDKIT_DECLARE_KERNELS(avx2_f64, double)
LIDKIT_DECLARE_KERNELS(avx512_f32, float)
LIDKIT_DECLARE_KERNELS(avx512_f64, double)

}  // namespace lidkit::simd::detail
