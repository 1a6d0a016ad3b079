// AVX-512F kernels. Built with -mavx512f -mfma; only reached after runtime
// dispatch has confirmed CPU support.

#include <immintrin.h>

#include "kernel_decls.hpp"

namespace lidkit::simd::detail {
namespace {

struct F32x16 {
    using T = float;
    using V = __m512;
    static constexpr int kWidth = 16;
    static __mmask16 mask(int n) { return static_cast<__mmask16>((1u << n) - 1u); }
    static V zero() { return _mm512_setzero_ps(); }
    static V set1(T x) { return _mm512_set1_ps(x); }
    static V load(const T* p) { return _mm512_loadu_ps(p); }
    static V load_n(const T* p, int n) { return _mm512_maskz_loadu_ps(mask(n), p); }
    static void store(T* p, V v) { _mm512_storeu_ps(p, v); }
    static void store_n(T* p, V v, int n) { _mm512_mask_storeu_ps(p, mask(n), v); }
    static V fma(V a, V b, V c) { return _mm512_fmadd_ps(a, b, c); }
    static V add(V a, V b) { return _mm512_add_ps(a, b); }
    static T hsum(V v) { return _mm512_reduce_add_ps(v); }
};

struct F64x8 {
    using T = double;
    using V = __m512d;
    static constexpr int kWidth = 8;
    static __mmask8 mask(int n) { return static_cast<__mmask8>((1u << n) - 1u); }
    static V zero() { return _mm512_setzero_pd(); }
    static V set1(T x) { return _mm512_set1_pd(x); }
    static V load(const T* p) { return _mm512_loadu_pd(p); }
    static V load_n(const T* p, int n) { return _mm512_maskz_loadu_pd(mask(n), p); }
    static void store(T* p, V v) { _mm512_storeu_pd(p, v); }
    static void store_n(T* p, V v, int n) { _mm512_mask_storeu_pd(p, mask(n), v); }
    static V fma(V a, V b, V c) { return _mm512_fmadd_pd(a, b, c); }
    static V add(V a, V b) { return _mm512_add_pd(a, b); }
    static T hsum(V v) { return _mm512_reduce_add_pd(v); }
};

#include "tiled_gemm.inl"

// 8 x 2 tiles: 16 accumulators out of 32 zmm registers.
constexpr int kRows = 8;

}  // namespace

void gemm_avx512_f32(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t a_rs, std::size_t a_cs,
                     const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate) {
    gemm_tiled<F32x16, kRows>(m, n, k, a, a_rs, a_cs, b, ldb, c, ldc, accumulate);
}
float dot_avx512_f32(const float* x, const float* y, std::size_t n) { return dot_vec<F32x16>(x, y, n); }
void axpy_avx512_f32(std::size_t n, float alpha, const float* x, float* y) { axpy_vec<F32x16>(n, alpha, x, y); }

void gemm_avx512_f64(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t a_rs,
                     std::size_t a_cs, const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
    gemm_tiled<F64x8, kRows>(m, n, k, a, a_rs, a_cs, b, ldb, c, ldc, accumulate);
}
double dot_avx512_f64(const double* x, const double* y, std::size_t n) { return dot_vec<F64x8>(x, y, n); }
void axpy_avx512_f64(std::size_t n, double alpha, const double* x, double* y) { axpy_vec<F64x8>(n, alpha, x, y); }

}  // namespace lidkit::simd::detail
