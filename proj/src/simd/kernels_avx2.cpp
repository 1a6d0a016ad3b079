// AVX2 + FMA kernels. Built with -mavx2 -mfma; only reached after runtime dispatch
// has confirmed CPU support.

#include <immintrin.h>

#include "kernel_decls.hpp"

namespace lidkit::simd::detail {
namespace {

// Lane mask with the first n (0 < n <= 8) 32-bit lanes set.
inline __m256i mask32(int n) {
    const __m256i iota = _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7);
    return _mm256_cmpgt_epi32(_mm256_set1_epi32(n), iota);
}

inline __m256i mask64(int n) {
    const __m256i iota = _mm256_setr_epi64x(0, 1, 2, 3);
    return _mm256_cmpgt_epi64(_mm256_set1_epi64x(n), iota);
}

struct F32x8 {
    using T = float;
    using V = __m256;
    static constexpr int kWidth = 8;
    static V zero() { return _mm256_setzero_ps(); }
    static V set1(T x) { return _mm256_set1_ps(x); }
    static V load(const T* p) { return _mm256_loadu_ps(p); }
    static V load_n(const T* p, int n) { return _mm256_maskload_ps(p, mask32(n)); }
    static void store(T* p, V v) { _mm256_storeu_ps(p, v); }
    static void store_n(T* p, V v, int n) { _mm256_maskstore_ps(p, mask32(n), v); }
    static V fma(V a, V b, V c) { return _mm256_fmadd_ps(a, b, c); }
    static V add(V a, V b) { return _mm256_add_ps(a, b); }
    static T hsum(V v) {
        __m128 s = _mm_add_ps(_mm256_castps256_ps128(v), _mm256_extractf128_ps(v, 1));
        s = _mm_add_ps(s, _mm_movehl_ps(s, s));
        s = _mm_add_ss(s, _mm_shuffle_ps(s, s, 0x55));
        return _mm_cvtss_f32(s);
    }
};

struct F64x4 {
    using T = double;
    using V = __m256d;
    static constexpr int kWidth = 4;
    static V zero() { return _mm256_setzero_pd(); }
    static V set1(T x) { return _mm256_set1_pd(x); }
    static V load(const T* p) { return _mm256_loadu_pd(p); }
    static V load_n(const T* p, int n) { return _mm256_maskload_pd(p, mask64(n)); }
    static void store(T* p, V v) { _mm256_storeu_pd(p, v); }
    static void store_n(T* p, V v, int n) { _mm256_maskstore_pd(p, mask64(n), v); }
    static V fma(V a, V b, V c) { return _mm256_fmadd_pd(a, b, c); }
    static V add(V a, V b) { return _mm256_add_pd(a, b); }
    static T hsum(V v) {
        __m128d s = _mm_add_pd(_mm256_castpd256_pd128(v), _mm256_extractf128_pd(v, 1));
        s = _mm_add_sd(s, _mm_unpackhi_pd(s, s));
        return _mm_cvtsd_f64(s);
    }
};

#include "tiled_gemm.inl"

// 6 x 2 tiles: 12 accumulators + 2 B vectors + 1 broadcast fit the 16 ymm registers.
constexpr int kRows = 6;

}  // namespace

void gemm_avx2_f32(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t a_rs, std::size_t a_cs,
                   const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate) {
    gemm_tiled<F32x8, kRows>(m, n, k, a, a_rs, a_cs, b, ldb, c, ldc, accumulate);
}
float dot_avx2_f32(const float* x, const float* y, std::size_t n) { return dot_vec<F32x8>(x, y, n); }
void axpy_avx2_f32(std::size_t n, float alpha, const float* x, float* y) { axpy_vec<F32x8>(n, alpha, x, y); }

void gemm_avx2_f64(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t a_rs, std::size_t a_cs,
                   const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
    gemm_tiled<F64x4, kRows>(m, n, k, a, a_rs, a_cs, b, ldb, c, ldc, accumulate);
}
double dot_avx2_f64(const double* x, const double* y, std::size_t n) { return dot_vec<F64x4>(x, y, n); }
void axpy_avx2_f64(std::size_t n, double alpha, const double* x, double* y) { axpy_vec<F64x4>(n, alpha, x, y); }

}  // namespace lidkit::simd::detail
