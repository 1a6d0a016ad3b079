// Reference kernels. Plain loops, one accumulator per output element; the SIMD
// variants are tested against these.

#include "kernel_decls.hpp"

namespace lidkit::simd::detail {
namespace {

template <typename T>
void gemm_ref(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t a_rs, std::size_t a_cs, const T* b,
              std::size_t ldb, T* c, std::size_t ldc, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        T* crow = c + i * ldc;
        for (std::size_t j = 0; j < n; ++j) {
            T sum = 0;
            for (std::size_t p = 0; p < k; ++p) sum += a[i * a_rs + p * a_cs] * b[p * ldb + j];
            crow[j] = accumulate ? crow[j] + sum : sum;
        }
    }
}

template <typename T>
T dot_ref(const T* x, const T* y, std::size_t n) {
    T sum = 0;
    for (std::size_t i = 0; i < n; ++i) sum += x[i] * y[i];
    return sum;
}

template <typename T>
void axpy_ref(std::size_t n, T alpha, const T* x, T* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

#define LIDKIT_DEFINE_SCALAR(suffix, T)                                                                              \
    void gemm_##suffix(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t a_rs, std::size_t a_cs, \
                       const T* b, std::size_t ldb, T* c, std::size_t ldc, bool accumulate) {                       \
        gemm_ref<T>(m, n, k, a, a_rs, a_cs, b, ldb, c, ldc, accumulate);                                            \
    }                                                                                                                \
    T dot_##suffix(const T* x, const T* y, std::size_t n) { return dot_ref<T>(x, y, n); }                           \
    void axpy_##suffix(std::size_t n, T alpha, const T* x, T* y) { axpy_ref<T>(n, alpha, x, y); }

LIDKIT_DEFINE_SCALAR(scalar_f32, float)
LIDKIT_DEFINE_SCALAR(scalar_f64, double)

}  // namespace lidkit::simd::detail
