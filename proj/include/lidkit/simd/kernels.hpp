#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace lidkit::simd {

enum class Isa { kScalar, kAvx2, kAvx512 };

std::string_view isa_name(Isa isa);

// Dense kernels used by the model's inner loops. Every ISA variant computes the
// same mathematical result; only the summation order (and hence rounding) may
// differ from the scalar reference.
template <typename T>
struct Kernels {
    Isa isa;

    // C[M x N] (+)= A[M x K] * B[K x N] with strided operands:
    //   A(i, k) = a[i * a_rs + k * a_cs]
    //   B(k, j) = b[k * ldb + j]
    //   C(i, j) = c[i * ldc + j]
    // With accumulate, rows of C are updated one after another, so C rows may
    // overlap in memory (used to scatter overlapping convolution windows).
    void (*gemm)(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t a_rs, std::size_t a_cs,
                 const T* b, std::size_t ldb, T* c, std::size_t ldc, bool accumulate);

    T (*dot)(const T* x, const T* y, std::size_t n);

    // y += alpha * x
    void (*axpy)(std::size_t n, T alpha, const T* x, T* y);
};

/// Kernels selected for this process: the widest ISA the CPU supports, unless the
/// LIDKIT_SIMD environment variable (scalar|avx2|avx512) asks for a narrower one.
template <typename T>
const Kernels<T>& active();

/// Kernels for a specific ISA, or nullptr when the build or the CPU lacks it.
template <typename T>
const Kernels<T>* for_isa(Isa isa);

Isa active_isa();
std::vector<Isa> available_isas();

}  // namespace lidkit::simd
