#include <cstdlib>
#include <iostream>
#include <string>

#include "kernel_decls.hpp"
#include "lidkit/simd/kernels.hpp"

namespace lidkit::simd {
namespace {

using namespace detail;

constexpr Kernels<float> kScalarF32{Isa::kScalar, gemm_scalar_f32, dot_scalar_f32, axpy_scalar_f32};
constexpr Kernels<double> kScalarF64{Isa::kScalar, gemm_scalar_f64, dot_scalar_f64, axpy_scalar_f64};
#if defined(LIDKIT_HAVE_X86_SIMD)
constexpr Kernels<float> kAvx2F32{Isa::kAvx2, gemm_avx2_f32, dot_avx2_f32, axpy_avx2_f32};
constexpr Kernels<double> kAvx2F64{Isa::kAvx2, gemm_avx2_f64, dot_avx2_f64, axpy_avx2_f64};
constexpr Kernels<float> kAvx512F32{Isa::kAvx512, gemm_avx512_f32, dot_avx512_f32, axpy_avx512_f32};
constexpr Kernels<double> kAvx512F64{Isa::kAvx512, gemm_avx512_f64, dot_avx512_f64, axpy_avx512_f64};
#endif

bool cpu_supports(Isa isa) {
    switch (isa) {
        case Isa::kScalar:
            return true;
#if defined(LIDKIT_HAVE_X86_SIMD)
        case Isa::kAvx2:
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
        case Isa::kAvx512:
            return __builtin_cpu_supports("avx512f") && __builtin_cpu_supports("fma");
#endif
        default:
            return false;
    }
}

Isa pick_isa() {
    Isa best = Isa::kScalar;
    for (Isa isa : available_isas()) best = isa;
    const char* env = std::getenv("LIDKIT_SIMD");
    if (env == nullptr || *env == '\0') return best;
    const std::string want(env);
    for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kAvx512}) {
        if (want == isa_name(isa)) {
            if (cpu_supports(isa)) return isa;
            std::cerr << "lidkit: LIDKIT_SIMD=" << want << " not supported here, using " << isa_name(best) << "\n";
            return best;
        }
    }
    std::cerr << "lidkit: unknown LIDKIT_SIMD=" << want << ", using " << isa_name(best) << "\n";
    return best;
}

}  // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::kScalar:
            return "scalar";
        case Isa::kAvx2:
            return "avx2";
        case Isa::kAvx512:
            return "avx512";
    }
    return "unknown";
}

std::vector<Isa> available_isas() {
    std::vector<Isa> out;
    for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kAvx512}) {
        if (cpu_supports(isa)) out.push_back(isa);
    }
    return out;
}

Isa active_isa() {
    static const Isa isa = pick_isa();
    return isa;
}

template <>
const Kernels<float>* for_isa<float>(Isa isa) {
    if (!cpu_supports(isa)) return nullptr;
    switch (isa) {
        case Isa::kScalar:
            return &kScalarF32;
#if defined(LIDKIT_HAVE_X86_SIMD)
        case Isa::kAvx2:
            return &kAvx2F32;
        case Isa::kAvx512:
            return &kAvx512F32;
#endif
        default:
            return nullptr;
    }
}

template <>
const Kernels<double>* for_isa<double>(Isa isa) {
    if (!cpu_supports(isa)) return nullptr;
    switch (isa) {
        case Isa::kScalar:
            return &kScalarF64;
#if defined(LIDKIT_HAVE_X86_SIMD)
        case Isa::kAvx2:
            return &kAvx2F64;
        case Isa::kAvx512:
            return &kAvx512F64;
#endif
        default:
            return nullptr;
    }
}

template <>
const Kernels<float>& active<float>() {
    static const Kernels<float>& k = *for_isa<float>(active_isa());
    return k;
}

template <>
const Kernels<double>& active<double>() {
    static const Kernels<double>& k = *for_isa<double>(active_isa());
    return k;
}

}  // namespace lidkit::simd
