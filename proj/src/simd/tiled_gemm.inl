// Register-tiled GEMM shared by the SIMD translation units. Included into an
// anonymous namespace after the unit defines its vector traits:
//
//   struct Vt {
//       using T = ...; using V = ...; static constexpr int kWidth = ...;
//       static V zero(); static V set1(T); static V load(const T*); static V load_n(const T*, int);
//       static void store(T*, V); static void store_n(T*, V, int); static V fma(V, V, V);
//       static V add(V, V); static T hsum(V);
//   };
//
// A tile is MR rows by NV vectors; the last vector of a tile may be partial.

template <class Vt, int MR, int NV>
inline void gemm_tile(std::size_t k, const typename Vt::T* a, std::size_t a_rs, std::size_t a_cs,
                      const typename Vt::T* b, std::size_t ldb, typename Vt::T* c, std::size_t ldc, int last_lanes,
                      bool accumulate) {
    using T = typename Vt::T;
    using V = typename Vt::V;
    constexpr int W = Vt::kWidth;
    const bool partial = last_lanes < W;

    V acc[MR][NV];
    for (int r = 0; r < MR; ++r)
        for (int v = 0; v < NV; ++v) acc[r][v] = Vt::zero();

    for (std::size_t p = 0; p < k; ++p) {
        const T* brow = b + p * ldb;
        V bv[NV];
        for (int v = 0; v < NV; ++v) {
            bv[v] = (v == NV - 1 && partial) ? Vt::load_n(brow + v * W, last_lanes) : Vt::load(brow + v * W);
        }
        const T* acol = a + p * a_cs;
        for (int r = 0; r < MR; ++r) {
            const V ar = Vt::set1(acol[r * a_rs]);
            for (int v = 0; v < NV; ++v) acc[r][v] = Vt::fma(ar, bv[v], acc[r][v]);
        }
    }

    for (int r = 0; r < MR; ++r) {
        T* crow = c + r * ldc;
        for (int v = 0; v < NV; ++v) {
            T* dst = crow + v * W;
            if (v == NV - 1 && partial) {
                const V out = accumulate ? Vt::add(Vt::load_n(dst, last_lanes), acc[r][v]) : acc[r][v];
                Vt::store_n(dst, out, last_lanes);
            } else {
                const V out = accumulate ? Vt::add(Vt::load(dst), acc[r][v]) : acc[r][v];
                Vt::store(dst, out);
            }
        }
    }
}

template <class Vt, int MR>
inline void gemm_row_block(std::size_t n, std::size_t k, const typename Vt::T* a, std::size_t a_rs, std::size_t a_cs,
                           const typename Vt::T* b, std::size_t ldb, typename Vt::T* c, std::size_t ldc,
                           bool accumulate) {
    constexpr std::size_t W = Vt::kWidth;
    std::size_t j = 0;
    for (; j + 2 * W <= n; j += 2 * W) {
        gemm_tile<Vt, MR, 2>(k, a, a_rs, a_cs, b + j, ldb, c + j, ldc, static_cast<int>(W), accumulate);
    }
    const std::size_t rest = n - j;
    if (rest > W) {
        gemm_tile<Vt, MR, 2>(k, a, a_rs, a_cs, b + j, ldb, c + j, ldc, static_cast<int>(rest - W), accumulate);
    } else if (rest > 0) {
        gemm_tile<Vt, MR, 1>(k, a, a_rs, a_cs, b + j, ldb, c + j, ldc, static_cast<int>(rest), accumulate);
    }
}

template <class Vt, int MR>
inline void gemm_rows_tail(std::size_t rows, std::size_t n, std::size_t k, const typename Vt::T* a, std::size_t a_rs,
                           std::size_t a_cs, const typename Vt::T* b, std::size_t ldb, typename Vt::T* c,
                           std::size_t ldc, bool accumulate) {
    if constexpr (MR > 1) {
        if (rows == static_cast<std::size_t>(MR - 1)) {
            gemm_row_block<Vt, MR - 1>(n, k, a, a_rs, a_cs, b, ldb, c, ldc, accumulate);
        } else {
            gemm_rows_tail<Vt, MR - 1>(rows, n, k, a, a_rs, a_cs, b, ldb, c, ldc, accumulate);
        }
    }
}

template <class Vt, int MR>
void gemm_tiled(std::size_t m, std::size_t n, std::size_t k, const typename Vt::T* a, std::size_t a_rs,
                std::size_t a_cs, const typename Vt::T* b, std::size_t ldb, typename Vt::T* c, std::size_t ldc,
                bool accumulate) {
    if (m == 0 || n == 0) return;
    std::size_t i = 0;
    for (; i + MR <= m; i += MR) {
        gemm_row_block<Vt, MR>(n, k, a + i * a_rs, a_rs, a_cs, b, ldb, c + i * ldc, ldc, accumulate);
    }
    if (i < m) gemm_rows_tail<Vt, MR>(m - i, n, k, a + i * a_rs, a_rs, a_cs, b, ldb, c + i * ldc, ldc, accumulate);
}

template <class Vt>
typename Vt::T dot_vec(const typename Vt::T* x, const typename Vt::T* y, std::size_t n) {
    constexpr std::size_t W = Vt::kWidth;
    auto s0 = Vt::zero(), s1 = Vt::zero(), s2 = Vt::zero(), s3 = Vt::zero();
    std::size_t i = 0;
    for (; i + 4 * W <= n; i += 4 * W) {
        s0 = Vt::fma(Vt::load(x + i), Vt::load(y + i), s0);
        s1 = Vt::fma(Vt::load(x + i + W), Vt::load(y + i + W), s1);
        s2 = Vt::fma(Vt::load(x + i + 2 * W), Vt::load(y + i + 2 * W), s2);
        s3 = Vt::fma(Vt::load(x + i + 3 * W), Vt::load(y + i + 3 * W), s3);
    }
    for (; i + W <= n; i += W) s0 = Vt::fma(Vt::load(x + i), Vt::load(y + i), s0);
    if (i < n) {
        const int rest = static_cast<int>(n - i);
        s1 = Vt::fma(Vt::load_n(x + i, rest), Vt::load_n(y + i, rest), s1);
    }
    return Vt::hsum(Vt::add(Vt::add(s0, s1), Vt::add(s2, s3)));
}

template <class Vt>
void axpy_vec(std::size_t n, typename Vt::T alpha, const typename Vt::T* x, typename Vt::T* y) {
    constexpr std::size_t W = Vt::kWidth;
    const auto av = Vt::set1(alpha);
    std::size_t i = 0;
    for (; i + W <= n; i += W) Vt::store(y + i, Vt::fma(av, Vt::load(x + i), Vt::load(y + i)));
    if (i < n) {
        const int rest = static_cast<int>(n - i);
        Vt::store_n(y + i, Vt::fma(av, Vt::load_n(x + i, rest), Vt::load_n(y + i, rest)), rest);
    }
}
