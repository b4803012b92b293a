#pragma once

#include <cstddef>

namespace rssgen::la {

/// C (m x n) += A (m x k) . B^T, with B stored row-major as (n x k).
inline void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = b + j * k;
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += ai[t] * bj[t];
            ci[j] += acc;
        }
    }
}

/// C (m x n) += A (m x k) . B (k x n).
inline void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t t = 0; t < k; ++t) {
            const double av = ai[t];
            const double* bt = b + t * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bt[j];
        }
    }
}

/// C (k x n) += A^T . B, with A stored row-major as (m x k), B as (m x n).
inline void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        const double* bi = b + i * n;
        for (std::size_t t = 0; t < k; ++t) {
            const double av = ai[t];
            double* ct = c + t * n;
            for (std::size_t j = 0; j < n; ++j) ct[j] += av * bi[j];
        }
    }
}

} // namespace rssgen::la
