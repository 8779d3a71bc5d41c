#include "interlock/linalg.hpp"

#include "interlock/common.hpp"

namespace interlock::nn {

namespace {

void check(bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("matrix shape mismatch in ") + what);
}

}  // namespace

// c = a * b (+ c when accumulate). ipj loop order keeps the inner loop
// contiguous so the compiler can vectorise it; rows of a are processed four
// at a time to reuse each loaded row of b. Per output row the accumulation
// order over p is the same as the plain triple loop.
void gemm(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
    check(a.cols == b.rows && c.rows == a.rows && c.cols == b.cols, "gemm");
    if (!accumulate) c.zero();
    const std::size_t n = a.rows, k = a.cols, m = b.cols;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const double* a0 = a.row(i);
        const double* a1 = a.row(i + 1);
        const double* a2 = a.row(i + 2);
        const double* a3 = a.row(i + 3);
        double* c0 = c.row(i);
        double* c1 = c.row(i + 1);
        double* c2 = c.row(i + 2);
        double* c3 = c.row(i + 3);
        for (std::size_t p = 0; p < k; ++p) {
            const double v0 = a0[p], v1 = a1[p], v2 = a2[p], v3 = a3[p];
            const double* brow = b.row(p);
            for (std::size_t j = 0; j < m; ++j) {
                const double bv = brow[j];
                c0[j] += v0 * bv;
                c1[j] += v1 * bv;
                c2[j] += v2 * bv;
                c3[j] += v3 * bv;
            }
        }
    }
    for (; i < n; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b.row(p);
            for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
}

// c = a * b^T (+ c when accumulate).
void gemm_abt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
    check(a.cols == b.cols && c.rows == a.rows && c.cols == b.rows, "gemm_abt");
    if (!accumulate) c.zero();
    const std::size_t n = a.rows, k = a.cols, m = b.rows;
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (std::size_t j = 0; j < m; ++j) {
            const double* brow = b.row(j);
            double sum = 0.0;
            for (std::size_t p = 0; p < k; ++p) sum += arow[p] * brow[p];
            crow[j] += sum;
        }
    }
}

// c = a^T * b (+ c when accumulate). Four rows of a/b are folded per sweep
// over c, quartering the traffic through c.
void gemm_atb(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
    check(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols, "gemm_atb");
    if (!accumulate) c.zero();
    const std::size_t n = a.rows, k = a.cols, m = b.cols;
    std::size_t p = 0;
    for (; p + 4 <= n; p += 4) {
        const double* a0 = a.row(p);
        const double* a1 = a.row(p + 1);
        const double* a2 = a.row(p + 2);
        const double* a3 = a.row(p + 3);
        const double* b0 = b.row(p);
        const double* b1 = b.row(p + 1);
        const double* b2 = b.row(p + 2);
        const double* b3 = b.row(p + 3);
        for (std::size_t i = 0; i < k; ++i) {
            const double v0 = a0[i], v1 = a1[i], v2 = a2[i], v3 = a3[i];
            double* crow = c.row(i);
            for (std::size_t j = 0; j < m; ++j)
                crow[j] += v0 * b0[j] + v1 * b1[j] + v2 * b2[j] + v3 * b3[j];
        }
    }
    for (; p < n; ++p) {
        const double* arow = a.row(p);
        const double* brow = b.row(p);
        for (std::size_t i = 0; i < k; ++i) {
            const double av = arow[i];
            double* crow = c.row(i);
            for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace interlock::nn
