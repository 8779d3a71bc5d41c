#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace interlock::nn {

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
    std::size_t size() const { return data.size(); }
    void zero() { std::fill(data.begin(), data.end(), 0.0); }
};

// c (+)= a * b            [m x k][k x n]
void gemm(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
// c (+)= a * b^T          [m x k][n x k]
void gemm_abt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);
// c (+)= a^T * b          [k x m][k x n]
void gemm_atb(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false);

}  // namespace interlock::nn
