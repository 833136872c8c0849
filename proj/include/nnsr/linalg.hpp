#pragma once

// Dense LU helpers templated on the scalar so the same code runs in double and
// in multiprecision. Matrices are row-major std::vector of size n*n.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace nnsr {

template <class Real>
struct SignedLogDet {
    Real log_abs{};  // log|det|, meaningful only when sign != 0
    int sign = 0;    // 0 for an exactly singular matrix
};

// det = sign * exp(log_abs). Rows and columns are equilibrated to unit max-norm
// first, then factored with partial pivoting; scale factors enter log_abs.
template <class Real>
SignedLogDet<Real> signed_log_det(std::vector<Real> a, std::size_t n) {
    using std::abs;
    using std::log;
    SignedLogDet<Real> out;
    out.log_abs = Real(0);
    out.sign = 1;
    if (n == 0) return out;
    for (std::size_t i = 0; i < n; ++i) {
        Real mx(0);
        for (std::size_t j = 0; j < n; ++j) mx = abs(a[i * n + j]) > mx ? abs(a[i * n + j]) : mx;
        if (mx == 0) return {Real(0), 0};
        for (std::size_t j = 0; j < n; ++j) a[i * n + j] /= mx;
        out.log_abs += log(mx);
    }
    for (std::size_t j = 0; j < n; ++j) {
        Real mx(0);
        for (std::size_t i = 0; i < n; ++i) mx = abs(a[i * n + j]) > mx ? abs(a[i * n + j]) : mx;
        if (mx == 0) return {Real(0), 0};
        for (std::size_t i = 0; i < n; ++i) a[i * n + j] /= mx;
        out.log_abs += log(mx);
    }
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        Real best = abs(a[k * n + k]);
        for (std::size_t i = k + 1; i < n; ++i) {
            if (abs(a[i * n + k]) > best) {
                best = abs(a[i * n + k]);
                p = i;
            }
        }
        if (best == 0) return {Real(0), 0};
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[p * n + j]);
            out.sign = -out.sign;
        }
        const Real piv = a[k * n + k];
        if (piv < 0) out.sign = -out.sign;
        out.log_abs += log(abs(piv));
        for (std::size_t i = k + 1; i < n; ++i) {
            const Real f = a[i * n + k] / piv;
            if (f == 0) continue;
            for (std::size_t j = k + 1; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
        }
    }
    return out;
}

// Solves A X = B for n x n A and n x nrhs B (row-major), partial pivoting.
template <class Real>
std::vector<Real> lu_solve(std::vector<Real> a, std::vector<Real> b, std::size_t n, std::size_t nrhs) {
    using std::abs;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        Real best = abs(a[k * n + k]);
        for (std::size_t i = k + 1; i < n; ++i) {
            if (abs(a[i * n + k]) > best) {
                best = abs(a[i * n + k]);
                p = i;
            }
        }
        if (best == 0) throw std::runtime_error("singular matrix in lu_solve");
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[p * n + j]);
            for (std::size_t j = 0; j < nrhs; ++j) std::swap(b[k * nrhs + j], b[p * nrhs + j]);
        }
        const Real piv = a[k * n + k];
        for (std::size_t i = k + 1; i < n; ++i) {
            const Real f = a[i * n + k] / piv;
            if (f == 0) continue;
            for (std::size_t j = k + 1; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
            for (std::size_t j = 0; j < nrhs; ++j) b[i * nrhs + j] -= f * b[k * nrhs + j];
        }
    }
    for (std::size_t kk = n; kk-- > 0;) {
        for (std::size_t j = 0; j < nrhs; ++j) {
            Real s = b[kk * nrhs + j];
            for (std::size_t c = kk + 1; c < n; ++c) s -= a[kk * n + c] * b[c * nrhs + j];
            b[kk * nrhs + j] = s / a[kk * n + kk];
        }
    }
    return b;
}

// Minor of an n x (n+1) row-major matrix with column `drop` removed.
template <class Real>
std::vector<Real> drop_column(const std::vector<Real>& a, std::size_t rows, std::size_t cols, std::size_t drop) {
    std::vector<Real> out;
    out.reserve(rows * (cols - 1));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            if (j != drop) out.push_back(a[i * cols + j]);
    return out;
}

}  // namespace nnsr
