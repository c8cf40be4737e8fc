#pragma once

// Small dense linear algebra used by the QP and SQP solvers. Everything is
// double precision and row-major; problems here are tiny (p + N + 1 at most),
// so no BLAS, no expression templates.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace attain {

using Vec = std::vector<double>;

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    double& operator()(std::size_t r, std::size_t c) {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    std::span<const double> row(std::size_t r) const {
        return {data_.data() + r * cols_, cols_};
    }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vec data_;
};

namespace linalg {

inline double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double two_norm(std::span<const double> v) {
    return std::sqrt(dot(v, v));
}

/// y = A x
inline Vec matvec(const Matrix& a, std::span<const double> x) {
    assert(x.size() == a.cols());
    Vec y(a.rows(), 0.0);
    for (std::size_t r = 0; r < a.rows(); ++r) y[r] = dot(a.row(r), x);
    return y;
}

/// y = A^T x
inline Vec matvec_transposed(const Matrix& a, std::span<const double> x) {
    assert(x.size() == a.rows());
    Vec y(a.cols(), 0.0);
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) y[c] += a(r, c) * x[r];
    return y;
}

inline void axpy(double alpha, std::span<const double> x, Vec& y) {
    assert(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vec scaled(std::span<const double> x, double alpha) {
    Vec y(x.begin(), x.end());
    for (double& v : y) v *= alpha;
    return y;
}

inline Vec subtract(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    Vec y(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) y[i] = a[i] - b[i];
    return y;
}

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
/// Returns nullopt when the matrix is not numerically positive definite.
inline std::optional<Matrix> cholesky(const Matrix& a) {
    assert(a.rows() == a.cols());
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0) || !std::isfinite(d)) return std::nullopt;
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

/// Solves L L^T x = b given the lower Cholesky factor.
inline Vec cholesky_solve(const Matrix& l, std::span<const double> b) {
    const std::size_t n = l.rows();
    assert(b.size() == n);
    Vec x(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) x[i] -= l(i, k) * x[k];
        x[i] /= l(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t k = ii + 1; k < n; ++k) x[ii] -= l(k, ii) * x[k];
        x[ii] /= l(ii, ii);
    }
    return x;
}

struct CholeskyWithShift {
    Matrix factor;
    double shift = 0.0;  // tau added to the diagonal before factorization succeeded
};

/// Cholesky with escalating diagonal regularization: if A fails to factor,
/// A + tau I is retried with tau = tau0, 10*tau0, ... until success.
inline std::optional<CholeskyWithShift> cholesky_regularized(const Matrix& a,
                                                             double tau0 = 1e-8,
                                                             int max_escalations = 30) {
    if (auto l = cholesky(a)) return CholeskyWithShift{std::move(*l), 0.0};
    double tau = tau0;
    for (int k = 0; k < max_escalations; ++k, tau *= 10.0) {
        Matrix shifted = a;
        for (std::size_t i = 0; i < a.rows(); ++i) shifted(i, i) += tau;
        if (auto l = cholesky(shifted)) return CholeskyWithShift{std::move(*l), tau};
    }
    return std::nullopt;
}

}  // namespace linalg
}  // namespace attain
