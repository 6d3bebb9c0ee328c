#include "fbguide/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fbguide {

Mat::Mat(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, fill) {
    if (rows <= 0 || cols <= 0) {
        throw DimensionError("Mat: dimensions must be positive");
    }
}

Mat Mat::identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Mat Mat::diagonal(const Vec& d) {
    Mat m(static_cast<int>(d.size()), static_cast<int>(d.size()));
    for (size_t i = 0; i < d.size(); ++i) m(static_cast<int>(i), static_cast<int>(i)) = d[i];
    return m;
}

Mat Mat::from_rows(const std::vector<Vec>& rows) {
    if (rows.empty()) throw DimensionError("Mat::from_rows: no rows");
    Mat m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (int i = 0; i < m.rows(); ++i) {
        if (rows[i].size() != rows[0].size()) {
            throw DimensionError("Mat::from_rows: ragged rows");
        }
        for (int j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
    }
    return m;
}

Mat Mat::transposed() const {
    Mat t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Mat Mat::operator*(const Mat& rhs) const {
    if (cols_ != rhs.rows_) throw DimensionError("Mat::operator*: inner dimensions disagree");
    Mat out(rows_, rhs.cols_);
    for (int i = 0; i < rows_; ++i) {
        for (int k = 0; k < cols_; ++k) {
            const double v = (*this)(i, k);
            if (v == 0.0) continue;
            for (int j = 0; j < rhs.cols_; ++j) out(i, j) += v * rhs(k, j);
        }
    }
    return out;
}

Vec Mat::operator*(const Vec& x) const {
    if (static_cast<int>(x.size()) != cols_) {
        throw DimensionError("Mat::operator*: vector length disagrees");
    }
    Vec out(rows_, 0.0);
    for (int i = 0; i < rows_; ++i) {
        double acc = 0.0;
        for (int j = 0; j < cols_; ++j) acc += (*this)(i, j) * x[j];
        out[i] = acc;
    }
    return out;
}

Mat Mat::operator+(const Mat& rhs) const {
    if (rows_ != rhs.rows_ || cols_ != rhs.cols_) throw DimensionError("Mat::operator+: shape mismatch");
    Mat out = *this;
    for (size_t i = 0; i < a_.size(); ++i) out.a_[i] += rhs.a_[i];
    return out;
}

Mat Mat::operator-(const Mat& rhs) const {
    if (rows_ != rhs.rows_ || cols_ != rhs.cols_) throw DimensionError("Mat::operator-: shape mismatch");
    Mat out = *this;
    for (size_t i = 0; i < a_.size(); ++i) out.a_[i] -= rhs.a_[i];
    return out;
}

Mat Mat::scaled(double c) const {
    Mat out = *this;
    for (double& v : out.a_) v *= c;
    return out;
}

double Mat::frobenius_norm() const {
    double acc = 0.0;
    for (double v : a_) acc += v * v;
    return std::sqrt(acc);
}

double Mat::max_abs() const {
    double m = 0.0;
    for (double v : a_) m = std::max(m, std::abs(v));
    return m;
}

bool Mat::is_symmetric(double tol) const {
    if (!is_square()) return false;
    for (int i = 0; i < rows_; ++i)
        for (int j = i + 1; j < cols_; ++j)
            if (std::abs((*this)(i, j) - (*this)(j, i)) > tol) return false;
    return true;
}

bool Mat::all_finite() const {
    return std::all_of(a_.begin(), a_.end(), [](double v) { return std::isfinite(v); });
}

Vec vec_add(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw DimensionError("vec_add: length mismatch");
    Vec out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Vec vec_sub(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw DimensionError("vec_sub: length mismatch");
    Vec out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Vec vec_scaled(const Vec& a, double c) {
    Vec out(a);
    for (double& v : out) v *= c;
    return out;
}

double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

double norm_inf(const Vec& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

bool all_finite(const Vec& a) {
    return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

SymmetricEigen jacobi_eigen(const Mat& m, double symmetry_tol) {
    if (!m.is_square()) throw ShapeError("jacobi_eigen: matrix must be square");
    if (!m.is_symmetric(symmetry_tol)) throw ShapeError("jacobi_eigen: matrix is not symmetric");

    const int n = m.rows();
    Mat a = m;
    Mat v = Mat::identity(n);

    constexpr int kMaxSweeps = 10000;
    constexpr double kTol = 1e-12;

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (std::sqrt(2.0 * off) <= kTol * std::max(1.0, a.frobenius_norm())) break;

        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    SymmetricEigen out;
    out.values.resize(n);
    for (int i = 0; i < n; ++i) out.values[i] = a(i, i);

    // Sort ascending, permuting eigenvector columns along.
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](int i, int j) { return out.values[i] < out.values[j]; });
    Vec sorted_vals(n);
    Mat sorted_vecs(n, n);
    for (int col = 0; col < n; ++col) {
        sorted_vals[col] = out.values[idx[col]];
        for (int row = 0; row < n; ++row) sorted_vecs(row, col) = v(row, idx[col]);
    }
    out.values = std::move(sorted_vals);
    out.vectors = std::move(sorted_vecs);
    return out;
}

double spectral_radius(const Mat& m) {
    if (!m.is_square()) throw DimensionError("spectral_radius: matrix must be square");
    if (!m.all_finite()) throw DimensionError("spectral_radius: matrix has non-finite entries");

    if (m.is_symmetric(1e-10)) {
        const auto eig = jacobi_eigen(m);
        double r = 0.0;
        for (double l : eig.values) r = std::max(r, std::abs(l));
        return r;
    }

    // Gelfand: rho(M) = lim ||M^n||^{1/n}. Repeated squaring with running
    // normalization reaches n = 2^50, at which point the polynomial prefactor
    // is flattened far below double precision.
    Mat b = m;
    double log_scale = 0.0;
    constexpr int kSquarings = 50;
    for (int k = 0; k < kSquarings; ++k) {
        const double s = b.frobenius_norm();
        if (s == 0.0) return 0.0;  // nilpotent
        Mat bn = b.scaled(1.0 / s);
        b = bn * bn;
        log_scale = 2.0 * (log_scale + std::log(s));
    }
    const double n = std::pow(2.0, kSquarings);
    return std::exp((log_scale + std::log(b.frobenius_norm())) / n);
}

double lambda_min_symmetric(const Mat& m) {
    if (!m.is_square()) throw ShapeError("lambda_min_symmetric: matrix must be square");
    const auto eig = jacobi_eigen(m);
    return eig.values.front();
}

Vec solve_linear(const Mat& l, const Vec& b) {
    if (!l.is_square()) throw DimensionError("solve_linear: matrix must be square");
    if (static_cast<int>(b.size()) != l.rows()) {
        throw DimensionError("solve_linear: rhs length disagrees");
    }

    const int n = l.rows();
    Mat a = l;
    Vec x = b;

    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        if (std::abs(a(pivot, col)) < 1e-12) {
            throw SingularMatrixError("solve_linear: pivot below 1e-12, matrix is singular");
        }
        if (pivot != col) {
            for (int j = 0; j < n; ++j) std::swap(a(col, j), a(pivot, j));
            std::swap(x[col], x[pivot]);
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            if (f == 0.0) continue;
            for (int j = col; j < n; ++j) a(r, j) -= f * a(col, j);
            x[r] -= f * x[col];
        }
    }
    for (int row = n - 1; row >= 0; --row) {
        double acc = x[row];
        for (int j = row + 1; j < n; ++j) acc -= a(row, j) * x[j];
        x[row] = acc / a(row, row);
    }
    return x;
}

double condition_symmetric(const Mat& m) {
    const auto eig = jacobi_eigen(m);
    double lo = std::abs(eig.values.front()), hi = std::abs(eig.values.front());
    for (double l : eig.values) {
        lo = std::min(lo, std::abs(l));
        hi = std::max(hi, std::abs(l));
    }
    if (lo == 0.0) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

}  // namespace fbguide
