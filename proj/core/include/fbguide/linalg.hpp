#pragma once

#include <cstddef>
#include <vector>

#include "fbguide/errors.hpp"

namespace fbguide {

using Vec = std::vector<double>;

/// Dense row-major matrix. Everything in this project is small (<= 256x256),
/// so there is no sparse or blocked path.
class Mat {
public:
    Mat() = default;
    Mat(int rows, int cols, double fill = 0.0);

    static Mat identity(int n);
    static Mat diagonal(const Vec& d);
    static Mat from_rows(const std::vector<Vec>& rows);

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

    const std::vector<double>& data() const { return a_; }
    std::vector<double>& data() { return a_; }

    Mat transposed() const;
    Mat operator*(const Mat& rhs) const;
    Vec operator*(const Vec& x) const;
    Mat operator+(const Mat& rhs) const;
    Mat operator-(const Mat& rhs) const;
    Mat scaled(double c) const;

    double frobenius_norm() const;
    double max_abs() const;
    bool is_square() const { return rows_ == cols_ && rows_ > 0; }
    bool is_symmetric(double tol) const;
    bool all_finite() const;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> a_;
};

// Vector helpers shared across modules.
Vec vec_add(const Vec& a, const Vec& b);
Vec vec_sub(const Vec& a, const Vec& b);
Vec vec_scaled(const Vec& a, double c);
double dot(const Vec& a, const Vec& b);
double norm2(const Vec& a);
double norm_inf(const Vec& a);
bool all_finite(const Vec& a);

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Values are sorted ascending; columns of `vectors` are the matching
/// eigenvectors. Iteration is capped at 10^4 sweeps with off-diagonal
/// tolerance 1e-12.
struct SymmetricEigen {
    Vec values;
    Mat vectors;
};
SymmetricEigen jacobi_eigen(const Mat& m, double symmetry_tol = 1e-10);

/// Max |eigenvalue| of a square matrix. Symmetric input goes through the
/// Jacobi solver; general input uses the norm growth rate of repeated
/// squaring, which also handles complex-conjugate dominant pairs.
double spectral_radius(const Mat& m);

/// Smallest eigenvalue of a symmetric matrix (symmetry checked to 1e-10).
double lambda_min_symmetric(const Mat& m);

/// Solves L x = b by Gaussian elimination with partial pivoting.
/// Throws SingularMatrixError when a pivot falls below 1e-12.
Vec solve_linear(const Mat& l, const Vec& b);

/// Rough 2-norm condition estimate for symmetric matrices (|lambda|max/|lambda|min).
double condition_symmetric(const Mat& m);

}  // namespace fbguide
