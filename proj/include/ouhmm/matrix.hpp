#ifndef OUHMM_MATRIX_HPP
#define OUHMM_MATRIX_HPP

#include <cstddef>
#include <vector>

namespace ouhmm {

/// Small dense row-major matrix. Everything in this project is M x M with
/// M a handful of regimes, or m x m with m the substep count, so no attempt
/// is made at blocking or expression templates.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, fill) {}

    double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    bool square() const { return rows == cols; }
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

Matrix transpose(const Matrix& a);

/// y = A x for a length-cols vector.
std::vector<double> matvec(const Matrix& a, const std::vector<double>& x);

/// Maximum absolute column sum.
double norm_1(const Matrix& a);

/// Solve A X = B with partial-pivot LU. Throws std::runtime_error on a
/// numerically singular pivot.
Matrix lu_solve(Matrix a, Matrix b);

/// Matrix exponential by scaling and squaring with a diagonal Pade
/// approximant. Intended for intensity-matrix arguments but valid for any
/// square matrix.
Matrix expm(const Matrix& a);

/// Eigenvalues of a symmetric matrix (cyclic Jacobi), ascending order.
std::vector<double> sym_eigenvalues(Matrix a);

}  // namespace ouhmm

#endif
