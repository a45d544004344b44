#include "ouhmm/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ouhmm {

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matrix product: shape mismatch");
    Matrix out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw std::invalid_argument("matrix sum: shape mismatch");
    Matrix out = a;
    for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] += b.a[i];
    return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw std::invalid_argument("matrix difference: shape mismatch");
    Matrix out = a;
    for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] -= b.a[i];
    return out;
}

Matrix operator*(double s, const Matrix& a) {
    Matrix out = a;
    for (double& v : out.a) v *= s;
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
    return out;
}

std::vector<double> matvec(const Matrix& a, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != a.cols) throw std::invalid_argument("matvec: shape mismatch");
    std::vector<double> y(a.rows, 0.0);
    for (int i = 0; i < a.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < a.cols; ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

double norm_1(const Matrix& a) {
    double best = 0.0;
    for (int j = 0; j < a.cols; ++j) {
        double s = 0.0;
        for (int i = 0; i < a.rows; ++i) s += std::abs(a(i, j));
        best = std::max(best, s);
    }
    return best;
}

Matrix lu_solve(Matrix a, Matrix b) {
    if (!a.square() || a.rows != b.rows) throw std::invalid_argument("lu_solve: shape mismatch");
    const int n = a.rows;
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;

    for (int col = 0; col < n; ++col) {
        int pivot = col;
        double best = std::abs(a(col, col));
        for (int r = col + 1; r < n; ++r) {
            if (std::abs(a(r, col)) > best) {
                best = std::abs(a(r, col));
                pivot = r;
            }
        }
        if (best == 0.0) throw std::runtime_error("lu_solve: singular matrix");
        if (pivot != col) {
            for (int j = 0; j < n; ++j) std::swap(a(col, j), a(pivot, j));
            for (int j = 0; j < b.cols; ++j) std::swap(b(col, j), b(pivot, j));
        }
        const double inv = 1.0 / a(col, col);
        for (int r = col + 1; r < n; ++r) {
            const double f = a(r, col) * inv;
            if (f == 0.0) continue;
            a(r, col) = 0.0;
            for (int j = col + 1; j < n; ++j) a(r, j) -= f * a(col, j);
            for (int j = 0; j < b.cols; ++j) b(r, j) -= f * b(col, j);
        }
    }
    // back substitution
    for (int col = n - 1; col >= 0; --col) {
        const double inv = 1.0 / a(col, col);
        for (int j = 0; j < b.cols; ++j) {
            double s = b(col, j);
            for (int k = col + 1; k < n; ++k) s -= a(col, k) * b(k, j);
            b(col, j) = s * inv;
        }
    }
    return b;
}

Matrix expm(const Matrix& a) {
    if (!a.square()) throw std::invalid_argument("expm: matrix must be square");
    const int n = a.rows;
    const int q = 6;  // diagonal Pade order

    int squarings = 0;
    double nrm = norm_1(a);
    if (nrm > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
        squarings = std::max(squarings, 0);
    }
    Matrix x = std::ldexp(1.0, -squarings) * a;

    // Pade coefficients c_k = c_{k-1} * (q - k + 1) / (k * (2q - k + 1))
    double c = 1.0;
    Matrix num = Matrix::identity(n);
    Matrix den = Matrix::identity(n);
    Matrix power = Matrix::identity(n);
    double sign = 1.0;
    for (int k = 1; k <= q; ++k) {
        c *= static_cast<double>(q - k + 1) / (static_cast<double>(k) * (2 * q - k + 1));
        power = power * x;
        sign = -sign;
        num = num + c * power;
        den = den + (sign * c) * power;
    }
    Matrix result = lu_solve(den, num);
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

std::vector<double> sym_eigenvalues(Matrix a) {
    if (!a.square()) throw std::invalid_argument("sym_eigenvalues: matrix must be square");
    const int n = a.rows;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double cth = 1.0 / std::sqrt(t * t + 1.0);
                const double sth = t * cth;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = cth * akp - sth * akq;
                    a(k, q) = sth * akp + cth * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = cth * apk - sth * aqk;
                    a(q, k) = sth * apk + cth * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = a(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

}  // namespace ouhmm
