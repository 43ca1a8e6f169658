#include "rnnorbit/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rnnorbit {

namespace {

void check(bool ok, const char* msg) {
    if (!ok) throw ShapeError(msg);
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    check(a.cols == b.rows, "matmul: a.cols != b.rows");
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    check(a.cols == b.cols, "matmul_nt: inner dims differ");
    Matrix c(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
            crow[j] = s;
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    check(a.rows == b.rows, "matmul_tn: inner dims differ");
    Matrix c(a.cols, b.cols);
    matmul_tn_acc(a, b, c);
    return c;
}

void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& c) {
    check(a.cols == b.cols && c.rows == a.rows && c.cols == b.rows,
          "matmul_nt_acc: shape mismatch");
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
            crow[j] += s;
        }
    }
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
    check(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols,
          "matmul_tn_acc: shape mismatch");
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* arow = a.row(k);
        const double* brow = b.row(k);
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double aki = arow[i];
            double* crow = c.row(i);
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
        }
    }
}

Vector affine_row(const Vector& x, const Matrix& w, const Vector& b) {
    check(x.size() == w.rows && b.size() == w.cols, "affine_row: shape mismatch");
    Vector y(b);
    for (std::size_t k = 0; k < w.rows; ++k) {
        const double xk = x[k];
        const double* wrow = w.row(k);
        for (std::size_t j = 0; j < w.cols; ++j) y[j] += xk * wrow[j];
    }
    return y;
}

Vector softmax(const Vector& v) {
    if (v.empty()) throw ShapeError("softmax: empty vector");
    const double m = *std::max_element(v.begin(), v.end());
    Vector out(v.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - m);
        sum += out[i];
    }
    for (double& x : out) x /= sum;
    return out;
}

double log_sum_exp(const Vector& v) {
    if (v.empty()) throw ShapeError("log_sum_exp: empty vector");
    const double m = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += std::exp(x - m);
    return m + std::log(sum);
}

std::size_t argmax(const Vector& v) {
    if (v.empty()) throw ShapeError("argmax: empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

namespace {

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t Rng::next_u64() {
    ++counter_;
    return mix64(seed_ + counter_ * 0x9e3779b97f4a7c15ULL);
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::gaussian(double mean, double std) {
    if (has_spare_) {
        has_spare_ = false;
        return mean + std * spare_;
    }
    // Box-Muller; u clamped away from 0 so log stays finite.
    double u = uniform();
    if (u < 1e-300) u = 1e-300;
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double theta = 2.0 * 3.141592653589793238462643383279502884 * v;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return mean + std * r * std::cos(theta);
}

Rng Rng::derive(std::uint64_t seed, std::uint64_t stream) {
    return Rng(mix64(seed ^ mix64(stream + 0x517cc1b727220a95ULL)));
}

Vector sample_gaussian(Rng& rng, std::size_t dim, double mean, double std) {
    if (std <= 0.0) throw ParamError("sample_gaussian: std must be positive");
    Vector v(dim);
    for (double& x : v) x = rng.gaussian(mean, std);
    return v;
}

namespace {

// Power iteration on a symmetric matrix, deterministic start vector.
// Returns (eigenvalue, eigenvector); vector normalized.
std::pair<double, Vector> top_eigenpair(const Matrix& cov) {
    const std::size_t d = cov.rows;
    Rng rng(0x5ca1ab1eULL);
    Vector v(d);
    double norm = 0.0;
    for (double& x : v) x = rng.gaussian(0.0, 1.0);
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;

    Vector w(d);
    double lambda = 0.0;
    for (int iter = 0; iter < 1000; ++iter) {
        for (std::size_t i = 0; i < d; ++i) {
            const double* crow = cov.row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += crow[j] * v[j];
            w[i] = s;
        }
        double wn = 0.0;
        for (double x : w) wn += x * x;
        wn = std::sqrt(wn);
        if (wn == 0.0) break;  // v in the null space; eigenvalue 0
        double diff = 0.0, diff_neg = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double wi = w[i] / wn;
            diff = std::max(diff, std::abs(wi - v[i]));
            diff_neg = std::max(diff_neg, std::abs(wi + v[i]));
            v[i] = wi;
        }
        lambda = wn;
        if (std::min(diff, diff_neg) < 1e-10) break;
    }
    // Rayleigh quotient for the signed eigenvalue.
    double rq = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double* crow = cov.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += crow[j] * v[j];
        rq += v[i] * s;
    }
    (void)lambda;
    // Sign convention: largest-magnitude loading positive.
    std::size_t imax = 0;
    for (std::size_t i = 1; i < d; ++i)
        if (std::abs(v[i]) > std::abs(v[imax])) imax = i;
    if (v[imax] < 0.0)
        for (double& x : v) x = -x;
    return {rq, v};
}

}  // namespace

std::vector<std::pair<double, double>> pca_2d(const std::vector<Vector>& points) {
    if (points.size() < 3) throw DegenerateInputError("pca_2d: need at least 3 points");
    const std::size_t d = points[0].size();
    if (d < 2) throw DegenerateInputError("pca_2d: dimension must be >= 2");
    for (const Vector& p : points)
        if (p.size() != d) throw ShapeError("pca_2d: inconsistent dimensions");

    const std::size_t n = points.size();
    Vector mean(d, 0.0);
    for (const Vector& p : points)
        for (std::size_t j = 0; j < d; ++j) mean[j] += p[j];
    for (double& m : mean) m /= static_cast<double>(n);

    Matrix centered(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) centered.at(i, j) = points[i][j] - mean[j];

    // Sample covariance (1/(n-1)).
    Matrix cov = matmul_tn(centered, centered);
    const double scale = 1.0 / static_cast<double>(n - 1);
    for (double& x : cov.data) x *= scale;

    double total = 0.0;
    for (std::size_t j = 0; j < d; ++j) total += cov.at(j, j);
    if (total <= 0.0) throw DegenerateInputError("pca_2d: rank-0 point set");

    auto [l1, v1] = top_eigenpair(cov);
    // Deflate and repeat for the second component.
    Matrix cov2 = cov;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) cov2.at(i, j) -= l1 * v1[i] * v1[j];
    auto [l2, v2] = top_eigenpair(cov2);
    (void)l2;

    std::vector<std::pair<double, double>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double a = 0.0, b = 0.0;
        const double* crow = centered.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            a += crow[j] * v1[j];
            b += crow[j] * v2[j];
        }
        out[i] = {a, b};
    }
    return out;
}

}  // namespace rnnorbit
