#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "rnnorbit/errors.hpp"

namespace rnnorbit {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles. All reductions over the inner
// dimension run left-to-right so results are reproducible regardless of
// build flags or thread count.
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

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
    std::size_t size() const { return data.size(); }
};

// a (m×k) · b (k×n). Throws ShapeError on mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);
// a (m×k) · bᵀ where b is (n×k). Avoids materializing transposes in the
// training loop.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// aᵀ (k×m) · b (k×n), i.e. a is stored (k×m).
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// c += a·b variants used by gradient accumulation.
void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c);

// y = x·W + b for a single row vector x (dim = W.rows).
Vector affine_row(const Vector& x, const Matrix& w, const Vector& b);

// Numerically stable softmax (max subtraction). Throws ShapeError on an
// empty vector.
Vector softmax(const Vector& v);

// log(Σ exp(v_i)) with max subtraction.
double log_sum_exp(const Vector& v);

// Index of the largest entry; ties resolved to the lowest index.
std::size_t argmax(const Vector& v);

// Counter-based PRNG: the stream is a pure function of (seed, draw
// index), so identical seeds reproduce identical streams on any
// platform. Gaussian draws use Box-Muller with a cached spare.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64();
    double uniform();                    // [0, 1)
    double uniform(double lo, double hi);
    double gaussian(double mean, double std);

    std::uint64_t seed() const { return seed_; }

    // Independent stream for parallel work (trajectory i, etc.).
    static Rng derive(std::uint64_t seed, std::uint64_t stream);

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// dim i.i.d. N(mean, std²) entries. Throws ParamError if std <= 0.
Vector sample_gaussian(Rng& rng, std::size_t dim, double mean, double std);

// Projects the mean-centered point set onto its top-2 principal
// components (covariance + power iteration with deflation). Sign of each
// component is fixed by making its largest-magnitude loading positive.
// Throws DegenerateInputError for < 3 points or a rank-0 set.
std::vector<std::pair<double, double>> pca_2d(const std::vector<Vector>& points);

}  // namespace rnnorbit
