#pragma once

#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "gnclab/bounds.hpp"
#include "gnclab/errors.hpp"
#include "gnclab/net.hpp"
#include "gnclab/rng.hpp"

namespace gnclab {

// Two-layer LReLU network with spherical weights: unit-norm first-layer rows
// and a unit head vector.
struct ContTwoLayer {
    Matrix w1;
    std::vector<double> z;
    double rho = 0.0;
};

inline ContTwoLayer sample_cont_prior(int d0, int d1, StreamRng& rng, double rho = 0.0) {
    require(d0 >= 1 && d1 >= 1, "sample_cont_prior: dimensions must be positive");
    ContTwoLayer t;
    t.rho = rho;
    t.w1 = Matrix(d1, d0);
    for (int i = 0; i < d1; ++i) {
        double* row = t.w1.row(i);
        double norm2 = 0.0;
        for (int j = 0; j < d0; ++j) {
            row[j] = rng.normal();
            norm2 += row[j] * row[j];
        }
        if (norm2 == 0.0) throw InvariantError("sample_cont_prior: zero-norm row draw");
        const double inv = 1.0 / std::sqrt(norm2);
        for (int j = 0; j < d0; ++j) row[j] *= inv;
    }
    t.z.resize(static_cast<std::size_t>(d1));
    double norm2 = 0.0;
    for (auto& v : t.z) {
        v = rng.normal();
        norm2 += v * v;
    }
    if (norm2 == 0.0) throw InvariantError("sample_cont_prior: zero-norm head draw");
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& v : t.z) v *= inv;
    return t;
}

namespace detail {

inline double row_norm(const double* v, std::int64_t n) {
    double s = 0.0;
    for (std::int64_t i = 0; i < n; ++i) s += v[i] * v[i];
    return std::sqrt(s);
}

inline double dot(const double* a, const double* b, std::int64_t n) {
    double s = 0.0;
    for (std::int64_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

}  // namespace detail

// First-layer angular margin: arcsin of the smallest normalized distance of
// any data point from any teacher hyperplane. A point exactly on a
// hyperplane yields 0.
inline double first_layer_margin(const Matrix& x, const ContTwoLayer& teacher) {
    require(x.rows >= 1, "first_layer_margin: empty point set");
    require(x.cols == teacher.w1.cols, "first_layer_margin: dimension mismatch");
    double min_sin = 1.0;
    for (std::int64_t n = 0; n < x.rows; ++n) {
        const double xn = detail::row_norm(x.row(n), x.cols);
        require(xn > 0, "first_layer_margin: zero-norm input point");
        for (std::int64_t i = 0; i < teacher.w1.rows; ++i) {
            const double wn = detail::row_norm(teacher.w1.row(i), x.cols);
            require(wn > 0, "first_layer_margin: zero-norm teacher row");
            const double s = std::fabs(detail::dot(x.row(n), teacher.w1.row(i), x.cols)) /
                             (xn * wn);
            if (s < min_sin) min_sin = s;
        }
    }
    return std::asin(std::min(1.0, min_sin));
}

// Second-layer angular margin: arcsin of the smallest normalized teacher
// logit, where the normalization carries the student width d1 and the LReLU
// slope. The ratio is clamped to [0,1] before arcsin.
inline double second_layer_margin(const Matrix& x, const ContTwoLayer& teacher,
                                  std::int64_t d1, double rho) {
    require(x.rows >= 1, "second_layer_margin: empty point set");
    require(x.cols == teacher.w1.cols, "second_layer_margin: dimension mismatch");
    require(d1 >= 1, "second_layer_margin: student width must be positive");
    const std::int64_t units = teacher.w1.rows;
    require(static_cast<std::int64_t>(teacher.z.size()) == units,
            "second_layer_margin: head length mismatch");
    double zn = detail::row_norm(teacher.z.data(), units);
    require(zn > 0, "second_layer_margin: zero-norm head");
    const double denom_scale =
        std::sqrt(static_cast<double>(d1) * (1.0 + rho * rho));
    double min_ratio = 1.0;
    for (std::int64_t n = 0; n < x.rows; ++n) {
        const double xn = detail::row_norm(x.row(n), x.cols);
        require(xn > 0, "second_layer_margin: zero-norm input point");
        double logit = 0.0;
        for (std::int64_t i = 0; i < units; ++i) {
            const double pre = detail::dot(x.row(n), teacher.w1.row(i), x.cols);
            logit += teacher.z[static_cast<std::size_t>(i)] *
                     (pre > 0 ? pre : rho * pre);
        }
        const double ratio = std::fabs(logit) / (xn * zn * denom_scale);
        if (ratio < min_ratio) min_ratio = ratio;
    }
    return std::asin(std::max(0.0, std::min(1.0, min_ratio)));
}

// True iff the first d1_star student rows replicate the teacher rows'
// activation sign pattern on every point (sign(0) = +1).
inline bool activation_match_check(const Matrix& w_student, const Matrix& w_teacher,
                                   const Matrix& x, std::int64_t d1_star) {
    require(w_student.cols == x.cols && w_teacher.cols == x.cols,
            "activation_match_check: dimension mismatch");
    require(d1_star <= w_student.rows && d1_star <= w_teacher.rows,
            "activation_match_check: row count below d1_star");
    for (std::int64_t i = 0; i < d1_star; ++i)
        for (std::int64_t n = 0; n < x.rows; ++n) {
            const double a = detail::dot(w_student.row(i), x.row(n), x.cols);
            const double b = detail::dot(w_teacher.row(i), x.row(n), x.cols);
            if ((a >= 0) != (b >= 0)) return false;
        }
    return true;
}

// Log of the interpolation-probability lower bound for the continuous
// two-layer family at the given margins. The LReLU slope does not enter the
// closed form (it is absorbed by the second-layer margin definition); the
// parameter is accepted for interface symmetry.
inline double phat_lower_bound_cont(double alpha, double beta, std::int64_t d0,
                                    std::int64_t d1, std::int64_t d1_star,
                                    double rho = 0.0) {
    (void)rho;
    return -chat_cont_exact(alpha, beta, d0, d1, d1_star);
}

struct MarginTrial {
    double alpha = 0.0;
    double beta = 0.0;
    double log_ratio = 0.0;
    bool degenerate = false;
};

struct MarginSummary {
    std::vector<MarginTrial> trials;
    std::uint64_t degenerate_count = 0;
    std::uint64_t beta_gt_alpha = 0;
    double fraction_beta_gt_alpha = 0.0;  // over non-degenerate trials
};

// Margin-density study: per trial, Gaussian data, spherical teacher
// (d1_star active rows), margins per the definitions above, ln(beta/alpha).
// Trials run in parallel with per-trial streams; aggregation is
// order-independent.
inline MarginSummary margin_density_experiment(int d0, std::int64_t d1, int d1_star,
                                               double rho, std::int64_t n,
                                               int trials, std::uint64_t seed,
                                               int workers = 1) {
    require(trials >= 1, "margin_density_experiment: need at least one trial");
    require(n >= 1, "margin_density_experiment: need at least one point");
    require(d0 >= 1 && d1 >= 1 && d1_star >= 1 && d1_star <= d1,
            "margin_density_experiment: invalid dimensions");
    MarginSummary out;
    out.trials.resize(static_cast<std::size_t>(trials));
    const int w = std::max(1, std::min(workers, 64));
    std::vector<std::thread> pool;
    for (int t = 0; t < w; ++t) {
        pool.emplace_back([&, t] {
            for (int trial = t; trial < trials; trial += w) {
                StreamRng rng(seed, 0x6d617267ULL + static_cast<std::uint64_t>(trial));
                Matrix x(n, d0);
                for (std::int64_t i = 0; i < n; ++i) {
                    double* row = x.row(i);
                    for (int j = 0; j < d0; ++j) row[j] = rng.normal();
                }
                const ContTwoLayer teacher = sample_cont_prior(d0, d1_star, rng, rho);
                MarginTrial& res = out.trials[static_cast<std::size_t>(trial)];
                res.alpha = first_layer_margin(x, teacher);
                res.beta = second_layer_margin(x, teacher, d1, rho);
                if (res.alpha == 0.0) {
                    res.degenerate = true;
                } else {
                    res.log_ratio = std::log(res.beta / res.alpha);
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    std::uint64_t live = 0;
    for (const auto& tr : out.trials) {
        if (tr.degenerate) {
            ++out.degenerate_count;
            continue;
        }
        ++live;
        if (tr.beta > tr.alpha) ++out.beta_gt_alpha;
    }
    out.fraction_beta_gt_alpha =
        live ? static_cast<double>(out.beta_gt_alpha) / static_cast<double>(live) : 0.0;
    return out;
}

}  // namespace gnclab
