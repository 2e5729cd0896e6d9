#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "gnclab/errors.hpp"
#include "gnclab/special.hpp"

namespace gnclab {

inline constexpr double kLn2 = 0.69314718055994530941723212145818;

namespace detail {

inline void check_fc_pair(const std::vector<int>& ds, const std::vector<int>& d) {
    require(ds.size() == d.size() && d.size() >= 2,
            "parameter-count exponent: width vectors must have equal length >= 2");
    require(ds[0] == d[0], "parameter-count exponent: input widths must match");
    require(ds.back() == d.back(), "parameter-count exponent: output widths must match");
    for (std::size_t l = 0; l < d.size(); ++l) {
        require(ds[l] >= 1 && d[l] >= 1, "parameter-count exponent: widths must be positive");
        require(ds[l] <= d[l], "parameter-count exponent: teacher exceeds student width");
    }
}

inline std::vector<int> conv_spatial(const std::vector<int>& kernels, int s0) {
    require(s0 >= 1, "parameter-count exponent: input length must be positive");
    std::vector<int> s{s0};
    for (int k : kernels) {
        require(k >= 1, "parameter-count exponent: kernel sizes must be positive");
        const int next = s.back() - k + 1;
        require(next >= 1, "parameter-count exponent: kernel exceeds input length");
        s.push_back(next);
    }
    return s;
}

inline void check_conv_pair(const std::vector<int>& cs, const std::vector<int>& c,
                            const std::vector<int>& kernels) {
    require(cs.size() == c.size() && c.size() >= 2,
            "parameter-count exponent: channel vectors must have equal length >= 2");
    require(kernels.size() + 1 == c.size(),
            "parameter-count exponent: kernel list must match layer count");
    require(cs[0] == c[0], "parameter-count exponent: input channels must match");
    for (std::size_t l = 0; l < c.size(); ++l) {
        require(cs[l] >= 1 && c[l] >= 1,
                "parameter-count exponent: channel counts must be positive");
        require(cs[l] <= c[l], "parameter-count exponent: teacher exceeds student channels");
    }
}

}  // namespace detail

// Constrained-coordinate exponents of the embedding event, per family.
// p_tilde >= Q^(-pc) and the effective complexity is pc * ln Q.

inline std::int64_t pc_fc(const std::vector<int>& d_star, const std::vector<int>& d) {
    detail::check_fc_pair(d_star, d);
    std::int64_t pc = 0;
    for (std::size_t l = 1; l < d.size(); ++l)
        pc += static_cast<std::int64_t>(d_star[l]) * d[l - 1] + d_star[l];
    return pc;
}

inline std::int64_t pc_sfc(const std::vector<int>& d_star, const std::vector<int>& d) {
    detail::check_fc_pair(d_star, d);
    std::int64_t pc = 0;
    for (std::size_t l = 1; l < d.size(); ++l)
        pc += static_cast<std::int64_t>(d_star[l]) * d_star[l - 1] + 2LL * d[l];
    return pc;
}

inline std::int64_t pc_cnn(const std::vector<int>& c_star, const std::vector<int>& c,
                           const std::vector<int>& kernels, int s0) {
    detail::check_conv_pair(c_star, c, kernels);
    const std::vector<int> s = detail::conv_spatial(kernels, s0);
    std::int64_t pc = static_cast<std::int64_t>(c.back()) * s.back() + 1;
    for (std::size_t l = 1; l < c.size(); ++l)
        pc += static_cast<std::int64_t>(kernels[l - 1]) * c_star[l] * c[l - 1] + c_star[l];
    return pc;
}

inline std::int64_t pc_scn(const std::vector<int>& c_star, const std::vector<int>& c,
                           const std::vector<int>& kernels, int s0) {
    detail::check_conv_pair(c_star, c, kernels);
    const std::vector<int> s = detail::conv_spatial(kernels, s0);
    std::int64_t pc = static_cast<std::int64_t>(c_star.back()) * s.back() + 1;
    for (std::size_t l = 1; l < c.size(); ++l)
        pc += static_cast<std::int64_t>(kernels[l - 1]) * c_star[l] * c_star[l - 1] +
              2LL * c[l];
    return pc;
}

inline double check_q(int q) {
    require(q >= 2, "complexity: grid cardinality must be at least 2");
    return std::log(static_cast<double>(q));
}

inline double chat_fc(const std::vector<int>& ds, const std::vector<int>& d, int q) {
    return static_cast<double>(pc_fc(ds, d)) * check_q(q);
}
inline double chat_sfc(const std::vector<int>& ds, const std::vector<int>& d, int q) {
    return static_cast<double>(pc_sfc(ds, d)) * check_q(q);
}
inline double chat_cnn(const std::vector<int>& cs, const std::vector<int>& c,
                       const std::vector<int>& kernels, int s0, int q) {
    return static_cast<double>(pc_cnn(cs, c, kernels, s0)) * check_q(q);
}
inline double chat_scn(const std::vector<int>& cs, const std::vector<int>& c,
                       const std::vector<int>& kernels, int s0, int q) {
    return static_cast<double>(pc_scn(cs, c, kernels, s0)) * check_q(q);
}

namespace detail {

inline void check_chat(double c_hat) {
    require(std::isfinite(c_hat) && c_hat > kLn2,
            "sample bound: complexity must exceed ln 2");
}
inline void check_eps01(double eps) {
    require(eps > 0 && eps <= 1, "sample bound: eps must lie in (0,1]");
}
inline void check_delta_fifth(double delta) {
    require(delta > 0 && delta < 0.2, "sample bound: delta must lie in (0,1/5)");
}
inline std::uint64_t ceil_count(double v) {
    require(std::isfinite(v) && v >= 0, "sample bound: nonfinite count");
    return static_cast<std::uint64_t>(std::ceil(v));
}

}  // namespace detail

// Interpolation sample bound: N >= (c_hat + 3 ln(2/delta)) / eps gives
// population error below eps with probability at least 1 - delta.
inline std::uint64_t n_lemma1(double c_hat, double eps, double delta) {
    detail::check_chat(c_hat);
    detail::check_eps01(eps);
    detail::check_delta_fifth(delta);
    return detail::ceil_count((c_hat + 3.0 * std::log(2.0 / delta)) / eps);
}

// Posterior-volume decay variant (larger constant).
inline std::uint64_t n_volume(double c_hat, double eps, double delta) {
    detail::check_chat(c_hat);
    detail::check_eps01(eps);
    detail::check_delta_fifth(delta);
    return detail::ceil_count((c_hat + 6.0 * std::log(2.0 / delta)) / eps);
}

struct VolumeDelta {
    double delta = 0.0;
    bool informative = false;  // false when the bound gives delta >= 1
};

// Bad-interpolator volume bound at sample size n: delta = 2 exp(-(eps n - c_hat)/6).
inline VolumeDelta bad_volume_delta(double c_hat, double eps, std::uint64_t n) {
    require(std::isfinite(c_hat) && c_hat > 0, "bad_volume_delta: complexity must be positive");
    detail::check_eps01(eps);
    require(n >= 1, "bad_volume_delta: n must be positive");
    VolumeDelta v;
    v.delta = 2.0 * std::exp(-(eps * static_cast<double>(n) - c_hat) / 6.0);
    v.informative = v.delta < 1.0;
    return v;
}

// Non-interpolation (threshold-accept) variant: quadratic eps dependence.
inline std::uint64_t n_noninterp(double c_hat, double eps, double delta) {
    detail::check_chat(c_hat);
    detail::check_eps01(eps);
    detail::check_delta_fifth(delta);
    return detail::ceil_count((c_hat + 3.0 * std::log(2.0 / delta)) / (2.0 * eps * eps));
}

// Refined split-confidence variant: delta_s for the dataset event, delta_h
// for the hypothesis draw.
inline std::uint64_t n_refined(double c_hat, double eps, double delta_s, double delta_h) {
    detail::check_chat(c_hat);
    detail::check_eps01(eps);
    require(delta_s > 0 && delta_s < 1, "n_refined: delta_s must lie in (0,1)");
    detail::check_delta_fifth(delta_h);
    return detail::ceil_count(
        (c_hat + std::log(1.0 / delta_s) + 2.0 * std::log(std::log(1.0 / delta_h))) / eps);
}

// Non-uniform (data-dependent) epsilon at sample size n, from the observed
// interpolation probability.
inline double eps_nonuniform(double phat, std::uint64_t n, double delta, double eta) {
    require(phat > 0 && phat < 0.5, "eps_nonuniform: phat must lie in (0,1/2)");
    require(n >= 1, "eps_nonuniform: n must be positive");
    require(delta > 0 && delta < 1, "eps_nonuniform: delta must lie in (0,1)");
    require(eta > 0 && eta < 1, "eps_nonuniform: eta must lie in (0,1)");
    const double l2e = std::log(2.0 / eta);
    return (std::log(1.0 / phat) + std::log(4.0 / delta) + std::log(l2e) +
            2.0 * std::log(std::log(l2e / phat + 1.0))) /
           static_cast<double>(n);
}

// Prior-cardinality variant of the data-dependent epsilon.
inline double eps_pscard(double phat, std::uint64_t n, double delta) {
    require(phat > 0 && phat < 0.5, "eps_pscard: phat must lie in (0,1/2)");
    require(n >= 1, "eps_pscard: n must be positive");
    require(delta > 0, "eps_pscard: delta must be positive");
    return (std::log(1.0 / phat) + 4.0 * std::log(8.0 / delta) +
            2.0 * std::log(std::log(1.0 / phat))) /
           static_cast<double>(n);
}

// PAC-Bayes-with-Markov comparison bound (constants set to 1).
inline std::uint64_t n_pacbayes_markov(double c_hat, double eps, double delta) {
    require(std::isfinite(c_hat) && c_hat > 0, "n_pacbayes_markov: complexity must be positive");
    detail::check_eps01(eps);
    require(delta > 0 && delta < 1, "n_pacbayes_markov: delta must lie in (0,1)");
    return detail::ceil_count((c_hat + std::log(1.0 / delta)) / eps);
}

// Complexity of the sparsest-interpolator rule with support m_star.
inline double chat_sparse(std::int64_t m_star, std::int64_t d0, int q) {
    require(m_star >= 1, "chat_sparse: support must be positive");
    require(d0 >= 1, "chat_sparse: input dimension must be positive");
    check_q(q);
    return 2.0 * static_cast<double>(m_star) *
               std::log(static_cast<double>(m_star + d0)) +
           static_cast<double>(m_star) * std::log(static_cast<double>(q));
}

// Sample bound for the sparsest-interpolator rule.
inline std::uint64_t n_sparse(std::int64_t m_star, std::int64_t d0, int q, double eps,
                              double delta) {
    detail::check_eps01(eps);
    require(delta > 0 && delta < 1, "n_sparse: delta must lie in (0,1)");
    return detail::ceil_count(
        (chat_sparse(m_star, d0, q) + std::log(1.0 / delta)) / eps);
}

namespace detail {

inline void check_margins(double alpha, double beta) {
    require(alpha > 0 && beta > alpha && beta < kPi / 2,
            "continuous complexity: need 0 < alpha < beta < pi/2");
}

}  // namespace detail

// Effective second-layer cone half-angle.
inline double gamma_angle(double alpha, double beta) {
    detail::check_margins(alpha, beta);
    return std::acos(std::cos(beta) / std::cos(alpha));
}

// Exact log-volume complexity of the continuous interpolation event:
// -ln[ 2^(-d1s) * (sin g)^(d1-1) / ((d1-1) B(1/2,(d1-1)/2))
//      * ( (sin a)^(d0-1) / ((d0-1) B(1/2,(d0-1)/2)) )^(d1s) ].
inline double chat_cont_exact(double alpha, double beta, std::int64_t d0,
                              std::int64_t d1, std::int64_t d1_star) {
    detail::check_margins(alpha, beta);
    require(d0 >= 2 && d1 >= 2, "continuous complexity: need d0 >= 2 and d1 >= 2");
    require(d1_star >= 1 && d1_star <= d1,
            "continuous complexity: need 1 <= d1_star <= d1");
    const double gm = gamma_angle(alpha, beta);
    const double ln_sin_g = std::log(std::sin(gm));
    const double ln_sin_a = std::log(std::sin(alpha));
    const double head = static_cast<double>(d1 - 1) * ln_sin_g -
                        std::log(static_cast<double>(d1 - 1)) -
                        log_beta(0.5, static_cast<double>(d1 - 1) / 2.0);
    const double per_unit = static_cast<double>(d0 - 1) * ln_sin_a -
                            std::log(static_cast<double>(d0 - 1)) -
                            log_beta(0.5, static_cast<double>(d0 - 1) / 2.0);
    return static_cast<double>(d1_star) * kLn2 - head -
           static_cast<double>(d1_star) * per_unit;
}

// Leading-terms view of the same complexity; the additive
// O(d1_star + ln d1) remainder is not modeled.
inline double chat_cont_asymptotic(double alpha, double beta, std::int64_t d0,
                                   std::int64_t d1, std::int64_t d1_star) {
    detail::check_margins(alpha, beta);
    require(d0 >= 2 && d1 >= 2, "continuous complexity: need d0 >= 2 and d1 >= 2");
    require(d1_star >= 1 && d1_star <= d1,
            "continuous complexity: need 1 <= d1_star <= d1");
    const double gm = gamma_angle(alpha, beta);
    return -static_cast<double>(d1_star) * static_cast<double>(d0) *
               std::log(std::sin(alpha)) -
           static_cast<double>(d1) * std::log(std::sin(gm)) +
           0.5 * static_cast<double>(d1_star) * std::log(static_cast<double>(d0));
}

struct TeacherScaleResult {
    double alpha = 0.0;
    std::int64_t pc = 0;
    double chat = 0.0;
    std::int64_t teacher_params = 0;
    double target_pc = 0.0;
    bool capped = false;  // true when even the full net fits the budget
};

// Largest channel-scaled teacher (c*_l = ceil(alpha c_l), c*_0 = c_0) whose
// channel-scaled parameter-count exponent meets the sample budget
// eps * n >= pc * ln q + 3 ln(2/delta). The exponent is a step function of
// alpha; bisection returns the threshold scale.
inline TeacherScaleResult solve_teacher_scale(const std::vector<int>& channels,
                                              const std::vector<int>& kernels,
                                              int head_positions, std::uint64_t n,
                                              double eps, double delta, int q) {
    require(channels.size() >= 2, "solve_teacher_scale: need input and one layer");
    require(kernels.size() + 1 == channels.size(),
            "solve_teacher_scale: kernel list must match layer count");
    require(head_positions >= 1, "solve_teacher_scale: head positions must be positive");
    detail::check_eps01(eps);
    detail::check_delta_fifth(delta);
    const double lnq = check_q(q);
    const double target =
        (static_cast<double>(n) * eps - 3.0 * std::log(2.0 / delta)) / lnq;
    require(target > 0, "solve_teacher_scale: sample budget below the bound overhead");

    auto scaled_channels = [&](double alpha) {
        std::vector<std::int64_t> cs{channels[0]};
        for (std::size_t l = 1; l < channels.size(); ++l)
            cs.push_back(static_cast<std::int64_t>(
                std::ceil(alpha * static_cast<double>(channels[l]))));
        return cs;
    };
    auto pc_at = [&](double alpha) {
        const auto cs = scaled_channels(alpha);
        std::int64_t w = 0;
        for (std::size_t l = 1; l < channels.size(); ++l)
            w += static_cast<std::int64_t>(kernels[l - 1]) * cs[l] * cs[l - 1];
        std::int64_t sums = 0;
        for (std::size_t l = 1; l < channels.size(); ++l) sums += channels[l];
        return cs.back() * head_positions + 1 + w + 2 * sums;
    };
    auto params_at = [&](double alpha) {
        const auto cs = scaled_channels(alpha);
        std::int64_t w = 0, sums = 0;
        for (std::size_t l = 1; l < channels.size(); ++l) {
            w += static_cast<std::int64_t>(kernels[l - 1]) * cs[l] * cs[l - 1];
            sums += cs[l];
        }
        return w + 2 * sums + cs.back() * head_positions + 1;
    };

    TeacherScaleResult r;
    r.target_pc = target;
    if (static_cast<double>(pc_at(1.0)) < target) {
        r.alpha = 1.0;
        r.capped = true;
    } else {
        double lo = 1e-9, hi = 1.0;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (static_cast<double>(pc_at(mid)) < target)
                lo = mid;
            else
                hi = mid;
        }
        r.alpha = hi;
    }
    r.pc = pc_at(r.alpha);
    r.chat = static_cast<double>(r.pc) * lnq;
    r.teacher_params = params_at(r.alpha);
    return r;
}

}  // namespace gnclab
