#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "gnclab/errors.hpp"
#include "gnclab/net.hpp"
#include "gnclab/oracle.hpp"
#include "gnclab/rng.hpp"
#include "gnclab/teacher.hpp"

namespace gnclab {

struct GncOptions {
    std::uint64_t max_draws = 100000000ULL;
    int workers = 1;
    double threshold = 0.0;  // accept when empirical error <= threshold
};

struct GncTrace {
    Levels params;
    std::uint64_t t = 0;                  // 1-based index of the accepted draw
    std::uint64_t draws_budget_used = 0;  // equals t on success
    double train_error = 0.0;             // of the accepted parameters
    std::uint64_t seed = 0;
};

namespace detail {

// Parameter draw i of the stream: one counter word per coordinate, so the
// content of draw i is identical under any worker partition.
inline void draw_params(const CounterRng& rng, std::uint64_t i, int q, Levels& lv) {
    const std::uint64_t base = i * static_cast<std::uint64_t>(lv.size());
    for (std::size_t m = 0; m < lv.size(); ++m)
        lv[m] = static_cast<std::uint8_t>(
            rng.index(base + m, static_cast<std::uint64_t>(q)));
}

inline std::int64_t allowed_mistakes(double threshold, std::int64_t n) {
    return static_cast<std::int64_t>(
        std::floor(threshold * static_cast<double>(n) + 1e-9));
}

}  // namespace detail

// Guess & Check: draw parameter configurations i.i.d. from the uniform prior
// and return the first one whose empirical error is within threshold
// (zero threshold = exact interpolation). Workers scan round-robin residue
// classes of the draw index space; the result is the minimum accepted index,
// which is invariant to the worker count.
inline GncTrace gnc(const Arch& A, const QuantGrid& g, const LabeledSet& s,
                    std::uint64_t seed, std::uint64_t stream,
                    const GncOptions& opt = {}) {
    require(s.n() >= 1, "gnc: empty training set");
    require(opt.max_draws >= 1, "gnc: draw budget must be positive");
    require(opt.threshold >= 0 && opt.threshold < 1, "gnc: threshold must lie in [0,1)");
    const CounterRng rng(seed, stream);
    const int W = std::max(1, std::min(opt.workers, 64));
    const std::int64_t allowed = detail::allowed_mistakes(opt.threshold, s.n());
    std::atomic<std::uint64_t> best{UINT64_MAX};

    auto scan = [&](int w) {
        Levels lv(static_cast<std::size_t>(A.params));
        Workspace ws;
        for (std::uint64_t i = static_cast<std::uint64_t>(w); i < opt.max_draws;
             i += static_cast<std::uint64_t>(W)) {
            if (i > best.load(std::memory_order_relaxed)) return;
            detail::draw_params(rng, i, g.size(), lv);
            std::int64_t wrong = 0;
            for (std::int64_t n = 0; n < s.n(); ++n) {
                if (label(A, g, lv, s.x.row(n), ws) != s.y[static_cast<std::size_t>(n)] &&
                    ++wrong > allowed)
                    break;
            }
            if (wrong <= allowed) {
                std::uint64_t cur = best.load(std::memory_order_relaxed);
                while (i < cur &&
                       !best.compare_exchange_weak(cur, i, std::memory_order_relaxed)) {
                }
                return;
            }
        }
    };

    if (W == 1) {
        scan(0);
    } else {
        std::vector<std::thread> threads;
        for (int w = 0; w < W; ++w) threads.emplace_back(scan, w);
        for (auto& t : threads) t.join();
    }

    const std::uint64_t winner = best.load();
    if (winner == UINT64_MAX)
        throw BudgetError("gnc: draw budget exhausted before acceptance");
    GncTrace trace;
    trace.params.resize(static_cast<std::size_t>(A.params));
    detail::draw_params(rng, winner, g.size(), trace.params);
    trace.t = winner + 1;
    trace.draws_budget_used = trace.t;
    {
        Workspace ws;
        trace.train_error = empirical_error(A, g, trace.params, s, ws);
    }
    trace.seed = seed;
    return trace;
}

struct McEstimate {
    std::uint64_t successes = 0;
    std::uint64_t draws = 0;
    double estimate = 0.0;
    Interval ci;
    bool exact_check = true;  // false when TE status came from a probe
};

// Monte-Carlo estimate of the interpolation probability over a fixed number
// of prior draws, with an exact binomial confidence interval.
inline McEstimate estimate_phat(const Arch& A, const QuantGrid& g, const LabeledSet& s,
                                std::uint64_t n_draws, std::uint64_t seed,
                                std::uint64_t stream, int workers = 1,
                                double delta = 0.05) {
    require(s.n() >= 1, "estimate_phat: empty training set");
    require(n_draws >= 1, "estimate_phat: need at least one draw");
    const CounterRng rng(seed, stream);
    std::vector<std::uint64_t> counts(64, 0);
    detail::parallel_blocks(n_draws, workers, [&](int w, std::uint64_t begin, std::uint64_t end) {
        Levels lv(static_cast<std::size_t>(A.params));
        Workspace ws;
        std::uint64_t local = 0;
        for (std::uint64_t i = begin; i < end; ++i) {
            detail::draw_params(rng, i, g.size(), lv);
            if (matches_labels(A, g, lv, s.x, s.y.data(), ws)) ++local;
        }
        counts[static_cast<std::size_t>(w)] = local;
    });
    McEstimate e;
    e.draws = n_draws;
    for (auto c : counts) e.successes += c;
    e.estimate = static_cast<double>(e.successes) / static_cast<double>(n_draws);
    e.ci = clopper_pearson(e.successes, n_draws, delta);
    return e;
}

// Monte-Carlo estimate of the teacher-equivalence probability. Exact table
// comparison on enumerable domains; otherwise TE status is judged on a fixed
// shared probe set and the estimate is an upper-sided proxy.
inline McEstimate estimate_ptilde(const Arch& A, const QuantGrid& g,
                                  const Arch& teacherArch, const Levels& teacher,
                                  const InputDomain& domain, std::uint64_t n_draws,
                                  std::uint64_t seed, std::uint64_t stream,
                                  int workers = 1, double delta = 0.05,
                                  std::int64_t probe_budget = 10000) {
    require(n_draws >= 1, "estimate_ptilde: need at least one draw");
    Matrix pts;
    if (domain.enumerable()) {
        pts = domain.all_points();
    } else {
        pts = Matrix(probe_budget, domain.dim());
        CounterRng prng(seed, stream ^ 0x70726f6265ULL);
        for (std::int64_t i = 0; i < probe_budget; ++i)
            domain.sample(prng, static_cast<std::uint64_t>(i), pts.row(i));
    }
    std::vector<std::int8_t> target(static_cast<std::size_t>(pts.rows));
    {
        Workspace ws;
        label_table(teacherArch, g, teacher, pts, target.data(), ws);
    }
    const CounterRng rng(seed, stream);
    std::vector<std::uint64_t> counts(64, 0);
    detail::parallel_blocks(n_draws, workers, [&](int w, std::uint64_t begin, std::uint64_t end) {
        Levels lv(static_cast<std::size_t>(A.params));
        Workspace ws;
        std::uint64_t local = 0;
        for (std::uint64_t i = begin; i < end; ++i) {
            detail::draw_params(rng, i, g.size(), lv);
            if (matches_labels(A, g, lv, pts, target.data(), ws)) ++local;
        }
        counts[static_cast<std::size_t>(w)] = local;
    });
    McEstimate e;
    e.draws = n_draws;
    for (auto c : counts) e.successes += c;
    e.estimate = static_cast<double>(e.successes) / static_cast<double>(n_draws);
    e.ci = clopper_pearson(e.successes, n_draws, delta);
    e.exact_check = domain.enumerable();
    return e;
}

struct BadVolumeEstimate {
    std::uint64_t bad = 0;
    std::uint64_t runs = 0;
    double fraction = 0.0;
    Interval ci;
};

// Fraction of posterior samples (independent G&C runs, one stream per run)
// whose population error is at least eps.
inline BadVolumeEstimate estimate_bad_volume(
    const Arch& A, const QuantGrid& g, const LabeledSet& s, const Arch& teacherArch,
    const Levels& teacher, const InputDomain& domain, double eps, std::uint64_t runs,
    std::uint64_t seed, std::uint64_t base_stream, const GncOptions& opt = {},
    std::int64_t probe_budget = 10000, double delta = 0.05) {
    require(runs >= 1, "estimate_bad_volume: need at least one run");
    require(eps >= 0 && eps <= 1, "estimate_bad_volume: eps must lie in [0,1]");
    std::vector<std::uint64_t> counts(64, 0);
    GncOptions inner = opt;
    inner.workers = 1;
    detail::parallel_blocks(runs, opt.workers, [&](int w, std::uint64_t begin, std::uint64_t end) {
        std::uint64_t local = 0;
        for (std::uint64_t r = begin; r < end; ++r) {
            const GncTrace trace = gnc(A, g, s, seed, base_stream + 1 + r, inner);
            double err;
            if (domain.enumerable()) {
                err = population_error_exact(A, g, trace.params, teacherArch, teacher,
                                             domain);
            } else {
                err = population_error_mc(A, g, trace.params, teacherArch, teacher,
                                          domain, probe_budget, seed,
                                          base_stream ^ (0xe44ULL + r))
                          .estimate;
            }
            if (err >= eps) ++local;
        }
        counts[static_cast<std::size_t>(w)] = local;
    });
    BadVolumeEstimate e;
    e.runs = runs;
    for (auto c : counts) e.bad += c;
    e.fraction = static_cast<double>(e.bad) / static_cast<double>(runs);
    e.ci = clopper_pearson(e.bad, runs, delta);
    return e;
}

}  // namespace gnclab
