#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <map>
#include <thread>
#include <vector>

#include "gnclab/errors.hpp"
#include "gnclab/net.hpp"
#include "gnclab/teacher.hpp"

namespace gnclab {

struct EnumBudget {
    std::uint64_t max_configs = 100000000ULL;
};

// Number of parameter configurations Q^M, guarded by the enumeration budget.
inline std::uint64_t enum_total(const Arch& A, const QuantGrid& g,
                                const EnumBudget& budget = {}) {
    unsigned __int128 total = 1;
    for (std::int64_t m = 0; m < A.params; ++m) {
        total *= static_cast<unsigned>(g.size());
        if (total > budget.max_configs)
            throw BudgetError("enumeration: configuration space exceeds budget");
    }
    return static_cast<std::uint64_t>(total);
}

namespace detail {

// Mixed-radix counter over level indices: parameter 0 is the least
// significant digit, so config index = sum over k of level_k * Q^k.
inline void seek_config(Levels& lv, std::uint64_t index, int q) {
    for (auto& level : lv) {
        level = static_cast<std::uint8_t>(index % static_cast<std::uint64_t>(q));
        index /= static_cast<std::uint64_t>(q);
    }
}

inline void next_config(Levels& lv, int q) {
    for (auto& level : lv) {
        if (++level < q) return;
        level = 0;
    }
}

// Runs fn(worker, begin, end) over a block partition of [0, total).
template <typename Fn>
void parallel_blocks(std::uint64_t total, int workers, Fn&& fn) {
    require(workers >= 1, "oracle: worker count must be positive");
    const int w = static_cast<int>(std::min<std::uint64_t>(
        std::min(static_cast<std::uint64_t>(workers), std::uint64_t{64}),
        total ? total : 1));
    const std::uint64_t block = (total + w - 1) / w;
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errs(static_cast<std::size_t>(w));
    for (int i = 0; i < w; ++i) {
        const std::uint64_t begin = block * static_cast<std::uint64_t>(i);
        const std::uint64_t end = std::min(total, begin + block);
        threads.emplace_back([&, i, begin, end] {
            try {
                fn(i, begin, end);
            } catch (...) {
                errs[static_cast<std::size_t>(i)] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

struct OracleCount {
    std::uint64_t count = 0;
    std::uint64_t total = 0;
    double probability = 0.0;
};

// Exact probability that a uniform prior draw is teacher-equivalent:
// the configuration's label table over the full enumerable domain matches
// the teacher's.
inline OracleCount exact_ptilde(const Arch& A, const QuantGrid& g,
                                const Arch& teacherArch, const Levels& teacher,
                                const InputDomain& domain,
                                const EnumBudget& budget = {}, int workers = 1) {
    require(domain.enumerable(), "exact_ptilde: domain not enumerable");
    const std::uint64_t total = enum_total(A, g, budget);
    const Matrix pts = domain.all_points();
    std::vector<std::int8_t> target(static_cast<std::size_t>(pts.rows));
    {
        Workspace ws;
        label_table(teacherArch, g, teacher, pts, target.data(), ws);
    }
    std::vector<std::uint64_t> counts(64, 0);
    detail::parallel_blocks(total, workers, [&](int w, std::uint64_t begin, std::uint64_t end) {
        Levels lv(static_cast<std::size_t>(A.params));
        detail::seek_config(lv, begin, g.size());
        Workspace ws;
        std::uint64_t local = 0;
        for (std::uint64_t i = begin; i < end; ++i) {
            if (matches_labels(A, g, lv, pts, target.data(), ws)) ++local;
            detail::next_config(lv, g.size());
        }
        counts[static_cast<std::size_t>(w)] = local;
    });
    OracleCount r;
    r.total = total;
    for (auto c : counts) r.count += c;
    r.probability = static_cast<double>(r.count) / static_cast<double>(total);
    return r;
}

// Exact probability that a uniform prior draw interpolates the training set.
inline OracleCount exact_phat(const Arch& A, const QuantGrid& g, const LabeledSet& s,
                              const EnumBudget& budget = {}, int workers = 1) {
    require(s.n() >= 1, "exact_phat: empty training set");
    const std::uint64_t total = enum_total(A, g, budget);
    std::vector<std::uint64_t> counts(64, 0);
    detail::parallel_blocks(total, workers, [&](int w, std::uint64_t begin, std::uint64_t end) {
        Levels lv(static_cast<std::size_t>(A.params));
        detail::seek_config(lv, begin, g.size());
        Workspace ws;
        std::uint64_t local = 0;
        for (std::uint64_t i = begin; i < end; ++i) {
            if (matches_labels(A, g, lv, s.x, s.y.data(), ws)) ++local;
            detail::next_config(lv, g.size());
        }
        counts[static_cast<std::size_t>(w)] = local;
    });
    OracleCount r;
    r.total = total;
    for (auto c : counts) r.count += c;
    r.probability = static_cast<double>(r.count) / static_cast<double>(total);
    return r;
}

// Label table of a hypothesis on a fixed point set.
using FunctionTable = std::vector<std::int8_t>;

struct PosteriorTables {
    std::map<FunctionTable, std::uint64_t> counts;
    std::uint64_t interpolators = 0;
    std::uint64_t total = 0;
};

// Exact posterior over function tables: enumerate interpolators of s and
// bucket them by their label table on eval_points. Pass the training inputs
// to recover the (degenerate) trainset-restricted view, or a full domain for
// the informative posterior.
inline PosteriorTables exact_posterior(const Arch& A, const QuantGrid& g,
                                       const LabeledSet& s, const Matrix& eval_points,
                                       const EnumBudget& budget = {}, int workers = 1) {
    require(s.n() >= 1, "exact_posterior: empty training set");
    require(eval_points.rows >= 1, "exact_posterior: empty evaluation point set");
    const std::uint64_t total = enum_total(A, g, budget);
    std::vector<std::map<FunctionTable, std::uint64_t>> maps(64);
    detail::parallel_blocks(total, workers, [&](int w, std::uint64_t begin, std::uint64_t end) {
        Levels lv(static_cast<std::size_t>(A.params));
        detail::seek_config(lv, begin, g.size());
        Workspace ws;
        FunctionTable table(static_cast<std::size_t>(eval_points.rows));
        auto& local = maps[static_cast<std::size_t>(w)];
        for (std::uint64_t i = begin; i < end; ++i) {
            if (matches_labels(A, g, lv, s.x, s.y.data(), ws)) {
                label_table(A, g, lv, eval_points, table.data(), ws);
                ++local[table];
            }
            detail::next_config(lv, g.size());
        }
    });
    PosteriorTables r;
    r.total = total;
    for (auto& m : maps)
        for (auto& [table, count] : m) {
            r.counts[table] += count;
            r.interpolators += count;
        }
    return r;
}

// Posterior mass of interpolators whose exact population error (disagreement
// with the teacher over the enumerable domain) is at least eps.
inline double exact_bad_volume(const Arch& A, const QuantGrid& g, const LabeledSet& s,
                               const Arch& teacherArch, const Levels& teacher,
                               const InputDomain& domain, double eps,
                               const EnumBudget& budget = {}, int workers = 1) {
    require(domain.enumerable(), "exact_bad_volume: domain not enumerable");
    require(eps >= 0 && eps <= 1, "exact_bad_volume: eps must lie in [0,1]");
    const std::uint64_t total = enum_total(A, g, budget);
    const Matrix pts = domain.all_points();
    std::vector<std::int8_t> target(static_cast<std::size_t>(pts.rows));
    {
        Workspace ws;
        label_table(teacherArch, g, teacher, pts, target.data(), ws);
    }
    std::vector<std::uint64_t> interp(64, 0), bad(64, 0);
    detail::parallel_blocks(total, workers, [&](int w, std::uint64_t begin, std::uint64_t end) {
        Levels lv(static_cast<std::size_t>(A.params));
        detail::seek_config(lv, begin, g.size());
        Workspace ws;
        FunctionTable table(static_cast<std::size_t>(pts.rows));
        for (std::uint64_t i = begin; i < end; ++i) {
            if (matches_labels(A, g, lv, s.x, s.y.data(), ws)) {
                ++interp[static_cast<std::size_t>(w)];
                label_table(A, g, lv, pts, table.data(), ws);
                std::int64_t wrong = 0;
                for (std::int64_t p = 0; p < pts.rows; ++p)
                    if (table[static_cast<std::size_t>(p)] != target[static_cast<std::size_t>(p)])
                        ++wrong;
                if (static_cast<double>(wrong) >= eps * static_cast<double>(pts.rows))
                    ++bad[static_cast<std::size_t>(w)];
            }
            detail::next_config(lv, g.size());
        }
    });
    std::uint64_t ni = 0, nb = 0;
    for (int w = 0; w < 64; ++w) {
        ni += interp[static_cast<std::size_t>(w)];
        nb += bad[static_cast<std::size_t>(w)];
    }
    require(ni > 0, "exact_bad_volume: no interpolator exists for this training set");
    return static_cast<double>(nb) / static_cast<double>(ni);
}

struct MinErrorResult {
    double min_error = 1.0;
    std::uint64_t argmin_count = 0;
    std::uint64_t top_table_count = 0;
    std::uint64_t total = 0;
};

// Best population error any configuration in the class achieves against the
// labeler over an enumerable domain. Reports how many configurations attain
// it and, among those, the mass of the most common function table (the
// equivalence class of the best teacher surrogate). A zero minimum means the
// labeler is realizable.
inline MinErrorResult exact_min_population_error(const Arch& A, const QuantGrid& g,
                                                 const Arch& labelerArch,
                                                 const Levels& labeler,
                                                 const InputDomain& domain,
                                                 const EnumBudget& budget = {},
                                                 int workers = 1) {
    require(domain.enumerable(), "exact_min_population_error: domain not enumerable");
    const std::uint64_t total = enum_total(A, g, budget);
    const Matrix pts = domain.all_points();
    std::vector<std::int8_t> target(static_cast<std::size_t>(pts.rows));
    {
        Workspace ws;
        label_table(labelerArch, g, labeler, pts, target.data(), ws);
    }
    auto count_wrong = [&](const FunctionTable& table) {
        std::int64_t wrong = 0;
        for (std::int64_t p = 0; p < pts.rows; ++p)
            if (table[static_cast<std::size_t>(p)] != target[static_cast<std::size_t>(p)])
                ++wrong;
        return wrong;
    };

    std::vector<std::int64_t> best_wrong(64, pts.rows + 1);
    detail::parallel_blocks(total, workers, [&](int w, std::uint64_t begin, std::uint64_t end) {
        Levels lv(static_cast<std::size_t>(A.params));
        detail::seek_config(lv, begin, g.size());
        Workspace ws;
        FunctionTable table(static_cast<std::size_t>(pts.rows));
        auto& bw = best_wrong[static_cast<std::size_t>(w)];
        for (std::uint64_t i = begin; i < end; ++i) {
            label_table(A, g, lv, pts, table.data(), ws);
            bw = std::min(bw, count_wrong(table));
            detail::next_config(lv, g.size());
        }
    });
    std::int64_t bw = pts.rows + 1;
    for (int w = 0; w < 64; ++w) bw = std::min(bw, best_wrong[static_cast<std::size_t>(w)]);

    // second pass: bucket the optima by function table
    std::vector<std::map<FunctionTable, std::uint64_t>> maps(64);
    detail::parallel_blocks(total, workers, [&](int w, std::uint64_t begin, std::uint64_t end) {
        Levels lv(static_cast<std::size_t>(A.params));
        detail::seek_config(lv, begin, g.size());
        Workspace ws;
        FunctionTable table(static_cast<std::size_t>(pts.rows));
        auto& local = maps[static_cast<std::size_t>(w)];
        for (std::uint64_t i = begin; i < end; ++i) {
            label_table(A, g, lv, pts, table.data(), ws);
            if (count_wrong(table) == bw) ++local[table];
            detail::next_config(lv, g.size());
        }
    });
    std::map<FunctionTable, std::uint64_t> merged;
    for (auto& m : maps)
        for (auto& [table, count] : m) merged[table] += count;

    MinErrorResult r;
    r.total = total;
    r.min_error = static_cast<double>(bw) / static_cast<double>(pts.rows);
    for (auto& [table, count] : merged) {
        r.argmin_count += count;
        r.top_table_count = std::max(r.top_table_count, count);
    }
    return r;
}

struct SparseResult {
    Levels params;
    std::int64_t support = -1;
    std::uint64_t index = 0;
    bool found = false;
};

// Minimum-support interpolator: search support sizes in ascending order,
// collect every interpolator at the first feasible size, and break ties by
// the smallest mixed-radix configuration index.
inline SparseResult sparsest_interpolator(const Arch& A, const QuantGrid& g,
                                          const LabeledSet& s,
                                          const EnumBudget& budget = {}) {
    require(s.n() >= 1, "sparsest_interpolator: empty training set");
    enum_total(A, g, budget);
    const int M = static_cast<int>(A.params);
    const int q = g.size();
    const std::uint8_t zero = static_cast<std::uint8_t>(g.zero_level());
    std::vector<std::uint8_t> nonzero_levels;
    for (int level = 0; level < q; ++level)
        if (level != g.zero_level()) nonzero_levels.push_back(static_cast<std::uint8_t>(level));

    Workspace ws;
    Levels lv(static_cast<std::size_t>(M), zero);
    std::uint64_t visited = 0;

    auto config_index = [&](const Levels& conf) {
        unsigned __int128 idx = 0, base = 1;
        for (int m = 0; m < M; ++m) {
            idx += base * conf[static_cast<std::size_t>(m)];
            base *= static_cast<unsigned>(q);
        }
        return static_cast<std::uint64_t>(idx);
    };

    for (int sup = 0; sup <= M; ++sup) {
        SparseResult best;
        std::vector<int> pos(static_cast<std::size_t>(sup));
        for (int i = 0; i < sup; ++i) pos[static_cast<std::size_t>(i)] = i;
        bool more_subsets = true;
        while (more_subsets) {
            std::vector<std::size_t> assign(static_cast<std::size_t>(sup), 0);
            bool more_levels = true;
            while (more_levels) {
                std::fill(lv.begin(), lv.end(), zero);
                for (int i = 0; i < sup; ++i)
                    lv[static_cast<std::size_t>(pos[static_cast<std::size_t>(i)])] =
                        nonzero_levels[assign[static_cast<std::size_t>(i)]];
                if (++visited > budget.max_configs)
                    throw BudgetError("sparsest_interpolator: budget exhausted");
                if (matches_labels(A, g, lv, s.x, s.y.data(), ws)) {
                    const std::uint64_t idx = config_index(lv);
                    if (!best.found || idx < best.index) {
                        best.found = true;
                        best.index = idx;
                        best.params = lv;
                        best.support = sup;
                    }
                }
                more_levels = false;
                for (int i = 0; i < sup; ++i) {
                    if (++assign[static_cast<std::size_t>(i)] < nonzero_levels.size()) {
                        more_levels = true;
                        break;
                    }
                    assign[static_cast<std::size_t>(i)] = 0;
                }
            }
            more_subsets = false;
            for (int i = sup - 1; i >= 0; --i) {
                if (pos[static_cast<std::size_t>(i)] < M - (sup - i)) {
                    ++pos[static_cast<std::size_t>(i)];
                    for (int j = i + 1; j < sup; ++j)
                        pos[static_cast<std::size_t>(j)] = pos[static_cast<std::size_t>(j - 1)] + 1;
                    more_subsets = true;
                    break;
                }
            }
        }
        if (best.found) return best;
    }
    return SparseResult{};
}

}  // namespace gnclab
