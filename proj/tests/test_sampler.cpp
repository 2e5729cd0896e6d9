#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "gnclab/errors.hpp"
#include "gnclab/sampler.hpp"
#include "gnclab/special.hpp"
#include "gnclab/teacher.hpp"

using namespace gnclab;
using Catch::Approx;

namespace {

Levels levels_from_values(const QuantGrid& g, const std::vector<double>& vals) {
    Levels lv;
    for (double v : vals) {
        int found = -1;
        for (int k = 0; k < g.size(); ++k)
            if (g.value(k) == v) found = k;
        REQUIRE(found >= 0);
        lv.push_back(static_cast<std::uint8_t>(found));
    }
    return lv;
}

// Two labeled points solvable by a width-2 net on the ternary grid;
// interpolation probability is exactly 224/2187.
LabeledSet two_point_set() {
    LabeledSet s;
    s.x = Matrix(2, 1);
    s.x.at(0, 0) = 1;
    s.x.at(1, 0) = -1;
    s.y = {1, -1};
    return s;
}

struct CubeInstance {
    QuantGrid g = QuantGrid::symmetric(3);
    Arch teacherArch = Arch::fc({3, 1, 1});
    Arch student = Arch::fc({3, 2, 1});
    Levels teacher;
    InputDomain dom = InputDomain::hypercube(3);
    LabeledSet train;

    CubeInstance() {
        teacher = levels_from_values(g, {1, 1, -1, 0, 1, -1});
        const LabeledSet full = exhaustive_dataset(teacherArch, g, teacher, dom);
        const std::vector<std::int64_t> idx{0, 3, 5, 6, 7};
        train.x = Matrix(static_cast<std::int64_t>(idx.size()), 3);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            for (std::int64_t j = 0; j < 3; ++j)
                train.x.at(static_cast<std::int64_t>(i), j) = full.x.at(idx[i], j);
            train.y.push_back(full.y[static_cast<std::size_t>(idx[i])]);
        }
    }
};

}  // namespace

TEST_CASE("gnc is deterministic and worker-invariant", "[sampler]") {
    const CubeInstance inst;
    const GncTrace a = gnc(inst.student, inst.g, inst.train, 3, 7);
    const GncTrace b = gnc(inst.student, inst.g, inst.train, 3, 7);
    CHECK(a.t == b.t);
    CHECK(a.params == b.params);

    GncOptions opt;
    opt.workers = 5;
    const GncTrace c = gnc(inst.student, inst.g, inst.train, 3, 7, opt);
    CHECK(c.t == a.t);
    CHECK(c.params == a.params);

    const GncTrace d = gnc(inst.student, inst.g, inst.train, 3, 8);
    CHECK((d.t != a.t || d.params != a.params));

    // trace bookkeeping
    CHECK(a.train_error == 0.0);
    CHECK(a.draws_budget_used == a.t);
    CHECK(a.seed == 3);

    GncOptions explicit_zero;
    explicit_zero.threshold = 0.0;
    const GncTrace e = gnc(inst.student, inst.g, inst.train, 3, 7, explicit_zero);
    CHECK(e.t == a.t);
    CHECK(e.params == a.params);
}

TEST_CASE("threshold semantics on a contradictory training set", "[sampler]") {
    const QuantGrid g = QuantGrid::symmetric(3);
    const Arch a = Arch::fc({1, 2, 1});
    LabeledSet s;
    s.x = Matrix(2, 1);
    s.x.at(0, 0) = 1;
    s.x.at(1, 0) = 1;
    s.y = {1, -1};  // no hypothesis can satisfy both

    GncOptions tight;
    tight.max_draws = 200;
    CHECK_THROWS_AS(gnc(a, g, s, 1, 1, tight), BudgetError);

    GncOptions loose;
    loose.threshold = 0.5;  // one mistake out of two is allowed
    const GncTrace tr = gnc(a, g, s, 1, 1, loose);
    CHECK(tr.t == 1);  // every configuration errs on exactly one point
    CHECK(tr.train_error == 0.5);
}

TEST_CASE("acceptance at t=1 happens iff the first draw interpolates", "[sampler]") {
    const QuantGrid g = QuantGrid::symmetric(3);
    const Arch a = Arch::fc({1, 2, 1});
    LabeledSet s;
    s.x = Matrix(1, 1);
    s.x.at(0, 0) = 1;
    s.y = {1};

    int immediate = 0, delayed = 0;
    Levels lv(static_cast<std::size_t>(a.params));
    Workspace ws;
    for (std::uint64_t stream = 0; stream < 50; ++stream) {
        const CounterRng rng(9, stream);
        detail::draw_params(rng, 0, g.size(), lv);
        const bool first_ok = label(a, g, lv, s.x.row(0), ws) == s.y[0];
        const GncTrace tr = gnc(a, g, s, 9, stream);
        CHECK((tr.t == 1) == first_ok);
        (first_ok ? immediate : delayed)++;
    }
    CHECK(immediate > 0);
    CHECK(delayed > 0);
}

TEST_CASE("stopping time follows the geometric law", "[sampler]") {
    const QuantGrid g = QuantGrid::symmetric(3);
    const Arch a = Arch::fc({1, 2, 1});
    const LabeledSet s = two_point_set();
    const double p = 224.0 / 2187.0;
    const int runs = 2000;

    std::vector<double> ts;
    double sum = 0;
    for (int r = 0; r < runs; ++r) {
        const GncTrace tr = gnc(a, g, s, 42, 1000 + static_cast<std::uint64_t>(r));
        ts.push_back(static_cast<double>(tr.t));
        sum += static_cast<double>(tr.t);
    }
    const double mean = sum / runs;
    const double expect = 1.0 / p;
    const double se = std::sqrt((1.0 - p) / (p * p) / runs);
    CHECK(std::abs(mean - expect) <= 3.0 * se);

    // DKW band around the geometric CDF at confidence 1 - 1e-3. Both CDFs are
    // step functions jumping only at integers, so the sup over the reals is the
    // sup of |F_n(t) - F(t)| over integer t (ties make the per-order-statistic
    // formula for continuous data invalid here).
    std::sort(ts.begin(), ts.end());
    const double band = dkw_epsilon(runs, 0.001);
    double sup = 0;
    std::size_t idx = 0;
    for (double t = 1; t <= ts.back(); ++t) {
        while (idx < ts.size() && ts[idx] <= t) ++idx;
        const double fn = static_cast<double>(idx) / runs;
        const double cdf = 1.0 - std::pow(1.0 - p, t);
        sup = std::max(sup, std::abs(fn - cdf));
    }
    CHECK(sup <= band);
}

TEST_CASE("estimate_phat covers the exact probability", "[sampler]") {
    const QuantGrid g = QuantGrid::symmetric(3);
    const Arch a = Arch::fc({1, 2, 1});
    const LabeledSet s = two_point_set();
    const double p = 224.0 / 2187.0;

    const McEstimate e = estimate_phat(a, g, s, 4000, 7, 2);
    CHECK(e.draws == 4000);
    CHECK(e.estimate == Approx(static_cast<double>(e.successes) / 4000.0));
    CHECK(e.ci.lo <= p);
    CHECK(p <= e.ci.hi);

    // deterministic replay and worker invariance
    const McEstimate f = estimate_phat(a, g, s, 4000, 7, 2, 6);
    CHECK(f.successes == e.successes);

    // 95% intervals should cover the truth in at least 90 of 100 replications
    int covered = 0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        const McEstimate c = estimate_phat(a, g, s, 500, 11, 100 + rep);
        if (c.ci.lo <= p && p <= c.ci.hi) ++covered;
    }
    CHECK(covered >= 90);

    // quadrupling the draws roughly halves the interval width
    const McEstimate n1 = estimate_phat(a, g, s, 2000, 5, 1);
    const McEstimate n2 = estimate_phat(a, g, s, 8000, 5, 2);
    const double ratio = (n2.ci.hi - n2.ci.lo) / (n1.ci.hi - n1.ci.lo);
    CHECK(ratio >= 0.4);
    CHECK(ratio <= 0.6);
}

TEST_CASE("estimate_phat saturates at one on a trivially solvable set", "[sampler]") {
    const QuantGrid g({0, 1});
    const Arch a = Arch::fc({1, 1});
    LabeledSet s;
    s.x = Matrix(1, 1);
    s.x.at(0, 0) = 1;
    s.y = {1};
    // w*1 + b >= 0 for all four configurations over {0,1}^2
    const McEstimate e = estimate_phat(a, g, s, 1000, 1, 1);
    CHECK(e.successes == 1000);
    CHECK(e.estimate == 1.0);
    CHECK(e.ci.hi == 1.0);
}

TEST_CASE("estimate_ptilde is exact on enumerable domains", "[sampler]") {
    const CubeInstance inst;
    const double pt = 1418.0 / 177147.0;
    const McEstimate e = estimate_ptilde(inst.student, inst.g, inst.teacherArch,
                                         inst.teacher, inst.dom, 40000, 13, 2, 4);
    CHECK(e.exact_check);
    CHECK(e.successes >= 1);
    CHECK(e.ci.lo <= pt);
    CHECK(pt <= e.ci.hi);
}

TEST_CASE("constant labelers still have positive equivalence mass", "[sampler]") {
    const QuantGrid g = QuantGrid::symmetric(3);
    const Arch teacherArch = Arch::fc({1, 1, 1});
    const Levels teacher = levels_from_values(g, {0, 0, 0, 1});  // constant +1
    Matrix pts(4, 1);
    pts.at(0, 0) = -2;
    pts.at(1, 0) = -1;
    pts.at(2, 0) = 1;
    pts.at(3, 0) = 2;
    const McEstimate e =
        estimate_ptilde(Arch::fc({1, 2, 1}), g, teacherArch, teacher,
                        InputDomain::finite(std::move(pts)), 2000, 5, 9);
    CHECK(e.successes >= 1);
    CHECK(e.estimate > 0.0);
}

TEST_CASE("probe-based equivalence is monotone in the probe budget", "[sampler]") {
    const QuantGrid g = QuantGrid::symmetric(3);
    const Arch teacherArch = Arch::fc({2, 1, 1});
    const Levels teacher = levels_from_values(g, {1, -1, 0, -1, 1});
    const Arch student = Arch::fc({2, 2, 1});
    const InputDomain dom = InputDomain::gaussian(2);

    const McEstimate coarse = estimate_ptilde(student, g, teacherArch, teacher, dom,
                                              500, 21, 4, 1, 0.05, 50);
    const McEstimate fine = estimate_ptilde(student, g, teacherArch, teacher, dom,
                                            500, 21, 4, 1, 0.05, 5000);
    CHECK_FALSE(coarse.exact_check);
    CHECK_FALSE(fine.exact_check);
    // probe points are a prefix of the longer run, so agreement on 5000
    // implies agreement on the first 50
    CHECK(coarse.successes >= fine.successes);
}

TEST_CASE("paired draws: interpolation dominates teacher equivalence", "[sampler]") {
    const CubeInstance inst;
    const McEstimate ph =
        estimate_phat(inst.student, inst.g, inst.train, 5000, 17, 3);
    const McEstimate pt = estimate_ptilde(inst.student, inst.g, inst.teacherArch,
                                          inst.teacher, inst.dom, 5000, 17, 3);
    // identical parameter draws; equivalence implies interpolation
    CHECK(ph.successes >= pt.successes);
}

TEST_CASE("estimated bad volume matches the exact posterior mass", "[sampler]") {
    const CubeInstance inst;
    const double truth = 966.0 / 2732.0;
    GncOptions opt;
    opt.workers = 4;
    const BadVolumeEstimate e =
        estimate_bad_volume(inst.student, inst.g, inst.train, inst.teacherArch,
                            inst.teacher, inst.dom, 0.2, 300, 29, 5000, opt);
    CHECK(e.runs == 300);
    CHECK(e.bad >= 1);
    CHECK(e.ci.lo <= truth);
    CHECK(truth <= e.ci.hi);

    // eps = 0 marks every sample bad
    const BadVolumeEstimate all =
        estimate_bad_volume(inst.student, inst.g, inst.train, inst.teacherArch,
                            inst.teacher, inst.dom, 0.0, 20, 29, 6000, opt);
    CHECK(all.bad == 20);
    CHECK(all.fraction == 1.0);

    // same streams, rising eps: classification is paired and monotone
    std::uint64_t prev = UINT64_MAX;
    for (double eps : {0.1, 0.25, 0.5}) {
        const BadVolumeEstimate cur =
            estimate_bad_volume(inst.student, inst.g, inst.train, inst.teacherArch,
                                inst.teacher, inst.dom, eps, 100, 29, 7000, opt);
        CHECK(cur.bad <= prev);
        prev = cur.bad;
    }
}
