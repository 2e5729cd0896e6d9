#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "gnclab/errors.hpp"
#include "gnclab/net.hpp"
#include "gnclab/rng.hpp"
#include "gnclab/special.hpp"

namespace gnclab {

enum class DomainKind { hypercube, finite, gaussian };

// Input distribution. Hypercube and finite-grid domains are uniform over an
// explicit point set and support exact enumeration; the Gaussian domain is
// standard normal per coordinate and supports sampling only.
class InputDomain {
public:
    static InputDomain hypercube(int dim) {
        require(dim >= 1, "InputDomain: dimension must be positive");
        InputDomain d;
        d.kind_ = DomainKind::hypercube;
        d.dim_ = dim;
        return d;
    }

    static InputDomain finite(Matrix pts) {
        require(pts.rows >= 1, "InputDomain: need at least one point");
        InputDomain d;
        d.kind_ = DomainKind::finite;
        d.dim_ = static_cast<int>(pts.cols);
        d.pts_ = std::move(pts);
        return d;
    }

    static InputDomain gaussian(int dim) {
        require(dim >= 1, "InputDomain: dimension must be positive");
        InputDomain d;
        d.kind_ = DomainKind::gaussian;
        d.dim_ = dim;
        return d;
    }

    DomainKind kind() const { return kind_; }
    int dim() const { return dim_; }

    // Exact enumeration is offered for finite grids and for hypercubes of
    // dimension at most 20 (2^20 points).
    bool enumerable() const {
        if (kind_ == DomainKind::finite) return true;
        return kind_ == DomainKind::hypercube && dim_ <= 20;
    }

    std::int64_t size() const {
        require(enumerable(), "InputDomain: domain is not enumerable");
        return kind_ == DomainKind::finite ? pts_.rows
                                           : (std::int64_t{1} << dim_);
    }

    // Point i of an enumerable domain. Hypercube corners use bit order:
    // coordinate k of corner i is (i >> k & 1) * 2 - 1.
    void point(std::int64_t i, double* out) const {
        if (kind_ == DomainKind::finite) {
            const double* r = pts_.row(i);
            for (int k = 0; k < dim_; ++k) out[k] = r[k];
        } else {
            for (int k = 0; k < dim_; ++k) out[k] = ((i >> k) & 1) * 2.0 - 1.0;
        }
    }

    Matrix all_points() const {
        const std::int64_t n = size();
        Matrix m(n, dim_);
        for (std::int64_t i = 0; i < n; ++i) point(i, m.row(i));
        return m;
    }

    // Draw one point addressed by draw index; identical for any worker
    // partition of the index space.
    void sample(const CounterRng& rng, std::uint64_t draw, double* out) const {
        if (kind_ == DomainKind::gaussian) {
            for (int k = 0; k < dim_; ++k)
                out[k] = rng.normal(draw * static_cast<std::uint64_t>(dim_) + k);
        } else {
            point(static_cast<std::int64_t>(
                      rng.index(draw, static_cast<std::uint64_t>(size()))),
                  out);
        }
    }

private:
    DomainKind kind_ = DomainKind::hypercube;
    int dim_ = 0;
    Matrix pts_;
};

struct LabeledSet {
    Matrix x;
    std::vector<std::int8_t> y;

    std::int64_t n() const { return x.rows; }
};

inline std::string labeled_set_to_csv(const LabeledSet& s) {
    std::ostringstream os;
    for (std::int64_t j = 0; j < s.x.cols; ++j) os << "x" << (j + 1) << ",";
    os << "y\n";
    char buf[32];
    for (std::int64_t i = 0; i < s.x.rows; ++i) {
        for (std::int64_t j = 0; j < s.x.cols; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", s.x.at(i, j));
            os << buf << ",";
        }
        os << static_cast<int>(s.y[static_cast<std::size_t>(i)]) << "\n";
    }
    return os.str();
}

// Draw a teacher configuration uniformly over the grid, rejecting constant
// classifiers (probed on up to 256 domain points). Throws after 100 attempts.
inline Levels sample_teacher(const Arch& A, const QuantGrid& g,
                             const InputDomain& domain, StreamRng& rng,
                             bool reject_constant = true, int max_attempts = 100) {
    Workspace ws;
    std::vector<double> pt(static_cast<std::size_t>(A.input_dim()));
    require(domain.dim() == A.input_dim(), "sample_teacher: domain dimension mismatch");
    const std::int64_t probes =
        domain.enumerable() ? std::min<std::int64_t>(domain.size(), 256) : 256;
    CounterRng probe_rng(rng.u64(), 0x70726f6265ULL);
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        Levels lv(static_cast<std::size_t>(A.params));
        for (auto& level : lv)
            level = static_cast<std::uint8_t>(rng.index(static_cast<std::uint64_t>(g.size())));
        if (!reject_constant) return lv;
        int first = 0;
        bool varies = false;
        for (std::int64_t i = 0; i < probes; ++i) {
            if (domain.enumerable())
                domain.point(i, pt.data());
            else
                domain.sample(probe_rng, static_cast<std::uint64_t>(i), pt.data());
            const int lab = label(A, g, lv, pt.data(), ws);
            if (i == 0)
                first = lab;
            else if (lab != first) {
                varies = true;
                break;
            }
        }
        if (varies) return lv;
    }
    throw ValidationError("sample_teacher: every attempt produced a constant classifier");
}

// N i.i.d. domain points labeled by the teacher.
inline LabeledSet generate_dataset(const Arch& teacherArch, const QuantGrid& g,
                                   const Levels& teacher, const InputDomain& domain,
                                   std::int64_t n, std::uint64_t seed,
                                   std::uint64_t stream) {
    require(n >= 1, "generate_dataset: need at least one sample");
    LabeledSet s;
    s.x = Matrix(n, domain.dim());
    s.y.resize(static_cast<std::size_t>(n));
    CounterRng rng(seed, stream);
    Workspace ws;
    for (std::int64_t i = 0; i < n; ++i) {
        domain.sample(rng, static_cast<std::uint64_t>(i), s.x.row(i));
        s.y[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(
            label(teacherArch, g, teacher, s.x.row(i), ws));
    }
    return s;
}

// Every point of an enumerable domain, labeled by the teacher.
inline LabeledSet exhaustive_dataset(const Arch& teacherArch, const QuantGrid& g,
                                     const Levels& teacher, const InputDomain& domain) {
    LabeledSet s;
    s.x = domain.all_points();
    s.y.resize(static_cast<std::size_t>(s.x.rows));
    Workspace ws;
    for (std::int64_t i = 0; i < s.x.rows; ++i)
        s.y[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(
            label(teacherArch, g, teacher, s.x.row(i), ws));
    return s;
}

// Fraction of training labels the configuration gets wrong.
inline double empirical_error(const Arch& A, const QuantGrid& g, const Levels& lv,
                              const LabeledSet& s, Workspace& ws) {
    require(s.n() >= 1, "empirical_error: empty set");
    std::int64_t wrong = 0;
    for (std::int64_t i = 0; i < s.n(); ++i)
        if (label(A, g, lv, s.x.row(i), ws) != s.y[static_cast<std::size_t>(i)]) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(s.n());
}

// Exact disagreement rate with the teacher over an enumerable domain.
inline double population_error_exact(const Arch& A, const QuantGrid& g,
                                     const Levels& lv, const Arch& teacherArch,
                                     const Levels& teacher, const InputDomain& domain) {
    require(domain.enumerable(), "population_error_exact: domain not enumerable");
    Workspace ws;
    std::vector<double> pt(static_cast<std::size_t>(domain.dim()));
    std::int64_t wrong = 0;
    const std::int64_t n = domain.size();
    for (std::int64_t i = 0; i < n; ++i) {
        domain.point(i, pt.data());
        if (label(A, g, lv, pt.data(), ws) !=
            label(teacherArch, g, teacher, pt.data(), ws))
            ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(n);
}

struct McError {
    double estimate = 0.0;
    Interval ci;
    std::int64_t probes = 0;
};

// Monte-Carlo disagreement rate with an exact binomial confidence interval.
inline McError population_error_mc(const Arch& A, const QuantGrid& g,
                                   const Levels& lv, const Arch& teacherArch,
                                   const Levels& teacher, const InputDomain& domain,
                                   std::int64_t probes, std::uint64_t seed,
                                   std::uint64_t stream, double delta = 0.05) {
    require(probes >= 1, "population_error_mc: need at least one probe");
    CounterRng rng(seed, stream);
    Workspace ws;
    std::vector<double> pt(static_cast<std::size_t>(domain.dim()));
    std::int64_t wrong = 0;
    for (std::int64_t i = 0; i < probes; ++i) {
        domain.sample(rng, static_cast<std::uint64_t>(i), pt.data());
        if (label(A, g, lv, pt.data(), ws) !=
            label(teacherArch, g, teacher, pt.data(), ws))
            ++wrong;
    }
    McError e;
    e.estimate = static_cast<double>(wrong) / static_cast<double>(probes);
    e.ci = clopper_pearson(static_cast<std::uint64_t>(wrong),
                           static_cast<std::uint64_t>(probes), delta);
    e.probes = probes;
    return e;
}

enum class TeStatus { confirmed, refuted, consistent_on_probe };

// Teacher equivalence: exact on enumerable domains, otherwise refuted or
// consistent on a probe of the given budget.
inline TeStatus is_teacher_equivalent(const Arch& A, const QuantGrid& g,
                                      const Levels& lv, const Arch& teacherArch,
                                      const Levels& teacher, const InputDomain& domain,
                                      std::int64_t probe_budget = 10000,
                                      std::uint64_t seed = 0,
                                      std::uint64_t stream = 0x7465ULL) {
    Workspace ws;
    std::vector<double> pt(static_cast<std::size_t>(domain.dim()));
    if (domain.enumerable()) {
        const std::int64_t n = domain.size();
        for (std::int64_t i = 0; i < n; ++i) {
            domain.point(i, pt.data());
            if (label(A, g, lv, pt.data(), ws) !=
                label(teacherArch, g, teacher, pt.data(), ws))
                return TeStatus::refuted;
        }
        return TeStatus::confirmed;
    }
    CounterRng rng(seed, stream);
    for (std::int64_t i = 0; i < probe_budget; ++i) {
        domain.sample(rng, static_cast<std::uint64_t>(i), pt.data());
        if (label(A, g, lv, pt.data(), ws) !=
            label(teacherArch, g, teacher, pt.data(), ws))
            return TeStatus::refuted;
    }
    return TeStatus::consistent_on_probe;
}

struct Embedding {
    Levels params;
    std::vector<bool> constrained;
    std::int64_t constrained_count = 0;
};

namespace detail {

inline void emb_set(Embedding& e, std::int64_t idx, std::uint8_t level) {
    e.params[static_cast<std::size_t>(idx)] = level;
    if (!e.constrained[static_cast<std::size_t>(idx)]) {
        e.constrained[static_cast<std::size_t>(idx)] = true;
        ++e.constrained_count;
    }
}

inline void check_embeddable(const Arch& S, const Arch& T) {
    require(S.kind == T.kind, "embed_teacher: architecture family mismatch");
    require(S.scaled == T.scaled, "embed_teacher: scaled flag mismatch");
    require(S.layers() == T.layers(), "embed_teacher: depth mismatch");
    if (S.kind == ArchKind::fc) {
        require(S.widths[0] == T.widths[0], "embed_teacher: input width mismatch");
        require(S.widths.back() == T.widths.back(), "embed_teacher: output width mismatch");
        for (std::size_t l = 0; l < S.widths.size(); ++l)
            require(T.widths[l] <= S.widths[l], "embed_teacher: teacher wider than student");
    } else {
        require(S.channels[0] == T.channels[0], "embed_teacher: input channel mismatch");
        require(S.s0 == T.s0, "embed_teacher: input length mismatch");
        require(S.kernels == T.kernels, "embed_teacher: kernel size mismatch");
        for (std::size_t l = 0; l < S.channels.size(); ++l)
            require(T.channels[l] <= S.channels[l], "embed_teacher: teacher wider than student");
    }
}

}  // namespace detail

// Plant the teacher inside a wider student so the embedded student computes
// the teacher's function exactly. Free coordinates are copied from filler.
// The constrained mask marks every coordinate the construction fixes.
inline Embedding embed_teacher(const Arch& S, const Arch& T, const QuantGrid& g,
                               const Levels& teacher, const Levels& filler) {
    detail::check_embeddable(S, T);
    validate_params(T, g, teacher);
    validate_params(S, g, filler);
    const std::uint8_t z = static_cast<std::uint8_t>(g.zero_level());
    Embedding e;
    e.params = filler;
    e.constrained.assign(filler.size(), false);

    const int L = S.layers();
    if (S.kind == ArchKind::fc) {
        for (int l = 1; l <= L; ++l) {
            const int dl = S.widths[static_cast<std::size_t>(l)];
            const int dp = S.widths[static_cast<std::size_t>(l - 1)];
            const int tl = T.widths[static_cast<std::size_t>(l)];
            const int tp = T.widths[static_cast<std::size_t>(l - 1)];
            for (int i = 0; i < tl; ++i) {
                for (int j = 0; j < tp; ++j)
                    detail::emb_set(e, S.w_index(l, i, j),
                                    teacher[static_cast<std::size_t>(T.w_index(l, i, j))]);
                if (!S.scaled)
                    for (int j = tp; j < dp; ++j)
                        detail::emb_set(e, S.w_index(l, i, j), z);
                detail::emb_set(e, S.b_index(l, i),
                                teacher[static_cast<std::size_t>(T.b_index(l, i))]);
                if (S.scaled)
                    detail::emb_set(e, S.g_index(l, i),
                                    teacher[static_cast<std::size_t>(T.g_index(l, i))]);
            }
            if (S.scaled) {
                for (int i = tl; i < dl; ++i) {
                    detail::emb_set(e, S.b_index(l, i), z);
                    detail::emb_set(e, S.g_index(l, i), z);
                }
            }
        }
    } else {
        for (int l = 1; l <= L; ++l) {
            const int cl = S.channels[static_cast<std::size_t>(l)];
            const int cp = S.channels[static_cast<std::size_t>(l - 1)];
            const int tl = T.channels[static_cast<std::size_t>(l)];
            const int tp = T.channels[static_cast<std::size_t>(l - 1)];
            const int kl = S.kernels[static_cast<std::size_t>(l - 1)];
            for (int co = 0; co < tl; ++co) {
                for (int ci = 0; ci < tp; ++ci)
                    for (int t = 0; t < kl; ++t)
                        detail::emb_set(e, S.k_index(l, co, ci, t),
                                        teacher[static_cast<std::size_t>(T.k_index(l, co, ci, t))]);
                if (!S.scaled)
                    for (int ci = tp; ci < cp; ++ci)
                        for (int t = 0; t < kl; ++t)
                            detail::emb_set(e, S.k_index(l, co, ci, t), z);
                detail::emb_set(e, S.cb_index(l, co),
                                teacher[static_cast<std::size_t>(T.cb_index(l, co))]);
                if (S.scaled)
                    detail::emb_set(e, S.cg_index(l, co),
                                    teacher[static_cast<std::size_t>(T.cg_index(l, co))]);
            }
            if (S.scaled) {
                for (int co = tl; co < cl; ++co) {
                    detail::emb_set(e, S.cb_index(l, co), z);
                    detail::emb_set(e, S.cg_index(l, co), z);
                }
            }
        }
        const int sl = S.spatial.back();
        const int tcl = T.channels.back();
        for (int c = 0; c < tcl; ++c)
            for (int p = 0; p < sl; ++p)
                detail::emb_set(e, S.head_w_index(c, p),
                                teacher[static_cast<std::size_t>(T.head_w_index(c, p))]);
        if (!S.scaled)
            for (int c = tcl; c < S.channels.back(); ++c)
                for (int p = 0; p < sl; ++p)
                    detail::emb_set(e, S.head_w_index(c, p), z);
        detail::emb_set(e, S.head_b_index(),
                        teacher[static_cast<std::size_t>(T.head_b_index())]);
    }
    return e;
}

}  // namespace gnclab
