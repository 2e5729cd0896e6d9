#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "gnclab/bounds.hpp"
#include "gnclab/errors.hpp"
#include "gnclab/margins.hpp"
#include "gnclab/oracle.hpp"
#include "gnclab/sampler.hpp"
#include "gnclab/teacher.hpp"

namespace gnclab {

inline constexpr const char* kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// SHA-256 (for config and output digests)

class Sha256 {
public:
    Sha256() { reset(); }

    void reset() {
        static constexpr std::uint32_t init[8] = {
            0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u, 0xa54ff53au,
            0x510e527fu, 0x9b05688cu, 0x1f83d9abu, 0x5be0cd19u};
        for (int i = 0; i < 8; ++i) h_[i] = init[i];
        len_ = 0;
        buf_used_ = 0;
    }

    void update(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        len_ += n;
        while (n > 0) {
            const std::size_t take = std::min<std::size_t>(n, 64 - buf_used_);
            std::copy(p, p + take, buf_ + buf_used_);
            buf_used_ += take;
            p += take;
            n -= take;
            if (buf_used_ == 64) {
                compress(buf_);
                buf_used_ = 0;
            }
        }
    }

    std::string hex() {
        unsigned char tail[64] = {0x80};
        const std::uint64_t bits = len_ * 8;
        std::size_t pad = (buf_used_ < 56) ? 56 - buf_used_ : 120 - buf_used_;
        update_raw(tail, pad);
        unsigned char lenb[8];
        for (int i = 0; i < 8; ++i)
            lenb[i] = static_cast<unsigned char>(bits >> (56 - 8 * i));
        update_raw(lenb, 8);
        char out[65];
        for (int i = 0; i < 8; ++i)
            std::snprintf(out + 8 * i, 9, "%08x", h_[i]);
        return std::string(out, 64);
    }

private:
    void update_raw(const unsigned char* p, std::size_t n) {
        while (n > 0) {
            const std::size_t take = std::min<std::size_t>(n, 64 - buf_used_);
            std::copy(p, p + take, buf_ + buf_used_);
            buf_used_ += take;
            p += take;
            n -= take;
            if (buf_used_ == 64) {
                compress(buf_);
                buf_used_ = 0;
            }
        }
    }

    static std::uint32_t rotr(std::uint32_t x, int r) { return (x >> r) | (x << (32 - r)); }

    void compress(const unsigned char* p) {
        static constexpr std::uint32_t k[64] = {
            0x428a2f98u, 0x71374491u, 0xb5c0fbcfu, 0xe9b5dba5u, 0x3956c25bu,
            0x59f111f1u, 0x923f82a4u, 0xab1c5ed5u, 0xd807aa98u, 0x12835b01u,
            0x243185beu, 0x550c7dc3u, 0x72be5d74u, 0x80deb1feu, 0x9bdc06a7u,
            0xc19bf174u, 0xe49b69c1u, 0xefbe4786u, 0x0fc19dc6u, 0x240ca1ccu,
            0x2de92c6fu, 0x4a7484aau, 0x5cb0a9dcu, 0x76f988dau, 0x983e5152u,
            0xa831c66du, 0xb00327c8u, 0xbf597fc7u, 0xc6e00bf3u, 0xd5a79147u,
            0x06ca6351u, 0x14292967u, 0x27b70a85u, 0x2e1b2138u, 0x4d2c6dfcu,
            0x53380d13u, 0x650a7354u, 0x766a0abbu, 0x81c2c92eu, 0x92722c85u,
            0xa2bfe8a1u, 0xa81a664bu, 0xc24b8b70u, 0xc76c51a3u, 0xd192e819u,
            0xd6990624u, 0xf40e3585u, 0x106aa070u, 0x19a4c116u, 0x1e376c08u,
            0x2748774cu, 0x34b0bcb5u, 0x391c0cb3u, 0x4ed8aa4au, 0x5b9cca4fu,
            0x682e6ff3u, 0x748f82eeu, 0x78a5636fu, 0x84c87814u, 0x8cc70208u,
            0x90befffau, 0xa4506cebu, 0xbef9a3f7u, 0xc67178f2u};
        std::uint32_t w[64];
        for (int i = 0; i < 16; ++i)
            w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
                   (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
        for (int i = 16; i < 64; ++i) {
            const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        std::uint32_t a = h_[0], b = h_[1], c = h_[2], d = h_[3];
        std::uint32_t e = h_[4], f = h_[5], g = h_[6], hh = h_[7];
        for (int i = 0; i < 64; ++i) {
            const std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            const std::uint32_t ch = (e & f) ^ (~e & g);
            const std::uint32_t t1 = hh + s1 + ch + k[i] + w[i];
            const std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            const std::uint32_t mj = (a & b) ^ (a & c) ^ (b & c);
            const std::uint32_t t2 = s0 + mj;
            hh = g;
            g = f;
            f = e;
            e = d + t1;
            d = c;
            c = b;
            b = a;
            a = t1 + t2;
        }
        h_[0] += a;
        h_[1] += b;
        h_[2] += c;
        h_[3] += d;
        h_[4] += e;
        h_[5] += f;
        h_[6] += g;
        h_[7] += hh;
    }

    std::uint32_t h_[8];
    unsigned char buf_[64];
    std::size_t buf_used_ = 0;
    std::uint64_t len_ = 0;
};

inline std::string sha256_hex(const std::string& data) {
    Sha256 h;
    h.update(data.data(), data.size());
    return h.hex();
}

// ---------------------------------------------------------------------------
// Formatting helpers

// Floats in CSV output use 17 significant digits (lossless round trip).
inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Chi-square goodness of fit with small-cell pooling

struct GofResult {
    double statistic = 0.0;
    std::int64_t df = 0;
    double p_value = 1.0;
    std::int64_t pooled_cells = 0;
};

// Pearson chi-square of observed counts against expected probabilities.
// Cells with expected count below 5 are pooled into one cell first.
inline GofResult chi_square_gof(const std::vector<std::uint64_t>& observed,
                                const std::vector<double>& expected_probs) {
    require(observed.size() == expected_probs.size() && !observed.empty(),
            "chi_square_gof: size mismatch");
    const double n = std::accumulate(observed.begin(), observed.end(), 0.0);
    require(n > 0, "chi_square_gof: no observations");
    std::vector<double> exp_counts;
    std::vector<double> obs_counts;
    double pool_exp = 0.0, pool_obs = 0.0;
    GofResult r;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = expected_probs[i] * n;
        require(expected_probs[i] >= 0, "chi_square_gof: negative probability");
        if (e < 5.0) {
            pool_exp += e;
            pool_obs += static_cast<double>(observed[i]);
            ++r.pooled_cells;
        } else {
            exp_counts.push_back(e);
            obs_counts.push_back(static_cast<double>(observed[i]));
        }
    }
    if (r.pooled_cells > 0) {
        if (pool_exp >= 5.0 || exp_counts.empty()) {
            exp_counts.push_back(pool_exp);
            obs_counts.push_back(pool_obs);
        } else {
            // fold the undersized pool into the smallest retained cell
            std::size_t smallest = 0;
            for (std::size_t i = 1; i < exp_counts.size(); ++i)
                if (exp_counts[i] < exp_counts[smallest]) smallest = i;
            exp_counts[smallest] += pool_exp;
            obs_counts[smallest] += pool_obs;
        }
    }
    if (exp_counts.size() < 2) {
        r.df = 0;
        r.p_value = 1.0;
        return r;
    }
    double stat = 0.0;
    for (std::size_t i = 0; i < exp_counts.size(); ++i) {
        const double diff = obs_counts[i] - exp_counts[i];
        if (exp_counts[i] > 0) stat += diff * diff / exp_counts[i];
    }
    r.statistic = stat;
    r.df = static_cast<std::int64_t>(exp_counts.size()) - 1;
    r.p_value = chi2_survival(static_cast<double>(r.df), stat);
    return r;
}

// ---------------------------------------------------------------------------
// Config parsing

inline QuantGrid grid_from_json(const nlohmann::json& j) {
    require(j.is_object(), "config: grid must be an object");
    if (j.contains("q")) return QuantGrid::symmetric(j.at("q").get<int>());
    require(j.contains("levels"), "config: grid needs q or levels");
    return QuantGrid(j.at("levels").get<std::vector<double>>());
}

inline Arch arch_from_json(const nlohmann::json& j) {
    require(j.is_object() && j.contains("family"), "config: arch needs a family");
    const std::string family = j.at("family").get<std::string>();
    const double lrelu = j.value("lrelu", 0.0);
    if (family == "fc" || family == "fc-scaled")
        return Arch::fc(j.at("widths").get<std::vector<int>>(), family == "fc-scaled",
                        lrelu);
    if (family == "conv" || family == "conv-scaled")
        return Arch::conv(j.at("channels").get<std::vector<int>>(),
                          j.at("kernels").get<std::vector<int>>(),
                          j.at("s0").get<int>(), family == "conv-scaled", lrelu);
    throw ValidationError("config: unknown arch family '" + family + "'");
}

inline InputDomain domain_from_json(const nlohmann::json& j) {
    require(j.is_object() && j.contains("kind"), "config: domain needs a kind");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "hypercube") return InputDomain::hypercube(j.at("dim").get<int>());
    if (kind == "gaussian") return InputDomain::gaussian(j.at("dim").get<int>());
    if (kind == "finite") {
        const auto rows = j.at("points").get<std::vector<std::vector<double>>>();
        require(!rows.empty(), "config: finite domain needs points");
        Matrix m(static_cast<std::int64_t>(rows.size()),
                 static_cast<std::int64_t>(rows[0].size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            require(rows[i].size() == rows[0].size(),
                    "config: finite domain rows must have equal length");
            for (std::size_t k = 0; k < rows[i].size(); ++k)
                m.at(static_cast<std::int64_t>(i), static_cast<std::int64_t>(k)) = rows[i][k];
        }
        return InputDomain::finite(std::move(m));
    }
    throw ValidationError("config: unknown domain kind '" + kind + "'");
}

// Translate explicit parameter values to grid level indices.
inline Levels params_from_values(const Arch& a, const QuantGrid& g,
                                 const std::vector<double>& values) {
    require(static_cast<std::int64_t>(values.size()) == a.params,
            "config: teacher params length mismatch");
    Levels lv(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        int found = -1;
        for (int level = 0; level < g.size(); ++level)
            if (g.value(level) == values[i]) found = level;
        require(found >= 0, "config: teacher param value not on the grid");
        lv[i] = static_cast<std::uint8_t>(found);
    }
    return lv;
}

// ---------------------------------------------------------------------------
// Experiment runner

struct StageClock {
    using clock = std::chrono::steady_clock;
    clock::time_point t0 = clock::now();
    nlohmann::json stages = nlohmann::json::array();

    void lap(const std::string& name) {
        const auto t1 = clock::now();
        const double ms =
            std::chrono::duration<double, std::milli>(t1 - t0).count();
        stages.push_back({{"name", name}, {"ms", ms}});
        t0 = t1;
    }
};

namespace detail {

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    require(out.good(), "run_experiment: cannot open output file " + p.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    require(out.good(), "run_experiment: short write to " + p.string());
}

struct TeacherSetup {
    Arch arch;
    QuantGrid grid;
    InputDomain domain;
    Levels params;
};

inline TeacherSetup teacher_from_config(const nlohmann::json& cfg, std::uint64_t seed) {
    TeacherSetup t{arch_from_json(cfg.at("teacher")), grid_from_json(cfg.at("grid")),
                   domain_from_json(cfg.at("domain")), {}};
    require(t.domain.dim() == t.arch.input_dim(),
            "config: domain dimension does not match teacher input");
    if (cfg.at("teacher").contains("params")) {
        t.params = params_from_values(
            t.arch, t.grid, cfg.at("teacher").at("params").get<std::vector<double>>());
    } else {
        StreamRng rng(seed, 0x7465616368ULL);
        t.params = sample_teacher(t.arch, t.grid, t.domain, rng);
    }
    return t;
}

// Training set from a config's "train" object: either {"n": N} for an i.i.d.
// teacher-labeled draw, or {"corner_indices": [...]} to pin explicit
// hypercube corners (duplicates allowed).
inline LabeledSet trainset_from_config(const nlohmann::json& train,
                                       const TeacherSetup& t, std::uint64_t seed) {
    require(train.is_object(), "config: train must be an object");
    if (train.contains("corner_indices")) {
        require(t.domain.kind() == DomainKind::hypercube,
                "config: corner indices need a hypercube domain");
        const auto idx = train.at("corner_indices").get<std::vector<std::int64_t>>();
        require(!idx.empty(), "config: empty training set");
        LabeledSet s;
        s.x = Matrix(static_cast<std::int64_t>(idx.size()), t.domain.dim());
        s.y.resize(idx.size());
        Workspace ws;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            require(idx[i] >= 0 && idx[i] < t.domain.size(),
                    "config: corner index out of range");
            t.domain.point(idx[i], s.x.row(static_cast<std::int64_t>(i)));
            s.y[i] = static_cast<std::int8_t>(
                label(t.arch, t.grid, t.params, s.x.row(static_cast<std::int64_t>(i)), ws));
        }
        return s;
    }
    require(train.contains("n"), "config: train needs n or corner_indices");
    return generate_dataset(t.arch, t.grid, t.params, t.domain,
                            train.at("n").get<std::int64_t>(), seed, 0x7472616964ULL);
}

}  // namespace detail

inline nlohmann::json run_oracle_vs_bound(const nlohmann::json& cfg, std::uint64_t seed,
                                          int workers, std::string& csv) {
    auto t = detail::teacher_from_config(cfg, seed);
    const Arch student = arch_from_json(cfg.at("student"));
    require(t.domain.enumerable(), "oracle-vs-bound: domain must be enumerable");
    const int q = t.grid.size();
    std::int64_t pc = 0;
    std::string family;
    if (student.kind == ArchKind::fc) {
        family = student.scaled ? "fc-scaled" : "fc";
        pc = student.scaled ? pc_sfc(t.arch.widths, student.widths)
                            : pc_fc(t.arch.widths, student.widths);
    } else {
        family = student.scaled ? "conv-scaled" : "conv";
        pc = student.scaled ? pc_scn(t.arch.channels, student.channels, student.kernels,
                                     student.s0)
                            : pc_cnn(t.arch.channels, student.channels, student.kernels,
                                     student.s0);
    }
    EnumBudget budget;
    if (cfg.contains("enum_budget")) budget.max_configs = cfg.at("enum_budget").get<std::uint64_t>();
    const OracleCount pt = exact_ptilde(student, t.grid, t.arch, t.params, t.domain,
                                        budget, workers);
    const double lower = std::pow(static_cast<double>(q), -static_cast<double>(pc));
    const bool holds = pt.probability >= lower;

    std::ostringstream os;
    os << "family,q,pc,te_count,config_count,ptilde_exact,q_pow_neg_pc,bound_holds,provenance\n";
    os << family << "," << q << "," << pc << "," << pt.count << "," << pt.total << ","
       << fmt_g17(pt.probability) << "," << fmt_g17(lower) << "," << (holds ? 1 : 0)
       << ",exact\n";
    csv = os.str();
    return {{"kind", "oracle-vs-bound"}, {"family", family},       {"pc", pc},
            {"ptilde", pt.probability}, {"te_count", pt.count},    {"config_count", pt.total},
            {"q_pow_neg_pc", lower},    {"bound_holds", holds}};
}

inline nlohmann::json run_width_sweep(const nlohmann::json& cfg, std::uint64_t seed,
                                      int workers, std::string& csv) {
    auto t = detail::teacher_from_config(cfg, seed);
    require(t.arch.kind == ArchKind::fc, "width-sweep: teacher must be fully connected");
    const auto widths = cfg.at("widths").get<std::vector<int>>();
    require(!widths.empty(), "width-sweep: need at least one width");
    const std::int64_t samples = cfg.value("samples", 1000);
    require(samples >= 1, "width-sweep: samples must be positive");

    const LabeledSet S = detail::trainset_from_config(cfg.at("train"), t, seed);

    GncOptions opt;
    opt.workers = 1;
    if (cfg.contains("max_draws")) opt.max_draws = cfg.at("max_draws").get<std::uint64_t>();

    std::ostringstream os;
    os << "width,samples,mean_test_error,stderr,provenance\n";
    nlohmann::json per_width = nlohmann::json::array();
    const std::int64_t mc_probes = cfg.value("probes", 10000);
    for (std::size_t wi = 0; wi < widths.size(); ++wi) {
        const Arch student = Arch::fc({t.arch.widths.front(), widths[wi], 1});
        std::vector<double> errs(static_cast<std::size_t>(samples), 0.0);
        std::vector<std::thread> pool;
        const int W = std::max(1, std::min(workers, 64));
        for (int w = 0; w < W; ++w) {
            pool.emplace_back([&, w] {
                for (std::int64_t r = w; r < samples; r += W) {
                    const std::uint64_t stream =
                        (static_cast<std::uint64_t>(wi + 1) << 32) +
                        static_cast<std::uint64_t>(r);
                    const GncTrace trace = gnc(student, t.grid, S, seed, stream, opt);
                    errs[static_cast<std::size_t>(r)] =
                        t.domain.enumerable()
                            ? population_error_exact(student, t.grid, trace.params,
                                                     t.arch, t.params, t.domain)
                            : population_error_mc(student, t.grid, trace.params, t.arch,
                                                  t.params, t.domain, mc_probes, seed,
                                                  stream ^ 0x4c44ULL)
                                  .estimate;
                }
            });
        }
        for (auto& th : pool) th.join();
        const double mean =
            std::accumulate(errs.begin(), errs.end(), 0.0) / static_cast<double>(samples);
        double var = 0.0;
        for (double e : errs) var += (e - mean) * (e - mean);
        const double se = samples > 1 ? std::sqrt(var / static_cast<double>(samples - 1) /
                                                  static_cast<double>(samples))
                                      : 0.0;
        const char* prov = t.domain.enumerable() ? "exact" : "monte-carlo";
        os << widths[wi] << "," << samples << "," << fmt_g17(mean) << "," << fmt_g17(se)
           << "," << prov << "\n";
        per_width.push_back({{"width", widths[wi]},
                             {"mean_test_error", mean},
                             {"stderr", se},
                             {"provenance", prov}});
    }
    csv = os.str();
    return {{"kind", "width-sweep"},
            {"train_n", S.n()},
            {"samples", samples},
            {"per_width", per_width}};
}

inline nlohmann::json run_pac_frequency(const nlohmann::json& cfg, std::uint64_t seed,
                                        int workers, std::string& csv) {
    auto t = detail::teacher_from_config(cfg, seed);
    const Arch student = arch_from_json(cfg.at("student"));
    require(t.domain.enumerable(), "pac-frequency: domain must be enumerable");
    const double eps = cfg.at("eps").get<double>();
    const double delta = cfg.at("delta").get<double>();
    const std::int64_t draws = cfg.value("draws", 200);
    require(draws >= 1, "pac-frequency: draws must be positive");
    const std::string variant = cfg.value("variant", std::string("interp"));
    EnumBudget budget;
    if (cfg.contains("enum_budget")) budget.max_configs = cfg.at("enum_budget").get<std::uint64_t>();

    double gamma = 0.0;   // acceptance threshold for the sampler
    double target = eps;  // success means L_D <= target
    std::uint64_t n = 0;
    double c_hat = 0.0;
    if (variant == "interp") {
        const OracleCount pt =
            exact_ptilde(student, t.grid, t.arch, t.params, t.domain, budget, workers);
        require(pt.count > 0, "pac-frequency: teacher not representable by student class");
        c_hat = -std::log(pt.probability);
        n = cfg.contains("n") ? cfg.at("n").get<std::uint64_t>()
                              : n_lemma1(c_hat, eps, delta);
    } else if (variant == "noninterp") {
        const MinErrorResult me =
            exact_min_population_error(student, t.grid, t.arch, t.params, t.domain,
                                       budget, workers);
        require(me.min_error > 0,
                "pac-frequency: labels are realizable; use the interp variant");
        require(eps < 0.5 - me.min_error,
                "pac-frequency: eps must lie in (0, 1/2 - best_error)");
        const double ptilde = static_cast<double>(me.top_table_count) /
                              static_cast<double>(me.total);
        require(ptilde < 0.5, "pac-frequency: surrogate teacher mass must be below 1/2");
        gamma = me.min_error + eps;
        target = me.min_error + 2.0 * eps;
        c_hat = -std::log(ptilde);
        n = cfg.contains("n") ? cfg.at("n").get<std::uint64_t>()
                              : n_noninterp(c_hat, eps, delta);
    } else {
        throw ValidationError("pac-frequency: unknown variant '" + variant + "'");
    }

    GncOptions opt;
    opt.workers = 1;
    opt.threshold = gamma;
    if (cfg.contains("max_draws")) opt.max_draws = cfg.at("max_draws").get<std::uint64_t>();

    std::vector<double> ld(static_cast<std::size_t>(draws), 0.0);
    std::vector<std::thread> pool;
    const int W = std::max(1, std::min(workers, 64));
    for (int w = 0; w < W; ++w) {
        pool.emplace_back([&, w] {
            for (std::int64_t r = w; r < draws; r += W) {
                const LabeledSet S = generate_dataset(
                    t.arch, t.grid, t.params, t.domain, static_cast<std::int64_t>(n),
                    seed, (1ULL << 40) + static_cast<std::uint64_t>(r));
                const GncTrace trace =
                    gnc(student, t.grid, S, seed,
                        (2ULL << 40) + static_cast<std::uint64_t>(r), opt);
                ld[static_cast<std::size_t>(r)] = population_error_exact(
                    student, t.grid, trace.params, t.arch, t.params, t.domain);
            }
        });
    }
    for (auto& th : pool) th.join();

    std::uint64_t successes = 0;
    std::ostringstream os;
    os << "draw,n,l_d,success\n";
    for (std::int64_t r = 0; r < draws; ++r) {
        const bool ok = ld[static_cast<std::size_t>(r)] <= target + 1e-12;
        if (ok) ++successes;
        os << r << "," << n << "," << fmt_g17(ld[static_cast<std::size_t>(r)]) << ","
           << (ok ? 1 : 0) << "\n";
    }
    csv = os.str();
    const double fraction =
        static_cast<double>(successes) / static_cast<double>(draws);
    const double se =
        std::sqrt(delta * (1.0 - delta) / static_cast<double>(draws));
    const double threshold = 1.0 - delta - 3.0 * se;
    return {{"kind", "pac-frequency"}, {"variant", variant},
            {"n", n},                  {"c_hat", c_hat},
            {"gamma", gamma},          {"target_error", target},
            {"draws", draws},          {"success_fraction", fraction},
            {"threshold", threshold},  {"pass", fraction >= threshold}};
}

inline nlohmann::json run_volume_decay(const nlohmann::json& cfg, std::uint64_t seed,
                                       int workers, std::string& csv) {
    auto t = detail::teacher_from_config(cfg, seed);
    const Arch student = arch_from_json(cfg.at("student"));
    require(t.domain.enumerable(), "volume-decay: domain must be enumerable");
    const double eps = cfg.at("eps").get<double>();
    const double delta = cfg.at("delta").get<double>();
    const std::int64_t draws = cfg.value("draws", 200);
    EnumBudget budget;
    if (cfg.contains("enum_budget")) budget.max_configs = cfg.at("enum_budget").get<std::uint64_t>();

    const OracleCount pt =
        exact_ptilde(student, t.grid, t.arch, t.params, t.domain, budget, workers);
    require(pt.count > 0, "volume-decay: teacher not representable by student class");
    const double c_hat = -std::log(pt.probability);
    const std::uint64_t n_full = cfg.contains("n") ? cfg.at("n").get<std::uint64_t>()
                                                   : n_volume(c_hat, eps, delta);
    const std::uint64_t n_q = std::max<std::uint64_t>(1, n_full / 4);
    const std::uint64_t n_h = std::max<std::uint64_t>(1, n_full / 2);

    struct Row {
        double bv_q, bv_h, bv_f;
    };
    std::vector<Row> rows(static_cast<std::size_t>(draws));
    std::vector<std::thread> pool;
    const int W = std::max(1, std::min(workers, 64));
    for (int w = 0; w < W; ++w) {
        pool.emplace_back([&, w] {
            for (std::int64_t r = w; r < draws; r += W) {
                const LabeledSet S = generate_dataset(
                    t.arch, t.grid, t.params, t.domain, static_cast<std::int64_t>(n_full),
                    seed, (3ULL << 40) + static_cast<std::uint64_t>(r));
                auto prefix = [&](std::uint64_t m) {
                    LabeledSet p;
                    p.x = Matrix(static_cast<std::int64_t>(m), S.x.cols);
                    p.y.assign(S.y.begin(), S.y.begin() + static_cast<std::int64_t>(m));
                    std::copy(S.x.data.begin(),
                              S.x.data.begin() + static_cast<std::int64_t>(m) * S.x.cols,
                              p.x.data.begin());
                    return p;
                };
                Row& row = rows[static_cast<std::size_t>(r)];
                const LabeledSet Sq = prefix(n_q), Sh = prefix(n_h);
                row.bv_q = exact_bad_volume(student, t.grid, Sq, t.arch, t.params,
                                            t.domain, eps, budget, 1);
                row.bv_h = exact_bad_volume(student, t.grid, Sh, t.arch, t.params,
                                            t.domain, eps, budget, 1);
                row.bv_f = exact_bad_volume(student, t.grid, S, t.arch, t.params,
                                            t.domain, eps, budget, 1);
            }
        });
    }
    for (auto& th : pool) th.join();

    std::uint64_t le_delta = 0, monotone = 0;
    std::ostringstream os;
    os << "draw,n_quarter,bv_quarter,n_half,bv_half,n_full,bv_full,le_delta,monotone\n";
    for (std::int64_t r = 0; r < draws; ++r) {
        const Row& row = rows[static_cast<std::size_t>(r)];
        const bool ok_delta = row.bv_f <= delta;
        const bool ok_mono = row.bv_q >= row.bv_h && row.bv_h >= row.bv_f;
        if (ok_delta) ++le_delta;
        if (ok_mono) ++monotone;
        os << r << "," << n_q << "," << fmt_g17(row.bv_q) << "," << n_h << ","
           << fmt_g17(row.bv_h) << "," << n_full << "," << fmt_g17(row.bv_f) << ","
           << (ok_delta ? 1 : 0) << "," << (ok_mono ? 1 : 0) << "\n";
    }
    csv = os.str();
    return {{"kind", "volume-decay"},
            {"n_full", n_full},
            {"c_hat", c_hat},
            {"draws", draws},
            {"fraction_le_delta",
             static_cast<double>(le_delta) / static_cast<double>(draws)},
            {"fraction_monotone",
             static_cast<double>(monotone) / static_cast<double>(draws)},
            {"pass_le_delta",
             static_cast<double>(le_delta) / static_cast<double>(draws) >= 1.0 - delta},
            {"pass_monotone",
             static_cast<double>(monotone) / static_cast<double>(draws) >= 0.9}};
}

inline nlohmann::json run_margin_density(const nlohmann::json& cfg, std::uint64_t seed,
                                         int workers, std::string& csv) {
    const int d0 = cfg.at("d0").get<int>();
    const std::int64_t d1 = cfg.at("d1").get<std::int64_t>();
    const int d1s = cfg.at("d1_star").get<int>();
    const double rho = cfg.value("rho", 0.0);
    const std::int64_t n = cfg.at("n").get<std::int64_t>();
    const int trials = cfg.at("trials").get<int>();
    const MarginSummary sum =
        margin_density_experiment(d0, d1, d1s, rho, n, trials, seed, workers);
    std::ostringstream os;
    os << "trial,alpha,beta,log_ratio,degenerate\n";
    for (std::size_t i = 0; i < sum.trials.size(); ++i) {
        const MarginTrial& tr = sum.trials[i];
        os << i << "," << fmt_g17(tr.alpha) << "," << fmt_g17(tr.beta) << ","
           << fmt_g17(tr.degenerate ? 0.0 : tr.log_ratio) << ","
           << (tr.degenerate ? 1 : 0) << "\n";
    }
    csv = os.str();
    return {{"kind", "margin-density"},
            {"trials", trials},
            {"degenerate_count", sum.degenerate_count},
            {"output_length", trials - static_cast<std::int64_t>(sum.degenerate_count)},
            {"fraction_beta_gt_alpha", sum.fraction_beta_gt_alpha}};
}

inline nlohmann::json run_solve_teacher(const nlohmann::json& cfg, std::string& csv) {
    const TeacherScaleResult r = solve_teacher_scale(
        cfg.at("channels").get<std::vector<int>>(),
        cfg.at("kernels").get<std::vector<int>>(), cfg.value("head_positions", 1),
        cfg.at("n").get<std::uint64_t>(), cfg.at("eps").get<double>(),
        cfg.at("delta").get<double>(), cfg.at("q").get<int>());
    std::ostringstream os;
    os << "alpha,pc,target_pc,chat_nats,chat_bits,teacher_params,capped\n";
    os << fmt_g17(r.alpha) << "," << r.pc << "," << fmt_g17(r.target_pc) << ","
       << fmt_g17(r.chat) << "," << fmt_g17(r.chat / kLn2) << "," << r.teacher_params
       << "," << (r.capped ? 1 : 0) << "\n";
    csv = os.str();
    return {{"kind", "solve-teacher"},   {"alpha", r.alpha},
            {"pc", r.pc},                {"target_pc", r.target_pc},
            {"chat_nats", r.chat},       {"chat_bits", r.chat / kLn2},
            {"teacher_params", r.teacher_params}, {"capped", r.capped}};
}

// CSV (columns x1..xd0, y) plus a JSON sidecar with provenance metadata.
inline void write_labeled_set(const std::filesystem::path& dir, const std::string& name,
                              const LabeledSet& s, nlohmann::json sidecar) {
    std::filesystem::create_directories(dir);
    detail::write_file(dir / (name + ".csv"), labeled_set_to_csv(s));
    sidecar["n"] = s.n();
    sidecar["dim"] = s.x.cols;
    detail::write_file(dir / (name + ".json"), sidecar.dump(2) + "\n");
}

// Parse, validate, and execute an experiment config; write results.csv,
// summary.json, and manifest.json into out_dir. Identical configs (including
// worker count) produce byte-identical results.csv.
inline nlohmann::json run_experiment(const std::string& config_text,
                                     const std::filesystem::path& out_dir,
                                     std::int64_t seed_override = -1,
                                     int workers_override = 0) {
    nlohmann::json cfg;
    try {
        cfg = nlohmann::json::parse(config_text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: invalid JSON: ") + e.what());
    }
    require(cfg.is_object(), "config: top level must be an object");
    require(cfg.value("schema", 0) == 1, "config: schema must be 1");
    require(cfg.contains("kind"), "config: missing kind");
    const std::string kind = cfg.at("kind").get<std::string>();
    const std::uint64_t seed = seed_override >= 0
                                   ? static_cast<std::uint64_t>(seed_override)
                                   : cfg.value("seed", 1ULL);
    const int workers =
        workers_override > 0 ? workers_override : cfg.value("workers", 1);
    require(workers >= 1, "config: workers must be positive");

    StageClock clock;
    std::string csv;
    nlohmann::json summary;
    try {
        if (kind == "oracle-vs-bound")
            summary = run_oracle_vs_bound(cfg, seed, workers, csv);
        else if (kind == "width-sweep")
            summary = run_width_sweep(cfg, seed, workers, csv);
        else if (kind == "pac-frequency")
            summary = run_pac_frequency(cfg, seed, workers, csv);
        else if (kind == "volume-decay")
            summary = run_volume_decay(cfg, seed, workers, csv);
        else if (kind == "margin-density")
            summary = run_margin_density(cfg, seed, workers, csv);
        else if (kind == "solve-teacher")
            summary = run_solve_teacher(cfg, csv);
        else
            throw ValidationError("config: unknown kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    clock.lap("compute");

    summary["seed"] = seed;
    summary["workers"] = workers;
    const std::string summary_text = summary.dump(2) + "\n";

    std::filesystem::create_directories(out_dir);
    detail::write_file(out_dir / "results.csv", csv);
    detail::write_file(out_dir / "summary.json", summary_text);
    clock.lap("emit");

    nlohmann::json manifest = {
        {"config_sha256", sha256_hex(config_text)},
        {"tool_version", kToolVersion},
        {"stages", clock.stages},
        {"outputs",
         {{{"file", "results.csv"}, {"sha256", sha256_hex(csv)}},
          {{"file", "summary.json"}, {"sha256", sha256_hex(summary_text)}}}}};
    detail::write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return manifest;
}

}  // namespace gnclab
