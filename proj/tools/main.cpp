#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gnclab/experiments.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw gnclab::ValidationError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json parse_json_file(const std::string& path) {
    try {
        return nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw gnclab::ValidationError(path + ": invalid JSON: " + e.what());
    }
}

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << "\n"; }

struct Instance {
    gnclab::detail::TeacherSetup t;
    gnclab::Arch student;
};

// Shared instance shape for the gnc and oracle subcommands:
// {grid, domain, teacher{...}, student{...}, train?{n | corner_indices}}
Instance load_instance(const nlohmann::json& cfg, std::uint64_t seed) {
    Instance in{gnclab::detail::teacher_from_config(cfg, seed),
                gnclab::arch_from_json(cfg.at("student"))};
    gnclab::require(in.student.input_dim() == in.t.domain.dim(),
                    "config: domain dimension does not match student input");
    return in;
}

std::vector<double> level_values(const gnclab::QuantGrid& g, const gnclab::Levels& lv) {
    std::vector<double> v(lv.size());
    for (std::size_t i = 0; i < lv.size(); ++i) v[i] = g.value(lv[i]);
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Posterior sampling laboratory for quantized teacher-student networks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", gnclab::kToolVersion);

    std::uint64_t seed = 1;
    int workers = 1;
    std::string out_dir = "out";
    app.add_option("--seed", seed, "root seed for all derived streams")
        ->capture_default_str();
    app.add_option("--workers", workers, "worker threads (never changes results)")
        ->capture_default_str();
    app.add_option("--out-dir", out_dir, "output directory")->capture_default_str();

    // ---- bounds ----------------------------------------------------------
    auto* cmd_bounds = app.add_subcommand("bounds", "print a bound report as JSON");
    cmd_bounds->fallthrough();
    double chat = 0.0, eps = 0.0, delta = 0.0;
    double phat = -1.0, eta = 0.1;
    std::uint64_t at_n = 0;
    std::int64_t m_star = 0, sp_d0 = 1;
    int sp_q = 3;
    cmd_bounds->add_option("--chat-nats", chat, "effective complexity in nats")
        ->required();
    cmd_bounds->add_option("--eps", eps, "target population error")->required();
    cmd_bounds->add_option("--delta", delta, "failure probability")->required();
    cmd_bounds->add_option("--n", at_n, "sample size for the inverse volume bound");
    cmd_bounds->add_option("--phat", phat, "observed interpolation probability");
    cmd_bounds->add_option("--eta", eta, "tail split for the nonuniform bound")
        ->capture_default_str();
    cmd_bounds->add_option("--m-star", m_star, "teacher support size for the sparse rule");
    cmd_bounds->add_option("--d0", sp_d0, "input dimension for the sparse rule");
    cmd_bounds->add_option("--q", sp_q, "grid cardinality for the sparse rule")
        ->capture_default_str();
    cmd_bounds->callback([&] {
        nlohmann::json report = {
            {"inputs", {{"chat_nats", chat}, {"chat_bits", chat / gnclab::kLn2},
                        {"eps", eps}, {"delta", delta}}},
            {"n_lemma1", gnclab::n_lemma1(chat, eps, delta)},
            {"n_volume", gnclab::n_volume(chat, eps, delta)},
            {"n_noninterp", gnclab::n_noninterp(chat, eps, delta)},
            {"n_refined", gnclab::n_refined(chat, eps, delta, delta)},
            {"n_pacbayes_markov", gnclab::n_pacbayes_markov(chat, eps, delta)},
        };
        if (at_n > 0) {
            const gnclab::VolumeDelta v = gnclab::bad_volume_delta(chat, eps, at_n);
            report["bad_volume_delta"] = {{"n", at_n},
                                          {"delta", v.delta},
                                          {"informative", v.informative}};
        }
        if (phat >= 0) {
            gnclab::require(at_n > 0, "bounds: --phat needs --n for the data-dependent eps");
            report["eps_nonuniform"] = gnclab::eps_nonuniform(phat, at_n, delta, eta);
            report["eps_pscard"] = gnclab::eps_pscard(phat, at_n, delta);
        }
        if (m_star > 0) {
            const double cs = gnclab::chat_sparse(m_star, sp_d0, sp_q);
            report["sparse"] = {
                {"chat_sparse_nats", cs},
                {"n_sparse", gnclab::n_sparse(m_star, sp_d0, sp_q, eps, delta)},
                {"below_chat_input", cs < chat}};
        }
        print_json(report);
    });

    // ---- gnc -------------------------------------------------------------
    auto* cmd_gnc = app.add_subcommand("gnc", "run Guess & Check on an instance config");
    cmd_gnc->fallthrough();
    std::string gnc_config;
    std::uint64_t gnc_stream = 0, gnc_max_draws = 100000000ULL;
    double gnc_threshold = 0.0;
    cmd_gnc->add_option("--config", gnc_config, "instance config JSON")->required();
    cmd_gnc->add_option("--stream", gnc_stream, "draw stream id")->capture_default_str();
    cmd_gnc->add_option("--max-draws", gnc_max_draws, "draw budget")
        ->capture_default_str();
    cmd_gnc->add_option("--threshold", gnc_threshold,
                        "accept when training error is at most this")
        ->capture_default_str();
    bool dump_train = false;
    cmd_gnc->add_flag("--dump-train", dump_train,
                      "write the training set (CSV + JSON sidecar) to the output dir");
    cmd_gnc->callback([&] {
        const nlohmann::json cfg = parse_json_file(gnc_config);
        const Instance in = load_instance(cfg, seed);
        gnclab::require(cfg.contains("train"), "config: gnc needs a train object");
        const gnclab::LabeledSet S =
            gnclab::detail::trainset_from_config(cfg.at("train"), in.t, seed);
        if (dump_train)
            gnclab::write_labeled_set(out_dir, "train", S,
                                      {{"seed", seed},
                                       {"domain", cfg.at("domain")},
                                       {"train", cfg.at("train")}});
        gnclab::GncOptions opt;
        opt.max_draws = gnc_max_draws;
        opt.workers = workers;
        opt.threshold = gnc_threshold;
        const gnclab::GncTrace tr = gnclab::gnc(in.student, in.t.grid, S, seed,
                                                gnc_stream, opt);
        print_json({{"t", tr.t},
                    {"draws_budget_used", tr.draws_budget_used},
                    {"train_error", tr.train_error},
                    {"train_n", S.n()},
                    {"params", level_values(in.t.grid, tr.params)},
                    {"seed", seed},
                    {"stream", gnc_stream},
                    {"workers", workers}});
    });

    // ---- oracle ----------------------------------------------------------
    auto* cmd_oracle =
        app.add_subcommand("oracle", "exact enumeration counts for an instance config");
    cmd_oracle->fallthrough();
    std::string oracle_config;
    std::uint64_t enum_budget = 100000000ULL;
    bool with_posterior = false, with_sparsest = false;
    cmd_oracle->add_option("--config", oracle_config, "instance config JSON")->required();
    cmd_oracle->add_option("--enum-budget", enum_budget, "max configurations to visit")
        ->capture_default_str();
    cmd_oracle->add_flag("--posterior", with_posterior,
                         "bucket interpolators by full-domain function table");
    cmd_oracle->add_flag("--sparsest", with_sparsest,
                         "search for the minimum-support interpolator");
    cmd_oracle->callback([&] {
        const nlohmann::json cfg = parse_json_file(oracle_config);
        const Instance in = load_instance(cfg, seed);
        gnclab::EnumBudget budget{enum_budget};
        nlohmann::json out = {{"config_count",
                               gnclab::enum_total(in.student, in.t.grid, budget)},
                              {"provenance", "exact"}};
        if (in.t.domain.enumerable()) {
            const gnclab::OracleCount pt = gnclab::exact_ptilde(
                in.student, in.t.grid, in.t.arch, in.t.params, in.t.domain, budget,
                workers);
            out["ptilde"] = {{"count", pt.count},
                            {"total", pt.total},
                            {"probability", pt.probability}};
            if (pt.count > 0) out["chat_oracle_nats"] = -std::log(pt.probability);
        }
        if (cfg.contains("train")) {
            const gnclab::LabeledSet S =
                gnclab::detail::trainset_from_config(cfg.at("train"), in.t, seed);
            const gnclab::OracleCount ph =
                gnclab::exact_phat(in.student, in.t.grid, S, budget, workers);
            out["phat"] = {{"count", ph.count},
                          {"total", ph.total},
                          {"probability", ph.probability}};
            if (with_posterior && in.t.domain.enumerable()) {
                const gnclab::PosteriorTables post = gnclab::exact_posterior(
                    in.student, in.t.grid, S, in.t.domain.all_points(), budget, workers);
                nlohmann::json tables = nlohmann::json::array();
                for (const auto& [table, count] : post.counts) {
                    std::string key(table.size(), '+');
                    for (std::size_t i = 0; i < table.size(); ++i)
                        if (table[i] < 0) key[i] = '-';
                    tables.push_back({{"table", key}, {"count", count}});
                }
                out["posterior"] = {{"interpolators", post.interpolators},
                                   {"distinct_tables", post.counts.size()},
                                   {"tables", tables}};
            }
            if (with_sparsest) {
                const gnclab::SparseResult sp =
                    gnclab::sparsest_interpolator(in.student, in.t.grid, S, budget);
                out["sparsest"] = {{"found", sp.found},
                                  {"support", sp.support},
                                  {"config_index", sp.index}};
                if (sp.found)
                    out["sparsest"]["params"] = level_values(in.t.grid, sp.params);
            }
        }
        print_json(out);
    });

    // ---- margins ---------------------------------------------------------
    auto* cmd_margins = app.add_subcommand(
        "margins", "continuous margin density experiment (CSV + JSON summary)");
    cmd_margins->fallthrough();
    std::int64_t mg_d0 = 50, mg_d1 = 1000, mg_n = 5000;
    std::int64_t mg_d1s = 100;
    double mg_rho = 0.01;
    int mg_trials = 100;
    cmd_margins->add_option("--d0", mg_d0, "input dimension")->capture_default_str();
    cmd_margins->add_option("--d1", mg_d1, "student width")->capture_default_str();
    cmd_margins->add_option("--d1-star", mg_d1s, "teacher width")->capture_default_str();
    cmd_margins->add_option("--rho", mg_rho, "leaky slope")->capture_default_str();
    cmd_margins->add_option("--n", mg_n, "points per trial")->capture_default_str();
    cmd_margins->add_option("--trials", mg_trials, "independent trials")
        ->capture_default_str();
    cmd_margins->callback([&] {
        const nlohmann::json cfg = {
            {"schema", 1},       {"kind", "margin-density"}, {"d0", mg_d0},
            {"d1", mg_d1},       {"d1_star", mg_d1s},        {"rho", mg_rho},
            {"n", mg_n},         {"trials", mg_trials},      {"seed", seed},
            {"workers", workers}};
        const nlohmann::json manifest =
            gnclab::run_experiment(cfg.dump(2) + "\n", out_dir);
        print_json({{"out_dir", out_dir},
                    {"summary", parse_json_file(out_dir + "/summary.json")},
                    {"manifest", manifest}});
    });

    // ---- solve-teacher ----------------------------------------------------
    auto* cmd_solve = app.add_subcommand(
        "solve-teacher", "narrowest teacher meeting a sample budget (channel spec JSON)");
    cmd_solve->fallthrough();
    std::string solve_config;
    cmd_solve->add_option("config", solve_config, "channel spec JSON")->required();
    cmd_solve->callback([&] {
        const nlohmann::json cfg = parse_json_file(solve_config);
        const auto channels = cfg.at("channels").get<std::vector<int>>();
        const auto kernels = cfg.at("kernels").get<std::vector<int>>();
        const int head_positions = cfg.value("head_positions", 1);
        const std::uint64_t n =
            cfg.contains("N") ? cfg.at("N").get<std::uint64_t>()
                              : cfg.at("n").get<std::uint64_t>();
        const int q = cfg.contains("Q") ? cfg.at("Q").get<int>() : cfg.at("q").get<int>();
        const gnclab::TeacherScaleResult r = gnclab::solve_teacher_scale(
            channels, kernels, head_positions, n, cfg.at("eps").get<double>(),
            cfg.at("delta").get<double>(), q);
        print_json({{"alpha", r.alpha},
                    {"pc", r.pc},
                    {"target_pc", r.target_pc},
                    {"chat_nats", r.chat},
                    {"chat_bits", r.chat / gnclab::kLn2},
                    {"teacher_params", r.teacher_params},
                    {"capped", r.capped}});
    });

    // ---- experiment run ----------------------------------------------------
    auto* cmd_exp = app.add_subcommand("experiment", "config-driven experiment runner");
    cmd_exp->fallthrough();
    cmd_exp->require_subcommand(1);
    auto* cmd_run = cmd_exp->add_subcommand("run", "run an experiment config");
    cmd_run->fallthrough();
    std::string exp_config;
    cmd_run->add_option("config", exp_config, "experiment config JSON")->required();
    cmd_run->callback([&] {
        const std::string text = read_file(exp_config);
        const std::int64_t seed_override =
            app.count("--seed") ? static_cast<std::int64_t>(seed) : -1;
        const int workers_override = app.count("--workers") ? workers : 0;
        const nlohmann::json manifest =
            gnclab::run_experiment(text, out_dir, seed_override, workers_override);
        print_json({{"out_dir", out_dir},
                    {"summary", parse_json_file(out_dir + "/summary.json")},
                    {"manifest", manifest}});
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const gnclab::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const gnclab::BudgetError& e) {
        std::cerr << "budget error: " << e.what() << "\n";
        return 3;
    } catch (const gnclab::InvariantError& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
