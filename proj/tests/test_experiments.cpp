#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gnclab/errors.hpp"
#include "gnclab/experiments.hpp"

using namespace gnclab;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "gnclab_tests" / name;
    fs::remove_all(dir);
    return dir;
}

// single-input teacher on four points; the student class has 3^7 configs
const char* kOracleCfg = R"({
  "schema": 1,
  "kind": "oracle-vs-bound",
  "seed": 1,
  "grid": {"q": 3},
  "domain": {"kind": "finite", "points": [[-2],[-1],[1],[2]]},
  "teacher": {"family": "fc", "widths": [1,1,1], "params": [1,0,1,-1]},
  "student": {"family": "fc", "widths": [1,2,1]}
})";

}  // namespace

TEST_CASE("sha256 matches the reference vectors", "[experiments]") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    // streaming across block boundaries agrees with one-shot hashing
    const std::string long_input(200, 'x');
    Sha256 h;
    h.update(long_input.data(), 100);
    h.update(long_input.data() + 100, 100);
    CHECK(h.hex() == sha256_hex(long_input));
}

TEST_CASE("g17 formatting round trips doubles", "[experiments]") {
    CHECK(fmt_g17(1.0) == "1");
    CHECK(fmt_g17(0.5) == "0.5");
    CHECK(fmt_g17(0.1) == "0.10000000000000001");
    const double v = 224.0 / 2187.0;
    CHECK(std::stod(fmt_g17(v)) == v);
}

TEST_CASE("chi-square pools small cells", "[experiments]") {
    // uniform observed counts: zero statistic, full degrees of freedom
    const GofResult u = chi_square_gof({50, 50, 50, 50}, {0.25, 0.25, 0.25, 0.25});
    CHECK(u.statistic == Approx(0.0).margin(1e-12));
    CHECK(u.df == 3);
    CHECK(u.p_value == Approx(1.0).margin(1e-9));
    CHECK(u.pooled_cells == 0);

    // one undersized cell folds into a retained one
    const GofResult p = chi_square_gof({1, 33, 33, 33}, {0.01, 0.33, 0.33, 0.33});
    CHECK(p.pooled_cells == 1);
    CHECK(p.df == 2);

    // everything undersized collapses to a single cell: vacuous test
    const GofResult v = chi_square_gof({3, 2}, {0.5, 0.5});
    CHECK(v.pooled_cells == 2);
    CHECK(v.df == 0);
    CHECK(v.p_value == 1.0);

    CHECK_THROWS_AS(chi_square_gof({1, 2}, {0.5}), ValidationError);
    CHECK_THROWS_AS(chi_square_gof({}, {}), ValidationError);
}

TEST_CASE("config validation rejects malformed experiments", "[experiments]") {
    const fs::path dir = fresh_dir("invalid");
    CHECK_THROWS_AS(run_experiment("not json", dir), ValidationError);
    CHECK_THROWS_AS(run_experiment("{\"kind\": \"oracle-vs-bound\"}", dir),
                    ValidationError);  // missing schema
    CHECK_THROWS_AS(run_experiment("{\"schema\": 1, \"kind\": \"mystery\"}", dir),
                    ValidationError);

    // delta outside the bound's validity range, reported by name
    const std::string bad_delta = R"({
      "schema": 1, "kind": "pac-frequency", "seed": 1,
      "grid": {"q": 3},
      "domain": {"kind": "finite", "points": [[-2],[-1],[1],[2]]},
      "teacher": {"family": "fc", "widths": [1,1,1], "params": [1,0,1,-1]},
      "student": {"family": "fc", "widths": [1,2,1]},
      "eps": 0.2, "delta": 0.5, "draws": 5
    })";
    CHECK_THROWS_WITH(run_experiment(bad_delta, fresh_dir("bad_delta")),
                      ContainsSubstring("(0,1/5)"));
}

TEST_CASE("oracle-vs-bound run is reproducible across workers", "[experiments]") {
    const fs::path dir1 = fresh_dir("ovb1");
    const fs::path dir4 = fresh_dir("ovb4");
    const nlohmann::json m1 = run_experiment(kOracleCfg, dir1, -1, 1);
    const nlohmann::json m4 = run_experiment(kOracleCfg, dir4, -1, 4);

    const std::string csv1 = slurp(dir1 / "results.csv");
    const std::string csv4 = slurp(dir4 / "results.csv");
    CHECK(csv1 == csv4);  // byte identical regardless of worker count
    CHECK(m1.at("config_sha256") == sha256_hex(kOracleCfg));
    CHECK(m1.at("config_sha256") == m4.at("config_sha256"));
    CHECK(m1.at("tool_version") == kToolVersion);
    CHECK(m1.at("outputs")[0].at("sha256") == sha256_hex(csv1));
    CHECK(m1.at("outputs")[0].at("sha256") == m4.at("outputs")[0].at("sha256"));

    const nlohmann::json sum = nlohmann::json::parse(slurp(dir1 / "summary.json"));
    CHECK(sum.at("kind") == "oracle-vs-bound");
    CHECK(sum.at("te_count") == 214);
    CHECK(sum.at("config_count") == 2187);
    CHECK(sum.at("pc") == 5);
    CHECK(sum.at("bound_holds") == true);
    CHECK(sum.at("ptilde").get<double>() == Approx(214.0 / 2187.0).epsilon(1e-12));
    CHECK(sum.at("q_pow_neg_pc").get<double>() == Approx(std::pow(3.0, -5.0)).epsilon(1e-12));

    // header and a single exact-provenance row
    CHECK(csv1.rfind("family,q,pc,te_count,config_count,ptilde_exact,q_pow_neg_pc,"
                     "bound_holds,provenance\n", 0) == 0);
    CHECK_THAT(csv1, ContainsSubstring(",exact\n"));
    CHECK_THAT(csv1, ContainsSubstring(",1,exact"));  // bound_holds flag
}

TEST_CASE("seed override lands in the summary", "[experiments]") {
    const fs::path dir = fresh_dir("seed_override");
    run_experiment(kOracleCfg, dir, 5, 1);
    const nlohmann::json sum = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(sum.at("seed") == 5);
    CHECK(sum.at("workers") == 1);
}

TEST_CASE("width sweep emits one row per width", "[experiments]") {
    const std::string cfg = R"({
      "schema": 1, "kind": "width-sweep", "seed": 1,
      "grid": {"q": 3},
      "domain": {"kind": "hypercube", "dim": 3},
      "teacher": {"family": "fc", "widths": [3,1,1], "params": [1,1,-1,0,1,-1]},
      "train": {"corner_indices": [0,3,5,6,7]},
      "widths": [2,4],
      "samples": 20
    })";
    const fs::path dir = fresh_dir("width_sweep");
    run_experiment(cfg, dir, -1, 4);
    const std::string csv = slurp(dir / "results.csv");
    CHECK(csv.rfind("width,samples,mean_test_error,stderr,provenance\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + two widths

    const nlohmann::json sum = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(sum.at("train_n") == 5);
    CHECK(sum.at("per_width").size() == 2);
    CHECK(sum.at("per_width")[0].at("width") == 2);
    CHECK(sum.at("per_width")[0].at("provenance") == "exact");
    const double e2 = sum.at("per_width")[0].at("mean_test_error").get<double>();
    const double e4 = sum.at("per_width")[1].at("mean_test_error").get<double>();
    CHECK(e2 >= 0.0);
    CHECK(e2 <= 1.0);
    CHECK(e4 >= 0.0);
    CHECK(e4 <= 1.0);

    // reruns with a different worker count reproduce the bytes
    const fs::path dir2 = fresh_dir("width_sweep2");
    run_experiment(cfg, dir2, -1, 1);
    CHECK(slurp(dir2 / "results.csv") == csv);
}

TEST_CASE("pac-frequency handles an explicit one-sample budget", "[experiments]") {
    const std::string cfg = R"({
      "schema": 1, "kind": "pac-frequency", "seed": 1,
      "grid": {"q": 3},
      "domain": {"kind": "finite", "points": [[-2],[-1],[1],[2]]},
      "teacher": {"family": "fc", "widths": [1,1,1], "params": [1,0,1,-1]},
      "student": {"family": "fc", "widths": [1,2,1]},
      "eps": 0.2, "delta": 0.1, "draws": 30, "n": 1
    })";
    const fs::path dir = fresh_dir("pac_n1");
    run_experiment(cfg, dir, -1, 2);
    const nlohmann::json sum = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(sum.at("variant") == "interp");
    CHECK(sum.at("n") == 1);
    CHECK(sum.at("draws") == 30);
    const double frac = sum.at("success_fraction").get<double>();
    CHECK(frac >= 0.0);
    CHECK(frac <= 1.0);
    CHECK(sum.at("pass").get<bool>() ==
          (frac >= sum.at("threshold").get<double>()));

    const std::string csv = slurp(dir / "results.csv");
    CHECK(csv.rfind("draw,n,l_d,success\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 31);
}

TEST_CASE("volume decay reports prefix monotonicity", "[experiments]") {
    const std::string cfg = R"({
      "schema": 1, "kind": "volume-decay", "seed": 1,
      "grid": {"q": 3},
      "domain": {"kind": "finite", "points": [[-2],[-1],[1],[2]]},
      "teacher": {"family": "fc", "widths": [1,1,1], "params": [1,0,1,-1]},
      "student": {"family": "fc", "widths": [1,2,1]},
      "eps": 0.25, "delta": 0.1, "draws": 10, "n": 8
    })";
    const fs::path dir = fresh_dir("volume_decay");
    run_experiment(cfg, dir, -1, 3);
    const nlohmann::json sum = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(sum.at("kind") == "volume-decay");
    CHECK(sum.at("n_full") == 8);
    CHECK(sum.at("draws") == 10);
    CHECK(sum.at("fraction_monotone").get<double>() >= 0.0);
    const std::string csv = slurp(dir / "results.csv");
    CHECK(csv.rfind("draw,n_quarter,bv_quarter,n_half,bv_half,n_full,bv_full,"
                    "le_delta,monotone\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
}

TEST_CASE("margin-density run writes the full artifact set", "[experiments]") {
    const std::string cfg = R"({
      "schema": 1, "kind": "margin-density", "seed": 3,
      "d0": 4, "d1": 8, "d1_star": 2, "rho": 0.05, "n": 50, "trials": 10
    })";
    const fs::path dir = fresh_dir("margin_density");
    const nlohmann::json manifest = run_experiment(cfg, dir, -1, 2);
    CHECK(fs::exists(dir / "results.csv"));
    CHECK(fs::exists(dir / "summary.json"));
    CHECK(fs::exists(dir / "manifest.json"));

    const nlohmann::json sum = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(sum.at("trials") == 10);
    const std::int64_t degenerate = sum.at("degenerate_count").get<std::int64_t>();
    CHECK(sum.at("output_length") == 10 - degenerate);

    const std::string csv = slurp(dir / "results.csv");
    CHECK(csv.rfind("trial,alpha,beta,log_ratio,degenerate\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);

    // manifest digests describe the files on disk
    const nlohmann::json disk = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(disk.at("config_sha256") == sha256_hex(cfg));
    for (const auto& out : disk.at("outputs"))
        CHECK(out.at("sha256") ==
              sha256_hex(slurp(dir / out.at("file").get<std::string>())));
    CHECK(disk.at("config_sha256") == manifest.at("config_sha256"));
}

TEST_CASE("solve-teacher run reports the operating point", "[experiments]") {
    const std::string cfg = R"({
      "schema": 1, "kind": "solve-teacher", "seed": 1,
      "channels": [1, 4, 4], "kernels": [3, 3],
      "n": 2000, "eps": 0.3, "delta": 0.1, "q": 3
    })";
    const fs::path dir = fresh_dir("solve_teacher");
    run_experiment(cfg, dir);
    const nlohmann::json sum = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(sum.at("kind") == "solve-teacher");
    const double alpha = sum.at("alpha").get<double>();
    CHECK(alpha > 0.0);
    CHECK(alpha <= 1.0);
    CHECK(sum.at("chat_bits").get<double>() ==
          Approx(sum.at("chat_nats").get<double>() / kLn2));
    if (!sum.at("capped").get<bool>())
        CHECK(static_cast<double>(sum.at("pc").get<std::int64_t>()) >=
              sum.at("target_pc").get<double>());
    const std::string csv = slurp(dir / "results.csv");
    CHECK(csv.rfind("alpha,pc,target_pc,chat_nats,chat_bits,teacher_params,capped\n",
                    0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
}

TEST_CASE("labeled sets are written with a provenance sidecar", "[experiments]") {
    LabeledSet s;
    s.x = Matrix(2, 1);
    s.x.at(0, 0) = 1;
    s.x.at(1, 0) = -1;
    s.y = {1, -1};
    const fs::path dir = fresh_dir("labeled_set");
    write_labeled_set(dir, "train", s, {{"source", "unit-test"}});
    CHECK(slurp(dir / "train.csv") == labeled_set_to_csv(s));
    const nlohmann::json side = nlohmann::json::parse(slurp(dir / "train.json"));
    CHECK(side.at("n") == 2);
    CHECK(side.at("dim") == 1);
    CHECK(side.at("source") == "unit-test");
}
