#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "bimatch/csv_io.hpp"
#include "bimatch/pipeline.hpp"
#include "bimatch/rng.hpp"
#include "bimatch/simulator.hpp"
#include "doctest.h"

using namespace bimatch;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("bimatch_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("writers and load_directory round-trip a full panel") {
    ScenarioSpec spec;
    spec.scenario = 'a';
    spec.N = 30;
    spec.M = 15;
    spec.T = 30;
    SimData data = generate(spec, mix_seed(9, 0), /*store_full=*/true);
    PanelDataset p = to_panel(data);
    // The pairwise covariate only exists on neighboring (i, j) pairs; make
    // sure this draw actually has some, so its file is non-trivial.
    REQUIRE(std::any_of(p.P.begin(), p.P.end(), [](double v) { return v != 0.0; }));

    TempDir dir("roundtrip");
    write_outcomes_csv(dir.file("outcomes.csv"), p);
    write_treatments_csv(dir.file("treatments.csv"), p);
    write_network_csv(dir.file("network.csv"), p);
    write_x_covariates_csv(dir.file("x_covariates.csv"), p);
    write_w_covariates_csv(dir.file("w_covariates.csv"), p);
    write_p_covariates_csv(dir.file("p_covariates.csv"), p);
    write_exposures_csv(dir.file("exposures.csv"), data.E, p.T, p.M);

    LoadedData loaded = load_directory(dir.str());
    CHECK(loaded.has_treatments);
    CHECK(loaded.has_network);
    CHECK(loaded.has_exposures);
    const PanelDataset& q = loaded.panel;
    REQUIRE(q.T == p.T);
    REQUIRE(q.N == p.N);
    REQUIRE(q.M == p.M);
    CHECK(q.A == p.A);
    CHECK(q.G == p.G);
    CHECK(q.Y == p.Y);
    CHECK(q.X == p.X);
    CHECK(q.W == p.W);
    CHECK(q.P == p.P);
    CHECK(loaded.exposures == data.E);
    CHECK(validate(q).ok());
}

TEST_CASE("csv ingestion rejects malformed inputs") {
    TempDir dir("badcsv");
    SUBCASE("missing outcomes.csv") {
        CHECK_THROWS_AS(load_directory(dir.str()), IoError);
    }
    SUBCASE("wrong header") {
        write_text_file(dir.file("outcomes.csv"), "time,unit,value\n1,1,0.5\n");
        CHECK_THROWS_AS(load_directory(dir.str()), IoError);
    }
    SUBCASE("wrong field count") {
        write_text_file(dir.file("outcomes.csv"), "t,j,y\n1,1\n");
        CHECK_THROWS_AS(load_directory(dir.str()), IoError);
    }
    SUBCASE("non-binary exposure") {
        write_text_file(dir.file("outcomes.csv"), "t,j,y\n1,1,0.5\n2,1,0.7\n");
        write_text_file(dir.file("exposures.csv"), "t,j,e\n1,1,0.5\n2,1,0\n");
        CHECK_THROWS_AS(load_directory(dir.str()), IoError);
    }
    SUBCASE("zero or negative index") {
        write_text_file(dir.file("outcomes.csv"), "t,j,y\n0,1,0.5\n");
        CHECK_THROWS_AS(load_directory(dir.str()), IoError);
    }
}

TEST_CASE("pipeline exits with the validation code on unusable input") {
    SUBCASE("no exposure source") {
        TempDir in("noexpo"), out("noexpo_out");
        write_text_file(in.file("outcomes.csv"), "t,j,y\n1,1,0.5\n2,1,0.7\n");
        RunConfig c;
        c.input_dir = in.str();
        c.out_dir = out.str();
        CHECK(run_pipeline(c) == kExitValidation);
    }
    SUBCASE("missing outcome cells") {
        TempDir in("holes"), out("holes_out");
        // t=2,j=1 never mentioned -> NaN cell.
        write_text_file(in.file("outcomes.csv"), "t,j,y\n1,1,0.5\n3,1,0.7\n");
        write_text_file(in.file("exposures.csv"), "t,j,e\n1,1,1\n2,1,0\n3,1,0\n");
        RunConfig c;
        c.input_dir = in.str();
        c.out_dir = out.str();
        CHECK(run_pipeline(c) == kExitValidation);
    }
}

TEST_CASE("single-unit pipeline recovers a constant contrast exactly") {
    TempDir in("single"), out("single_out");
    const int T = 12;
    std::vector<std::uint8_t> e(T, 0);
    e[2] = e[5] = e[8] = 1;  // times 3, 6, 9
    std::ostringstream y;
    y << "t,j,y\n";
    for (int t = 0; t < T; ++t) {
        y << t + 1 << ",1," << (e[t] ? 5.0 : 1.0) << '\n';
    }
    write_text_file(in.file("outcomes.csv"), y.str());
    write_exposures_csv(in.file("exposures.csv"), e, T, 1);

    RunConfig c;
    c.input_dir = in.str();
    c.out_dir = out.str();
    CHECK(run_pipeline(c) == kExitOk);

    for (const char* name : {"matchset.json", "estimate.json", "inference.json"}) {
        CHECK(fs::exists(out.path / "unit_1" / name));
    }
    CHECK(fs::exists(out.path / "summary.csv"));
    CHECK_FALSE(fs::exists(out.path / "global_test.json"));  // single unit

    std::ifstream f(out.path / "unit_1" / "estimate.json");
    json est = json::parse(f);
    CHECK(est["unit"] == 1);
    bool any_ok = false;
    for (const auto& m : est["methods"]) {
        if (!m["ok"].get<bool>()) continue;
        any_ok = true;
        // Every exposed period differs from any unexposed one by exactly 4.
        CHECK(m["tau_hat"].get<double>() == doctest::Approx(4.0).epsilon(1e-12));
    }
    CHECK(any_ok);
}

TEST_CASE("multi-unit pipeline on a long panel produces the global test") {
    TempDir in("multi"), out("multi_out");
    const int T = 1000, N = 2, M = 3;
    PanelDataset p = PanelDataset::zeros(T, N, M);
    Rng rng(314);
    for (auto& v : p.A) v = rng.bernoulli(0.4) ? 1.0 : 0.0;
    for (auto& v : p.G) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    for (int t = 0; t < T; ++t) {
        for (int j = 0; j < M; ++j) {
            int c = 0;
            for (int i = 0; i < N; ++i) c += p.a(t, i) != 0.0 && p.g(t, i, j) != 0.0;
            const double exposed = c >= 1 ? 1.0 : 0.0;
            p.Y[size_t(t) * M + j] =
                1.5 * exposed + 0.001 * t + 0.2 * j + 0.3 * rng.normal();
        }
    }
    write_outcomes_csv(in.file("outcomes.csv"), p);
    write_treatments_csv(in.file("treatments.csv"), p);
    write_network_csv(in.file("network.csv"), p);

    RunConfig c;
    c.input_dir = in.str();
    c.out_dir = out.str();
    c.exposure = "threshold:d=1";
    CHECK(run_pipeline(c) == kExitOk);
    CHECK(fs::exists(out.path / "global_test.json"));
    for (int j = 1; j <= M; ++j) {
        CHECK(fs::exists(out.path / ("unit_" + std::to_string(j)) / "inference.json"));
    }

    std::ifstream f(out.path / "global_test.json");
    json g = json::parse(f);
    for (const auto& m : g["methods"]) {
        REQUIRE(m["ok"].get<bool>());
        // The exposure effect is real and large, so the global null falls.
        CHECK(m["global_reject"].get<bool>());
        CHECK(m["p_values"].size() == size_t(M));
    }

    std::ifstream fe(out.path / "unit_1" / "estimate.json");
    json est = json::parse(fe);
    for (const auto& m : est["methods"]) {
        if (!m["ok"].get<bool>()) continue;
        CHECK(m["tau_hat"].get<double>() == doctest::Approx(1.5).epsilon(0.25));
    }
}

TEST_CASE("config files mirror the option surface") {
    TempDir dir("config");
    write_text_file(dir.file("run.cfg"),
                    "# analysis settings\n"
                    "input = data/in\n"
                    "out = data/out\n"
                    "exposure = proportion:th=0.5\n"
                    "delta = 1.5\n"
                    "delta_prime = inf\n"
                    "eps = 4\n"
                    "methods = 1-1,1-1/2\n"
                    "alpha = 0.1\n"
                    "seed = 7\n"
                    "units = 2,5\n");
    RunConfig c = parse_config_file(dir.file("run.cfg"));
    CHECK(c.input_dir == "data/in");
    CHECK(c.out_dir == "data/out");
    CHECK(c.exposure == "proportion:th=0.5");
    CHECK(c.tuning.delta == doctest::Approx(1.5));
    CHECK(std::isinf(c.tuning.delta_prime));
    CHECK(c.tuning.eps == 4);
    REQUIRE(c.methods.size() == 2);
    CHECK(c.methods[0] == Method::one_one);
    CHECK(c.methods[1] == Method::one_or_two);
    CHECK(c.alpha == doctest::Approx(0.1));
    CHECK(c.seed == 7);
    CHECK(c.units == std::vector<int>{2, 5});

    RunConfig d = c;
    CHECK_THROWS(apply_config_entry(d, "bogus_key", "1"));
    apply_config_entry(d, "delta", "3.25");  // later entries override
    CHECK(d.tuning.delta == doctest::Approx(3.25));

    write_text_file(dir.file("bad.cfg"), "delta 2\n");
    CHECK_THROWS(parse_config_file(dir.file("bad.cfg")));
}
