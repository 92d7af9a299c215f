#include <doctest.h>

#include <sstream>

#include "tvnet/errors.hpp"
#include "tvnet/experiment.hpp"
#include "tvnet/io.hpp"

using namespace tvnet;
namespace fs = std::filesystem;
using io::json;

namespace {

constexpr Index kT = 300, kTrain = 180, kTest = 120;
constexpr double kSmooth = 40.0;

bool both_classes(std::span<const int> y) {
    bool pos = false, neg = false;
    for (int v : y) (v > 0 ? pos : neg) = true;
    return pos && neg;
}

// Seeds whose label sequence has both classes in both splits.
std::vector<std::uint64_t> usable_seeds(Index n, std::size_t count) {
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 0; seeds.size() < count; ++s) {
        const GroundTruth t = make_ground_truth(n, kT, 4, kSmooth, s);
        const std::span<const int> y(t.labels);
        if (both_classes(y.subspan(0, kTrain)) && both_classes(y.subspan(kT - kTest))) seeds.push_back(s);
    }
    return seeds;
}

ExperimentManifest tiny(const std::string& name, std::size_t seeds = 2) {
    json j{{"n", 5},
           {"T", kT},
           {"train_len", kTrain},
           {"test_len", kTest},
           {"k_learned", 5},
           {"smoothness", kSmooth},
           {"kernel", {{"bandwidth", 8.0}}},
           {"max_outer_iters", 8},
           {"output_dir", (fs::temp_directory_path() / ("tvnet_exp_" + name)).string()}};
    j["seeds"] = usable_seeds(5, seeds);
    ExperimentManifest m = ExperimentManifest::from_json(j);
    fs::remove_all(m.output_dir);
    return m;
}

std::string slurp(const fs::path& p) { return io::read_file(p); }

} // namespace

TEST_CASE("manifest parsing") {
    SUBCASE("defaults and round trip") {
        const ExperimentManifest m = ExperimentManifest::from_json(json::object());
        CHECK(m.seeds.size() == 25);
        CHECK(m.dims == std::vector<Index>{10});
        const ExperimentManifest back = ExperimentManifest::from_json(m.to_json());
        CHECK(back.to_json() == m.to_json());
        CHECK(back.parameter_hash() == m.parameter_hash());
    }
    SUBCASE("parameter hash ignores bookkeeping fields only") {
        ExperimentManifest a = ExperimentManifest::from_json(json::object());
        ExperimentManifest b = a;
        b.output_dir = "elsewhere";
        b.seeds = {7};
        CHECK(a.parameter_hash() == b.parameter_hash());
        b.lambda_beta *= 2.0;
        CHECK(a.parameter_hash() != b.parameter_hash());
    }
    SUBCASE("all bad fields are reported together") {
        try {
            ExperimentManifest::from_json(json{{"lambda_beta", "big"}, {"colour", 3}, {"gram_mode", "x"}});
            FAIL("expected InvalidInput");
        } catch (const InvalidInput& e) {
            const std::string msg = e.what();
            CHECK(msg.find("invalid manifest:") == 0);
            CHECK(msg.find("lambda_beta") != std::string::npos);
            CHECK(msg.find("colour: unknown field") != std::string::npos);
            CHECK(msg.find("gram_mode") != std::string::npos);
        }
    }
    SUBCASE("semantic validation") {
        CHECK_THROWS_AS(ExperimentManifest::from_json(json{{"train_len", 4000}}), InvalidInput);
        CHECK_THROWS_AS(ExperimentManifest::from_json(json{{"k_true", 3}}), InvalidInput);
        CHECK_THROWS_AS(ExperimentManifest::from_json(json{{"seeds", {1, 1}}}), InvalidInput);
        CHECK_THROWS_AS(ExperimentManifest::from_json(json{{"methods", {"lasso"}}}), InvalidInput);
    }
    SUBCASE("seed count and dimension lists") {
        const auto m = ExperimentManifest::from_json(json{{"seeds", 3}, {"n", {10, 20}}});
        CHECK(m.seeds == std::vector<std::uint64_t>{0, 1, 2});
        CHECK(m.dims == std::vector<Index>{10, 20});
    }
    SUBCASE("relative output directories resolve against the manifest") {
        const fs::path dir = fs::temp_directory_path() / "tvnet_exp_manifest";
        fs::create_directories(dir);
        io::write_atomic(dir / "m.json", R"({"output_dir": "out"})");
        CHECK(load_manifest(dir / "m.json").output_dir == dir / "out");
        CHECK_THROWS_AS(load_manifest(dir / "missing.json"), IoError);
        fs::remove_all(dir);
    }
}

TEST_CASE("stages write their artifacts and cache") {
    ExperimentManifest m = tiny("stages", 1);
    const std::uint64_t seed = m.seeds.front();
    const fs::path dir = seed_dir(m, 5, seed);

    const StageResult g = run_generate(m, 5, seed);
    CHECK_FALSE(g.up_to_date);
    const Matrix x = io::matrix_from_csv(slurp(dir / "data" / "sequence.csv"));
    CHECK(x.rows() == kT);
    CHECK(x.cols() == 5);
    CHECK(run_generate(m, 5, seed).up_to_date);
    CHECK(run_generate(m, 5, seed).key == g.key);

    run_fit(m, 5, seed, Method::pca);
    const BasisSet p = io::basis_set_from_json(io::read_json(dir / "pca" / "bases.json"));
    CHECK(p.k == 5);

    run_fit(m, 5, seed, Method::basis);
    const Matrix trace = io::matrix_from_csv(slurp(dir / "basis" / "objective_trace.csv"));
    REQUIRE(trace.rows() >= 2);
    for (Index i = 1; i < trace.rows(); ++i) CHECK(trace(i, 0) <= trace(i - 1, 0) * (1.0 + 1e-12));
    const auto codes = io::codes_from_csv(slurp(dir / "basis" / "codes.csv"));
    CHECK(codes.size() == static_cast<std::size_t>(kTrain + kTest));
    CHECK(codes.back().time == kT - 1);

    SUBCASE("supervised with gamma 1 reproduces the unsupervised bases") {
        m.gamma = 1.0;
        run_fit(m, 5, seed, Method::basis);
        run_fit(m, 5, seed, Method::basis_supervised);
        CHECK(slurp(dir / "basis-supervised" / "bases.json") == slurp(dir / "basis" / "bases.json"));
        CHECK(fs::exists(dir / "basis-supervised" / "classifier.json"));
    }
    SUBCASE("oracle row scores zero error") {
        const EvalOutcome ev = run_eval(m, 5, seed, true);
        REQUIRE(ev.rows.size() == m.methods.size() + 1);
        CHECK(ev.rows.back().method == "oracle");
        CHECK(ev.rows.back().error == 0.0);
        for (const EvalRow& r : ev.rows) {
            CHECK(r.error >= 0.0);
            CHECK(r.error <= 1.0);
            CHECK(r.similarity.has_value() == (r.method != "keller" && r.method != "oracle"));
        }
    }
    SUBCASE("a corrupted artifact invalidates its stage") {
        const std::string before = slurp(dir / "pca" / "bases.json");
        io::write_atomic(dir / "pca" / "bases.json", "{}");
        CHECK_FALSE(run_fit(m, 5, seed, Method::pca).up_to_date);
        CHECK(slurp(dir / "pca" / "bases.json") == before);
    }
    fs::remove_all(m.output_dir);
}

TEST_CASE("full experiment: report shape, caching and determinism") {
    const ExperimentManifest m = tiny("run_a");
    std::ostringstream log;
    const ExperimentSummary s = run_experiment(m, log);
    CHECK(s.failures.empty());
    CHECK_FALSE(s.up_to_date);
    CHECK(s.rows.size() == m.methods.size() * m.seeds.size());
    for (std::uint64_t seed : m.seeds) CHECK(fs::exists(seed_dir(m, 5, seed) / "data" / "sequence.csv"));

    const json report = io::read_json(m.output_dir / "report.json");
    CHECK(report.at("schema_version") == 1);
    CHECK(report.at("rows").size() == s.rows.size());
    CHECK_FALSE(report.at("manifest").contains("output_dir"));
    for (const json& a : report.at("aggregate")) {
        CHECK(a.at("count") == 2);
        CHECK(a.contains("error_mean"));
        CHECK(a.contains("error_sd"));
        CHECK(a.contains("similarity_mean"));
    }
    CHECK_FALSE(fs::exists(m.output_dir / "failures.json"));
    const std::string csv = slurp(m.output_dir / "report.csv");
    CHECK(csv.rfind("n,method,seed,error,similarity\n", 0) == 0);

    std::ostringstream again;
    const ExperimentSummary s2 = run_experiment(m, again);
    CHECK(s2.up_to_date);
    CHECK(again.str().find("up-to-date\n") != std::string::npos);
    CHECK(slurp(m.output_dir / "report.csv") == csv);

    ExperimentManifest other = m;
    other.output_dir = fs::temp_directory_path() / "tvnet_exp_run_b";
    fs::remove_all(other.output_dir);
    std::ostringstream log_b;
    run_experiment(other, log_b);
    CHECK(slurp(other.output_dir / "report.csv") == csv);
    CHECK(slurp(other.output_dir / "aggregate.csv") == slurp(m.output_dir / "aggregate.csv"));
    CHECK(slurp(other.output_dir / "report.json") == slurp(m.output_dir / "report.json"));
    fs::remove_all(other.output_dir);
    fs::remove_all(m.output_dir);
}

TEST_CASE("aggregation") {
    std::vector<EvalRow> rows{{10, "pca", 0, 0.2, 0.5}, {10, "pca", 1, 0.4, 0.7}, {10, "keller", 0, 0.3, {}}};
    const auto agg = aggregate(rows);
    REQUIRE(agg.size() == 2);
    const AggregateRow& pca = agg[0].method == "pca" ? agg[0] : agg[1];
    const AggregateRow& keller = agg[0].method == "pca" ? agg[1] : agg[0];
    CHECK(pca.count == 2);
    CHECK(pca.error_mean == doctest::Approx(0.3));
    CHECK(pca.error_sd == doctest::Approx(std::sqrt(0.02)));
    CHECK(*pca.similarity_mean == doctest::Approx(0.6));
    CHECK(keller.error_sd == 0.0);
    CHECK_FALSE(keller.similarity_mean.has_value());
}

TEST_CASE("failures are recorded per seed") {
    ExperimentManifest m = tiny("fail", 1);
    // Seed whose training split has a single class.
    for (std::uint64_t s = 0;; ++s) {
        const GroundTruth t = make_ground_truth(5, kT, 4, kSmooth, s);
        if (!both_classes(std::span<const int>(t.labels).subspan(0, kTrain))) {
            m.seeds.push_back(s);
            break;
        }
    }
    m.methods = {Method::keller};
    std::ostringstream log;
    const ExperimentSummary sum = run_experiment(m, log);
    REQUIRE(sum.failures.size() == 1);
    CHECK(sum.failures[0].seed == m.seeds.back());
    CHECK(sum.failures[0].exit_code == 1);
    CHECK(sum.rows.size() == 1);
    CHECK(fs::exists(m.output_dir / "failures.json"));
    fs::remove_all(m.output_dir);
}

TEST_CASE("unwritable output and exit codes") {
    ExperimentManifest m = tiny("blocked", 1);
    fs::create_directories(m.output_dir.parent_path());
    io::write_atomic(m.output_dir, "not a directory");
    std::ostringstream log;
    try {
        run_experiment(m, log);
        FAIL("expected IoError");
    } catch (const std::exception& e) {
        CHECK(exit_code_for(e) == 2);
    }
    // The seed itself was attempted and reported before the report write failed.
    CHECK(log.str().find("generate failed") != std::string::npos);
    fs::remove(m.output_dir);

    CHECK(exit_code_for(InvalidInput("x")) == 1);
    CHECK(exit_code_for(IoError("x")) == 2);
    CHECK(exit_code_for(fs::filesystem_error("x", std::error_code())) == 2);
    CHECK(exit_code_for(DegenerateProblem("x")) == 3);
    CHECK(exit_code_for(std::runtime_error("x")) == 3);
}
