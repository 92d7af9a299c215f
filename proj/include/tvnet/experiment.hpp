#pragma once
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tvnet/basis.hpp"
#include "tvnet/supervised.hpp"
#include "tvnet/temporal_kernel.hpp"

namespace tvnet {

enum class Method { keller, pca, basis, basis_supervised };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

struct ExperimentManifest {
    std::vector<Index> dims{10};
    Index T = 5000;
    Index train_len = 3000;
    Index test_len = 2000;
    Index k_true = 4;
    Index k_learned = 6;
    std::vector<std::uint64_t> seeds;
    KernelSpec kernel{KernelFamily::gaussian, 40.0, 3.0, true};
    double keller_lambda = 0.02;
    double lambda_beta = 0.02;
    double alpha = 0.5;
    double lambda_A = 10.0;
    double gamma = 0.75;
    double nu = 1e-3;
    GramMode gram_mode = GramMode::single;
    Index batch_size = 0;
    int max_outer_iters = 400;
    double rel_tol = 1e-8;
    double smoothness = 250.0;
    double classifier_ridge = 1e-2;
    std::vector<Method> methods{Method::keller, Method::pca, Method::basis,
                                Method::basis_supervised};
    std::filesystem::path output_dir = "tvnet-out";

    ExperimentManifest();

    /// Unknown keys and invalid values are collected and reported together
    /// in one InvalidInput.
    static ExperimentManifest from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    void validate() const;

    FitConfig fit_config(std::uint64_t seed) const;
    SupervisedConfig supervised_config(std::uint64_t seed) const;
    /// Hash of every parameter that influences numeric outputs (output_dir,
    /// seeds, dims and methods excluded).
    std::uint64_t parameter_hash() const;
};

/// Parses the manifest; a relative output_dir is resolved against the
/// manifest's directory.
ExperimentManifest load_manifest(const std::filesystem::path& path);

std::filesystem::path seed_dir(const ExperimentManifest& m, Index n, std::uint64_t seed);

struct StageResult {
    std::string key;
    bool up_to_date = false;
};

StageResult run_generate(const ExperimentManifest& m, Index n, std::uint64_t seed);
/// Fits `method` for one seed, first running any stage it depends on.
StageResult run_fit(const ExperimentManifest& m, Index n, std::uint64_t seed, Method method);

struct EvalRow {
    Index n = 0;
    std::string method;
    std::uint64_t seed = 0;
    double error = 0.0;
    std::optional<double> similarity; // absent for the raw self-regression features
};

struct EvalOutcome {
    std::vector<EvalRow> rows;
    StageResult stage;
};

/// Classification error on the test split and best-match similarity for
/// every manifest method. `oracle` appends a row scored directly by the true
/// trajectory contrast. Writes eval.json and eval.csv into the seed directory.
EvalOutcome run_eval(const ExperimentManifest& m, Index n, std::uint64_t seed, bool oracle = false);

struct AggregateRow {
    Index n = 0;
    std::string method;
    Index count = 0;
    double error_mean = 0.0;
    double error_sd = 0.0;
    std::optional<double> similarity_mean;
    std::optional<double> similarity_sd;
};

/// Mean and sample standard deviation (0 for a single seed) per (n, method),
/// ordered by n and then by first appearance of the method.
std::vector<AggregateRow> aggregate(const std::vector<EvalRow>& rows);

std::string rows_to_csv(const std::vector<EvalRow>& rows);
std::string aggregate_to_csv(const std::vector<AggregateRow>& rows);

struct StageFailure {
    Index n = 0;
    std::uint64_t seed = 0;
    std::string stage;
    std::string message;
    int exit_code = 3;
};

struct ExperimentSummary {
    std::vector<EvalRow> rows;
    std::vector<AggregateRow> aggregate;
    std::vector<StageFailure> failures;
    bool up_to_date = false;
};

/// generate -> fit (every method) -> eval for every (n, seed), then
/// report.csv, aggregate.csv and report.json in output_dir. Failed seeds are
/// recorded in failures.json and skipped; the other seeds still aggregate.
ExperimentSummary run_experiment(const ExperimentManifest& m, std::ostream& log);

/// 1 for invalid input, 2 for I/O, 3 for any other failure.
int exit_code_for(const std::exception& e);

inline constexpr int report_schema_version = 1;

} // namespace tvnet
