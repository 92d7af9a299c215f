#include "tvnet/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

#include "tvnet/errors.hpp"
#include "tvnet/eval.hpp"
#include "tvnet/io.hpp"
#include "tvnet/keller.hpp"
#include "tvnet/moments.hpp"
#include "tvnet/rng.hpp"
#include "tvnet/synth.hpp"

namespace tvnet {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Method m) {
    switch (m) {
    case Method::keller: return "keller";
    case Method::pca: return "pca";
    case Method::basis: return "basis";
    case Method::basis_supervised: return "basis-supervised";
    }
    return "?";
}

Method method_from_string(const std::string& name) {
    if (name == "keller") return Method::keller;
    if (name == "pca") return Method::pca;
    if (name == "basis") return Method::basis;
    if (name == "basis-supervised") return Method::basis_supervised;
    throw InvalidInput("unknown method '" + name +
                       "' (expected keller, pca, basis or basis-supervised)");
}

// ------------------------------------------------------------ manifest

ExperimentManifest::ExperimentManifest() {
    for (std::uint64_t s = 0; s < 25; ++s) seeds.push_back(s);
}

namespace {

const std::set<std::string> manifest_keys = {
    "n",         "T",           "train_len",  "test_len",         "k_true",
    "k_learned", "seeds",       "kernel",     "keller_lambda",    "lambda_beta",
    "alpha",     "lambda_A",    "gamma",      "nu",               "gram_mode",
    "batch_size", "max_outer_iters", "rel_tol", "smoothness",     "classifier_ridge",
    "methods",   "output_dir"};

std::string gram_mode_name(GramMode g) { return g == GramMode::single ? "single" : "kernel_weighted"; }

} // namespace

ExperimentManifest ExperimentManifest::from_json(const json& j) {
    if (!j.is_object()) throw InvalidInput("invalid manifest: top level must be a JSON object");
    ExperimentManifest m;
    std::vector<std::string> errors;
    for (const auto& [key, value] : j.items())
        if (!manifest_keys.count(key)) errors.push_back(key + ": unknown field");

    auto field = [&](const char* key, auto&& read) {
        if (!j.contains(key)) return;
        try {
            read(j.at(key));
        } catch (const std::exception& e) {
            errors.push_back(std::string(key) + ": " + e.what());
        }
    };

    field("n", [&](const json& v) {
        m.dims.clear();
        if (v.is_array())
            for (const json& d : v) m.dims.push_back(d.get<Index>());
        else
            m.dims.push_back(v.get<Index>());
    });
    field("T", [&](const json& v) { m.T = v.get<Index>(); });
    field("train_len", [&](const json& v) { m.train_len = v.get<Index>(); });
    field("test_len", [&](const json& v) { m.test_len = v.get<Index>(); });
    field("k_true", [&](const json& v) { m.k_true = v.get<Index>(); });
    field("k_learned", [&](const json& v) { m.k_learned = v.get<Index>(); });
    field("seeds", [&](const json& v) {
        m.seeds.clear();
        if (v.is_array()) {
            for (const json& s : v) m.seeds.push_back(s.get<std::uint64_t>());
        } else {
            const auto count = v.get<std::uint64_t>();
            for (std::uint64_t s = 0; s < count; ++s) m.seeds.push_back(s);
        }
    });
    field("kernel", [&](const json& v) { m.kernel = io::kernel_from_json(v); });
    field("keller_lambda", [&](const json& v) { m.keller_lambda = v.get<double>(); });
    field("lambda_beta", [&](const json& v) { m.lambda_beta = v.get<double>(); });
    field("alpha", [&](const json& v) { m.alpha = v.get<double>(); });
    field("lambda_A", [&](const json& v) { m.lambda_A = v.get<double>(); });
    field("gamma", [&](const json& v) { m.gamma = v.get<double>(); });
    field("nu", [&](const json& v) { m.nu = v.get<double>(); });
    field("gram_mode", [&](const json& v) {
        const auto s = v.get<std::string>();
        if (s == "single") m.gram_mode = GramMode::single;
        else if (s == "kernel_weighted") m.gram_mode = GramMode::kernel_weighted;
        else throw InvalidInput("expected 'single' or 'kernel_weighted'");
    });
    field("batch_size", [&](const json& v) { m.batch_size = v.get<Index>(); });
    field("max_outer_iters", [&](const json& v) { m.max_outer_iters = v.get<int>(); });
    field("rel_tol", [&](const json& v) { m.rel_tol = v.get<double>(); });
    field("smoothness", [&](const json& v) { m.smoothness = v.get<double>(); });
    field("classifier_ridge", [&](const json& v) { m.classifier_ridge = v.get<double>(); });
    field("methods", [&](const json& v) {
        m.methods.clear();
        for (const json& s : v) m.methods.push_back(method_from_string(s.get<std::string>()));
    });
    field("output_dir", [&](const json& v) { m.output_dir = v.get<std::string>(); });

    if (errors.empty()) {
        m.validate();
        return m;
    }
    std::string msg = "invalid manifest:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw InvalidInput(msg);
}

json ExperimentManifest::to_json() const {
    json j;
    j["n"] = dims.size() == 1 ? json(dims.front()) : json(dims);
    j["T"] = T;
    j["train_len"] = train_len;
    j["test_len"] = test_len;
    j["k_true"] = k_true;
    j["k_learned"] = k_learned;
    j["seeds"] = seeds;
    j["kernel"] = io::kernel_to_json(kernel);
    j["keller_lambda"] = keller_lambda;
    j["lambda_beta"] = lambda_beta;
    j["alpha"] = alpha;
    j["lambda_A"] = lambda_A;
    j["gamma"] = gamma;
    j["nu"] = nu;
    j["gram_mode"] = gram_mode_name(gram_mode);
    j["batch_size"] = batch_size;
    j["max_outer_iters"] = max_outer_iters;
    j["rel_tol"] = rel_tol;
    j["smoothness"] = smoothness;
    j["classifier_ridge"] = classifier_ridge;
    j["methods"] = json::array();
    for (Method mt : methods) j["methods"].push_back(to_string(mt));
    j["output_dir"] = output_dir.string();
    return j;
}

void ExperimentManifest::validate() const {
    std::vector<std::string> errors;
    auto check = [&](bool ok, const std::string& msg) {
        if (!ok) errors.push_back(msg);
    };
    check(!dims.empty(), "n: at least one dimension required");
    for (Index d : dims) check(d >= 2, "n: every dimension must be >= 2");
    check(T >= 2, "T: must be >= 2");
    check(train_len >= 2, "train_len: must be >= 2");
    check(test_len >= 1, "test_len: must be >= 1");
    check(train_len + test_len <= T, "train_len + test_len: must not exceed T");
    check(k_true >= 1, "k_true: must be >= 1");
    check(k_learned >= 1, "k_learned: must be >= 1");
    check(!seeds.empty(), "seeds: at least one seed required");
    check(std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() == seeds.size(),
          "seeds: duplicates");
    try {
        kernel.validate();
    } catch (const InvalidInput& e) {
        errors.push_back(std::string("kernel: ") + e.what());
    }
    check(keller_lambda >= 0.0, "keller_lambda: must be >= 0");
    check(lambda_beta >= 0.0, "lambda_beta: must be >= 0");
    check(alpha >= 0.0 && alpha <= 1.0, "alpha: must be in [0, 1]");
    check(lambda_A >= 0.0, "lambda_A: must be >= 0");
    check(gamma >= 0.0 && gamma <= 1.0, "gamma: must be in [0, 1]");
    check(nu > 0.0, "nu: must be > 0");
    check(batch_size >= 0, "batch_size: must be >= 0");
    check(max_outer_iters >= 1, "max_outer_iters: must be >= 1");
    check(rel_tol >= 0.0, "rel_tol: must be >= 0");
    check(smoothness > 0.0, "smoothness: must be > 0");
    check(classifier_ridge >= 0.0, "classifier_ridge: must be >= 0");
    check(!methods.empty(), "methods: at least one method required");
    check(std::set<Method>(methods.begin(), methods.end()).size() == methods.size(),
          "methods: duplicates");
    check(k_true == 4, "k_true: labels are defined for exactly 4 true components");
    check(!output_dir.empty(), "output_dir: must not be empty");
    if (errors.empty()) return;
    std::string msg = "invalid manifest:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw InvalidInput(msg);
}

FitConfig ExperimentManifest::fit_config(std::uint64_t seed) const {
    FitConfig c;
    c.k = k_learned;
    c.lambda_beta = lambda_beta;
    c.alpha = alpha;
    c.lambda_A = lambda_A;
    c.kernel = kernel;
    c.batch_size = batch_size;
    c.max_outer_iters = max_outer_iters;
    c.rel_tol = rel_tol;
    c.seed = Rng::derive(seed, 40);
    c.keller_lambda = keller_lambda;
    return c;
}

SupervisedConfig ExperimentManifest::supervised_config(std::uint64_t seed) const {
    SupervisedConfig c;
    c.base = fit_config(seed);
    c.gamma = gamma;
    c.nu = nu;
    c.gram_mode = gram_mode;
    return c;
}

std::uint64_t ExperimentManifest::parameter_hash() const {
    json j = to_json();
    for (const char* k : {"output_dir", "seeds", "n", "methods"}) j.erase(k);
    return io::content_hash(j.dump());
}

ExperimentManifest load_manifest(const fs::path& path) {
    json j;
    try {
        j = json::parse(io::read_file(path));
    } catch (const json::exception& e) {
        throw InvalidInput("invalid manifest: " + path.string() + " is not valid JSON: " + e.what());
    }
    ExperimentManifest m = ExperimentManifest::from_json(j);
    if (m.output_dir.is_relative()) m.output_dir = path.parent_path() / m.output_dir;
    return m;
}

fs::path seed_dir(const ExperimentManifest& m, Index n, std::uint64_t seed) {
    return m.output_dir / ("n" + std::to_string(n)) / ("seed" + std::to_string(seed));
}

// ------------------------------------------------------------ stage stamps

namespace {

std::string stage_key(const ExperimentManifest& m, const std::string& stage, Index n,
                      std::uint64_t seed, const std::vector<std::string>& upstream) {
    std::string text = io::hash_hex(m.parameter_hash()) + "|" + stage + "|" + std::to_string(n) +
                       "|" + std::to_string(seed);
    for (const auto& u : upstream) text += "|" + u;
    return io::hash_hex(io::content_hash(text));
}

// A stage is current when its stamp carries the expected key and every
// recorded output still hashes to the recorded value. The returned digest
// folds the output hashes in, so downstream keys follow content.
std::optional<std::string> current_digest(const fs::path& dir, const std::string& key) {
    const fs::path stamp = dir / "stamp.json";
    if (!fs::exists(stamp)) return std::nullopt;
    json j;
    try {
        j = io::read_json(stamp);
        if (j.at("key").get<std::string>() != key) return std::nullopt;
        for (const auto& [file, hash] : j.at("outputs").items()) {
            if (!fs::exists(dir / file)) return std::nullopt;
            if (io::hash_hex(io::content_hash(io::read_file(dir / file))) != hash.get<std::string>())
                return std::nullopt;
        }
        return j.at("digest").get<std::string>();
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::string write_stamp(const fs::path& dir, const std::string& key,
                        const std::vector<std::string>& files) {
    json outputs = json::object();
    std::string fold = key;
    for (const auto& f : files) {
        const std::string h = io::hash_hex(io::content_hash(io::read_file(dir / f)));
        outputs[f] = h;
        fold += "|" + f + ":" + h;
    }
    const std::string digest = io::hash_hex(io::content_hash(fold));
    io::write_json(dir / "stamp.json", json{{"key", key}, {"digest", digest}, {"outputs", outputs}});
    return digest;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Splits {
    ObservationSequence train;
    ObservationSequence test;
    Index test_offset = 0;
};

ObservationSequence slice(const ObservationSequence& x, Index begin, Index len) {
    ObservationSequence s;
    s.data = x.data.middleRows(begin, len);
    if (x.has_labels())
        s.labels.assign(x.labels.begin() + begin, x.labels.begin() + begin + len);
    return s;
}

Splits load_splits(const ExperimentManifest& m, Index n, std::uint64_t seed) {
    const ObservationSequence x = io::read_sequence(seed_dir(m, n, seed) / "data");
    if (x.length() != m.T || x.dim() != n)
        throw IoError("sequence in " + seed_dir(m, n, seed).string() +
                      " does not match the manifest");
    Splits s;
    s.test_offset = m.T - m.test_len;
    s.train = standardize(slice(x, 0, m.train_len));
    s.train.labels = slice(x, 0, m.train_len).labels;
    s.test = standardize(slice(x, s.test_offset, m.test_len));
    s.test.labels = slice(x, s.test_offset, m.test_len).labels;
    return s;
}

std::vector<StructureCode> offset_times(std::vector<StructureCode> codes, Index offset) {
    for (auto& c : codes) c.time += offset;
    return codes;
}

std::string trace_to_csv(const std::vector<double>& trace) {
    std::string out;
    for (double v : trace) out += io::format_double(v) + "\n";
    return out;
}

json fit_log(const std::string& method, int iterations, bool converged, double wall,
             int rejected, const std::vector<double>& trace,
             const std::vector<std::string>& warnings) {
    return json{{"method", method},
                {"iterations", iterations},
                {"converged", converged},
                {"wall_time_s", wall},
                {"rejected_steps", rejected},
                {"objective_final", trace.empty() ? json(nullptr) : json(trace.back())},
                {"warnings", warnings}};
}

BasisSet read_bases(const fs::path& dir) {
    const fs::path p = dir / "bases.json";
    if (!fs::exists(p)) throw IoError("missing fit artifact " + p.string());
    return io::basis_set_from_json(io::read_json(p));
}

std::vector<NetworkEstimate> read_estimates(const fs::path& p) {
    if (!fs::exists(p)) throw IoError("missing fit artifact " + p.string());
    return io::estimates_from_json(io::read_json(p));
}

std::vector<StructureCode> read_codes(const fs::path& p) {
    if (!fs::exists(p)) throw IoError("missing fit artifact " + p.string());
    return io::codes_from_csv(io::read_file(p));
}

} // namespace

// ------------------------------------------------------------ stages

StageResult run_generate(const ExperimentManifest& m, Index n, std::uint64_t seed) {
    const fs::path dir = seed_dir(m, n, seed) / "data";
    const std::string key = stage_key(m, "generate", n, seed, {});
    if (auto d = current_digest(dir, key)) return {*d, true};

    const GroundTruth truth = make_ground_truth(n, m.T, m.k_true, m.smoothness, seed);
    ObservationSequence x = generate_sequence(truth);
    io::write_ground_truth(dir, truth);
    io::write_sequence(dir, x, seed, truth.labels.empty() ? "" : "labels.csv");
    std::vector<std::string> files{"sequence.csv", "sequence.json", "truth.json",
                                   "trajectories.csv"};
    if (!truth.labels.empty()) files.push_back("labels.csv");
    return {write_stamp(dir, key, files), false};
}

namespace {

StageResult fit_keller(const ExperimentManifest& m, Index n, std::uint64_t seed) {
    const StageResult data = run_generate(m, n, seed);
    const fs::path dir = seed_dir(m, n, seed) / "keller";
    const std::string key = stage_key(m, "keller", n, seed, {data.key});
    if (auto d = current_digest(dir, key)) return {*d, true};

    const auto start = Clock::now();
    const Splits s = load_splits(m, n, seed);
    const auto train = fit_sequence(s.train, m.kernel, m.keller_lambda, all_times(m.train_len));
    auto test = fit_sequence(s.test, m.kernel, m.keller_lambda, all_times(m.test_len));
    for (auto& e : test) e.time += s.test_offset;
    bool converged = true;
    for (const auto& e : train) converged = converged && e.converged;
    for (const auto& e : test) converged = converged && e.converged;

    io::write_atomic(dir / "train_estimates.json", io::estimates_to_json(train).dump() + "\n");
    io::write_atomic(dir / "test_estimates.json", io::estimates_to_json(test).dump() + "\n");
    io::write_json(dir / "fit_log.json",
                   fit_log("keller", static_cast<int>(train.size() + test.size()), converged,
                           seconds_since(start), 0, {}, {}));
    return {write_stamp(dir, key, {"train_estimates.json", "test_estimates.json"}), false};
}

StageResult fit_pca(const ExperimentManifest& m, Index n, std::uint64_t seed) {
    const StageResult keller = fit_keller(m, n, seed);
    const fs::path dir = seed_dir(m, n, seed) / "pca";
    const std::string key = stage_key(m, "pca", n, seed, {keller.key});
    if (auto d = current_digest(dir, key)) return {*d, true};

    const auto start = Clock::now();
    const fs::path kdir = seed_dir(m, n, seed) / "keller";
    const auto train = read_estimates(kdir / "train_estimates.json");
    const auto test = read_estimates(kdir / "test_estimates.json");
    std::vector<std::string> warnings;
    const BasisSet principal = init_bases_pca(train, m.k_learned, Rng::derive(seed, 41), &warnings);

    std::vector<StructureCode> codes;
    for (const std::vector<NetworkEstimate>* seq : {&train, &test})
        for (const auto& e : *seq) codes.push_back({pca_projection_features(e, principal), e.time});

    io::write_json(dir / "bases.json", io::basis_set_to_json(principal));
    io::write_atomic(dir / "codes.csv", io::codes_to_csv(codes));
    io::write_json(dir / "fit_log.json",
                   fit_log("pca", 1, true, seconds_since(start), 0, {}, warnings));
    return {write_stamp(dir, key, {"bases.json", "codes.csv"}), false};
}

StageResult fit_basis(const ExperimentManifest& m, Index n, std::uint64_t seed, bool supervised) {
    const StageResult data = run_generate(m, n, seed);
    const StageResult pca = fit_pca(m, n, seed);
    const std::string name = supervised ? "basis-supervised" : "basis";
    const fs::path dir = seed_dir(m, n, seed) / name;
    const std::string key = stage_key(m, name, n, seed, {data.key, pca.key});
    if (auto d = current_digest(dir, key)) return {*d, true};

    const auto start = Clock::now();
    const Splits s = load_splits(m, n, seed);
    const BasisSet principal = read_bases(seed_dir(m, n, seed) / "pca");
    const FitConfig cfg = m.fit_config(seed);

    BasisSet bases;
    std::vector<StructureCode> codes;
    json log;
    std::vector<std::string> files{"bases.json", "codes.csv", "objective_trace.csv"};
    if (supervised) {
        if (!s.train.has_labels())
            throw InvalidInput("basis-supervised: training labels are missing");
        const SupervisedFitResult r =
            fit_supervised(s.train, s.train.labels, m.supervised_config(seed), principal);
        bases = r.bases;
        codes = r.codes;
        io::write_atomic(dir / "objective_trace.csv", trace_to_csv(r.objective_trace));
        io::write_json(dir / "classifier.json", io::classifier_to_json(r.classifier));
        files.push_back("classifier.json");
        log = fit_log(name, r.iterations, r.converged, 0.0, r.rejected_steps, r.objective_trace, {});
    } else {
        const FitResult r = fit(s.train, cfg, principal);
        bases = r.bases;
        codes = r.codes;
        io::write_atomic(dir / "objective_trace.csv", trace_to_csv(r.objective_trace));
        log = fit_log(name, r.iterations, r.converged, 0.0, r.rejected_steps, r.objective_trace,
                      r.warnings);
    }
    const auto test_codes =
        infer_codes(bases, s.test, m.kernel, m.lambda_beta, m.alpha, all_times(m.test_len),
                    cfg.exec, cfg.code_tol);
    for (const auto& c : offset_times(test_codes, s.test_offset)) codes.push_back(c);

    io::write_json(dir / "bases.json", io::basis_set_to_json(bases));
    io::write_atomic(dir / "codes.csv", io::codes_to_csv(codes));
    log["wall_time_s"] = seconds_since(start);
    io::write_json(dir / "fit_log.json", log);
    return {write_stamp(dir, key, files), false};
}

} // namespace

StageResult run_fit(const ExperimentManifest& m, Index n, std::uint64_t seed, Method method) {
    switch (method) {
    case Method::keller: return fit_keller(m, n, seed);
    case Method::pca: return fit_pca(m, n, seed);
    case Method::basis: return fit_basis(m, n, seed, false);
    case Method::basis_supervised: return fit_basis(m, n, seed, true);
    }
    throw InvalidInput("unknown method");
}

// ------------------------------------------------------------ evaluation

namespace {

struct FeatureSplit {
    Matrix train;
    Matrix test;
};

FeatureSplit split_codes(const std::vector<StructureCode>& codes, const ExperimentManifest& m) {
    const Index offset = m.T - m.test_len;
    std::vector<const Vector*> tr, te;
    for (const auto& c : codes) {
        if (c.time < m.train_len) tr.push_back(&c.code);
        else if (c.time >= offset) te.push_back(&c.code);
    }
    if (static_cast<Index>(tr.size()) != m.train_len || static_cast<Index>(te.size()) != m.test_len)
        throw IoError("codes do not cover the train and test splits");
    const Index p = codes.front().code.size();
    FeatureSplit f{Matrix(m.train_len, p), Matrix(m.test_len, p)};
    for (Index i = 0; i < m.train_len; ++i) f.train.row(i) = tr[static_cast<std::size_t>(i)]->transpose();
    for (Index i = 0; i < m.test_len; ++i) f.test.row(i) = te[static_cast<std::size_t>(i)]->transpose();
    return f;
}

Matrix raw_feature_matrix(const std::vector<NetworkEstimate>& est) {
    if (est.empty()) throw IoError("empty estimate sequence");
    const Index n = est.front().coefficients.rows();
    Matrix f(static_cast<Index>(est.size()), n * (n - 1));
    for (std::size_t i = 0; i < est.size(); ++i)
        f.row(static_cast<Index>(i)) = raw_features(est[i]).transpose();
    return f;
}

double test_error(const FeatureSplit& f, std::span<const int> train_labels,
                  std::span<const int> test_labels, double ridge) {
    const FeatureScaler scaler = FeatureScaler::fit(f.train);
    const LogisticModel model = train_logistic_l2(scaler.apply(f.train), train_labels, ridge);
    return classification_error(model, scaler.apply(f.test), test_labels);
}

// Bases with a constant off-diagonal pattern (typically zeroed by the l1
// penalty) have no defined correlation and are left out of the matching.
BasisSet informative_bases(const BasisSet& b) {
    BasisSet out;
    out.n = b.n;
    for (const Matrix& a : b.bases) {
        try {
            matrix_correlation(a, a);
            out.bases.push_back(a);
        } catch (const DegenerateProblem&) {
        }
    }
    out.k = static_cast<Index>(out.bases.size());
    return out;
}

std::string csv_optional(const std::optional<double>& v) {
    return v ? io::format_double(*v) : std::string();
}

} // namespace

EvalOutcome run_eval(const ExperimentManifest& m, Index n, std::uint64_t seed, bool oracle) {
    std::vector<std::string> upstream{run_generate(m, n, seed).key};
    for (Method mt : m.methods) upstream.push_back(run_fit(m, n, seed, mt).key);
    const fs::path dir = seed_dir(m, n, seed);
    const std::string key = stage_key(m, oracle ? "eval-oracle" : "eval", n, seed, upstream);

    EvalOutcome out;
    if (auto d = current_digest(dir, key)) {
        const json report = io::read_json(dir / "eval.json");
        for (const json& r : report.at("rows")) {
            EvalRow row{n, r.at("method").get<std::string>(), seed, r.at("error").get<double>(), {}};
            if (!r.at("similarity").is_null()) row.similarity = r.at("similarity").get<double>();
            out.rows.push_back(row);
        }
        out.stage = {*d, true};
        return out;
    }

    const GroundTruth truth = io::read_ground_truth(dir / "data");
    if (truth.labels.size() != static_cast<std::size_t>(m.T))
        throw InvalidInput("evaluation needs labels for every time step");
    const std::span<const int> labels(truth.labels);
    const auto train_labels = labels.subspan(0, static_cast<std::size_t>(m.train_len));
    const auto test_labels = labels.subspan(static_cast<std::size_t>(m.T - m.test_len));

    json report;
    report["schema_version"] = report_schema_version;
    report["n"] = n;
    report["seed"] = seed;
    report["train_len"] = m.train_len;
    report["test_len"] = m.test_len;
    report["rows"] = json::array();

    for (Method mt : m.methods) {
        const std::string name = to_string(mt);
        const fs::path mdir = dir / name;
        EvalRow row{n, name, seed, 0.0, {}};
        json entry{{"method", name}};
        if (mt == Method::keller) {
            FeatureSplit f{raw_feature_matrix(read_estimates(mdir / "train_estimates.json")),
                           raw_feature_matrix(read_estimates(mdir / "test_estimates.json"))};
            row.error = test_error(f, train_labels, test_labels, m.classifier_ridge);
            entry["similarity"] = nullptr;
        } else {
            const FeatureSplit f = split_codes(read_codes(mdir / "codes.csv"), m);
            row.error = test_error(f, train_labels, test_labels, m.classifier_ridge);
            const BasisSet learned = informative_bases(read_bases(mdir));
            entry["informative_bases"] = learned.k;
            if (learned.k > 0) {
                const SimilarityReport sim = best_match_score(learned, truth.precision_bases);
                row.similarity = sim.mean_score;
                entry["matches"] = io::similarity_to_json(sim)["matches"];
            } else {
                row.similarity = 0.0;
                entry["matches"] = json::array();
            }
            entry["similarity"] = *row.similarity;
        }
        entry["error"] = row.error;
        report["rows"].push_back(entry);
        out.rows.push_back(row);
    }

    if (oracle) {
        // The label is the sign of this contrast, so scoring by it directly is
        // a perfect classifier.
        Index wrong = 0;
        for (Index t = m.T - m.test_len; t < m.T; ++t) {
            const auto a = truth.trajectories.row(t);
            const double score = a(0) + a(1) - a(2) - a(3);
            if ((score >= 0.0 ? 1 : -1) != truth.labels[static_cast<std::size_t>(t)]) ++wrong;
        }
        EvalRow row{n, "oracle", seed, static_cast<double>(wrong) / static_cast<double>(m.test_len), {}};
        report["rows"].push_back({{"method", "oracle"}, {"error", row.error}, {"similarity", nullptr}});
        out.rows.push_back(row);
    }

    io::write_json(dir / "eval.json", report);
    io::write_atomic(dir / "eval.csv", rows_to_csv(out.rows));
    out.stage = {write_stamp(dir, key, {"eval.json", "eval.csv"}), false};
    return out;
}

std::vector<AggregateRow> aggregate(const std::vector<EvalRow>& rows) {
    std::vector<std::pair<Index, std::string>> order;
    std::map<std::pair<Index, std::string>, std::vector<const EvalRow*>> groups;
    for (const auto& r : rows) {
        auto k = std::make_pair(r.n, r.method);
        if (!groups.count(k)) order.push_back(k);
        groups[k].push_back(&r);
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    auto mean_sd = [](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
        return std::make_pair(mean, sd);
    };

    std::vector<AggregateRow> out;
    for (const auto& k : order) {
        const auto& g = groups[k];
        AggregateRow a;
        a.n = k.first;
        a.method = k.second;
        a.count = static_cast<Index>(g.size());
        std::vector<double> err, sim;
        for (const EvalRow* r : g) {
            err.push_back(r->error);
            if (r->similarity) sim.push_back(*r->similarity);
        }
        std::tie(a.error_mean, a.error_sd) = mean_sd(err);
        if (sim.size() == g.size()) {
            const auto [mu, sd] = mean_sd(sim);
            a.similarity_mean = mu;
            a.similarity_sd = sd;
        }
        out.push_back(a);
    }
    return out;
}

std::string rows_to_csv(const std::vector<EvalRow>& rows) {
    std::string out = "n,method,seed,error,similarity\n";
    for (const auto& r : rows)
        out += std::to_string(r.n) + "," + r.method + "," + std::to_string(r.seed) + "," +
               io::format_double(r.error) + "," + csv_optional(r.similarity) + "\n";
    return out;
}

std::string aggregate_to_csv(const std::vector<AggregateRow>& rows) {
    std::string out = "n,method,count,error_mean,error_sd,similarity_mean,similarity_sd\n";
    for (const auto& a : rows)
        out += std::to_string(a.n) + "," + a.method + "," + std::to_string(a.count) + "," +
               io::format_double(a.error_mean) + "," + io::format_double(a.error_sd) + "," +
               csv_optional(a.similarity_mean) + "," + csv_optional(a.similarity_sd) + "\n";
    return out;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const InvalidInput*>(&e)) return 1;
    if (dynamic_cast<const IoError*>(&e)) return 2;
    if (dynamic_cast<const fs::filesystem_error*>(&e)) return 2;
    return 3;
}

ExperimentSummary run_experiment(const ExperimentManifest& m, std::ostream& log) {
    m.validate();
    ExperimentSummary summary;
    bool all_cached = true;
    std::string fold = io::hash_hex(m.parameter_hash());

    for (Index n : m.dims) {
        for (std::uint64_t seed : m.seeds) {
            std::string stage = "generate";
            try {
                const auto start = Clock::now();
                all_cached &= run_generate(m, n, seed).up_to_date;
                for (Method mt : m.methods) {
                    stage = "fit:" + to_string(mt);
                    all_cached &= run_fit(m, n, seed, mt).up_to_date;
                }
                stage = "eval";
                EvalOutcome ev = run_eval(m, n, seed);
                all_cached &= ev.stage.up_to_date;
                fold += "|" + ev.stage.key;
                for (auto& r : ev.rows) summary.rows.push_back(std::move(r));
                log << "n=" << n << " seed=" << seed
                    << (ev.stage.up_to_date ? ": up-to-date" : ": done") << " ("
                    << seconds_since(start) << " s)\n";
            } catch (const std::exception& e) {
                all_cached = false;
                summary.failures.push_back({n, seed, stage, e.what(), exit_code_for(e)});
                log << "n=" << n << " seed=" << seed << ": " << stage << " failed: " << e.what()
                    << "\n";
            }
        }
    }
    summary.aggregate = aggregate(summary.rows);

    const fs::path stamp_dir = m.output_dir;
    const std::string key = io::hash_hex(io::content_hash(fold));
    if (all_cached && current_digest(stamp_dir, key)) {
        summary.up_to_date = true;
        log << "up-to-date\n";
        return summary;
    }

    io::write_atomic(m.output_dir / "report.csv", rows_to_csv(summary.rows));
    io::write_atomic(m.output_dir / "aggregate.csv", aggregate_to_csv(summary.aggregate));
    json report;
    report["schema_version"] = report_schema_version;
    report["manifest"] = m.to_json();
    report["manifest"].erase("output_dir");
    report["rows"] = json::array();
    for (const auto& r : summary.rows)
        report["rows"].push_back({{"n", r.n},
                                  {"method", r.method},
                                  {"seed", r.seed},
                                  {"error", r.error},
                                  {"similarity", r.similarity ? json(*r.similarity) : json(nullptr)}});
    report["aggregate"] = json::array();
    for (const auto& a : summary.aggregate)
        report["aggregate"].push_back(
            {{"n", a.n},
             {"method", a.method},
             {"count", a.count},
             {"error_mean", a.error_mean},
             {"error_sd", a.error_sd},
             {"similarity_mean", a.similarity_mean ? json(*a.similarity_mean) : json(nullptr)},
             {"similarity_sd", a.similarity_sd ? json(*a.similarity_sd) : json(nullptr)}});
    io::write_json(m.output_dir / "report.json", report);

    const fs::path failures = m.output_dir / "failures.json";
    if (!summary.failures.empty()) {
        json f = json::array();
        for (const auto& s : summary.failures)
            f.push_back({{"n", s.n},
                         {"seed", s.seed},
                         {"stage", s.stage},
                         {"error", s.message},
                         {"exit_code", s.exit_code}});
        io::write_json(failures, json{{"schema_version", report_schema_version}, {"failures", f}});
        std::error_code ec;
        fs::remove(m.output_dir / "stamp.json", ec);
    } else {
        std::error_code ec;
        fs::remove(failures, ec);
        write_stamp(stamp_dir, key, {"report.csv", "aggregate.csv", "report.json"});
    }
    return summary;
}

} // namespace tvnet
