#include "tvnet/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tvnet/errors.hpp"

namespace tvnet::io {

void write_atomic(const fs::path& path, std::string_view content) {
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " +
                              ec.message());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " +
                          ec.message());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_json(const fs::path& path, const json& value) { write_atomic(path, value.dump(1) + "\n"); }

json read_json(const fs::path& path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw IoError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

std::string format_double(double value) {
    char buf[32];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", value);
    return std::string(buf, static_cast<std::size_t>(len));
}

std::string matrix_to_csv(const Matrix& m) {
    std::string out;
    out.reserve(static_cast<std::size_t>(m.size()) * 24);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            out += format_double(m(i, j));
        }
        out += '\n';
    }
    return out;
}

namespace {

std::vector<std::vector<double>> parse_csv(std::string_view text) {
    std::vector<std::vector<double>> rows;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t start = 0;
        while (start <= line.size()) {
            std::size_t comma = line.find(',', start);
            if (comma == std::string_view::npos) comma = line.size();
            const std::string field(line.substr(start, comma - start));
            try {
                std::size_t used = 0;
                row.push_back(std::stod(field, &used));
                if (used != field.size()) throw std::invalid_argument(field);
            } catch (const std::exception&) {
                throw IoError("malformed CSV field '" + field + "'");
            }
            start = comma + 1;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<double> flatten(const Matrix& m) {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(m.size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) v.push_back(m(i, j));
    return v;
}

Matrix unflatten(const json& arr, Index n) {
    if (!arr.is_array() || static_cast<Index>(arr.size()) != n * n)
        throw InvalidInput("matrix array must hold n*n values");
    Matrix m(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) m(i, j) = arr[static_cast<std::size_t>(i * n + j)].get<double>();
    return m;
}

} // namespace

Matrix matrix_from_csv(std::string_view text) {
    const auto rows = parse_csv(text);
    if (rows.empty()) return Matrix(0, 0);
    const std::size_t width = rows.front().size();
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != width) throw IoError("CSV rows have different widths");
        for (std::size_t j = 0; j < width; ++j)
            m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
    return m;
}

json basis_set_to_json(const BasisSet& bases) {
    json j;
    j["n"] = bases.n;
    j["k"] = bases.k;
    j["bases"] = json::array();
    for (const Matrix& a : bases.bases) j["bases"].push_back(flatten(a));
    return j;
}

BasisSet basis_set_from_json(const json& j) {
    try {
        BasisSet b;
        b.n = j.at("n").get<Index>();
        b.k = j.at("k").get<Index>();
        const json& arr = j.at("bases");
        if (!arr.is_array() || static_cast<Index>(arr.size()) != b.k)
            throw InvalidInput("basis set JSON: 'bases' must hold k matrices");
        for (const json& m : arr) b.bases.push_back(unflatten(m, b.n));
        return b;
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("basis set JSON: ") + e.what());
    }
}

json kernel_to_json(const KernelSpec& spec) {
    return json{{"family", to_string(spec.family)},
                {"bandwidth", spec.bandwidth},
                {"truncation", spec.truncation},
                {"normalize", spec.normalize}};
}

KernelSpec kernel_from_json(const json& j) {
    try {
        KernelSpec spec;
        spec.family = kernel_family_from_string(j.value("family", std::string("gaussian")));
        spec.bandwidth = j.at("bandwidth").get<double>();
        spec.truncation = j.value("truncation", 3.0);
        spec.normalize = j.value("normalize", true);
        spec.validate();
        return spec;
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("kernel JSON: ") + e.what());
    }
}

json classifier_to_json(const LinearClassifier& c) {
    return json{{"omega", std::vector<double>(c.omega.data(), c.omega.data() + c.omega.size())},
                {"nu", c.nu}};
}

LinearClassifier classifier_from_json(const json& j) {
    try {
        const auto w = j.at("omega").get<std::vector<double>>();
        return LinearClassifier{Eigen::Map<const Vector>(w.data(), static_cast<Index>(w.size())),
                                j.at("nu").get<double>()};
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("classifier JSON: ") + e.what());
    }
}

std::string codes_to_csv(std::span<const StructureCode> codes) {
    std::string out;
    for (const auto& c : codes) {
        out += std::to_string(c.time);
        for (Index i = 0; i < c.code.size(); ++i) {
            out += ',';
            out += format_double(c.code(i));
        }
        out += '\n';
    }
    return out;
}

std::vector<StructureCode> codes_from_csv(std::string_view text) {
    std::vector<StructureCode> out;
    for (const auto& row : parse_csv(text)) {
        if (row.empty()) continue;
        StructureCode c;
        c.time = static_cast<Index>(row[0]);
        c.code = Eigen::Map<const Vector>(row.data() + 1, static_cast<Index>(row.size() - 1));
        out.push_back(std::move(c));
    }
    return out;
}

json estimates_to_json(std::span<const NetworkEstimate> estimates) {
    json j;
    const Index n = estimates.empty() ? 0 : estimates.front().coefficients.rows();
    j["n"] = n;
    j["k"] = estimates.size();
    j["lambda"] = estimates.empty() ? 0.0 : estimates.front().lambda;
    j["times"] = json::array();
    j["bases"] = json::array();
    for (const auto& e : estimates) {
        j["times"].push_back(e.time);
        j["bases"].push_back(flatten(e.coefficients));
    }
    return j;
}

std::vector<NetworkEstimate> estimates_from_json(const json& j) {
    try {
        const Index n = j.at("n").get<Index>();
        const double lambda = j.value("lambda", 0.0);
        const json& times = j.at("times");
        const json& mats = j.at("bases");
        if (times.size() != mats.size())
            throw InvalidInput("estimates JSON: 'times' and 'bases' differ in length");
        std::vector<NetworkEstimate> out;
        for (std::size_t i = 0; i < mats.size(); ++i) {
            NetworkEstimate e;
            e.coefficients = unflatten(mats[i], n);
            e.time = times[i].get<Index>();
            e.lambda = lambda;
            out.push_back(std::move(e));
        }
        return out;
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("estimates JSON: ") + e.what());
    }
}

json similarity_to_json(const SimilarityReport& report) {
    json j;
    j["mean_score"] = report.mean_score;
    j["matches"] = json::array();
    for (const auto& m : report.per_true_basis)
        j["matches"].push_back(
            {{"true_index", m.true_index}, {"learned_index", m.learned_index}, {"score", m.score}});
    return j;
}

void write_ground_truth(const fs::path& dir, const GroundTruth& truth) {
    json j;
    j["n"] = truth.dim();
    j["k_true"] = truth.components();
    j["T"] = truth.length();
    j["seed"] = truth.seed;
    j["smoothness"] = truth.smoothness;
    j["cov_bases"] = json::array();
    j["precision_bases"] = json::array();
    for (const Matrix& s : truth.cov_bases) j["cov_bases"].push_back(flatten(s));
    for (const Matrix& p : truth.precision_bases) j["precision_bases"].push_back(flatten(p));
    j["trajectory_file"] = "trajectories.csv";
    j["label_file"] = truth.labels.empty() ? json(nullptr) : json("labels.csv");

    write_atomic(dir / "trajectories.csv", matrix_to_csv(truth.trajectories));
    if (!truth.labels.empty()) {
        std::string labels;
        for (int y : truth.labels) labels += std::to_string(y) + "\n";
        write_atomic(dir / "labels.csv", labels);
    }
    write_json(dir / "truth.json", j);
}

namespace {

std::vector<int> read_labels(const fs::path& path) {
    std::vector<int> out;
    const Matrix m = matrix_from_csv(read_file(path));
    for (Index i = 0; i < m.rows(); ++i) out.push_back(static_cast<int>(m(i, 0)));
    return out;
}

} // namespace

GroundTruth read_ground_truth(const fs::path& dir) {
    const json j = read_json(dir / "truth.json");
    GroundTruth truth;
    try {
        const Index n = j.at("n").get<Index>();
        truth.seed = j.at("seed").get<std::uint64_t>();
        truth.smoothness = j.value("smoothness", 0.0);
        for (const json& m : j.at("cov_bases")) truth.cov_bases.push_back(unflatten(m, n));
        for (const json& m : j.at("precision_bases"))
            truth.precision_bases.push_back(unflatten(m, n));
        truth.trajectories =
            matrix_from_csv(read_file(dir / j.at("trajectory_file").get<std::string>()));
        if (j.contains("label_file") && j["label_file"].is_string())
            truth.labels = read_labels(dir / j["label_file"].get<std::string>());
    } catch (const json::exception& e) {
        throw IoError("truth.json in " + dir.string() + ": " + e.what());
    }
    return truth;
}

void write_sequence(const fs::path& dir, const ObservationSequence& x, std::uint64_t seed,
                    const std::string& label_file) {
    write_atomic(dir / "sequence.csv", matrix_to_csv(x.data));
    write_json(dir / "sequence.json",
               json{{"n", x.dim()}, {"T", x.length()}, {"seed", seed}, {"label_file", label_file}});
}

ObservationSequence read_sequence(const fs::path& dir) {
    const json meta = read_json(dir / "sequence.json");
    ObservationSequence x;
    x.data = matrix_from_csv(read_file(dir / "sequence.csv"));
    try {
        if (x.data.rows() != meta.at("T").get<Index>() || x.data.cols() != meta.at("n").get<Index>())
            throw IoError("sequence.csv in " + dir.string() + " does not match sequence.json");
        const std::string label_file = meta.value("label_file", std::string());
        if (!label_file.empty()) x.labels = read_labels(dir / label_file);
    } catch (const json::exception& e) {
        throw IoError("sequence.json in " + dir.string() + ": " + e.what());
    }
    return x;
}

std::uint64_t content_hash(std::string_view bytes, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace tvnet::io
