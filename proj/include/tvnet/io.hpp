#pragma once
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tvnet/basis.hpp"
#include "tvnet/eval.hpp"
#include "tvnet/keller.hpp"
#include "tvnet/supervised.hpp"
#include "tvnet/synth.hpp"
#include "tvnet/temporal_kernel.hpp"

namespace tvnet::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

/// Writes through a temporary sibling and renames it into place, so readers
/// never observe a partially written file. Throws IoError naming the path.
void write_atomic(const fs::path& path, std::string_view content);
std::string read_file(const fs::path& path);
void write_json(const fs::path& path, const json& value);
json read_json(const fs::path& path);

/// 17 significant digits (round-trip exact for doubles).
std::string format_double(double value);

/// Headerless CSV, one matrix row per line.
std::string matrix_to_csv(const Matrix& m);
Matrix matrix_from_csv(std::string_view text);

/// {"n": n, "k": k, "bases": [row-major n*n arrays]}
json basis_set_to_json(const BasisSet& bases);
BasisSet basis_set_from_json(const json& j);

/// {"family", "bandwidth", "truncation", "normalize"}
json kernel_to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const json& j);

/// {"omega": [...], "nu": float}
json classifier_to_json(const LinearClassifier& c);
LinearClassifier classifier_from_json(const json& j);

/// One line per code: time followed by k coefficients, no header.
std::string codes_to_csv(std::span<const StructureCode> codes);
std::vector<StructureCode> codes_from_csv(std::string_view text);

/// Estimate sequences use the basis-set layout with "k" = number of
/// estimates, plus "times" and "lambda".
json estimates_to_json(std::span<const NetworkEstimate> estimates);
std::vector<NetworkEstimate> estimates_from_json(const json& j);

json similarity_to_json(const SimilarityReport& report);

/// Ground truth directory layout: truth.json (bases, row-major, plus
/// metadata), trajectories.csv and labels.csv side files.
void write_ground_truth(const fs::path& dir, const GroundTruth& truth);
GroundTruth read_ground_truth(const fs::path& dir);

/// sequence.csv (T rows x n columns, no header) and the sidecar
/// sequence.json {"n", "T", "seed", "label_file"}.
void write_sequence(const fs::path& dir, const ObservationSequence& x, std::uint64_t seed,
                    const std::string& label_file);
ObservationSequence read_sequence(const fs::path& dir);

/// 64-bit FNV-1a, rendered as 16 hex digits by hash_hex.
std::uint64_t content_hash(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::string hash_hex(std::uint64_t h);

} // namespace tvnet::io
