#pragma once

#include "meg/assess.hpp"
#include "meg/autoencoder.hpp"
#include "meg/eval.hpp"

#include <string>

#include "json.hpp"

namespace meg {

/// Prints a double with enough digits to round-trip (deterministic output).
std::string format_double(double v);

/// Projected network: TSV rows `src <TAB> dst <TAB> weight`, each undirected
/// edge once (lower local index first), plus a JSON sidecar.
void write_projected_tsv(const ProjectedNetwork& pn, const std::string& path);
nlohmann::json projected_sidecar(const ProjectedNetwork& pn);

/// Spectrum export: JSON descriptor plus a binary eigenvector file
/// (8-byte LE doubles, row-major) with an embedded JSON header.
void write_spectrum(const Spectrum& s, const std::string& json_path, const std::string& bin_path);
Spectrum read_spectrum(const std::string& json_path, const std::string& bin_path);

/// Per-meta-graph spectrum curve: TSV rows `index <TAB> lambda`.
void write_spectrum_tsv(const Spectrum& s, const std::string& path);

/// Model checkpoint: single binary file, JSON header (shapes, slope,
/// dropout, seed, group layout, preprocessing stats) followed by row-major
/// 8-byte LE float payloads per layer.
void save_model(const AutoencoderModel& model, const std::string& path);
AutoencoderModel load_model(const std::string& path);

/// Combined embedding: TSV rows `vertex_id <TAB> v1 ... vQ`.
void write_embedding_tsv(const CombinedEmbedding& e, const std::string& path);
CombinedEmbedding read_embedding_tsv(const std::string& path);

nlohmann::json report_to_json(const AssessmentReport& report);
AssessmentReport report_from_json(const nlohmann::json& j);

nlohmann::json eval_to_json(const EvalResult& result);

void write_json(const nlohmann::json& j, const std::string& path);
nlohmann::json read_json(const std::string& path);

/// Hex FNV-1a digest of a file's bytes (for the run manifest).
std::string file_digest(const std::string& path);

}  // namespace meg
