#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace meg {

/// Configuration for the whole pipeline, loaded from a strict TOML-style
/// key-value file. Unknown sections/keys and out-of-range values are
/// rejected (ConfigError).
struct PipelineConfig {
    // [paths]
    std::string nodes;
    std::string edges;
    std::string labels;      // optional
    std::string schema;      // optional
    std::string metagraphs;
    std::string output = "out";

    // [spectral]
    int k = 0;  // cap on eigenpairs per spectrum, 0 = automatic depth
    double tol = 1e-8;
    double zero_tol = 1e-8;

    // [assess]
    int m = 10;
    double lambda_cap = 1.0;
    int budget = 16;
    int fpp_window = 50;

    // [combine]
    int q = 16;
    int layers = 2;
    double slope = 0.01;  // LeakyReLU negative slope; 1.0 = linear
    double dropout = 0.2;
    int epochs = 200;
    int batch = 128;
    double lr = 1e-3;
    std::string loss = "l21";           // l21 | l2
    double norm_epsilon = 0.0;
    std::string normalization = "group";  // group | column

    // [eval]
    double split = 0.5;
    int repeats = 10;
    int eval_k = 10;
    std::uint64_t link_cap = 100000;

    // top level
    std::uint64_t seed = 1;
    int threads = 0;  // 0 = all cores
};

PipelineConfig load_config(const std::string& path);
void validate_config(const PipelineConfig& config);

struct CommandOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> output;
};

PipelineConfig apply_overrides(PipelineConfig config, const CommandOverrides& overrides);

/// Pipeline stages. Each writes its artifacts under config.output, records a
/// manifest entry (seed, input/output digests), removes partial outputs on
/// failure, and throws meg::Error subclasses on problems.
void cmd_project(const PipelineConfig& config);
void cmd_assess(const PipelineConfig& config);
void cmd_combine(const PipelineConfig& config);
void cmd_eval(const PipelineConfig& config);
void cmd_pipeline(const PipelineConfig& config);

/// Output file name helpers (shared with tests).
std::string sanitize_name(const std::string& metagraph);

}  // namespace meg
