#include "meg/pipeline.hpp"

#include "meg/common.hpp"
#include "meg/errors.hpp"
#include "meg/io.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

namespace meg {

namespace fs = std::filesystem;

namespace {

struct ConfigEntry {
    std::string value;
    std::size_t line;
};

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value);

template <>
double parse_number<double>(const std::string& key, const std::string& value) {
    char* end = nullptr;
    double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
        throw ConfigError("config key '" + key + "': '" + value + "' is not a number");
    return v;
}

template <>
int parse_number<int>(const std::string& key, const std::string& value) {
    char* end = nullptr;
    long v = std::strtol(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        throw ConfigError("config key '" + key + "': '" + value + "' is not an integer");
    return static_cast<int>(v);
}

template <>
std::uint64_t parse_number<std::uint64_t>(const std::string& key, const std::string& value) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        throw ConfigError("config key '" + key + "': '" + value + "' is not an unsigned integer");
    return v;
}

}  // namespace

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");

    std::map<std::string, ConfigEntry> entries;
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t comment = line.find('#');
        if (comment != std::string::npos) line.resize(comment);
        std::string text = trim(line);
        if (text.empty()) continue;
        if (text.front() == '[') {
            if (text.back() != ']')
                throw ConfigError(path + ":" + std::to_string(line_no) + ": malformed section header");
            section = trim(text.substr(1, text.size() - 2));
            continue;
        }
        std::size_t eq = text.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(text.substr(0, eq));
        std::string value = unquote(trim(text.substr(eq + 1)));
        std::string full = section.empty() ? key : section + "." + key;
        if (entries.count(full))
            throw ConfigError(path + ":" + std::to_string(line_no) + ": duplicate key '" + full + "'");
        entries[full] = {value, line_no};
    }

    PipelineConfig config;
    std::set<std::string> consumed;
    auto take_string = [&](const std::string& key, std::string& field) {
        auto it = entries.find(key);
        if (it == entries.end()) return;
        field = it->second.value;
        consumed.insert(key);
    };
    auto take = [&]<typename T>(const std::string& key, T& field) {
        auto it = entries.find(key);
        if (it == entries.end()) return;
        field = parse_number<T>(key, it->second.value);
        consumed.insert(key);
    };

    take_string("paths.nodes", config.nodes);
    take_string("paths.edges", config.edges);
    take_string("paths.labels", config.labels);
    take_string("paths.schema", config.schema);
    take_string("paths.metagraphs", config.metagraphs);
    take_string("paths.output", config.output);

    take.operator()<int>("spectral.k", config.k);
    take.operator()<double>("spectral.tol", config.tol);
    take.operator()<double>("spectral.zero_tol", config.zero_tol);

    take.operator()<int>("assess.m", config.m);
    take.operator()<double>("assess.lambda_cap", config.lambda_cap);
    take.operator()<int>("assess.budget", config.budget);
    take.operator()<int>("assess.fpp_window", config.fpp_window);

    take.operator()<int>("combine.q", config.q);
    take.operator()<int>("combine.layers", config.layers);
    take.operator()<double>("combine.slope", config.slope);
    take.operator()<double>("combine.dropout", config.dropout);
    take.operator()<int>("combine.epochs", config.epochs);
    take.operator()<int>("combine.batch", config.batch);
    take.operator()<double>("combine.lr", config.lr);
    take_string("combine.loss", config.loss);
    take.operator()<double>("combine.norm_epsilon", config.norm_epsilon);
    take_string("combine.normalization", config.normalization);

    take.operator()<double>("eval.split", config.split);
    take.operator()<int>("eval.repeats", config.repeats);
    take.operator()<int>("eval.k", config.eval_k);
    take.operator()<std::uint64_t>("eval.link_cap", config.link_cap);

    take.operator()<std::uint64_t>("seed", config.seed);
    take.operator()<int>("threads", config.threads);

    for (const auto& [key, entry] : entries) {
        if (!consumed.count(key))
            throw ConfigError(path + ":" + std::to_string(entry.line) + ": unknown key '" + key + "'");
    }
    validate_config(config);
    return config;
}

void validate_config(const PipelineConfig& c) {
    auto need = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError("config: " + what);
    };
    need(c.tol > 0, "spectral.tol must be positive");
    need(c.zero_tol > 0, "spectral.zero_tol must be positive");
    need(c.k >= 0, "spectral.k must be non-negative");
    need(c.m >= 1, "assess.m must be at least 1");
    need(c.lambda_cap > 0 && c.lambda_cap <= 2.0, "assess.lambda_cap must be in (0, 2]");
    need(c.budget >= 1, "assess.budget must be at least 1");
    need(c.fpp_window >= 1, "assess.fpp_window must be at least 1");
    need(c.q >= 1, "combine.q must be at least 1");
    need(c.layers >= 1, "combine.layers must be at least 1");
    need(c.slope > 0 && c.slope <= 1, "combine.slope must be in (0, 1]");
    need(c.dropout >= 0 && c.dropout < 1, "combine.dropout must be in [0, 1)");
    need(c.epochs >= 0, "combine.epochs must be non-negative");
    need(c.batch >= 1, "combine.batch must be at least 1");
    need(c.lr > 0, "combine.lr must be positive");
    need(c.loss == "l21" || c.loss == "l2", "combine.loss must be 'l21' or 'l2'");
    need(c.norm_epsilon >= 0, "combine.norm_epsilon must be non-negative");
    need(c.normalization == "group" || c.normalization == "column",
         "combine.normalization must be 'group' or 'column'");
    need(c.split > 0 && c.split < 1, "eval.split must be in (0, 1)");
    need(c.repeats >= 1, "eval.repeats must be at least 1");
    need(c.eval_k >= 1, "eval.k must be at least 1");
    need(c.threads >= 0, "threads must be non-negative");
}

PipelineConfig apply_overrides(PipelineConfig config, const CommandOverrides& overrides) {
    if (overrides.seed) config.seed = *overrides.seed;
    if (overrides.threads) config.threads = *overrides.threads;
    if (overrides.output) config.output = *overrides.output;
    validate_config(config);
    return config;
}

std::string sanitize_name(const std::string& metagraph) {
    std::string out;
    out.reserve(metagraph.size());
    for (char c : metagraph) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')
            out += c;
        else
            out += '_';
    }
    return out;
}

namespace {

/// Tracks files created by a command so a failure leaves no partial output.
class OutputTracker {
  public:
    std::string add(const std::string& path) {
        paths_.push_back(path);
        return path;
    }
    void commit() { committed_ = true; }
    ~OutputTracker() {
        if (committed_) return;
        for (const auto& p : paths_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    }
    const std::vector<std::string>& paths() const { return paths_; }

  private:
    std::vector<std::string> paths_;
    bool committed_ = false;
};

nlohmann::json config_json(const PipelineConfig& c) {
    return nlohmann::json{
        {"paths",
         {{"nodes", c.nodes},
          {"edges", c.edges},
          {"labels", c.labels},
          {"schema", c.schema},
          {"metagraphs", c.metagraphs},
          {"output", c.output}}},
        {"spectral", {{"k", c.k}, {"tol", c.tol}, {"zero_tol", c.zero_tol}}},
        {"assess",
         {{"m", c.m}, {"lambda_cap", c.lambda_cap}, {"budget", c.budget}, {"fpp_window", c.fpp_window}}},
        {"combine",
         {{"q", c.q},
          {"layers", c.layers},
          {"slope", c.slope},
          {"dropout", c.dropout},
          {"epochs", c.epochs},
          {"batch", c.batch},
          {"lr", c.lr},
          {"loss", c.loss},
          {"norm_epsilon", c.norm_epsilon},
          {"normalization", c.normalization}}},
        {"eval",
         {{"split", c.split}, {"repeats", c.repeats}, {"k", c.eval_k}, {"link_cap", c.link_cap}}},
        {"seed", c.seed},
        {"threads", c.threads}};
}

constexpr const char* kStageOrder[] = {"project", "assess", "combine", "eval", "pipeline"};

/// Inserts or replaces one stage entry, keeping the fixed stage order so
/// reruns with unchanged inputs produce byte-identical manifests.
void record_stage(const PipelineConfig& config, const std::string& stage,
                  const std::vector<std::string>& inputs, const std::vector<std::string>& outputs) {
    fs::path manifest_path = fs::path(config.output) / "manifest.json";
    nlohmann::json manifest;
    if (fs::exists(manifest_path)) manifest = read_json(manifest_path.string());
    if (!manifest.contains("stages") || !manifest["stages"].is_array())
        manifest = nlohmann::json{{"tool", "meg"}, {"version", kVersion}, {"stages", nlohmann::json::array()}};
    manifest["tool"] = "meg";
    manifest["version"] = kVersion;

    nlohmann::json digest_map = nlohmann::json::object();
    for (const auto& p : inputs) digest_map[p] = file_digest(p);
    nlohmann::json output_map = nlohmann::json::object();
    for (const auto& p : outputs) output_map[p] = file_digest(p);

    nlohmann::json entry{{"stage", stage},
                         {"seed", config.seed},
                         {"config", config_json(config)},
                         {"inputs", digest_map},
                         {"outputs", output_map}};

    nlohmann::json stages = nlohmann::json::array();
    for (const char* name : kStageOrder) {
        if (stage == name) {
            stages.push_back(entry);
            continue;
        }
        for (const auto& existing : manifest["stages"])
            if (existing.value("stage", "") == name) stages.push_back(existing);
    }
    manifest["stages"] = stages;
    write_json(manifest, manifest_path.string());
}

HeterogeneousNetwork load_network(const PipelineConfig& config) {
    if (config.nodes.empty() || config.edges.empty())
        throw ConfigError("config: paths.nodes and paths.edges are required");
    LoadOptions options;
    if (!config.labels.empty()) options.labels_path = config.labels;
    if (!config.schema.empty()) options.schema_path = config.schema;
    return load_hin(config.nodes, config.edges, options);
}

std::vector<MetaGraph> load_metagraph_list(const PipelineConfig& config,
                                           const HeterogeneousNetwork& hin) {
    if (config.metagraphs.empty()) throw ConfigError("config: paths.metagraphs is required");
    std::vector<MetaGraph> mgs = load_metagraphs(hin, config.metagraphs);
    if (mgs.empty()) throw DataError("'" + config.metagraphs + "' lists no meta-graphs");
    // Artifact file names embed the sanitized meta-graph name; stages look
    // each other's files up by it, so collisions must be rejected up front.
    std::set<std::string> sanitized;
    for (const auto& mg : mgs) {
        if (!sanitized.insert(sanitize_name(mg.display_name)).second)
            throw DataError("meta-graphs '" + mg.display_name +
                            "' and another entry collide after file-name sanitization; rename a type");
    }
    return mgs;
}

AssessConfig assess_config(const PipelineConfig& config) {
    AssessConfig ac;
    ac.m = config.m;
    ac.lambda_cap = config.lambda_cap;
    ac.budget = config.budget;
    ac.zero_tol = config.zero_tol;
    ac.tol = config.tol;
    ac.seed = config.seed;
    ac.fpp_window = config.fpp_window;
    ac.max_k = config.k;
    ac.threads = config.threads;
    return ac;
}

std::vector<std::string> base_inputs(const PipelineConfig& config) {
    std::vector<std::string> inputs{config.nodes, config.edges, config.metagraphs};
    if (!config.labels.empty()) inputs.push_back(config.labels);
    if (!config.schema.empty()) inputs.push_back(config.schema);
    return inputs;
}

void require_artifact(const fs::path& path, const std::string& producer) {
    if (!fs::exists(path))
        throw DataError("missing artifact '" + path.string() + "'; run `meg " + producer + "` first");
}

}  // namespace

void cmd_project(const PipelineConfig& config) {
    fs::create_directories(config.output);
    HeterogeneousNetwork hin = load_network(config);
    std::vector<MetaGraph> mgs = load_metagraph_list(config, hin);

    OutputTracker outputs;
    std::vector<ProjectedNetwork> projections(mgs.size());
    parallel_for(mgs.size(), config.threads, [&](std::size_t i) {
        projections[i] = project(hin, mgs[i]);
    });
    for (std::size_t i = 0; i < mgs.size(); ++i) {
        std::string base = (fs::path(config.output) / ("projected_" + sanitize_name(mgs[i].display_name)))
                               .string();
        write_projected_tsv(projections[i], outputs.add(base + ".tsv"));
        write_json(projected_sidecar(projections[i]), outputs.add(base + ".json"));
    }
    record_stage(config, "project", base_inputs(config), outputs.paths());
    outputs.commit();
}

void cmd_assess(const PipelineConfig& config) {
    fs::create_directories(config.output);
    HeterogeneousNetwork hin = load_network(config);
    std::vector<MetaGraph> mgs = load_metagraph_list(config, hin);

    OutputTracker outputs;
    AssessmentResult result = assess(hin, mgs, assess_config(config));
    for (std::size_t i = 0; i < mgs.size(); ++i) {
        std::string safe = sanitize_name(mgs[i].display_name);
        write_spectrum_tsv(result.spectra[i],
                           outputs.add((fs::path(config.output) / ("spectrum_" + safe + ".tsv")).string()));
        std::string json_path = (fs::path(config.output) / ("spectrum_" + safe + ".json")).string();
        std::string bin_path = (fs::path(config.output) / ("eigvecs_" + safe + ".bin")).string();
        write_spectrum(result.spectra[i], outputs.add(json_path), outputs.add(bin_path));
    }
    write_json(report_to_json(result.report),
               outputs.add((fs::path(config.output) / "assessment.json").string()));
    record_stage(config, "assess", base_inputs(config), outputs.paths());
    outputs.commit();
}

void cmd_combine(const PipelineConfig& config) {
    fs::create_directories(config.output);
    fs::path report_path = fs::path(config.output) / "assessment.json";
    require_artifact(report_path, "assess");
    AssessmentReport report = report_from_json(read_json(report_path.string()));
    if (report.ranked.empty()) throw DataError("assessment report lists no meta-graphs");

    // The combine stage consumes assess's per-meta-graph dimension selection.
    std::vector<std::string> inputs{report_path.string()};
    std::vector<EmbeddingMatrix> embeddings;
    for (const auto& entry : report.ranked) {
        std::string safe = sanitize_name(entry.metagraph);
        fs::path json_path = fs::path(config.output) / ("spectrum_" + safe + ".json");
        fs::path bin_path = fs::path(config.output) / ("eigvecs_" + safe + ".bin");
        require_artifact(json_path, "assess");
        require_artifact(bin_path, "assess");
        inputs.push_back(json_path.string());
        inputs.push_back(bin_path.string());
        Spectrum s = read_spectrum(json_path.string(), bin_path.string());
        embeddings.push_back(spectral_embedding(s, entry.selected_dims));
    }
    std::sort(embeddings.begin(), embeddings.end(),
              [](const EmbeddingMatrix& a, const EmbeddingMatrix& b) { return a.metagraph < b.metagraph; });

    GroupedMatrix grouped = concat_embeddings(embeddings);
    NormalizationMode mode = config.normalization == "group" ? NormalizationMode::group_variance
                                                             : NormalizationMode::column_variance;
    PreprocessStats stats = preprocess(grouped, mode);

    TrainConfig tc;
    tc.encoding_dim = std::min<int>(config.q, static_cast<int>(grouped.data.cols()));
    tc.layers = config.layers;
    tc.leaky_slope = config.slope;
    tc.dropout = config.dropout;
    tc.epochs = config.epochs;
    tc.batch_size = config.batch;
    tc.learning_rate = config.lr;
    tc.loss = config.loss == "l21" ? LossKind::l21 : LossKind::l2;
    tc.norm_epsilon = config.norm_epsilon;
    tc.seed = config.seed;

    OutputTracker outputs;
    AutoencoderModel model = train(grouped, stats, tc);
    CombinedEmbedding embedding = encode(model, grouped);
    std::vector<GroupNorm> norms = group_norms(model, grouped);

    save_model(model, outputs.add((fs::path(config.output) / "model.bin").string()));
    write_embedding_tsv(embedding, outputs.add((fs::path(config.output) / "combined.tsv").string()));

    nlohmann::json norm_json = nlohmann::json::array();
    std::vector<GroupNorm> ranked = norms;
    std::sort(ranked.begin(), ranked.end(), [](const GroupNorm& a, const GroupNorm& b) {
        if (a.mean_residual_norm != b.mean_residual_norm)
            return a.mean_residual_norm < b.mean_residual_norm;
        return a.name < b.name;
    });
    for (const auto& n : ranked)
        norm_json.push_back({{"metagraph", n.name}, {"mean_residual_norm", n.mean_residual_norm}});
    nlohmann::json sidecar{{"encoding_dim", model.encoding_dim()},
                           {"vertex_count", embedding.vertex_ids.size()},
                           {"seed", config.seed},
                           {"loss", config.loss},
                           {"group_selection", norm_json},
                           {"final_loss", model.history.empty() ? 0.0 : model.history.back().loss}};
    write_json(sidecar, outputs.add((fs::path(config.output) / "combined.json").string()));
    record_stage(config, "combine", inputs, outputs.paths());
    outputs.commit();
}

void cmd_eval(const PipelineConfig& config) {
    fs::create_directories(config.output);
    fs::path embedding_path = fs::path(config.output) / "combined.tsv";
    require_artifact(embedding_path, "combine");
    if (config.labels.empty()) throw ConfigError("config: paths.labels is required for eval");

    CombinedEmbedding embedding = read_embedding_tsv(embedding_path.string());

    // Align the label file to embedding rows by vertex id.
    std::unordered_map<std::string, int> row_of;
    for (std::size_t i = 0; i < embedding.vertex_ids.size(); ++i)
        row_of.emplace(embedding.vertex_ids[i], static_cast<int>(i));
    std::vector<std::vector<int>> labels(embedding.vertex_ids.size());
    std::vector<std::string> class_names;
    std::unordered_map<std::string, int> class_ids;
    {
        std::ifstream in(config.labels);
        if (!in) throw DataError("cannot open '" + config.labels + "'");
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            std::size_t tab = line.find('\t');
            if (tab == std::string::npos)
                throw ParseError(config.labels + ": expected `vertex <TAB> class`", line_no, 1);
            std::string vertex = line.substr(0, tab), cls = line.substr(tab + 1);
            auto row = row_of.find(vertex);
            if (row == row_of.end()) continue;  // label for a vertex outside this embedding
            auto [it, inserted] = class_ids.emplace(cls, static_cast<int>(class_names.size()));
            if (inserted) class_names.push_back(cls);
            auto& ls = labels[row->second];
            if (!std::binary_search(ls.begin(), ls.end(), it->second))
                ls.insert(std::upper_bound(ls.begin(), ls.end(), it->second), it->second);
        }
    }

    ClassifyConfig cc;
    cc.split_ratio = config.split;
    cc.repeats = config.repeats;
    cc.seed = config.seed;
    cc.threads = config.threads;
    EvalResult classification = classify(embedding.rows, labels, static_cast<int>(class_names.size()), cc);

    std::vector<std::pair<int, int>> links =
        class_links(labels, static_cast<int>(class_names.size()), config.link_cap, config.seed);
    LinkPredictConfig lc;
    lc.k = config.eval_k;
    lc.threads = config.threads;
    EvalResult prediction = link_predict(embedding.rows, links, lc);

    OutputTracker outputs;
    nlohmann::json j{{"classification", eval_to_json(classification)},
                     {"link_prediction", eval_to_json(prediction)},
                     {"config", config_json(config)}};
    write_json(j, outputs.add((fs::path(config.output) / "eval.json").string()));
    record_stage(config, "eval", {embedding_path.string(), config.labels}, outputs.paths());
    outputs.commit();
}

void cmd_pipeline(const PipelineConfig& config) {
    cmd_project(config);
    cmd_assess(config);
    cmd_combine(config);
    cmd_eval(config);
    record_stage(config, "pipeline", base_inputs(config), {});
}

}  // namespace meg
