#include "meg/io.hpp"

#include "meg/common.hpp"
#include "meg/errors.hpp"

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace meg {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary exports assume a little-endian host");

constexpr char kMagic[8] = {'M', 'E', 'G', 'B', 'I', 'N', '0', '1'};

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode);
    if (!out) throw DataError("cannot write '" + path + "'");
    return out;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw DataError("cannot open '" + path + "'");
    return in;
}

/// Binary container: magic, u64 header length, JSON header, raw payload.
void write_container(const std::string& path, const nlohmann::json& header,
                     const std::vector<const Eigen::MatrixXd*>& matrices) {
    std::ofstream out = open_out(path, std::ios::binary);
    std::string header_text = header.dump();
    std::uint64_t header_size = header_text.size();
    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(&header_size), sizeof(header_size));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    std::vector<double> row;
    for (const auto* m : matrices) {
        row.resize(static_cast<std::size_t>(m->cols()));
        for (Eigen::Index i = 0; i < m->rows(); ++i) {
            for (Eigen::Index j = 0; j < m->cols(); ++j) row[static_cast<std::size_t>(j)] = (*m)(i, j);
            out.write(reinterpret_cast<const char*>(row.data()),
                      static_cast<std::streamsize>(row.size() * sizeof(double)));
        }
    }
    if (!out) throw DataError("failed writing '" + path + "'");
}

nlohmann::json read_container_header(std::ifstream& in, const std::string& path) {
    char magic[8];
    std::uint64_t header_size = 0;
    in.read(magic, sizeof(magic));
    in.read(reinterpret_cast<char*>(&header_size), sizeof(header_size));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DataError("'" + path + "' is not a meg binary file");
    std::string header_text(header_size, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_size));
    if (!in) throw DataError("'" + path + "': truncated header");
    try {
        return nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("'" + path + "': bad header: " + e.what());
    }
}

Eigen::MatrixXd read_matrix_payload(std::ifstream& in, const std::string& path, Eigen::Index rows,
                                    Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    std::vector<double> row(static_cast<std::size_t>(cols));
    for (Eigen::Index i = 0; i < rows; ++i) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(double)));
        if (!in) throw DataError("'" + path + "': truncated payload");
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
    }
    return m;
}

}  // namespace

std::string format_double(double v) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

void write_projected_tsv(const ProjectedNetwork& pn, const std::string& path) {
    std::ofstream out = open_out(path);
    for (Eigen::Index col = 0; col < pn.size(); ++col) {
        for (SparseMatrix::InnerIterator it(pn.adjacency, col); it; ++it) {
            if (it.row() >= it.col() || it.value() == 0.0) continue;
            out << pn.vertex_ids[it.row()] << '\t' << pn.vertex_ids[it.col()] << '\t'
                << format_double(it.value()) << '\n';
        }
    }
}

nlohmann::json projected_sidecar(const ProjectedNetwork& pn) {
    return nlohmann::json{{"metagraph", pn.source_metagraph},
                          {"vertex_count", pn.vertex_ids.size()},
                          {"edge_count", pn.edge_count()}};
}

void write_spectrum(const Spectrum& s, const std::string& json_path, const std::string& bin_path) {
    nlohmann::json j{{"metagraph", s.metagraph},
                     {"eigenvalues", s.eigenvalues},
                     {"residuals", s.residual_norms},
                     {"dropped_isolated", s.dropped_isolated},
                     {"vertex_ids", s.vertex_ids},
                     {"laplacian_dim", s.laplacian_dim},
                     {"eigenvectors_file", bin_path.substr(bin_path.find_last_of('/') + 1)}};
    write_json(j, json_path);

    nlohmann::json header{{"kind", "eigenvectors"},
                          {"rows", s.eigenvectors.rows()},
                          {"cols", s.eigenvectors.cols()},
                          {"metagraph", s.metagraph},
                          {"spectrum_file", json_path.substr(json_path.find_last_of('/') + 1)}};
    write_container(bin_path, header, {&s.eigenvectors});
}

Spectrum read_spectrum(const std::string& json_path, const std::string& bin_path) {
    nlohmann::json j = read_json(json_path);
    Spectrum s;
    try {
        s.metagraph = j.at("metagraph").get<std::string>();
        s.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
        s.residual_norms = j.at("residuals").get<std::vector<double>>();
        s.dropped_isolated = j.at("dropped_isolated").get<std::vector<std::string>>();
        s.vertex_ids = j.at("vertex_ids").get<std::vector<std::string>>();
        s.laplacian_dim = j.at("laplacian_dim").get<Eigen::Index>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError("'" + json_path + "': bad spectrum descriptor: " + e.what());
    }

    std::ifstream in = open_in(bin_path, std::ios::binary);
    nlohmann::json header = read_container_header(in, bin_path);
    auto rows = header.at("rows").get<Eigen::Index>();
    auto cols = header.at("cols").get<Eigen::Index>();
    if (rows != static_cast<Eigen::Index>(s.vertex_ids.size()) ||
        cols != static_cast<Eigen::Index>(s.eigenvalues.size()))
        throw DataError("'" + bin_path + "': eigenvector shape does not match the descriptor");
    s.eigenvectors = read_matrix_payload(in, bin_path, rows, cols);
    return s;
}

void write_spectrum_tsv(const Spectrum& s, const std::string& path) {
    std::ofstream out = open_out(path);
    for (int i = 0; i < s.size(); ++i)
        out << i << '\t' << format_double(s.eigenvalues[i]) << '\n';
}

void save_model(const AutoencoderModel& model, const std::string& path) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : model.groups)
        groups.push_back({{"name", g.name}, {"offset", g.offset}, {"width", g.width}});
    nlohmann::json history = nlohmann::json::array();
    for (const auto& h : model.history) history.push_back({h.epoch, h.loss, h.smoothed});

    auto shapes = [](const std::vector<DenseLayer>& layers) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& l : layers) out.push_back({l.weight.rows(), l.weight.cols()});
        return out;
    };
    nlohmann::json header{
        {"kind", "autoencoder"},
        {"encoder_shapes", shapes(model.encoder)},
        {"decoder_shapes", shapes(model.decoder)},
        {"leaky_slope", model.leaky_slope},
        {"dropout", model.dropout},
        {"loss", model.loss == LossKind::l21 ? "l21" : "l2"},
        {"norm_epsilon", model.norm_epsilon},
        {"seed", model.seed},
        {"groups", groups},
        {"preprocess",
         {{"mode", model.stats.mode == NormalizationMode::group_variance ? "group" : "column"},
          {"means", std::vector<double>(model.stats.means.data(),
                                        model.stats.means.data() + model.stats.means.size())},
          {"scales", std::vector<double>(model.stats.scales.data(),
                                         model.stats.scales.data() + model.stats.scales.size())},
          {"zero_variance_groups", model.stats.zero_variance_groups}}},
        {"history", history}};

    std::vector<const Eigen::MatrixXd*> payload;
    std::vector<Eigen::MatrixXd> bias_rows;
    bias_rows.reserve(model.encoder.size() + model.decoder.size());
    for (const auto* layers : {&model.encoder, &model.decoder}) {
        for (const auto& l : *layers) {
            payload.push_back(&l.weight);
            bias_rows.emplace_back(l.bias.transpose());
            payload.push_back(&bias_rows.back());
        }
    }
    write_container(path, header, payload);
}

AutoencoderModel load_model(const std::string& path) {
    std::ifstream in = open_in(path, std::ios::binary);
    nlohmann::json header = read_container_header(in, path);
    AutoencoderModel model;
    try {
        if (header.at("kind") != "autoencoder") throw DataError("'" + path + "': not a model checkpoint");
        model.leaky_slope = header.at("leaky_slope").get<double>();
        model.dropout = header.at("dropout").get<double>();
        model.loss = header.at("loss") == "l21" ? LossKind::l21 : LossKind::l2;
        model.norm_epsilon = header.at("norm_epsilon").get<double>();
        model.seed = header.at("seed").get<std::uint64_t>();
        for (const auto& g : header.at("groups"))
            model.groups.push_back({g.at("name").get<std::string>(), g.at("offset").get<Eigen::Index>(),
                                    g.at("width").get<Eigen::Index>()});
        const auto& pp = header.at("preprocess");
        model.stats.mode = pp.at("mode") == "group" ? NormalizationMode::group_variance
                                                    : NormalizationMode::column_variance;
        auto means = pp.at("means").get<std::vector<double>>();
        auto scales = pp.at("scales").get<std::vector<double>>();
        model.stats.means = Eigen::Map<Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
        model.stats.scales =
            Eigen::Map<Eigen::VectorXd>(scales.data(), static_cast<Eigen::Index>(scales.size()));
        model.stats.zero_variance_groups = pp.at("zero_variance_groups").get<std::vector<std::string>>();
        for (const auto& h : header.at("history"))
            model.history.push_back({h.at(0).get<int>(), h.at(1).get<double>(), h.at(2).get<double>()});

        for (const char* side : {"encoder_shapes", "decoder_shapes"}) {
            auto& layers = std::string(side) == "encoder_shapes" ? model.encoder : model.decoder;
            for (const auto& shape : header.at(side)) {
                DenseLayer l;
                auto rows = shape.at(0).get<Eigen::Index>();
                auto cols = shape.at(1).get<Eigen::Index>();
                l.weight = read_matrix_payload(in, path, rows, cols);
                l.bias = read_matrix_payload(in, path, 1, rows).row(0).transpose();
                layers.push_back(std::move(l));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("'" + path + "': bad model checkpoint: " + e.what());
    }
    return model;
}

void write_embedding_tsv(const CombinedEmbedding& e, const std::string& path) {
    std::ofstream out = open_out(path);
    for (std::size_t i = 0; i < e.vertex_ids.size(); ++i) {
        out << e.vertex_ids[i];
        for (Eigen::Index j = 0; j < e.rows.cols(); ++j)
            out << '\t' << format_double(e.rows(static_cast<Eigen::Index>(i), j));
        out << '\n';
    }
}

CombinedEmbedding read_embedding_tsv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::vector<std::string> ids;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string id;
        if (!std::getline(ss, id, '\t')) throw ParseError(path + ": missing vertex id", line_no, 1);
        std::vector<double> values;
        std::string field;
        while (std::getline(ss, field, '\t')) {
            char* end = nullptr;
            double v = std::strtod(field.c_str(), &end);
            if (end == field.c_str() || *end != '\0')
                throw ParseError(path + ": bad number '" + field + "'", line_no, 1);
            values.push_back(v);
        }
        if (!rows.empty() && values.size() != rows.front().size())
            throw ParseError(path + ": inconsistent column count", line_no, 1);
        ids.push_back(std::move(id));
        rows.push_back(std::move(values));
    }
    CombinedEmbedding e;
    e.vertex_ids = std::move(ids);
    e.rows.resize(static_cast<Eigen::Index>(rows.size()),
                  rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            e.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return e;
}

nlohmann::json report_to_json(const AssessmentReport& report) {
    nlohmann::json ranked = nlohmann::json::array();
    for (const auto& a : report.ranked) {
        ranked.push_back({{"metagraph", a.metagraph},
                          {"fpp", a.fpp},
                          {"all_zero", a.all_zero},
                          {"curvature", a.curvature},
                          {"component_count", a.component_count},
                          {"isolated_count", a.isolated_count},
                          {"selected_dims", a.selected_dims},
                          {"spectrum", a.spectrum_curve},
                          {"laplacian_dim", a.laplacian_dim}});
    }
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : report.pairs) {
        pairs.push_back({{"first", p.first},
                         {"second", p.second},
                         {"lc3_size", p.lc3_size},
                         {"curvature_first", p.curvature_first},
                         {"curvature_second", p.curvature_second}});
    }
    return nlohmann::json{{"ranked", ranked}, {"pairs", pairs}};
}

AssessmentReport report_from_json(const nlohmann::json& j) {
    AssessmentReport report;
    try {
        for (const auto& a : j.at("ranked")) {
            MetaGraphAssessment m;
            m.metagraph = a.at("metagraph").get<std::string>();
            m.fpp = a.at("fpp").get<int>();
            m.all_zero = a.at("all_zero").get<bool>();
            m.curvature = a.at("curvature").get<double>();
            m.component_count = a.at("component_count").get<int>();
            m.isolated_count = a.at("isolated_count").get<int>();
            m.selected_dims = a.at("selected_dims").get<std::vector<int>>();
            m.spectrum_curve = a.at("spectrum").get<std::vector<double>>();
            m.laplacian_dim = a.at("laplacian_dim").get<Eigen::Index>();
            report.ranked.push_back(std::move(m));
        }
        for (const auto& p : j.at("pairs")) {
            PairAssessment pa;
            pa.first = p.at("first").get<std::string>();
            pa.second = p.at("second").get<std::string>();
            pa.lc3_size = p.at("lc3_size").get<std::size_t>();
            pa.curvature_first = p.at("curvature_first").get<double>();
            pa.curvature_second = p.at("curvature_second").get<double>();
            report.pairs.push_back(std::move(pa));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad assessment report: ") + e.what());
    }
    return report;
}

nlohmann::json eval_to_json(const EvalResult& result) {
    nlohmann::json metrics;
    for (const auto& [name, stat] : result.metrics)
        metrics[name] = {{"mean", stat.first}, {"std", stat.second}};
    return nlohmann::json{{"task", result.task}, {"metrics", metrics}, {"extras", result.extras}};
}

void write_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream out = open_out(path);
    out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in = open_in(path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("'" + path + "': invalid JSON: " + e.what());
    }
}

std::string file_digest(const std::string& path) {
    std::ifstream in = open_in(path, std::ios::binary);
    char buffer[1 << 16];
    std::uint64_t h = 0xcbf29ce484222325ULL;
    while (in) {
        in.read(buffer, sizeof(buffer));
        std::streamsize got = in.gcount();
        if (got > 0) h = fnv1a64(buffer, static_cast<std::size_t>(got), h);
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016" PRIx64, h);
    return hex;
}

}  // namespace meg
