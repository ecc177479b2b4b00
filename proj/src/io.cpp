#include "rcaforge/io.hpp"

#include "rcaforge/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <ctime>
#include <fstream>
#include <sstream>

namespace rcaforge {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

namespace {

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string line(text.substr(start, end - start));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        start = end + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

// Comma split with double-quoted fields.
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    out.push_back(std::move(field));
    return out;
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

std::optional<double> parse_real(const std::string& s) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
    return v;
}

std::optional<std::int64_t> parse_timestamp(const std::string& s) {
    std::int64_t v = 0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec == std::errc() && ptr == end && !s.empty()) return v;

    std::string text = s;
    if (!text.empty() && (text.back() == 'Z' || text.back() == 'z')) text.pop_back();
    for (const char* format : {"%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d"}) {
        std::tm tm{};
        const char* rest = strptime(text.c_str(), format, &tm);
        if (rest != nullptr && *rest == '\0') return static_cast<std::int64_t>(timegm(&tm));
    }
    return std::nullopt;
}

std::string format_real(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string location(std::size_t line, std::size_t column) {
    return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

std::vector<std::string> yaml_names(const YAML::Node& node, const std::string& key) {
    if (!node.IsSequence()) throw SchemaError("'" + key + "' must be a list of node names");
    std::vector<std::string> out;
    for (const auto& item : node) {
        if (!item.IsScalar()) throw SchemaError("'" + key + "' entries must be node names");
        out.push_back(item.as<std::string>());
    }
    return out;
}

std::vector<NamePair> yaml_pairs(const YAML::Node& node, const std::string& key) {
    if (!node.IsSequence()) throw SchemaError("'" + key + "' must be a list of [cause, effect] pairs");
    std::vector<NamePair> out;
    for (const auto& item : node) {
        if (!item.IsSequence() || item.size() != 2 || !item[0].IsScalar() || !item[1].IsScalar())
            throw SchemaError("'" + key + "' entries must be [cause, effect] pairs");
        out.emplace_back(item[0].as<std::string>(), item[1].as<std::string>());
    }
    return out;
}

json name_pairs(const std::set<NamePair>& pairs) {
    json out = json::array();
    for (const auto& [a, b] : pairs) out.push_back({a, b});
    return out;
}

}  // namespace

MetricFrame parse_metrics(std::string_view text) {
    const auto lines = split_lines(text);
    if (lines.empty()) throw ParseError("line 1: missing header row");
    auto header = split_csv(lines[0]);
    for (auto& h : header) h = trim(h);
    if (header.size() < 2) throw ParseError("line 1: expected a timestamp column and at least one metric");
    if (lines.size() < 2) throw ParseError("line 2: no data rows");

    const std::size_t cols = header.size() - 1;
    const std::size_t rows = lines.size() - 1;
    std::vector<std::int64_t> ts(rows);
    Eigen::MatrixXd values(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t line_no = r + 2;
        const auto fields = split_csv(lines[r + 1]);
        if (fields.size() != header.size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                             " fields, found " + std::to_string(fields.size()));
        const auto stamp = parse_timestamp(trim(fields[0]));
        if (!stamp) throw ParseError(location(line_no, 1) + ": invalid timestamp '" + fields[0] + "'");
        ts[r] = *stamp;
        if (r > 0 && ts[r] <= ts[r - 1])
            throw NonMonotonicTimestamps(location(line_no, 1) + ": timestamp " + std::to_string(ts[r]) +
                                         " does not increase");
        for (std::size_t c = 0; c < cols; ++c) {
            const auto v = parse_real(trim(fields[c + 1]));
            if (!v)
                throw NonNumericCell(location(line_no, c + 2) + " ('" + header[c + 1] + "'): non-numeric value '" +
                                     fields[c + 1] + "'");
            values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *v;
        }
    }
    return MetricFrame(std::move(ts), std::vector<std::string>(header.begin() + 1, header.end()), std::move(values));
}

MetricFrame load_metrics(const fs::path& path) { return parse_metrics(read_file(path)); }

std::string format_metrics(const MetricFrame& f) {
    std::string out = "timestamp";
    for (const auto& name : f.names()) out += "," + csv_field(name);
    out += "\n";
    for (Eigen::Index r = 0; r < f.rows(); ++r) {
        out += std::to_string(f.timestamps()[static_cast<std::size_t>(r)]);
        for (Eigen::Index c = 0; c < f.cols(); ++c) out += "," + format_real(f.values()(r, c));
        out += "\n";
    }
    return out;
}

DomainKnowledge parse_knowledge(std::string_view text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
        throw ParseError(std::string("knowledge document: ") + e.what());
    }
    DomainKnowledge k;
    if (root.IsNull()) return k;
    if (!root.IsMap()) throw SchemaError("knowledge document must be a mapping");
    for (const auto& entry : root) {
        const auto key = entry.first.as<std::string>();
        const YAML::Node& value = entry.second;
        if (value.IsNull()) continue;
        if (key == "forbids") {
            for (auto& p : yaml_pairs(value, key)) k.forbidden.insert(std::move(p));
        } else if (key == "requires") {
            for (auto& p : yaml_pairs(value, key)) k.required.insert(std::move(p));
        } else if (key == "root-nodes") {
            for (auto& n : yaml_names(value, key)) k.root_nodes.insert(std::move(n));
        } else if (key == "leaf-nodes") {
            for (auto& n : yaml_names(value, key)) k.leaf_nodes.insert(std::move(n));
        } else {
            throw SchemaError("unknown key '" + key + "'");
        }
    }
    k.validate();
    return k;
}

std::string format_knowledge(const DomainKnowledge& k) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    auto pairs = [&](const char* key, const std::set<NamePair>& set) {
        out << YAML::Key << key << YAML::Value << YAML::BeginSeq;
        for (const auto& [a, b] : set) out << YAML::Flow << YAML::BeginSeq << a << b << YAML::EndSeq;
        out << YAML::EndSeq;
    };
    auto names = [&](const char* key, const std::set<std::string>& set) {
        out << YAML::Key << key << YAML::Value << YAML::BeginSeq;
        for (const auto& n : set) out << n;
        out << YAML::EndSeq;
    };
    pairs("forbids", k.forbidden);
    pairs("requires", k.required);
    names("root-nodes", k.root_nodes);
    names("leaf-nodes", k.leaf_nodes);
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

json graph_to_json(const MixedGraph& g) {
    return json{{"nodes", g.nodes()}, {"directed", name_pairs(g.directed_names())},
                {"undirected", name_pairs(g.undirected_names())}};
}

MixedGraph graph_from_json(const json& j) {
    try {
        MixedGraph g(j.at("nodes").get<std::vector<std::string>>());
        for (const auto& e : j.value("directed", json::array())) g.add_directed(e.at(0).get<std::string>(), e.at(1).get<std::string>());
        for (const auto& e : j.value("undirected", json::array()))
            g.add_undirected(e.at(0).get<std::string>(), e.at(1).get<std::string>());
        return g;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("graph document: ") + e.what());
    }
}

std::string format_graph(const MixedGraph& g) { return dump_json(graph_to_json(g)); }

MixedGraph parse_graph(std::string_view text) {
    try {
        return graph_from_json(json::parse(text));
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("graph document: ") + e.what());
    }
}

std::string format_adjacency_csv(const MixedGraph& g) {
    std::string out;
    for (const auto& name : g.nodes()) out += "," + csv_field(name);
    out += "\n";
    for (NodeId a = 0; a < g.size(); ++a) {
        out += csv_field(g.name(a));
        for (NodeId b = 0; b < g.size(); ++b) out += (g.has_directed(a, b) || g.has_undirected(a, b)) ? ",1" : ",0";
        out += "\n";
    }
    return out;
}

MixedGraph parse_adjacency_csv(std::string_view text) {
    const auto lines = split_lines(text);
    if (lines.empty()) throw ParseError("line 1: missing header row");
    auto header = split_csv(lines[0]);
    std::vector<std::string> nodes(header.begin() + 1, header.end());
    if (lines.size() != nodes.size() + 1) throw ParseError("adjacency matrix must be square");
    std::vector<std::vector<bool>> m(nodes.size(), std::vector<bool>(nodes.size(), false));
    for (std::size_t r = 0; r < nodes.size(); ++r) {
        const auto fields = split_csv(lines[r + 1]);
        if (fields.size() != nodes.size() + 1 || fields[0] != nodes[r])
            throw ParseError("line " + std::to_string(r + 2) + ": malformed adjacency row");
        for (std::size_t c = 0; c < nodes.size(); ++c) {
            const auto cell = trim(fields[c + 1]);
            if (cell != "0" && cell != "1") throw ParseError(location(r + 2, c + 2) + ": expected 0 or 1");
            m[r][c] = cell == "1";
        }
    }
    MixedGraph g(nodes);
    for (NodeId a = 0; a < nodes.size(); ++a) {
        for (NodeId b = a + 1; b < nodes.size(); ++b) {
            if (m[a][b] && m[b][a]) g.add_undirected(a, b);
            else if (m[a][b]) g.add_directed(a, b);
            else if (m[b][a]) g.add_directed(b, a);
        }
    }
    return g;
}

json result_to_json(const RcaResult& r) {
    json ranked = json::array();
    for (const auto& item : r.ranked) ranked.push_back({{"metric", item.metric}, {"score", item.score}});
    return json{{"method", r.method}, {"ranked", ranked}, {"metadata", r.metadata}};
}

RcaResult result_from_json(const json& j) {
    try {
        RcaResult r;
        r.method = j.at("method").get<std::string>();
        for (const auto& item : j.at("ranked")) r.ranked.push_back({item.at("metric"), item.at("score")});
        r.metadata = j.value("metadata", json::object());
        return r;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("result document: ") + e.what());
    }
}

std::string format_result(const RcaResult& r) { return dump_json(result_to_json(r)); }

json spans_to_json(const std::map<std::string, std::vector<AnomalySpan>>& spans) {
    json out = json::object();
    for (const auto& [name, list] : spans) {
        json arr = json::array();
        for (const auto& s : list)
            arr.push_back({{"start_index", s.start_index}, {"end_index", s.end_index}, {"peak_score", s.peak_score}});
        out[name] = arr;
    }
    return out;
}

json scm_to_json(const Scm& scm) {
    json weights = json::array();
    for (const auto& [edge, w] : scm.weights) weights.push_back({{"from", edge.first}, {"to", edge.second}, {"weight", w}});
    json noise = json::object();
    for (const auto& [name, spec] : scm.noise)
        noise[name] = {{"form", to_string(spec.form)}, {"scale", spec.scale}, {"shift", spec.shift}};
    return json{{"nodes", scm.graph.nodes()}, {"weights", weights}, {"noise", noise},
                {"intercepts", scm.intercepts}, {"notes", scm.notes}};
}

Scm scm_from_json(const json& j) {
    try {
        Scm scm;
        scm.graph = MixedGraph(j.at("nodes").get<std::vector<std::string>>());
        for (const auto& w : j.at("weights")) {
            const auto from = w.at("from").get<std::string>();
            const auto to = w.at("to").get<std::string>();
            scm.graph.add_directed(from, to);
            scm.weights[{from, to}] = w.at("weight").get<double>();
        }
        for (const auto& [name, spec] : j.at("noise").items())
            scm.noise[name] = NoiseSpec{parse_noise_form(spec.at("form")), spec.at("scale"), spec.at("shift")};
        scm.intercepts = j.at("intercepts").get<std::map<std::string, double>>();
        scm.notes = j.value("notes", std::vector<std::string>{});
        return scm;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("scm document: ") + e.what());
    }
}

void write_case_bundle(const fs::path& dir, const SimulatedCase& c) {
    fs::create_directories(dir);
    json truth{{"targets", c.truth},
               {"mechanism", to_string(c.intervention.mechanism)},
               {"magnitude", c.intervention.magnitude},
               {"seed", c.seed},
               {"n_normal", c.normal.rows()},
               {"n_abnormal", c.abnormal.rows()}};
    write_file(dir / "truth.json", dump_json(truth));
    write_file(dir / "graph.json", format_graph(c.scm.graph));
    write_file(dir / "scm.json", dump_json(scm_to_json(c.scm)));
    write_file(dir / "normal.csv", format_metrics(c.normal));
    write_file(dir / "abnormal.csv", format_metrics(c.abnormal));
}

CaseBundle read_case_bundle(const fs::path& dir) {
    CaseBundle b;
    b.truth_doc = json::parse(read_file(dir / "truth.json"));
    b.truth = b.truth_doc.at("targets").get<std::set<std::string>>();
    b.graph = parse_graph(read_file(dir / "graph.json"));
    b.scm = scm_from_json(json::parse(read_file(dir / "scm.json")));
    b.normal = load_metrics(dir / "normal.csv");
    b.abnormal = load_metrics(dir / "abnormal.csv");
    return b;
}

}  // namespace rcaforge
