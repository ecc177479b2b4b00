#include "rcaforge/service.hpp"

#include "rcaforge/bench.hpp"
#include "rcaforge/errors.hpp"
#include "rcaforge/io.hpp"
#include "rcaforge/pipeline.hpp"

#include <httplib.h>
#include <openssl/evp.h>

#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <thread>

namespace rcaforge {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(ArtifactKind kind) {
    switch (kind) {
        case ArtifactKind::metrics: return "metrics";
        case ArtifactKind::knowledge: return "knowledge";
        case ArtifactKind::graph: return "graph";
        case ArtifactKind::result: return "result";
        case ArtifactKind::spans: return "spans";
        case ArtifactKind::report: return "report";
        case ArtifactKind::evaluation: return "evaluation";
    }
    return "unknown";
}

ArtifactKind parse_artifact_kind(const std::string& text) {
    for (ArtifactKind k : {ArtifactKind::metrics, ArtifactKind::knowledge, ArtifactKind::graph, ArtifactKind::result,
                           ArtifactKind::spans, ArtifactKind::report, ArtifactKind::evaluation})
        if (to_string(k) == text) return k;
    throw SchemaError("unknown artifact kind '" + text + "'");
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

// --- artifact store --------------------------------------------------------------

namespace {

bool valid_id(const std::string& id) {
    if (id.size() != 64) return false;
    for (char c : id)
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
    return true;
}

}  // namespace

ArtifactStore::ArtifactStore(fs::path root) : root_(std::move(root)) { fs::create_directories(root_ / "artifacts"); }

fs::path ArtifactStore::file(const std::string& id) const {
    if (!valid_id(id)) throw UnknownArtifact("unknown artifact '" + id + "'");
    return root_ / "artifacts" / id;
}

std::string ArtifactStore::put(ArtifactKind kind, std::string_view bytes) {
    // The kind is part of the address so identical bytes uploaded as different
    // kinds do not collide.
    const std::string id = sha256_hex(to_string(kind) + '\n' + std::string(bytes));
    const fs::path path = file(id);
    if (fs::exists(path)) return id;
    // Write-then-rename keeps readers from seeing partial files.
    const fs::path tmp = path.string() + ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    write_file(tmp.string() + ".kind", to_string(kind));
    write_file(tmp, bytes);
    fs::rename(tmp.string() + ".kind", path.string() + ".kind");
    fs::rename(tmp, path);
    return id;
}

bool ArtifactStore::contains(const std::string& id) const { return valid_id(id) && fs::exists(file(id)); }

ArtifactKind ArtifactStore::kind(const std::string& id) const {
    if (!contains(id)) throw UnknownArtifact("unknown artifact '" + id + "'");
    return parse_artifact_kind(read_file(file(id).string() + ".kind"));
}

std::string ArtifactStore::bytes(const std::string& id) const {
    if (!contains(id)) throw UnknownArtifact("unknown artifact '" + id + "'");
    return read_file(file(id));
}

// --- job execution ----------------------------------------------------------------

namespace {

struct InputSpec {
    std::string name;
    ArtifactKind kind;
    bool required;
};

std::vector<InputSpec> input_specs(const std::string& kind) {
    if (kind == "discover")
        return {{"data", ArtifactKind::metrics, true}, {"knowledge", ArtifactKind::knowledge, false}};
    if (kind == "score")
        return {{"normal", ArtifactKind::metrics, true},
                {"abnormal", ArtifactKind::metrics, true},
                {"graph", ArtifactKind::graph, false}};
    if (kind == "detect") return {{"data", ArtifactKind::metrics, true}};
    if (kind == "bench") return {};
    throw SchemaError("unknown job kind '" + kind + "'");
}

std::optional<std::string> input_id(const json& inputs, const std::string& name) {
    if (!inputs.contains(name) || inputs.at(name).is_null()) return std::nullopt;
    if (!inputs.at(name).is_string()) throw SchemaError("input '" + name + "' must be an artifact id");
    return inputs.at(name).get<std::string>();
}

}  // namespace

void validate_job(const std::string& kind, const json& inputs, const ArtifactStore& store) {
    const auto specs = input_specs(kind);
    if (!inputs.is_null() && !inputs.is_object()) throw SchemaError("inputs must be a JSON object");
    const json in = inputs.is_null() ? json::object() : inputs;
    for (const auto& [key, value] : in.items()) {
        bool known = false;
        for (const auto& s : specs) known = known || s.name == key;
        if (!known) throw SchemaError("unknown input '" + key + "' for a " + kind + " job");
    }
    for (const auto& s : specs) {
        const auto id = input_id(in, s.name);
        if (!id) {
            if (s.required) throw SchemaError("input '" + s.name + "' is required for a " + kind + " job");
            continue;
        }
        if (store.kind(*id) != s.kind)
            throw SchemaError("input '" + s.name + "' must be a " + to_string(s.kind) + " artifact");
    }
}

JobOutput execute_job(const std::string& kind, const json& inputs, const json& params, const ArtifactStore& store) {
    validate_job(kind, inputs, store);
    const json in = inputs.is_null() ? json::object() : inputs;
    auto frame = [&](const std::string& name) { return parse_metrics(store.bytes(*input_id(in, name))); };

    if (kind == "discover") {
        const DiscoverOptions options = discover_options(params);
        DomainKnowledge knowledge;
        if (const auto id = input_id(in, "knowledge")) knowledge = parse_knowledge(store.bytes(*id));
        return {ArtifactKind::graph, dump_json(discover_document(frame("data"), knowledge, options))};
    }
    if (kind == "score") {
        const std::string method = score_method(params);
        const ScorerOptions options = scorer_options(params);
        std::optional<MixedGraph> graph;
        if (const auto id = input_id(in, "graph")) graph = parse_graph(store.bytes(*id));
        return {ArtifactKind::result,
                dump_json(score_document(method, graph, frame("normal"), frame("abnormal"), options))};
    }
    if (kind == "detect") {
        const DetectOptions o = detect_options(params);
        return {ArtifactKind::spans, dump_json(detect_document(frame("data"), o.train_fraction, o.k_sigma))};
    }
    // bench
    return {ArtifactKind::report, dump_json(report_to_json(run_benchmark(bench_config(params))))};
}

fs::path data_dir_from_env(const fs::path& fallback) {
    if (const char* env = std::getenv("RCA_FORGE_DATA_DIR"); env && *env) return env;
    return fallback;
}

// --- HTTP service ---------------------------------------------------------------------

namespace {

struct Job {
    std::string id;
    std::string kind;
    json inputs;
    json params;
    std::string state = "queued";
    std::optional<std::string> artifact;
    json error;
};

json job_json(const Job& job) {
    json j{{"id", job.id}, {"kind", job.kind}, {"state", job.state}, {"inputs", job.inputs}, {"params", job.params}};
    j["artifact"] = job.artifact ? json(*job.artifact) : json(nullptr);
    if (!job.error.is_null()) j["error"] = job.error;
    return j;
}

int status_for(const Error& e) {
    if (e.kind() == "UnknownArtifact" || e.kind() == "UnknownJob") return 404;
    if (e.kind() == "KnowledgeConflict") return 409;
    return 422;
}

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(dump_json(body), "application/json");
}

std::string content_type(ArtifactKind kind) {
    switch (kind) {
        case ArtifactKind::metrics: return "text/csv";
        case ArtifactKind::knowledge: return "application/yaml";
        default: return "application/json";
    }
}

ArtifactKind sniff_upload(const httplib::Request& req) {
    if (req.has_param("kind")) return parse_artifact_kind(req.get_param_value("kind"));
    const std::string type = req.get_header_value("Content-Type");
    if (type.find("csv") != std::string::npos) return ArtifactKind::metrics;
    if (type.find("yaml") != std::string::npos) return ArtifactKind::knowledge;
    if (type.find("json") != std::string::npos) return ArtifactKind::graph;
    const auto first = req.body.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && req.body[first] == '{') return ArtifactKind::graph;
    const std::string head = req.body.substr(0, req.body.find('\n'));
    return head.find(',') != std::string::npos && head.find('[') == std::string::npos ? ArtifactKind::metrics
                                                                                        : ArtifactKind::knowledge;
}

/// Parses an upload of the given kind; throws on invalid content.
void check_upload(ArtifactKind kind, const std::string& body) {
    switch (kind) {
        case ArtifactKind::metrics: parse_metrics(body); return;
        case ArtifactKind::knowledge: parse_knowledge(body); return;
        case ArtifactKind::graph: parse_graph(body); return;
        default: throw SchemaError("only metrics, knowledge and graph artifacts can be uploaded");
    }
}

}  // namespace

struct Service::Impl {
    ServiceConfig config;
    ArtifactStore store;
    httplib::Server server;
    int port = -1;

    std::mutex mu;
    std::condition_variable work_cv;
    std::condition_variable idle_cv;
    std::map<std::string, Job> jobs;
    std::deque<std::string> queue;
    int active = 0;
    bool stopping = false;
    std::mt19937_64 id_rng{std::random_device{}()};
    std::vector<std::jthread> workers;
    std::jthread listener;

    explicit Impl(ServiceConfig c) : config(std::move(c)), store(config.data_dir) {
        int n = config.max_jobs > 0 ? config.max_jobs : static_cast<int>(std::thread::hardware_concurrency());
        if (n < 1) n = 1;
        for (int i = 0; i < n; ++i) workers.emplace_back([this] { work(); });
        routes();
    }

    ~Impl() {
        {
            std::lock_guard lock(mu);
            stopping = true;
        }
        work_cv.notify_all();
        server.stop();
    }

    std::string new_job_id() {
        static constexpr char hex[] = "0123456789abcdef";
        for (;;) {
            std::uint64_t v = id_rng();
            std::string id;
            for (int i = 0; i < 16; ++i, v >>= 4) id += hex[v & 0xF];
            if (!jobs.count(id)) return id;
        }
    }

    void work() {
        for (;;) {
            std::string id;
            json inputs, params;
            std::string kind;
            {
                std::unique_lock lock(mu);
                work_cv.wait(lock, [&] { return stopping || !queue.empty(); });
                if (stopping) return;
                id = queue.front();
                queue.pop_front();
                Job& job = jobs.at(id);
                job.state = "running";
                kind = job.kind;
                inputs = job.inputs;
                params = job.params;
                ++active;
            }
            std::optional<std::string> artifact;
            json error;
            try {
                const JobOutput out = execute_job(kind, inputs, params, store);
                artifact = store.put(out.kind, out.bytes);
            } catch (const Error& e) {
                error = {{"error", e.kind()}, {"message", e.what()}};
            } catch (const std::exception& e) {
                error = {{"error", "InternalError"}, {"message", e.what()}};
            }
            {
                std::lock_guard lock(mu);
                Job& job = jobs.at(id);
                job.artifact = artifact;
                job.error = error;
                job.state = artifact ? "done" : "failed";
                --active;
            }
            idle_cv.notify_all();
        }
    }

    template <class F>
    static void guarded(httplib::Response& res, F&& f) {
        try {
            f();
        } catch (const Error& e) {
            reply(res, status_for(e), {{"error", e.kind()}, {"message", e.what()}});
        } catch (const json::exception& e) {
            reply(res, 422, {{"error", "ParseError"}, {"message", e.what()}});
        } catch (const std::exception& e) {
            reply(res, 500, {{"error", "InternalError"}, {"message", e.what()}});
        }
    }

    void routes() {
        server.Post("/api/upload", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const ArtifactKind kind = sniff_upload(req);
                check_upload(kind, req.body);
                const std::string id = store.put(kind, req.body);
                reply(res, 201, {{"id", id}, {"kind", to_string(kind)}, {"bytes", req.body.size()}});
            });
        });

        server.Post("/api/jobs", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const json body = json::parse(req.body);
                if (!body.is_object() || !body.contains("kind") || !body.at("kind").is_string())
                    throw SchemaError("job request needs a string 'kind'");
                Job job;
                job.kind = body.at("kind").get<std::string>();
                job.inputs = body.value("inputs", json::object());
                job.params = body.value("params", json::object());
                validate_job(job.kind, job.inputs, store);
                // Cheap parameter checks up front so typos fail the request, not the job.
                if (job.kind == "discover") discover_options(job.params);
                if (job.kind == "score") {
                    score_method(job.params);
                    scorer_options(job.params);
                }
                if (job.kind == "detect") detect_options(job.params);
                if (job.kind == "bench") bench_config(job.params);
                json out;
                {
                    std::lock_guard lock(mu);
                    job.id = new_job_id();
                    out = job_json(job);
                    jobs.emplace(job.id, job);
                    queue.push_back(job.id);
                }
                work_cv.notify_one();
                reply(res, 202, out);
            });
        });

        server.Get(R"(/api/jobs/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                json out;
                {
                    std::lock_guard lock(mu);
                    auto it = jobs.find(req.matches[1]);
                    if (it == jobs.end()) throw UnknownJob("unknown job '" + std::string(req.matches[1]) + "'");
                    out = job_json(it->second);
                }
                if (!out["artifact"].is_null()) out["result"] = json::parse(store.bytes(out["artifact"]));
                reply(res, 200, out);
            });
        });

        server.Get(R"(/api/artifacts/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string id = req.matches[1];
                const ArtifactKind kind = store.kind(id);
                res.status = 200;
                res.set_header("X-Artifact-Kind", to_string(kind));
                res.set_content(store.bytes(id), content_type(kind));
            });
        });

        server.Get(R"(/api/frames/([^/]+)/summary)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string id = req.matches[1];
                if (store.kind(id) != ArtifactKind::metrics) throw SchemaError("artifact is not a metric frame");
                reply(res, 200, frame_summary(parse_metrics(store.bytes(id))));
            });
        });

        // Anything else under /api is an unknown resource.
        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty()) {
                const std::string kind = res.status == 404 ? "NotFound" : "HttpError";
                res.set_content(dump_json({{"error", kind}, {"message", "status " + std::to_string(res.status)}}),
                                "application/json");
            }
        });
    }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Service::~Service() { stop(); }

int Service::bind() {
    if (impl_->config.port == 0) {
        impl_->port = impl_->server.bind_to_any_port(impl_->config.host);
    } else if (impl_->server.bind_to_port(impl_->config.host, impl_->config.port)) {
        impl_->port = impl_->config.port;
    }
    if (impl_->port < 0) throw InvalidArgument("cannot bind " + impl_->config.host + ":" + std::to_string(impl_->config.port));
    return impl_->port;
}

void Service::run() { impl_->server.listen_after_bind(); }

int Service::start() {
    const int port = bind();
    impl_->listener = std::jthread([this] { run(); });
    impl_->server.wait_until_ready();
    return port;
}

void Service::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->listener.joinable()) impl_->listener.join();
}

void Service::wait_idle() {
    std::unique_lock lock(impl_->mu);
    impl_->idle_cv.wait(lock, [&] { return impl_->queue.empty() && impl_->active == 0; });
}

}  // namespace rcaforge
