#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace rcaforge {

/// Kinds of stored artifacts.
enum class ArtifactKind { metrics, knowledge, graph, result, spans, report, evaluation };

std::string to_string(ArtifactKind kind);
ArtifactKind parse_artifact_kind(const std::string& text);

/// Hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

/// Immutable, content-addressed files under `<root>/artifacts`. The id of an
/// artifact is the SHA-256 of its bytes, so storing the same content twice is a no-op.
class ArtifactStore {
public:
    explicit ArtifactStore(std::filesystem::path root);

    std::string put(ArtifactKind kind, std::string_view bytes);
    bool contains(const std::string& id) const;
    /// Throws UnknownArtifact.
    ArtifactKind kind(const std::string& id) const;
    std::string bytes(const std::string& id) const;

    const std::filesystem::path& root() const noexcept { return root_; }

private:
    std::filesystem::path file(const std::string& id) const;
    std::filesystem::path root_;
};

/// Deterministic computation behind a job: validates inputs against the store,
/// runs the pipeline and returns the output artifact bytes and kind. The CLI
/// produces the same bytes for the same parameters.
struct JobOutput {
    ArtifactKind kind;
    std::string bytes;
};
JobOutput execute_job(const std::string& kind, const nlohmann::json& inputs, const nlohmann::json& params,
                      const ArtifactStore& store);

/// Checks a job request without running it: kind known, referenced artifacts
/// present (UnknownArtifact) and of the right type (SchemaError).
void validate_job(const std::string& kind, const nlohmann::json& inputs, const ArtifactStore& store);

struct ServiceConfig {
    std::string host = "127.0.0.1";
    /// 0 picks a free port.
    int port = 8080;
    std::filesystem::path data_dir = "rca-forge-data";
    /// Jobs allowed to run at once; 0 means one per hardware thread.
    int max_jobs = 0;
};

/// Data directory from RCA_FORGE_DATA_DIR, else `fallback`.
std::filesystem::path data_dir_from_env(const std::filesystem::path& fallback);

/// HTTP/JSON job service.
///
///   POST /api/upload[?kind=metrics|knowledge|graph]  -> {"id", "kind"}
///   POST /api/jobs {"kind", "inputs", "params"}       -> {"id", "state"}
///   GET  /api/jobs/{id}                               -> state, artifact id, result
///   GET  /api/artifacts/{id}                          -> stored bytes
///   GET  /api/frames/{id}/summary                     -> per-metric statistics
///
/// Unknown ids answer 404, validation failures 422 and knowledge conflicts 409,
/// each with {"error": kind, "message": text}.
class Service {
public:
    explicit Service(ServiceConfig config);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds the listening socket and returns the port.
    int bind();
    /// Serves until stop(); call bind() first.
    void run();
    /// bind() + run() on a background thread; returns the port.
    int start();
    void stop();

    /// Blocks until every submitted job has finished.
    void wait_idle();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace rcaforge
