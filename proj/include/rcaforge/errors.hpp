#pragma once

#include <stdexcept>
#include <string>

namespace rcaforge {

/// Base of every error raised by the library. `kind()` carries the stable
/// error name that the CLI prints and the service returns in JSON payloads.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define RCAFORGE_DEFINE_ERROR(Name)                                              \
    class Name : public Error {                                                  \
    public:                                                                      \
        explicit Name(const std::string& message) : Error(#Name, message) {}     \
    }

// graph-core
RCAFORGE_DEFINE_ERROR(CycleError);
RCAFORGE_DEFINE_ERROR(MixedEdgeError);
RCAFORGE_DEFINE_ERROR(UnknownNode);
RCAFORGE_DEFINE_ERROR(KnowledgeConflict);

// stats-kernel
RCAFORGE_DEFINE_ERROR(SingularData);
RCAFORGE_DEFINE_ERROR(InsufficientData);

// simulate
RCAFORGE_DEFINE_ERROR(TooManyEdges);

// scoring / evaluation
RCAFORGE_DEFINE_ERROR(GraphRequired);
RCAFORGE_DEFINE_ERROR(NodeMismatch);

// io
RCAFORGE_DEFINE_ERROR(ParseError);
RCAFORGE_DEFINE_ERROR(NonMonotonicTimestamps);
RCAFORGE_DEFINE_ERROR(NonNumericCell);
RCAFORGE_DEFINE_ERROR(SchemaError);
RCAFORGE_DEFINE_ERROR(UnknownArtifact);
RCAFORGE_DEFINE_ERROR(UnknownJob);

// Violated operation precondition.
RCAFORGE_DEFINE_ERROR(InvalidArgument);

#undef RCAFORGE_DEFINE_ERROR

}  // namespace rcaforge
