#pragma once

#include <stdexcept>
#include <string>

namespace fbguide {

struct DimensionError : std::invalid_argument {
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

struct ShapeError : std::invalid_argument {
    explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

struct SingularMatrixError : std::runtime_error {
    explicit SingularMatrixError(const std::string& what) : std::runtime_error(what) {}
};

struct ProtocolOrderError : std::logic_error {
    explicit ProtocolOrderError(const std::string& what) : std::logic_error(what) {}
};

struct EpisodeTerminatedError : std::runtime_error {
    explicit EpisodeTerminatedError(const std::string& what) : std::runtime_error(what) {}
};

struct GenerationFailureError : std::runtime_error {
    explicit GenerationFailureError(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidGainError : std::invalid_argument {
    explicit InvalidGainError(const std::string& what) : std::invalid_argument(what) {}
};

struct InvalidWeightError : std::invalid_argument {
    explicit InvalidWeightError(const std::string& what) : std::invalid_argument(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct EvaluationError : std::runtime_error {
    explicit EvaluationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fbguide
