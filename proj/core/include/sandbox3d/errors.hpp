#pragma once

#include <stdexcept>
#include <string>

namespace sandbox3d {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyMaskError : public Error {
public:
    EmptyMaskError() : Error("mask has no set pixels") {}
};

class EmptyProxyError : public Error {
public:
    explicit EmptyProxyError(int object_id)
        : Error("no proxy pixel with valid depth for object " + std::to_string(object_id)),
          object_id_(object_id) {}
    int object_id() const { return object_id_; }

private:
    int object_id_;
};

class ObjectNotFoundError : public Error {
public:
    explicit ObjectNotFoundError(const std::string& what) : Error("object not found: " + what) {}
};

class EmptySandboxError : public Error {
public:
    EmptySandboxError() : Error("no box survived voting and clustering") {}
};

class MissingViewError : public Error {
public:
    MissingViewError(int trajectory, int timestep)
        : Error("missing view (m=" + std::to_string(trajectory) + ", t=" + std::to_string(timestep) + ")"),
          trajectory_(trajectory), timestep_(timestep) {}
    int trajectory() const { return trajectory_; }
    int timestep() const { return timestep_; }

private:
    int trajectory_;
    int timestep_;
};

// `field` names the manifest entry or file that failed validation.
class BundleFormatError : public Error {
public:
    BundleFormatError(std::string field, const std::string& detail)
        : Error("bundle format error [" + field + "]: " + detail), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

// status == 0 means the request never produced an HTTP response.
class ProviderError : public Error {
public:
    ProviderError(int status, const std::string& detail)
        : Error("provider error (status " + std::to_string(status) + "): " + detail), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

class HintParseError : public Error {
public:
    explicit HintParseError(const std::string& detail) : Error("could not parse object hints: " + detail) {}
};

class AnswerParseError : public Error {
public:
    explicit AnswerParseError(const std::string& detail) : Error("could not parse answer: " + detail) {}
};

class GenerationError : public Error {
public:
    GenerationError(unsigned seed, int objects)
        : Error("world generation exhausted its rejection budget (seed=" + std::to_string(seed) +
                ", k=" + std::to_string(objects) + ")") {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& detail) : Error("config error: " + detail) {}
};

}  // namespace sandbox3d
