// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace restfuzz {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MalformedDocument : public Error {
public:
    using Error::Error;
};

class UnsupportedVersion : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class GrammarFormatError : public Error {
public:
    using Error::Error;
};

class MissingDictionaryKind : public Error {
public:
    explicit MissingDictionaryKind(std::string kind)
        : Error("dictionary has no values for fuzzable kind '" + kind + "'"), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class UnsatisfiableConsumer : public Error {
public:
    UnsatisfiableConsumer(std::string operation, std::string resource)
        : Error("operation '" + operation + "' consumes '" + resource + "' which nothing produces"),
          operation_(std::move(operation)),
          resource_(std::move(resource)) {}
    const std::string& operation() const noexcept { return operation_; }
    const std::string& resource() const noexcept { return resource_; }

private:
    std::string operation_;
    std::string resource_;
};

class UnresolvableConsumer : public Error {
public:
    explicit UnresolvableConsumer(std::string resource)
        : Error("no dynamic object of type '" + resource + "' available in the pool"),
          resource_(std::move(resource)) {}
    const std::string& resource() const noexcept { return resource_; }

private:
    std::string resource_;
};

enum class TransportPhase { Connect, Write, Read, Frame };

inline const char* to_string(TransportPhase phase) {
    switch (phase) {
    case TransportPhase::Connect: return "connect";
    case TransportPhase::Write: return "write";
    case TransportPhase::Read: return "read";
    case TransportPhase::Frame: return "frame";
    }
    return "unknown";
}

class TransportFailure : public Error {
public:
    TransportFailure(TransportPhase phase, const std::string& what)
        : Error(std::string(to_string(phase)) + ": " + what), phase_(phase) {}
    TransportPhase phase() const noexcept { return phase_; }

private:
    TransportPhase phase_;
};

class TargetUnreachable : public Error {
public:
    using Error::Error;
};

class StorageFailure : public Error {
public:
    using Error::Error;
};

class BucketNotFound : public Error {
public:
    explicit BucketNotFound(const std::string& id) : Error("unknown bug bucket '" + id + "'") {}
};

}  // namespace restfuzz
