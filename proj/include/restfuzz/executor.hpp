// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "restfuzz/grammar.hpp"
#include "restfuzz/http.hpp"

namespace restfuzz {

enum class ResponseClass { Valid, Invalid, Bug };

std::string_view to_string(ResponseClass cls);

/// Maps a status code to Valid (2xx), Bug (matches an error pattern) or
/// Invalid (everything else). Patterns are three characters of digits or
/// 'x' wildcards, e.g. "5xx" or "404". Bug takes precedence over Valid.
class StatusClassifier {
public:
    StatusClassifier();
    /// Throws ConfigError on a malformed pattern.
    explicit StatusClassifier(std::vector<std::string> patterns);

    ResponseClass classify(int status) const;
    const std::vector<std::string>& patterns() const noexcept { return patterns_; }

private:
    std::vector<std::string> patterns_;
};

/// Memoized producer outputs for one sequence execution.
class DynamicObjectPool {
public:
    void add(const ResourceType& type, nlohmann::json value);

    /// Earliest value not yet handed out; once every value of the type has
    /// been handed out, the most recently produced one is reused.
    std::optional<nlohmann::json> take(const ResourceType& type);

    std::size_t size() const;
    std::size_t size(const ResourceType& type) const;
    /// Type -> number of values, for structural comparisons.
    std::map<ResourceType, std::size_t> shape() const;
    void clear() { entries_.clear(); }

private:
    struct Entry {
        nlohmann::json value;
        bool consumed = false;
    };
    std::map<ResourceType, std::vector<Entry>> entries_;
};

struct Extraction {
    std::vector<std::pair<ResourceType, nlohmann::json>> values;
    std::vector<std::string> warnings;
};

/// Walks each producer's path through the JSON response body. Missing paths
/// and unparsable bodies produce warnings, never exceptions.
Extraction extract_objects(const HttpExchange& exchange, const std::vector<ProducerSpec>& producers);

std::string encode_object(const nlohmann::json& value, Encoding encoding);

struct StepRecord {
    std::string template_id;
    HttpExchange exchange;
    ResponseClass cls = ResponseClass::Valid;
};

struct SequenceResult {
    std::vector<StepRecord> steps;  // executed steps only
    ResponseClass final_class = ResponseClass::Valid;
    /// Index of the non-Valid prefix step that stopped execution early.
    std::optional<std::size_t> stopped_at;
    std::size_t objects_produced = 0;
    std::map<ResourceType, std::size_t> pool_shape;

    bool complete(std::size_t length) const { return steps.size() == length; }
};

/// Called for every exchange as soon as it completes: (exchange, step index, sequence length).
using ExchangeObserver = std::function<void(const HttpExchange&, std::size_t, std::size_t)>;

class Executor {
public:
    Executor(Transport& transport, StatusClassifier classifier, ExchangeObserver observer = {});

    /// Throws UnresolvableConsumer or TransportFailure.
    SequenceResult execute_sequence(std::span<const RenderedRequest* const> sequence);
    SequenceResult execute_sequence(const std::vector<RenderedRequest>& sequence);

    const StatusClassifier& classifier() const noexcept { return classifier_; }
    Transport& transport() noexcept { return transport_; }
    void set_observer(ExchangeObserver observer) { observer_ = std::move(observer); }

private:
    Transport& transport_;
    StatusClassifier classifier_;
    ExchangeObserver observer_;
    DynamicObjectPool pool_;
};

}  // namespace restfuzz
