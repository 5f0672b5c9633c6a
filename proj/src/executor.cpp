// SPDX-License-Identifier: Apache-2.0
#include "restfuzz/executor.hpp"

#include <spdlog/spdlog.h>

#include "restfuzz/errors.hpp"

namespace restfuzz {

std::string_view to_string(ResponseClass cls) {
    switch (cls) {
    case ResponseClass::Valid: return "valid";
    case ResponseClass::Invalid: return "invalid";
    case ResponseClass::Bug: return "bug";
    }
    return "invalid";
}

StatusClassifier::StatusClassifier() : StatusClassifier(std::vector<std::string>{"5xx"}) {}

StatusClassifier::StatusClassifier(std::vector<std::string> patterns) : patterns_(std::move(patterns)) {
    for (auto& p : patterns_) {
        bool ok = p.size() == 3;
        for (char& c : p) {
            if (c == 'X') c = 'x';
            ok = ok && ((c >= '0' && c <= '9') || c == 'x');
        }
        if (!ok) {
            throw ConfigError("invalid error status pattern '" + p + "' (expected e.g. 5xx or 500)");
        }
    }
}

ResponseClass StatusClassifier::classify(int status) const {
    const std::string code = std::to_string(status);
    for (const auto& p : patterns_) {
        bool match = code.size() == 3;
        for (std::size_t i = 0; match && i < 3; ++i) {
            match = p[i] == 'x' || p[i] == code[i];
        }
        if (match) return ResponseClass::Bug;
    }
    return status >= 200 && status <= 299 ? ResponseClass::Valid : ResponseClass::Invalid;
}

void DynamicObjectPool::add(const ResourceType& type, nlohmann::json value) {
    entries_[type].push_back({std::move(value), false});
}

std::optional<nlohmann::json> DynamicObjectPool::take(const ResourceType& type) {
    auto it = entries_.find(type);
    if (it == entries_.end() || it->second.empty()) return std::nullopt;
    for (auto& entry : it->second) {
        if (!entry.consumed) {
            entry.consumed = true;
            return entry.value;
        }
    }
    return it->second.back().value;
}

std::size_t DynamicObjectPool::size() const {
    std::size_t n = 0;
    for (const auto& [_, v] : entries_) n += v.size();
    return n;
}

std::size_t DynamicObjectPool::size(const ResourceType& type) const {
    auto it = entries_.find(type);
    return it == entries_.end() ? 0 : it->second.size();
}

std::map<ResourceType, std::size_t> DynamicObjectPool::shape() const {
    std::map<ResourceType, std::size_t> out;
    for (const auto& [k, v] : entries_) out[k] = v.size();
    return out;
}

Extraction extract_objects(const HttpExchange& exchange, const std::vector<ProducerSpec>& producers) {
    Extraction out;
    if (producers.empty()) return out;
    nlohmann::json body;
    try {
        body = nlohmann::json::parse(exchange.body);
    } catch (const nlohmann::json::parse_error& e) {
        out.warnings.push_back(std::string("response body is not valid JSON: ") + e.what());
        return out;
    }
    for (const auto& producer : producers) {
        const nlohmann::json* node = &body;
        for (const auto& step : producer.extraction_path) {
            if (const auto* field = std::get_if<std::string>(&step)) {
                node = node->is_object() && node->contains(*field) ? &(*node)[*field] : nullptr;
            } else {
                auto index = std::get<std::size_t>(step);
                node = node->is_array() && index < node->size() ? &(*node)[index] : nullptr;
            }
            if (node == nullptr) break;
        }
        if (node == nullptr || node->is_null()) {
            out.warnings.push_back("response has no value at " + format_path(producer.extraction_path) +
                                   " for '" + producer.resource.name() + "'");
            continue;
        }
        out.values.emplace_back(producer.resource, *node);
    }
    return out;
}

std::string encode_object(const nlohmann::json& value, Encoding encoding) {
    std::string text = value.is_string() ? value.get<std::string>() : value.dump();
    switch (encoding) {
    case Encoding::Raw: return text;
    case Encoding::Url: return percent_encode(text);
    case Encoding::Json: return value.dump();
    }
    return text;
}

Executor::Executor(Transport& transport, StatusClassifier classifier, ExchangeObserver observer)
    : transport_(transport), classifier_(std::move(classifier)), observer_(std::move(observer)) {}

SequenceResult Executor::execute_sequence(const std::vector<RenderedRequest>& sequence) {
    std::vector<const RenderedRequest*> refs;
    refs.reserve(sequence.size());
    for (const auto& r : sequence) refs.push_back(&r);
    return execute_sequence(refs);
}

SequenceResult Executor::execute_sequence(std::span<const RenderedRequest* const> sequence) {
    pool_.clear();
    transport_.begin_sequence();
    SequenceResult result;
    const std::string host = transport_.host_header();

    for (std::size_t i = 0; i < sequence.size(); ++i) {
        const RenderedRequest& request = *sequence[i];
        std::string text;
        std::map<ResourceType, nlohmann::json> bound;
        for (const auto& slot : request.slots) {
            if (const auto* s = std::get_if<StaticSlot>(&slot)) {
                text += s->text;
            } else if (const auto* c = std::get_if<ConsumerSlot>(&slot)) {
                auto it = bound.find(c->resource);
                if (it == bound.end()) {
                    auto value = pool_.take(c->resource);
                    if (!value) throw UnresolvableConsumer(c->resource.name());
                    it = bound.emplace(c->resource, std::move(*value)).first;
                }
                text += encode_object(it->second, c->encoding);
            } else {
                throw Error("request '" + request.template_id + "' has an unrendered fuzzable slot");
            }
        }

        HttpExchange exchange = transport_.send(finalize_request(text, host));
        if (observer_) observer_(exchange, i, sequence.size());
        ResponseClass cls = classifier_.classify(exchange.status);

        if (cls == ResponseClass::Valid) {
            auto extraction = extract_objects(exchange, request.producers);
            for (const auto& w : extraction.warnings) {
                spdlog::warn("{}: {}", request.template_id, w);
            }
            for (auto& [type, value] : extraction.values) {
                pool_.add(type, std::move(value));
                ++result.objects_produced;
            }
        }
        result.steps.push_back({request.template_id, std::move(exchange), cls});
        result.final_class = cls;
        if (cls != ResponseClass::Valid && i + 1 < sequence.size()) {
            result.stopped_at = i;
            break;
        }
    }
    result.pool_shape = pool_.shape();
    return result;
}

}  // namespace restfuzz
