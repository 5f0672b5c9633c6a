// SPDX-License-Identifier: Apache-2.0
#pragma once

// Executable fuzzing grammar: request templates made of static, fuzzable and
// consumer slots, plus the producer annotations that feed the object pool.

#include <compare>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace restfuzz {

/// Type of a dynamic object, e.g. "posts/id". Always stored normalized:
/// lowercase, no leading/trailing '/', runs of '/' collapsed.
class ResourceType {
public:
    ResourceType() = default;
    explicit ResourceType(std::string_view name);

    const std::string& name() const noexcept { return name_; }

    friend bool operator==(const ResourceType&, const ResourceType&) = default;
    friend auto operator<=>(const ResourceType&, const ResourceType&) = default;

private:
    std::string name_;
};

using ResourceSet = std::set<ResourceType>;

enum class PrimitiveKind { String, Integer, Boolean };

std::string_view to_string(PrimitiveKind kind);
std::optional<PrimitiveKind> parse_primitive_kind(std::string_view text);

/// How a value is written into the request text at a slot's position.
enum class Encoding {
    Raw,   // verbatim
    Json,  // JSON literal (strings quoted and escaped)
    Url,   // percent-encoded path/query component
};

std::string_view to_string(Encoding encoding);
std::optional<Encoding> parse_encoding(std::string_view text);

struct StaticSlot {
    std::string text;
    friend bool operator==(const StaticSlot&, const StaticSlot&) = default;
};

struct FuzzableSlot {
    PrimitiveKind kind = PrimitiveKind::String;
    Encoding encoding = Encoding::Raw;
    friend bool operator==(const FuzzableSlot&, const FuzzableSlot&) = default;
};

struct ConsumerSlot {
    ResourceType resource;
    Encoding encoding = Encoding::Raw;
    friend bool operator==(const ConsumerSlot&, const ConsumerSlot&) = default;
};

using Slot = std::variant<StaticSlot, FuzzableSlot, ConsumerSlot>;

/// One step into a structured response body: an object field or an array index.
using PathStep = std::variant<std::string, std::size_t>;

struct ProducerSpec {
    ResourceType resource;
    std::vector<PathStep> extraction_path;
    friend bool operator==(const ProducerSpec&, const ProducerSpec&) = default;
};

std::string format_path(const std::vector<PathStep>& path);

struct RequestTemplate {
    std::string id;  // "<METHOD> <path template>"
    std::string method;
    std::vector<Slot> slots;
    std::vector<ProducerSpec> producers;
    std::size_t declaration_index = 0;

    friend bool operator==(const RequestTemplate&, const RequestTemplate&) = default;
};

ResourceSet consumes(const RequestTemplate& request);
ResourceSet produces(const RequestTemplate& request);

/// A template with every fuzzable slot concretized. Consumer slots stay
/// symbolic until execution time, so a rendering can be replayed against a
/// fresh target.
struct RenderedRequest {
    std::string template_id;
    std::size_t rendering_index = 0;
    std::vector<Slot> slots;  // StaticSlot and ConsumerSlot only
    std::vector<ProducerSpec> producers;

    friend bool operator==(const RenderedRequest&, const RenderedRequest&) = default;
};

/// Finite value sets per primitive kind. Values are raw (unencoded); the
/// slot's encoding is applied at render time.
class FuzzingDictionary {
public:
    FuzzingDictionary() = default;

    /// Defaults: string {"sampleString", ""}, integer {"0", "1"}, boolean {"true", "false"}.
    static FuzzingDictionary defaults();

    /// Throws ConfigError on an empty list or a duplicate value.
    void set(PrimitiveKind kind, std::vector<std::string> values);

    /// nullptr when the kind has no entry.
    const std::vector<std::string>* find(PrimitiveKind kind) const;

    const std::map<PrimitiveKind, std::vector<std::string>>& entries() const noexcept { return values_; }

    friend bool operator==(const FuzzingDictionary&, const FuzzingDictionary&) = default;

private:
    std::map<PrimitiveKind, std::vector<std::string>> values_;
};

inline constexpr std::size_t kDefaultCombinationCap = 1000;
inline constexpr std::size_t kNoCap = std::numeric_limits<std::size_t>::max();

/// Number of renderings render_combinations would return, without building them.
std::size_t count_combinations(const RequestTemplate& request, const FuzzingDictionary& dict,
                               std::size_t cap);

/// Full cross product of dictionary values over the fuzzable slots, first
/// slot most significant, truncated to `cap` entries.
std::vector<RenderedRequest> render_combinations(const RequestTemplate& request,
                                                 const FuzzingDictionary& dict, std::size_t cap);

std::string encode_value(std::string_view raw, PrimitiveKind kind, Encoding encoding);
std::string percent_encode(std::string_view text);

struct ExcludedOperation {
    std::string operation;
    std::string reason;
    friend bool operator==(const ExcludedOperation&, const ExcludedOperation&) = default;
};

struct GrammarProgram {
    std::vector<RequestTemplate> templates;
    ResourceSet resource_types;
    ResourceSet unsatisfiable;
    std::vector<ExcludedOperation> excluded;

    const RequestTemplate* find(std::string_view id) const;

    friend bool operator==(const GrammarProgram&, const GrammarProgram&) = default;
};

/// Recomputes resource_types from the templates.
void refresh_resource_types(GrammarProgram& program);

/// Returns a description of every violated program invariant (empty when valid).
std::vector<std::string> validate(const GrammarProgram& program);

/// Ablation: every consumer slot becomes a fuzzable string, producers are dropped.
GrammarProgram without_dependencies(const GrammarProgram& program);

}  // namespace restfuzz
