// SPDX-License-Identifier: Apache-2.0
#include "restfuzz/grammar.hpp"

#include <algorithm>
#include <cctype>

#include <nlohmann/json.hpp>

#include "restfuzz/errors.hpp"

namespace restfuzz {

ResourceType::ResourceType(std::string_view name) {
    name_.reserve(name.size());
    for (char c : name) {
        if (c == '/' && (name_.empty() || name_.back() == '/')) {
            continue;
        }
        name_.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    while (!name_.empty() && name_.back() == '/') {
        name_.pop_back();
    }
    if (name_.empty()) {
        throw ConfigError("resource type name must not be empty");
    }
}

std::string_view to_string(PrimitiveKind kind) {
    switch (kind) {
    case PrimitiveKind::String: return "string";
    case PrimitiveKind::Integer: return "integer";
    case PrimitiveKind::Boolean: return "boolean";
    }
    return "string";
}

std::optional<PrimitiveKind> parse_primitive_kind(std::string_view text) {
    if (text == "string") return PrimitiveKind::String;
    if (text == "integer") return PrimitiveKind::Integer;
    if (text == "boolean") return PrimitiveKind::Boolean;
    return std::nullopt;
}

std::string_view to_string(Encoding encoding) {
    switch (encoding) {
    case Encoding::Raw: return "raw";
    case Encoding::Json: return "json";
    case Encoding::Url: return "url";
    }
    return "raw";
}

std::optional<Encoding> parse_encoding(std::string_view text) {
    if (text == "raw") return Encoding::Raw;
    if (text == "json") return Encoding::Json;
    if (text == "url") return Encoding::Url;
    return std::nullopt;
}

std::string format_path(const std::vector<PathStep>& path) {
    std::string out;
    for (const auto& step : path) {
        if (const auto* field = std::get_if<std::string>(&step)) {
            out += '.';
            out += *field;
        } else {
            out += '[' + std::to_string(std::get<std::size_t>(step)) + ']';
        }
    }
    return out;
}

ResourceSet consumes(const RequestTemplate& request) {
    ResourceSet out;
    for (const auto& slot : request.slots) {
        if (const auto* consumer = std::get_if<ConsumerSlot>(&slot)) {
            out.insert(consumer->resource);
        }
    }
    return out;
}

ResourceSet produces(const RequestTemplate& request) {
    ResourceSet out;
    for (const auto& producer : request.producers) {
        out.insert(producer.resource);
    }
    return out;
}

FuzzingDictionary FuzzingDictionary::defaults() {
    FuzzingDictionary dict;
    dict.set(PrimitiveKind::String, {"sampleString", ""});
    dict.set(PrimitiveKind::Integer, {"0", "1"});
    dict.set(PrimitiveKind::Boolean, {"true", "false"});
    return dict;
}

void FuzzingDictionary::set(PrimitiveKind kind, std::vector<std::string> values) {
    if (values.empty()) {
        throw ConfigError("dictionary entry for '" + std::string(to_string(kind)) + "' is empty");
    }
    std::set<std::string> seen;
    for (const auto& v : values) {
        if (!seen.insert(v).second) {
            throw ConfigError("duplicate dictionary value '" + v + "' for kind '" +
                              std::string(to_string(kind)) + "'");
        }
    }
    values_[kind] = std::move(values);
}

const std::vector<std::string>* FuzzingDictionary::find(PrimitiveKind kind) const {
    auto it = values_.find(kind);
    return it == values_.end() ? nullptr : &it->second;
}

std::string percent_encode(std::string_view text) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(text.size());
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(ch);
        } else {
            out.push_back('%');
            out.push_back(kHex[c >> 4]);
            out.push_back(kHex[c & 0xF]);
        }
    }
    return out;
}

std::string encode_value(std::string_view raw, PrimitiveKind kind, Encoding encoding) {
    switch (encoding) {
    case Encoding::Raw: return std::string(raw);
    case Encoding::Url: return percent_encode(raw);
    case Encoding::Json:
        if (kind == PrimitiveKind::String) {
            return nlohmann::json(std::string(raw)).dump();
        }
        return std::string(raw);
    }
    return std::string(raw);
}

namespace {

std::vector<const std::vector<std::string>*> fuzzable_value_lists(const RequestTemplate& request,
                                                                  const FuzzingDictionary& dict) {
    std::vector<const std::vector<std::string>*> lists;
    for (const auto& slot : request.slots) {
        if (const auto* fuzz = std::get_if<FuzzableSlot>(&slot)) {
            const auto* values = dict.find(fuzz->kind);
            if (values == nullptr || values->empty()) {
                throw MissingDictionaryKind(std::string(to_string(fuzz->kind)));
            }
            lists.push_back(values);
        }
    }
    return lists;
}

void append_static(std::vector<Slot>& slots, std::string_view text) {
    if (!slots.empty()) {
        if (auto* last = std::get_if<StaticSlot>(&slots.back())) {
            last->text += text;
            return;
        }
    }
    slots.emplace_back(StaticSlot{std::string(text)});
}

}  // namespace

std::size_t count_combinations(const RequestTemplate& request, const FuzzingDictionary& dict,
                               std::size_t cap) {
    std::size_t total = 1;
    for (const auto* values : fuzzable_value_lists(request, dict)) {
        if (total > cap / values->size()) {
            return cap;
        }
        total *= values->size();
    }
    return std::min(total, cap);
}

std::vector<RenderedRequest> render_combinations(const RequestTemplate& request,
                                                 const FuzzingDictionary& dict, std::size_t cap) {
    if (cap == 0) {
        throw ConfigError("combination cap must be positive");
    }
    const auto lists = fuzzable_value_lists(request, dict);
    const std::size_t count = count_combinations(request, dict, cap);

    std::vector<RenderedRequest> out;
    out.reserve(count);
    // Odometer over the fuzzable slots; the last slot turns fastest.
    std::vector<std::size_t> digits(lists.size(), 0);
    for (std::size_t index = 0; index < count; ++index) {
        RenderedRequest rendered{request.id, index, {}, request.producers};
        std::size_t fuzz_index = 0;
        for (const auto& slot : request.slots) {
            if (const auto* s = std::get_if<StaticSlot>(&slot)) {
                append_static(rendered.slots, s->text);
            } else if (const auto* f = std::get_if<FuzzableSlot>(&slot)) {
                const auto& value = (*lists[fuzz_index])[digits[fuzz_index]];
                append_static(rendered.slots, encode_value(value, f->kind, f->encoding));
                ++fuzz_index;
            } else {
                rendered.slots.push_back(slot);
            }
        }
        out.push_back(std::move(rendered));

        for (std::size_t d = digits.size(); d-- > 0;) {
            if (++digits[d] < lists[d]->size()) {
                break;
            }
            digits[d] = 0;
        }
    }
    return out;
}

const RequestTemplate* GrammarProgram::find(std::string_view id) const {
    for (const auto& t : templates) {
        if (t.id == id) {
            return &t;
        }
    }
    return nullptr;
}

void refresh_resource_types(GrammarProgram& program) {
    program.resource_types.clear();
    for (const auto& t : program.templates) {
        for (const auto& r : consumes(t)) program.resource_types.insert(r);
        for (const auto& r : produces(t)) program.resource_types.insert(r);
    }
}

std::vector<std::string> validate(const GrammarProgram& program) {
    std::vector<std::string> problems;
    ResourceSet produced;
    std::set<std::string> ids;
    for (const auto& t : program.templates) {
        if (!ids.insert(t.id).second) {
            problems.push_back("duplicate template id '" + t.id + "'");
        }
        for (const auto& p : t.producers) {
            if (p.extraction_path.empty()) {
                problems.push_back("producer '" + p.resource.name() + "' of '" + t.id +
                                   "' has an empty extraction path");
            }
        }
        auto prod = produces(t);
        produced.insert(prod.begin(), prod.end());
    }
    for (const auto& t : program.templates) {
        for (const auto& r : consumes(t)) {
            if (!produced.contains(r) && !program.unsatisfiable.contains(r)) {
                problems.push_back("'" + t.id + "' consumes '" + r.name() +
                                   "' which no template produces");
            }
            if (!program.resource_types.contains(r)) {
                problems.push_back("resource '" + r.name() + "' missing from resource_types");
            }
        }
        for (const auto& r : produces(t)) {
            if (!program.resource_types.contains(r)) {
                problems.push_back("resource '" + r.name() + "' missing from resource_types");
            }
        }
    }
    return problems;
}

GrammarProgram without_dependencies(const GrammarProgram& program) {
    GrammarProgram out = program;
    for (auto& t : out.templates) {
        for (auto& slot : t.slots) {
            if (const auto* c = std::get_if<ConsumerSlot>(&slot)) {
                slot = FuzzableSlot{PrimitiveKind::String, c->encoding};
            }
        }
        t.producers.clear();
    }
    out.unsatisfiable.clear();
    refresh_resource_types(out);
    return out;
}

}  // namespace restfuzz
