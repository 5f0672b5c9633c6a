// SPDX-License-Identifier: Apache-2.0
#include "restfuzz/grammar_io.hpp"

#include "restfuzz/document.hpp"
#include "restfuzz/errors.hpp"

namespace restfuzz {

namespace {

Document slot_to_json(const Slot& slot) {
    Document out = Document::object();
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, StaticSlot>) {
                out["static"] = s.text;
            } else if constexpr (std::is_same_v<T, FuzzableSlot>) {
                out["fuzzable"] = std::string(to_string(s.kind));
                out["encoding"] = std::string(to_string(s.encoding));
            } else {
                out["consumer"] = s.resource.name();
                out["encoding"] = std::string(to_string(s.encoding));
            }
        },
        slot);
    return out;
}

Encoding encoding_of(const Document& j) {
    if (!j.contains("encoding")) {
        return Encoding::Raw;
    }
    auto enc = parse_encoding(j.at("encoding").get<std::string>());
    if (!enc) {
        throw GrammarFormatError("unknown slot encoding '" + j.at("encoding").get<std::string>() + "'");
    }
    return *enc;
}

Slot slot_from_json(const Document& j) {
    if (!j.is_object()) {
        throw GrammarFormatError("slot must be an object");
    }
    if (j.contains("static")) {
        return StaticSlot{j.at("static").get<std::string>()};
    }
    if (j.contains("fuzzable")) {
        auto kind = parse_primitive_kind(j.at("fuzzable").get<std::string>());
        if (!kind) {
            throw GrammarFormatError("unknown fuzzable kind '" + j.at("fuzzable").get<std::string>() + "'");
        }
        return FuzzableSlot{*kind, encoding_of(j)};
    }
    if (j.contains("consumer")) {
        return ConsumerSlot{ResourceType(j.at("consumer").get<std::string>()), encoding_of(j)};
    }
    throw GrammarFormatError("slot needs one of 'static', 'fuzzable', 'consumer'");
}

Document path_to_json(const std::vector<PathStep>& path) {
    Document out = Document::array();
    for (const auto& step : path) {
        if (const auto* field = std::get_if<std::string>(&step)) {
            out.push_back(*field);
        } else {
            out.push_back(std::get<std::size_t>(step));
        }
    }
    return out;
}

std::vector<PathStep> path_from_json(const Document& j) {
    std::vector<PathStep> out;
    for (const auto& step : j) {
        if (step.is_string()) {
            out.emplace_back(step.get<std::string>());
        } else if (step.is_number_unsigned() || (step.is_number_integer() && step.get<long long>() >= 0)) {
            out.emplace_back(step.get<std::size_t>());
        } else {
            throw GrammarFormatError("extraction path steps must be field names or array indices");
        }
    }
    return out;
}

}  // namespace

std::string serialize_grammar(const GrammarProgram& program) {
    Document doc = Document::object();
    doc["format"] = std::string(kGrammarFormat);
    doc["templates"] = Document::array();
    for (const auto& t : program.templates) {
        Document jt = Document::object();
        jt["id"] = t.id;
        jt["method"] = t.method;
        jt["declaration_index"] = t.declaration_index;
        jt["slots"] = Document::array();
        for (const auto& slot : t.slots) {
            jt["slots"].push_back(slot_to_json(slot));
        }
        jt["producers"] = Document::array();
        for (const auto& p : t.producers) {
            jt["producers"].push_back({{"resource", p.resource.name()}, {"path", path_to_json(p.extraction_path)}});
        }
        doc["templates"].push_back(std::move(jt));
    }
    doc["unsatisfiable"] = Document::array();
    for (const auto& r : program.unsatisfiable) {
        doc["unsatisfiable"].push_back(r.name());
    }
    doc["excluded"] = Document::array();
    for (const auto& e : program.excluded) {
        doc["excluded"].push_back({{"operation", e.operation}, {"reason", e.reason}});
    }
    return doc.dump(2) + "\n";
}

GrammarProgram parse_grammar(std::string_view text) {
    Document doc;
    try {
        doc = Document::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw GrammarFormatError(std::string("grammar is not valid JSON: ") + e.what());
    }
    GrammarProgram program;
    try {
        if (doc.value("format", std::string{}) != kGrammarFormat) {
            throw GrammarFormatError("unsupported grammar format tag");
        }
        for (const auto& jt : doc.at("templates")) {
            RequestTemplate t;
            t.id = jt.at("id").get<std::string>();
            t.method = jt.at("method").get<std::string>();
            t.declaration_index = jt.value("declaration_index", program.templates.size());
            for (const auto& js : jt.at("slots")) {
                t.slots.push_back(slot_from_json(js));
            }
            for (const auto& jp : jt.value("producers", Document::array())) {
                t.producers.push_back(
                    {ResourceType(jp.at("resource").get<std::string>()), path_from_json(jp.at("path"))});
            }
            program.templates.push_back(std::move(t));
        }
        for (const auto& r : doc.value("unsatisfiable", Document::array())) {
            program.unsatisfiable.insert(ResourceType(r.get<std::string>()));
        }
        for (const auto& e : doc.value("excluded", Document::array())) {
            program.excluded.push_back({e.at("operation").get<std::string>(), e.at("reason").get<std::string>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw GrammarFormatError(std::string("malformed grammar: ") + e.what());
    } catch (const ConfigError& e) {
        throw GrammarFormatError(std::string("malformed grammar: ") + e.what());
    }
    refresh_resource_types(program);
    if (auto problems = validate(program); !problems.empty()) {
        throw GrammarFormatError("invalid grammar: " + problems.front());
    }
    return program;
}

GrammarProgram load_grammar(const std::filesystem::path& path) {
    return parse_grammar(read_file(path));
}

std::string serialize_dictionary(const FuzzingDictionary& dict) {
    Document doc = Document::object();
    for (const auto& [kind, values] : dict.entries()) {
        doc[std::string(to_string(kind))] = values;
    }
    return doc.dump(2) + "\n";
}

FuzzingDictionary parse_dictionary(std::string_view text) {
    Document doc = parse_document(text);
    if (!doc.is_object()) {
        throw ConfigError("dictionary must be a mapping from primitive kind to a value list");
    }
    FuzzingDictionary dict;
    for (const auto& [key, values] : doc.items()) {
        auto kind = parse_primitive_kind(key);
        if (!kind) {
            throw ConfigError("unknown primitive kind '" + key + "' in dictionary");
        }
        if (!values.is_array()) {
            throw ConfigError("dictionary entry '" + key + "' must be a list");
        }
        std::vector<std::string> list;
        for (const auto& v : values) {
            list.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        }
        dict.set(*kind, std::move(list));
    }
    return dict;
}

FuzzingDictionary load_dictionary(const std::filesystem::path& path) {
    return parse_dictionary(read_file(path));
}

std::string serialize_rendered_sequence(const std::vector<RenderedRequest>& sequence) {
    Document doc = Document::array();
    for (const auto& r : sequence) {
        Document jr = Document::object();
        jr["template_id"] = r.template_id;
        jr["rendering_index"] = r.rendering_index;
        jr["slots"] = Document::array();
        for (const auto& slot : r.slots) jr["slots"].push_back(slot_to_json(slot));
        jr["producers"] = Document::array();
        for (const auto& p : r.producers) {
            jr["producers"].push_back({{"resource", p.resource.name()}, {"path", path_to_json(p.extraction_path)}});
        }
        doc.push_back(std::move(jr));
    }
    return doc.dump(2) + "\n";
}

std::vector<RenderedRequest> parse_rendered_sequence(std::string_view text) {
    std::vector<RenderedRequest> out;
    try {
        for (const auto& jr : Document::parse(text)) {
            RenderedRequest r;
            r.template_id = jr.at("template_id").get<std::string>();
            r.rendering_index = jr.at("rendering_index").get<std::size_t>();
            for (const auto& js : jr.at("slots")) {
                Slot slot = slot_from_json(js);
                if (std::holds_alternative<FuzzableSlot>(slot)) {
                    throw GrammarFormatError("rendered request contains a fuzzable slot");
                }
                r.slots.push_back(std::move(slot));
            }
            for (const auto& jp : jr.at("producers")) {
                r.producers.push_back(
                    {ResourceType(jp.at("resource").get<std::string>()), path_from_json(jp.at("path"))});
            }
            out.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw GrammarFormatError(std::string("malformed rendered sequence: ") + e.what());
    }
    return out;
}

}  // namespace restfuzz
