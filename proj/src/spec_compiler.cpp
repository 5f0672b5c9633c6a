// SPDX-License-Identifier: Apache-2.0
#include "restfuzz/spec_compiler.hpp"

#include <algorithm>
#include <cctype>

#include <spdlog/spdlog.h>

#include "restfuzz/document.hpp"
#include "restfuzz/errors.hpp"

namespace restfuzz {

std::string_view to_string(ParamLocation location) {
    switch (location) {
    case ParamLocation::Path: return "path";
    case ParamLocation::Query: return "query";
    case ParamLocation::Body: return "body";
    case ParamLocation::Header: return "header";
    case ParamLocation::FormData: return "formData";
    }
    return "query";
}

const Parameter* Operation::body() const {
    for (const auto& p : parameters) {
        if (p.location == ParamLocation::Body) {
            return &p;
        }
    }
    return nullptr;
}

namespace {

constexpr int kMaxRefDepth = 16;
constexpr std::string_view kMethods[] = {"get", "put", "post", "delete", "patch", "head", "options"};

std::string lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string upper(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

bool is_method(std::string_view key) {
    return std::find(std::begin(kMethods), std::end(kMethods), key) != std::end(kMethods);
}

// ---------------------------------------------------------------- parsing

class SpecParser {
public:
    explicit SpecParser(const Document& doc) : doc_(doc) {}

    SpecModel parse() {
        check_version();
        SpecModel model;
        if (doc_.contains("basePath")) {
            if (!doc_["basePath"].is_string()) {
                throw MalformedDocument("basePath must be a string");
            }
            model.base_path = doc_["basePath"].get<std::string>();
            while (!model.base_path.empty() && model.base_path.back() == '/') {
                model.base_path.pop_back();
            }
        }
        if (doc_.contains("definitions") && doc_["definitions"].is_object()) {
            for (const auto& [name, _] : doc_["definitions"].items()) {
                model.definitions.push_back(name);
            }
        }
        if (!doc_.contains("paths") || doc_["paths"].is_null()) {
            model.warnings = std::move(warnings_);
            return model;
        }
        if (!doc_["paths"].is_object()) {
            throw MalformedDocument("'paths' must be a mapping");
        }
        for (const auto& [path, item] : doc_["paths"].items()) {
            if (!item.is_object()) {
                throw MalformedDocument("path item '" + path + "' must be a mapping");
            }
            std::vector<Parameter> shared;
            if (item.contains("parameters")) {
                shared = parse_parameters(item["parameters"], path);
            }
            for (const auto& [key, op] : item.items()) {
                if (key == "parameters" || key.starts_with("x-")) {
                    continue;
                }
                if (!is_method(key)) {
                    warn("unsupported key '" + key + "' under path '" + path + "' ignored");
                    continue;
                }
                model.operations.push_back(
                    parse_operation(model.base_path, path, key, op, shared, model.operations.size()));
            }
        }
        model.warnings = std::move(warnings_);
        return model;
    }

private:
    void warn(std::string message) {
        spdlog::debug("spec: {}", message);
        warnings_.push_back(std::move(message));
    }

    void check_version() {
        if (!doc_.is_object()) {
            throw MalformedDocument("document root must be a mapping");
        }
        if (doc_.contains("openapi")) {
            throw UnsupportedVersion("OpenAPI 3.x documents are not supported (need swagger: '2.0')");
        }
        if (!doc_.contains("swagger")) {
            throw UnsupportedVersion("missing 'swagger' version field");
        }
        const auto& v = doc_["swagger"];
        bool ok = (v.is_string() && v.get<std::string>() == "2.0") || (v.is_number() && v.get<double>() == 2.0);
        if (!ok) {
            throw UnsupportedVersion("unsupported swagger version " + v.dump());
        }
    }

    const Document* resolve_ref(const Document& node, std::string& name) {
        std::string ref;
        if (node.contains("$ref") && node["$ref"].is_string()) {
            ref = node["$ref"].get<std::string>();
        } else if (node.contains("ref") && node["ref"].is_string()) {
            ref = node["ref"].get<std::string>();
        } else {
            return nullptr;
        }
        std::string_view view = ref;
        if (view.starts_with("#")) view.remove_prefix(1);
        for (std::string_view section : {"/definitions/", "/parameters/", "/responses/"}) {
            if (view.starts_with(section)) {
                std::string key(section.substr(1, section.size() - 2));
                name = std::string(view.substr(section.size()));
                if (doc_.contains(key) && doc_[key].contains(name)) {
                    return &doc_[key][name];
                }
                throw MalformedDocument("unresolved reference '" + ref + "'");
            }
        }
        throw MalformedDocument("unsupported reference '" + ref + "' (only local #/definitions refs)");
    }

    SchemaNode parse_schema(const Document& node, int depth) {
        SchemaNode out;
        if (!node.is_object()) {
            warn("schema is not a mapping");
            return out;
        }
        std::string ref_name;
        if (const Document* target = resolve_ref(node, ref_name)) {
            if (depth >= kMaxRefDepth) {
                warn("reference '" + ref_name + "' nested too deeply (recursive schema?)");
                return out;
            }
            return parse_schema(*target, depth + 1);
        }
        std::string type = node.contains("type") && node["type"].is_string() ? node["type"].get<std::string>() : "";
        out.declared_type = type;
        if (type == "object" || (type.empty() && node.contains("properties"))) {
            out.kind = SchemaKind::Object;
            std::set<std::string> required;
            if (node.contains("required") && node["required"].is_array()) {
                for (const auto& r : node["required"]) {
                    if (r.is_string()) required.insert(r.get<std::string>());
                }
            }
            if (node.contains("properties") && node["properties"].is_object()) {
                for (const auto& [name, prop] : node["properties"].items()) {
                    out.properties.push_back({name, required.contains(name), parse_schema(prop, depth + 1)});
                }
            }
        } else if (type == "array") {
            out.kind = SchemaKind::Array;
            if (node.contains("items")) {
                out.items.push_back(parse_schema(node["items"], depth + 1));
            } else {
                warn("array schema without 'items'");
                out.items.emplace_back();
            }
        } else if (type == "string") {
            out.kind = SchemaKind::String;
        } else if (type == "integer") {
            out.kind = SchemaKind::Integer;
        } else if (type == "number") {
            warn("'number' schema rendered with the integer dictionary");
            out.kind = SchemaKind::Integer;
        } else if (type == "boolean") {
            out.kind = SchemaKind::Boolean;
        } else {
            warn("unsupported schema type '" + (type.empty() ? std::string("<none>") : type) + "'");
        }
        return out;
    }

    std::vector<Parameter> parse_parameters(const Document& list, const std::string& path) {
        std::vector<Parameter> out;
        if (!list.is_array()) {
            throw MalformedDocument("parameters of '" + path + "' must be a list");
        }
        for (const auto& raw : list) {
            const Document* node = &raw;
            std::string ref_name;
            if (const Document* target = resolve_ref(raw, ref_name)) {
                node = target;
            }
            if (!node->is_object() || !node->contains("name") || !node->contains("in")) {
                throw MalformedDocument("parameter of '" + path + "' needs 'name' and 'in'");
            }
            Parameter p;
            p.name = (*node)["name"].get<std::string>();
            const std::string in = (*node)["in"].get<std::string>();
            if (in == "path") p.location = ParamLocation::Path;
            else if (in == "query") p.location = ParamLocation::Query;
            else if (in == "body") p.location = ParamLocation::Body;
            else if (in == "header") p.location = ParamLocation::Header;
            else if (in == "formData") p.location = ParamLocation::FormData;
            else throw MalformedDocument("parameter '" + p.name + "' has unknown location '" + in + "'");
            p.required = node->value("required", false) || p.location == ParamLocation::Path;
            if (p.location == ParamLocation::Body) {
                if (!node->contains("schema")) {
                    throw MalformedDocument("body parameter '" + p.name + "' has no schema");
                }
                p.schema = parse_schema((*node)["schema"], 0);
            } else {
                p.schema = parse_schema(*node, 0);
            }
            if (p.location == ParamLocation::Header || p.location == ParamLocation::FormData) {
                warn("parameter '" + p.name + "' in " + in + " is not supported and is skipped");
                continue;
            }
            out.push_back(std::move(p));
        }
        return out;
    }

    Operation parse_operation(const std::string& base_path, const std::string& path, const std::string& method,
                              const Document& node, const std::vector<Parameter>& shared, std::size_t index) {
        if (!node.is_object()) {
            throw MalformedDocument("operation '" + method + " " + path + "' must be a mapping");
        }
        Operation op;
        op.method = upper(method);
        op.path = base_path + path;
        op.id = op.method + " " + op.path;
        op.declaration_index = index;

        op.parameters = shared;
        if (node.contains("parameters")) {
            for (auto& p : parse_parameters(node["parameters"], path)) {
                auto same = std::find_if(op.parameters.begin(), op.parameters.end(), [&](const Parameter& q) {
                    return q.name == p.name && q.location == p.location;
                });
                if (same != op.parameters.end()) {
                    *same = std::move(p);
                } else {
                    op.parameters.push_back(std::move(p));
                }
            }
        }
        // Every {param} in the template must be declared.
        std::size_t pos = 0;
        while ((pos = path.find('{', pos)) != std::string::npos) {
            auto end = path.find('}', pos);
            if (end == std::string::npos) {
                throw MalformedDocument("unterminated path parameter in '" + path + "'");
            }
            std::string name = path.substr(pos + 1, end - pos - 1);
            bool declared = std::any_of(op.parameters.begin(), op.parameters.end(), [&](const Parameter& p) {
                return p.location == ParamLocation::Path && p.name == name;
            });
            if (!declared) {
                warn("path parameter '" + name + "' of '" + op.id + "' is undeclared; assuming string");
                Parameter p;
                p.name = name;
                p.location = ParamLocation::Path;
                p.required = true;
                p.schema.kind = SchemaKind::String;
                op.parameters.push_back(std::move(p));
            }
            pos = end + 1;
        }

        if (node.contains("responses") && node["responses"].is_object()) {
            for (const auto& [code, response] : node["responses"].items()) {
                if (code.size() == 3 && code[0] == '2' && response.is_object()) {
                    const Document* resolved = &response;
                    std::string ref_name;
                    if (const Document* target = resolve_ref(response, ref_name)) resolved = target;
                    if (resolved->contains("schema")) {
                        op.success_response = parse_schema((*resolved)["schema"], 0);
                    }
                    break;
                }
            }
        }
        return op;
    }

    const Document& doc_;
    std::vector<std::string> warnings_;
};

// -------------------------------------------------------------- inference

struct PathSegment {
    std::string text;
    bool is_param = false;
};

std::vector<PathSegment> split_path(std::string_view path) {
    std::vector<PathSegment> out;
    std::size_t i = 0;
    while (i <= path.size()) {
        auto next = path.find('/', i);
        if (next == std::string_view::npos) next = path.size();
        auto seg = path.substr(i, next - i);
        if (!seg.empty()) {
            if (seg.front() == '{' && seg.back() == '}') {
                out.push_back({std::string(seg.substr(1, seg.size() - 2)), true});
            } else {
                out.push_back({std::string(seg), false});
            }
        }
        i = next + 1;
    }
    return out;
}

std::string stem_of(std::string_view path) {
    auto segments = split_path(path);
    for (auto it = segments.rbegin(); it != segments.rend(); ++it) {
        if (!it->is_param) return lower(it->text);
    }
    return "root";
}

std::string stem_before_param(std::string_view path, std::string_view param) {
    std::string stem = "root";
    for (const auto& seg : split_path(path)) {
        if (seg.is_param && seg.text == param) return stem;
        if (!seg.is_param) stem = lower(seg.text);
    }
    return stem;
}

bool has_path_params(const Operation& op) {
    return std::any_of(op.parameters.begin(), op.parameters.end(),
                       [](const Parameter& p) { return p.location == ParamLocation::Path; });
}

std::vector<const SchemaProperty*> required_body_fields(const Operation& op) {
    std::vector<const SchemaProperty*> out;
    const Parameter* body = op.body();
    if (body && body->schema.kind == SchemaKind::Object) {
        for (const auto& prop : body->schema.properties) {
            if (prop.required) out.push_back(&prop);
        }
    }
    return out;
}

// Names the operation actually sends: optional body fields count only when rendered.
std::set<std::string> input_names(const Operation& op, const AnnotationOverrides& overrides) {
    std::set<std::string> names;
    for (const auto& p : op.parameters) {
        if (p.location == ParamLocation::Body) {
            if (p.schema.kind == SchemaKind::Object) {
                for (const auto& prop : p.schema.properties) {
                    if (prop.required || overrides.include_optional.contains(prop.name)) {
                        names.insert(lower(prop.name));
                    }
                }
            }
        } else {
            names.insert(lower(p.name));
        }
    }
    return names;
}

struct ResponseField {
    std::string name;  // lower case, for matching
    std::vector<PathStep> path;
};

std::vector<ResponseField> response_fields(const Operation& op) {
    std::vector<ResponseField> out;
    if (!op.success_response || op.success_response->kind != SchemaKind::Object) {
        return out;
    }
    for (const auto& prop : op.success_response->properties) {
        out.push_back({lower(prop.name), {prop.name}});
    }
    for (const auto& prop : op.success_response->properties) {
        if (prop.schema.kind != SchemaKind::Object) continue;
        for (const auto& inner : prop.schema.properties) {
            out.push_back({lower(inner.name), {prop.name, inner.name}});
        }
    }
    return out;
}

bool is_suppressed_parameter(const AnnotationOverrides& ov, const std::string& op, const std::string& param) {
    return std::any_of(ov.suppressions.begin(), ov.suppressions.end(), [&](const Suppression& s) {
        return s.operation == op && s.parameter && *s.parameter == param;
    });
}

bool is_suppressed_producer(const AnnotationOverrides& ov, const std::string& op, const ResourceType& r) {
    return std::any_of(ov.suppressions.begin(), ov.suppressions.end(), [&](const Suppression& s) {
        return s.operation == op && s.producer && *s.producer == r;
    });
}

const ConsumerOverride* consumer_override(const AnnotationOverrides& ov, const std::string& op,
                                          const std::string& param) {
    for (const auto& c : ov.consumers) {
        if (c.operation == op && c.parameter == param) return &c;
    }
    return nullptr;
}

std::vector<ProducerSpec> infer_producers(const SpecModel& model, const Operation& op,
                                          const std::set<std::string>& excluded,
                                          const AnnotationOverrides& overrides) {
    const std::string stem = stem_of(op.path);
    std::set<std::string> wanted;      // names other operations take as input under this stem
    std::set<std::string> client_data; // names supplied by collection-level creators
    for (const auto& other : model.operations) {
        if (excluded.contains(other.id)) continue;
        bool collection_level = !has_path_params(other);
        for (const auto* field : required_body_fields(other)) {
            if (stem_of(other.path) != stem) continue;
            if (other.id != op.id) wanted.insert(lower(field->name));
            if (collection_level) client_data.insert(lower(field->name));
        }
        if (other.id == op.id) continue;
        for (const auto& p : other.parameters) {
            if (p.location == ParamLocation::Path && stem_before_param(other.path, p.name) == stem) {
                wanted.insert(lower(p.name));
            }
        }
    }
    const auto own_inputs = input_names(op, overrides);

    std::vector<ProducerSpec> out;
    ResourceSet seen;
    for (const auto& field : response_fields(op)) {
        if (!wanted.contains(field.name) || own_inputs.contains(field.name) || client_data.contains(field.name)) {
            continue;
        }
        ResourceType resource(stem + "/" + field.name);
        if (is_suppressed_producer(overrides, op.id, resource) || !seen.insert(resource).second) continue;
        out.push_back({resource, field.path});
    }
    for (const auto& po : overrides.producers) {
        if (po.operation != op.id) continue;
        auto same = std::find_if(out.begin(), out.end(),
                                 [&](const ProducerSpec& p) { return p.extraction_path == po.extraction_path; });
        if (same != out.end()) {
            same->resource = po.resource;
        } else {
            out.push_back({po.resource, po.extraction_path});
        }
    }
    return out;
}

}  // namespace

SpecModel parse_spec(std::string_view document) {
    Document doc = parse_document(document);
    return SpecParser(doc).parse();
}

AnnotationOverrides parse_overrides(std::string_view document) {
    Document doc = parse_document(document);
    AnnotationOverrides out;
    if (doc.is_null()) return out;
    if (!doc.is_object()) throw ConfigError("overrides document must be a mapping");
    try {
        for (const auto& p : doc.value("producers", Document::array())) {
            std::vector<PathStep> path;
            for (const auto& step : p.at("path")) {
                if (step.is_string()) path.emplace_back(step.get<std::string>());
                else path.emplace_back(step.get<std::size_t>());
            }
            if (path.empty()) throw ConfigError("producer override needs a non-empty path");
            out.producers.push_back({p.at("operation").get<std::string>(), std::move(path),
                                     ResourceType(p.at("resource").get<std::string>())});
        }
        for (const auto& c : doc.value("consumers", Document::array())) {
            out.consumers.push_back({c.at("operation").get<std::string>(), c.at("parameter").get<std::string>(),
                                     ResourceType(c.at("resource").get<std::string>())});
        }
        for (const auto& s : doc.value("suppress", Document::array())) {
            Suppression sup{s.at("operation").get<std::string>(), std::nullopt, std::nullopt};
            if (s.contains("parameter")) sup.parameter = s["parameter"].get<std::string>();
            if (s.contains("producer")) sup.producer = ResourceType(s["producer"].get<std::string>());
            if (!sup.parameter && !sup.producer) throw ConfigError("suppression needs 'parameter' or 'producer'");
            out.suppressions.push_back(std::move(sup));
        }
        const Document external = doc.value("external", Document::object());
        for (const auto& [name, value] : external.items()) {
            out.external[ResourceType(name)] = value.is_string() ? value.get<std::string>() : value.dump();
        }
        for (const auto& name : doc.value("include_optional", Document::array())) {
            out.include_optional.insert(lower(name.get<std::string>()));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed overrides: ") + e.what());
    }
    return out;
}

DependencyMap infer_dependencies(const SpecModel& model, const AnnotationOverrides& overrides) {
    DependencyMap result;
    std::set<std::string> excluded;
    std::map<std::string, OperationDependencies> deps;

    // Excluding an operation can remove producers others relied on, so
    // iterate until the excluded set is stable.
    for (bool changed = true; changed;) {
        changed = false;
        deps.clear();
        ResourceSet produced;
        for (const auto& op : model.operations) {
            if (excluded.contains(op.id)) continue;
            deps[op.id].producers = infer_producers(model, op, excluded, overrides);
            for (const auto& p : deps[op.id].producers) produced.insert(p.resource);
        }
        for (const auto& op : model.operations) {
            if (excluded.contains(op.id)) continue;
            auto& bindings = deps[op.id].consumers;
            const std::string stem = stem_of(op.path);
            for (const auto& p : op.parameters) {
                if (const auto* forced = consumer_override(overrides, op.id, p.name)) {
                    bindings.push_back({p.name, p.location, forced->resource});
                } else if (p.location == ParamLocation::Path && !is_suppressed_parameter(overrides, op.id, p.name)) {
                    bindings.push_back(
                        {p.name, p.location, ResourceType(stem_before_param(op.path, p.name) + "/" + lower(p.name))});
                }
            }
            for (const auto* field : required_body_fields(op)) {
                if (is_suppressed_parameter(overrides, op.id, field->name)) continue;
                if (const auto* forced = consumer_override(overrides, op.id, field->name)) {
                    bindings.push_back({field->name, ParamLocation::Body, forced->resource});
                    continue;
                }
                ResourceType candidate(stem + "/" + lower(field->name));
                if (produced.contains(candidate) || overrides.external.contains(candidate)) {
                    bindings.push_back({field->name, ParamLocation::Body, candidate});
                }
            }
        }
        for (const auto& op : model.operations) {
            if (excluded.contains(op.id)) continue;
            for (const auto& b : deps[op.id].consumers) {
                bool forced = consumer_override(overrides, op.id, b.parameter) != nullptr;
                if (!produced.contains(b.resource) && !overrides.external.contains(b.resource) && !forced) {
                    excluded.insert(op.id);
                    result.unsatisfied.emplace_back(op.id, b.resource.name());
                    spdlog::warn("excluding '{}': consumes '{}' which no operation produces", op.id,
                                 b.resource.name());
                    changed = true;
                    break;
                }
            }
        }
    }
    for (auto& [id, d] : deps) {
        if (!d.producers.empty() || !d.consumers.empty()) {
            result.operations.emplace(id, std::move(d));
        }
    }
    result.excluded = std::move(excluded);
    return result;
}

// ------------------------------------------------------------- emission

namespace {

class TemplateBuilder {
public:
    TemplateBuilder(const AnnotationOverrides& overrides, std::vector<std::string>& warnings, const std::string& op)
        : overrides_(overrides), warnings_(warnings), op_(op) {}

    void text(std::string_view s) {
        if (!slots_.empty()) {
            if (auto* last = std::get_if<StaticSlot>(&slots_.back())) {
                last->text += s;
                return;
            }
        }
        slots_.emplace_back(StaticSlot{std::string(s)});
    }

    void consumer(const ResourceType& resource, Encoding encoding) {
        if (auto it = overrides_.external.find(resource); it != overrides_.external.end()) {
            text(encode_value(it->second, PrimitiveKind::String, encoding));
        } else {
            slots_.emplace_back(ConsumerSlot{resource, encoding});
        }
    }

    void fuzzable(SchemaKind kind, Encoding encoding) {
        switch (kind) {
        case SchemaKind::Integer: slots_.emplace_back(FuzzableSlot{PrimitiveKind::Integer, encoding}); break;
        case SchemaKind::Boolean: slots_.emplace_back(FuzzableSlot{PrimitiveKind::Boolean, encoding}); break;
        default: slots_.emplace_back(FuzzableSlot{PrimitiveKind::String, encoding}); break;
        }
    }

    // Emits a JSON value for `schema` at nesting `depth` (0 = body root).
    void json_value(const SchemaNode& schema, int depth, const std::map<std::string, ResourceType>& bindings) {
        switch (schema.kind) {
        case SchemaKind::Object: {
            text("{");
            bool first = true;
            for (const auto& prop : schema.properties) {
                if (!included(prop.required, prop.name)) continue;
                bool nested = prop.schema.kind == SchemaKind::Object ||
                              (prop.schema.kind == SchemaKind::Array && !prop.schema.items.empty() &&
                               prop.schema.items.front().kind == SchemaKind::Object);
                if (nested && depth >= 1) {
                    warn("property '" + prop.name + "' nested deeper than one level skipped");
                    continue;
                }
                if (prop.schema.kind == SchemaKind::Unsupported) {
                    warn("property '" + prop.name + "' has an unsupported schema and is skipped");
                    continue;
                }
                text(first ? "" : ",");
                first = false;
                text(nlohmann::json(prop.name).dump() + ":");
                if (depth == 0) {
                    if (auto it = bindings.find(prop.name); it != bindings.end()) {
                        consumer(it->second, Encoding::Json);
                        continue;
                    }
                }
                json_value(prop.schema, depth + 1, {});
            }
            text("}");
            break;
        }
        case SchemaKind::Array:
            text("[");
            if (!schema.items.empty()) json_value(schema.items.front(), depth, {});
            text("]");
            break;
        case SchemaKind::Unsupported:
            warn("unsupported body schema rendered as a string");
            fuzzable(SchemaKind::String, Encoding::Json);
            break;
        default:
            fuzzable(schema.kind, Encoding::Json);
            break;
        }
    }

    bool included(bool required, const std::string& name) const {
        std::string key(name);
        std::transform(key.begin(), key.end(), key.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return required || overrides_.include_optional.contains(key);
    }

    std::vector<Slot> take() { return std::move(slots_); }

private:
    void warn(std::string message) { warnings_.push_back(op_ + ": " + std::move(message)); }

    const AnnotationOverrides& overrides_;
    std::vector<std::string>& warnings_;
    std::string op_;
    std::vector<Slot> slots_;
};

}  // namespace

CompileResult compile(const SpecModel& model, const AnnotationOverrides& overrides, const FuzzingDictionary& dict) {
    CompileResult result;
    result.warnings = model.warnings;
    DependencyMap deps = infer_dependencies(model, overrides);

    ResourceSet produced;
    for (const auto& [_, d] : deps.operations) {
        for (const auto& p : d.producers) produced.insert(p.resource);
    }
    for (const auto& c : overrides.consumers) {
        if (!produced.contains(c.resource) && !overrides.external.contains(c.resource)) {
            throw UnsatisfiableConsumer(c.operation, c.resource.name());
        }
    }

    for (const auto& u : deps.unsatisfied) {
        result.program.unsatisfiable.insert(ResourceType(u.resource()));
        result.program.excluded.push_back({u.operation(), u.what()});
        result.warnings.push_back("excluded " + u.operation() + ": " + u.what());
    }

    for (const auto& op : model.operations) {
        if (deps.excluded.contains(op.id)) continue;
        const OperationDependencies* d = nullptr;
        if (auto it = deps.operations.find(op.id); it != deps.operations.end()) d = &it->second;

        std::map<std::string, ResourceType> path_bindings, query_bindings, body_bindings;
        if (d) {
            for (const auto& b : d->consumers) {
                auto& target = b.location == ParamLocation::Path    ? path_bindings
                               : b.location == ParamLocation::Query ? query_bindings
                                                                    : body_bindings;
                target.emplace(b.parameter, b.resource);
            }
        }

        TemplateBuilder builder(overrides, result.warnings, op.id);
        builder.text(op.method + " ");
        for (const auto& seg : split_path(op.path)) {
            builder.text("/");
            if (!seg.is_param) {
                builder.text(seg.text);
                continue;
            }
            if (auto it = path_bindings.find(seg.text); it != path_bindings.end()) {
                builder.consumer(it->second, Encoding::Url);
            } else {
                auto param = std::find_if(op.parameters.begin(), op.parameters.end(), [&](const Parameter& p) {
                    return p.location == ParamLocation::Path && p.name == seg.text;
                });
                builder.fuzzable(param->schema.kind, Encoding::Url);
            }
        }
        if (!op.path.empty() && op.path.back() == '/') builder.text("/");

        bool first_query = true;
        for (const auto& p : op.parameters) {
            if (p.location != ParamLocation::Query || !builder.included(p.required, p.name)) continue;
            builder.text(std::string(first_query ? "?" : "&") + percent_encode(p.name) + "=");
            first_query = false;
            if (auto it = query_bindings.find(p.name); it != query_bindings.end()) {
                builder.consumer(it->second, Encoding::Url);
            } else if (p.schema.kind == SchemaKind::Array && !p.schema.items.empty()) {
                builder.fuzzable(p.schema.items.front().kind, Encoding::Url);
            } else {
                builder.fuzzable(p.schema.kind, Encoding::Url);
            }
        }

        const Parameter* body = op.body();
        bool has_body = body && builder.included(body->required, body->name);
        builder.text(" HTTP/1.1\r\nAccept: application/json\r\n");
        if (has_body) builder.text("Content-Type: application/json\r\n");
        builder.text("\r\n");
        if (has_body) builder.json_value(body->schema, 0, body_bindings);

        RequestTemplate t;
        t.id = op.id;
        t.method = op.method;
        t.slots = builder.take();
        if (d) t.producers = d->producers;
        t.declaration_index = op.declaration_index;
        for (const auto& slot : t.slots) {
            if (const auto* f = std::get_if<FuzzableSlot>(&slot); f && dict.find(f->kind) == nullptr) {
                throw MissingDictionaryKind(std::string(to_string(f->kind)));
            }
        }
        result.program.templates.push_back(std::move(t));
    }
    refresh_resource_types(result.program);
    return result;
}

}  // namespace restfuzz
