// SPDX-License-Identifier: Apache-2.0
#pragma once

// Swagger 2.0 front end: parse the document into a SpecModel, infer which
// response fields feed which request parameters, and emit a GrammarProgram.
//
// Resource types are named "<stem>/<field>" where the stem is the last
// literal path segment before the parameter (or of the whole path, for a
// producing operation): "/api/blog/posts/{id}" binds "id" to "posts/id".

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "restfuzz/errors.hpp"
#include "restfuzz/grammar.hpp"

namespace restfuzz {

enum class SchemaKind { Object, Array, String, Integer, Boolean, Unsupported };

struct SchemaProperty;

struct SchemaNode {
    SchemaKind kind = SchemaKind::Unsupported;
    std::string declared_type;
    std::vector<SchemaProperty> properties;  // Object, in declaration order
    std::vector<SchemaNode> items;           // Array: exactly one element
};

struct SchemaProperty {
    std::string name;
    bool required = false;
    SchemaNode schema;
};

enum class ParamLocation { Path, Query, Body, Header, FormData };

std::string_view to_string(ParamLocation location);

struct Parameter {
    std::string name;
    ParamLocation location = ParamLocation::Query;
    bool required = false;
    SchemaNode schema;
};

struct Operation {
    std::string id;      // "<METHOD> <basePath + path>"
    std::string method;  // upper case
    std::string path;    // basePath + path template
    std::vector<Parameter> parameters;
    std::optional<SchemaNode> success_response;  // first 2xx schema, if any
    std::size_t declaration_index = 0;

    const Parameter* body() const;
};

struct SpecModel {
    std::string base_path;
    std::vector<Operation> operations;
    std::vector<std::string> definitions;
    std::vector<std::string> warnings;
};

/// Throws MalformedDocument or UnsupportedVersion.
SpecModel parse_spec(std::string_view document);

struct ProducerOverride {
    std::string operation;
    std::vector<PathStep> extraction_path;
    ResourceType resource;
};

struct ConsumerOverride {
    std::string operation;
    std::string parameter;
    ResourceType resource;
};

/// Drops an inferred link. With `parameter` set, that parameter stays
/// fuzzable; with `producer` set, that producer is removed.
struct Suppression {
    std::string operation;
    std::optional<std::string> parameter;
    std::optional<ResourceType> producer;
};

struct AnnotationOverrides {
    std::vector<ProducerOverride> producers;
    std::vector<ConsumerOverride> consumers;
    std::vector<Suppression> suppressions;
    /// Resource types supplied as constants instead of produced at runtime.
    std::map<ResourceType, std::string> external;
    /// Optional parameters or body fields (by name) to include in renderings.
    std::set<std::string> include_optional;
};

/// Parses the overrides file (JSON or YAML):
///   producers: [{operation, path: [...], resource}]
///   consumers: [{operation, parameter, resource}]
///   suppress:  [{operation, parameter} | {operation, producer}]
///   external:  {resource: value}
///   include_optional: [name, ...]
AnnotationOverrides parse_overrides(std::string_view document);

struct ConsumerBinding {
    std::string parameter;
    ParamLocation location = ParamLocation::Path;
    ResourceType resource;
    friend bool operator==(const ConsumerBinding&, const ConsumerBinding&) = default;
};

struct OperationDependencies {
    std::vector<ProducerSpec> producers;
    std::vector<ConsumerBinding> consumers;
    friend bool operator==(const OperationDependencies&, const OperationDependencies&) = default;
};

struct DependencyMap {
    /// Only operations with at least one producer or consumer appear.
    std::map<std::string, OperationDependencies> operations;
    /// Operations dropped because a path consumer has no producer.
    std::vector<UnsatisfiableConsumer> unsatisfied;
    std::set<std::string> excluded;

    bool empty() const { return operations.empty() && unsatisfied.empty(); }
};

DependencyMap infer_dependencies(const SpecModel& model, const AnnotationOverrides& overrides = {});

struct CompileResult {
    GrammarProgram program;
    std::vector<std::string> warnings;
};

/// Throws UnsatisfiableConsumer when an override binds to a resource that is
/// neither produced nor external, and MissingDictionaryKind when a fuzzable
/// slot's kind has no dictionary values.
CompileResult compile(const SpecModel& model, const AnnotationOverrides& overrides,
                      const FuzzingDictionary& dict);

}  // namespace restfuzz
