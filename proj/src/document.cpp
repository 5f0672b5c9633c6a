// SPDX-License-Identifier: Apache-2.0
#include "restfuzz/document.hpp"

#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "restfuzz/errors.hpp"

namespace restfuzz {

namespace {

Document scalar_to_json(const YAML::Node& node) {
    const std::string& text = node.Scalar();
    // Quoted scalars carry the "!" tag and are always strings.
    if (node.Tag() == "!") {
        return text;
    }
    if (text == "~" || text == "null" || text == "Null" || text == "NULL" || text.empty()) {
        return nullptr;
    }
    if (text == "true" || text == "True" || text == "TRUE") return true;
    if (text == "false" || text == "False" || text == "FALSE") return false;
    try {
        std::size_t used = 0;
        long long as_int = std::stoll(text, &used, 10);
        if (used == text.size()) {
            return as_int;
        }
        double as_double = std::stod(text, &used);
        if (used == text.size()) {
            return as_double;
        }
    } catch (const std::exception&) {
    }
    return text;
}

Document yaml_to_json(const YAML::Node& node, int depth) {
    if (depth > 256) {
        throw MalformedDocument("document nesting too deep");
    }
    switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
        return nullptr;
    case YAML::NodeType::Scalar:
        return scalar_to_json(node);
    case YAML::NodeType::Sequence: {
        Document out = Document::array();
        for (const auto& item : node) {
            out.push_back(yaml_to_json(item, depth + 1));
        }
        return out;
    }
    case YAML::NodeType::Map: {
        Document out = Document::object();
        for (const auto& kv : node) {
            out[kv.first.as<std::string>()] = yaml_to_json(kv.second, depth + 1);
        }
        return out;
    }
    }
    return nullptr;
}

}  // namespace

Document parse_document(std::string_view text) {
    std::size_t first = text.find_first_not_of(" \t\r\n");
    if (first != std::string_view::npos && (text[first] == '{' || text[first] == '[')) {
        try {
            return Document::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw MalformedDocument(std::string("invalid JSON: ") + e.what());
        }
    }
    try {
        return yaml_to_json(YAML::Load(std::string(text)), 0);
    } catch (const YAML::Exception& e) {
        throw MalformedDocument(std::string("invalid YAML: ") + e.what());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw StorageFailure("cannot open '" + path.string() + "' for reading");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw StorageFailure("cannot open '" + path.string() + "' for writing");
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
        throw StorageFailure("write to '" + path.string() + "' failed");
    }
}

}  // namespace restfuzz
