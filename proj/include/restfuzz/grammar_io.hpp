// SPDX-License-Identifier: Apache-2.0
#pragma once

// Text formats for compiled grammars and fuzzing dictionaries. Both are
// indented JSON so they can be inspected and edited by hand.
//
// Grammar:
//   {"format": "restfuzz-grammar/1",
//    "templates": [{"id", "method", "declaration_index",
//                   "slots": [{"static": text} | {"fuzzable": kind, "encoding": e}
//                             | {"consumer": resource, "encoding": e}],
//                   "producers": [{"resource", "path": [field | index, ...]}]}],
//    "unsatisfiable": [resource, ...],
//    "excluded": [{"operation", "reason"}]}
//
// Dictionary:
//   {"string": ["sampleString", ""], "integer": ["0", "1"], "boolean": ["true", "false"]}

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "restfuzz/grammar.hpp"

namespace restfuzz {

inline constexpr std::string_view kGrammarFormat = "restfuzz-grammar/1";

std::string serialize_grammar(const GrammarProgram& program);

/// Throws GrammarFormatError on schema violations or broken invariants.
GrammarProgram parse_grammar(std::string_view text);

GrammarProgram load_grammar(const std::filesystem::path& path);

std::string serialize_dictionary(const FuzzingDictionary& dict);

/// Scalars of any JSON type are accepted and stored as their text form.
FuzzingDictionary parse_dictionary(std::string_view text);

FuzzingDictionary load_dictionary(const std::filesystem::path& path);

/// Rendered sequences (static + consumer slots) for bucket replay files.
std::string serialize_rendered_sequence(const std::vector<RenderedRequest>& sequence);
std::vector<RenderedRequest> parse_rendered_sequence(std::string_view text);

}  // namespace restfuzz
