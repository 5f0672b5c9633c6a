// SPDX-License-Identifier: Apache-2.0
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "restfuzz/blog_service.hpp"
#include "restfuzz/bucketizer.hpp"
#include "restfuzz/cli.hpp"
#include "restfuzz/engine.hpp"
#include "restfuzz/errors.hpp"
#include "restfuzz/grammar_io.hpp"
#include "restfuzz/spec_compiler.hpp"
#include "restfuzz/telemetry.hpp"

namespace py = pybind11;
using namespace restfuzz;

namespace {

FuzzingDictionary dictionary_from(const std::optional<std::string>& text) {
    return text ? parse_dictionary(*text) : FuzzingDictionary::defaults();
}

std::string compile_document(const std::string& document, const std::optional<std::string>& overrides,
                             const std::optional<std::string>& dictionary,
                             const std::vector<std::string>& include_optional) {
    AnnotationOverrides ov = overrides ? parse_overrides(*overrides) : AnnotationOverrides{};
    ov.include_optional.insert(include_optional.begin(), include_optional.end());
    return serialize_grammar(compile(parse_spec(document), ov, dictionary_from(dictionary)).program);
}

std::vector<std::string> render(const std::string& grammar, const std::string& template_id,
                                const std::optional<std::string>& dictionary, std::size_t cap) {
    const auto program = parse_grammar(grammar);
    const auto* t = program.find(template_id);
    if (t == nullptr) throw ConfigError("no template '" + template_id + "'");
    std::vector<std::string> out;
    for (const auto& r : render_combinations(*t, dictionary_from(dictionary), cap)) {
        std::string text;
        for (const auto& slot : r.slots) {
            if (const auto* s = std::get_if<StaticSlot>(&slot)) {
                text += s->text;
            } else {
                text += "{" + std::get<ConsumerSlot>(slot).resource.name() + "}";
            }
        }
        out.push_back(std::move(text));
    }
    return out;
}

/// Returns (report JSON, [(bucket id, defining sequence)]).
std::pair<std::string, std::vector<std::pair<std::string, std::vector<std::string>>>> fuzz(
    const std::string& grammar, const std::string& host, std::uint16_t port, const std::string& strategy,
    std::size_t max_length, std::optional<double> time_budget, std::optional<std::size_t> test_budget,
    std::uint64_t seed, bool no_deps, bool no_feedback, std::size_t workers,
    const std::vector<std::string>& error_status, const std::optional<std::string>& dictionary,
    const std::optional<std::string>& out_dir) {
    EngineConfig config;
    auto parsed = parse_strategy(strategy);
    if (!parsed) throw ConfigError("unknown strategy '" + strategy + "'");
    config.strategy = *parsed;
    config.max_length = max_length;
    if (time_budget) config.time_budget = std::chrono::milliseconds(static_cast<long long>(*time_budget * 1000));
    config.test_budget = test_budget;
    config.rng_seed = seed;
    config.no_deps = no_deps;
    config.no_feedback = no_feedback;
    config.worker_count = workers;
    config.error_patterns = error_status;
    config.validate();

    const auto program = parse_grammar(grammar);
    const auto dict = dictionary_from(dictionary);
    ConnectionConfig connection;
    connection.host = host;
    connection.port = port;
    TransportFactory factory = [connection] { return std::make_unique<SocketTransport>(connection); };

    BucketStore store = out_dir ? BucketStore(std::filesystem::path(*out_dir) / "buckets") : BucketStore();
    auto sink = out_dir ? std::make_unique<TelemetrySink>(*out_dir) : std::make_unique<TelemetrySink>();
    FuzzReport report;
    {
        py::gil_scoped_release release;
        report = run(config, program, dict, factory, store, *sink);
    }
    if (out_dir) emit_report(*out_dir, sink->timeline(), report);

    std::vector<std::pair<std::string, std::vector<std::string>>> buckets;
    for (const auto& b : store.buckets()) buckets.emplace_back(b.id, b.defining_sequence);
    return {to_json(report).dump(), std::move(buckets)};
}

}  // namespace

PYBIND11_MODULE(_restfuzz, m) {
    m.doc() = "Stateful REST API fuzzer";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
    py::register_exception<MalformedDocument>(m, "MalformedDocument", error.ptr());
    py::register_exception<UnsupportedVersion>(m, "UnsupportedVersion", error.ptr());
    py::register_exception<GrammarFormatError>(m, "GrammarFormatError", error.ptr());
    py::register_exception<MissingDictionaryKind>(m, "MissingDictionaryKind", error.ptr());
    py::register_exception<TargetUnreachable>(m, "TargetUnreachable", error.ptr());
    py::register_exception<BucketNotFound>(m, "BucketNotFound", error.ptr());
    py::register_exception<StorageFailure>(m, "StorageFailure", error.ptr());

    m.def("blog_swagger", [] { return std::string(blog_swagger()); });
    m.def("compile", &compile_document, py::arg("document"), py::arg("overrides") = std::nullopt,
          py::arg("dictionary") = std::nullopt, py::arg("include_optional") = std::vector<std::string>{});
    m.def("render", &render, py::arg("grammar"), py::arg("template_id"), py::arg("dictionary") = std::nullopt,
          py::arg("cap") = kDefaultCombinationCap);
    m.def("bucket_id_for", &bucket_id_for, py::arg("template_ids"));
    m.def("fuzz", &fuzz, py::arg("grammar"), py::arg("host"), py::arg("port"), py::arg("strategy") = "bfs-fast",
          py::arg("max_length") = 3, py::arg("time_budget") = std::nullopt, py::arg("test_budget") = std::nullopt,
          py::arg("seed") = 0, py::arg("no_deps") = false, py::arg("no_feedback") = false, py::arg("workers") = 1,
          py::arg("error_status") = std::vector<std::string>{"5xx"}, py::arg("dictionary") = std::nullopt,
          py::arg("out_dir") = std::nullopt);
    m.def(
        "run_cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "restfuzz");
            py::gil_scoped_release release;
            return run_cli(args);
        },
        py::arg("args"));

    py::class_<BlogService>(m, "BlogService")
        .def(py::init<std::uint16_t, std::string>(), py::arg("port") = 0, py::arg("host") = "127.0.0.1")
        .def_property_readonly("port", &BlogService::port)
        .def_property_readonly("host", &BlogService::host)
        .def_property_readonly("post_count", &BlogService::post_count)
        .def_property_readonly("server_errors", &BlogService::server_errors)
        .def("stop", &BlogService::stop, py::call_guard<py::gil_scoped_release>());
}
