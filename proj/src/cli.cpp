// SPDX-License-Identifier: Apache-2.0
#include "restfuzz/cli.hpp"

#include <algorithm>
#include <atomic>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "restfuzz/bucketizer.hpp"
#include "restfuzz/document.hpp"
#include "restfuzz/engine.hpp"
#include "restfuzz/errors.hpp"
#include "restfuzz/grammar_io.hpp"
#include "restfuzz/spec_compiler.hpp"
#include "restfuzz/telemetry.hpp"

namespace restfuzz {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted.store(true); }

struct SourceOptions {
    std::string spec;
    std::string grammar;
    std::string overrides;
    std::string dictionary;
    std::vector<std::string> include_optional;
};

struct TargetOptions {
    std::string target;
    bool secure = false;
    std::string auth_header = "PRIVATE-TOKEN";
    std::string token_env;
    std::string token_file;
    double connect_timeout = 5.0;
    double read_timeout = 30.0;
};

void add_source_options(CLI::App& cmd, SourceOptions& o, bool allow_grammar) {
    auto* spec = cmd.add_option("--spec", o.spec, "Swagger 2.0 document (YAML or JSON)")->check(CLI::ExistingFile);
    if (allow_grammar) {
        auto* grammar = cmd.add_option("--grammar", o.grammar, "precompiled grammar file")->check(CLI::ExistingFile);
        spec->excludes(grammar);
        grammar->excludes(spec);
    } else {
        spec->required();
    }
    cmd.add_option("--overrides", o.overrides, "producer/consumer annotation overrides")->check(CLI::ExistingFile);
    cmd.add_option("--dictionary", o.dictionary, "fuzzing dictionary (JSON or YAML)")->check(CLI::ExistingFile);
    cmd.add_option("--include-optional", o.include_optional, "optional parameter or field to render")
        ->delimiter(',');
}

void add_target_options(CLI::App& cmd, TargetOptions& o) {
    cmd.add_option("--target", o.target, "service address HOST:PORT")->required();
    cmd.add_flag("--secure", o.secure, "use TLS (not supported)");
    cmd.add_option("--auth-header", o.auth_header, "header carrying the auth token")->capture_default_str();
    auto* env = cmd.add_option("--token-env", o.token_env, "environment variable holding the auth token");
    auto* file = cmd.add_option("--token-file", o.token_file, "file holding the auth token")->check(CLI::ExistingFile);
    env->excludes(file);
    cmd.add_option("--connect-timeout", o.connect_timeout, "seconds")->capture_default_str();
    cmd.add_option("--read-timeout", o.read_timeout, "seconds")->capture_default_str();
}

FuzzingDictionary load_dict(const SourceOptions& o) {
    return o.dictionary.empty() ? FuzzingDictionary::defaults() : load_dictionary(o.dictionary);
}

GrammarProgram load_program(const SourceOptions& o, const FuzzingDictionary& dict) {
    if (!o.grammar.empty()) return load_grammar(o.grammar);
    if (o.spec.empty()) throw ConfigError("one of --spec or --grammar is required");
    SpecModel model = parse_spec(read_file(o.spec));
    for (const auto& w : model.warnings) spdlog::warn("{}", w);
    AnnotationOverrides overrides;
    if (!o.overrides.empty()) overrides = parse_overrides(read_file(o.overrides));
    overrides.include_optional.insert(o.include_optional.begin(), o.include_optional.end());
    CompileResult compiled = compile(model, overrides, dict);
    for (const auto& w : compiled.warnings) spdlog::warn("{}", w);
    return std::move(compiled.program);
}

ConnectionConfig connection_for(const TargetOptions& o) {
    if (o.secure) throw ConfigError("--secure is not supported: only plain HTTP targets can be fuzzed");
    const auto colon = o.target.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == o.target.size()) {
        throw ConfigError("--target must be HOST:PORT, got '" + o.target + "'");
    }
    ConnectionConfig config;
    config.host = o.target.substr(0, colon);
    int port = 0;
    try {
        std::size_t used = 0;
        port = std::stoi(o.target.substr(colon + 1), &used);
        if (used != o.target.size() - colon - 1) port = -1;
    } catch (const std::logic_error&) {
        port = -1;
    }
    if (port < 1 || port > 65535) throw ConfigError("invalid port in --target '" + o.target + "'");
    config.port = static_cast<std::uint16_t>(port);
    if (o.connect_timeout <= 0 || o.read_timeout <= 0) throw ConfigError("timeouts must be positive");
    config.connect_timeout = std::chrono::milliseconds(static_cast<long long>(o.connect_timeout * 1000));
    config.read_timeout = std::chrono::milliseconds(static_cast<long long>(o.read_timeout * 1000));
    return config;
}

std::optional<AuthConfig> auth_for(const TargetOptions& o) {
    if (o.token_env.empty() && o.token_file.empty()) return std::nullopt;
    AuthConfig auth;
    auth.header_name = o.auth_header;
    auth.token = o.token_env.empty() ? TokenSource::from_file(o.token_file) : TokenSource::from_env(o.token_env);
    auth.token.read();
    return auth;
}

void setup_logging(bool verbose, bool quiet) {
    auto logger = spdlog::get("restfuzz");
    if (!logger) {
        logger = spdlog::stderr_color_mt("restfuzz");
        spdlog::set_default_logger(logger);
    }
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(quiet ? spdlog::level::err : verbose ? spdlog::level::debug : spdlog::level::info);
}

int cmd_compile(const SourceOptions& src, const std::string& out) {
    const FuzzingDictionary dict = load_dict(src);
    const GrammarProgram program = load_program(src, dict);
    const std::string text = serialize_grammar(program);
    if (out.empty() || out == "-") {
        std::cout << text;
    } else {
        write_file(out, text);
        std::cerr << "wrote " << program.templates.size() << " request templates to " << out << "\n";
    }
    for (const auto& e : program.excluded) spdlog::warn("excluded {}: {}", e.operation, e.reason);
    return kExitOk;
}

struct FuzzOptions {
    std::string strategy = "bfs-fast";
    std::size_t max_length = 3;
    double time_budget = 0;
    std::size_t test_budget = 0;
    std::size_t combination_cap = kDefaultCombinationCap;
    std::vector<std::string> error_status{"5xx"};
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    bool no_deps = false;
    bool no_feedback = false;
    std::string out = "restfuzz-out";
};

int cmd_fuzz(const SourceOptions& src, const TargetOptions& tgt, const FuzzOptions& o) {
    EngineConfig config;
    auto strategy = parse_strategy(o.strategy);
    if (!strategy) throw ConfigError("unknown strategy '" + o.strategy + "' (bfs, bfs-fast, random-walk)");
    config.strategy = *strategy;
    config.max_length = o.max_length;
    if (o.time_budget < 0) throw ConfigError("--time-budget must be positive");
    if (o.time_budget > 0) {
        config.time_budget = std::chrono::milliseconds(static_cast<long long>(o.time_budget * 1000));
    }
    if (o.test_budget > 0) config.test_budget = o.test_budget;
    config.combination_cap = o.combination_cap;
    config.error_patterns = o.error_status;
    config.rng_seed = o.seed;
    config.worker_count = o.workers;
    config.no_deps = o.no_deps;
    config.no_feedback = o.no_feedback;
    config.cancel = &g_interrupted;
    config.validate();

    const ConnectionConfig connection = connection_for(tgt);
    const std::optional<AuthConfig> auth = auth_for(tgt);
    const FuzzingDictionary dict = load_dict(src);
    const GrammarProgram program = load_program(src, dict);

    const fs::path out(o.out);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw ConfigError("cannot create output directory '" + out.string() + "': " + ec.message());
    write_file(out / "grammar.json", serialize_grammar(program));

    std::optional<std::string> redact;
    if (auth) redact = auth->header_name;
    BucketStore buckets(out / "buckets", redact);
    TelemetrySink telemetry(out, redact);
    TransportFactory factory = [&] { return std::make_unique<SocketTransport>(connection, auth); };

    g_interrupted.store(false);
    auto previous = std::signal(SIGINT, on_sigint);
    FuzzReport report;
    try {
        report = run(config, program, dict, factory, buckets, telemetry);
    } catch (...) {
        std::signal(SIGINT, previous);
        throw;
    }
    std::signal(SIGINT, previous);

    emit_report(out, telemetry.timeline(), report);
    std::cout << summary_text(report) << "output: " << out.string() << "\n";
    return kExitOk;
}

int cmd_replay(const TargetOptions& tgt, const std::string& out, const std::string& bucket_id,
               const std::vector<std::string>& error_status) {
    const ConnectionConfig connection = connection_for(tgt);
    const std::optional<AuthConfig> auth = auth_for(tgt);
    const BucketStore store = BucketStore::load(fs::path(out) / "buckets");
    SocketTransport transport(connection, auth);
    Executor executor(transport, StatusClassifier(error_status));
    ReplayOutcome outcome = replay(store, bucket_id, executor);

    std::optional<std::string> redact;
    if (auth) redact = auth->header_name;
    std::vector<HttpExchange> exchanges;
    for (const auto& step : outcome.result.steps) exchanges.push_back(step.exchange);
    std::cout << format_bucket_trace(exchanges, redact);
    std::cout << "bucket " << bucket_id << ": final class " << to_string(outcome.final_class) << ", "
              << (outcome.reproduced ? "reproduced" : "not reproduced") << "\n";
    if (outcome.diverged_at) {
        std::cout << "diverged at step " << *outcome.diverged_at + 1 << " (prefix step no longer valid)\n";
    }
    return outcome.reproduced ? kExitOk : kExitNotReproduced;
}

int cmd_report(const std::string& out_dir) {
    const fs::path out(out_dir);
    auto timeline = load_events(out / "events.csv");
    std::stable_sort(timeline.begin(), timeline.end(),
                     [](const TimelineEvent& a, const TimelineEvent& b) { return a.elapsed_s < b.elapsed_s; });
    FuzzReport report;
    Document stored;
    try {
        stored = Document::parse(read_file(out / "report.json"));
        report = report_from_json(stored);
    } catch (const nlohmann::json::exception& e) {
        throw StorageFailure("corrupt report.json: " + std::string(e.what()));
    }
    report.status_histogram.clear();
    report.status_classes.clear();
    std::set<std::pair<std::string, std::string>> pairs;
    for (const auto& e : timeline) {
        ++report.status_histogram[e.status];
        ++report.status_classes[status_class_of(e.status)];
        pairs.emplace(e.template_id, status_class_of(e.status));
    }
    report.total_exchanges = timeline.size();
    report.behavioral_coverage = pairs.size();
    emit_report(out, timeline, report);
    std::cout << summary_text(report);
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Stateful REST API fuzzer", "restfuzz"};
    app.require_subcommand(1);
    bool verbose = false;
    bool quiet = false;
    app.add_flag("-v,--verbose", verbose, "debug logging");
    app.add_flag("-q,--quiet", quiet, "errors only");

    SourceOptions compile_src;
    std::string compile_out;
    auto* compile_cmd = app.add_subcommand("compile", "compile a Swagger document into a fuzzing grammar");
    add_source_options(*compile_cmd, compile_src, false);
    compile_cmd->add_option("-o,--out", compile_out, "grammar output file (default: stdout)");

    SourceOptions fuzz_src;
    TargetOptions fuzz_tgt;
    FuzzOptions fuzz;
    auto* fuzz_cmd = app.add_subcommand("fuzz", "run a fuzzing session against a live service");
    add_source_options(*fuzz_cmd, fuzz_src, true);
    add_target_options(*fuzz_cmd, fuzz_tgt);
    fuzz_cmd->add_option("--strategy", fuzz.strategy, "bfs, bfs-fast or random-walk")->capture_default_str();
    fuzz_cmd->add_option("--max-length", fuzz.max_length, "maximum sequence length")->capture_default_str();
    fuzz_cmd->add_option("--time-budget", fuzz.time_budget, "seconds (0: unbounded)");
    fuzz_cmd->add_option("--test-budget", fuzz.test_budget, "maximum executed tests (0: unbounded)");
    fuzz_cmd->add_option("--combination-cap", fuzz.combination_cap, "renderings per request")
        ->capture_default_str();
    fuzz_cmd->add_option("--error-status", fuzz.error_status, "bug status patterns, e.g. 5xx,404")
        ->delimiter(',')
        ->capture_default_str();
    fuzz_cmd->add_option("--seed", fuzz.seed, "random seed")->capture_default_str();
    fuzz_cmd->add_option("--workers", fuzz.workers, "parallel workers")->capture_default_str();
    fuzz_cmd->add_flag("--no-deps", fuzz.no_deps, "treat consumer slots as fuzzable strings");
    fuzz_cmd->add_flag("--no-feedback", fuzz.no_feedback, "keep invalid sequences for extension");
    fuzz_cmd->add_option("--out", fuzz.out, "output directory")->capture_default_str();

    TargetOptions replay_tgt;
    std::string replay_out = "restfuzz-out";
    std::string replay_bucket;
    std::vector<std::string> replay_status{"5xx"};
    auto* replay_cmd = app.add_subcommand("replay", "re-run a bug bucket against a live service");
    add_target_options(*replay_cmd, replay_tgt);
    replay_cmd->add_option("--out", replay_out, "output directory of the fuzzing run")->capture_default_str();
    replay_cmd->add_option("--bucket", replay_bucket, "bug bucket id")->required();
    replay_cmd->add_option("--error-status", replay_status, "bug status patterns")->delimiter(',');

    std::string report_out = "restfuzz-out";
    auto* report_cmd = app.add_subcommand("report", "re-emit report files from a run's traces");
    report_cmd->add_option("--out", report_out, "output directory of the fuzzing run")->capture_default_str();

    std::vector<std::string> argv_rest(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(argv_rest.begin(), argv_rest.end());
    try {
        app.parse(argv_rest);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }
    setup_logging(verbose, quiet);

    try {
        if (*compile_cmd) return cmd_compile(compile_src, compile_out);
        if (*fuzz_cmd) return cmd_fuzz(fuzz_src, fuzz_tgt, fuzz);
        if (*replay_cmd) return cmd_replay(replay_tgt, replay_out, replay_bucket, replay_status);
        if (*report_cmd) return cmd_report(report_out);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const MalformedDocument& e) {
        std::cerr << "malformed document: " << e.what() << "\n";
        return kExitConfig;
    } catch (const UnsupportedVersion& e) {
        std::cerr << "unsupported document: " << e.what() << "\n";
        return kExitConfig;
    } catch (const GrammarFormatError& e) {
        std::cerr << "bad grammar file: " << e.what() << "\n";
        return kExitConfig;
    } catch (const MissingDictionaryKind& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const UnsatisfiableConsumer& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const BucketNotFound& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const TargetUnreachable& e) {
        std::cerr << "target unreachable: " << e.what() << "\n";
        return kExitUnreachable;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInternal;
}

}  // namespace restfuzz
