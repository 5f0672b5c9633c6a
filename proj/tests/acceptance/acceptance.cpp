// SPDX-License-Identifier: Apache-2.0
// Acceptance harness: prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "oracles.hpp"
#include "restfuzz/bucketizer.hpp"
#include "restfuzz/cli.hpp"
#include "restfuzz/document.hpp"
#include "restfuzz/engine.hpp"
#include "restfuzz/spec_compiler.hpp"
#include "support.hpp"

using namespace restfuzz;
namespace fs = std::filesystem;

namespace {

// Pinned thresholds.
constexpr double kMaxRuntimeSeconds = 300.0;
constexpr double kMinFeedbackRatio = 2.0;
constexpr std::uint64_t kPropertySeed = 20240917;
constexpr int kPropertyTrials = 2000;
constexpr std::uint64_t kDeterminismSeed = 42;

const std::vector<std::string> kPlanted{testing::kPost, testing::kGet, testing::kPut};

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct CliRun {
    int exit_code = -1;
    FuzzReport report;
    double wall_seconds = 0.0;
    fs::path out;
};

CliRun fuzz_cli(const fs::path& out, std::vector<std::string> extra) {
    BlogService service;
    std::vector<std::string> args{"restfuzz", "-q", "fuzz", "--spec", testing::data_path("specs/blog.yaml"),
                                  "--target", "127.0.0.1:" + std::to_string(service.port()), "--out",
                                  out.string()};
    args.insert(args.end(), extra.begin(), extra.end());
    CliRun r;
    r.out = out;
    std::ostringstream sink;
    auto* old = std::cout.rdbuf(sink.rdbuf());
    const auto start = std::chrono::steady_clock::now();
    r.exit_code = run_cli(args);
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout.rdbuf(old);
    if (r.exit_code == kExitOk) r.report = report_from_json(Document::parse(read_file(out / "report.json")));
    return r;
}

struct EngineRun {
    FuzzReport report;
    std::vector<BugBucket> buckets;
};

EngineRun fuzz_engine(const EngineConfig& config) {
    BlogService service;
    ConnectionConfig c;
    c.port = service.port();
    TransportFactory factory = [c] { return std::make_unique<SocketTransport>(c); };
    BucketStore store;
    TelemetrySink sink;
    EngineRun r;
    r.report = run(config, testing::blog_grammar(), FuzzingDictionary::defaults(), factory, store, sink);
    r.buckets = store.buckets();
    return r;
}

Outcome guarded(const std::function<Outcome()>& body) {
    try {
        return body();
    } catch (const std::exception& e) {
        return {false, std::string("exception: ") + e.what()};
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"restfuzz acceptance checks"};
    double strategy_budget = 60.0;
    app.add_option("--strategy-budget", strategy_budget, "seconds per strategy in the comparison run")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::err);

    testing::TempDir work;
    std::vector<std::pair<int, Outcome>> results;
    auto report = [&](int n, const std::string& title, Outcome o) {
        std::printf("%s criterion %d: %s (%s)\n", o.pass ? "PASS" : "FAIL", n, title.c_str(), o.detail.c_str());
        std::fflush(stdout);
        results.emplace_back(n, std::move(o));
    };

    // The strategy comparison runs in the background while the other criteria execute.
    auto comparison = std::async(std::launch::async, [strategy_budget] {
        const auto budget = std::chrono::milliseconds(static_cast<long long>(strategy_budget * 1000));
        EngineConfig bfs;
        bfs.strategy = Strategy::BFS;
        bfs.max_length = 1000;
        bfs.time_budget = budget;
        EngineConfig walk;
        walk.strategy = Strategy::RandomWalk;
        walk.time_budget = budget;
        walk.rng_seed = 7;
        auto bfs_run = std::async(std::launch::async, [bfs] { return fuzz_engine(bfs); });
        auto walk_run = std::async(std::launch::async, [walk] { return fuzz_engine(walk); });
        return std::make_pair(bfs_run.get().report, walk_run.get().report);
    });

    CliRun base;
    report(1, "BFS at max length 3 finds the planted POST, GET, PUT bug", guarded([&] {
               base = fuzz_cli(work.path / "bfs", {"--strategy", "bfs", "--max-length", "3"});
               if (base.exit_code != kExitOk) return Outcome{false, "exit code " + std::to_string(base.exit_code)};
               const auto store = BucketStore::load(base.out / "buckets");
               bool found = false;
               for (const auto& b : store.buckets()) found = found || b.defining_sequence == kPlanted;
               char runtime[64];
               std::snprintf(runtime, sizeof runtime, "%.3f s", base.wall_seconds);
               std::string detail = std::to_string(store.size()) + " bucket(s), planted " + (found ? "found" : "missing") +
                                    ", " + std::to_string(base.report.total_tests) + " tests, runtime " + runtime +
                                    " < 300 s";
               return Outcome{found && store.size() >= 1 && base.wall_seconds < kMaxRuntimeSeconds, detail};
           }));

    report(2, "--no-deps finds no bug bucket", guarded([&] {
               auto r = fuzz_cli(work.path / "nodeps", {"--strategy", "bfs", "--max-length", "3", "--no-deps"});
               if (r.exit_code != kExitOk) return Outcome{false, "exit code " + std::to_string(r.exit_code)};
               return Outcome{r.report.bug_buckets.empty(),
                              std::to_string(r.report.bug_buckets.size()) + " bucket(s), " +
                                  std::to_string(r.report.total_tests) + " tests"};
           }));

    report(3, "--no-feedback executes at least 2x the tests", guarded([&] {
               auto r = fuzz_cli(work.path / "nofeedback", {"--strategy", "bfs", "--max-length", "3", "--no-feedback"});
               if (r.exit_code != kExitOk || base.exit_code != kExitOk) return Outcome{false, "run failed"};
               const double ratio =
                   static_cast<double>(r.report.total_tests) / static_cast<double>(base.report.total_tests);
               char detail[128];
               std::snprintf(detail, sizeof detail, "%zu vs %zu tests, ratio %.2f >= %.1f", r.report.total_tests,
                             base.report.total_tests, ratio, kMinFeedbackRatio);
               return Outcome{ratio >= kMinFeedbackRatio, detail};
           }));

    report(4, "BFS-Fast appends each satisfiable template once, at most |templates| per length", guarded([] {
               auto failure = testing::check_bfs_fast_bound(kPropertySeed, kPropertyTrials);
               return Outcome{!failure, failure.value_or(std::to_string(kPropertyTrials) + " random grammars")};
           }));

    report(5, "rendering count equals the capped dictionary cross product", guarded([] {
               auto failure = testing::check_render_counts(kPropertySeed, kPropertyTrials);
               return Outcome{!failure, failure.value_or(std::to_string(kPropertyTrials) + " random templates")};
           }));

    report(6, "bucket assignments match the brute-force suffix rule", guarded([] {
               auto failure = testing::check_bucket_assignments(kPropertySeed, kPropertyTrials);
               return Outcome{!failure, failure.value_or(std::to_string(kPropertyTrials) + " random bug streams")};
           }));

    report(7, "replaying the planted-bug bucket on a fresh target yields Bug", guarded([&] {
               if (base.exit_code != kExitOk) return Outcome{false, "no run to replay"};
               const auto store = BucketStore::load(base.out / "buckets");
               const std::string id = bucket_id_for(kPlanted);
               testing::BlogTarget fresh;
               SocketTransport transport(fresh.connection());
               Executor executor(transport, StatusClassifier());
               auto outcome = replay(store, id, executor);
               return Outcome{outcome.final_class == ResponseClass::Bug && outcome.reproduced,
                              "bucket " + id + " final class " + std::string(to_string(outcome.final_class))};
           }));

    report(8, "BFS-Fast with a fixed seed is deterministic", guarded([] {
               EngineConfig config;
               config.strategy = Strategy::BFSFast;
               config.rng_seed = kDeterminismSeed;
               auto a = fuzz_engine(config);
               auto b = fuzz_engine(config);
               bool same = a.report.same_outcome(b.report) && a.buckets.size() == b.buckets.size();
               for (std::size_t i = 0; same && i < a.buckets.size(); ++i) {
                   same = a.buckets[i].defining_sequence == b.buckets[i].defining_sequence;
               }
               return Outcome{same, std::to_string(a.report.total_tests) + " tests, " +
                                        std::to_string(a.buckets.size()) + " bucket(s) in both runs"};
           }));

    report(9, "compiled POST snippet renders {\"body\":\"sampleString\"} byte for byte", guarded([] {
               auto model = parse_spec(read_file(testing::data_path("tests/data/post_snippet.yaml")));
               auto overrides = parse_overrides(read_file(testing::data_path("tests/data/post_snippet_overrides.yaml")));
               auto program = compile(model, overrides, FuzzingDictionary::defaults()).program;
               if (program.templates.size() != 1) return Outcome{false, "expected one template"};
               for (const auto& r : render_combinations(program.templates[0], FuzzingDictionary::defaults(),
                                                        kDefaultCombinationCap)) {
                   const std::string text = testing::flatten(r);
                   const std::string body = text.substr(text.find("\r\n\r\n") + 4);
                   if (body.find("sampleString") != std::string::npos) {
                       return Outcome{body == R"({"body":"sampleString"})", "body " + body};
                   }
               }
               return Outcome{false, "no sampleString rendering"};
           }));

    report(10, "RandomWalk reaches at least the BFS max length under equal time budgets", guarded([&] {
               auto [bfs, walk] = comparison.get();
               char detail[256];
               std::snprintf(detail, sizeof detail,
                             "budget %.0f s each; bfs max length %zu, restarts %zu, tests %zu; "
                             "random-walk max length %zu, restarts %zu, tests %zu",
                             strategy_budget, bfs.max_length, bfs.restarts, bfs.total_tests, walk.max_length,
                             walk.restarts, walk.total_tests);
               return Outcome{walk.max_length >= bfs.max_length, detail};
           }));

    std::size_t failed = 0;
    for (const auto& [_, o] : results) failed += o.pass ? 0 : 1;
    std::printf("%zu/%zu criteria passed\n", results.size() - failed, results.size());
    return failed == 0 ? 0 : 1;
}
