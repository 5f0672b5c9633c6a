#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "restfuzz/engine.hpp"
#include "restfuzz/errors.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace restfuzz;

namespace {

const std::vector<std::string> kPlanted{testing::kPost, testing::kGet, testing::kPut};

struct Run {
    FuzzReport report;
    std::vector<BugBucket> buckets;
    std::size_t server_errors = 0;
};

Run fuzz_blog(EngineConfig config) {
    testing::BlogTarget target;
    BucketStore store;
    TelemetrySink sink;
    Run out;
    out.report = run(config, testing::blog_grammar(), FuzzingDictionary::defaults(), target.factory(), store, sink);
    out.buckets = store.buckets();
    out.server_errors = target.service.server_errors();
    return out;
}

EngineConfig bfs(std::size_t max_length = 3) {
    EngineConfig c;
    c.strategy = Strategy::BFS;
    c.max_length = max_length;
    return c;
}

}  // namespace

TEST_SUITE("engine") {
    TEST_CASE("strategy names") {
        CHECK(parse_strategy("bfs") == Strategy::BFS);
        CHECK(parse_strategy("bfs-fast") == Strategy::BFSFast);
        CHECK(parse_strategy("random-walk") == Strategy::RandomWalk);
        CHECK_FALSE(parse_strategy("dfs"));
        CHECK(to_string(Strategy::BFSFast) == "bfs-fast");
    }

    TEST_CASE("sequence sets deduplicate and keep one length") {
        auto set = SequenceSet::initial();
        CHECK(set.size() == 1);
        CHECK(set.members().front().size() == 0);
        SequenceSet s;
        CHECK(s.add({{{1, 0}}}));
        CHECK_FALSE(s.add({{{1, 0}}}));
        CHECK(s.add({{{1, 1}}}));
        CHECK_THROWS_AS(s.add({{{1, 0}, {2, 0}}}), Error);
    }

    TEST_CASE("dependencies_satisfied on the blog grammar") {
        auto g = testing::blog_grammar();
        const auto post = testing::template_index(g, testing::kPost);
        const auto get = testing::template_index(g, testing::kGet);
        const auto& put = *g.find(testing::kPut);
        CHECK(dependencies_satisfied(g, {}, *g.find(testing::kList)));
        CHECK_FALSE(dependencies_satisfied(g, {}, *g.find(testing::kGet)));
        CHECK(dependencies_satisfied(g, {{{post, 0}}}, *g.find(testing::kGet)));
        CHECK_FALSE(dependencies_satisfied(g, {{{post, 0}}}, put));
        CHECK(dependencies_satisfied(g, {{{post, 0}, {get, 0}}}, put));
    }

    TEST_CASE("extend from the empty sequence") {
        auto g = testing::blog_grammar();
        std::mt19937_64 rng(1);
        for (auto strategy : {Strategy::BFS, Strategy::BFSFast}) {
            auto pending = extend(SequenceSet::initial(), g, strategy, rng);
            std::set<std::string> finals;
            for (const auto& p : pending) finals.insert(g.templates[p.template_index].id);
            CHECK(finals == std::set<std::string>{testing::kList, testing::kPost});
        }
        auto walk = extend(SequenceSet::initial(), g, Strategy::RandomWalk, rng);
        REQUIRE(walk.size() == 1);
        CHECK(extend(SequenceSet::initial(), GrammarProgram{}, Strategy::BFS, rng).empty());
        CHECK(extend(SequenceSet{}, g, Strategy::BFS, rng).empty());
    }

    TEST_CASE("property: BFS-Fast appends each satisfiable template exactly once") {
        const auto failure = testing::check_bfs_fast_bound(424242, 400);
        CHECK_MESSAGE(!failure, failure.value_or(""));
    }

    TEST_CASE("property: BFS-Fast runs test each template at most once per length") {
        std::mt19937_64 rng(99);
        for (int trial = 0; trial < 60; ++trial) {
            auto g = testing::random_grammar(rng);
            auto factory = [] {
                return std::make_unique<testing::MockTransport>(
                    [](const std::string&) { return testing::response(200, R"({"v": 1})"); });
            };
            EngineConfig config;
            config.strategy = Strategy::BFSFast;
            config.max_length = 4;
            BucketStore store;
            TelemetrySink sink;
            auto report = run(config, g, FuzzingDictionary::defaults(), factory, store, sink);
            for (const auto& stats : report.per_length) {
                REQUIRE(stats.tests <= g.templates.size());
                REQUIRE(stats.seqset_size <= g.templates.size());
            }
        }
    }

    TEST_CASE("config validation") {
        EngineConfig c;
        CHECK_NOTHROW(c.validate());
        c.max_length = 0;
        CHECK_THROWS_AS(c.validate(), ConfigError);
        c = {};
        c.worker_count = 0;
        CHECK_THROWS_AS(c.validate(), ConfigError);
        c = {};
        c.combination_cap = 0;
        CHECK_THROWS_AS(c.validate(), ConfigError);
        c = {};
        c.strategy = Strategy::RandomWalk;
        CHECK_THROWS_AS(c.validate(), ConfigError);
        c.test_budget = 10;
        CHECK_NOTHROW(c.validate());
        c.test_budget = 0;
        CHECK_THROWS_AS(c.validate(), ConfigError);
        c = {};
        c.time_budget = std::chrono::milliseconds(0);
        CHECK_THROWS_AS(c.validate(), ConfigError);
        c = {};
        c.error_patterns = {"5"};
        CHECK_THROWS_AS(c.validate(), ConfigError);
    }

    TEST_CASE("BFS at length 3 on the reference target") {
        auto r = fuzz_blog(bfs());
        CHECK(r.report.total_tests == 41);
        CHECK(r.report.total_exchanges == 109);
        CHECK(r.report.max_length == 3);
        CHECK(r.report.stop_reason == "max_length");
        REQUIRE(r.buckets.size() == 1);
        CHECK(r.buckets[0].defining_sequence == kPlanted);
        CHECK(r.buckets[0].id == bucket_id_for(kPlanted));
        CHECK(r.report.bug_instances == r.buckets[0].instances.size());
        CHECK(r.report.per_length == std::vector<LengthStats>{{1, 3, 2, 1}, {2, 8, 6, 8}, {3, 30, 20, 49}});
        CHECK(r.report.status_classes.at("5xx") == r.server_errors);
        std::size_t sum = 0;
        for (const auto& [_, n] : r.report.status_histogram) sum += n;
        CHECK(sum == r.report.total_exchanges);
    }

    TEST_CASE("ablations") {
        auto base = fuzz_blog(bfs());
        auto c = bfs();
        c.no_feedback = true;
        auto no_feedback = fuzz_blog(c);
        CHECK(no_feedback.report.total_tests >= 2 * base.report.total_tests);
        c = bfs();
        c.no_deps = true;
        auto no_deps = fuzz_blog(c);
        CHECK(no_deps.buckets.empty());
        CHECK(no_deps.server_errors == 0);
    }

    TEST_CASE("BFS-Fast is deterministic across fresh targets") {
        EngineConfig c;
        c.rng_seed = 5;
        auto a = fuzz_blog(c);
        auto b = fuzz_blog(c);
        CHECK(a.report.same_outcome(b.report));
        REQUIRE(a.buckets.size() == b.buckets.size());
        for (std::size_t i = 0; i < a.buckets.size(); ++i) {
            CHECK(a.buckets[i].defining_sequence == b.buckets[i].defining_sequence);
        }
        CHECK(a.report.total_tests < fuzz_blog(bfs()).report.total_tests);
    }

    TEST_CASE("random walk restarts and is reproducible for a seed") {
        EngineConfig c;
        c.strategy = Strategy::RandomWalk;
        c.test_budget = 300;
        c.rng_seed = 11;
        auto a = fuzz_blog(c);
        auto b = fuzz_blog(c);
        CHECK(a.report.stop_reason == "test_budget");
        CHECK(a.report.total_tests == 300);
        CHECK(a.report.restarts > 0);
        CHECK(a.report.max_length > 1);
        CHECK(a.report.same_outcome(b.report));
    }

    TEST_CASE("budgets and cancellation") {
        auto c = bfs(10);
        c.test_budget = 20;
        auto r = fuzz_blog(c);
        CHECK(r.report.total_tests == 20);
        CHECK(r.report.stop_reason == "test_budget");

        std::atomic<bool> cancel{true};
        c = bfs();
        c.cancel = &cancel;
        r = fuzz_blog(c);
        CHECK(r.report.total_tests == 0);
        CHECK(r.report.stop_reason == "cancelled");

        c = bfs(50);
        c.time_budget = std::chrono::milliseconds(300);
        r = fuzz_blog(c);
        CHECK(r.report.stop_reason == "time_budget");
        CHECK(r.report.elapsed_seconds < 5.0);
    }

    TEST_CASE("a grammar with no satisfiable template is exhausted at once") {
        GrammarProgram g;
        g.templates.push_back({"GET /a", "GET", {StaticSlot{"GET /"}, ConsumerSlot{ResourceType("x/id"), Encoding::Raw},
                                                 StaticSlot{" HTTP/1.1\r\n\r\n"}}, {}, 0});
        refresh_resource_types(g);
        auto factory = [] {
            return std::make_unique<testing::MockTransport>([](const std::string&) { return testing::response(200); });
        };
        BucketStore store;
        TelemetrySink sink;
        auto report = run(bfs(), g, FuzzingDictionary::defaults(), factory, store, sink);
        CHECK(report.stop_reason == "exhausted");
        CHECK(report.total_tests == 0);
    }

    TEST_CASE("parallel workers run the same tests") {
        auto c = bfs();
        c.worker_count = 4;
        auto r = fuzz_blog(c);
        CHECK(r.report.total_tests == 41);
        CHECK(r.report.total_exchanges == 109);
        REQUIRE(r.buckets.size() == 1);
        CHECK(r.buckets[0].defining_sequence == kPlanted);
    }

    TEST_CASE("an unreachable target fails before any test") {
        testing::BlogTarget target;
        auto factory = target.factory();
        target.service.stop();
        BucketStore store;
        TelemetrySink sink;
        CHECK_THROWS_AS(run(bfs(), testing::blog_grammar(), FuzzingDictionary::defaults(), factory, store, sink),
                        TargetUnreachable);
        CHECK(sink.exchange_count() == 0);
    }
}
