#include <doctest.h>

#include <deque>
#include <random>

#include "restfuzz/errors.hpp"
#include "restfuzz/executor.hpp"
#include "support.hpp"

using namespace restfuzz;

namespace {

struct Blog {
    GrammarProgram grammar = testing::blog_grammar();
    std::map<std::string, std::vector<RenderedRequest>> renderings;

    explicit Blog(const FuzzingDictionary& dict = FuzzingDictionary::defaults()) {
        for (const auto& t : grammar.templates) renderings[t.id] = render_combinations(t, dict, kNoCap);
    }
    const RenderedRequest& r(const std::string& id, std::size_t index = 0) const {
        return renderings.at(id).at(index);
    }
};

}  // namespace

TEST_SUITE("executor") {
    TEST_CASE("classifier: total over 100..599 with the default pattern") {
        StatusClassifier c;
        for (int s = 100; s <= 599; ++s) {
            const auto expected = s >= 500 ? ResponseClass::Bug : (s >= 200 && s < 300 ? ResponseClass::Valid
                                                                                       : ResponseClass::Invalid);
            REQUIRE(c.classify(s) == expected);
        }
    }

    TEST_CASE("classifier: custom patterns") {
        StatusClassifier c({"404", "50X"});
        for (int s = 100; s <= 599; ++s) {
            const bool bug = s == 404 || (s >= 500 && s <= 509);
            CHECK((c.classify(s) == ResponseClass::Bug) == bug);
        }
        CHECK(StatusClassifier({"2xx"}).classify(200) == ResponseClass::Bug);
        CHECK_THROWS_AS(StatusClassifier({"5x"}), ConfigError);
        CHECK_THROWS_AS(StatusClassifier({"abc"}), ConfigError);
        CHECK_THROWS_AS(StatusClassifier({"5000"}), ConfigError);
        CHECK(to_string(ResponseClass::Bug) == "bug");
    }

    TEST_CASE("pool: hands out the earliest unconsumed value, then reuses the latest") {
        DynamicObjectPool pool;
        const ResourceType id("posts/id");
        CHECK_FALSE(pool.take(id));
        pool.add(id, 1);
        pool.add(id, 2);
        CHECK(*pool.take(id) == 1);
        CHECK(*pool.take(id) == 2);
        CHECK(*pool.take(id) == 2);
        pool.add(id, 3);
        CHECK(*pool.take(id) == 3);
        CHECK(pool.size(id) == 3);
        CHECK(pool.size(ResourceType("posts/checksum")) == 0);
    }

    TEST_CASE("property: pool order matches a queue model") {
        std::mt19937_64 rng(7);
        for (int trial = 0; trial < 200; ++trial) {
            DynamicObjectPool pool;
            std::map<std::string, std::deque<int>> unconsumed;
            std::map<std::string, int> latest;
            std::uniform_int_distribution<int> op(0, 2), type(0, 2);
            for (int step = 0; step < 60; ++step) {
                const std::string name = "t/" + std::to_string(type(rng));
                if (op(rng) == 0) {
                    auto got = pool.take(ResourceType(name));
                    if (!latest.count(name)) {
                        REQUIRE_FALSE(got);
                    } else if (!unconsumed[name].empty()) {
                        REQUIRE(*got == unconsumed[name].front());
                        unconsumed[name].pop_front();
                    } else {
                        REQUIRE(*got == latest[name]);
                    }
                } else {
                    pool.add(ResourceType(name), step);
                    unconsumed[name].push_back(step);
                    latest[name] = step;
                }
            }
        }
    }

    TEST_CASE("extraction: paths, missing fields and bad bodies") {
        std::vector<ProducerSpec> producers{{ResourceType("posts/id"), {std::string("id")}},
                                            {ResourceType("posts/first"), {std::string("items"), std::size_t{1}}}};
        auto ok = extract_objects(testing::response(201, R"({"id": 5889, "items": ["a", "b"]})"), producers);
        REQUIRE(ok.values.size() == 2);
        CHECK(ok.values[0].second == 5889);
        CHECK(ok.values[1].second == "b");
        CHECK(ok.warnings.empty());
        auto missing = extract_objects(testing::response(201, R"({"items": []})"), producers);
        CHECK(missing.values.empty());
        CHECK(missing.warnings.size() == 2);
        auto bad = extract_objects(testing::response(201, "not json"), producers);
        CHECK(bad.values.empty());
        CHECK(bad.warnings.size() == 1);
    }

    TEST_CASE("encode_object by slot encoding") {
        CHECK(encode_object(5889, Encoding::Url) == "5889");
        CHECK(encode_object("a b", Encoding::Url) == "a%20b");
        CHECK(encode_object("abc", Encoding::Json) == "\"abc\"");
        CHECK(encode_object("abc", Encoding::Raw) == "abc");
    }

    TEST_CASE("the empty sequence is valid and sends nothing") {
        testing::MockTransport transport([](const std::string&) { return testing::response(200); });
        Executor executor(transport, StatusClassifier());
        auto result = executor.execute_sequence(std::vector<RenderedRequest>{});
        CHECK(result.final_class == ResponseClass::Valid);
        CHECK(result.steps.empty());
        CHECK(transport.requests.empty());
    }

    TEST_CASE("planted bug: POST, GET, PUT reaches a 500 with the SHA-1 checksum echoed") {
        FuzzingDictionary dict;
        dict.set(PrimitiveKind::String, {"x"});
        dict.set(PrimitiveKind::Integer, {"0"});
        dict.set(PrimitiveKind::Boolean, {"true"});
        Blog blog(dict);
        testing::BlogTarget target;
        SocketTransport transport(target.connection());
        std::vector<std::size_t> observed;
        Executor executor(transport, StatusClassifier(),
                          [&](const HttpExchange&, std::size_t step, std::size_t length) {
                              CHECK(length == 3);
                              observed.push_back(step);
                          });
        auto result = executor.execute_sequence(
            std::vector<RenderedRequest>{blog.r(testing::kPost), blog.r(testing::kGet), blog.r(testing::kPut)});
        REQUIRE(result.steps.size() == 3);
        CHECK(observed == std::vector<std::size_t>{0, 1, 2});
        CHECK(result.steps[0].exchange.status == 201);
        CHECK(result.steps[1].exchange.status == 200);
        auto body = nlohmann::json::parse(result.steps[1].exchange.body);
        CHECK(body["checksum"] == testing::kSha1X);
        CHECK(result.steps[2].exchange.status == 500);
        CHECK(result.steps[2].exchange.request.find(testing::kSha1X) != std::string::npos);
        CHECK(result.final_class == ResponseClass::Bug);
        CHECK_FALSE(result.stopped_at);
        CHECK(result.objects_produced == 2);
        CHECK(result.pool_shape ==
              std::map<ResourceType, std::size_t>{{ResourceType("posts/id"), 1}, {ResourceType("posts/checksum"), 1}});
        CHECK(target.service.server_errors() == 1);
    }

    TEST_CASE("POST, DELETE, GET ends in 404 because the id is reused after deletion") {
        Blog blog;
        testing::BlogTarget target;
        SocketTransport transport(target.connection());
        Executor executor(transport, StatusClassifier());
        auto result = executor.execute_sequence(
            std::vector<RenderedRequest>{blog.r(testing::kPost), blog.r(testing::kDelete), blog.r(testing::kGet)});
        REQUIRE(result.steps.size() == 3);
        CHECK(result.steps[1].exchange.status == 200);
        CHECK(result.steps[2].exchange.status == 404);
        CHECK(result.final_class == ResponseClass::Invalid);
    }

    TEST_CASE("an invalid prefix stops execution") {
        Blog blog;
        testing::BlogTarget target;
        SocketTransport transport(target.connection());
        Executor executor(transport, StatusClassifier());
        auto result = executor.execute_sequence(
            std::vector<RenderedRequest>{blog.r(testing::kPost, 1), blog.r(testing::kList)});
        REQUIRE(result.steps.size() == 1);
        CHECK(result.steps[0].exchange.status == 400);
        CHECK(result.stopped_at == std::optional<std::size_t>(0));
        CHECK_FALSE(result.complete(2));
    }

    TEST_CASE("the pool does not leak between sequences") {
        Blog blog;
        testing::BlogTarget target;
        SocketTransport transport(target.connection());
        Executor executor(transport, StatusClassifier());
        CHECK(executor.execute_sequence(std::vector<RenderedRequest>{blog.r(testing::kPost)}).final_class ==
              ResponseClass::Valid);
        CHECK_THROWS_AS(executor.execute_sequence(std::vector<RenderedRequest>{blog.r(testing::kGet)}),
                        UnresolvableConsumer);
    }

    TEST_CASE("same-type consumers in one request bind the same value") {
        RenderedRequest producer{"P", 0, {StaticSlot{"POST /p HTTP/1.1\r\n\r\n"}}, {{ResourceType("a/id"), {std::string("id")}}}};
        RenderedRequest consumer{"C",
                                 0,
                                 {StaticSlot{"GET /"}, ConsumerSlot{ResourceType("a/id"), Encoding::Raw}, StaticSlot{"/"},
                                  ConsumerSlot{ResourceType("a/id"), Encoding::Raw}, StaticSlot{" HTTP/1.1\r\n\r\n"}},
                                 {}};
        int next = 10;
        testing::MockTransport transport([&](const std::string& req) {
            if (req.rfind("POST", 0) == 0) return testing::response(201, "{\"id\": " + std::to_string(next++) + "}");
            return testing::response(200);
        });
        Executor executor(transport, StatusClassifier());
        executor.execute_sequence(std::vector<RenderedRequest>{producer, producer, consumer});
        REQUIRE(transport.requests.size() == 3);
        CHECK(transport.requests[2].rfind("GET /10/10 HTTP/1.1\r\n", 0) == 0);
        CHECK(transport.sequences == 1);
    }

    TEST_CASE("producers of a non-2xx response are ignored") {
        RenderedRequest producer{"P", 0, {StaticSlot{"POST /p HTTP/1.1\r\n\r\n"}}, {{ResourceType("a/id"), {std::string("id")}}}};
        testing::MockTransport transport([](const std::string&) { return testing::response(404, "{\"id\": 1}"); });
        Executor executor(transport, StatusClassifier());
        auto result = executor.execute_sequence(std::vector<RenderedRequest>{producer});
        CHECK(result.objects_produced == 0);
        CHECK(result.final_class == ResponseClass::Invalid);
    }
}
