#include <doctest.h>

#include "restfuzz/errors.hpp"
#include "restfuzz/grammar.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace restfuzz;

using testing::flatten;

TEST_SUITE("grammar") {
    TEST_CASE("resource types are normalized") {
        CHECK(ResourceType("Posts//ID/").name() == "posts/id");
        CHECK(ResourceType("/posts/id") == ResourceType("POSTS/id"));
        CHECK(ResourceType("posts/id") != ResourceType("posts/checksum"));
        CHECK_THROWS_AS(ResourceType("//"), ConfigError);
        CHECK_THROWS_AS(ResourceType(""), ConfigError);
    }

    TEST_CASE("dictionary defaults and validation") {
        auto d = FuzzingDictionary::defaults();
        CHECK(*d.find(PrimitiveKind::String) == std::vector<std::string>{"sampleString", ""});
        CHECK(*d.find(PrimitiveKind::Integer) == std::vector<std::string>{"0", "1"});
        CHECK(*d.find(PrimitiveKind::Boolean) == std::vector<std::string>{"true", "false"});
        CHECK_THROWS_AS(d.set(PrimitiveKind::String, {}), ConfigError);
        CHECK_THROWS_AS(d.set(PrimitiveKind::String, {"a", "a"}), ConfigError);
        FuzzingDictionary empty;
        CHECK(empty.find(PrimitiveKind::String) == nullptr);
    }

    TEST_CASE("consumes and produces on the compiled blog grammar") {
        auto g = testing::blog_grammar();
        auto get = *g.find(testing::kGet);
        CHECK(consumes(get) == ResourceSet{ResourceType("posts/id")});
        CHECK(produces(get) == ResourceSet{ResourceType("posts/checksum")});
        CHECK(consumes(*g.find(testing::kList)).empty());
        CHECK(consumes(*g.find(testing::kPut)) == ResourceSet{ResourceType("posts/id"), ResourceType("posts/checksum")});
        CHECK(produces(*g.find(testing::kPost)) == ResourceSet{ResourceType("posts/id")});
        CHECK(produces(*g.find(testing::kDelete)).empty());
        CHECK(validate(g).empty());
    }

    TEST_CASE("render: one string slot yields one rendering per dictionary value") {
        RequestTemplate t{"T", "POST", {StaticSlot{"a"}, FuzzableSlot{PrimitiveKind::String, Encoding::Json}}, {}, 0};
        auto r = render_combinations(t, FuzzingDictionary::defaults(), kDefaultCombinationCap);
        REQUIRE(r.size() == 2);
        CHECK(flatten(r[0]) == "a\"sampleString\"");
        CHECK(flatten(r[1]) == "a\"\"");
        CHECK(r[0].rendering_index == 0);
        CHECK(r[1].rendering_index == 1);
    }

    TEST_CASE("render: no fuzzable slots yields the static skeleton") {
        RequestTemplate t{"T", "GET", {StaticSlot{"GET / HTTP/1.1\r\n\r\n"}}, {}, 0};
        auto r = render_combinations(t, FuzzingDictionary::defaults(), kDefaultCombinationCap);
        REQUIRE(r.size() == 1);
        CHECK(flatten(r[0]) == "GET / HTTP/1.1\r\n\r\n");
    }

    TEST_CASE("render: two strings and a boolean give 8, cap 5 keeps the first 5") {
        RequestTemplate t{"T",
                          "POST",
                          {FuzzableSlot{PrimitiveKind::String, Encoding::Raw}, StaticSlot{"|"},
                           FuzzableSlot{PrimitiveKind::String, Encoding::Raw}, StaticSlot{"|"},
                           FuzzableSlot{PrimitiveKind::Boolean, Encoding::Raw}},
                          {},
                          0};
        FuzzingDictionary d;
        d.set(PrimitiveKind::String, {"a", "b"});
        d.set(PrimitiveKind::Boolean, {"true", "false"});
        auto all = render_combinations(t, d, kNoCap);
        REQUIRE(all.size() == 8);
        std::vector<std::string> got;
        for (const auto& r : all) got.push_back(flatten(r));
        CHECK(got == std::vector<std::string>{"a|a|true", "a|a|false", "a|b|true", "a|b|false", "b|a|true",
                                              "b|a|false", "b|b|true", "b|b|false"});
        auto capped = render_combinations(t, d, 5);
        REQUIRE(capped.size() == 5);
        for (std::size_t i = 0; i < 5; ++i) CHECK(capped[i] == all[i]);
        CHECK(count_combinations(t, d, 5) == 5);
        CHECK_THROWS_AS(render_combinations(t, d, 0), ConfigError);
    }

    TEST_CASE("render: missing dictionary kind") {
        RequestTemplate t{"T", "POST", {FuzzableSlot{PrimitiveKind::Integer, Encoding::Raw}}, {}, 0};
        FuzzingDictionary d;
        d.set(PrimitiveKind::String, {"a"});
        CHECK_THROWS_AS(render_combinations(t, d, 10), MissingDictionaryKind);
    }

    TEST_CASE("render: consumer slots stay symbolic") {
        RequestTemplate t{"T", "GET", {StaticSlot{"GET /x/"}, ConsumerSlot{ResourceType("x/id"), Encoding::Url}}, {}, 0};
        auto r = render_combinations(t, FuzzingDictionary::defaults(), 10);
        REQUIRE(r.size() == 1);
        REQUIRE(r[0].slots.size() == 2);
        CHECK(std::holds_alternative<ConsumerSlot>(r[0].slots[1]));
    }

    TEST_CASE("property: rendering count and order match a brute-force cross product") {
        const auto failure = testing::check_render_counts(20240601, 500);
        CHECK_MESSAGE(!failure, failure.value_or(""));
    }

    TEST_CASE("encodings") {
        CHECK(encode_value("sample String", PrimitiveKind::String, Encoding::Raw) == "sample String");
        CHECK(encode_value("a\"b", PrimitiveKind::String, Encoding::Json) == "\"a\\\"b\"");
        CHECK(encode_value("1", PrimitiveKind::Integer, Encoding::Json) == "1");
        CHECK(encode_value("true", PrimitiveKind::Boolean, Encoding::Json) == "true");
        CHECK(encode_value("a b/c", PrimitiveKind::String, Encoding::Url) == "a%20b%2Fc");
        CHECK(percent_encode("Az09-_.~") == "Az09-_.~");
        CHECK(percent_encode("\xff") == "%FF");
    }

    TEST_CASE("validate reports dangling consumers unless declared unsatisfiable") {
        GrammarProgram g;
        g.templates.push_back({"A", "GET", {ConsumerSlot{ResourceType("a/id"), Encoding::Raw}}, {}, 0});
        refresh_resource_types(g);
        CHECK(validate(g).size() == 1);
        g.unsatisfiable.insert(ResourceType("a/id"));
        CHECK(validate(g).empty());
        g.templates.push_back(g.templates.front());
        CHECK_FALSE(validate(g).empty());
    }

    TEST_CASE("without_dependencies turns consumers into fuzzable strings") {
        auto g = without_dependencies(testing::blog_grammar());
        for (const auto& t : g.templates) {
            CHECK(consumes(t).empty());
            CHECK(t.producers.empty());
        }
        const auto& put = *g.find(testing::kPut);
        REQUIRE(put.slots.size() == 7);
        CHECK(std::get<FuzzableSlot>(put.slots[1]) == FuzzableSlot{PrimitiveKind::String, Encoding::Url});
        CHECK(std::get<FuzzableSlot>(put.slots[5]) == FuzzableSlot{PrimitiveKind::String, Encoding::Json});
    }
}
