#include <doctest.h>

#include "restfuzz/cli.hpp"
#include "restfuzz/document.hpp"
#include "restfuzz/telemetry.hpp"
#include "support.hpp"

using namespace restfuzz;

namespace {

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "restfuzz");
    return run_cli(args);
}

std::string target_of(const BlogService& service) { return "127.0.0.1:" + std::to_string(service.port()); }

FuzzReport report_in(const std::filesystem::path& out) {
    return report_from_json(Document::parse(read_file(out / "report.json")));
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("help and usage errors") {
        CHECK(cli({"--help"}) == kExitOk);
        CHECK(cli({}) == kExitConfig);
        CHECK(cli({"fuzz", "--bogus"}) == kExitConfig);
        CHECK(cli({"fuzz", "--spec", testing::data_path("specs/blog.yaml")}) == kExitConfig);
    }

    TEST_CASE("configuration errors exit 2") {
        BlogService service;
        testing::TempDir dir;
        const auto spec = testing::data_path("specs/blog.yaml");
        const auto out = (dir.path / "o").string();
        CHECK(cli({"fuzz", "--spec", spec, "--target", target_of(service), "--max-length", "0", "--out", out}) ==
              kExitConfig);
        CHECK(cli({"fuzz", "--spec", spec, "--target", target_of(service), "--secure", "--out", out}) == kExitConfig);
        CHECK(cli({"fuzz", "--spec", spec, "--target", "nohostport", "--out", out}) == kExitConfig);
        CHECK(cli({"fuzz", "--spec", spec, "--target", target_of(service), "--strategy", "dfs", "--out", out}) ==
              kExitConfig);
        CHECK(cli({"fuzz", "--spec", (dir.path / "missing.yaml").string(), "--target", target_of(service), "--out",
                   out}) == kExitConfig);
        CHECK(cli({"compile", "--spec", spec, "--dictionary", (dir.path / "missing.json").string()}) == kExitConfig);
    }

    TEST_CASE("an unreachable target exits 3") {
        std::string target;
        {
            BlogService service;
            target = target_of(service);
        }
        testing::TempDir dir;
        CHECK(cli({"fuzz", "--spec", testing::data_path("specs/blog.yaml"), "--target", target, "--out",
                   (dir.path / "o").string()}) == kExitUnreachable);
    }

    TEST_CASE("compile then fuzz equals fuzz from the document") {
        testing::TempDir dir;
        const auto grammar = (dir.path / "blog.grammar.json").string();
        REQUIRE(cli({"compile", "--spec", testing::data_path("specs/blog.yaml"), "-o", grammar}) == kExitOk);
        CHECK(read_file(grammar) == read_file(testing::data_path("tests/data/blog.grammar.json")));

        BlogService a, b;
        const auto out_a = dir.path / "a";
        const auto out_b = dir.path / "b";
        REQUIRE(cli({"-q", "fuzz", "--grammar", grammar, "--target", target_of(a), "--strategy", "bfs", "--out",
                     out_a.string()}) == kExitOk);
        REQUIRE(cli({"-q", "fuzz", "--spec", testing::data_path("specs/blog.yaml"), "--target", target_of(b),
                     "--strategy", "bfs", "--out", out_b.string()}) == kExitOk);
        auto ra = report_in(out_a);
        auto rb = report_in(out_b);
        CHECK(ra.same_outcome(rb));
        CHECK(ra.total_tests == 41);
        REQUIRE(ra.bug_buckets.size() == 1);
        for (const char* f : {"events.csv", "network.raw", "network.log", "status_timeline.csv", "length_stats.csv",
                              "summary.txt", "grammar.json"}) {
            CHECK(std::filesystem::exists(out_a / f));
        }
        CHECK(std::filesystem::exists(out_a / "buckets" / ra.bug_buckets[0] / "replay.json"));

        SUBCASE("replay and report") {
            BlogService fresh;
            CHECK(cli({"replay", "--out", out_a.string(), "--bucket", ra.bug_buckets[0], "--target", target_of(fresh)}) ==
                  kExitOk);
            CHECK(cli({"replay", "--out", out_a.string(), "--bucket", ra.bug_buckets[0], "--target", target_of(fresh),
                       "--error-status", "404"}) == kExitNotReproduced);
            CHECK(cli({"replay", "--out", out_a.string(), "--bucket", "ffffffffffffffff", "--target",
                       target_of(fresh)}) == kExitConfig);

            const auto before = read_file(out_a / "status_timeline.csv");
            std::filesystem::remove(out_a / "status_timeline.csv");
            CHECK(cli({"report", "--out", out_a.string()}) == kExitOk);
            CHECK(read_file(out_a / "status_timeline.csv") == before);
            CHECK(report_in(out_a).same_outcome(ra));
        }
    }
}
