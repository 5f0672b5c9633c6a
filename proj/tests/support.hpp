// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "restfuzz/blog_service.hpp"
#include "restfuzz/engine.hpp"
#include "restfuzz/grammar.hpp"
#include "restfuzz/http.hpp"
#include "restfuzz/spec_compiler.hpp"

namespace testing {

// SHA-1 digests computed independently with Python's hashlib.
inline constexpr const char* kSha1Empty = "da39a3ee5e6b4b0d3255bfef95601890afd80709";
inline constexpr const char* kSha1X = "11f6ad8ec52a2984abaafd7c3b516503785c2072";
inline constexpr const char* kSha1Y = "95cb0bfd2977c761298d9624e4b4d4c72a39974a";
inline constexpr const char* kSha1SampleString = "1b148280f3320d31c3b0425c2ff09b6c9da9b8e0";

inline constexpr const char* kPost = "POST /api/blog/posts/";
inline constexpr const char* kList = "GET /api/blog/posts/";
inline constexpr const char* kGet = "GET /api/blog/posts/{id}";
inline constexpr const char* kPut = "PUT /api/blog/posts/{id}";
inline constexpr const char* kDelete = "DELETE /api/blog/posts/{id}";

inline std::string data_path(const std::string& name) {
    return std::string(RESTFUZZ_SOURCE_DIR) + "/" + name;
}

inline restfuzz::GrammarProgram blog_grammar() {
    auto model = restfuzz::parse_spec(restfuzz::blog_swagger());
    return restfuzz::compile(model, {}, restfuzz::FuzzingDictionary::defaults()).program;
}

inline std::size_t template_index(const restfuzz::GrammarProgram& g, const std::string& id) {
    for (std::size_t i = 0; i < g.templates.size(); ++i) {
        if (g.templates[i].id == id) return i;
    }
    throw std::runtime_error("no template " + id);
}

/// A fresh reference service plus a transport factory pointed at it.
struct BlogTarget {
    restfuzz::BlogService service;

    restfuzz::ConnectionConfig connection() const {
        restfuzz::ConnectionConfig c;
        c.host = "127.0.0.1";
        c.port = service.port();
        return c;
    }
    restfuzz::TransportFactory factory() const {
        auto c = connection();
        return [c] { return std::make_unique<restfuzz::SocketTransport>(c); };
    }
};

/// Scripted transport: a callback maps each request to a response.
class MockTransport : public restfuzz::Transport {
public:
    using Handler = std::function<restfuzz::HttpExchange(const std::string&)>;
    explicit MockTransport(Handler handler) : handler_(std::move(handler)) {}

    restfuzz::HttpExchange send(std::string_view request) override {
        requests.emplace_back(request);
        auto ex = handler_(std::string(request));
        ex.request = std::string(request);
        return ex;
    }
    void begin_sequence() override { ++sequences; }
    std::string host_header() const override { return "mock:1"; }

    std::vector<std::string> requests;
    int sequences = 0;

private:
    Handler handler_;
};

inline restfuzz::HttpExchange response(int status, std::string body = {}) {
    restfuzz::HttpExchange ex;
    ex.status = status;
    ex.body = std::move(body);
    ex.raw_response = "HTTP/1.1 " + std::to_string(status) + " X\r\nContent-Length: " +
                      std::to_string(ex.body.size()) + "\r\n\r\n" + ex.body;
    return ex;
}

/// Unique scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static std::mt19937_64 rng(std::random_device{}());
        path = std::filesystem::temp_directory_path() / ("restfuzz-test-" + std::to_string(rng()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

}  // namespace testing
