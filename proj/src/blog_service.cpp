// SPDX-License-Identifier: Apache-2.0
#include "restfuzz/blog_service.hpp"

#include <atomic>
#include <charconv>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "blog_swagger.inc"
#include "restfuzz/digest.hpp"
#include "restfuzz/errors.hpp"

namespace restfuzz {

namespace {

using Json = nlohmann::ordered_json;

struct Post {
    std::string body;
    std::string checksum;
};

constexpr const char* kJson = "application/json";

std::optional<std::uint64_t> parse_id(const std::string& text) {
    std::uint64_t id = 0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), id);
    if (ec != std::errc{} || end != text.data() + text.size() || text.empty()) return std::nullopt;
    return id;
}

void reply(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), kJson);
}

void reply_error(httplib::Response& res, int status, std::string message) {
    reply(res, status, Json{{"error", std::move(message)}});
}

}  // namespace

struct BlogService::Impl {
    httplib::Server server;
    std::thread thread;
    std::string host;
    std::uint16_t port = 0;

    mutable std::mutex mutex;
    std::map<std::uint64_t, Post> posts;
    std::uint64_t next_id = 1;
    std::atomic<std::size_t> errors{0};

    void routes() {
        const char* collection = R"(/api/blog/posts/?)";
        const char* item = R"(/api/blog/posts/([^/]+))";

        server.Get(collection, [this](const httplib::Request&, httplib::Response& res) {
            std::lock_guard lock(mutex);
            Json list = Json::array();
            for (const auto& [id, post] : posts) list.push_back({{"body", post.body}, {"id", id}});
            reply(res, 200, list);
        });

        server.Post(collection, [this](const httplib::Request& req, httplib::Response& res) {
            Json in = Json::parse(req.body, nullptr, false);
            if (in.is_discarded() || !in.is_object() || !in.contains("body") || !in["body"].is_string()) {
                return reply_error(res, 400, "expected {\"body\": string}");
            }
            std::string body = in["body"].get<std::string>();
            if (body.empty()) return reply_error(res, 400, "body must not be empty");
            std::lock_guard lock(mutex);
            const std::uint64_t id = next_id++;
            posts[id] = Post{body, sha1_hex(body)};
            reply(res, 201, Json{{"body", body}, {"id", id}});
        });

        server.Get(item, [this](const httplib::Request& req, httplib::Response& res) {
            auto id = parse_id(req.matches[1]);
            std::lock_guard lock(mutex);
            auto it = id ? posts.find(*id) : posts.end();
            if (it == posts.end()) return reply_error(res, 404, "no such post");
            reply(res, 200, Json{{"body", it->second.body}, {"checksum", it->second.checksum}, {"id", *id}});
        });

        server.Delete(item, [this](const httplib::Request& req, httplib::Response& res) {
            auto id = parse_id(req.matches[1]);
            std::lock_guard lock(mutex);
            if (!id || posts.erase(*id) == 0) return reply_error(res, 404, "no such post");
            reply(res, 200, Json{{"id", *id}});
        });

        server.Put(item, [this](const httplib::Request& req, httplib::Response& res) {
            Json in = Json::parse(req.body, nullptr, false);
            if (in.is_discarded() || !in.is_object() || !in.contains("body") || !in["body"].is_string() ||
                !in.contains("checksum") || !in["checksum"].is_string()) {
                return reply_error(res, 400, "expected {\"body\": string, \"checksum\": string}");
            }
            auto id = parse_id(req.matches[1]);
            std::lock_guard lock(mutex);
            auto it = id ? posts.find(*id) : posts.end();
            if (it == posts.end()) return reply_error(res, 404, "no such post");
            if (in["checksum"].get<std::string>() == it->second.checksum) {
                throw std::logic_error("update checksum matches the stored checksum");
            }
            std::string body = in["body"].get<std::string>();
            if (body.empty()) return reply_error(res, 400, "body must not be empty");
            it->second = Post{body, sha1_hex(body)};
            reply(res, 200, Json{{"body", it->second.body}, {"checksum", it->second.checksum}, {"id", *id}});
        });

        server.set_exception_handler([this](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
            ++errors;
            res.status = 500;
            res.set_content("Internal Server Error", "text/plain");
        });
    }
};

BlogService::BlogService(std::uint16_t port, std::string host) : impl_(std::make_unique<Impl>()) {
    impl_->host = std::move(host);
    impl_->routes();
    impl_->server.set_tcp_nodelay(true);
    impl_->server.set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    if (port == 0) {
        int bound = impl_->server.bind_to_any_port(impl_->host);
        if (bound <= 0) throw Error("cannot bind blog service on " + impl_->host);
        impl_->port = static_cast<std::uint16_t>(bound);
    } else {
        if (!impl_->server.bind_to_port(impl_->host, port)) {
            throw Error("cannot bind blog service on " + impl_->host + ":" + std::to_string(port));
        }
        impl_->port = port;
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

BlogService::~BlogService() { stop(); }

void BlogService::stop() {
    if (!impl_ || !impl_->thread.joinable()) return;
    impl_->server.stop();
    impl_->thread.join();
}

std::uint16_t BlogService::port() const noexcept { return impl_->port; }

const std::string& BlogService::host() const noexcept { return impl_->host; }

std::size_t BlogService::post_count() const {
    std::lock_guard lock(impl_->mutex);
    return impl_->posts.size();
}

std::size_t BlogService::server_errors() const { return impl_->errors.load(); }

std::string_view blog_swagger() { return kBlogSwagger; }

}  // namespace restfuzz
