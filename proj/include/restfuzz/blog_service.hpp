// SPDX-License-Identifier: Apache-2.0
#pragma once

// In-process blog-posts service used as the fuzzing target in tests. It
// carries one deliberate bug: a PUT whose checksum equals the stored
// checksum of the post raises an unhandled error, served as 500.
//
//   GET    /api/blog/posts/      200 [{body, id}, ...]
//   POST   /api/blog/posts/      201 {body, id}; 400 on a malformed or empty body
//   GET    /api/blog/posts/{id}  200 {body, checksum, id}; 404
//   DELETE /api/blog/posts/{id}  200; 404
//   PUT    /api/blog/posts/{id}  200 {body, checksum, id}; 400; 404; 500 (planted)

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

namespace restfuzz {

class BlogService {
public:
    /// Starts serving on 127.0.0.1:`port` (0 picks a free port). Throws Error
    /// when the port cannot be bound.
    explicit BlogService(std::uint16_t port = 0, std::string host = "127.0.0.1");
    ~BlogService();
    BlogService(const BlogService&) = delete;
    BlogService& operator=(const BlogService&) = delete;

    std::uint16_t port() const noexcept;
    const std::string& host() const noexcept;
    std::size_t post_count() const;
    /// Number of 500 responses served so far.
    std::size_t server_errors() const;
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// The service's Swagger 2.0 document (YAML).
std::string_view blog_swagger();

}  // namespace restfuzz
