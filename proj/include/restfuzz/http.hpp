// SPDX-License-Identifier: Apache-2.0
#pragma once

// Minimal HTTP/1.1 client over POSIX sockets. One TCP connection per
// request; responses are framed by Content-Length, chunked transfer coding,
// or connection close. Redirects are never followed.

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace restfuzz {

using HeaderList = std::vector<std::pair<std::string, std::string>>;

struct HttpExchange {
    std::string request;       // exactly the bytes written to the socket
    int status = 0;
    std::string reason;
    HeaderList headers;
    std::string body;          // decoded (de-chunked) body
    std::string raw_response;  // exactly the bytes read from the socket
    std::chrono::system_clock::time_point timestamp;
    std::chrono::microseconds duration{0};

    std::optional<std::string> header(std::string_view name) const;
};

/// Supplies the auth token; re-evaluated before each sequence.
class TokenSource {
public:
    TokenSource() = default;
    static TokenSource constant(std::string value);
    static TokenSource from_env(std::string variable);
    static TokenSource from_file(std::string path);

    /// Throws ConfigError when the variable or file is missing.
    std::string read() const;
    bool empty() const { return !reader_; }

private:
    std::function<std::string()> reader_;
};

struct AuthConfig {
    std::string header_name = "PRIVATE-TOKEN";
    TokenSource token;
};

struct ConnectionConfig {
    std::string host = "127.0.0.1";
    std::uint16_t port = 80;
    std::chrono::milliseconds connect_timeout{5000};
    std::chrono::milliseconds read_timeout{30000};
    std::optional<std::pair<std::string, std::string>> auth;  // header name, value

    std::string host_header() const;
};

/// Inserts "name: value" as the last header line, before the blank line.
std::string inject_header(std::string_view request, std::string_view name, std::string_view value);

/// Replaces the value of every `name` header with "[FILTERED]".
std::string redact_header(std::string_view message, std::string_view name);

/// Adds the Host header, and Content-Length when the request carries a body
/// (non-empty, or declared by Content-Type), to a rendered request, which must
/// contain the "\r\n\r\n" head/body separator.
std::string finalize_request(std::string_view rendered, std::string_view host);

/// Parses one complete response. Returns nullopt when more bytes are needed
/// (unless `eof`, in which case a truncated message throws TransportFailure
/// with the Frame phase). `consumed` receives the message length.
std::optional<HttpExchange> parse_response(std::string_view bytes, bool eof, bool head_request,
                                           std::size_t* consumed = nullptr);

/// Writes `request` (with the auth header injected, if configured) on a fresh
/// connection and reads one full response. Throws TransportFailure.
HttpExchange send_request(std::string_view request, const ConnectionConfig& config);

class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpExchange send(std::string_view request) = 0;
    /// Called before each sequence execution.
    virtual void begin_sequence() {}
    virtual bool reachable() { return true; }
    virtual std::string host_header() const = 0;
    /// Header to redact in human-readable traces, if any.
    virtual std::optional<std::string> auth_header_name() const { return std::nullopt; }
};

class SocketTransport : public Transport {
public:
    SocketTransport(ConnectionConfig config, std::optional<AuthConfig> auth = std::nullopt);

    HttpExchange send(std::string_view request) override;
    void begin_sequence() override;
    bool reachable() override;
    std::string host_header() const override { return config_.host_header(); }
    std::optional<std::string> auth_header_name() const override;

private:
    ConnectionConfig config_;
    std::optional<AuthConfig> auth_;
};

}  // namespace restfuzz
