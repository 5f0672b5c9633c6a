// SPDX-License-Identifier: Apache-2.0
#include "restfuzz/http.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <unistd.h>

#include "restfuzz/errors.hpp"

namespace restfuzz {

namespace {

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

class Socket {
public:
    explicit Socket(int fd) : fd_(fd) {}
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() {
        if (fd_ >= 0) ::close(fd_);
    }
    int get() const { return fd_; }

private:
    int fd_;
};

bool wait_for(int fd, short events, std::chrono::milliseconds timeout) {
    pollfd pfd{fd, events, 0};
    int rc;
    do {
        rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    } while (rc < 0 && errno == EINTR);
    return rc > 0;
}

int connect_to(const ConnectionConfig& config) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* found = nullptr;
    const std::string port = std::to_string(config.port);
    if (int rc = ::getaddrinfo(config.host.c_str(), port.c_str(), &hints, &found); rc != 0) {
        throw TransportFailure(TransportPhase::Connect,
                               "cannot resolve '" + config.host + "': " + ::gai_strerror(rc));
    }
    std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(found, &::freeaddrinfo);
    std::string last_error = "no address";
    for (addrinfo* ai = found; ai != nullptr; ai = ai->ai_next) {
        int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
        if (fd < 0) {
            last_error = std::strerror(errno);
            continue;
        }
        int flags = ::fcntl(fd, F_GETFL, 0);
        ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
        int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
        if (rc != 0 && errno == EINPROGRESS) {
            if (wait_for(fd, POLLOUT, config.connect_timeout)) {
                int err = 0;
                socklen_t len = sizeof(err);
                ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
                rc = err == 0 ? 0 : -1;
                errno = err;
            } else {
                errno = ETIMEDOUT;
            }
        }
        if (rc == 0) {
            return fd;
        }
        last_error = std::strerror(errno);
        ::close(fd);
    }
    throw TransportFailure(TransportPhase::Connect,
                           config.host + ":" + std::to_string(config.port) + ": " + last_error);
}

std::optional<std::size_t> parse_size(std::string_view text, int base) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    std::size_t value = 0;
    for (char c : text) {
        int digit;
        if (c >= '0' && c <= '9') digit = c - '0';
        else if (base == 16 && c >= 'a' && c <= 'f') digit = c - 'a' + 10;
        else if (base == 16 && c >= 'A' && c <= 'F') digit = c - 'A' + 10;
        else return std::nullopt;
        if (value > (std::size_t{1} << 48)) return std::nullopt;
        value = value * static_cast<std::size_t>(base) + static_cast<std::size_t>(digit);
    }
    return value;
}

}  // namespace

std::optional<std::string> HttpExchange::header(std::string_view name) const {
    for (const auto& [k, v] : headers) {
        if (iequals(k, name)) return v;
    }
    return std::nullopt;
}

TokenSource TokenSource::constant(std::string value) {
    TokenSource s;
    s.reader_ = [value = std::move(value)] { return value; };
    return s;
}

TokenSource TokenSource::from_env(std::string variable) {
    TokenSource s;
    s.reader_ = [variable = std::move(variable)] {
        const char* v = std::getenv(variable.c_str());
        if (v == nullptr) throw ConfigError("token environment variable '" + variable + "' is not set");
        return std::string(v);
    };
    return s;
}

TokenSource TokenSource::from_file(std::string path) {
    TokenSource s;
    s.reader_ = [path = std::move(path)] {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read token file '" + path + "'");
        std::string token;
        std::getline(in, token);
        return std::string(trim(token));
    };
    return s;
}

std::string TokenSource::read() const {
    return reader_ ? reader_() : std::string{};
}

std::string ConnectionConfig::host_header() const {
    return port == 80 ? host : host + ":" + std::to_string(port);
}

std::string inject_header(std::string_view request, std::string_view name, std::string_view value) {
    auto end = request.find("\r\n\r\n");
    if (end == std::string_view::npos) {
        throw TransportFailure(TransportPhase::Write, "request has no header terminator");
    }
    std::string out;
    out.reserve(request.size() + name.size() + value.size() + 4);
    out.append(request.substr(0, end + 2));
    out.append(name).append(": ").append(value).append("\r\n");
    out.append(request.substr(end + 2));
    return out;
}

std::string redact_header(std::string_view message, std::string_view name) {
    std::string out;
    auto head_end = message.find("\r\n\r\n");
    std::string_view head = message.substr(0, head_end);
    std::size_t pos = 0;
    while (pos <= head.size()) {
        auto eol = head.find("\r\n", pos);
        if (eol == std::string_view::npos) eol = head.size();
        std::string_view line = head.substr(pos, eol - pos);
        auto colon = line.find(':');
        if (colon != std::string_view::npos && iequals(trim(line.substr(0, colon)), name)) {
            out.append(line.substr(0, colon)).append(": [FILTERED]");
        } else {
            out.append(line);
        }
        if (eol < head.size()) out.append("\r\n");
        pos = eol + 2;
    }
    if (head_end != std::string_view::npos) out.append(message.substr(head_end));
    return out;
}

std::string finalize_request(std::string_view rendered, std::string_view host) {
    auto sep = rendered.find("\r\n\r\n");
    if (sep == std::string_view::npos) {
        throw TransportFailure(TransportPhase::Write, "rendered request has no header terminator");
    }
    std::string_view body = rendered.substr(sep + 4);
    std::string out;
    out.reserve(rendered.size() + host.size() + 48);
    out.append(rendered.substr(0, sep + 2));
    out.append("Host: ").append(host).append("\r\n");
    std::string head(rendered.substr(0, sep + 2));
    std::transform(head.begin(), head.end(), head.begin(), [](unsigned char c) { return std::tolower(c); });
    if (!body.empty() || head.find("\r\ncontent-type:") != std::string::npos) {
        out.append("Content-Length: ").append(std::to_string(body.size())).append("\r\n");
    }
    out.append("\r\n");
    out.append(body);
    return out;
}

std::optional<HttpExchange> parse_response(std::string_view bytes, bool eof, bool head_request,
                                           std::size_t* consumed) {
    auto head_end = bytes.find("\r\n\r\n");
    if (head_end == std::string_view::npos) {
        if (eof) throw TransportFailure(TransportPhase::Frame, "connection closed before end of headers");
        return std::nullopt;
    }
    HttpExchange ex;
    std::string_view head = bytes.substr(0, head_end);
    auto eol = head.find("\r\n");
    std::string_view status_line = head.substr(0, eol);
    if (!status_line.starts_with("HTTP/1.") || status_line.size() < 12 || status_line[8] != ' ') {
        throw TransportFailure(TransportPhase::Frame, "malformed status line '" + std::string(status_line) + "'");
    }
    auto code = parse_size(status_line.substr(9, 3), 10);
    if (!code || *code < 100 || *code > 599) {
        throw TransportFailure(TransportPhase::Frame, "invalid status code in '" + std::string(status_line) + "'");
    }
    ex.status = static_cast<int>(*code);
    ex.reason = status_line.size() > 13 ? std::string(status_line.substr(13)) : std::string{};

    std::size_t pos = eol == std::string_view::npos ? head.size() : eol + 2;
    while (pos < head.size()) {
        auto next = head.find("\r\n", pos);
        if (next == std::string_view::npos) next = head.size();
        std::string_view line = head.substr(pos, next - pos);
        auto colon = line.find(':');
        if (colon == std::string_view::npos) {
            throw TransportFailure(TransportPhase::Frame, "malformed header line '" + std::string(line) + "'");
        }
        ex.headers.emplace_back(std::string(trim(line.substr(0, colon))), std::string(trim(line.substr(colon + 1))));
        pos = next + 2;
    }

    const std::size_t body_start = head_end + 4;
    std::string_view rest = bytes.substr(body_start);
    std::size_t total = body_start;

    bool no_body = head_request || ex.status < 200 || ex.status == 204 || ex.status == 304;
    auto te = ex.header("Transfer-Encoding");
    auto cl = ex.header("Content-Length");
    if (no_body) {
        // nothing to read
    } else if (te && te->find("chunked") != std::string::npos) {
        std::size_t cursor = 0;
        for (;;) {
            auto line_end = rest.find("\r\n", cursor);
            if (line_end == std::string_view::npos) {
                if (eof) throw TransportFailure(TransportPhase::Frame, "truncated chunk header");
                return std::nullopt;
            }
            std::string_view size_text = rest.substr(cursor, line_end - cursor);
            if (auto semi = size_text.find(';'); semi != std::string_view::npos) size_text = size_text.substr(0, semi);
            auto size = parse_size(size_text, 16);
            if (!size) throw TransportFailure(TransportPhase::Frame, "invalid chunk size");
            cursor = line_end + 2;
            if (*size == 0) {
                // Trailer section ends with an empty line.
                for (;;) {
                    auto trailer_end = rest.find("\r\n", cursor);
                    if (trailer_end == std::string_view::npos) {
                        if (eof) throw TransportFailure(TransportPhase::Frame, "truncated chunk trailer");
                        return std::nullopt;
                    }
                    bool empty = trailer_end == cursor;
                    cursor = trailer_end + 2;
                    if (empty) break;
                }
                break;
            }
            if (rest.size() < cursor + *size + 2) {
                if (eof) throw TransportFailure(TransportPhase::Frame, "truncated chunk");
                return std::nullopt;
            }
            ex.body.append(rest.substr(cursor, *size));
            if (rest.substr(cursor + *size, 2) != "\r\n") {
                throw TransportFailure(TransportPhase::Frame, "chunk not terminated by CRLF");
            }
            cursor += *size + 2;
        }
        total += cursor;
    } else if (cl) {
        auto length = parse_size(*cl, 10);
        if (!length) throw TransportFailure(TransportPhase::Frame, "invalid Content-Length '" + *cl + "'");
        if (rest.size() < *length) {
            if (eof) throw TransportFailure(TransportPhase::Frame, "connection closed before full body");
            return std::nullopt;
        }
        ex.body.assign(rest.substr(0, *length));
        total += *length;
    } else {
        if (!eof) return std::nullopt;
        ex.body.assign(rest);
        total += rest.size();
    }
    ex.raw_response.assign(bytes.substr(0, total));
    if (consumed) *consumed = total;
    return ex;
}

HttpExchange send_request(std::string_view request, const ConnectionConfig& config) {
    std::string wire = config.auth ? inject_header(request, config.auth->first, config.auth->second)
                                   : std::string(request);
    const bool head_request = wire.starts_with("HEAD ");
    const auto started = std::chrono::steady_clock::now();
    const auto timestamp = std::chrono::system_clock::now();

    Socket sock(connect_to(config));
    std::size_t written = 0;
    while (written < wire.size()) {
        if (!wait_for(sock.get(), POLLOUT, config.read_timeout)) {
            throw TransportFailure(TransportPhase::Write, "timed out writing request");
        }
        ssize_t n = ::send(sock.get(), wire.data() + written, wire.size() - written, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR || errno == EAGAIN) continue;
            throw TransportFailure(TransportPhase::Write, std::strerror(errno));
        }
        written += static_cast<std::size_t>(n);
    }

    std::string buffer;
    char chunk[16384];
    for (;;) {
        if (auto ex = parse_response(buffer, false, head_request)) {
            ex->request = std::move(wire);
            ex->timestamp = timestamp;
            ex->duration = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - started);
            return std::move(*ex);
        }
        if (!wait_for(sock.get(), POLLIN, config.read_timeout)) {
            throw TransportFailure(TransportPhase::Read, "timed out waiting for response");
        }
        ssize_t n = ::recv(sock.get(), chunk, sizeof(chunk), 0);
        if (n < 0) {
            if (errno == EINTR || errno == EAGAIN) continue;
            throw TransportFailure(TransportPhase::Read, std::strerror(errno));
        }
        if (n == 0) {
            auto ex = parse_response(buffer, true, head_request);
            ex->request = std::move(wire);
            ex->timestamp = timestamp;
            ex->duration = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - started);
            return std::move(*ex);
        }
        buffer.append(chunk, static_cast<std::size_t>(n));
    }
}

SocketTransport::SocketTransport(ConnectionConfig config, std::optional<AuthConfig> auth)
    : config_(std::move(config)), auth_(std::move(auth)) {
    begin_sequence();
}

HttpExchange SocketTransport::send(std::string_view request) {
    return send_request(request, config_);
}

void SocketTransport::begin_sequence() {
    if (auth_ && !auth_->token.empty()) {
        config_.auth = std::make_pair(auth_->header_name, auth_->token.read());
    }
}

bool SocketTransport::reachable() {
    try {
        Socket probe(connect_to(config_));
        return true;
    } catch (const TransportFailure&) {
        return false;
    }
}

std::optional<std::string> SocketTransport::auth_header_name() const {
    if (auth_) return auth_->header_name;
    return std::nullopt;
}

}  // namespace restfuzz
