// SPDX-License-Identifier: Apache-2.0
// Serves the reference blog-posts service until interrupted.
#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "restfuzz/blog_service.hpp"
#include "restfuzz/errors.hpp"

namespace {
std::atomic<bool> g_stop{false};
extern "C" void on_signal(int) { g_stop.store(true); }
}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reference blog-posts service", "blog_server"};
    std::uint16_t port = 8888;
    std::string host = "127.0.0.1";
    bool print_spec = false;
    app.add_option("--port", port, "listen port (0: any free port)")->capture_default_str();
    app.add_option("--host", host, "listen address")->capture_default_str();
    app.add_flag("--print-spec", print_spec, "print the service's Swagger document and exit");
    CLI11_PARSE(app, argc, argv);

    if (print_spec) {
        std::cout << restfuzz::blog_swagger();
        return 0;
    }
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    try {
        restfuzz::BlogService service(port, host);
        std::cout << "listening on " << service.host() << ":" << service.port() << std::endl;
        while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    } catch (const restfuzz::Error& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 0;
}
