// SPDX-License-Identifier: Apache-2.0
#include "restfuzz/telemetry.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "restfuzz/document.hpp"
#include "restfuzz/errors.hpp"

namespace restfuzz {

namespace fs = std::filesystem;

namespace {

constexpr const char* kClasses[] = {"1xx", "2xx", "3xx", "4xx", "5xx"};

std::string csv_quote(std::string_view text) {
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_seconds(double s) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", s);
    return buf;
}

}  // namespace

std::string status_class_of(int status) {
    return std::to_string(status / 100) + "xx";
}

bool FuzzReport::same_outcome(const FuzzReport& o) const {
    return strategy == o.strategy && total_tests == o.total_tests && total_exchanges == o.total_exchanges &&
           status_histogram == o.status_histogram && status_classes == o.status_classes &&
           bug_buckets == o.bug_buckets && bug_instances == o.bug_instances && max_length == o.max_length &&
           per_length == o.per_length && restarts == o.restarts && behavioral_coverage == o.behavioral_coverage &&
           transport_failures == o.transport_failures && unresolved_consumers == o.unresolved_consumers &&
           stop_reason == o.stop_reason;
}

nlohmann::json to_json(const FuzzReport& r) {
    nlohmann::json j;
    j["strategy"] = r.strategy;
    j["total_tests"] = r.total_tests;
    j["total_exchanges"] = r.total_exchanges;
    j["status_histogram"] = nlohmann::json::object();
    for (const auto& [code, n] : r.status_histogram) j["status_histogram"][std::to_string(code)] = n;
    j["status_classes"] = r.status_classes;
    j["bug_buckets"] = r.bug_buckets;
    j["bug_instances"] = r.bug_instances;
    j["max_length"] = r.max_length;
    j["per_length"] = nlohmann::json::array();
    for (const auto& s : r.per_length) {
        j["per_length"].push_back({{"length", s.length},
                                   {"tests", s.tests},
                                   {"seqset_size", s.seqset_size},
                                   {"dynamic_objects", s.dynamic_objects}});
    }
    j["restarts"] = r.restarts;
    j["behavioral_coverage"] = r.behavioral_coverage;
    j["transport_failures"] = r.transport_failures;
    j["unresolved_consumers"] = r.unresolved_consumers;
    j["stop_reason"] = r.stop_reason;
    j["elapsed_seconds"] = r.elapsed_seconds;
    return j;
}

FuzzReport report_from_json(const nlohmann::json& j) {
    FuzzReport r;
    r.strategy = j.at("strategy").get<std::string>();
    r.total_tests = j.at("total_tests").get<std::size_t>();
    r.total_exchanges = j.at("total_exchanges").get<std::size_t>();
    for (const auto& [code, n] : j.at("status_histogram").items()) r.status_histogram[std::stoi(code)] = n.get<std::size_t>();
    r.status_classes = j.at("status_classes").get<std::map<std::string, std::size_t>>();
    r.bug_buckets = j.at("bug_buckets").get<std::vector<std::string>>();
    r.bug_instances = j.at("bug_instances").get<std::size_t>();
    r.max_length = j.at("max_length").get<std::size_t>();
    for (const auto& s : j.at("per_length")) {
        r.per_length.push_back({s.at("length").get<std::size_t>(), s.at("tests").get<std::size_t>(),
                                s.at("seqset_size").get<std::size_t>(), s.at("dynamic_objects").get<std::size_t>()});
    }
    r.restarts = j.at("restarts").get<std::size_t>();
    r.behavioral_coverage = j.at("behavioral_coverage").get<std::size_t>();
    r.transport_failures = j.value("transport_failures", std::size_t{0});
    r.unresolved_consumers = j.value("unresolved_consumers", std::size_t{0});
    r.stop_reason = j.at("stop_reason").get<std::string>();
    r.elapsed_seconds = j.value("elapsed_seconds", 0.0);
    return r;
}

TelemetrySink::TelemetrySink() : start_(std::chrono::steady_clock::now()) {}

TelemetrySink::TelemetrySink(fs::path out_dir, std::optional<std::string> redact)
    : start_(std::chrono::steady_clock::now()), redact_(std::move(redact)), to_disk_(true) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    events_log_.open(out_dir / "events.csv", std::ios::trunc);
    raw_log_.open(out_dir / "network.raw", std::ios::binary | std::ios::trunc);
    human_log_.open(out_dir / "network.log", std::ios::binary | std::ios::trunc);
    if (ec || !events_log_ || !raw_log_ || !human_log_) {
        degrade("cannot open trace files under '" + out_dir.string() + "'");
        return;
    }
    events_log_ << "elapsed_s,status,length,test_index,exchange_index,template_id\n";
}

void TelemetrySink::degrade(const std::string& why) {
    if (!degraded_) {
        spdlog::warn("telemetry: {}; keeping traces in memory only", why);
    }
    degraded_ = true;
    events_log_.close();
    raw_log_.close();
    human_log_.close();
}

void TelemetrySink::record_exchange(const HttpExchange& exchange, const ExchangeContext& context) {
    std::lock_guard lock(mutex_);
    TimelineEvent event;
    event.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    if (!events_.empty()) event.elapsed_s = std::max(event.elapsed_s, events_.back().elapsed_s);
    event.status = exchange.status;
    event.length = context.length;
    event.test_index = context.test_index;
    event.exchange_index = events_.size() + 1;
    event.template_id = context.template_id;

    if (to_disk_ && !degraded_) {
        events_log_ << format_seconds(event.elapsed_s) << ',' << event.status << ',' << event.length << ','
                    << event.test_index << ',' << event.exchange_index << ',' << csv_quote(event.template_id)
                    << '\n';
        raw_log_ << "REQUEST " << exchange.request.size() << '\n'
                 << exchange.request << "\nRESPONSE " << exchange.raw_response.size() << '\n'
                 << exchange.raw_response << '\n';
        std::string shown = redact_ ? redact_header(exchange.request, *redact_) : exchange.request;
        human_log_ << "Sending: " << shown << "\n\nReceived: " << exchange.raw_response << "\n\n";
        if (!events_log_ || !raw_log_ || !human_log_) {
            degrade("write to trace files failed");
        }
    }
    events_.push_back(std::move(event));
}

std::vector<TimelineEvent> TelemetrySink::timeline() const {
    std::lock_guard lock(mutex_);
    auto out = events_;
    std::stable_sort(out.begin(), out.end(),
                     [](const TimelineEvent& a, const TimelineEvent& b) { return a.elapsed_s < b.elapsed_s; });
    return out;
}

std::map<int, std::size_t> TelemetrySink::status_histogram() const {
    std::lock_guard lock(mutex_);
    std::map<int, std::size_t> out;
    for (const auto& e : events_) ++out[e.status];
    return out;
}

std::size_t TelemetrySink::exchange_count() const {
    std::lock_guard lock(mutex_);
    return events_.size();
}

std::size_t TelemetrySink::behavioral_coverage() const {
    std::lock_guard lock(mutex_);
    std::set<std::pair<std::string, std::string>> pairs;
    for (const auto& e : events_) pairs.emplace(e.template_id, status_class_of(e.status));
    return pairs.size();
}

bool TelemetrySink::degraded() const {
    std::lock_guard lock(mutex_);
    return degraded_;
}

void TelemetrySink::flush() {
    std::lock_guard lock(mutex_);
    if (!to_disk_ || degraded_) return;
    events_log_.flush();
    raw_log_.flush();
    human_log_.flush();
}

std::string status_timeline_csv(const std::vector<TimelineEvent>& timeline) {
    std::string out = "elapsed_s,1xx,2xx,3xx,4xx,5xx\n";
    std::size_t counts[5] = {0, 0, 0, 0, 0};
    for (const auto& e : timeline) {
        int cls = e.status / 100;
        if (cls >= 1 && cls <= 5) ++counts[cls - 1];
        out += format_seconds(e.elapsed_s);
        for (auto c : counts) out += "," + std::to_string(c);
        out += '\n';
    }
    return out;
}

std::string length_stats_csv(const FuzzReport& report) {
    std::string out = "length,tests,seqset_size,dynamic_objects\n";
    for (const auto& s : report.per_length) {
        out += std::to_string(s.length) + "," + std::to_string(s.tests) + "," + std::to_string(s.seqset_size) + "," +
               std::to_string(s.dynamic_objects) + "\n";
    }
    return out;
}

std::string summary_text(const FuzzReport& r) {
    std::ostringstream out;
    out << "strategy:            " << r.strategy << "\n"
        << "stop reason:         " << r.stop_reason << "\n"
        << "elapsed seconds:     " << format_seconds(r.elapsed_seconds) << "\n"
        << "tests executed:      " << r.total_tests << "\n"
        << "requests sent:       " << r.total_exchanges << "\n"
        << "max sequence length: " << r.max_length << "\n"
        << "restarts:            " << r.restarts << "\n"
        << "behavioral coverage: " << r.behavioral_coverage << "\n"
        << "transport failures:  " << r.transport_failures << "\n"
        << "status classes:";
    for (const auto* cls : kClasses) {
        auto it = r.status_classes.find(cls);
        out << " " << cls << "=" << (it == r.status_classes.end() ? 0 : it->second);
    }
    out << "\nstatus histogram:";
    for (const auto& [code, n] : r.status_histogram) out << " " << code << "=" << n;
    out << "\nbug buckets (" << r.bug_buckets.size() << ", " << r.bug_instances << " instances):\n";
    for (const auto& id : r.bug_buckets) out << "  " << id << "\n";
    return out.str();
}

void emit_report(const fs::path& out_dir, const std::vector<TimelineEvent>& timeline, const FuzzReport& report) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw StorageFailure("cannot create '" + out_dir.string() + "': " + ec.message());
    write_file(out_dir / "status_timeline.csv", status_timeline_csv(timeline));
    write_file(out_dir / "length_stats.csv", length_stats_csv(report));
    write_file(out_dir / "summary.txt", summary_text(report));
    write_file(out_dir / "report.json", to_json(report).dump(2) + "\n");
}

std::vector<TimelineEvent> load_events(const fs::path& events_csv) {
    std::istringstream in(read_file(events_csv));
    std::vector<TimelineEvent> out;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        TimelineEvent e;
        std::size_t pos = 0;
        auto field = [&]() {
            auto comma = line.find(',', pos);
            if (comma == std::string::npos) throw StorageFailure("truncated events.csv row: " + line);
            std::string f = line.substr(pos, comma - pos);
            pos = comma + 1;
            return f;
        };
        try {
            e.elapsed_s = std::stod(field());
            e.status = std::stoi(field());
            e.length = std::stoul(field());
            e.test_index = std::stoul(field());
            e.exchange_index = std::stoul(field());
        } catch (const std::logic_error&) {
            throw StorageFailure("malformed events.csv row: " + line);
        }
        std::string rest = line.substr(pos);
        if (rest.size() >= 2 && rest.front() == '"' && rest.back() == '"') {
            rest = rest.substr(1, rest.size() - 2);
            std::string unquoted;
            for (std::size_t i = 0; i < rest.size(); ++i) {
                unquoted += rest[i];
                if (rest[i] == '"' && i + 1 < rest.size() && rest[i + 1] == '"') ++i;
            }
            rest = unquoted;
        }
        e.template_id = rest;
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> load_raw_trace(const fs::path& raw) {
    const std::string data = read_file(raw);
    std::vector<std::pair<std::string, std::string>> out;
    std::size_t pos = 0;
    auto block = [&](std::string_view tag) {
        if (data.compare(pos, tag.size(), tag) != 0) throw StorageFailure("corrupt raw trace");
        pos += tag.size();
        auto eol = data.find('\n', pos);
        if (eol == std::string::npos) throw StorageFailure("corrupt raw trace");
        std::size_t n = std::stoul(data.substr(pos, eol - pos));
        pos = eol + 1;
        if (pos + n + 1 > data.size()) throw StorageFailure("truncated raw trace");
        std::string bytes = data.substr(pos, n);
        pos += n + 1;
        return bytes;
    };
    while (pos < data.size()) {
        std::string request = block("REQUEST ");
        std::string response = block("RESPONSE ");
        out.emplace_back(std::move(request), std::move(response));
    }
    return out;
}

}  // namespace restfuzz
