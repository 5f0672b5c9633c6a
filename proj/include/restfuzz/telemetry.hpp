// SPDX-License-Identifier: Apache-2.0
#pragma once

// Run telemetry: a status timeline of every exchange, raw and human-readable
// wire traces, and the report files emitted at the end of a run.
//
// Files written under the output directory:
//   events.csv           elapsed_s,status,length,test_index,exchange_index,template_id
//   network.raw          exact wire bytes, "REQUEST <n>\n<bytes>\nRESPONSE <m>\n<bytes>\n"
//   network.log          "Sending: ..." / "Received: ..." with the auth value redacted
//   status_timeline.csv  elapsed_s,1xx,2xx,3xx,4xx,5xx (cumulative)
//   length_stats.csv     length,tests,seqset_size,dynamic_objects
//   summary.txt          totals, histogram and bug bucket ids
//   report.json          the FuzzReport

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "restfuzz/http.hpp"

namespace restfuzz {

struct TimelineEvent {
    double elapsed_s = 0.0;
    int status = 0;
    std::size_t length = 0;
    std::size_t test_index = 0;
    std::size_t exchange_index = 0;  // strictly increasing
    std::string template_id;
};

struct ExchangeContext {
    std::size_t length = 0;
    std::size_t test_index = 0;
    std::string template_id;
};

struct LengthStats {
    std::size_t length = 0;
    std::size_t tests = 0;
    std::size_t seqset_size = 0;
    std::size_t dynamic_objects = 0;
    friend bool operator==(const LengthStats&, const LengthStats&) = default;
};

struct FuzzReport {
    std::string strategy;
    std::size_t total_tests = 0;
    std::size_t total_exchanges = 0;
    std::map<int, std::size_t> status_histogram;
    std::map<std::string, std::size_t> status_classes;  // "2xx" -> count
    std::vector<std::string> bug_buckets;               // creation order
    std::size_t bug_instances = 0;
    std::size_t max_length = 0;
    std::vector<LengthStats> per_length;
    std::size_t restarts = 0;
    std::size_t behavioral_coverage = 0;  // distinct (template id, status class) pairs
    std::size_t transport_failures = 0;
    std::size_t unresolved_consumers = 0;
    std::string stop_reason;
    double elapsed_seconds = 0.0;

    /// Equality on everything except wall-clock time.
    bool same_outcome(const FuzzReport& other) const;
};

nlohmann::json to_json(const FuzzReport& report);
FuzzReport report_from_json(const nlohmann::json& j);

std::string status_class_of(int status);

/// Thread-safe sink for exchanges. Without a directory, or after a disk
/// failure, it keeps everything in memory.
class TelemetrySink {
public:
    TelemetrySink();
    explicit TelemetrySink(std::filesystem::path out_dir, std::optional<std::string> redact = std::nullopt);

    void record_exchange(const HttpExchange& exchange, const ExchangeContext& context);

    /// Events ordered by elapsed time (stable for ties).
    std::vector<TimelineEvent> timeline() const;
    std::map<int, std::size_t> status_histogram() const;
    std::size_t exchange_count() const;
    std::size_t behavioral_coverage() const;
    bool degraded() const;
    void flush();

private:
    void degrade(const std::string& why);

    mutable std::mutex mutex_;
    std::chrono::steady_clock::time_point start_;
    std::vector<TimelineEvent> events_;
    std::optional<std::string> redact_;
    std::ofstream events_log_;
    std::ofstream raw_log_;
    std::ofstream human_log_;
    bool to_disk_ = false;
    bool degraded_ = false;
};

/// Writes status_timeline.csv, length_stats.csv, summary.txt and report.json.
/// Throws StorageFailure.
void emit_report(const std::filesystem::path& out_dir, const std::vector<TimelineEvent>& timeline,
                 const FuzzReport& report);

std::string status_timeline_csv(const std::vector<TimelineEvent>& timeline);
std::string length_stats_csv(const FuzzReport& report);
std::string summary_text(const FuzzReport& report);

/// Reads events.csv back into a timeline.
std::vector<TimelineEvent> load_events(const std::filesystem::path& events_csv);

/// Reads network.raw back into (request, response) byte pairs.
std::vector<std::pair<std::string, std::string>> load_raw_trace(const std::filesystem::path& raw);

}  // namespace restfuzz
