// SPDX-License-Identifier: Apache-2.0
#pragma once

// Bug deduplication by request-type suffix. A new bug joins the bucket whose
// defining sequence equals the shortest matching suffix of the bug's
// template-id sequence; otherwise it opens a new bucket keyed by the whole
// sequence. Renderings and dynamic values never take part in the identity.

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "restfuzz/executor.hpp"
#include "restfuzz/grammar.hpp"
#include "restfuzz/http.hpp"

namespace restfuzz {

struct BugInstance {
    std::vector<RenderedRequest> rendered;  // full sequence, for replay
    std::vector<HttpExchange> exchanges;
    std::chrono::system_clock::time_point timestamp;
};

struct BugBucket {
    std::string id;
    std::vector<std::string> defining_sequence;
    std::vector<BugInstance> instances;
};

/// Stable identifier: first 16 hex digits of SHA-1 over the newline-joined ids.
std::string bucket_id_for(const std::vector<std::string>& template_ids);

struct RecordResult {
    std::string bucket_id;
    bool created = false;
};

/// Thread-safe bucket store, optionally persisted as one directory per bucket:
///   <root>/<id>/bucket.json       id, defining sequence, instance count
///   <root>/<id>/replay.json       rendered requests of the first instance
///   <root>/<id>/instance_<k>.txt  numbered wire trace ("1/3: ...")
///   <root>/<id>/replay.sh         re-runs the bucket through the CLI
class BucketStore {
public:
    BucketStore() = default;
    /// `redact` names the auth header replaced by "[FILTERED]" in traces.
    explicit BucketStore(std::filesystem::path root, std::optional<std::string> redact = std::nullopt);
    BucketStore(BucketStore&& other) noexcept;

    /// Throws Error on an empty sequence and StorageFailure on I/O errors.
    RecordResult record(const std::vector<std::string>& bug_sequence, BugInstance instance);

    std::optional<BugBucket> get(const std::string& id) const;
    std::vector<BugBucket> buckets() const;
    std::vector<std::string> ids() const;
    std::size_t size() const;

    /// Reads every bucket under `root` (first instance only, without exchanges).
    static BucketStore load(const std::filesystem::path& root);

private:
    void persist_bucket(const BugBucket& bucket) const;
    void persist_instance(const BugBucket& bucket, std::size_t index) const;

    mutable std::mutex mutex_;
    std::vector<BugBucket> buckets_;
    std::map<std::vector<std::string>, std::size_t> by_sequence_;
    std::optional<std::filesystem::path> root_;
    std::optional<std::string> redact_;
};

struct ReplayOutcome {
    std::string bucket_id;
    ResponseClass final_class = ResponseClass::Invalid;
    bool reproduced = false;
    /// Prefix step that was Valid at record time but not at replay.
    std::optional<std::size_t> diverged_at;
    SequenceResult result;
};

/// Re-executes the bucket's first instance; consumer slots are re-resolved
/// against the live target. Throws BucketNotFound or TargetUnreachable.
ReplayOutcome replay(const BucketStore& store, const std::string& bucket_id, Executor& executor);

/// Human-readable numbered trace of one sequence execution.
std::string format_bucket_trace(const std::vector<HttpExchange>& exchanges,
                                const std::optional<std::string>& redact);

}  // namespace restfuzz
