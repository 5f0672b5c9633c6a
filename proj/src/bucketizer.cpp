// SPDX-License-Identifier: Apache-2.0
#include "restfuzz/bucketizer.hpp"

#include <algorithm>

#include "restfuzz/digest.hpp"
#include "restfuzz/document.hpp"
#include "restfuzz/errors.hpp"
#include "restfuzz/grammar_io.hpp"

namespace restfuzz {

namespace fs = std::filesystem;

std::string bucket_id_for(const std::vector<std::string>& template_ids) {
    std::string joined;
    for (const auto& id : template_ids) {
        joined += id;
        joined += '\n';
    }
    return sha1_hex(joined).substr(0, 16);
}

namespace {

std::string crlf_to_lf(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\r' && i + 1 < text.size() && text[i + 1] == '\n') continue;
        out.push_back(text[i]);
    }
    return out;
}

}  // namespace

std::string format_bucket_trace(const std::vector<HttpExchange>& exchanges, const std::optional<std::string>& redact) {
    std::string out;
    const std::size_t n = exchanges.size();
    for (std::size_t i = 0; i < n; ++i) {
        std::string request = redact ? redact_header(exchanges[i].request, *redact) : exchanges[i].request;
        out += std::to_string(i + 1) + "/" + std::to_string(n) + ": " + crlf_to_lf(request) + "\n\n";
        out += "Received: " + crlf_to_lf(exchanges[i].raw_response) + "\n\n";
    }
    return out;
}

BucketStore::BucketStore(fs::path root, std::optional<std::string> redact)
    : root_(std::move(root)), redact_(std::move(redact)) {
    std::error_code ec;
    fs::create_directories(*root_, ec);
    if (ec) throw StorageFailure("cannot create bucket directory '" + root_->string() + "': " + ec.message());
}

BucketStore::BucketStore(BucketStore&& other) noexcept {
    std::lock_guard lock(other.mutex_);
    buckets_ = std::move(other.buckets_);
    by_sequence_ = std::move(other.by_sequence_);
    root_ = std::move(other.root_);
    redact_ = std::move(other.redact_);
}

RecordResult BucketStore::record(const std::vector<std::string>& bug_sequence, BugInstance instance) {
    if (bug_sequence.empty()) {
        throw Error("cannot record a bug with an empty request sequence");
    }
    std::lock_guard lock(mutex_);
    for (std::size_t len = 1; len <= bug_sequence.size(); ++len) {
        std::vector<std::string> suffix(bug_sequence.end() - static_cast<std::ptrdiff_t>(len), bug_sequence.end());
        if (auto it = by_sequence_.find(suffix); it != by_sequence_.end()) {
            auto& bucket = buckets_[it->second];
            bucket.instances.push_back(std::move(instance));
            persist_instance(bucket, bucket.instances.size() - 1);
            return {bucket.id, false};
        }
    }
    BugBucket bucket{bucket_id_for(bug_sequence), bug_sequence, {}};
    bucket.instances.push_back(std::move(instance));
    by_sequence_.emplace(bug_sequence, buckets_.size());
    buckets_.push_back(std::move(bucket));
    persist_bucket(buckets_.back());
    persist_instance(buckets_.back(), 0);
    return {buckets_.back().id, true};
}

std::optional<BugBucket> BucketStore::get(const std::string& id) const {
    std::lock_guard lock(mutex_);
    for (const auto& b : buckets_) {
        if (b.id == id) return b;
    }
    return std::nullopt;
}

std::vector<BugBucket> BucketStore::buckets() const {
    std::lock_guard lock(mutex_);
    return buckets_;
}

std::vector<std::string> BucketStore::ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& b : buckets_) out.push_back(b.id);
    return out;
}

std::size_t BucketStore::size() const {
    std::lock_guard lock(mutex_);
    return buckets_.size();
}

void BucketStore::persist_bucket(const BugBucket& bucket) const {
    if (!root_) return;
    const fs::path dir = *root_ / bucket.id;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw StorageFailure("cannot create '" + dir.string() + "': " + ec.message());

    write_file(dir / "replay.json", serialize_rendered_sequence(bucket.instances.front().rendered));
    std::string script =
        "#!/bin/sh\n"
        "# Replays bug bucket " + bucket.id + " against a running target.\n"
        "# Usage: replay.sh HOST:PORT\n"
        "exec restfuzz replay --out \"$(dirname \"$0\")/../..\" --bucket " + bucket.id +
        " --target \"${1:-127.0.0.1:8888}\"\n";
    write_file(dir / "replay.sh", script);
    fs::permissions(dir / "replay.sh", fs::perms::owner_exec | fs::perms::group_exec | fs::perms::others_exec,
                    fs::perm_options::add, ec);
}

void BucketStore::persist_instance(const BugBucket& bucket, std::size_t index) const {
    if (!root_) return;
    const fs::path dir = *root_ / bucket.id;
    Document meta = Document::object();
    meta["id"] = bucket.id;
    meta["defining_sequence"] = bucket.defining_sequence;
    meta["instances"] = bucket.instances.size();
    write_file(dir / "bucket.json", meta.dump(2) + "\n");

    const auto& instance = bucket.instances[index];
    std::string trace = "Bug bucket " + bucket.id + "\nDefining sequence:\n";
    for (std::size_t i = 0; i < bucket.defining_sequence.size(); ++i) {
        trace += "  " + std::to_string(i + 1) + ". " + bucket.defining_sequence[i] + "\n";
    }
    trace += "\n" + format_bucket_trace(instance.exchanges, redact_);
    write_file(dir / ("instance_" + std::to_string(index + 1) + ".txt"), trace);
}

BucketStore BucketStore::load(const fs::path& root) {
    BucketStore store;
    if (!fs::exists(root)) return store;
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory() && fs::exists(entry.path() / "bucket.json")) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& dir : dirs) {
        Document meta;
        try {
            meta = Document::parse(read_file(dir / "bucket.json"));
        } catch (const nlohmann::json::exception& e) {
            throw StorageFailure("corrupt bucket metadata in '" + dir.string() + "': " + e.what());
        }
        BugBucket bucket;
        bucket.id = meta.at("id").get<std::string>();
        bucket.defining_sequence = meta.at("defining_sequence").get<std::vector<std::string>>();
        BugInstance first;
        first.rendered = parse_rendered_sequence(read_file(dir / "replay.json"));
        bucket.instances.push_back(std::move(first));
        store.by_sequence_.emplace(bucket.defining_sequence, store.buckets_.size());
        store.buckets_.push_back(std::move(bucket));
    }
    return store;
}

ReplayOutcome replay(const BucketStore& store, const std::string& bucket_id, Executor& executor) {
    auto bucket = store.get(bucket_id);
    if (!bucket) throw BucketNotFound(bucket_id);
    if (!executor.transport().reachable()) {
        throw TargetUnreachable("target is not reachable for replay");
    }
    const auto& rendered = bucket->instances.front().rendered;
    ReplayOutcome outcome;
    outcome.bucket_id = bucket_id;
    outcome.result = executor.execute_sequence(rendered);
    outcome.final_class = outcome.result.final_class;
    outcome.diverged_at = outcome.result.stopped_at;
    outcome.reproduced = outcome.final_class == ResponseClass::Bug && outcome.result.complete(rendered.size());
    return outcome;
}

}  // namespace restfuzz
