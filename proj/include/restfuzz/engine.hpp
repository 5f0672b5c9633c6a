// SPDX-License-Identifier: Apache-2.0
#pragma once

// Sequence generation: the length-by-length extend / render / validate loop
// and the BFS, BFS-Fast and RandomWalk search strategies.

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "restfuzz/bucketizer.hpp"
#include "restfuzz/executor.hpp"
#include "restfuzz/grammar.hpp"
#include "restfuzz/http.hpp"
#include "restfuzz/telemetry.hpp"

namespace restfuzz {

enum class Strategy { BFS, BFSFast, RandomWalk };

std::string_view to_string(Strategy strategy);
std::optional<Strategy> parse_strategy(std::string_view text);

struct SequenceStep {
    std::size_t template_index = 0;
    std::size_t rendering_index = 0;
    friend auto operator<=>(const SequenceStep&, const SequenceStep&) = default;
};

struct RequestSequence {
    std::vector<SequenceStep> steps;

    std::size_t size() const noexcept { return steps.size(); }
    friend bool operator==(const RequestSequence&, const RequestSequence&) = default;
};

/// Validated sequences of one length, unique by (template list, rendering list).
class SequenceSet {
public:
    /// The set holding only the empty sequence.
    static SequenceSet initial();

    /// Returns false when an equal sequence is already present. Throws Error
    /// when the length differs from the current members.
    bool add(RequestSequence sequence);

    const std::vector<RequestSequence>& members() const noexcept { return members_; }
    std::size_t size() const noexcept { return members_.size(); }
    bool empty() const noexcept { return members_.empty(); }

private:
    std::vector<RequestSequence> members_;
    std::set<std::vector<SequenceStep>> keys_;
};

/// A validated prefix plus the template appended to it, not yet rendered.
struct PendingSequence {
    RequestSequence prefix;
    std::size_t template_index = 0;
};

struct EngineConfig {
    Strategy strategy = Strategy::BFSFast;
    std::size_t max_length = 3;
    std::optional<std::chrono::milliseconds> time_budget;
    std::optional<std::size_t> test_budget;
    std::size_t combination_cap = kDefaultCombinationCap;
    std::vector<std::string> error_patterns{"5xx"};
    std::uint64_t rng_seed = 0;
    std::size_t worker_count = 1;
    bool no_deps = false;
    bool no_feedback = false;
    /// Set from another thread (e.g. a signal handler) to stop between sequences.
    const std::atomic<bool>* cancel = nullptr;

    /// Throws ConfigError.
    void validate() const;
};

/// True iff every resource type the template consumes is produced by some
/// template of the sequence.
bool dependencies_satisfied(const GrammarProgram& grammar, const RequestSequence& sequence,
                            const RequestTemplate& request);

/// New unrendered sequences of length n+1. An empty result means no
/// (sequence, template) pair satisfies its dependencies.
std::vector<PendingSequence> extend(const SequenceSet& set, const GrammarProgram& grammar, Strategy strategy,
                                    std::mt19937_64& rng);

using TransportFactory = std::function<std::unique_ptr<Transport>()>;

/// Runs a fuzzing session. Throws ConfigError, TargetUnreachable, or
/// MissingDictionaryKind before any test is sent.
FuzzReport run(const EngineConfig& config, const GrammarProgram& grammar, const FuzzingDictionary& dict,
               const TransportFactory& transports, BucketStore& buckets, TelemetrySink& telemetry);

}  // namespace restfuzz
