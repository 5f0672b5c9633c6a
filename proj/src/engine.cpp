// SPDX-License-Identifier: Apache-2.0
#include "restfuzz/engine.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "restfuzz/errors.hpp"

namespace restfuzz {

std::string_view to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::BFS: return "bfs";
        case Strategy::BFSFast: return "bfs-fast";
        case Strategy::RandomWalk: return "random-walk";
    }
    return "?";
}

std::optional<Strategy> parse_strategy(std::string_view text) {
    if (text == "bfs") return Strategy::BFS;
    if (text == "bfs-fast" || text == "bfsfast") return Strategy::BFSFast;
    if (text == "random-walk" || text == "randomwalk") return Strategy::RandomWalk;
    return std::nullopt;
}

SequenceSet SequenceSet::initial() {
    SequenceSet set;
    set.add(RequestSequence{});
    return set;
}

bool SequenceSet::add(RequestSequence sequence) {
    if (!members_.empty() && members_.front().size() != sequence.size()) {
        throw Error("sequence set members must share one length");
    }
    if (!keys_.insert(sequence.steps).second) return false;
    members_.push_back(std::move(sequence));
    return true;
}

void EngineConfig::validate() const {
    if (max_length < 1) throw ConfigError("max length must be at least 1");
    if (worker_count < 1) throw ConfigError("worker count must be at least 1");
    if (combination_cap < 1) throw ConfigError("combination cap must be at least 1");
    if (time_budget && time_budget->count() <= 0) throw ConfigError("time budget must be positive");
    if (test_budget && *test_budget == 0) throw ConfigError("test budget must be positive");
    if (strategy == Strategy::RandomWalk && !time_budget && !test_budget) {
        throw ConfigError("random-walk runs until a budget expires; give a time or test budget");
    }
    StatusClassifier check(error_patterns);
    (void)check;
}

bool dependencies_satisfied(const GrammarProgram& grammar, const RequestSequence& sequence,
                            const RequestTemplate& request) {
    const ResourceSet needed = consumes(request);
    if (needed.empty()) return true;
    ResourceSet available;
    for (const auto& step : sequence.steps) {
        const auto produced = produces(grammar.templates.at(step.template_index));
        available.insert(produced.begin(), produced.end());
    }
    return std::includes(available.begin(), available.end(), needed.begin(), needed.end());
}

namespace {

ResourceSet produced_by(const RequestSequence& sequence, const std::vector<ResourceSet>& produces_of) {
    ResourceSet available;
    for (const auto& step : sequence.steps) {
        const auto& p = produces_of[step.template_index];
        available.insert(p.begin(), p.end());
    }
    return available;
}

}  // namespace

std::vector<PendingSequence> extend(const SequenceSet& set, const GrammarProgram& grammar, Strategy strategy,
                                    std::mt19937_64& rng) {
    const auto& templates = grammar.templates;
    std::vector<PendingSequence> out;
    if (templates.empty() || set.empty()) return out;

    std::vector<ResourceSet> consumes_of, produces_of;
    for (const auto& t : templates) {
        consumes_of.push_back(consumes(t));
        produces_of.push_back(produces(t));
    }
    std::vector<ResourceSet> available;
    for (const auto& seq : set.members()) available.push_back(produced_by(seq, produces_of));

    auto ok = [&](std::size_t s, std::size_t t) {
        const auto& need = consumes_of[t];
        return std::includes(available[s].begin(), available[s].end(), need.begin(), need.end());
    };

    switch (strategy) {
        case Strategy::BFS:
            for (std::size_t s = 0; s < set.size(); ++s) {
                for (std::size_t t = 0; t < templates.size(); ++t) {
                    if (ok(s, t)) out.push_back({set.members()[s], t});
                }
            }
            break;
        case Strategy::BFSFast:
            for (std::size_t t = 0; t < templates.size(); ++t) {
                for (std::size_t s = 0; s < set.size(); ++s) {
                    if (ok(s, t)) {
                        out.push_back({set.members()[s], t});
                        break;
                    }
                }
            }
            break;
        case Strategy::RandomWalk: {
            bool any = false;
            for (std::size_t s = 0; s < set.size() && !any; ++s) {
                for (std::size_t t = 0; t < templates.size() && !any; ++t) any = ok(s, t);
            }
            if (!any) break;
            std::uniform_int_distribution<std::size_t> pick_seq(0, set.size() - 1);
            std::uniform_int_distribution<std::size_t> pick_template(0, templates.size() - 1);
            for (;;) {
                const std::size_t s = pick_seq(rng);
                const std::size_t t = pick_template(rng);
                if (ok(s, t)) {
                    out.push_back({set.members()[s], t});
                    break;
                }
            }
            break;
        }
    }
    return out;
}

namespace {

enum class StopCode : int { None = 0, TimeBudget, TestBudget, Cancelled };

const char* stop_name(StopCode code) {
    switch (code) {
        case StopCode::TimeBudget: return "time_budget";
        case StopCode::TestBudget: return "test_budget";
        case StopCode::Cancelled: return "cancelled";
        case StopCode::None: break;
    }
    return "none";
}

struct PartitionResult {
    std::vector<RequestSequence> retained;
    std::size_t tests = 0;
    std::size_t objects = 0;
    std::size_t transport_failures = 0;
    std::size_t unresolved = 0;
};

class Engine {
public:
    Engine(const EngineConfig& config, const GrammarProgram& grammar, const FuzzingDictionary& dict,
           const TransportFactory& transports, BucketStore& buckets, TelemetrySink& telemetry)
        : config_(config),
          grammar_(config.no_deps ? without_dependencies(grammar) : grammar),
          dict_(dict),
          transports_(transports),
          buckets_(buckets),
          telemetry_(telemetry),
          rng_(config.rng_seed) {}

    FuzzReport run() {
        config_.validate();
        for (const auto& t : grammar_.templates) {
            renderings_.push_back(render_combinations(t, dict_, config_.combination_cap));
        }
        for (std::size_t w = 0; w < config_.worker_count; ++w) {
            auto transport = transports_();
            if (!transport) throw ConfigError("transport factory returned no transport");
            transports_owned_.push_back(std::move(transport));
            executors_.push_back(
                std::make_unique<Executor>(*transports_owned_.back(), StatusClassifier(config_.error_patterns)));
        }
        if (!transports_owned_.front()->reachable()) {
            throw TargetUnreachable("target " + transports_owned_.front()->host_header() + " is not reachable");
        }
        start_ = std::chrono::steady_clock::now();

        std::string stop_reason;
        if (config_.strategy == Strategy::RandomWalk) {
            stop_reason = random_walk();
        } else {
            stop_reason = breadth_first();
        }
        telemetry_.flush();
        return report(stop_reason);
    }

private:
    StopCode check_stop() const {
        if (config_.cancel && config_.cancel->load()) return StopCode::Cancelled;
        if (config_.test_budget && tests_.load() >= *config_.test_budget) return StopCode::TestBudget;
        if (config_.time_budget && std::chrono::steady_clock::now() - start_ >= *config_.time_budget) {
            return StopCode::TimeBudget;
        }
        return StopCode::None;
    }

    std::string breadth_first() {
        SequenceSet set = SequenceSet::initial();
        for (std::size_t n = 1; n <= config_.max_length; ++n) {
            if (auto code = check_stop(); code != StopCode::None) return stop_name(code);
            auto pending = extend(set, grammar_, config_.strategy, rng_);
            if (pending.empty()) return "exhausted";
            set = render_and_validate(pending, n);
            if (stop_ != StopCode::None) return stop_name(stop_);
        }
        return "max_length";
    }

    std::string random_walk() {
        SequenceSet set = SequenceSet::initial();
        std::size_t n = 0;
        for (;;) {
            if (auto code = check_stop(); code != StopCode::None) return stop_name(code);
            auto pending = extend(set, grammar_, Strategy::RandomWalk, rng_);
            if (pending.empty()) {
                if (n == 0) return "exhausted";
                ++restarts_;
                set = SequenceSet::initial();
                n = 0;
                continue;
            }
            ++n;
            set = render_and_validate(pending, n);
            if (stop_ != StopCode::None) return stop_name(stop_);
        }
    }

    LengthStats& stats_for(std::size_t n) {
        while (per_length_.size() < n) per_length_.push_back({per_length_.size() + 1, 0, 0, 0});
        return per_length_[n - 1];
    }

    SequenceSet render_and_validate(const std::vector<PendingSequence>& pending, std::size_t n) {
        std::vector<std::size_t> base(pending.size());
        std::size_t next = tests_.load();
        for (std::size_t k = 0; k < pending.size(); ++k) {
            base[k] = next;
            next += renderings_[pending[k].template_index].size();
        }

        const std::size_t workers = std::min(config_.worker_count, std::max<std::size_t>(pending.size(), 1));
        std::vector<PartitionResult> parts(workers);
        if (workers == 1) {
            process(pending, 0, pending.size(), base, n, *executors_[0], parts[0]);
        } else {
            std::vector<std::thread> threads;
            std::vector<std::exception_ptr> errors(workers);
            const std::size_t chunk = (pending.size() + workers - 1) / workers;
            for (std::size_t w = 0; w < workers; ++w) {
                const std::size_t lo = std::min(pending.size(), w * chunk);
                const std::size_t hi = std::min(pending.size(), lo + chunk);
                threads.emplace_back([&, w, lo, hi] {
                    try {
                        process(pending, lo, hi, base, n, *executors_[w], parts[w]);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
            }
            for (auto& t : threads) t.join();
            for (auto& e : errors) {
                if (e) std::rethrow_exception(e);
            }
        }

        SequenceSet out;
        auto& stats = stats_for(n);
        for (auto& part : parts) {
            for (auto& seq : part.retained) out.add(std::move(seq));
            stats.tests += part.tests;
            stats.dynamic_objects += part.objects;
            transport_failures_ += part.transport_failures;
            unresolved_ += part.unresolved;
            if (part.tests > 0) max_length_ = std::max(max_length_, n);
        }
        stats.seqset_size = std::max(stats.seqset_size, out.size());
        return out;
    }

    void process(const std::vector<PendingSequence>& pending, std::size_t lo, std::size_t hi,
                 const std::vector<std::size_t>& base, std::size_t n, Executor& executor, PartitionResult& part) {
        std::vector<const RenderedRequest*> sequence;
        for (std::size_t k = lo; k < hi; ++k) {
            const auto& p = pending[k];
            const auto& last = renderings_[p.template_index];
            for (std::size_t r = 0; r < last.size(); ++r) {
                if (auto code = check_stop(); code != StopCode::None) {
                    std::lock_guard lock(stop_mutex_);
                    if (stop_ == StopCode::None) stop_ = code;
                    return;
                }
                sequence.clear();
                for (const auto& step : p.prefix.steps) {
                    sequence.push_back(&renderings_[step.template_index][step.rendering_index]);
                }
                sequence.push_back(&last[r]);
                const std::size_t test_index = base[k] + r + 1;
                execute_one(executor, sequence, test_index, n, p, r, part);
            }
        }
    }

    void execute_one(Executor& executor, const std::vector<const RenderedRequest*>& sequence,
                     std::size_t test_index, std::size_t n, const PendingSequence& p, std::size_t r,
                     PartitionResult& part) {
        executor.set_observer([&](const HttpExchange& exchange, std::size_t step, std::size_t length) {
            telemetry_.record_exchange(exchange, {length, test_index, sequence[step]->template_id});
        });
        ++tests_;
        ++part.tests;

        SequenceResult result;
        bool failed = false;
        try {
            result = executor.execute_sequence(std::span<const RenderedRequest* const>(sequence));
        } catch (const TransportFailure& e) {
            spdlog::warn("test {}: transport failure: {}", test_index, e.what());
            ++part.transport_failures;
            failed = true;
        } catch (const UnresolvableConsumer& e) {
            spdlog::warn("test {}: {}", test_index, e.what());
            ++part.unresolved;
            failed = true;
        }
        part.objects += result.objects_produced;

        const bool valid = !failed && result.final_class == ResponseClass::Valid && result.complete(n);
        if (!valid && !failed && !result.steps.empty()) {
            spdlog::debug("test {}: {} -> {}", test_index, result.steps.back().template_id,
                          result.steps.back().exchange.status);
        }
        if (!failed && result.final_class == ResponseClass::Bug) forward_bug(sequence, result);
        if (valid || config_.no_feedback) {
            RequestSequence kept = p.prefix;
            kept.steps.push_back({p.template_index, r});
            part.retained.push_back(std::move(kept));
        }
    }

    void forward_bug(const std::vector<const RenderedRequest*>& sequence, const SequenceResult& result) {
        std::vector<std::string> ids;
        BugInstance instance;
        instance.timestamp = std::chrono::system_clock::now();
        for (std::size_t i = 0; i < result.steps.size(); ++i) {
            ids.push_back(result.steps[i].template_id);
            instance.rendered.push_back(*sequence[i]);
            instance.exchanges.push_back(result.steps[i].exchange);
        }
        auto recorded = buckets_.record(ids, std::move(instance));
        if (recorded.created) spdlog::info("new bug bucket {} ({} requests)", recorded.bucket_id, ids.size());
    }

    FuzzReport report(const std::string& stop_reason) const {
        FuzzReport r;
        r.strategy = std::string(to_string(config_.strategy));
        r.total_tests = tests_.load();
        r.total_exchanges = telemetry_.exchange_count();
        r.status_histogram = telemetry_.status_histogram();
        for (const auto& [code, count] : r.status_histogram) r.status_classes[status_class_of(code)] += count;
        for (const auto& bucket : buckets_.buckets()) {
            r.bug_buckets.push_back(bucket.id);
            r.bug_instances += bucket.instances.size();
        }
        r.max_length = max_length_;
        r.per_length = per_length_;
        r.restarts = restarts_;
        r.behavioral_coverage = telemetry_.behavioral_coverage();
        r.transport_failures = transport_failures_;
        r.unresolved_consumers = unresolved_;
        r.stop_reason = stop_reason;
        r.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        return r;
    }

    const EngineConfig& config_;
    GrammarProgram grammar_;
    const FuzzingDictionary& dict_;
    const TransportFactory& transports_;
    BucketStore& buckets_;
    TelemetrySink& telemetry_;
    std::mt19937_64 rng_;

    std::vector<std::vector<RenderedRequest>> renderings_;
    std::vector<std::unique_ptr<Transport>> transports_owned_;
    std::vector<std::unique_ptr<Executor>> executors_;
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();

    std::atomic<std::size_t> tests_{0};
    std::mutex stop_mutex_;
    StopCode stop_ = StopCode::None;
    std::vector<LengthStats> per_length_;
    std::size_t max_length_ = 0;
    std::size_t restarts_ = 0;
    std::size_t transport_failures_ = 0;
    std::size_t unresolved_ = 0;
};

}  // namespace

FuzzReport run(const EngineConfig& config, const GrammarProgram& grammar, const FuzzingDictionary& dict,
               const TransportFactory& transports, BucketStore& buckets, TelemetrySink& telemetry) {
    Engine engine(config, grammar, dict, transports, buckets, telemetry);
    return engine.run();
}

}  // namespace restfuzz
