#include "hysmc/smc.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "hysmc/rng.hpp"

namespace hysmc {

long sample_size(double delta, double alpha) {
    if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
    double n = std::log(alpha) / std::log1p(-delta);
    return static_cast<long>(std::ceil(n - 1e-12));
}

namespace {

constexpr long kNoIndex = std::numeric_limits<long>::max();

struct SharedRun {
    std::atomic<long> next_index{1};
    std::atomic<long> first_violation{kNoIndex};
    std::atomic<long> first_error{kNoIndex};
    std::mutex mutex;
    std::string error_message;
    std::vector<char> satisfied;          // by logical index - 1
    std::vector<double> sample_seconds;   // by logical index - 1
};

}  // namespace

Verdict run_smc(const HybridAutomaton& H, const BltlFormula& psi, const SmcConfig& cfg,
                const SamplerConfig& sampler_cfg) {
    long N = sample_size(cfg.delta, cfg.alpha);
    long psi_horizon = horizon(psi);
    if (psi_horizon > sampler_cfg.horizon)
        throw ValidationError("formula horizon " + std::to_string(psi_horizon) +
                              " exceeds the trajectory horizon K=" +
                              std::to_string(sampler_cfg.horizon));

    SamplerConfig scfg = sampler_cfg;
    if (has_quantitative_atoms(psi)) {
        scfg.robust = true;
        if (scfg.avoid.empty()) scfg.avoid = constant_sets(psi, H.dimension());
    }

    int threads = cfg.threads;
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    threads = static_cast<int>(std::min<long>(threads, N));

    SharedRun shared;
    shared.satisfied.assign(N, 0);
    shared.sample_seconds.assign(N, 0.0);

    auto worker = [&]() {
        TrajectorySampler sampler(H, scfg);
        for (;;) {
            long index = shared.next_index.fetch_add(1);
            if (index > N) return;
            // Indices past an already-known violation cannot change the
            // verdict; indices before it still can.
            if (index > shared.first_violation.load()) return;
            if (index > shared.first_error.load()) return;

            auto t0 = std::chrono::steady_clock::now();
            try {
                sampler.reset(RngStream::substream(cfg.seed, static_cast<std::uint64_t>(index)));
                OnTheFlyChecker checker(psi, H);
                OnTheFlyChecker::State state = checker.update(sampler.current());
                while (state == OnTheFlyChecker::State::Unknown && sampler.step())
                    state = checker.update(sampler.current());
                if (state == OnTheFlyChecker::State::Unknown)
                    state = checker.finalize(sampler.current());

                bool sat = state == OnTheFlyChecker::State::Sat;
                shared.satisfied[index - 1] = sat ? 1 : 0;
                if (!sat) {
                    long expected = shared.first_violation.load();
                    while (index < expected &&
                           !shared.first_violation.compare_exchange_weak(expected, index)) {
                    }
                }
            } catch (const std::exception& e) {
                long expected = shared.first_error.load();
                while (index < expected &&
                       !shared.first_error.compare_exchange_weak(expected, index)) {
                }
                std::lock_guard<std::mutex> lock(shared.mutex);
                if (shared.error_message.empty() || index <= shared.first_error.load())
                    shared.error_message = e.what();
            }
            auto t1 = std::chrono::steady_clock::now();
            shared.sample_seconds[index - 1] =
                std::chrono::duration<double>(t1 - t0).count();
        }
    };

    auto wall0 = std::chrono::steady_clock::now();
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int i = 0; i < threads; i++) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    auto wall1 = std::chrono::steady_clock::now();

    long violation = shared.first_violation.load();
    long error_at = shared.first_error.load();

    Verdict verdict;
    verdict.required_samples = N;
    verdict.wall_clock_seconds = std::chrono::duration<double>(wall1 - wall0).count();

    long decided_at;
    if (error_at < violation) {
        verdict.decision = Decision::Inconclusive;
        verdict.error = "model error while sampling trajectory " + std::to_string(error_at) +
                        ": " + shared.error_message;
        decided_at = error_at;
    } else if (violation != kNoIndex) {
        verdict.decision = Decision::H1;
        decided_at = violation;
        // Replay the violating trajectory in full from its own stream.
        TrajectorySampler sampler(H, scfg);
        sampler.reset(RngStream::substream(cfg.seed, static_cast<std::uint64_t>(violation)));
        verdict.counterexample = sampler.finish();
    } else {
        verdict.decision = Decision::H0;
        decided_at = N;
    }
    verdict.samples_drawn = decided_at;
    verdict.sample_log.assign(shared.satisfied.begin(), shared.satisfied.begin() + decided_at);

    double sum = 0.0, mn = 0.0, mx = 0.0;
    for (long i = 0; i < decided_at; i++) {
        double s = shared.sample_seconds[i];
        if (i == 0) mn = mx = s;
        mn = std::min(mn, s);
        mx = std::max(mx, s);
        sum += s;
    }
    if (decided_at > 0) {
        verdict.timing.mean_seconds = sum / static_cast<double>(decided_at);
        verdict.timing.min_seconds = mn;
        verdict.timing.max_seconds = mx;
    }
    return verdict;
}

CalibrationReport calibration_report(const SmcConfig& cfg, double true_sat_prob,
                                     long repetitions) {
    if (true_sat_prob < 0.0 || true_sat_prob > 1.0)
        throw ValidationError("satisfaction probability must lie in [0, 1]");
    if (repetitions < 1) throw ValidationError("need at least one repetition");

    CalibrationReport report;
    report.repetitions = repetitions;
    long N = sample_size(cfg.delta, cfg.alpha);
    report.required_samples = N;

    std::vector<long> stop_counts;
    stop_counts.reserve(repetitions);
    double total_samples = 0.0;

    for (long rep = 1; rep <= repetitions; rep++) {
        RngStream rng = RngStream::substream(cfg.seed, static_cast<std::uint64_t>(rep));
        long drawn = 0;
        bool rejected = false;
        for (long i = 1; i <= N; i++) {
            drawn = i;
            bool sat = true_sat_prob >= 1.0 ? true : rng.next_unit() < true_sat_prob;
            if (!sat) {
                rejected = true;
                break;
            }
        }
        if (rejected) {
            report.h1_count++;
            if (true_sat_prob >= 1.0) report.false_negatives++;
        } else {
            report.h0_count++;
        }
        stop_counts.push_back(drawn);
        total_samples += static_cast<double>(drawn);
    }

    report.observed_h0_rate =
        static_cast<double>(report.h0_count) / static_cast<double>(repetitions);
    report.mean_samples = total_samples / static_cast<double>(repetitions);
    std::sort(stop_counts.begin(), stop_counts.end());
    report.median_samples = stop_counts[stop_counts.size() / 2];
    return report;
}

}  // namespace hysmc
