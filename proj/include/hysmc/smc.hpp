#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hysmc/bltl.hpp"
#include "hysmc/model.hpp"
#include "hysmc/sampler.hpp"

namespace hysmc {

struct SmcConfig {
    double delta = 0.01;   // indifference parameter
    double alpha = 0.01;   // false-positive bound
    std::uint64_t seed = 0;
    int threads = 1;       // 0 = hardware concurrency
};

enum class Decision { H0, H1, Inconclusive };

struct SampleTiming {
    double mean_seconds = 0.0;
    double min_seconds = 0.0;
    double max_seconds = 0.0;
};

struct Verdict {
    Decision decision = Decision::Inconclusive;
    long samples_drawn = 0;
    long required_samples = 0;                // N
    std::optional<Trajectory> counterexample; // present iff H1
    std::vector<char> sample_log;             // 1 = satisfied, per logical index
    double wall_clock_seconds = 0.0;
    SampleTiming timing;
    std::string error;                        // set when Inconclusive
};

/* N = ceil(log(alpha) / log(1 - delta)); the smallest sample count whose
 * all-satisfying probability under Pr < 1-delta stays below alpha. */
long sample_size(double delta, double alpha);

/* Sequential test of H0: Pr>=1(psi) against H1: Pr<1-delta(psi). Draws up
 * to N trajectories, rejects H0 at the first violation. The robust sampler
 * is used automatically when psi carries quantitative atoms. The verdict is
 * deterministic in (model, psi, configs, seed), independent of thread count:
 * logical sample order is trajectory index, and H1 reports the lowest
 * violating index. Sampler blow-ups yield Decision::Inconclusive. */
Verdict run_smc(const HybridAutomaton& H, const BltlFormula& psi, const SmcConfig& cfg,
                const SamplerConfig& sampler_cfg);

struct CalibrationReport {
    long repetitions = 0;
    long h0_count = 0;
    long h1_count = 0;
    long false_negatives = 0;   // H1 verdicts with true p = 1
    double observed_h0_rate = 0.0;
    double mean_samples = 0.0;
    long median_samples = 0;
    long required_samples = 0;
};

/* Runs the sequential test `repetitions` times against a synthetic sample
 * source with known satisfaction probability p. */
CalibrationReport calibration_report(const SmcConfig& cfg, double true_sat_prob,
                                     long repetitions);

}  // namespace hysmc
