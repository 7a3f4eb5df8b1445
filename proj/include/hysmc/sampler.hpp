#pragma once

#include <Eigen/Core>
#include <vector>

#include "hysmc/flow.hpp"
#include "hysmc/model.hpp"
#include "hysmc/rng.hpp"

namespace hysmc {

/* What happened in one unit interval. */
struct StepRecord {
    int transition = -1;      // index into HybridAutomaton::transitions; -1 = no switch
    int guard_slot = -1;      // position within the source mode's outgoing list
    double switch_time = 0.0; // t_ell in (0, 1), meaningful when transition >= 0
};

/* Sampled execution: K+1 (mode, value-state) pairs plus the per-step
 * transition record and the RNG stream seed that produced it. */
struct Trajectory {
    std::uint64_t seed = 0;
    std::vector<int> modes;
    std::vector<Eigen::VectorXd> states;
    std::vector<StepRecord> steps;

    long length() const { return static_cast<long>(modes.size()); }
};

struct SamplerConfig {
    int intermediate_points = 10;  // J
    long horizon = 1;              // K
    FlowConfig flow;
    bool robust = false;
    /* Per-dimension constants the robust sampler must avoid exactly
     * (the property's C_i sets). Ignored unless robust is set. */
    std::vector<std::vector<double>> avoid;
};

/* Incremental trajectory generation so callers can stop early once a
 * formula is decided. One sampler instance serves one trajectory at a
 * time; `reset` rebinds it to a new RNG stream. */
class TrajectorySampler {
public:
    TrajectorySampler(const HybridAutomaton& H, const SamplerConfig& cfg);

    void reset(RngStream rng);

    /* Extends the trajectory by one unit interval; false once K steps exist. */
    bool step();

    /* Runs to the horizon and returns the finished trajectory. */
    const Trajectory& finish();

    const Trajectory& current() const { return traj_; }

private:
    void draw_sorted_times();
    int simulate_step(int mode, const Eigen::VectorXd& from, long step_index, int* out_transition,
                      int* out_slot, double* out_time, Eigen::VectorXd& out_state);
    bool hits_avoided_constant(const Eigen::VectorXd& v) const;

    const HybridAutomaton& H_;
    SamplerConfig cfg_;
    Integrator integrator_;
    RngStream rng_;
    Trajectory traj_;
    std::vector<double> times_;
    Eigen::MatrixXd points_;
    std::vector<std::vector<int>> enabled_;  // per outgoing slot: indices into times_
    Eigen::VectorXd endpoint_, post_;
};

Trajectory sample_trajectory(const HybridAutomaton& H, const SamplerConfig& cfg, RngStream rng);

/* Algorithm with rejection of states that hit any avoided constant: the
 * initial state is redrawn while it hits one, and each step is repeated
 * until the end-of-interval state avoids them all. Throws
 * DegenerateModelError after 1000 consecutive rejections at one site. */
Trajectory sample_robust_trajectory(const HybridAutomaton& H, const SamplerConfig& cfg,
                                    RngStream rng);

/* Frequency with which each outgoing guard of `mode` is chosen from the
 * fixed state v over `trials` independent single-step simulations. The
 * last entry is the no-switch bucket. */
Eigen::VectorXd empirical_guard_probs(const HybridAutomaton& H, int mode,
                                      const Eigen::VectorXd& v, const SamplerConfig& cfg,
                                      RngStream rng, long trials);

}  // namespace hysmc
