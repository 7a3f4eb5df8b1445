#include "hysmc/sampler.hpp"

#include <algorithm>

/* Draw order within one unit interval (fixed; determinism contract):
 *   1. J time points, each uniform in (0,1), then sorted ascending;
 *   2. one index into the concatenated enabled multiset to pick the guard
 *      (probability |T_j| / sum |T_i|);
 *   3. one index into the chosen guard's enabled set to pick t_ell.
 * The initial state draws one uniform per dimension, in variable order.
 * Robust rejection repeats the whole block, consuming fresh draws. */

namespace hysmc {

namespace {
constexpr int kMaxRejections = 1000;
}

TrajectorySampler::TrajectorySampler(const HybridAutomaton& H, const SamplerConfig& cfg)
    : H_(H), cfg_(cfg), integrator_(H, cfg.flow), rng_(0) {
    if (cfg_.intermediate_points < 1)
        throw ValidationError("sampler needs at least one intermediate point");
    if (cfg_.horizon < 1) throw ValidationError("sampler horizon must be at least 1");
    if (cfg_.robust && cfg_.avoid.size() > static_cast<std::size_t>(H.dimension()))
        throw ValidationError("avoid sets exceed the model dimension");
    times_.resize(cfg_.intermediate_points);
}

bool TrajectorySampler::hits_avoided_constant(const Eigen::VectorXd& v) const {
    for (std::size_t i = 0; i < cfg_.avoid.size(); i++)
        for (double c : cfg_.avoid[i])
            if (v[static_cast<Eigen::Index>(i)] == c) return true;
    return false;
}

void TrajectorySampler::reset(RngStream rng) {
    rng_ = rng;
    traj_ = Trajectory{};
    traj_.seed = rng.seed();

    int n = H_.dimension();
    Eigen::VectorXd v0(n);
    int attempts = 0;
    for (;;) {
        for (int i = 0; i < n; i++) v0[i] = rng_.uniform_open(H_.init.lower[i], H_.init.upper[i]);
        if (!cfg_.robust || !hits_avoided_constant(v0)) break;
        if (++attempts >= kMaxRejections)
            throw DegenerateModelError(
                "initial-state sampling kept hitting a property constant; the init box is "
                "degenerate with respect to the avoided set");
    }
    traj_.modes.push_back(H_.initial_mode);
    traj_.states.push_back(std::move(v0));
    traj_.modes.reserve(cfg_.horizon + 1);
    traj_.states.reserve(cfg_.horizon + 1);
    traj_.steps.reserve(cfg_.horizon);
}

void TrajectorySampler::draw_sorted_times() {
    for (double& t : times_) t = rng_.next_open_unit();
    std::sort(times_.begin(), times_.end());
}

int TrajectorySampler::simulate_step(int mode, const Eigen::VectorXd& from, long step_index,
                                     int* out_transition, int* out_slot, double* out_time,
                                     Eigen::VectorXd& out_state) {
    draw_sorted_times();
    const std::vector<int>& outgoing = H_.outgoing(mode);
    double global_time = static_cast<double>(step_index);
    integrator_.interval_states(mode, from, global_time, times_, points_, &endpoint_);

    enabled_.resize(outgoing.size());
    int total = 0;
    for (std::size_t s = 0; s < outgoing.size(); s++) {
        enabled_[s].clear();
        const Guard& g = H_.transitions[outgoing[s]].guard;
        for (int j = 0; j < cfg_.intermediate_points; j++) {
            if (guard_sat(g, points_.col(j))) enabled_[s].push_back(j);
        }
        total += static_cast<int>(enabled_[s].size());
    }

    if (total == 0) {
        // No guard enabled at any sampled point: dwell in the current mode
        // for the whole interval.
        *out_transition = -1;
        *out_slot = -1;
        *out_time = 0.0;
        out_state = endpoint_;
        return 0;
    }

    std::uint32_t pick = rng_.next_below(static_cast<std::uint32_t>(total));
    std::size_t slot = 0;
    while (pick >= enabled_[slot].size()) {
        pick -= static_cast<std::uint32_t>(enabled_[slot].size());
        slot++;
    }
    std::uint32_t which = rng_.next_below(static_cast<std::uint32_t>(enabled_[slot].size()));
    int j = enabled_[slot][which];
    double t_switch = times_[j];

    const Transition& tr = H_.transitions[outgoing[slot]];
    post_ = points_.col(j);
    out_state = integrator_.flow_to(tr.target, 1.0 - t_switch, post_,
                                    global_time + t_switch);
    *out_transition = outgoing[slot];
    *out_slot = static_cast<int>(slot);
    *out_time = t_switch;
    return 1;
}

bool TrajectorySampler::step() {
    long k = static_cast<long>(traj_.steps.size());
    if (k >= cfg_.horizon) return false;

    int mode = traj_.modes.back();
    const Eigen::VectorXd& from = traj_.states.back();

    int transition = -1, slot = -1;
    double t_switch = 0.0;
    Eigen::VectorXd next;
    int attempts = 0;
    for (;;) {
        simulate_step(mode, from, k, &transition, &slot, &t_switch, next);
        if (!cfg_.robust || !hits_avoided_constant(next)) break;
        if (++attempts >= kMaxRejections)
            throw DegenerateModelError(
                "step sampling kept hitting a property constant; the model dynamics are "
                "degenerate with respect to the avoided set");
    }

    int next_mode = transition >= 0 ? H_.transitions[transition].target : mode;
    traj_.modes.push_back(next_mode);
    traj_.states.push_back(std::move(next));
    traj_.steps.push_back({transition, slot, t_switch});
    return true;
}

const Trajectory& TrajectorySampler::finish() {
    while (step()) {
    }
    return traj_;
}

Trajectory sample_trajectory(const HybridAutomaton& H, const SamplerConfig& cfg, RngStream rng) {
    SamplerConfig plain = cfg;
    plain.robust = false;
    TrajectorySampler sampler(H, plain);
    sampler.reset(rng);
    return sampler.finish();
}

Trajectory sample_robust_trajectory(const HybridAutomaton& H, const SamplerConfig& cfg,
                                    RngStream rng) {
    SamplerConfig robust = cfg;
    robust.robust = true;
    TrajectorySampler sampler(H, robust);
    sampler.reset(rng);
    return sampler.finish();
}

Eigen::VectorXd empirical_guard_probs(const HybridAutomaton& H, int mode,
                                      const Eigen::VectorXd& v, const SamplerConfig& cfg,
                                      RngStream rng, long trials) {
    if (trials < 1) throw ValidationError("empirical_guard_probs needs at least one trial");
    const std::vector<int>& outgoing = H.outgoing(mode);
    std::size_t m = outgoing.size();
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m) + 1);

    Integrator integrator(H, cfg.flow);
    std::vector<double> times(cfg.intermediate_points);
    Eigen::MatrixXd points;
    std::vector<std::vector<int>> enabled(m);

    for (long trial = 0; trial < trials; trial++) {
        for (double& t : times) t = rng.next_open_unit();
        std::sort(times.begin(), times.end());
        integrator.interval_states(mode, v, 0.0, times, points, nullptr);

        int total = 0;
        for (std::size_t s = 0; s < m; s++) {
            enabled[s].clear();
            const Guard& g = H.transitions[outgoing[s]].guard;
            for (int j = 0; j < cfg.intermediate_points; j++)
                if (guard_sat(g, points.col(j))) enabled[s].push_back(j);
            total += static_cast<int>(enabled[s].size());
        }
        if (total == 0) {
            counts[static_cast<Eigen::Index>(m)] += 1.0;
            continue;
        }
        std::uint32_t pick = rng.next_below(static_cast<std::uint32_t>(total));
        std::size_t slot = 0;
        while (pick >= enabled[slot].size()) {
            pick -= static_cast<std::uint32_t>(enabled[slot].size());
            slot++;
        }
        // The time draw happens even though only the guard choice is tallied,
        // so one trial consumes the same stream prefix as a sampler step.
        (void)rng.next_below(static_cast<std::uint32_t>(enabled[slot].size()));
        counts[static_cast<Eigen::Index>(slot)] += 1.0;
    }
    return counts / static_cast<double>(trials);
}

}  // namespace hysmc
