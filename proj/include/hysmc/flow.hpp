#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "hysmc/model.hpp"

namespace hysmc {

struct FlowConfig {
    int substeps = 100;  // RK4 steps per unit interval
};

/* Numerical realisation of the unit-interval flow of one mode's ODE system.
 * Integration runs in normalised interval time: one unit interval covers
 * `delta` model time units, so dx/dtau = delta * F_q(x). The substep grid is
 * anchored at the interval start; a state at an off-grid time is produced by
 * a single shortened step from the last grid point, which makes a batched
 * query bitwise identical to the equivalent independent calls.
 *
 * Inputs are resolved at each substep's starting model time and held constant
 * through the substep.
 *
 * Holds reusable buffers; not shareable across threads. */
class Integrator {
public:
    Integrator(const HybridAutomaton& H, FlowConfig cfg);

    /* State after flowing for t in (0, 1] from v in `mode`, starting at
     * normalised global time `global_time` (used only to resolve inputs). */
    Eigen::VectorXd flow_to(int mode, double t, const Eigen::VectorXd& v, double global_time);

    /* States at each of `times` (strictly increasing, within (0,1)) along a
     * single integration pass; if `endpoint` is non-null it receives the
     * state at t = 1. Each output equals the corresponding flow_to result
     * exactly. */
    void interval_states(int mode, const Eigen::VectorXd& v, double global_time,
                         std::span<const double> times, std::vector<Eigen::VectorXd>& out,
                         Eigen::VectorXd* endpoint);

    /* Allocation-free variant writing states as columns of `out`. */
    void interval_states(int mode, const Eigen::VectorXd& v, double global_time,
                         std::span<const double> times, Eigen::MatrixXd& out,
                         Eigen::VectorXd* endpoint);

    const HybridAutomaton& automaton() const { return H_; }
    const FlowConfig& config() const { return cfg_; }

private:
    void refresh_inputs(double local_time, double global_time);
    void rhs(int mode, const Eigen::VectorXd& x, Eigen::VectorXd& dx);
    void rk4_step(int mode, Eigen::VectorXd& x, double h, double local_time, double global_time);
    void check_state(const Eigen::VectorXd& x, int mode, double global_time) const;

    const HybridAutomaton& H_;
    FlowConfig cfg_;
    Eigen::VectorXd k1_, k2_, k3_, k4_, tmp_, probe_;
    std::vector<double> inputs_;
    std::vector<double> scratch_;
};

/* Convenience wrappers matching the operation signatures. */
Eigen::VectorXd flow(const HybridAutomaton& H, int mode, double t, const Eigen::VectorXd& v,
                     double global_time, const FlowConfig& cfg);

std::vector<Eigen::VectorXd> flow_at_points(const HybridAutomaton& H, int mode,
                                            std::span<const double> times,
                                            const Eigen::VectorXd& v, double global_time,
                                            const FlowConfig& cfg);

}  // namespace hysmc
