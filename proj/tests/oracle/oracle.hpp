#pragma once

// Closed-form and brute-force oracles used only by the test suites. These
// deliberately re-derive quantities the engine computes numerically --
// guard-enabled time sets, transition probabilities, path distributions,
// BLTL satisfaction -- so the two implementations can cross-check each
// other. Nothing here may call into the sampler or checker internals.

#include <Eigen/Core>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hysmc/bltl.hpp"
#include "hysmc/model.hpp"

namespace hysmc::oracle {

/* Finite union of disjoint open intervals. */
class IntervalSet {
public:
    IntervalSet() = default;
    explicit IntervalSet(std::vector<std::pair<double, double>> intervals);

    static IntervalSet open(double a, double b);  // empty when a >= b
    static IntervalSet all(double a, double b) { return open(a, b); }

    const std::vector<std::pair<double, double>>& intervals() const { return intervals_; }
    double measure() const;
    bool empty() const { return intervals_.empty(); }

    IntervalSet unite(const IntervalSet& other) const;
    IntervalSet intersect(const IntervalSet& other) const;
    IntervalSet clip(double a, double b) const;

private:
    void normalize();
    std::vector<std::pair<double, double>> intervals_;  // sorted, disjoint
};

/* One mode's field for one coordinate: dx/dt = rate (constant) or
 * dx/dt = rate * x (linear). */
struct FieldComponent {
    enum class Kind { Constant, Linear } kind;
    double rate;
};

/* Closed-form solvable hybrid system (constant or linear diagonal fields).
 * Mirrors a HybridAutomaton built from the same structure so the sampler
 * can run against it; delta is fixed at 1 so model time equals step time. */
struct AnalyticSystem {
    HybridAutomaton automaton;                          // engine-side twin
    std::vector<std::vector<FieldComponent>> fields;    // [mode][dim]
    int dimension() const { return automaton.dimension(); }
};

/* Exact flow x(t) from v under `mode`, componentwise closed form. */
Eigen::VectorXd exact_flow(const AnalyticSystem& sys, int mode, double t,
                           const Eigen::VectorXd& v);

/* T_j(v): times in (0,1) at which outgoing guard `slot` of `mode` is
 * satisfied along the exact flow from v. */
IntervalSet exact_time_set(const AnalyticSystem& sys, int mode, int slot,
                           const Eigen::VectorXd& v);

/* Transition probabilities from the exact time-set measures at a point
 * state: p_j = mu(T_j) / sum_i mu(T_i). `no_switch` is set when every
 * measure vanishes, matching the sampler's dwell convention. */
struct ExactStepLaw {
    Eigen::VectorXd probabilities;  // per outgoing slot
    bool no_switch = false;
};
ExactStepLaw exact_transition_probs(const AnalyticSystem& sys, int mode,
                                    const Eigen::VectorXd& v);

/* Distribution over mode sequences of length depth+1, integrating the
 * switch-time laws by dense quadrature (and the init box, which is assumed
 * narrow). Keys are space-separated mode names. */
std::map<std::string, double> chain_reachability(const AnalyticSystem& sys, int depth);

/* Trace for the brute-force checker: per position, the label set and the
 * value state. */
struct OracleTrace {
    std::vector<std::set<std::string>> labels;
    std::vector<Eigen::VectorXd> values;
    long length() const { return static_cast<long>(labels.size()); }
};

/* Literal recursive evaluation of the bounded-LTL trajectory semantics;
 * no sharing, no windows, used only as a test oracle. */
bool brute_force_bltl(const BltlFormula& f, const OracleTrace& trace, long position);

/* Fixtures. Each returns an analytic system whose automaton half parses
 * from a document, so fixture behaviour is reproducible from text. */
AnalyticSystem two_guard_symmetric();    // measures 0.4 / 0.4 from x ~ 0
AnalyticSystem two_guard_asymmetric();   // measures 0.1 / 0.3
AnalyticSystem exponential_window();     // dx/dt = x, guard (e^0.25, e^0.75)
AnalyticSystem branching_depth3();       // 3-level tree with value-dependent laws

}  // namespace hysmc::oracle
