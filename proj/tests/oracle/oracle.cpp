#include "oracle.hpp"

#include <algorithm>
#include <cmath>

namespace hysmc::oracle {

// ---------------------------------------------------------------------------
// IntervalSet
// ---------------------------------------------------------------------------

IntervalSet::IntervalSet(std::vector<std::pair<double, double>> intervals)
    : intervals_(std::move(intervals)) {
    normalize();
}

IntervalSet IntervalSet::open(double a, double b) {
    IntervalSet s;
    if (a < b) s.intervals_.push_back({a, b});
    return s;
}

void IntervalSet::normalize() {
    std::erase_if(intervals_, [](const auto& iv) { return !(iv.first < iv.second); });
    std::sort(intervals_.begin(), intervals_.end());
    std::vector<std::pair<double, double>> merged;
    for (const auto& iv : intervals_) {
        if (!merged.empty() && iv.first <= merged.back().second)
            merged.back().second = std::max(merged.back().second, iv.second);
        else
            merged.push_back(iv);
    }
    intervals_ = std::move(merged);
}

double IntervalSet::measure() const {
    double m = 0.0;
    for (const auto& iv : intervals_) m += iv.second - iv.first;
    return m;
}

IntervalSet IntervalSet::unite(const IntervalSet& other) const {
    std::vector<std::pair<double, double>> all = intervals_;
    all.insert(all.end(), other.intervals_.begin(), other.intervals_.end());
    return IntervalSet(std::move(all));
}

IntervalSet IntervalSet::intersect(const IntervalSet& other) const {
    std::vector<std::pair<double, double>> out;
    for (const auto& a : intervals_) {
        for (const auto& b : other.intervals_) {
            double lo = std::max(a.first, b.first);
            double hi = std::min(a.second, b.second);
            if (lo < hi) out.push_back({lo, hi});
        }
    }
    return IntervalSet(std::move(out));
}

IntervalSet IntervalSet::clip(double a, double b) const { return intersect(open(a, b)); }

// ---------------------------------------------------------------------------
// Exact flows and time sets
// ---------------------------------------------------------------------------

Eigen::VectorXd exact_flow(const AnalyticSystem& sys, int mode, double t,
                           const Eigen::VectorXd& v) {
    Eigen::VectorXd out(v.size());
    for (int i = 0; i < v.size(); i++) {
        const FieldComponent& f = sys.fields.at(mode).at(i);
        out[i] = f.kind == FieldComponent::Kind::Constant ? v[i] + f.rate * t
                                                          : v[i] * std::exp(f.rate * t);
    }
    return out;
}

namespace {

/* Times t in (0,1) with x_i(t) > bound (when `greater`) or < bound.
 * Both field kinds are monotone in t, so the solution is one interval. */
IntervalSet atom_time_set(const FieldComponent& f, double v, double bound, bool greater) {
    auto value_at = [&](double t) {
        return f.kind == FieldComponent::Kind::Constant ? v + f.rate * t : v * std::exp(f.rate * t);
    };
    // Locate the crossing time, if any, inside (0, 1).
    double t_cross = -1.0;
    if (f.kind == FieldComponent::Kind::Constant) {
        if (f.rate != 0.0) t_cross = (bound - v) / f.rate;
    } else {
        // x(t) = v e^{rt}; crossing needs bound/v > 0.
        if (f.rate != 0.0 && v != 0.0 && bound / v > 0.0) t_cross = std::log(bound / v) / f.rate;
    }
    bool sat_start = greater ? value_at(0.0) > bound : value_at(0.0) < bound;
    bool sat_end = greater ? value_at(1.0) > bound : value_at(1.0) < bound;
    if (t_cross <= 0.0 || t_cross >= 1.0) {
        // No interior crossing: constant truth on (0,1). The midpoint decides
        // (covers the t_cross outside (0,1) cases).
        bool sat_mid = greater ? value_at(0.5) > bound : value_at(0.5) < bound;
        return sat_mid ? IntervalSet::open(0.0, 1.0) : IntervalSet();
    }
    if (sat_start && !sat_end) return IntervalSet::open(0.0, t_cross);
    if (!sat_start && sat_end) return IntervalSet::open(t_cross, 1.0);
    // Monotone coordinate: truth changes at most once; equal endpoint truth
    // means the crossing only grazes. Decide by midpoints of both halves.
    IntervalSet out;
    if (greater ? value_at(t_cross / 2) > bound : value_at(t_cross / 2) < bound)
        out = out.unite(IntervalSet::open(0.0, t_cross));
    if (greater ? value_at((t_cross + 1) / 2) > bound : value_at((t_cross + 1) / 2) < bound)
        out = out.unite(IntervalSet::open(t_cross, 1.0));
    return out;
}

IntervalSet guard_time_set(const AnalyticSystem& sys, int mode, const Guard& g,
                           const Eigen::VectorXd& v, int node_index) {
    const Guard::Node& n = g.nodes()[node_index];
    switch (n.kind) {
        case Guard::Kind::Lower:
            return atom_time_set(sys.fields.at(mode).at(n.var), v[n.var], n.bound, true);
        case Guard::Kind::Upper:
            return atom_time_set(sys.fields.at(mode).at(n.var), v[n.var], n.bound, false);
        case Guard::Kind::And:
            return guard_time_set(sys, mode, g, v, n.a).intersect(
                guard_time_set(sys, mode, g, v, n.b));
        case Guard::Kind::Or:
            return guard_time_set(sys, mode, g, v, n.a).unite(
                guard_time_set(sys, mode, g, v, n.b));
    }
    throw Error("corrupt guard");
}

}  // namespace

IntervalSet exact_time_set(const AnalyticSystem& sys, int mode, int slot,
                           const Eigen::VectorXd& v) {
    const HybridAutomaton& H = sys.automaton;
    int transition = H.outgoing(mode).at(slot);
    const Guard& g = H.transitions[transition].guard;
    return guard_time_set(sys, mode, g, v, static_cast<int>(g.nodes().size()) - 1)
        .clip(0.0, 1.0);
}

ExactStepLaw exact_transition_probs(const AnalyticSystem& sys, int mode,
                                    const Eigen::VectorXd& v) {
    const auto& outgoing = sys.automaton.outgoing(mode);
    ExactStepLaw law;
    law.probabilities = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(outgoing.size()));
    double total = 0.0;
    for (std::size_t s = 0; s < outgoing.size(); s++) {
        double m = exact_time_set(sys, mode, static_cast<int>(s), v).measure();
        law.probabilities[static_cast<Eigen::Index>(s)] = m;
        total += m;
    }
    if (total <= 0.0) {
        law.no_switch = true;
        law.probabilities.setZero();
        return law;
    }
    law.probabilities /= total;
    return law;
}

// ---------------------------------------------------------------------------
// Path distribution by dense quadrature
// ---------------------------------------------------------------------------

namespace {

constexpr int kTimePanels = 512;  // midpoint panels per switch-time interval
constexpr int kInitPanels = 8;

void paths_from(const AnalyticSystem& sys, int mode, const Eigen::VectorXd& v, int remaining,
                std::string& prefix, double weight, std::map<std::string, double>& out) {
    const HybridAutomaton& H = sys.automaton;
    if (remaining == 0) {
        out[prefix] += weight;
        return;
    }
    const auto& outgoing = H.outgoing(mode);
    std::vector<IntervalSet> sets(outgoing.size());
    double total = 0.0;
    for (std::size_t s = 0; s < outgoing.size(); s++) {
        sets[s] = exact_time_set(sys, mode, static_cast<int>(s), v);
        total += sets[s].measure();
    }
    std::size_t saved = prefix.size();
    if (total <= 0.0) {
        // Dwell: the mode repeats and the state advances a full interval.
        Eigen::VectorXd next = exact_flow(sys, mode, 1.0, v);
        prefix += " " + H.modes[mode].name;
        paths_from(sys, mode, next, remaining - 1, prefix, weight, out);
        prefix.resize(saved);
        return;
    }
    for (std::size_t s = 0; s < outgoing.size(); s++) {
        double mu = sets[s].measure();
        if (mu <= 0.0) continue;
        double p_guard = mu / total;
        int target = H.transitions[outgoing[s]].target;
        prefix += " " + H.modes[target].name;
        for (const auto& [a, b] : sets[s].intervals()) {
            double width = (b - a) / kTimePanels;
            for (int i = 0; i < kTimePanels; i++) {
                double t = a + (i + 0.5) * width;
                Eigen::VectorXd mid = exact_flow(sys, mode, t, v);
                Eigen::VectorXd next = exact_flow(sys, target, 1.0 - t, mid);
                // switch-time density is uniform over the set: dt / mu
                paths_from(sys, target, next, remaining - 1, prefix,
                           weight * p_guard * (width / mu), out);
            }
        }
        prefix.resize(saved);
    }
}

}  // namespace

std::map<std::string, double> chain_reachability(const AnalyticSystem& sys, int depth) {
    if (depth < 1 || depth > 4) throw Error("chain_reachability supports depth 1..4");
    const HybridAutomaton& H = sys.automaton;
    std::map<std::string, double> out;
    int n = H.dimension();
    // Uniform average over the (narrow) init box, one dimension at a time;
    // fixtures use boxes so thin that cross terms cannot matter.
    std::vector<Eigen::VectorXd> starts;
    if (n == 1) {
        double lo = H.init.lower[0], hi = H.init.upper[0];
        double width = (hi - lo) / kInitPanels;
        for (int i = 0; i < kInitPanels; i++) {
            Eigen::VectorXd v(1);
            v[0] = lo + (i + 0.5) * width;
            starts.push_back(v);
        }
    } else {
        Eigen::VectorXd mid = 0.5 * (H.init.lower + H.init.upper);
        starts.push_back(mid);
    }
    std::string prefix = H.modes[H.initial_mode].name;
    for (const Eigen::VectorXd& v : starts)
        paths_from(sys, H.initial_mode, v, depth, prefix, 1.0 / starts.size(), out);
    return out;
}

// ---------------------------------------------------------------------------
// Brute-force BLTL (literal recursion; test oracle only)
// ---------------------------------------------------------------------------

bool brute_force_bltl(const BltlFormula& f, const OracleTrace& trace, long position) {
    const std::vector<BltlNode>& nodes = f.nodes();
    long k = trace.length() - 1;

    std::function<bool(int, long)> eval = [&](int index, long j) -> bool {
        const BltlNode& n = nodes[index];
        switch (n.op) {
            case BltlOp::True: return true;
            case BltlOp::False: return false;
            case BltlOp::Label: return trace.labels[j].count(n.label) != 0;
            case BltlOp::Less: return trace.values[j][n.var] < n.threshold;
            case BltlOp::Greater: return trace.values[j][n.var] > n.threshold;
            case BltlOp::Not: return !eval(n.a, j);
            case BltlOp::And: return eval(n.a, j) && eval(n.b, j);
            case BltlOp::Or: return eval(n.a, j) || eval(n.b, j);
            case BltlOp::Finally:
                for (long jp = 0; jp <= n.bound && j + jp <= k; jp++)
                    if (eval(n.a, j + jp)) return true;
                return false;
            case BltlOp::Globally:
                for (long jp = 0; jp <= n.bound && j + jp <= k; jp++)
                    if (!eval(n.a, j + jp)) return false;
                return true;
            case BltlOp::Until:
                for (long jp = 0; jp <= n.bound && j + jp <= k; jp++) {
                    if (eval(n.b, j + jp)) {
                        bool all = true;
                        for (long jpp = 0; jpp < jp; jpp++)
                            if (!eval(n.a, j + jpp)) {
                                all = false;
                                break;
                            }
                        if (all) return true;
                    }
                }
                return false;
        }
        throw Error("corrupt formula");
    };
    return eval(f.root(), position);
}

// ---------------------------------------------------------------------------
// Fixtures
// ---------------------------------------------------------------------------

namespace {

AnalyticSystem make_system(const std::string& doc,
                           std::vector<std::vector<FieldComponent>> fields) {
    AnalyticSystem sys;
    sys.automaton = parse_model(doc);
    sys.fields = std::move(fields);
    if (sys.fields.size() != static_cast<std::size_t>(sys.automaton.mode_count()))
        throw Error("fixture fields do not match the automaton");
    return sys;
}

constexpr auto C = FieldComponent::Kind::Constant;
constexpr auto L = FieldComponent::Kind::Linear;

}  // namespace

AnalyticSystem two_guard_symmetric() {
    std::string doc =
        "variables x\n"
        "delta 1\n"
        "horizon 16\n"
        "init x 0 1e-06\n"
        "initial q0\n"
        "mode q0\n"
        "  ode x = 1\n"
        "mode q1\n"
        "  ode x = 0\n"
        "mode q2\n"
        "  ode x = 0\n"
        "transition q0 q1 : 0 < x && x < 0.4\n"
        "transition q0 q2 : 0.6 < x && x < 1\n";
    return make_system(doc, {{{C, 1.0}}, {{C, 0.0}}, {{C, 0.0}}});
}

AnalyticSystem two_guard_asymmetric() {
    std::string doc =
        "variables x\n"
        "delta 1\n"
        "horizon 16\n"
        "init x 0 1e-06\n"
        "initial q0\n"
        "mode q0\n"
        "  ode x = 1\n"
        "mode q1\n"
        "  ode x = 0\n"
        "mode q2\n"
        "  ode x = 0\n"
        "transition q0 q1 : 0 < x && x < 0.1\n"
        "transition q0 q2 : 0.4 < x && x < 0.7\n";
    return make_system(doc, {{{C, 1.0}}, {{C, 0.0}}, {{C, 0.0}}});
}

AnalyticSystem exponential_window() {
    // e^{0.25} and e^{0.75} rounded to the printed precision below; the
    // tests account for the rounding when asserting interval endpoints.
    std::string doc =
        "variables x\n"
        "delta 1\n"
        "horizon 16\n"
        "init x 1 1.000001\n"
        "initial q0\n"
        "mode q0\n"
        "  ode x = x\n"
        "mode q1\n"
        "  ode x = 0\n"
        "transition q0 q1 : 1.2840254166877414 < x && x < 2.117000016612675\n";
    return make_system(doc, {{{L, 1.0}}, {{C, 0.0}}});
}

AnalyticSystem branching_depth3() {
    std::string doc =
        "variables x\n"
        "delta 1\n"
        "horizon 16\n"
        "init x 0 1e-06\n"
        "initial q0\n"
        "mode q0\n"
        "  ode x = 1\n"
        "mode q1\n"
        "  ode x = 2\n"
        "mode q2\n"
        "  ode x = 0\n"
        "mode q3\n"
        "  ode x = 0\n"
        "mode q4\n"
        "  ode x = 0\n"
        "mode q5\n"
        "  ode x = 0\n"
        "mode q6\n"
        "  ode x = 0\n"
        "transition q0 q1 : 0.1 < x && x < 0.5\n"
        "transition q0 q2 : 0.5 < x && x < 0.9\n"
        "transition q1 q3 : 2 < x && x < 2.6\n"
        "transition q1 q4 : 2.6 < x && x < 3.4\n"
        "transition q2 q5 : 0.45 < x && x < 0.7\n"
        "transition q2 q6 : 0.7 < x && x < 1\n";
    return make_system(doc, {{{C, 1.0}},
                             {{C, 2.0}},
                             {{C, 0.0}},
                             {{C, 0.0}},
                             {{C, 0.0}},
                             {{C, 0.0}},
                             {{C, 0.0}}});
}

}  // namespace hysmc::oracle
