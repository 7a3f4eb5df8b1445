#pragma once

#include <Eigen/Core>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hysmc/expr.hpp"

namespace hysmc {

/* Guard over value states: strict-inequality atoms (a < x_i, x_i < b)
 * combined with and/or. Its denotation is an open subset of R^n. */
class Guard {
public:
    enum class Kind : std::uint8_t { Lower, Upper, And, Or };

    struct Node {
        Kind kind;
        int var = -1;        // Lower/Upper: variable index
        double bound = 0.0;  // Lower: bound < x[var]; Upper: x[var] < bound
        int a = -1, b = -1;  // And/Or children
    };

    // Children precede parents; root is last.
    const std::vector<Node>& nodes() const { return nodes_; }
    int max_var_index() const;

    static Guard lower(int var, double bound);
    static Guard upper(int var, double bound);
    static Guard conj(Guard lhs, Guard rhs);
    static Guard disj(Guard lhs, Guard rhs);

private:
    friend Guard parse_guard(std::string_view, const SymbolTable&);
    static Guard combine(Kind kind, Guard lhs, Guard rhs);
    std::vector<Node> nodes_;
};

/* Structural evaluation with strict comparisons. */
bool guard_sat(const Guard& g, const Eigen::Ref<const Eigen::VectorXd>& v);

/* Grammar:  atom := NUM '<' IDENT | IDENT '<' NUM
 *           guard := atom | guard '&&' guard | guard '||' guard | '(' guard ')'
 * '&&' binds tighter than '||'. Identifiers must name declared variables. */
Guard parse_guard(std::string_view text, const SymbolTable& symbols);
std::string to_string(const Guard& g, const SymbolTable& symbols);

/* Open per-dimension intervals (L_i, U_i) with L_i < U_i. */
struct InitBox {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    int dimension() const { return static_cast<int>(lower.size()); }
};

/* Piecewise-constant external signal given as (start-time, value)
 * breakpoints with strictly increasing start times, first at time 0.
 * Times are in model time units. */
struct InputSignal {
    std::string name;
    std::vector<std::pair<double, double>> schedule;
};

/* Value of the most recent breakpoint at or before model time t.
 * Throws if t precedes the first breakpoint or is negative. */
double input_value(const InputSignal& s, double t);

struct Mode {
    std::string name;
    std::vector<std::string> labels;  // Kr(q)
    std::vector<Expr> rhs;            // dx_i/dt, one per variable
};

struct Transition {
    int source;
    Guard guard;
    int target;
};

/* Hybrid automaton with one ODE system per mode, guarded transitions,
 * an open initial box sampled uniformly, and a fixed time discretisation:
 * one discrete step corresponds to `delta` model time units. Immutable
 * after construction + validate(); shared read-only across threads. */
class HybridAutomaton {
public:
    SymbolTable symbols;
    std::vector<double> parameter_values;   // by parameter index
    std::vector<InputSignal> inputs;        // by input index
    std::vector<Mode> modes;
    int initial_mode = -1;
    std::vector<Transition> transitions;
    InitBox init;
    std::string init_distribution = "uniform";
    double delta = 1.0;        // model time per unit interval
    long max_horizon = 0;      // maximum K this model is meant for

    int dimension() const { return static_cast<int>(symbols.variables().size()); }
    int mode_count() const { return static_cast<int>(modes.size()); }

    /* Transition indices leaving `mode`, in declaration order. */
    const std::vector<int>& outgoing(int mode) const { return outgoing_.at(mode); }

    int mode_index(std::string_view name) const;  // -1 when absent
    bool mode_has_label(int mode, std::string_view label) const;
    std::set<std::string> all_labels() const;

    /* Resolve every input signal at model time t into `out`. */
    void input_values(double t, std::vector<double>& out) const;

    /* Enforces every structural invariant; fills the outgoing index and
     * returns non-fatal warnings (e.g. select() in an ODE right-hand side,
     * which can break the C1 smoothness the theory expects). */
    std::vector<std::string> validate();

private:
    std::vector<std::vector<int>> outgoing_;
};

/* Parses the model document format (see docs/model_format.md) and
 * validates the result. */
HybridAutomaton parse_model(std::string_view document);

/* Canonical document for an automaton. serialize_model and parse_model
 * are mutually inverse: parsing the output reproduces the automaton, and
 * re-serialising reproduces the bytes. */
std::string serialize_model(const HybridAutomaton& H);

}  // namespace hysmc
