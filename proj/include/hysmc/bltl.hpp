#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hysmc/model.hpp"
#include "hysmc/sampler.hpp"

namespace hysmc {

enum class BltlOp : std::uint8_t {
    True, False,
    Label,     // qualitative atom: [Name], satisfied when Name is in Kr(q)
    Less,      // quantitative atom: x_var < threshold (strict)
    Greater,   // quantitative atom: x_var > threshold (strict)
    Not, And, Or,
    Until, Finally, Globally,  // bounded temporal operators
};

struct BltlNode {
    BltlOp op;
    int a = -1, b = -1;     // children
    long bound = 0;         // Until/Finally/Globally
    int var = -1;           // Less/Greater
    double threshold = 0.0; // Less/Greater
    std::string label;      // Label
};

/* Bounded LTL formula. Nodes are stored children-first with the root last.
 * Immutable after construction. */
class BltlFormula {
public:
    const std::vector<BltlNode>& nodes() const { return nodes_; }
    int root() const { return static_cast<int>(nodes_.size()) - 1; }

    static BltlFormula from_nodes(std::vector<BltlNode> nodes);

private:
    std::vector<BltlNode> nodes_;
};

/* Grammar (ASCII property syntax):
 *   formula  := or_expr ('U' '<=' NUM or_expr)*        right-associative
 *   or_expr  := and_expr ('|' and_expr)*
 *   and_expr := unary ('&' unary)*
 *   unary    := '!' unary | 'F' '<=' NUM '(' formula ')'
 *             | 'G' '<=' NUM '(' formula ')' | 'true' | 'false'
 *             | '[' atom ']' | '(' formula ')'
 *   atom     := NUM ('<='|'<') IDENT | IDENT ('<='|'<') NUM | LABEL-TEXT
 * Quantitative atoms map to strict inequalities: [c <= x] becomes x > c and
 * [x <= c] becomes x < c. Qualitative atoms must appear in `known_labels`;
 * identifiers in quantitative atoms must be declared variables. Bounds are
 * positive integers. */
BltlFormula parse_bltl(std::string_view text, const std::set<std::string>& known_labels,
                       const SymbolTable& symbols);

/* Negation normal form: negation only directly above atoms, using
 * !(a|b) = !a & !b, !(a&b) = !a | !b, !G = F!, !F = G!, and
 * !(a U<=k b) = G<=k !b | (!b U<=k (!a & !b)). */
BltlFormula to_nnf(const BltlFormula& f);

/* Steps beyond the evaluation position that can influence the verdict:
 * max over root-to-leaf paths of the sum of temporal bounds. A trace of
 * length >= horizon(f)+1 always suffices at position 0. */
long horizon(const BltlFormula& f);

/* Trajectory semantics at `position`. Throws TraceError when the trace is
 * shorter than position + horizon(f) + 1 entries. */
bool check(const BltlFormula& f, const Trajectory& tau, const HybridAutomaton& H, long position);

bool has_quantitative_atoms(const BltlFormula& f);

/* Rational constants mentioned per dimension (the C_i sets of the robust
 * sampler), deduplicated and sorted. */
std::vector<std::vector<double>> constant_sets(const BltlFormula& f, int dimension);

std::string to_string(const BltlFormula& f);

/* Early decision over a growing trajectory prefix. Exact with respect to
 * check() on the completed trace: Sat/Unsat answers never differ from it.
 * Early (pre-horizon) answers are available for top-level conjunctions of
 * F-bounded subformulas, which covers the reachability-style properties
 * this tool is used for; anything else is decided once the prefix covers
 * the horizon. */
class OnTheFlyChecker {
public:
    enum class State { Unknown, Sat, Unsat };

    OnTheFlyChecker(const BltlFormula& f, const HybridAutomaton& H);

    /* Re-examines the prefix; cheap to call often (internally strided). */
    State update(const Trajectory& prefix);

    /* Force a full evaluation of whatever prefix exists (used at horizon). */
    State finalize(const Trajectory& prefix);

private:
    struct Conjunct {
        BltlFormula formula;      // the F-body when f_bounded, else the conjunct
        long f_bound = -1;        // bound of the outer F, -1 if not F-rooted
        long body_horizon = 0;
        bool satisfied = false;
        long scanned_to = 0;      // first unexamined position for F-conjuncts
    };

    State evaluate(const Trajectory& prefix, bool at_end);

    const HybridAutomaton& H_;
    std::vector<Conjunct> conjuncts_;
    long full_horizon_;
    long last_checked_len_ = 0;
    long stride_;
    State state_ = State::Unknown;
};

}  // namespace hysmc
