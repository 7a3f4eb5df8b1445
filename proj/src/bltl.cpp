#include "hysmc/bltl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace hysmc {

BltlFormula BltlFormula::from_nodes(std::vector<BltlNode> nodes) {
    BltlFormula f;
    f.nodes_ = std::move(nodes);
    return f;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

class BltlParser {
public:
    BltlParser(std::string_view text, const std::set<std::string>& labels,
               const SymbolTable& symbols)
        : text_(text), labels_(labels), symbols_(symbols) {}

    BltlFormula parse() {
        int root = parse_until();
        skip_ws();
        if (pos_ != text_.size()) throw SyntaxError("trailing input in formula", pos_);
        (void)root;
        return BltlFormula::from_nodes(std::move(nodes_));
    }

private:
    int emit(BltlNode n) {
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size() - 1);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            pos_++;
    }

    bool eat(std::string_view token) {
        skip_ws();
        if (text_.substr(pos_, token.size()) == token) {
            pos_ += token.size();
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    long parse_bound() {
        if (!eat("<=")) throw SyntaxError("expected '<=' after temporal operator", pos_);
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) pos_++;
        if (pos_ == start) throw SyntaxError("expected an integer bound", pos_);
        long bound = 0;
        std::from_chars(text_.data() + start, text_.data() + pos_, bound);
        if (bound < 1) throw SyntaxError("temporal bounds must be positive", start);
        return bound;
    }

    // formula := or (U<=N or)*, right-associative
    int parse_until() {
        int lhs = parse_or();
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == 'U') {
            // Lone 'U' token: not a label or identifier here.
            pos_++;
            long bound = parse_bound();
            int rhs = parse_until();
            return emit({BltlOp::Until, lhs, rhs, bound, -1, 0.0, {}});
        }
        return lhs;
    }

    int parse_or() {
        int lhs = parse_and();
        while (peek() == '|') {
            pos_++;
            int rhs = parse_and();
            lhs = emit({BltlOp::Or, lhs, rhs, 0, -1, 0.0, {}});
        }
        return lhs;
    }

    int parse_and() {
        int lhs = parse_unary();
        while (peek() == '&') {
            pos_++;
            int rhs = parse_unary();
            lhs = emit({BltlOp::And, lhs, rhs, 0, -1, 0.0, {}});
        }
        return lhs;
    }

    int parse_unary() {
        skip_ws();
        if (pos_ >= text_.size()) throw SyntaxError("unexpected end of formula", pos_);
        char c = text_[pos_];
        if (c == '!') {
            pos_++;
            int a = parse_unary();
            return emit({BltlOp::Not, a, -1, 0, -1, 0.0, {}});
        }
        if (c == '(') {
            pos_++;
            int inner = parse_until();
            if (!eat(")")) throw SyntaxError("expected ')'", pos_);
            return inner;
        }
        if (c == '[') return parse_atom();
        if (c == 'F' || c == 'G') {
            // Temporal operator only when '<=' follows; otherwise fall through
            // to keywords (e.g. a label-less grammar has none starting with F().
            std::size_t save = pos_;
            pos_++;
            skip_ws();
            if (text_.substr(pos_, 2) == "<=") {
                long bound = parse_bound();
                if (!eat("(")) throw SyntaxError("expected '(' after bound", pos_);
                int a = parse_until();
                if (!eat(")")) throw SyntaxError("expected ')'", pos_);
                return emit({c == 'F' ? BltlOp::Finally : BltlOp::Globally, a, -1, bound, -1, 0.0,
                             {}});
            }
            pos_ = save;
        }
        if (eat("true")) return emit({BltlOp::True, -1, -1, 0, -1, 0.0, {}});
        if (eat("false")) return emit({BltlOp::False, -1, -1, 0, -1, 0.0, {}});
        throw SyntaxError("expected a formula", pos_);
    }

    int parse_atom() {
        std::size_t open = pos_;
        pos_++;  // '['
        std::size_t close = text_.find(']', pos_);
        if (close == std::string_view::npos) throw SyntaxError("unterminated '['", open);
        std::string_view body = text_.substr(pos_, close - pos_);
        pos_ = close + 1;

        // Trim.
        while (!body.empty() && std::isspace(static_cast<unsigned char>(body.front())))
            body.remove_prefix(1);
        while (!body.empty() && std::isspace(static_cast<unsigned char>(body.back())))
            body.remove_suffix(1);
        if (body.empty()) throw SyntaxError("empty atom", open);

        // NUM (<=|<) IDENT  or  IDENT (<=|<) NUM, otherwise a label.
        auto as_quantitative = [&]() -> int {
            std::size_t rel = body.find("<=");
            std::size_t rel_len = 2;
            if (rel == std::string_view::npos) {
                rel = body.find('<');
                rel_len = 1;
            }
            if (rel == std::string_view::npos) return -1;
            auto trim = [](std::string_view s) {
                while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
                    s.remove_prefix(1);
                while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
                    s.remove_suffix(1);
                return s;
            };
            std::string_view lhs = trim(body.substr(0, rel));
            std::string_view rhs = trim(body.substr(rel + rel_len));
            if (lhs.empty() || rhs.empty()) return -1;

            auto parse_num = [](std::string_view s, double& out) {
                auto res = std::from_chars(s.data(), s.data() + s.size(), out);
                return res.ec == std::errc() && res.ptr == s.data() + s.size();
            };
            double c = 0.0;
            if (parse_num(lhs, c)) {
                auto ref = symbols_.lookup(rhs);
                if (!ref || ref->kind != SymbolKind::Variable)
                    throw SyntaxError("'" + std::string(rhs) + "' is not a declared variable",
                                      open);
                // c <= x_i denotes the strict atom x_i > c.
                return emit({BltlOp::Greater, -1, -1, 0, ref->index, c, std::string(rhs)});
            }
            if (parse_num(rhs, c)) {
                auto ref = symbols_.lookup(lhs);
                if (!ref || ref->kind != SymbolKind::Variable)
                    throw SyntaxError("'" + std::string(lhs) + "' is not a declared variable",
                                      open);
                return emit({BltlOp::Less, -1, -1, 0, ref->index, c, std::string(lhs)});
            }
            return -1;
        };

        if (body.find('<') != std::string_view::npos) {
            int idx = as_quantitative();
            if (idx >= 0) return idx;
        }
        std::string label(body);
        if (!labels_.count(label))
            throw SyntaxError("unknown label '" + label + "'", open);
        return emit({BltlOp::Label, -1, -1, 0, -1, 0.0, label});
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    const std::set<std::string>& labels_;
    const SymbolTable& symbols_;
    std::vector<BltlNode> nodes_;
};

}  // namespace

BltlFormula parse_bltl(std::string_view text, const std::set<std::string>& known_labels,
                       const SymbolTable& symbols) {
    return BltlParser(text, known_labels, symbols).parse();
}

// ---------------------------------------------------------------------------
// NNF
// ---------------------------------------------------------------------------

// The Until duality needs !b twice; rebuilding the subtree twice keeps the
// children-first invariant without sharing nodes.
static int nnf_build(const std::vector<BltlNode>& src, std::vector<BltlNode>& out, int index,
                     bool negated) {
    auto emit = [&out](BltlNode n) {
        out.push_back(std::move(n));
        return static_cast<int>(out.size() - 1);
    };
    const BltlNode& n = src[index];
    switch (n.op) {
        case BltlOp::True:
            return emit({negated ? BltlOp::False : BltlOp::True, -1, -1, 0, -1, 0.0, {}});
        case BltlOp::False:
            return emit({negated ? BltlOp::True : BltlOp::False, -1, -1, 0, -1, 0.0, {}});
        case BltlOp::Label:
        case BltlOp::Less:
        case BltlOp::Greater: {
            int atom = emit(n);
            if (negated) return emit({BltlOp::Not, atom, -1, 0, -1, 0.0, {}});
            return atom;
        }
        case BltlOp::Not:
            return nnf_build(src, out, n.a, !negated);
        case BltlOp::And:
        case BltlOp::Or: {
            BltlOp op = (n.op == BltlOp::And) == !negated ? BltlOp::And : BltlOp::Or;
            int a = nnf_build(src, out, n.a, negated);
            int b = nnf_build(src, out, n.b, negated);
            return emit({op, a, b, 0, -1, 0.0, {}});
        }
        case BltlOp::Finally:
        case BltlOp::Globally: {
            BltlOp op = (n.op == BltlOp::Finally) == !negated ? BltlOp::Finally : BltlOp::Globally;
            int a = nnf_build(src, out, n.a, negated);
            return emit({op, a, -1, n.bound, -1, 0.0, {}});
        }
        case BltlOp::Until: {
            if (!negated) {
                int a = nnf_build(src, out, n.a, false);
                int b = nnf_build(src, out, n.b, false);
                return emit({BltlOp::Until, a, b, n.bound, -1, 0.0, {}});
            }
            // !(a U<=k b)  =  G<=k !b  |  (!b U<=k (!a & !b))
            int gb = nnf_build(src, out, n.b, true);
            int g = emit({BltlOp::Globally, gb, -1, n.bound, -1, 0.0, {}});
            int ub = nnf_build(src, out, n.b, true);
            int na = nnf_build(src, out, n.a, true);
            int nb = nnf_build(src, out, n.b, true);
            int conj = emit({BltlOp::And, na, nb, 0, -1, 0.0, {}});
            int u = emit({BltlOp::Until, ub, conj, n.bound, -1, 0.0, {}});
            return emit({BltlOp::Or, g, u, 0, -1, 0.0, {}});
        }
    }
    throw Error("corrupt formula");
}

BltlFormula to_nnf(const BltlFormula& f) {
    std::vector<BltlNode> out;
    out.reserve(f.nodes().size() * 2);
    nnf_build(f.nodes(), out, f.root(), false);
    return BltlFormula::from_nodes(std::move(out));
}

// ---------------------------------------------------------------------------
// Horizon
// ---------------------------------------------------------------------------

static long horizon_of(const std::vector<BltlNode>& nodes, int index) {
    const BltlNode& n = nodes[index];
    switch (n.op) {
        case BltlOp::True: case BltlOp::False:
        case BltlOp::Label: case BltlOp::Less: case BltlOp::Greater:
            return 0;
        case BltlOp::Not:
            return horizon_of(nodes, n.a);
        case BltlOp::And: case BltlOp::Or:
            return std::max(horizon_of(nodes, n.a), horizon_of(nodes, n.b));
        case BltlOp::Finally: case BltlOp::Globally:
            return n.bound + horizon_of(nodes, n.a);
        case BltlOp::Until:
            return n.bound + std::max(horizon_of(nodes, n.a), horizon_of(nodes, n.b));
    }
    throw Error("corrupt formula");
}

long horizon(const BltlFormula& f) { return horizon_of(f.nodes(), f.root()); }

bool has_quantitative_atoms(const BltlFormula& f) {
    for (const BltlNode& n : f.nodes())
        if (n.op == BltlOp::Less || n.op == BltlOp::Greater) return true;
    return false;
}

std::vector<std::vector<double>> constant_sets(const BltlFormula& f, int dimension) {
    std::vector<std::set<double>> sets(dimension);
    for (const BltlNode& n : f.nodes())
        if (n.op == BltlOp::Less || n.op == BltlOp::Greater) sets.at(n.var).insert(n.threshold);
    std::vector<std::vector<double>> out(dimension);
    for (int i = 0; i < dimension; i++) out[i].assign(sets[i].begin(), sets[i].end());
    return out;
}

// ---------------------------------------------------------------------------
// Checking: per-node satisfaction vectors over all trace positions, using
// next-true / next-false indices so every operator costs O(length).
// ---------------------------------------------------------------------------

namespace {

/* next_true[p] = smallest q >= p with bits[q] set, or len when none. */
void next_index_of(const std::vector<char>& bits, bool value, std::vector<long>& out) {
    long len = static_cast<long>(bits.size());
    out.resize(len + 1);
    out[len] = len;
    for (long p = len - 1; p >= 0; p--)
        out[p] = (bits[p] != 0) == value ? p : out[p + 1];
}

}  // namespace

/* Satisfaction of every node at every position of the (prefix of the)
 * trajectory. Internal helper shared by check() and the on-the-fly path. */
static std::vector<std::vector<char>> evaluate_nodes(const BltlFormula& f, const Trajectory& tau,
                                                     const HybridAutomaton& H, long len) {
    const std::vector<BltlNode>& nodes = f.nodes();
    std::vector<std::vector<char>> sat(nodes.size());
    std::vector<long> next_a, next_b;
    for (std::size_t i = 0; i < nodes.size(); i++) {
        const BltlNode& n = nodes[i];
        std::vector<char>& row = sat[i];
        row.resize(len);
        switch (n.op) {
            case BltlOp::True:
                std::fill(row.begin(), row.end(), 1);
                break;
            case BltlOp::False:
                std::fill(row.begin(), row.end(), 0);
                break;
            case BltlOp::Label:
                for (long p = 0; p < len; p++)
                    row[p] = H.mode_has_label(tau.modes[p], n.label) ? 1 : 0;
                break;
            case BltlOp::Less:
                for (long p = 0; p < len; p++)
                    row[p] = tau.states[p][n.var] < n.threshold ? 1 : 0;
                break;
            case BltlOp::Greater:
                for (long p = 0; p < len; p++)
                    row[p] = tau.states[p][n.var] > n.threshold ? 1 : 0;
                break;
            case BltlOp::Not:
                for (long p = 0; p < len; p++) row[p] = sat[n.a][p] ? 0 : 1;
                break;
            case BltlOp::And:
                for (long p = 0; p < len; p++) row[p] = (sat[n.a][p] && sat[n.b][p]) ? 1 : 0;
                break;
            case BltlOp::Or:
                for (long p = 0; p < len; p++) row[p] = (sat[n.a][p] || sat[n.b][p]) ? 1 : 0;
                break;
            case BltlOp::Finally: {
                next_index_of(sat[n.a], true, next_a);
                for (long p = 0; p < len; p++)
                    row[p] = next_a[p] <= std::min(p + n.bound, len - 1) ? 1 : 0;
                break;
            }
            case BltlOp::Globally: {
                next_index_of(sat[n.a], false, next_a);
                for (long p = 0; p < len; p++)
                    row[p] = next_a[p] > std::min(p + n.bound, len - 1) ? 1 : 0;
                break;
            }
            case BltlOp::Until: {
                // sat[p] iff some q in [p, min(p+k, len-1)] satisfies b with a
                // true on [p, q): q may not pass the first a-failure.
                next_index_of(sat[n.a], false, next_a);
                next_index_of(sat[n.b], true, next_b);
                for (long p = 0; p < len; p++) {
                    long limit = std::min({p + n.bound, len - 1, next_a[p]});
                    row[p] = next_b[p] <= limit ? 1 : 0;
                }
                break;
            }
        }
    }
    return sat;
}

bool check(const BltlFormula& f, const Trajectory& tau, const HybridAutomaton& H, long position) {
    long len = tau.length();
    if (position < 0 || position >= len) throw TraceError("check position outside the trace");
    long needed = position + horizon(f);
    if (needed > len - 1)
        throw TraceError("trace too short: need " + std::to_string(needed + 1) +
                         " entries, have " + std::to_string(len));
    auto sat = evaluate_nodes(f, tau, H, len);
    return sat[f.root()][position] != 0;
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace {

std::string format_threshold(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Precedence: U lowest (1), then | (2), & (3), unary (4).
void print_bltl(const std::vector<BltlNode>& nodes, int index, int parent_prec, std::string& out) {
    const BltlNode& n = nodes[index];
    switch (n.op) {
        case BltlOp::True: out += "true"; return;
        case BltlOp::False: out += "false"; return;
        case BltlOp::Label: out += "[" + n.label + "]"; return;
        case BltlOp::Less:
            out += "[" + n.label + " < " + format_threshold(n.threshold) + "]";
            return;
        case BltlOp::Greater:
            out += "[" + format_threshold(n.threshold) + " < " + n.label + "]";
            return;
        case BltlOp::Not:
            out += "!";
            print_bltl(nodes, n.a, 4, out);
            return;
        case BltlOp::Finally:
        case BltlOp::Globally:
            out += n.op == BltlOp::Finally ? "F<=" : "G<=";
            out += std::to_string(n.bound);
            out += "(";
            print_bltl(nodes, n.a, 0, out);
            out += ")";
            return;
        case BltlOp::And:
        case BltlOp::Or: {
            int prec = n.op == BltlOp::And ? 3 : 2;
            bool parens = prec < parent_prec;
            if (parens) out += "(";
            print_bltl(nodes, n.a, prec, out);
            out += n.op == BltlOp::And ? " & " : " | ";
            print_bltl(nodes, n.b, prec + 1, out);  // left-assoc: tighten right child
            if (parens) out += ")";
            return;
        }
        case BltlOp::Until: {
            int prec = 1;
            bool parens = prec < parent_prec;
            if (parens) out += "(";
            print_bltl(nodes, n.a, prec + 1, out);  // right-assoc
            out += " U<=" + std::to_string(n.bound) + " ";
            print_bltl(nodes, n.b, prec, out);
            if (parens) out += ")";
            return;
        }
    }
}

}  // namespace

std::string to_string(const BltlFormula& f) {
    std::string out;
    print_bltl(f.nodes(), f.root(), 0, out);
    return out;
}

// ---------------------------------------------------------------------------
// On-the-fly checking
// ---------------------------------------------------------------------------

namespace {

BltlFormula subtree(const BltlFormula& f, int root) {
    const auto& src = f.nodes();
    std::vector<int> remap(src.size(), -1);
    std::vector<BltlNode> out;
    // children-first order makes a single forward pass sufficient
    std::vector<char> needed(src.size(), 0);
    std::vector<int> stack{root};
    while (!stack.empty()) {
        int i = stack.back();
        stack.pop_back();
        if (needed[i]) continue;
        needed[i] = 1;
        const BltlNode& n = src[i];
        if (n.a >= 0) stack.push_back(n.a);
        if (n.b >= 0) stack.push_back(n.b);
    }
    for (std::size_t i = 0; i < src.size(); i++) {
        if (!needed[i]) continue;
        BltlNode n = src[i];
        if (n.a >= 0) n.a = remap[n.a];
        if (n.b >= 0) n.b = remap[n.b];
        remap[i] = static_cast<int>(out.size());
        out.push_back(std::move(n));
    }
    return BltlFormula::from_nodes(std::move(out));
}

void flatten_conjuncts(const BltlFormula& f, int index, std::vector<int>& out) {
    const BltlNode& n = f.nodes()[index];
    if (n.op == BltlOp::And) {
        flatten_conjuncts(f, n.a, out);
        flatten_conjuncts(f, n.b, out);
    } else {
        out.push_back(index);
    }
}

}  // namespace

OnTheFlyChecker::OnTheFlyChecker(const BltlFormula& f, const HybridAutomaton& H) : H_(H) {
    full_horizon_ = horizon(f);
    std::vector<int> roots;
    flatten_conjuncts(f, f.root(), roots);
    for (int r : roots) {
        const BltlNode& n = f.nodes()[r];
        Conjunct c;
        if (n.op == BltlOp::Finally) {
            c.formula = subtree(f, n.a);
            c.f_bound = n.bound;
            c.body_horizon = horizon(c.formula);
        } else {
            c.formula = subtree(f, r);
            c.f_bound = -1;
            c.body_horizon = horizon(c.formula);
        }
        conjuncts_.push_back(std::move(c));
    }
    stride_ = std::max<long>(25, full_horizon_ / 32);
}

OnTheFlyChecker::State OnTheFlyChecker::evaluate(const Trajectory& prefix, bool at_end) {
    long len = prefix.length();
    bool all_sat = true;
    for (Conjunct& c : conjuncts_) {
        if (c.satisfied) continue;
        if (c.f_bound < 0) {
            // Plain conjunct: decidable only once its horizon is covered.
            if (len - 1 >= c.body_horizon) {
                if (check(c.formula, prefix, H_, 0))
                    c.satisfied = true;
                else
                    return State::Unsat;
            } else {
                all_sat = false;
            }
            continue;
        }
        // F<=k(body): scan fully covered positions for a witness.
        long coverable = len - 1 - c.body_horizon;
        long last = std::min(c.f_bound, coverable);
        if (last >= c.scanned_to) {
            auto sat = evaluate_nodes(c.formula, prefix, H_, len);
            const std::vector<char>& row = sat[c.formula.root()];
            for (long p = c.scanned_to; p <= last; p++) {
                if (row[p]) {
                    c.satisfied = true;
                    break;
                }
            }
            c.scanned_to = last + 1;
        }
        if (!c.satisfied) {
            if (c.scanned_to > c.f_bound) return State::Unsat;  // every position refuted
            all_sat = false;
        }
    }
    if (all_sat) return State::Sat;
    if (at_end)
        throw TraceError("on-the-fly checker reached the end of an under-length trace");
    return State::Unknown;
}

OnTheFlyChecker::State OnTheFlyChecker::update(const Trajectory& prefix) {
    if (state_ != State::Unknown) return state_;
    long len = prefix.length();
    bool at_horizon = len - 1 >= full_horizon_;
    if (!at_horizon && len - last_checked_len_ < stride_) return State::Unknown;
    last_checked_len_ = len;
    state_ = evaluate(prefix, at_horizon);
    return state_;
}

OnTheFlyChecker::State OnTheFlyChecker::finalize(const Trajectory& prefix) {
    if (state_ != State::Unknown) return state_;
    last_checked_len_ = prefix.length();
    state_ = evaluate(prefix, true);
    return state_;
}

}  // namespace hysmc
