#include "hysmc/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace hysmc {

// ---------------------------------------------------------------------------
// Guard
// ---------------------------------------------------------------------------

Guard Guard::lower(int var, double bound) {
    Guard g;
    g.nodes_.push_back({Kind::Lower, var, bound, -1, -1});
    return g;
}

Guard Guard::upper(int var, double bound) {
    Guard g;
    g.nodes_.push_back({Kind::Upper, var, bound, -1, -1});
    return g;
}

Guard Guard::combine(Kind kind, Guard lhs, Guard rhs) {
    Guard g;
    g.nodes_ = std::move(lhs.nodes_);
    int offset = static_cast<int>(g.nodes_.size());
    for (Node n : rhs.nodes_) {
        if (n.a >= 0) n.a += offset;
        if (n.b >= 0) n.b += offset;
        g.nodes_.push_back(n);
    }
    int a = offset - 1;
    int b = static_cast<int>(g.nodes_.size()) - 1;
    g.nodes_.push_back({kind, -1, 0.0, a, b});
    return g;
}

Guard Guard::conj(Guard lhs, Guard rhs) { return combine(Kind::And, std::move(lhs), std::move(rhs)); }
Guard Guard::disj(Guard lhs, Guard rhs) { return combine(Kind::Or, std::move(lhs), std::move(rhs)); }

int Guard::max_var_index() const {
    int m = -1;
    for (const Node& n : nodes_) m = std::max(m, n.var);
    return m;
}

bool guard_sat(const Guard& g, const Eigen::Ref<const Eigen::VectorXd>& v) {
    const std::vector<Guard::Node>& nodes = g.nodes();
    // Small stack-friendly evaluation buffer; guards are tiny in practice.
    thread_local std::vector<char> vals;
    if (vals.size() < nodes.size()) vals.resize(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); i++) {
        const Guard::Node& n = nodes[i];
        switch (n.kind) {
            case Guard::Kind::Lower: vals[i] = n.bound < v[n.var]; break;
            case Guard::Kind::Upper: vals[i] = v[n.var] < n.bound; break;
            case Guard::Kind::And: vals[i] = vals[n.a] && vals[n.b]; break;
            case Guard::Kind::Or: vals[i] = vals[n.a] || vals[n.b]; break;
        }
    }
    return vals[nodes.size() - 1] != 0;
}

namespace {

std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct GuardParser {
    std::string_view text;
    std::size_t pos = 0;
    const SymbolTable& symbols;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) pos++;
    }

    bool eat(std::string_view token) {
        skip_ws();
        if (text.substr(pos, token.size()) == token) {
            pos += token.size();
            return true;
        }
        return false;
    }

    Guard parse() {
        Guard g = parse_or();
        skip_ws();
        if (pos != text.size()) throw SyntaxError("trailing input in guard", pos);
        return g;
    }

    Guard parse_or() {
        Guard lhs = parse_and();
        while (eat("||")) lhs = Guard::disj(std::move(lhs), parse_and());
        return lhs;
    }

    Guard parse_and() {
        Guard lhs = parse_atom_or_group();
        while (eat("&&")) lhs = Guard::conj(std::move(lhs), parse_atom_or_group());
        return lhs;
    }

    Guard parse_atom_or_group() {
        skip_ws();
        if (pos < text.size() && text[pos] == '(') {
            pos++;
            Guard g = parse_or();
            skip_ws();
            if (pos >= text.size() || text[pos] != ')') throw SyntaxError("expected ')'", pos);
            pos++;
            return g;
        }
        return parse_atom();
    }

    Guard parse_atom() {
        skip_ws();
        std::size_t start = pos;
        if (pos >= text.size()) throw SyntaxError("expected guard atom", pos);
        char c = text[pos];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '.') {
            double bound = parse_number();
            if (!eat("<")) throw SyntaxError("expected '<' in guard atom", pos);
            int var = parse_variable();
            return Guard::lower(var, bound);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            int var = parse_variable();
            if (!eat("<")) throw SyntaxError("expected '<' in guard atom", pos);
            double bound = parse_number();
            return Guard::upper(var, bound);
        }
        throw SyntaxError("expected guard atom", start);
    }

    double parse_number() {
        skip_ws();
        std::size_t start = pos;
        if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) pos++;
        while (pos < text.size() &&
               (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.' ||
                text[pos] == 'e' || text[pos] == 'E' ||
                ((text[pos] == '-' || text[pos] == '+') &&
                 (text[pos - 1] == 'e' || text[pos - 1] == 'E'))))
            pos++;
        double value = 0.0;
        auto res = std::from_chars(text.data() + start, text.data() + pos, value);
        if (res.ec != std::errc() || res.ptr != text.data() + pos)
            throw SyntaxError("malformed number in guard", start);
        return value;
    }

    int parse_variable() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size()) {
            char k = text[pos];
            if (std::isalnum(static_cast<unsigned char>(k)) || k == '_' || k == '-')
                pos++;
            else
                break;
        }
        std::string_view name = text.substr(start, pos - start);
        if (name.empty()) throw SyntaxError("expected variable name in guard", start);
        auto ref = symbols.lookup(name);
        if (!ref || ref->kind != SymbolKind::Variable)
            throw UnknownSymbolError(std::string(name), start);
        return ref->index;
    }
};

}  // namespace

Guard parse_guard(std::string_view text, const SymbolTable& symbols) {
    GuardParser p{text, 0, symbols};
    return p.parse();
}

std::string to_string(const Guard& g, const SymbolTable& symbols) {
    std::string out;
    const auto& nodes = g.nodes();
    // Re-print with explicit parentheses whenever an Or appears under an And,
    // and around right-hand operands of the same connective, so that the
    // canonical text reparses to an identical tree.
    struct Printer {
        const Guard& g;
        const SymbolTable& symbols;
        std::string& out;
        void print(int index, int parent_prec, bool right_child) {
            const Guard::Node& n = g.nodes()[index];
            switch (n.kind) {
                case Guard::Kind::Lower:
                    out += format_number(n.bound);
                    out += " < ";
                    out += symbols.variables().at(n.var);
                    return;
                case Guard::Kind::Upper:
                    out += symbols.variables().at(n.var);
                    out += " < ";
                    out += format_number(n.bound);
                    return;
                case Guard::Kind::And:
                case Guard::Kind::Or: {
                    int prec = n.kind == Guard::Kind::And ? 2 : 1;
                    bool parens = prec < parent_prec || (right_child && prec == parent_prec);
                    if (parens) out += '(';
                    const char* sym = n.kind == Guard::Kind::And ? " && " : " || ";
                    print(n.a, prec, false);
                    out += sym;
                    print(n.b, prec, true);
                    if (parens) out += ')';
                    return;
                }
            }
        }
    };
    (void)nodes;
    Printer{g, symbols, out}.print(static_cast<int>(nodes.size()) - 1, 0, false);
    return out;
}

// ---------------------------------------------------------------------------
// InputSignal
// ---------------------------------------------------------------------------

double input_value(const InputSignal& s, double t) {
    if (s.schedule.empty()) throw ValidationError("input '" + s.name + "' has no breakpoints");
    if (t < s.schedule.front().first)
        throw Error("input '" + s.name + "' queried at t=" + std::to_string(t) +
                    " before its first breakpoint");
    // Schedules are short; linear scan from the back is fine and exact.
    for (auto it = s.schedule.rbegin(); it != s.schedule.rend(); ++it)
        if (it->first <= t) return it->second;
    return s.schedule.front().second;  // unreachable
}

// ---------------------------------------------------------------------------
// HybridAutomaton
// ---------------------------------------------------------------------------

int HybridAutomaton::mode_index(std::string_view name) const {
    for (std::size_t i = 0; i < modes.size(); i++)
        if (modes[i].name == name) return static_cast<int>(i);
    return -1;
}

bool HybridAutomaton::mode_has_label(int mode, std::string_view label) const {
    const auto& ls = modes.at(mode).labels;
    return std::find(ls.begin(), ls.end(), label) != ls.end();
}

std::set<std::string> HybridAutomaton::all_labels() const {
    std::set<std::string> out;
    for (const Mode& m : modes) out.insert(m.labels.begin(), m.labels.end());
    return out;
}

void HybridAutomaton::input_values(double t, std::vector<double>& out) const {
    if (t < 0.0 || t > delta * static_cast<double>(max_horizon) + 1e-9)
        throw Error("input time " + std::to_string(t) + " outside [0, horizon]");
    out.resize(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); i++) out[i] = input_value(inputs[i], t);
}

std::vector<std::string> HybridAutomaton::validate() {
    std::vector<std::string> warnings;
    int n = dimension();
    if (n == 0) throw ValidationError("model declares no variables");
    if (modes.empty()) throw ValidationError("model declares no modes");
    if (initial_mode < 0 || initial_mode >= mode_count())
        throw ValidationError("initial mode is not a declared mode");
    if (!(delta > 0.0)) throw ValidationError("delta must be positive");
    if (max_horizon < 1) throw ValidationError("horizon must be at least 1");
    if (init_distribution != "uniform")
        throw ValidationError("unsupported init distribution '" + init_distribution +
                              "' (only 'uniform' is implemented)");

    if (init.lower.size() != n || init.upper.size() != n)
        throw ValidationError("init box must cover every variable");
    for (int i = 0; i < n; i++) {
        if (!(init.lower[i] < init.upper[i]))
            throw ValidationError("init interval for '" + symbols.variables()[i] +
                                  "' is not a non-degenerate open interval");
    }

    if (parameter_values.size() != symbols.parameters().size())
        throw ValidationError("parameter table size mismatch");

    for (const Mode& m : modes) {
        if (m.rhs.size() != static_cast<std::size_t>(n))
            throw ValidationError("mode '" + m.name + "' must define exactly " +
                                  std::to_string(n) + " ODE right-hand sides");
        for (const Expr& e : m.rhs) {
            if (e.contains(ExprOp::Select)) {
                warnings.push_back("mode '" + m.name +
                                   "' uses select() in an ODE right-hand side; the vector "
                                   "field may not be C1");
                break;
            }
        }
    }
    {
        // Duplicate mode names would make transitions ambiguous.
        std::set<std::string> seen;
        for (const Mode& m : modes)
            if (!seen.insert(m.name).second)
                throw ValidationError("duplicate mode name '" + m.name + "'");
    }

    outgoing_.assign(modes.size(), {});
    for (std::size_t i = 0; i < transitions.size(); i++) {
        const Transition& t = transitions[i];
        if (t.source < 0 || t.source >= mode_count() || t.target < 0 || t.target >= mode_count())
            throw ValidationError("transition endpoints must be declared modes");
        if (t.guard.max_var_index() >= n)
            throw ValidationError("guard references an out-of-range variable");
        outgoing_[t.source].push_back(static_cast<int>(i));
    }

    for (const InputSignal& s : inputs) {
        if (s.schedule.empty())
            throw ValidationError("input '" + s.name + "' has no breakpoints");
        if (s.schedule.front().first != 0.0)
            throw ValidationError("input '" + s.name + "' must start at time 0");
        for (std::size_t i = 1; i < s.schedule.size(); i++)
            if (!(s.schedule[i - 1].first < s.schedule[i].first))
                throw ValidationError("input '" + s.name +
                                      "' breakpoints must be strictly increasing");
    }
    return warnings;
}

// ---------------------------------------------------------------------------
// Document format (see docs/model_format.md). Line-oriented:
//
//   # comment
//   variables u v w s
//   delta 0.1
//   horizon 6000
//   init-distribution uniform
//   parameter theta_o 0.006
//   input eps 0 1 1 0
//   init u 0 0.001
//   initial q0
//   mode q0
//     label Resting mode
//     ode u = ts * (eps - u / tau_o1)
//   transition q0 q1 : theta_o < u
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_ws(std::string_view line) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) i++;
        std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) i++;
        if (i > start) out.emplace_back(line.substr(start, i - start));
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

double parse_double_or_throw(const std::string& text, int line_no) {
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw SyntaxError("malformed number '" + text + "' on line " + std::to_string(line_no), 0);
    return v;
}

}  // namespace

HybridAutomaton parse_model(std::string_view document) {
    HybridAutomaton H;
    struct PendingOde {
        int mode;
        std::string var;
        std::string text;
        int line;
    };
    struct PendingTransition {
        std::string src, dst, guard;
        int line;
    };
    std::vector<PendingOde> odes;
    std::vector<PendingTransition> trans;
    std::vector<std::pair<std::string, std::pair<double, double>>> init_entries;
    std::string initial_name;
    int current_mode = -1;

    std::istringstream in{std::string(document)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        line_no++;
        std::string_view line = trim(raw);
        if (line.empty() || line[0] == '#') continue;

        auto fail = [&](const std::string& msg) -> void {
            throw SyntaxError(msg + " on line " + std::to_string(line_no), 0);
        };

        std::size_t sp = line.find_first_of(" \t");
        std::string keyword(sp == std::string_view::npos ? line : line.substr(0, sp));
        std::string_view rest = sp == std::string_view::npos ? std::string_view{} : trim(line.substr(sp));

        if (keyword == "variables") {
            for (const std::string& name : split_ws(rest)) H.symbols.add_variable(name);
        } else if (keyword == "delta") {
            H.delta = parse_double_or_throw(std::string(rest), line_no);
        } else if (keyword == "horizon") {
            H.max_horizon = static_cast<long>(parse_double_or_throw(std::string(rest), line_no));
        } else if (keyword == "init-distribution") {
            H.init_distribution = std::string(rest);
        } else if (keyword == "parameter") {
            auto toks = split_ws(rest);
            if (toks.size() != 2) fail("expected: parameter <name> <value>");
            H.symbols.add_parameter(toks[0]);
            H.parameter_values.push_back(parse_double_or_throw(toks[1], line_no));
        } else if (keyword == "input") {
            auto toks = split_ws(rest);
            if (toks.size() < 3 || (toks.size() - 1) % 2 != 0)
                fail("expected: input <name> <t0> <v0> [<t1> <v1> ...]");
            InputSignal s;
            s.name = toks[0];
            for (std::size_t i = 1; i + 1 < toks.size(); i += 2)
                s.schedule.emplace_back(parse_double_or_throw(toks[i], line_no),
                                        parse_double_or_throw(toks[i + 1], line_no));
            H.symbols.add_input(s.name);
            H.inputs.push_back(std::move(s));
        } else if (keyword == "init") {
            auto toks = split_ws(rest);
            if (toks.size() != 3) fail("expected: init <var> <lower> <upper>");
            init_entries.push_back({toks[0],
                                    {parse_double_or_throw(toks[1], line_no),
                                     parse_double_or_throw(toks[2], line_no)}});
        } else if (keyword == "initial") {
            initial_name = std::string(rest);
        } else if (keyword == "mode") {
            if (rest.empty()) fail("mode needs a name");
            Mode m;
            m.name = std::string(rest);
            H.modes.push_back(std::move(m));
            current_mode = static_cast<int>(H.modes.size()) - 1;
        } else if (keyword == "label") {
            if (current_mode < 0) fail("label outside a mode block");
            if (rest.empty()) fail("label needs text");
            H.modes[current_mode].labels.emplace_back(rest);
        } else if (keyword == "ode") {
            if (current_mode < 0) fail("ode outside a mode block");
            std::size_t eq = rest.find('=');
            if (eq == std::string_view::npos) fail("expected: ode <var> = <expression>");
            std::string var(trim(rest.substr(0, eq)));
            std::string body(trim(rest.substr(eq + 1)));
            if (var.empty() || body.empty()) fail("expected: ode <var> = <expression>");
            odes.push_back({current_mode, var, body, line_no});
        } else if (keyword == "transition") {
            std::size_t colon = rest.find(':');
            if (colon == std::string_view::npos) fail("expected: transition <src> <dst> : <guard>");
            auto endpoints = split_ws(rest.substr(0, colon));
            if (endpoints.size() != 2) fail("expected: transition <src> <dst> : <guard>");
            trans.push_back({endpoints[0], endpoints[1],
                             std::string(trim(rest.substr(colon + 1))), line_no});
        } else {
            fail("unknown directive '" + keyword + "'");
        }
    }

    int n = H.dimension();
    if (n == 0) throw ValidationError("model declares no variables");

    // Init box, in variable order.
    H.init.lower = Eigen::VectorXd::Zero(n);
    H.init.upper = Eigen::VectorXd::Zero(n);
    std::vector<bool> have(n, false);
    for (const auto& [var, bounds] : init_entries) {
        auto ref = H.symbols.lookup(var);
        if (!ref || ref->kind != SymbolKind::Variable)
            throw ValidationError("init entry for unknown variable '" + var + "'");
        H.init.lower[ref->index] = bounds.first;
        H.init.upper[ref->index] = bounds.second;
        have[ref->index] = true;
    }
    for (int i = 0; i < n; i++)
        if (!have[i])
            throw ValidationError("missing init interval for variable '" +
                                  H.symbols.variables()[i] + "'");

    // ODEs, one per (mode, variable).
    for (Mode& m : H.modes) m.rhs.resize(n);
    std::vector<std::vector<bool>> have_ode(H.modes.size(), std::vector<bool>(n, false));
    for (const auto& o : odes) {
        auto ref = H.symbols.lookup(o.var);
        if (!ref || ref->kind != SymbolKind::Variable)
            throw ValidationError("ode for unknown variable '" + o.var + "' on line " +
                                  std::to_string(o.line));
        if (have_ode[o.mode][ref->index])
            throw ValidationError("duplicate ode for '" + o.var + "' in mode '" +
                                  H.modes[o.mode].name + "'");
        H.modes[o.mode].rhs[ref->index] = parse_expr(o.text, H.symbols);
        have_ode[o.mode][ref->index] = true;
    }
    for (std::size_t m = 0; m < H.modes.size(); m++)
        for (int i = 0; i < n; i++)
            if (!have_ode[m][i])
                throw ValidationError("mode '" + H.modes[m].name + "' lacks an ode for '" +
                                      H.symbols.variables()[i] + "'");

    if (initial_name.empty()) throw ValidationError("missing 'initial' directive");
    H.initial_mode = H.mode_index(initial_name);
    if (H.initial_mode < 0)
        throw ValidationError("initial mode '" + initial_name + "' is not declared");

    for (const auto& t : trans) {
        int src = H.mode_index(t.src);
        int dst = H.mode_index(t.dst);
        if (src < 0 || dst < 0)
            throw ValidationError("transition endpoints '" + t.src + "' -> '" + t.dst +
                                  "' must be declared modes (line " + std::to_string(t.line) + ")");
        H.transitions.push_back({src, parse_guard(t.guard, H.symbols), dst});
    }

    H.validate();
    return H;
}

std::string serialize_model(const HybridAutomaton& H) {
    std::string out;
    auto num = [](double v) { return format_number(v); };

    out += "variables";
    for (const std::string& v : H.symbols.variables()) out += " " + v;
    out += "\n";
    out += "delta " + num(H.delta) + "\n";
    out += "horizon " + std::to_string(H.max_horizon) + "\n";
    out += "init-distribution " + H.init_distribution + "\n";
    for (std::size_t i = 0; i < H.symbols.parameters().size(); i++)
        out += "parameter " + H.symbols.parameters()[i] + " " + num(H.parameter_values[i]) + "\n";
    for (const InputSignal& s : H.inputs) {
        out += "input " + s.name;
        for (const auto& [t, v] : s.schedule) out += " " + num(t) + " " + num(v);
        out += "\n";
    }
    for (int i = 0; i < H.dimension(); i++)
        out += "init " + H.symbols.variables()[i] + " " + num(H.init.lower[i]) + " " +
               num(H.init.upper[i]) + "\n";
    out += "initial " + H.modes.at(H.initial_mode).name + "\n";
    for (const Mode& m : H.modes) {
        out += "mode " + m.name + "\n";
        for (const std::string& l : m.labels) out += "  label " + l + "\n";
        for (int i = 0; i < H.dimension(); i++)
            out += "  ode " + H.symbols.variables()[i] + " = " + to_string(m.rhs[i], H.symbols) +
                   "\n";
    }
    for (const Transition& t : H.transitions)
        out += "transition " + H.modes[t.source].name + " " + H.modes[t.target].name + " : " +
               to_string(t.guard, H.symbols) + "\n";
    return out;
}

}  // namespace hysmc
