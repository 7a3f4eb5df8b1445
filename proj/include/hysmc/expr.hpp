#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hysmc/errors.hpp"

namespace hysmc {

enum class SymbolKind : std::uint8_t { Variable, Parameter, Input };

struct SymbolRef {
    SymbolKind kind;
    int index;
};

/* Declared names an expression may reference. Owned by the automaton;
 * expressions store resolved (kind, index) pairs rather than strings.
 * Identifiers match [A-Za-z_][A-Za-z0-9_-]*. Note that '-' is a legal
 * identifier character (species like PER-CRY), so a binary minus after
 * an identifier must be separated by whitespace or a delimiter. */
class SymbolTable {
public:
    int add_variable(const std::string& name);
    int add_parameter(const std::string& name);
    int add_input(const std::string& name);

    std::optional<SymbolRef> lookup(std::string_view name) const;
    const std::string& name_of(SymbolRef ref) const;

    const std::vector<std::string>& variables() const { return variables_; }
    const std::vector<std::string>& parameters() const { return parameters_; }
    const std::vector<std::string>& inputs() const { return inputs_; }

    static bool valid_identifier(std::string_view name);

private:
    int add(std::vector<std::string>& into, SymbolKind kind, const std::string& name);

    std::vector<std::string> variables_;
    std::vector<std::string> parameters_;
    std::vector<std::string> inputs_;
    std::unordered_map<std::string, SymbolRef> by_name_;
};

enum class ExprOp : std::uint8_t {
    Const, Var, Param, Input,
    Neg, Exp, Ln, Tanh, Sqrt, Abs,
    Add, Sub, Mul, Div, Pow, Min, Max,
    Select,  // a >= 0 ? b : c
};

struct ExprNode {
    ExprOp op;
    double value = 0.0;     // Const
    int sym = -1;           // Var/Param/Input: index within its kind
    int a = -1, b = -1, c = -1;
};

/* Arithmetic expression over declared symbols. Immutable after parsing.
 * Nodes are stored in evaluation order (children strictly before their
 * parents, root last), so evaluation is a single linear pass. */
class Expr {
public:
    const std::vector<ExprNode>& nodes() const { return nodes_; }
    bool contains(ExprOp op) const;

private:
    friend class ExprBuilder;
    std::vector<ExprNode> nodes_;
};

/* Bindings for one evaluation: values for every symbol kind, in the
 * symbol table's index order. */
struct EvalEnv {
    std::span<const double> variables;
    std::span<const double> parameters;
    std::span<const double> inputs;
};

Expr parse_expr(std::string_view text, const SymbolTable& symbols);

/* Evaluates on finite inputs to a finite real, or throws EvalError naming
 * the offending operation (division by zero, ln of a non-positive value,
 * pow outside its domain, non-finite result). Never returns NaN/inf. */
double eval_expr(const Expr& e, const EvalEnv& env);

/* Same, writing intermediate values into caller-owned scratch (resized as
 * needed). The fast path for integrator inner loops. */
double eval_expr(const Expr& e, const EvalEnv& env, std::vector<double>& scratch);

std::set<std::string> free_symbols(const Expr& e, const SymbolTable& symbols);

/* Canonical rendering; parse_expr(to_string(e)) reproduces e node-for-node. */
std::string to_string(const Expr& e, const SymbolTable& symbols);

}  // namespace hysmc
