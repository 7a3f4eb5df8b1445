#include "hysmc/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

namespace hysmc {

// ---------------------------------------------------------------------------
// SymbolTable
// ---------------------------------------------------------------------------

bool SymbolTable::valid_identifier(std::string_view name) {
    if (name.empty()) return false;
    char c0 = name[0];
    if (!(std::isalpha(static_cast<unsigned char>(c0)) || c0 == '_')) return false;
    for (char c : name) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    }
    return true;
}

int SymbolTable::add(std::vector<std::string>& into, SymbolKind kind, const std::string& name) {
    if (!valid_identifier(name))
        throw ValidationError("invalid identifier '" + name + "'");
    if (by_name_.count(name))
        throw ValidationError("duplicate symbol '" + name + "'");
    int index = static_cast<int>(into.size());
    into.push_back(name);
    by_name_.emplace(name, SymbolRef{kind, index});
    return index;
}

int SymbolTable::add_variable(const std::string& name) {
    return add(variables_, SymbolKind::Variable, name);
}
int SymbolTable::add_parameter(const std::string& name) {
    return add(parameters_, SymbolKind::Parameter, name);
}
int SymbolTable::add_input(const std::string& name) {
    return add(inputs_, SymbolKind::Input, name);
}

std::optional<SymbolRef> SymbolTable::lookup(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
}

const std::string& SymbolTable::name_of(SymbolRef ref) const {
    switch (ref.kind) {
        case SymbolKind::Variable: return variables_.at(ref.index);
        case SymbolKind::Parameter: return parameters_.at(ref.index);
        case SymbolKind::Input: return inputs_.at(ref.index);
    }
    throw Error("bad symbol ref");
}

// ---------------------------------------------------------------------------
// Expr
// ---------------------------------------------------------------------------

bool Expr::contains(ExprOp op) const {
    for (const ExprNode& n : nodes_)
        if (n.op == op) return true;
    return false;
}

class ExprBuilder {
public:
    static Expr take(std::vector<ExprNode>&& nodes) {
        Expr e;
        e.nodes_ = std::move(nodes);
        return e;
    }
};

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

namespace {

enum class TokKind { Number, Ident, Op, LParen, RParen, Comma, End };

struct Token {
    TokKind kind;
    std::string_view text;
    double number = 0.0;
    std::size_t pos = 0;
};

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) { advance(); }

    const Token& peek() const { return tok_; }

    Token next() {
        Token t = tok_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) pos_++;
        tok_.pos = pos_;
        if (pos_ >= text_.size()) {
            tok_ = {TokKind::End, {}, 0.0, pos_};
            return;
        }
        char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            lex_number();
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < text_.size()) {
                char k = text_[pos_];
                if (std::isalnum(static_cast<unsigned char>(k)) || k == '_' || k == '-')
                    pos_++;
                else
                    break;
            }
            tok_ = {TokKind::Ident, text_.substr(start, pos_ - start), 0.0, start};
            return;
        }
        switch (c) {
            case '(': tok_ = {TokKind::LParen, text_.substr(pos_, 1), 0.0, pos_}; pos_++; return;
            case ')': tok_ = {TokKind::RParen, text_.substr(pos_, 1), 0.0, pos_}; pos_++; return;
            case ',': tok_ = {TokKind::Comma, text_.substr(pos_, 1), 0.0, pos_}; pos_++; return;
            case '+': case '-': case '*': case '/': case '^':
                tok_ = {TokKind::Op, text_.substr(pos_, 1), 0.0, pos_};
                pos_++;
                return;
            default:
                throw SyntaxError(std::string("unexpected character '") + c + "'", pos_);
        }
    }

    void lex_number() {
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) pos_++;
        if (pos_ < text_.size() && text_[pos_] == '.') {
            pos_++;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) pos_++;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t mark = pos_;
            pos_++;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) pos_++;
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) pos_++;
            } else {
                pos_ = mark;  // 'e' belonged to something else; unlikely but harmless
            }
        }
        std::string_view body = text_.substr(start, pos_ - start);
        double value = 0.0;
        auto res = std::from_chars(body.data(), body.data() + body.size(), value);
        if (res.ec != std::errc() || res.ptr != body.data() + body.size())
            throw SyntaxError("malformed number '" + std::string(body) + "'", start);
        tok_ = {TokKind::Number, body, value, start};
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    Token tok_;
};

// ---------------------------------------------------------------------------
// Parser: expr := term (('+'|'-') term)*
//         term := factor (('*'|'/') factor)*
//         factor := unary ('^' factor)?          (right-associative)
//         unary := '-' unary | primary
//         primary := NUMBER | IDENT | FUNC '(' args ')' | '(' expr ')'
// Unary minus binds tighter than '^'.
// ---------------------------------------------------------------------------

class ExprParser {
public:
    ExprParser(std::string_view text, const SymbolTable& symbols)
        : lexer_(text), symbols_(symbols) {}

    Expr parse() {
        int root = parse_expr();
        Token t = lexer_.peek();
        if (t.kind != TokKind::End)
            throw SyntaxError("trailing input '" + std::string(t.text) + "'", t.pos);
        (void)root;
        return ExprBuilder::take(std::move(nodes_));
    }

private:
    int emit(ExprNode n) {
        nodes_.push_back(n);
        return static_cast<int>(nodes_.size() - 1);
    }

    bool peek_op(char c) const {
        const Token& t = lexer_.peek();
        return t.kind == TokKind::Op && t.text.size() == 1 && t.text[0] == c;
    }

    int parse_expr() {
        int lhs = parse_term();
        for (;;) {
            if (peek_op('+')) {
                lexer_.next();
                int rhs = parse_term();
                lhs = emit({ExprOp::Add, 0.0, -1, lhs, rhs, -1});
            } else if (peek_op('-')) {
                lexer_.next();
                int rhs = parse_term();
                lhs = emit({ExprOp::Sub, 0.0, -1, lhs, rhs, -1});
            } else {
                return lhs;
            }
        }
    }

    int parse_term() {
        int lhs = parse_factor();
        for (;;) {
            if (peek_op('*')) {
                lexer_.next();
                int rhs = parse_factor();
                lhs = emit({ExprOp::Mul, 0.0, -1, lhs, rhs, -1});
            } else if (peek_op('/')) {
                lexer_.next();
                int rhs = parse_factor();
                lhs = emit({ExprOp::Div, 0.0, -1, lhs, rhs, -1});
            } else {
                return lhs;
            }
        }
    }

    int parse_factor() {
        int base = parse_unary();
        if (peek_op('^')) {
            lexer_.next();
            int exponent = parse_factor();
            return emit({ExprOp::Pow, 0.0, -1, base, exponent, -1});
        }
        return base;
    }

    int parse_unary() {
        if (peek_op('-')) {
            lexer_.next();
            int inner = parse_unary();
            return emit({ExprOp::Neg, 0.0, -1, inner, -1, -1});
        }
        return parse_primary();
    }

    int parse_primary() {
        Token t = lexer_.next();
        switch (t.kind) {
            case TokKind::Number:
                return emit({ExprOp::Const, t.number, -1, -1, -1, -1});
            case TokKind::LParen: {
                int inner = parse_expr();
                expect_rparen();
                return inner;
            }
            case TokKind::Ident: {
                if (lexer_.peek().kind == TokKind::LParen) {
                    auto fn = function_op(t.text);
                    if (fn) return parse_call(*fn, t);
                }
                auto ref = symbols_.lookup(t.text);
                if (!ref) throw UnknownSymbolError(std::string(t.text), t.pos);
                ExprOp op = ref->kind == SymbolKind::Variable    ? ExprOp::Var
                            : ref->kind == SymbolKind::Parameter ? ExprOp::Param
                                                                 : ExprOp::Input;
                return emit({op, 0.0, ref->index, -1, -1, -1});
            }
            default:
                throw SyntaxError("expected an operand", t.pos);
        }
    }

    static std::optional<ExprOp> function_op(std::string_view name) {
        if (name == "exp") return ExprOp::Exp;
        if (name == "ln") return ExprOp::Ln;
        if (name == "tanh") return ExprOp::Tanh;
        if (name == "sqrt") return ExprOp::Sqrt;
        if (name == "abs") return ExprOp::Abs;
        if (name == "min") return ExprOp::Min;
        if (name == "max") return ExprOp::Max;
        if (name == "select") return ExprOp::Select;
        return std::nullopt;
    }

    int parse_call(ExprOp fn, const Token& name) {
        lexer_.next();  // '('
        int arity = (fn == ExprOp::Select) ? 3 : (fn == ExprOp::Min || fn == ExprOp::Max) ? 2 : 1;
        int args[3] = {-1, -1, -1};
        for (int i = 0; i < arity; i++) {
            args[i] = parse_expr();
            if (i + 1 < arity) {
                Token c = lexer_.next();
                if (c.kind != TokKind::Comma)
                    throw SyntaxError(std::string(name.text) + " expects " +
                                          std::to_string(arity) + " arguments",
                                      c.pos);
            }
        }
        expect_rparen();
        return emit({fn, 0.0, -1, args[0], args[1], args[2]});
    }

    void expect_rparen() {
        Token t = lexer_.next();
        if (t.kind != TokKind::RParen) throw SyntaxError("expected ')'", t.pos);
    }

    Lexer lexer_;
    const SymbolTable& symbols_;
    std::vector<ExprNode> nodes_;
};

}  // namespace

Expr parse_expr(std::string_view text, const SymbolTable& symbols) {
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos)
        throw SyntaxError("empty expression", 0);
    return ExprParser(text, symbols).parse();
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {
[[noreturn]] void domain_error(const char* what, std::size_t node) {
    throw EvalError(std::string(what) + " (expression node " + std::to_string(node) + ")");
}
}  // namespace

double eval_expr(const Expr& e, const EvalEnv& env, std::vector<double>& scratch) {
    const std::vector<ExprNode>& nodes = e.nodes();
    if (scratch.size() < nodes.size()) scratch.resize(nodes.size());
    double* out = scratch.data();
    for (std::size_t i = 0; i < nodes.size(); i++) {
        const ExprNode& n = nodes[i];
        double r;
        switch (n.op) {
            case ExprOp::Const: r = n.value; break;
            case ExprOp::Var: r = env.variables[n.sym]; break;
            case ExprOp::Param: r = env.parameters[n.sym]; break;
            case ExprOp::Input: r = env.inputs[n.sym]; break;
            case ExprOp::Neg: r = -out[n.a]; break;
            case ExprOp::Exp:
                r = std::exp(out[n.a]);
                if (!std::isfinite(r)) domain_error("exp overflow", i);
                break;
            case ExprOp::Ln:
                if (out[n.a] <= 0.0) domain_error("ln of non-positive value", i);
                r = std::log(out[n.a]);
                break;
            case ExprOp::Tanh: r = std::tanh(out[n.a]); break;
            case ExprOp::Sqrt:
                if (out[n.a] < 0.0) domain_error("sqrt of negative value", i);
                r = std::sqrt(out[n.a]);
                break;
            case ExprOp::Abs: r = std::fabs(out[n.a]); break;
            case ExprOp::Add: r = out[n.a] + out[n.b]; break;
            case ExprOp::Sub: r = out[n.a] - out[n.b]; break;
            case ExprOp::Mul: r = out[n.a] * out[n.b]; break;
            case ExprOp::Div:
                if (out[n.b] == 0.0) domain_error("division by zero", i);
                r = out[n.a] / out[n.b];
                break;
            case ExprOp::Pow:
                r = std::pow(out[n.a], out[n.b]);
                if (!std::isfinite(r)) domain_error("pow outside domain", i);
                break;
            case ExprOp::Min: r = std::min(out[n.a], out[n.b]); break;
            case ExprOp::Max: r = std::max(out[n.a], out[n.b]); break;
            case ExprOp::Select: r = out[n.a] >= 0.0 ? out[n.b] : out[n.c]; break;
            default: throw Error("corrupt expression");
        }
        out[i] = r;
    }
    double root = out[nodes.size() - 1];
    if (!std::isfinite(root)) domain_error("non-finite result", nodes.size() - 1);
    return root;
}

double eval_expr(const Expr& e, const EvalEnv& env) {
    thread_local std::vector<double> scratch;
    return eval_expr(e, env, scratch);
}

std::set<std::string> free_symbols(const Expr& e, const SymbolTable& symbols) {
    std::set<std::string> names;
    for (const ExprNode& n : e.nodes()) {
        switch (n.op) {
            case ExprOp::Var: names.insert(symbols.variables().at(n.sym)); break;
            case ExprOp::Param: names.insert(symbols.parameters().at(n.sym)); break;
            case ExprOp::Input: names.insert(symbols.inputs().at(n.sym)); break;
            default: break;
        }
    }
    return names;
}

// ---------------------------------------------------------------------------
// Printing. Binary operators are always spaced so that '-' never glues onto
// an identifier; precedence decides parenthesisation.
// ---------------------------------------------------------------------------

namespace {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Printing precedence levels; higher binds tighter.
int print_prec(ExprOp op) {
    switch (op) {
        case ExprOp::Add: case ExprOp::Sub: return 1;
        case ExprOp::Mul: case ExprOp::Div: return 2;
        case ExprOp::Pow: return 3;
        case ExprOp::Neg: return 4;
        default: return 5;
    }
}

void print_node(const Expr& e, const SymbolTable& symbols, int index, std::string& out);

void print_child(const Expr& e, const SymbolTable& symbols, int parent_prec, bool tighten,
                 int index, std::string& out) {
    const ExprNode& child = e.nodes()[index];
    int prec = print_prec(child.op);
    bool parens = prec < parent_prec || (tighten && prec == parent_prec);
    if (parens) out += '(';
    print_node(e, symbols, index, out);
    if (parens) out += ')';
}

void print_node(const Expr& e, const SymbolTable& symbols, int index, std::string& out) {
    const ExprNode& n = e.nodes()[index];
    switch (n.op) {
        case ExprOp::Const: out += format_double(n.value); return;
        case ExprOp::Var: out += symbols.variables().at(n.sym); return;
        case ExprOp::Param: out += symbols.parameters().at(n.sym); return;
        case ExprOp::Input: out += symbols.inputs().at(n.sym); return;
        case ExprOp::Neg:
            out += '-';
            print_child(e, symbols, print_prec(ExprOp::Neg), false, n.a, out);
            return;
        case ExprOp::Exp: case ExprOp::Ln: case ExprOp::Tanh:
        case ExprOp::Sqrt: case ExprOp::Abs: {
            const char* name = n.op == ExprOp::Exp    ? "exp"
                               : n.op == ExprOp::Ln   ? "ln"
                               : n.op == ExprOp::Tanh ? "tanh"
                               : n.op == ExprOp::Sqrt ? "sqrt"
                                                      : "abs";
            out += name;
            out += '(';
            print_node(e, symbols, n.a, out);
            out += ')';
            return;
        }
        case ExprOp::Min: case ExprOp::Max: case ExprOp::Select: {
            out += n.op == ExprOp::Min ? "min" : n.op == ExprOp::Max ? "max" : "select";
            out += '(';
            print_node(e, symbols, n.a, out);
            out += ", ";
            print_node(e, symbols, n.b, out);
            if (n.op == ExprOp::Select) {
                out += ", ";
                print_node(e, symbols, n.c, out);
            }
            out += ')';
            return;
        }
        case ExprOp::Add: case ExprOp::Sub: case ExprOp::Mul:
        case ExprOp::Div: case ExprOp::Pow: {
            int prec = print_prec(n.op);
            const char* sym = n.op == ExprOp::Add   ? " + "
                              : n.op == ExprOp::Sub ? " - "
                              : n.op == ExprOp::Mul ? " * "
                              : n.op == ExprOp::Div ? " / "
                                                    : "^";
            // Left-associative operators parenthesise an equal-precedence right
            // child so the reparsed tree keeps its shape: a + (b + c).
            bool right_tighten = n.op != ExprOp::Pow;
            bool left_tighten = n.op == ExprOp::Pow;  // '^' is right-associative
            print_child(e, symbols, prec, left_tighten, n.a, out);
            out += sym;
            print_child(e, symbols, prec, right_tighten, n.b, out);
            return;
        }
    }
    throw Error("corrupt expression");
}

}  // namespace

std::string to_string(const Expr& e, const SymbolTable& symbols) {
    std::string out;
    print_node(e, symbols, static_cast<int>(e.nodes().size()) - 1, out);
    return out;
}

}  // namespace hysmc
