#pragma once

// Mini expression language for dynamics right-hand sides and cost integrands.
//
// Grammar (whitespace-insensitive):
//
//   expr    := term { ("+" | "-") term }
//   term    := unary { ("*" | "/") unary }
//   unary   := "-" unary | power
//   power   := primary [ "^" unary ]            (right associative)
//   primary := number | ident | ident "(" expr { "," expr } ")" | "(" expr ")"
//
// "^" binds tighter than unary minus, so "-x0^2" is -(x0^2). Functions:
// exp, log, sin, cos, tanh, abs, sqrt (one argument); min, max (two).
// Variable names are free-form identifiers; which names are legal is decided
// by the evaluation context, not the parser.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace attain {

/// Syntax error; `offset` is the byte position in the input text.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t offset, const std::string& what)
        : std::runtime_error("parse error at offset " + std::to_string(offset) + ": " + what),
          offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// Missing binding or numeric domain error; `offset` locates the
/// subexpression in the original source text.
class EvalError : public std::runtime_error {
public:
    EvalError(std::size_t offset, const std::string& what)
        : std::runtime_error("evaluation error at offset " + std::to_string(offset) + ": " + what),
          offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

namespace expr_detail {

enum class Op : std::uint8_t {
    push_literal,
    push_variable,
    negate,
    add,
    sub,
    mul,
    div,
    pow,
    fn_exp,
    fn_log,
    fn_sin,
    fn_cos,
    fn_tanh,
    fn_abs,
    fn_sqrt,
    fn_min,
    fn_max,
};

struct FunctionInfo {
    std::string_view name;
    Op op;
    int arity;
};

inline constexpr FunctionInfo kFunctions[] = {
    {"exp", Op::fn_exp, 1},  {"log", Op::fn_log, 1},   {"sin", Op::fn_sin, 1},
    {"cos", Op::fn_cos, 1},  {"tanh", Op::fn_tanh, 1}, {"abs", Op::fn_abs, 1},
    {"sqrt", Op::fn_sqrt, 1}, {"min", Op::fn_min, 2},  {"max", Op::fn_max, 2},
};

inline const FunctionInfo* find_function(std::string_view name) {
    for (const auto& f : kFunctions)
        if (f.name == name) return &f;
    return nullptr;
}

struct Node {
    Op op = Op::push_literal;
    double value = 0.0;     // push_literal
    std::string name;       // push_variable
    std::uint32_t child0 = 0;
    std::uint32_t child1 = 0;
    std::uint32_t offset = 0;  // byte offset in source
};

inline std::string format_shortest(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace expr_detail

using Bindings = std::map<std::string, double>;

/// Immutable parsed expression. Value semantics; cheap enough to copy for
/// the tree sizes that occur in problem files.
class Expr {
public:
    Expr() = default;

    double evaluate(const Bindings& bindings) const {
        return eval_node(root_, bindings);
    }

    std::set<std::string> free_variables() const {
        std::set<std::string> out;
        for (const auto& n : nodes_)
            if (n.op == expr_detail::Op::push_variable) out.insert(n.name);
        return out;
    }

    /// Re-serialization with minimal parentheses; parsing the result yields
    /// an evaluation-equivalent tree.
    std::string to_string() const { return print_node(root_, 0, false); }

    bool empty() const { return nodes_.empty(); }

    // Parser and compiler need the raw nodes.
    const std::vector<expr_detail::Node>& nodes() const { return nodes_; }
    std::uint32_t root() const { return root_; }

private:
    friend Expr parse(std::string_view);
    friend class Parser;

    double eval_node(std::uint32_t idx, const Bindings& b) const;
    std::string print_node(std::uint32_t idx, int parent_prec, bool parens_on_tie) const;

    std::vector<expr_detail::Node> nodes_;
    std::uint32_t root_ = 0;
};

namespace expr_detail {

/// Shared numeric kernels so the tree walker and the compiled program cannot
/// drift apart on domain-error policy.
inline double apply_binary(Op op, double a, double b, std::uint32_t offset) {
    switch (op) {
        case Op::add: return a + b;
        case Op::sub: return a - b;
        case Op::mul: return a * b;
        case Op::div:
            if (b == 0.0) throw EvalError(offset, "division by zero");
            return a / b;
        case Op::pow: {
            if (a == 0.0 && b < 0.0) throw EvalError(offset, "zero raised to negative power");
            if (a < 0.0 && b != std::floor(b))
                throw EvalError(offset, "negative base with non-integer exponent");
            return std::pow(a, b);
        }
        case Op::fn_min: return std::min(a, b);
        case Op::fn_max: return std::max(a, b);
        default: break;
    }
    throw EvalError(offset, "internal: bad binary op");
}

inline double apply_unary(Op op, double a, std::uint32_t offset) {
    switch (op) {
        case Op::negate: return -a;
        case Op::fn_exp: return std::exp(a);
        case Op::fn_sin: return std::sin(a);
        case Op::fn_cos: return std::cos(a);
        case Op::fn_tanh: return std::tanh(a);
        case Op::fn_abs: return std::abs(a);
        case Op::fn_log:
            if (a <= 0.0) throw EvalError(offset, "log of non-positive value");
            return std::log(a);
        case Op::fn_sqrt:
            if (a < 0.0) throw EvalError(offset, "sqrt of negative value");
            return std::sqrt(a);
        default: break;
    }
    throw EvalError(offset, "internal: bad unary op");
}

inline bool is_binary(Op op) {
    switch (op) {
        case Op::add:
        case Op::sub:
        case Op::mul:
        case Op::div:
        case Op::pow:
        case Op::fn_min:
        case Op::fn_max: return true;
        default: return false;
    }
}

}  // namespace expr_detail

inline double Expr::eval_node(std::uint32_t idx, const Bindings& b) const {
    using expr_detail::Op;
    const auto& n = nodes_[idx];
    switch (n.op) {
        case Op::push_literal: return n.value;
        case Op::push_variable: {
            auto it = b.find(n.name);
            if (it == b.end()) throw EvalError(n.offset, "unbound variable '" + n.name + "'");
            return it->second;
        }
        default:
            if (expr_detail::is_binary(n.op))
                return expr_detail::apply_binary(n.op, eval_node(n.child0, b),
                                                 eval_node(n.child1, b), n.offset);
            return expr_detail::apply_unary(n.op, eval_node(n.child0, b), n.offset);
    }
}

inline std::string Expr::print_node(std::uint32_t idx, int parent_prec, bool parens_on_tie) const {
    using expr_detail::Op;
    const auto& n = nodes_[idx];
    auto wrap = [&](int prec, std::string s) {
        if (prec < parent_prec || (prec == parent_prec && parens_on_tie)) return "(" + s + ")";
        return s;
    };
    switch (n.op) {
        case Op::push_literal:
            if (n.value < 0.0)  // programmatic trees can hold negative literals
                return "(" + expr_detail::format_shortest(n.value) + ")";
            return expr_detail::format_shortest(n.value);
        case Op::push_variable: return n.name;
        case Op::negate: return wrap(3, "-" + print_node(n.child0, 3, false));
        case Op::add:
            return wrap(1, print_node(n.child0, 1, false) + "+" + print_node(n.child1, 1, true));
        case Op::sub:
            return wrap(1, print_node(n.child0, 1, false) + "-" + print_node(n.child1, 1, true));
        case Op::mul:
            return wrap(2, print_node(n.child0, 2, false) + "*" + print_node(n.child1, 2, true));
        case Op::div:
            return wrap(2, print_node(n.child0, 2, false) + "/" + print_node(n.child1, 2, true));
        case Op::pow:
            return wrap(4, print_node(n.child0, 4, true) + "^" + print_node(n.child1, 4, false));
        case Op::fn_min:
        case Op::fn_max: {
            const char* name = (n.op == Op::fn_min) ? "min" : "max";
            return std::string(name) + "(" + print_node(n.child0, 0, false) + "," +
                   print_node(n.child1, 0, false) + ")";
        }
        default: {
            for (const auto& f : expr_detail::kFunctions)
                if (f.op == n.op)
                    return std::string(f.name) + "(" + print_node(n.child0, 0, false) + ")";
            return "?";
        }
    }
}

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    Expr run() {
        Expr e;
        e.root_ = parse_expr(e);
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        if (e.nodes_.empty()) fail("empty expression");
        return e;
    }

private:
    using Op = expr_detail::Op;

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(pos_, what); }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool peek_is(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }

    bool consume(char c) {
        if (peek_is(c)) {
            ++pos_;
            return true;
        }
        return false;
    }

    std::uint32_t add_node(Expr& e, expr_detail::Node n) {
        e.nodes_.push_back(std::move(n));
        return static_cast<std::uint32_t>(e.nodes_.size() - 1);
    }

    std::uint32_t parse_expr(Expr& e) {
        std::uint32_t lhs = parse_term(e);
        for (;;) {
            skip_ws();
            std::uint32_t at = static_cast<std::uint32_t>(pos_);
            if (consume('+'))
                lhs = add_node(e, {Op::add, 0.0, {}, lhs, parse_term(e), at});
            else if (consume('-'))
                lhs = add_node(e, {Op::sub, 0.0, {}, lhs, parse_term(e), at});
            else
                return lhs;
        }
    }

    std::uint32_t parse_term(Expr& e) {
        std::uint32_t lhs = parse_unary(e);
        for (;;) {
            skip_ws();
            std::uint32_t at = static_cast<std::uint32_t>(pos_);
            if (consume('*'))
                lhs = add_node(e, {Op::mul, 0.0, {}, lhs, parse_unary(e), at});
            else if (consume('/'))
                lhs = add_node(e, {Op::div, 0.0, {}, lhs, parse_unary(e), at});
            else
                return lhs;
        }
    }

    std::uint32_t parse_unary(Expr& e) {
        skip_ws();
        std::uint32_t at = static_cast<std::uint32_t>(pos_);
        if (consume('-')) return add_node(e, {Op::negate, 0.0, {}, parse_unary(e), 0, at});
        return parse_power(e);
    }

    std::uint32_t parse_power(Expr& e) {
        std::uint32_t base = parse_primary(e);
        skip_ws();
        std::uint32_t at = static_cast<std::uint32_t>(pos_);
        if (consume('^'))  // right associative; exponent may carry a unary minus
            return add_node(e, {Op::pow, 0.0, {}, base, parse_unary(e), at});
        return base;
    }

    std::uint32_t parse_primary(Expr& e) {
        skip_ws();
        if (pos_ >= text_.size()) fail("expected expression");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            std::uint32_t inner = parse_expr(e);
            skip_ws();
            if (!consume(')')) fail("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number(e);
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident(e);
        fail(std::string("unexpected character '") + c + "'");
    }

    std::uint32_t parse_number(Expr& e) {
        const std::uint32_t at = static_cast<std::uint32_t>(pos_);
        double value = 0.0;
        auto res = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
        if (res.ec != std::errc{}) fail("malformed number");
        pos_ = static_cast<std::size_t>(res.ptr - text_.data());
        return add_node(e, {Op::push_literal, value, {}, 0, 0, at});
    }

    std::uint32_t parse_ident(Expr& e) {
        const std::uint32_t at = static_cast<std::uint32_t>(pos_);
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string name(text_.substr(start, pos_ - start));
        if (peek_is('(')) {
            const auto* fn = expr_detail::find_function(name);
            if (!fn) throw ParseError(start, "unknown function '" + name + "'");
            ++pos_;  // '('
            std::uint32_t a = parse_expr(e);
            std::uint32_t b = 0;
            if (fn->arity == 2) {
                skip_ws();
                if (!consume(',')) fail("expected ',' in call to '" + name + "'");
                b = parse_expr(e);
            }
            skip_ws();
            if (!consume(')')) fail("expected ')'");
            return add_node(e, {fn->op, 0.0, {}, a, b, at});
        }
        return add_node(e, {Op::push_variable, 0.0, std::move(name), 0, 0, at});
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

inline Expr parse(std::string_view text) { return Parser(text).run(); }

inline double evaluate(const Expr& e, const Bindings& bindings) { return e.evaluate(bindings); }

inline std::set<std::string> free_variables(const Expr& e) { return e.free_variables(); }

inline std::string to_string(const Expr& e) { return e.to_string(); }

/// Expression flattened to a postfix program against a fixed variable layout.
/// Evaluation reads variable values from a slot array by index, which keeps
/// the integrator's inner loop free of name lookups.
class CompiledExpr {
public:
    CompiledExpr() = default;

    /// `slot_names[i]` is the variable bound to slot i. Throws EvalError if
    /// the expression references a name outside the layout.
    CompiledExpr(const Expr& e, std::span<const std::string> slot_names) {
        if (e.empty()) throw EvalError(0, "empty expression");
        build(e, e.root(), slot_names);
        std::size_t depth = 0, max_depth = 0;
        for (const auto& ins : program_) {
            if (ins.op == expr_detail::Op::push_literal || ins.op == expr_detail::Op::push_variable)
                ++depth;
            else if (expr_detail::is_binary(ins.op))
                --depth;  // pops two, pushes one
            max_depth = std::max(max_depth, depth);
        }
        stack_depth_ = max_depth;
    }

    double evaluate(std::span<const double> slots) const {
        double local[kLocalStack];
        if (stack_depth_ <= kLocalStack) return run(slots, local);
        std::vector<double> heap(stack_depth_);
        return run(slots, heap.data());
    }

    std::size_t stack_depth() const { return stack_depth_; }

private:
    static constexpr std::size_t kLocalStack = 48;

    struct Instr {
        expr_detail::Op op;
        std::uint32_t slot = 0;  // push_variable
        double value = 0.0;      // push_literal
        std::uint32_t offset = 0;
    };

    void build(const Expr& e, std::uint32_t idx, std::span<const std::string> slot_names) {
        using expr_detail::Op;
        const auto& n = e.nodes()[idx];
        switch (n.op) {
            case Op::push_literal:
                program_.push_back({n.op, 0, n.value, n.offset});
                return;
            case Op::push_variable: {
                for (std::size_t s = 0; s < slot_names.size(); ++s) {
                    if (slot_names[s] == n.name) {
                        program_.push_back({n.op, static_cast<std::uint32_t>(s), 0.0, n.offset});
                        return;
                    }
                }
                throw EvalError(n.offset, "variable '" + n.name + "' not in evaluation context");
            }
            default:
                build(e, n.child0, slot_names);
                if (expr_detail::is_binary(n.op)) build(e, n.child1, slot_names);
                program_.push_back({n.op, 0, 0.0, n.offset});
        }
    }

    double run(std::span<const double> slots, double* stack) const {
        using expr_detail::Op;
        std::size_t top = 0;
        for (const auto& ins : program_) {
            switch (ins.op) {
                case Op::push_literal: stack[top++] = ins.value; break;
                case Op::push_variable: stack[top++] = slots[ins.slot]; break;
                default:
                    if (expr_detail::is_binary(ins.op)) {
                        const double b = stack[--top];
                        const double a = stack[--top];
                        stack[top++] = expr_detail::apply_binary(ins.op, a, b, ins.offset);
                    } else {
                        stack[top - 1] = expr_detail::apply_unary(ins.op, stack[top - 1], ins.offset);
                    }
            }
        }
        return stack[0];
    }

    std::vector<Instr> program_;
    std::size_t stack_depth_ = 0;
};

}  // namespace attain
