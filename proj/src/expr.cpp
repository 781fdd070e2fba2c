#include "coneray/expr.hpp"

#include "coneray/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>
#include <system_error>

namespace coneray {

struct Expr::Node {
    Kind kind;
    double value = 0.0;
    std::string name;
    BinaryOp op = BinaryOp::add;
    Function fn = Function::exp;
    std::vector<Expr> children;
};

Expr::Expr() : node_(literal(0.0).node_) {}

Expr Expr::literal(double value) {
    if (!std::isfinite(value)) {
        throw ContractViolation("expression literal must be finite");
    }
    auto n = std::make_shared<Node>();
    n->kind = Kind::literal;
    n->value = value;
    return Expr(std::move(n));
}

Expr Expr::variable(std::string name) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::variable;
    n->name = std::move(name);
    return Expr(std::move(n));
}

Expr Expr::negate(Expr operand) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::negate;
    n->children.push_back(std::move(operand));
    return Expr(std::move(n));
}

Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::binary;
    n->op = op;
    n->children.push_back(std::move(lhs));
    n->children.push_back(std::move(rhs));
    return Expr(std::move(n));
}

Expr Expr::call(Function fn, std::vector<Expr> args) {
    const std::size_t arity = (fn == Function::min || fn == Function::max) ? 2 : 1;
    if (args.size() != arity) {
        throw ContractViolation(std::string(function_name(fn)) + " takes " + std::to_string(arity) +
                                " argument(s)");
    }
    auto n = std::make_shared<Node>();
    n->kind = Kind::call;
    n->fn = fn;
    n->children = std::move(args);
    return Expr(std::move(n));
}

Expr::Kind Expr::kind() const { return node_->kind; }
double Expr::value() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }
Expr::BinaryOp Expr::op() const { return node_->op; }
Expr::Function Expr::function() const { return node_->fn; }
std::span<const Expr> Expr::children() const { return node_->children; }

bool operator==(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) {
        return true;
    }
    const auto& x = *a.node_;
    const auto& y = *b.node_;
    if (x.kind != y.kind) {
        return false;
    }
    switch (x.kind) {
    case Expr::Kind::literal:
        return x.value == y.value;
    case Expr::Kind::variable:
        return x.name == y.name;
    case Expr::Kind::binary:
        if (x.op != y.op) {
            return false;
        }
        break;
    case Expr::Kind::call:
        if (x.fn != y.fn) {
            return false;
        }
        break;
    case Expr::Kind::negate:
        break;
    }
    return x.children == y.children;
}

std::string_view function_name(Expr::Function fn) {
    switch (fn) {
    case Expr::Function::exp: return "exp";
    case Expr::Function::log: return "log";
    case Expr::Function::sqrt: return "sqrt";
    case Expr::Function::abs: return "abs";
    case Expr::Function::min: return "min";
    case Expr::Function::max: return "max";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

enum class Tok { number, ident, plus, minus, star, slash, caret, lparen, rparen, comma, end };

struct Token {
    Tok kind;
    std::size_t pos;
    std::string_view text;
    double number = 0.0;
};

std::string_view describe(Tok t) {
    switch (t) {
    case Tok::number: return "number";
    case Tok::ident: return "identifier";
    case Tok::plus: return "'+'";
    case Tok::minus: return "'-'";
    case Tok::star: return "'*'";
    case Tok::slash: return "'/'";
    case Tok::caret: return "'^'";
    case Tok::lparen: return "'('";
    case Tok::rparen: return "')'";
    case Tok::comma: return "','";
    case Tok::end: return "end of input";
    }
    return "?";
}

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const std::size_t start = i;
            while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) {
                ++i;
            }
            if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
                std::size_t j = i + 1;
                if (j < s.size() && (s[j] == '+' || s[j] == '-')) {
                    ++j;
                }
                if (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
                    i = j;
                    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
                        ++i;
                    }
                }
            }
            Token t{Tok::number, start, s.substr(start, i - start)};
            const auto* first = s.data() + start;
            const auto* last = s.data() + i;
            auto [ptr, ec] = std::from_chars(first, last, t.number);
            if (ec != std::errc() || ptr != last || !std::isfinite(t.number)) {
                throw ParseError("malformed number '" + std::string(t.text) + "'", start);
            }
            out.push_back(t);
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = i;
            while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) {
                ++i;
            }
            out.push_back({Tok::ident, start, s.substr(start, i - start)});
            continue;
        }
        Tok k;
        switch (c) {
        case '+': k = Tok::plus; break;
        case '-': k = Tok::minus; break;
        case '*': k = Tok::star; break;
        case '/': k = Tok::slash; break;
        case '^': k = Tok::caret; break;
        case '(': k = Tok::lparen; break;
        case ')': k = Tok::rparen; break;
        case ',': k = Tok::comma; break;
        default:
            throw ParseError(std::string("unexpected character '") + c + "'", i);
        }
        out.push_back({k, i, s.substr(i, 1)});
        ++i;
    }
    out.push_back({Tok::end, s.size(), {}});
    return out;
}

// Binding powers. Unary minus sits between '*' and '^'.
constexpr int kSum = 1;
constexpr int kProduct = 2;
constexpr int kUnary = 3;
constexpr int kPower = 4;
constexpr int kAtom = 5;

std::optional<Expr::Function> lookup_function(std::string_view name) {
    static constexpr std::array<Expr::Function, 6> all{Expr::Function::exp, Expr::Function::log,
                                                       Expr::Function::sqrt, Expr::Function::abs,
                                                       Expr::Function::min, Expr::Function::max};
    for (auto f : all) {
        if (function_name(f) == name) {
            return f;
        }
    }
    return std::nullopt;
}

class Parser {
public:
    explicit Parser(std::string_view text) : toks_(tokenize(text)) {}

    Expr parse_all() {
        Expr e = parse_expr(kSum);
        if (peek().kind != Tok::end) {
            fail("expected operator or end of input");
        }
        return e;
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    const Token& next() { return toks_[pos_++]; }

    [[noreturn]] void fail(const std::string& hint) const {
        const Token& t = peek();
        std::string found = t.kind == Tok::end ? "end of input" : "'" + std::string(t.text) + "'";
        throw ParseError(hint + ", found " + found, t.pos);
    }

    void expect(Tok kind) {
        if (peek().kind != kind) {
            fail("expected " + std::string(describe(kind)));
        }
        ++pos_;
    }

    static std::optional<std::pair<Expr::BinaryOp, int>> infix(Tok t) {
        switch (t) {
        case Tok::plus: return std::pair{Expr::BinaryOp::add, kSum};
        case Tok::minus: return std::pair{Expr::BinaryOp::sub, kSum};
        case Tok::star: return std::pair{Expr::BinaryOp::mul, kProduct};
        case Tok::slash: return std::pair{Expr::BinaryOp::div, kProduct};
        case Tok::caret: return std::pair{Expr::BinaryOp::pow, kPower};
        default: return std::nullopt;
        }
    }

    Expr parse_expr(int min_bp) {
        Expr lhs = parse_prefix();
        for (;;) {
            auto op = infix(peek().kind);
            if (!op || op->second < min_bp) {
                break;
            }
            next();
            // '^' is right-associative and its exponent may carry a unary minus.
            const int rhs_bp = op->first == Expr::BinaryOp::pow ? kUnary : op->second + 1;
            Expr rhs = parse_expr(rhs_bp);
            lhs = Expr::binary(op->first, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    Expr parse_prefix() {
        const Token& t = peek();
        switch (t.kind) {
        case Tok::number:
            next();
            return Expr::literal(t.number);
        case Tok::minus:
            next();
            return Expr::negate(parse_expr(kUnary));
        case Tok::lparen: {
            next();
            Expr inner = parse_expr(kSum);
            expect(Tok::rparen);
            return inner;
        }
        case Tok::ident: {
            next();
            if (peek().kind != Tok::lparen) {
                return Expr::variable(std::string(t.text));
            }
            auto fn = lookup_function(t.text);
            if (!fn) {
                throw ParseError("unknown function '" + std::string(t.text) +
                                     "' (expected exp, log, sqrt, abs, min or max)",
                                 t.pos);
            }
            next();
            std::vector<Expr> args;
            args.push_back(parse_expr(kSum));
            while (peek().kind == Tok::comma) {
                next();
                args.push_back(parse_expr(kSum));
            }
            expect(Tok::rparen);
            const std::size_t arity = (*fn == Expr::Function::min || *fn == Expr::Function::max) ? 2 : 1;
            if (args.size() != arity) {
                throw ParseError(std::string(t.text) + " expects " + std::to_string(arity) + " argument(s), got " +
                                     std::to_string(args.size()),
                                 t.pos);
            }
            return Expr::call(*fn, std::move(args));
        }
        default:
            fail("expected number, identifier, '(' or '-'");
        }
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

} // namespace

Expr parse(std::string_view text) { return Parser(text).parse_all(); }

// ---------------------------------------------------------------------------
// Evaluation

namespace {

std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

double finite_or_throw(double r, std::string_view what, double a) {
    if (!std::isfinite(r)) {
        throw DomainError(std::string(what) + ": non-finite result for argument " + num(a));
    }
    return r;
}

double apply_binary(Expr::BinaryOp op, double a, double b) {
    switch (op) {
    case Expr::BinaryOp::add:
        return finite_or_throw(a + b, "+", a);
    case Expr::BinaryOp::sub:
        return finite_or_throw(a - b, "-", a);
    case Expr::BinaryOp::mul:
        return finite_or_throw(a * b, "*", a);
    case Expr::BinaryOp::div:
        if (b == 0.0) {
            throw DomainError("division by zero (numerator " + num(a) + ")");
        }
        return finite_or_throw(a / b, "/", a);
    case Expr::BinaryOp::pow:
        if (a < 0.0 && b != std::floor(b)) {
            throw DomainError("^: negative base " + num(a) + " with non-integer exponent " + num(b));
        }
        if (a == 0.0 && b < 0.0) {
            throw DomainError("^: zero base with negative exponent " + num(b));
        }
        return finite_or_throw(std::pow(a, b), "^", a);
    }
    return 0.0;
}

double apply_unary(Expr::Function fn, double a) {
    switch (fn) {
    case Expr::Function::exp:
        return finite_or_throw(std::exp(a), "exp", a);
    case Expr::Function::log:
        if (!(a > 0.0)) {
            throw DomainError("log of non-positive argument " + num(a));
        }
        return std::log(a);
    case Expr::Function::sqrt:
        if (a < 0.0) {
            throw DomainError("sqrt of negative argument " + num(a));
        }
        return std::sqrt(a);
    case Expr::Function::abs:
        return std::fabs(a);
    default:
        break;
    }
    return 0.0;
}

double apply_call(Expr::Function fn, double a, double b) {
    if (fn == Expr::Function::min) {
        return std::min(a, b);
    }
    if (fn == Expr::Function::max) {
        return std::max(a, b);
    }
    return apply_unary(fn, a);
}

} // namespace

double eval(const Expr& e, const Env& env) {
    switch (e.kind()) {
    case Expr::Kind::literal:
        return e.value();
    case Expr::Kind::variable: {
        auto it = env.find(e.name());
        if (it == env.end()) {
            throw UnboundVariable(e.name());
        }
        if (!std::isfinite(it->second)) {
            throw DomainError("variable '" + e.name() + "' is not finite");
        }
        return it->second;
    }
    case Expr::Kind::negate:
        return -eval(e.children()[0], env);
    case Expr::Kind::binary: {
        const double a = eval(e.children()[0], env);
        const double b = eval(e.children()[1], env);
        return apply_binary(e.op(), a, b);
    }
    case Expr::Kind::call: {
        const auto args = e.children();
        const double a = eval(args[0], env);
        const double b = args.size() > 1 ? eval(args[1], env) : 0.0;
        return apply_call(e.function(), a, b);
    }
    }
    return 0.0;
}

namespace {

void collect(const Expr& e, std::set<std::string>& out) {
    if (e.kind() == Expr::Kind::variable) {
        out.insert(e.name());
    }
    for (const auto& c : e.children()) {
        collect(c, out);
    }
}

} // namespace

std::set<std::string> free_vars(const Expr& e) {
    std::set<std::string> out;
    collect(e, out);
    return out;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

int binding(const Expr& e) {
    switch (e.kind()) {
    case Expr::Kind::literal:
        return e.value() < 0.0 ? kUnary : kAtom;
    case Expr::Kind::variable:
    case Expr::Kind::call:
        return kAtom;
    case Expr::Kind::negate:
        return kUnary;
    case Expr::Kind::binary:
        switch (e.op()) {
        case Expr::BinaryOp::add:
        case Expr::BinaryOp::sub:
            return kSum;
        case Expr::BinaryOp::mul:
        case Expr::BinaryOp::div:
            return kProduct;
        case Expr::BinaryOp::pow:
            return kPower;
        }
    }
    return kAtom;
}

std::string format_number(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

void print(const Expr& e, int min_bp, std::string& out) {
    const bool paren = binding(e) < min_bp;
    if (paren) {
        out += '(';
    }
    switch (e.kind()) {
    case Expr::Kind::literal:
        out += format_number(e.value());
        break;
    case Expr::Kind::variable:
        out += e.name();
        break;
    case Expr::Kind::negate:
        out += '-';
        print(e.children()[0], kUnary, out);
        break;
    case Expr::Kind::binary: {
        const auto& l = e.children()[0];
        const auto& r = e.children()[1];
        switch (e.op()) {
        case Expr::BinaryOp::add:
            print(l, kSum, out);
            out += " + ";
            print(r, kSum + 1, out);
            break;
        case Expr::BinaryOp::sub:
            print(l, kSum, out);
            out += " - ";
            print(r, kSum + 1, out);
            break;
        case Expr::BinaryOp::mul:
            print(l, kProduct, out);
            out += '*';
            print(r, kProduct + 1, out);
            break;
        case Expr::BinaryOp::div:
            print(l, kProduct, out);
            out += '/';
            print(r, kProduct + 1, out);
            break;
        case Expr::BinaryOp::pow:
            print(l, kAtom, out);
            out += '^';
            print(r, kUnary, out);
            break;
        }
        break;
    }
    case Expr::Kind::call: {
        out += function_name(e.function());
        out += '(';
        bool first = true;
        for (const auto& a : e.children()) {
            if (!first) {
                out += ", ";
            }
            first = false;
            print(a, kSum, out);
        }
        out += ')';
        break;
    }
    }
    if (paren) {
        out += ')';
    }
}

} // namespace

std::string to_string(const Expr& e) {
    std::string out;
    print(e, kSum, out);
    return out;
}

// ---------------------------------------------------------------------------
// Compiled form

CompiledExpr::CompiledExpr(const Expr& e, std::span<const std::string> slots) { root_ = emit(e, slots); }

int CompiledExpr::emit(const Expr& e, std::span<const std::string> slots) {
    Op op{e.kind(), Expr::BinaryOp::add, Expr::Function::exp, 0.0, 0, -1, -1};
    switch (e.kind()) {
    case Expr::Kind::literal:
        op.value = e.value();
        break;
    case Expr::Kind::variable: {
        auto it = std::find(slots.begin(), slots.end(), e.name());
        if (it == slots.end()) {
            throw UnboundVariable(e.name());
        }
        op.slot = static_cast<std::size_t>(it - slots.begin());
        break;
    }
    case Expr::Kind::negate:
        op.lhs = emit(e.children()[0], slots);
        break;
    case Expr::Kind::binary:
        op.bop = e.op();
        op.lhs = emit(e.children()[0], slots);
        op.rhs = emit(e.children()[1], slots);
        break;
    case Expr::Kind::call:
        op.fn = e.function();
        op.lhs = emit(e.children()[0], slots);
        if (e.children().size() > 1) {
            op.rhs = emit(e.children()[1], slots);
        }
        break;
    }
    ops_.push_back(op);
    return static_cast<int>(ops_.size()) - 1;
}

bool CompiledExpr::uses_slot(std::size_t slot) const {
    return std::any_of(ops_.begin(), ops_.end(),
                       [slot](const Op& op) { return op.kind == Expr::Kind::variable && op.slot == slot; });
}

double CompiledExpr::operator()(std::span<const double> values) const {
    if (root_ < 0) {
        throw ContractViolation("evaluating an empty compiled expression");
    }
    return run(root_, values);
}

double CompiledExpr::run(int index, std::span<const double> values) const {
    const Op& op = ops_[static_cast<std::size_t>(index)];
    switch (op.kind) {
    case Expr::Kind::literal:
        return op.value;
    case Expr::Kind::variable: {
        const double v = values[op.slot];
        if (!std::isfinite(v)) {
            throw DomainError("variable in slot " + std::to_string(op.slot) + " is not finite");
        }
        return v;
    }
    case Expr::Kind::negate:
        return -run(op.lhs, values);
    case Expr::Kind::binary:
        return apply_binary(op.bop, run(op.lhs, values), run(op.rhs, values));
    case Expr::Kind::call: {
        const double a = run(op.lhs, values);
        const double b = op.rhs >= 0 ? run(op.rhs, values) : 0.0;
        return apply_call(op.fn, a, b);
    }
    }
    return 0.0;
}

} // namespace coneray
