#include "jetq/kernel_expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <unordered_map>

namespace jetq {

// ---------------------------------------------------------------------------
// ParameterBinding / Exponent

double ParameterBinding::get(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw EvalError("unbound parameter '" + name + "'");
    return it->second;
}

ParameterBinding ParameterBinding::merged(const ParameterBinding& overrides) const {
    ParameterBinding out = *this;
    for (const auto& [k, v] : overrides.values_) out.values_[k] = v;
    return out;
}

Exponent Exponent::parameter(const std::string& name, double coeff) {
    Exponent e;
    if (coeff != 0.0) e.terms_.emplace_back(name, coeff);
    return e;
}

std::optional<long> Exponent::as_integer() const {
    if (!is_constant()) return std::nullopt;
    double r = std::round(constant_);
    if (r != constant_ || std::abs(r) > 1e9) return std::nullopt;
    return static_cast<long>(r);
}

double Exponent::value(const ParameterBinding& params) const {
    double v = constant_;
    for (const auto& [name, coeff] : terms_) v += coeff * params.get(name);
    return v;
}

Exponent Exponent::operator+(const Exponent& other) const {
    Exponent out;
    out.constant_ = constant_ + other.constant_;
    std::map<std::string, double> merged;
    for (const auto& [n, c] : terms_) merged[n] += c;
    for (const auto& [n, c] : other.terms_) merged[n] += c;
    for (const auto& [n, c] : merged)
        if (c != 0.0) out.terms_.emplace_back(n, c);
    return out;
}

Exponent Exponent::operator-() const {
    Exponent out;
    out.constant_ = -constant_ + 0.0;
    for (const auto& [n, c] : terms_) out.terms_.emplace_back(n, -c);
    return out;
}

Exponent Exponent::operator-(const Exponent& other) const { return *this + (-other); }

namespace {

std::string format_real(double v) {
    if (v == 0.0) return "0";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string Exponent::to_string() const {
    std::string out;
    for (const auto& [name, coeff] : terms_) {
        if (coeff == 1.0) {
            out += out.empty() ? "" : "+";
        } else if (coeff == -1.0) {
            out += "-";
        } else {
            if (coeff > 0.0 && !out.empty()) out += "+";
            out += format_real(coeff) + "*";
        }
        out += name;
    }
    if (constant_ != 0.0 || out.empty()) {
        if (constant_ > 0.0 && !out.empty()) out += "+";
        out += format_real(constant_);
    }
    return out;
}

// ---------------------------------------------------------------------------
// KernelExpr nodes

namespace {

std::shared_ptr<Node> new_node(NodeKind kind) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    return n;
}

cplx clean(cplx v) { return {v.real() + 0.0, v.imag() + 0.0}; }

}  // namespace

KernelExpr::KernelExpr() : KernelExpr(constant(0.0)) {}

KernelExpr KernelExpr::constant(cplx value) {
    auto n = new_node(NodeKind::Constant);
    n->value = clean(value);
    return KernelExpr(std::move(n));
}

KernelExpr KernelExpr::variable(int index, Slot slot) {
    if (index < 1) throw DomainError("variable index must be >= 1");
    auto n = new_node(NodeKind::Variable);
    n->index = index;
    n->slot = slot;
    return KernelExpr(std::move(n));
}

KernelExpr KernelExpr::parameter(const std::string& name) {
    auto n = new_node(NodeKind::Parameter);
    n->name = name;
    return KernelExpr(std::move(n));
}

KernelExpr KernelExpr::raw_unary(NodeKind kind, const KernelExpr& child) {
    if (kind != NodeKind::Neg && kind != NodeKind::Log && kind != NodeKind::Exp)
        throw DomainError("raw_unary: not a unary node kind");
    auto n = new_node(kind);
    n->children = {child};
    return KernelExpr(std::move(n));
}

KernelExpr KernelExpr::raw_binary(NodeKind kind, const KernelExpr& lhs, const KernelExpr& rhs) {
    if (kind != NodeKind::Add && kind != NodeKind::Sub && kind != NodeKind::Mul && kind != NodeKind::Div)
        throw DomainError("raw_binary: not a binary node kind");
    auto n = new_node(kind);
    n->children = {lhs, rhs};
    return KernelExpr(std::move(n));
}

KernelExpr KernelExpr::raw_pow(const KernelExpr& base, const Exponent& exponent) {
    auto n = new_node(NodeKind::Pow);
    n->children = {base};
    n->exponent = exponent;
    return KernelExpr(std::move(n));
}

NodeKind KernelExpr::kind() const { return node_->kind; }
std::size_t KernelExpr::arity() const { return node_->children.size(); }
const KernelExpr& KernelExpr::child(std::size_t i) const { return node_->children.at(i); }
cplx KernelExpr::constant_value() const { return node_->value; }
int KernelExpr::var_index() const { return node_->index; }
Slot KernelExpr::slot() const { return node_->slot; }
const std::string& KernelExpr::name() const { return node_->name; }
const Exponent& KernelExpr::exponent() const { return node_->exponent; }
bool KernelExpr::is_zero() const { return is_constant() && node_->value == cplx(0.0, 0.0); }
bool KernelExpr::is_one() const { return is_constant() && node_->value == cplx(1.0, 0.0); }

// ---------------------------------------------------------------------------
// Folding builders

KernelExpr operator+(const KernelExpr& a, const KernelExpr& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.is_constant() && b.is_constant()) return KernelExpr::constant(a.constant_value() + b.constant_value());
    return KernelExpr::raw_binary(NodeKind::Add, a, b);
}

KernelExpr operator-(const KernelExpr& a, const KernelExpr& b) {
    if (b.is_zero()) return a;
    if (a.is_zero()) return -b;
    if (a.is_constant() && b.is_constant()) return KernelExpr::constant(a.constant_value() - b.constant_value());
    return KernelExpr::raw_binary(NodeKind::Sub, a, b);
}

KernelExpr operator*(const KernelExpr& a, const KernelExpr& b) {
    if (a.is_zero() || b.is_zero()) return KernelExpr::constant(0.0);
    if (a.is_one()) return b;
    if (b.is_one()) return a;
    if (a.is_constant() && b.is_constant()) return KernelExpr::constant(a.constant_value() * b.constant_value());
    return KernelExpr::raw_binary(NodeKind::Mul, a, b);
}

KernelExpr operator/(const KernelExpr& a, const KernelExpr& b) {
    if (b.is_one()) return a;
    if (a.is_zero() && !b.is_zero()) return KernelExpr::constant(0.0);
    if (a.is_constant() && b.is_constant() && !b.is_zero())
        return KernelExpr::constant(a.constant_value() / b.constant_value());
    return KernelExpr::raw_binary(NodeKind::Div, a, b);
}

KernelExpr operator-(const KernelExpr& a) {
    if (a.is_constant()) return KernelExpr::constant(-a.constant_value());
    if (a.kind() == NodeKind::Neg) return a.child(0);
    return KernelExpr::raw_unary(NodeKind::Neg, a);
}

KernelExpr pow(const KernelExpr& base, const Exponent& exponent) {
    if (exponent.is_constant()) {
        if (exponent.constant() == 0.0) return KernelExpr::constant(1.0);
        if (exponent.constant() == 1.0) return base;
        if (base.is_constant()) {
            const cplx b = base.constant_value();
            if (auto n = exponent.as_integer(); n && (b != cplx(0.0) || *n > 0))
                return KernelExpr::constant(std::pow(b, static_cast<int>(*n)));
            if (b.imag() == 0.0 && b.real() > 0.0)
                return KernelExpr::constant(std::pow(b.real(), exponent.constant()));
        }
    }
    if (base.is_one()) return base;
    return KernelExpr::raw_pow(base, exponent);
}

KernelExpr log(const KernelExpr& arg) {
    if (arg.is_one()) return KernelExpr::constant(0.0);
    if (arg.is_constant() && !arg.is_zero()) return KernelExpr::constant(std::log(arg.constant_value()));
    return KernelExpr::raw_unary(NodeKind::Log, arg);
}

KernelExpr exp(const KernelExpr& arg) {
    if (arg.is_constant()) return KernelExpr::constant(std::exp(arg.constant_value()));
    return KernelExpr::raw_unary(NodeKind::Exp, arg);
}

KernelExpr exponent_expr(const Exponent& e) {
    KernelExpr out = KernelExpr::constant(e.constant());
    for (const auto& [name, coeff] : e.terms())
        out = out + KernelExpr::constant(coeff) * KernelExpr::parameter(name);
    return out;
}

// ---------------------------------------------------------------------------
// Structural queries and rewrites

bool structurally_equal(const KernelExpr& a, const KernelExpr& b) {
    if (a.id() == b.id()) return true;
    if (a.kind() != b.kind() || a.arity() != b.arity()) return false;
    switch (a.kind()) {
        case NodeKind::Constant:
            return a.constant_value() == b.constant_value();
        case NodeKind::Variable:
            return a.var_index() == b.var_index() && a.slot() == b.slot();
        case NodeKind::Parameter:
            return a.name() == b.name();
        case NodeKind::Pow:
            if (!(a.exponent() == b.exponent())) return false;
            break;
        default:
            break;
    }
    for (std::size_t i = 0; i < a.arity(); ++i)
        if (!structurally_equal(a.child(i), b.child(i))) return false;
    return true;
}

namespace {

void visit_unique(const KernelExpr& e, const std::function<void(const KernelExpr&)>& fn) {
    std::unordered_map<const Node*, bool> seen;
    std::vector<KernelExpr> stack{e};
    while (!stack.empty()) {
        KernelExpr cur = stack.back();
        stack.pop_back();
        if (!seen.emplace(cur.id(), true).second) continue;
        fn(cur);
        for (std::size_t i = 0; i < cur.arity(); ++i) stack.push_back(cur.child(i));
    }
}

using ExponentMap = std::function<Exponent(const Exponent&)>;

KernelExpr rebuild(const KernelExpr& e, const std::function<std::optional<KernelExpr>(const KernelExpr&)>& leaf,
                   std::unordered_map<const Node*, KernelExpr>& memo, const ExponentMap* exponents = nullptr) {
    if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
    KernelExpr out;
    switch (e.kind()) {
        case NodeKind::Constant:
        case NodeKind::Variable:
        case NodeKind::Parameter: {
            auto r = leaf(e);
            out = r ? *r : e;
            break;
        }
        case NodeKind::Add: out = rebuild(e.child(0), leaf, memo, exponents) + rebuild(e.child(1), leaf, memo, exponents); break;
        case NodeKind::Sub: out = rebuild(e.child(0), leaf, memo, exponents) - rebuild(e.child(1), leaf, memo, exponents); break;
        case NodeKind::Mul: out = rebuild(e.child(0), leaf, memo, exponents) * rebuild(e.child(1), leaf, memo, exponents); break;
        case NodeKind::Div: out = rebuild(e.child(0), leaf, memo, exponents) / rebuild(e.child(1), leaf, memo, exponents); break;
        case NodeKind::Neg: out = -rebuild(e.child(0), leaf, memo, exponents); break;
        case NodeKind::Pow:
            out = pow(rebuild(e.child(0), leaf, memo, exponents), exponents ? (*exponents)(e.exponent()) : e.exponent());
            break;
        case NodeKind::Log: out = log(rebuild(e.child(0), leaf, memo, exponents)); break;
        case NodeKind::Exp: out = exp(rebuild(e.child(0), leaf, memo, exponents)); break;
    }
    memo.emplace(e.id(), out);
    return out;
}

}  // namespace

std::size_t node_count(const KernelExpr& e) {
    std::size_t n = 0;
    visit_unique(e, [&](const KernelExpr&) { ++n; });
    return n;
}

int max_variable_index(const KernelExpr& e) {
    int m = 0;
    visit_unique(e, [&](const KernelExpr& x) {
        if (x.kind() == NodeKind::Variable) m = std::max(m, x.var_index());
    });
    return m;
}

bool contains_slot(const KernelExpr& e, Slot slot) {
    bool found = false;
    visit_unique(e, [&](const KernelExpr& x) {
        if (x.kind() == NodeKind::Variable && x.slot() == slot) found = true;
    });
    return found;
}

std::set<std::string> parameters_of(const KernelExpr& e) {
    std::set<std::string> out;
    visit_unique(e, [&](const KernelExpr& x) {
        if (x.kind() == NodeKind::Parameter) out.insert(x.name());
        if (x.kind() == NodeKind::Pow)
            for (const auto& [name, c] : x.exponent().terms()) out.insert(name);
    });
    return out;
}

KernelExpr substitute_variables(const KernelExpr& e, const std::vector<KernelExpr>& z_images,
                                const std::vector<KernelExpr>& wb_images) {
    std::unordered_map<const Node*, KernelExpr> memo;
    return rebuild(
        e,
        [&](const KernelExpr& leaf) -> std::optional<KernelExpr> {
            if (leaf.kind() != NodeKind::Variable) return std::nullopt;
            const auto& images = leaf.slot() == Slot::Z ? z_images : wb_images;
            const auto i = static_cast<std::size_t>(leaf.var_index() - 1);
            if (i < images.size()) return images[i];
            return std::nullopt;
        },
        memo);
}

KernelExpr bind_parameters(const KernelExpr& e, const ParameterBinding& params) {
    std::unordered_map<const Node*, KernelExpr> memo;
    const ExponentMap exponents = [&](const Exponent& x) {
        Exponent out(x.constant());
        for (const auto& [name, c] : x.terms())
            out = params.contains(name) ? out + Exponent(c * params.get(name)) : out + Exponent::parameter(name, c);
        return out;
    };
    return rebuild(
        e,
        [&](const KernelExpr& leaf) -> std::optional<KernelExpr> {
            if (leaf.kind() == NodeKind::Parameter && params.contains(leaf.name()))
                return KernelExpr::constant(params.get(leaf.name()));
            return std::nullopt;
        },
        memo, &exponents);
}

KernelExpr conjugate_pattern(const KernelExpr& e) {
    std::unordered_map<const Node*, KernelExpr> memo;
    return rebuild(
        e,
        [](const KernelExpr& leaf) -> std::optional<KernelExpr> {
            if (leaf.kind() == NodeKind::Constant) return KernelExpr::constant(std::conj(leaf.constant_value()));
            if (leaf.kind() == NodeKind::Variable)
                return KernelExpr::variable(leaf.var_index(), leaf.slot() == Slot::Z ? Slot::Wb : Slot::Z);
            return std::nullopt;
        },
        memo);
}

KernelExpr expand_log(const KernelExpr& arg) {
    switch (arg.kind()) {
        case NodeKind::Mul: return expand_log(arg.child(0)) + expand_log(arg.child(1));
        case NodeKind::Div: return expand_log(arg.child(0)) - expand_log(arg.child(1));
        case NodeKind::Pow: return exponent_expr(arg.exponent()) * expand_log(arg.child(0));
        case NodeKind::Exp: return arg.child(0);
        default: return log(arg);
    }
}

// ---------------------------------------------------------------------------
// Parser

namespace {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
    Tok kind = Tok::End;
    std::size_t offset = 0;  // 1-based
    std::size_t end = 0;     // 1-based, one past the last character
    double number = 0.0;
    bool imaginary = false;
    std::string text;
};

std::vector<Token> lex(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        Token t;
        t.offset = i + 1;
        if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < s.size() &&
                                                            std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
            std::size_t j = i;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            if (j < s.size() && s[j] == '.') {
                ++j;
                while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            }
            if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
                if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
                    while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
                    j = k;
                }
            }
            std::string lit(s.substr(i, j - i));
            double v = 0.0;
            auto res = std::from_chars(lit.data(), lit.data() + lit.size(), v);
            if (res.ec != std::errc() || res.ptr != lit.data() + lit.size())
                throw ParseError(t.offset, "malformed number '" + lit + "'");
            t.kind = Tok::Number;
            t.number = v;
            if (j < s.size() && s[j] == 'i' &&
                !(j + 1 < s.size() && (std::isalnum(static_cast<unsigned char>(s[j + 1])) || s[j + 1] == '_'))) {
                t.imaginary = true;
                ++j;
            }
            i = j;
        } else if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
            t.kind = Tok::Ident;
            t.text = std::string(s.substr(i, j - i));
            i = j;
        } else {
            switch (c) {
                case '+': t.kind = Tok::Plus; break;
                case '-': t.kind = Tok::Minus; break;
                case '*': t.kind = Tok::Star; break;
                case '/': t.kind = Tok::Slash; break;
                case '^': t.kind = Tok::Caret; break;
                case '(': t.kind = Tok::LParen; break;
                case ')': t.kind = Tok::RParen; break;
                default:
                    throw ParseError(t.offset, std::string("unexpected character '") + c + "'");
            }
            ++i;
        }
        t.end = i + 1;
        out.push_back(std::move(t));
    }
    Token end;
    end.kind = Tok::End;
    end.offset = s.size() + 1;
    end.end = end.offset;
    out.push_back(end);
    return out;
}

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

class Parser {
public:
    Parser(std::string_view text, int dimension) : toks_(lex(text)), dim_(dimension) {}

    KernelExpr parse() {
        KernelExpr e = expr();
        if (peek().kind != Tok::End) throw ParseError(peek().offset, "unexpected token after expression");
        return e;
    }

private:
    const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
    const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
    void expect(Tok kind, const char* what) {
        if (peek().kind != kind) throw ParseError(peek().offset, std::string("expected ") + what);
        next();
    }

    KernelExpr expr() {
        KernelExpr lhs = term();
        while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
            const NodeKind k = next().kind == Tok::Plus ? NodeKind::Add : NodeKind::Sub;
            lhs = KernelExpr::raw_binary(k, lhs, term());
        }
        return lhs;
    }

    KernelExpr term() {
        KernelExpr lhs = factor();
        while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
            const NodeKind k = next().kind == Tok::Star ? NodeKind::Mul : NodeKind::Div;
            lhs = KernelExpr::raw_binary(k, lhs, factor());
        }
        return lhs;
    }

    KernelExpr factor() {
        if (peek().kind == Tok::Minus) {
            next();
            return KernelExpr::raw_unary(NodeKind::Neg, factor());
        }
        KernelExpr b = base();
        if (peek().kind == Tok::Caret) {
            next();
            return KernelExpr::raw_pow(b, exponent());
        }
        return b;
    }

    // "(" ["-"] number [("+"|"-") imaginary-number] ")" written without inner whitespace is a
    // single complex literal; "(1 + 2i)" stays a sum.
    std::optional<KernelExpr> try_literal() {
        auto touching = [&](std::size_t k) { return peek(k - 1).end == peek(k).offset; };
        std::size_t k = 1;
        double sign = 1.0;
        if (peek(k).kind == Tok::Minus) {
            if (!touching(k)) return std::nullopt;
            sign = -1.0;
            ++k;
        }
        if (peek(k).kind != Tok::Number || !touching(k)) return std::nullopt;
        const Token& first = peek(k);
        ++k;
        cplx value = first.imaginary ? cplx(0.0, sign * first.number) : cplx(sign * first.number, 0.0);
        if (peek(k).kind == Tok::RParen && touching(k)) {
            if (sign > 0.0) return std::nullopt;  // "(2)" stays a parenthesized expression
            pos_ += k + 1;
            return KernelExpr::constant(value);
        }
        if (first.imaginary) return std::nullopt;
        if ((peek(k).kind != Tok::Plus && peek(k).kind != Tok::Minus) || !touching(k)) return std::nullopt;
        const double s2 = peek(k).kind == Tok::Plus ? 1.0 : -1.0;
        if (peek(k + 1).kind != Tok::Number || !peek(k + 1).imaginary || !touching(k + 1) ||
            peek(k + 2).kind != Tok::RParen || !touching(k + 2))
            return std::nullopt;
        value += cplx(0.0, s2 * peek(k + 1).number);
        pos_ += k + 3;
        return KernelExpr::constant(value);
    }

    KernelExpr base() {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::Number:
                next();
                return KernelExpr::constant(t.imaginary ? cplx(0.0, t.number) : cplx(t.number, 0.0));
            case Tok::LParen: {
                if (auto lit = try_literal()) return *lit;
                next();
                KernelExpr e = expr();
                expect(Tok::RParen, "')'");
                return e;
            }
            case Tok::Ident:
                return identifier();
            case Tok::End:
                throw ParseError(t.offset, "unexpected end of input");
            default:
                throw ParseError(t.offset, "unexpected token");
        }
    }

    KernelExpr identifier() {
        const Token t = next();
        const std::string& id = t.text;
        if (id == "log" || id == "exp") {
            expect(Tok::LParen, "'(' after function name");
            KernelExpr arg = expr();
            expect(Tok::RParen, "')'");
            return KernelExpr::raw_unary(id == "log" ? NodeKind::Log : NodeKind::Exp, arg);
        }
        if (peek().kind == Tok::LParen) throw ParseError(t.offset, "unknown identifier '" + id + "'");
        if (auto var = variable(id, t.offset)) return *var;
        return KernelExpr::parameter(id);
    }

    std::optional<KernelExpr> variable(const std::string& id, std::size_t offset) const {
        Slot slot;
        std::string_view digits;
        if (id.size() > 1 && id[0] == 'z' && all_digits(std::string_view(id).substr(1))) {
            slot = Slot::Z;
            digits = std::string_view(id).substr(1);
        } else if (id.size() > 2 && id.rfind("wb", 0) == 0 && all_digits(std::string_view(id).substr(2))) {
            slot = Slot::Wb;
            digits = std::string_view(id).substr(2);
        } else {
            return std::nullopt;
        }
        if (digits.size() > 6) throw ParseError(offset, "variable index out of range in '" + id + "'");
        const int index = std::stoi(std::string(digits));
        if (index < 1) throw ParseError(offset, "variable index must be >= 1 in '" + id + "'");
        if (index > dim_)
            throw ParseError(offset, "variable '" + id + "' exceeds dimension " + std::to_string(dim_));
        return KernelExpr::variable(index, slot);
    }

    std::string exponent_parameter(const Token& t) const {
        if (t.kind != Tok::Ident) throw ParseError(t.offset, "expected exponent");
        if (t.text == "log" || t.text == "exp" || variable(t.text, t.offset))
            throw ParseError(t.offset, "exponent must be a real literal or parameter, got '" + t.text + "'");
        return t.text;
    }

    double real_number(const Token& t) const {
        if (t.kind != Tok::Number) throw ParseError(t.offset, "expected number in exponent");
        if (t.imaginary) throw ParseError(t.offset, "non-real exponent");
        return t.number;
    }

    Exponent exponent() {
        const Token& t = peek();
        if (t.kind == Tok::Number) return Exponent(real_number(next()));
        if (t.kind == Tok::Minus || t.kind == Tok::Plus) {
            const double sign = next().kind == Tok::Minus ? -1.0 : 1.0;
            return Exponent(sign * real_number(next()));
        }
        if (t.kind == Tok::Ident) return Exponent::parameter(exponent_parameter(next()));
        if (t.kind != Tok::LParen) throw ParseError(t.offset, "expected exponent");
        next();
        Exponent out;
        bool first = true;
        while (true) {
            double sign = 1.0;
            if (peek().kind == Tok::Minus || peek().kind == Tok::Plus) {
                sign = next().kind == Tok::Minus ? -1.0 : 1.0;
            } else if (!first) {
                break;
            }
            first = false;
            if (peek().kind == Tok::Number) {
                const double v = sign * real_number(next());
                if (peek().kind == Tok::Star) {
                    next();
                    out = out + Exponent::parameter(exponent_parameter(next()), v);
                } else {
                    out = out + Exponent(v);
                }
            } else {
                out = out + Exponent::parameter(exponent_parameter(next()), sign);
            }
        }
        expect(Tok::RParen, "')' closing exponent");
        return out;
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    int dim_;
};

// ---------------------------------------------------------------------------
// Serializer

int precedence(const KernelExpr& e) {
    switch (e.kind()) {
        case NodeKind::Add:
        case NodeKind::Sub: return 1;
        case NodeKind::Mul:
        case NodeKind::Div: return 2;
        case NodeKind::Neg: return 3;
        case NodeKind::Pow: return 4;
        default: return 5;
    }
}

std::string constant_text(cplx v) {
    const double re = v.real(), im = v.imag();
    if (im == 0.0) return re < 0.0 ? "(" + format_real(re) + ")" : format_real(re);
    if (re == 0.0) return im < 0.0 ? "(" + format_real(im) + "i)" : format_real(im) + "i";
    return "(" + format_real(re) + (im < 0.0 ? "-" : "+") + format_real(std::abs(im)) + "i)";
}

void write(const KernelExpr& e, std::string& out);

void write_wrapped(const KernelExpr& e, bool wrap, std::string& out) {
    if (wrap) out += '(';
    write(e, out);
    if (wrap) out += ')';
}

void write(const KernelExpr& e, std::string& out) {
    switch (e.kind()) {
        case NodeKind::Constant: out += constant_text(e.constant_value()); return;
        case NodeKind::Variable:
            out += (e.slot() == Slot::Z ? "z" : "wb") + std::to_string(e.var_index());
            return;
        case NodeKind::Parameter: out += e.name(); return;
        case NodeKind::Add:
        case NodeKind::Sub:
            write_wrapped(e.child(0), false, out);
            out += e.kind() == NodeKind::Add ? " + " : " - ";
            write_wrapped(e.child(1), precedence(e.child(1)) <= 1, out);
            return;
        case NodeKind::Mul:
        case NodeKind::Div:
            write_wrapped(e.child(0), precedence(e.child(0)) < 2, out);
            out += e.kind() == NodeKind::Mul ? "*" : "/";
            write_wrapped(e.child(1), precedence(e.child(1)) <= 2, out);
            return;
        case NodeKind::Neg:
            out += '-';
            write_wrapped(e.child(0), precedence(e.child(0)) < 3, out);
            return;
        case NodeKind::Pow: {
            const KernelExpr& b = e.child(0);
            if (b.kind() == NodeKind::Neg && b.child(0).is_constant()) {
                // "(-2)" would read back as a literal
                out += "(- ";
                write(b.child(0), out);
                out += ')';
            } else {
                write_wrapped(b, precedence(b) < 5, out);
            }
            out += '^';
            const Exponent& x = e.exponent();
            const bool bare = (x.is_constant() && x.constant() >= 0.0) ||
                              (x.constant() == 0.0 && x.terms().size() == 1 && x.terms()[0].second == 1.0);
            out += bare ? x.to_string() : "(" + x.to_string() + ")";
            return;
        }
        case NodeKind::Log:
        case NodeKind::Exp:
            out += e.kind() == NodeKind::Log ? "log(" : "exp(";
            write(e.child(0), out);
            out += ')';
            return;
    }
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

}  // namespace

KernelExpr parse_kernel(std::string_view text, int dimension) {
    if (dimension < 1) throw DomainError("dimension must be >= 1");
    return Parser(text, dimension).parse();
}

std::string serialize(const KernelExpr& e) {
    std::string out;
    write(e, out);
    return out;
}

ParameterBinding parse_parameter_list(std::string_view text) {
    ParameterBinding out;
    std::string s(text);
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw DomainError("malformed parameter '" + item + "', expected name=value");
        const std::string name = trim(std::string_view(item).substr(0, eq));
        const std::string val = trim(std::string_view(item).substr(eq + 1));
        double v = 0.0;
        auto res = std::from_chars(val.data(), val.data() + val.size(), v);
        if (name.empty() || res.ec != std::errc() || res.ptr != val.data() + val.size())
            throw DomainError("malformed parameter '" + item + "'");
        out.set(name, v);
    }
    return out;
}

KernelSpec parse_kernel_spec(std::string_view text) {
    std::optional<int> dim;
    std::optional<std::string> kernel_text;
    ParameterBinding params;
    std::string s(text);
    std::stringstream ss(s);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw DomainError("kernel spec line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(std::string_view(t).substr(0, eq));
        const std::string value = trim(std::string_view(t).substr(eq + 1));
        if (key == "dim") {
            int d = 0;
            auto res = std::from_chars(value.data(), value.data() + value.size(), d);
            if (res.ec != std::errc() || res.ptr != value.data() + value.size() || d < 1)
                throw DomainError("kernel spec: invalid dim '" + value + "'");
            dim = d;
        } else if (key == "kernel") {
            kernel_text = value;
        } else if (key == "params") {
            params = parse_parameter_list(value);
        } else {
            throw DomainError("kernel spec line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    if (!dim) throw DomainError("kernel spec: missing 'dim = m' line");
    if (!kernel_text) throw DomainError("kernel spec: missing 'kernel = <expr>' line");
    KernelSpec spec;
    spec.dimension = *dim;
    spec.kernel = parse_kernel(*kernel_text, *dim);
    spec.params = std::move(params);
    return spec;
}

KernelSpec load_kernel_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open kernel file '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_kernel_spec(buf.str());
}

}  // namespace jetq
