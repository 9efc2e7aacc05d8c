#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "jetq/types.hpp"

namespace jetq {

// Sesqui-holomorphic kernel expressions K(z, wb).
//
// Variables come in two independent slots: z1..zm (holomorphic) and wb1..wbm, which
// stand for the conjugates of the second point. There is no conjugation node, so a
// z-derivative never touches a wb variable and vice versa.

enum class NodeKind : std::uint8_t {
    Constant,
    Variable,
    Parameter,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Pow,
    Log,
    Exp,
};

enum class Slot : std::uint8_t { Z, Wb };

/// Real-valued parameter values (lambda, mu, alpha, ...).
class ParameterBinding {
public:
    ParameterBinding() = default;
    ParameterBinding(std::initializer_list<std::pair<const std::string, double>> init) : values_(init) {}

    void set(const std::string& name, double value) { values_[name] = value; }
    bool contains(const std::string& name) const { return values_.count(name) != 0; }
    /// Throws EvalError if the parameter is unbound.
    double get(const std::string& name) const;
    const std::map<std::string, double>& values() const { return values_; }

    /// Later bindings win.
    ParameterBinding merged(const ParameterBinding& overrides) const;

private:
    std::map<std::string, double> values_;
};

/// Pow exponent: constant + sum of coeff * parameter. Closed under the d/dx rule
/// e -> e - 1, which is all differentiation ever needs.
class Exponent {
public:
    Exponent() = default;
    Exponent(double constant) : constant_(constant) {}  // NOLINT: implicit by design of literals
    static Exponent parameter(const std::string& name, double coeff = 1.0);

    double constant() const { return constant_; }
    const std::vector<std::pair<std::string, double>>& terms() const { return terms_; }
    bool is_constant() const { return terms_.empty(); }
    std::optional<long> as_integer() const;
    double value(const ParameterBinding& params) const;

    Exponent operator+(const Exponent& other) const;
    Exponent operator-(const Exponent& other) const;
    Exponent operator-() const;
    bool operator==(const Exponent& other) const = default;

    /// Canonical text, e.g. "2", "-0.5", "l", "-l-1", "2*a+1".
    std::string to_string() const;

private:
    double constant_ = 0.0;
    std::vector<std::pair<std::string, double>> terms_;  // sorted by name, no zero coefficients
};

class Node;

/// Immutable handle to an expression DAG node. Cheap to copy; safe to share across threads.
class KernelExpr {
public:
    KernelExpr();  // the constant 0

    static KernelExpr constant(cplx value);
    static KernelExpr variable(int index, Slot slot);
    static KernelExpr z(int index) { return variable(index, Slot::Z); }
    static KernelExpr wb(int index) { return variable(index, Slot::Wb); }
    static KernelExpr parameter(const std::string& name);

    // Unfolded constructors used by the parser so that text round-trips structurally.
    static KernelExpr raw_unary(NodeKind kind, const KernelExpr& child);
    static KernelExpr raw_binary(NodeKind kind, const KernelExpr& lhs, const KernelExpr& rhs);
    static KernelExpr raw_pow(const KernelExpr& base, const Exponent& exponent);

    NodeKind kind() const;
    std::size_t arity() const;
    const KernelExpr& child(std::size_t i) const;

    cplx constant_value() const;
    int var_index() const;
    Slot slot() const;
    const std::string& name() const;
    const Exponent& exponent() const;

    bool is_constant() const { return kind() == NodeKind::Constant; }
    bool is_zero() const;
    bool is_one() const;

    /// Stable identity of the underlying node, used for memoization.
    const Node* id() const { return node_.get(); }

private:
    explicit KernelExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

class Node {
public:
    NodeKind kind = NodeKind::Constant;
    std::vector<KernelExpr> children;
    cplx value{0.0, 0.0};
    int index = 0;
    Slot slot = Slot::Z;
    std::string name;
    Exponent exponent;
};

// Folding builders: constant folding plus zero/one elimination, nothing more.
KernelExpr operator+(const KernelExpr& a, const KernelExpr& b);
KernelExpr operator-(const KernelExpr& a, const KernelExpr& b);
KernelExpr operator*(const KernelExpr& a, const KernelExpr& b);
KernelExpr operator/(const KernelExpr& a, const KernelExpr& b);
KernelExpr operator-(const KernelExpr& a);
KernelExpr pow(const KernelExpr& base, const Exponent& exponent);
KernelExpr log(const KernelExpr& arg);
KernelExpr exp(const KernelExpr& arg);
KernelExpr exponent_expr(const Exponent& e);

bool structurally_equal(const KernelExpr& a, const KernelExpr& b);
std::size_t node_count(const KernelExpr& e);
int max_variable_index(const KernelExpr& e);
bool contains_slot(const KernelExpr& e, Slot slot);
std::set<std::string> parameters_of(const KernelExpr& e);

/// Replace every variable by the given images (index i-1 holds the image of slot variable i).
/// Missing images leave the variable untouched. Result is rebuilt with the folding builders.
KernelExpr substitute_variables(const KernelExpr& e, const std::vector<KernelExpr>& z_images,
                                const std::vector<KernelExpr>& wb_images);

/// Replace every bound parameter (leaves and pow exponents) by its value; unbound names stay.
KernelExpr bind_parameters(const KernelExpr& e, const ParameterBinding& params);

/// Swap z_i <-> wb_i and conjugate every constant: the pattern of conj(K(w, z)).
KernelExpr conjugate_pattern(const KernelExpr& e);

/// Rewrites log(a*b), log(a/b), log(a^p), log(exp(a)) additively. Valid up to additive
/// multiples of 2*pi*i, so only use it under at least one derivative.
KernelExpr expand_log(const KernelExpr& arg);

/// Parse kernel text in `dimension` variables. Throws ParseError.
KernelExpr parse_kernel(std::string_view text, int dimension);

/// Canonical text; parse_kernel(serialize(e), m) is structurally equal to e.
std::string serialize(const KernelExpr& e);

/// Contents of a kernel spec file.
struct KernelSpec {
    int dimension = 1;
    KernelExpr kernel;
    ParameterBinding params;
};

KernelSpec parse_kernel_spec(std::string_view text);
KernelSpec load_kernel_spec(const std::filesystem::path& path);

/// "a=1,b=2.5" -> binding. Throws DomainError on malformed input.
ParameterBinding parse_parameter_list(std::string_view text);

}  // namespace jetq
