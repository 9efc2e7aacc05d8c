#pragma once

#include <map>
#include <vector>

#include "jetq/kernel_expr.hpp"
#include "jetq/types.hpp"

namespace jetq {

inline constexpr int kDefaultOrderCap = 8;

/// Mixed partial multi-index: z[i] counts d/dz_{i+1}, wb[i] counts d/dwb_{i+1}.
struct DerivativeIndex {
    std::vector<int> z;
    std::vector<int> wb;

    static DerivativeIndex zeros(int m) { return {std::vector<int>(m, 0), std::vector<int>(m, 0)}; }
    /// d^a/dz_i^a d^b/dwb_j^b with 1-based i, j.
    static DerivativeIndex mixed(int m, int i, int a, int j, int b);

    int dimension() const { return static_cast<int>(z.size()); }
    int order() const;
    DerivativeIndex& add_z(int i, int n = 1);   // 1-based
    DerivativeIndex& add_wb(int i, int n = 1);  // 1-based
    DerivativeIndex operator+(const DerivativeIndex& other) const;
    bool operator==(const DerivativeIndex& other) const = default;
    bool operator<(const DerivativeIndex& other) const {
        return z != other.z ? z < other.z : wb < other.wb;
    }
};

/// A point pair (z, w). The wb slot receives conj(w).
struct EvalPoint {
    CVector z;
    CVector w;

    EvalPoint() = default;
    EvalPoint(CVector z_, CVector w_);
    static EvalPoint diagonal(const CVector& z) { return {z, z}; }
    int dimension() const { return static_cast<int>(z.size()); }
};

/// Single derivative d/d(slot)_index (1-based).
KernelExpr differentiate(const KernelExpr& e, Slot slot, int index);

/// Full mixed partial, applied in a canonical order (z_1.., then wb_1..).
KernelExpr differentiate(const KernelExpr& e, const DerivativeIndex& idx, int cap = kDefaultOrderCap);

/// Expression flattened into a straight-line program with parameters and exponents bound.
/// Evaluation is re-entrant, so one tape can be shared by many threads.
class Tape {
public:
    Tape() = default;
    static Tape compile(const KernelExpr& e, const ParameterBinding& params);

    cplx operator()(const EvalPoint& p) const;
    std::size_t size() const { return ops_.size(); }
    /// Largest variable index referenced (0 for constants).
    int dimension() const { return dim_; }

private:
    struct Op {
        NodeKind kind;
        int a = -1, b = -1;
        int var = 0;
        Slot slot = Slot::Z;
        cplx value{};
        double exponent = 0.0;
        bool integer_exponent = false;
        long int_exponent = 0;
    };
    std::vector<Op> ops_;
    int dim_ = 0;
};

/// Principal-branch evaluation at z_i := p.z_i, wb_i := conj(p.w_i). Throws EvalError
/// outside the safe domain.
cplx evaluate(const KernelExpr& e, const EvalPoint& p, const ParameterBinding& params);

/// Lazily built table of mixed partials of one expression. Each entry is derived from a
/// cached neighbour by a single differentiation. Not thread-safe; compile tapes to share.
class DerivativeTable {
public:
    explicit DerivativeTable(KernelExpr e, int dimension, int cap = kDefaultOrderCap);

    const KernelExpr& get(const DerivativeIndex& idx);
    const KernelExpr& base() const { return base_; }
    int dimension() const { return dim_; }
    cplx eval(const DerivativeIndex& idx, const EvalPoint& p, const ParameterBinding& params);

private:
    KernelExpr base_;
    int dim_;
    int cap_;
    std::map<DerivativeIndex, KernelExpr> cache_;
};

/// d/dwb_i d/dz_j log K at the diagonal pair (z, z), via the quotient rule on K's partials.
cplx mixed_log_derivative(const KernelExpr& kernel, int i, int j, const CVector& z, const ParameterBinding& params);

/// Real, positive value of K(z, z); throws EvalError otherwise.
double diagonal_value(const KernelExpr& kernel, const CVector& z, const ParameterBinding& params);

inline constexpr double kDefaultFdStep = 1e-4;

/// Central finite-difference estimate of a mixed partial. z and w are perturbed along the
/// real axis (a real shift of w shifts wb by the same amount). Fourth-order stencils per
/// variable; the working step for total order n is step^(2/(n+1)).
cplx fd_mixed_derivative(const KernelExpr& kernel, const DerivativeIndex& idx, const EvalPoint& p,
                         const ParameterBinding& params, double step = kDefaultFdStep);

}  // namespace jetq
