#include "jetq/wirtinger.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <unordered_map>

namespace jetq {

// ---------------------------------------------------------------------------
// DerivativeIndex / EvalPoint

DerivativeIndex DerivativeIndex::mixed(int m, int i, int a, int j, int b) {
    DerivativeIndex idx = zeros(m);
    if (a > 0) idx.add_z(i, a);
    if (b > 0) idx.add_wb(j, b);
    return idx;
}

int DerivativeIndex::order() const {
    return std::accumulate(z.begin(), z.end(), 0) + std::accumulate(wb.begin(), wb.end(), 0);
}

DerivativeIndex& DerivativeIndex::add_z(int i, int n) {
    if (i < 1 || i > dimension()) throw DomainError("derivative index z" + std::to_string(i) + " out of range");
    z[i - 1] += n;
    return *this;
}

DerivativeIndex& DerivativeIndex::add_wb(int i, int n) {
    if (i < 1 || i > dimension()) throw DomainError("derivative index wb" + std::to_string(i) + " out of range");
    wb[i - 1] += n;
    return *this;
}

DerivativeIndex DerivativeIndex::operator+(const DerivativeIndex& other) const {
    if (other.dimension() != dimension()) throw DomainError("derivative index dimension mismatch");
    DerivativeIndex out = *this;
    for (int i = 0; i < dimension(); ++i) {
        out.z[i] += other.z[i];
        out.wb[i] += other.wb[i];
    }
    return out;
}

EvalPoint::EvalPoint(CVector z_, CVector w_) : z(std::move(z_)), w(std::move(w_)) {
    if (z.size() != w.size()) throw DomainError("evaluation point: z and w dimensions differ");
}

// ---------------------------------------------------------------------------
// Differentiation

namespace {

using Memo = std::unordered_map<const Node*, KernelExpr>;

KernelExpr diff(const KernelExpr& e, Slot slot, int index, Memo& memo) {
    if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
    KernelExpr d;
    switch (e.kind()) {
        case NodeKind::Constant:
        case NodeKind::Parameter:
            d = KernelExpr::constant(0.0);
            break;
        case NodeKind::Variable:
            d = KernelExpr::constant(e.slot() == slot && e.var_index() == index ? 1.0 : 0.0);
            break;
        case NodeKind::Add:
            d = diff(e.child(0), slot, index, memo) + diff(e.child(1), slot, index, memo);
            break;
        case NodeKind::Sub:
            d = diff(e.child(0), slot, index, memo) - diff(e.child(1), slot, index, memo);
            break;
        case NodeKind::Mul: {
            const KernelExpr& a = e.child(0);
            const KernelExpr& b = e.child(1);
            d = diff(a, slot, index, memo) * b + a * diff(b, slot, index, memo);
            break;
        }
        case NodeKind::Div: {
            const KernelExpr& a = e.child(0);
            const KernelExpr& b = e.child(1);
            const KernelExpr da = diff(a, slot, index, memo);
            const KernelExpr db = diff(b, slot, index, memo);
            d = da / b - (a * db) / pow(b, Exponent(2.0));
            break;
        }
        case NodeKind::Neg:
            d = -diff(e.child(0), slot, index, memo);
            break;
        case NodeKind::Pow: {
            const KernelExpr& b = e.child(0);
            const KernelExpr db = diff(b, slot, index, memo);
            if (db.is_zero()) {
                d = db;
            } else {
                const Exponent& x = e.exponent();
                d = exponent_expr(x) * pow(b, x - Exponent(1.0)) * db;
            }
            break;
        }
        case NodeKind::Log:
            d = diff(e.child(0), slot, index, memo) / e.child(0);
            break;
        case NodeKind::Exp:
            d = e * diff(e.child(0), slot, index, memo);
            break;
    }
    memo.emplace(e.id(), d);
    return d;
}

void check_order(const DerivativeIndex& idx, int cap) {
    for (int n : idx.z)
        if (n < 0) throw DomainError("negative derivative order");
    for (int n : idx.wb)
        if (n < 0) throw DomainError("negative derivative order");
    if (idx.order() > cap)
        throw DomainError("derivative order " + std::to_string(idx.order()) + " exceeds cap " + std::to_string(cap));
}

}  // namespace

KernelExpr differentiate(const KernelExpr& e, Slot slot, int index) {
    if (index < 1) throw DomainError("variable index must be >= 1");
    Memo memo;
    return diff(e, slot, index, memo);
}

KernelExpr differentiate(const KernelExpr& e, const DerivativeIndex& idx, int cap) {
    check_order(idx, cap);
    KernelExpr out = e;
    for (int i = 0; i < idx.dimension(); ++i)
        for (int n = 0; n < idx.z[i]; ++n) out = differentiate(out, Slot::Z, i + 1);
    for (int i = 0; i < idx.dimension(); ++i)
        for (int n = 0; n < idx.wb[i]; ++n) out = differentiate(out, Slot::Wb, i + 1);
    return out;
}

// ---------------------------------------------------------------------------
// Tape

Tape Tape::compile(const KernelExpr& e, const ParameterBinding& params) {
    Tape tape;
    std::unordered_map<const Node*, int> slot_of;
    // Iterative post-order so deep derivative DAGs cannot overflow the stack.
    std::vector<std::pair<KernelExpr, bool>> stack{{e, false}};
    while (!stack.empty()) {
        auto [cur, expanded] = stack.back();
        stack.pop_back();
        if (slot_of.count(cur.id())) continue;
        if (!expanded) {
            stack.emplace_back(cur, true);
            for (std::size_t i = cur.arity(); i-- > 0;)
                if (!slot_of.count(cur.child(i).id())) stack.emplace_back(cur.child(i), false);
            continue;
        }
        Op op;
        op.kind = cur.kind();
        if (cur.arity() > 0) op.a = slot_of.at(cur.child(0).id());
        if (cur.arity() > 1) op.b = slot_of.at(cur.child(1).id());
        switch (cur.kind()) {
            case NodeKind::Constant: op.value = cur.constant_value(); break;
            case NodeKind::Parameter: op.value = params.get(cur.name()); break;
            case NodeKind::Variable:
                op.var = cur.var_index();
                op.slot = cur.slot();
                tape.dim_ = std::max(tape.dim_, op.var);
                break;
            case NodeKind::Pow: {
                op.exponent = cur.exponent().value(params);
                const double r = std::round(op.exponent);
                if (r == op.exponent && std::abs(r) <= 1e9) {
                    op.integer_exponent = true;
                    op.int_exponent = static_cast<long>(r);
                }
                break;
            }
            default: break;
        }
        slot_of.emplace(cur.id(), static_cast<int>(tape.ops_.size()));
        tape.ops_.push_back(op);
    }
    return tape;
}

namespace {

cplx int_pow(cplx b, long n) {
    if (n < 0) {
        if (b == cplx(0.0)) throw EvalError("division by zero: zero base with negative exponent");
        return cplx(1.0) / int_pow(b, -n);
    }
    cplx result(1.0);
    while (n > 0) {
        if (n & 1) result *= b;
        b *= b;
        n >>= 1;
    }
    return result;
}

}  // namespace

cplx Tape::operator()(const EvalPoint& p) const {
    if (dim_ > p.dimension())
        throw DomainError("evaluation point has dimension " + std::to_string(p.dimension()) + ", expression needs " +
                          std::to_string(dim_));
    if (ops_.empty()) throw DomainError("empty tape");
    std::vector<cplx> v(ops_.size());
    for (std::size_t k = 0; k < ops_.size(); ++k) {
        const Op& op = ops_[k];
        switch (op.kind) {
            case NodeKind::Constant:
            case NodeKind::Parameter: v[k] = op.value; break;
            case NodeKind::Variable:
                v[k] = op.slot == Slot::Z ? p.z[op.var - 1] : std::conj(p.w[op.var - 1]);
                break;
            case NodeKind::Add: v[k] = v[op.a] + v[op.b]; break;
            case NodeKind::Sub: v[k] = v[op.a] - v[op.b]; break;
            case NodeKind::Mul: v[k] = v[op.a] * v[op.b]; break;
            case NodeKind::Div:
                if (v[op.b] == cplx(0.0)) throw EvalError("division by zero");
                v[k] = v[op.a] / v[op.b];
                break;
            case NodeKind::Neg: v[k] = -v[op.a]; break;
            case NodeKind::Pow: {
                const cplx b = v[op.a];
                if (op.integer_exponent) {
                    v[k] = int_pow(b, op.int_exponent);
                } else {
                    if (!(b.real() > 0.0))
                        throw EvalError("pow base outside the principal-branch safe region (Re(base) <= 0)");
                    v[k] = std::exp(op.exponent * std::log(b));
                }
                break;
            }
            case NodeKind::Log:
                if (v[op.a] == cplx(0.0)) throw EvalError("log of zero");
                v[k] = std::log(v[op.a]);
                break;
            case NodeKind::Exp: v[k] = std::exp(v[op.a]); break;
        }
    }
    const cplx out = v.back();
    if (!std::isfinite(out.real()) || !std::isfinite(out.imag())) throw EvalError("non-finite value");
    return out;
}

cplx evaluate(const KernelExpr& e, const EvalPoint& p, const ParameterBinding& params) {
    return Tape::compile(e, params)(p);
}

// ---------------------------------------------------------------------------
// DerivativeTable

DerivativeTable::DerivativeTable(KernelExpr e, int dimension, int cap)
    : base_(std::move(e)), dim_(dimension), cap_(cap) {
    if (dimension < 1) throw DomainError("dimension must be >= 1");
    cache_.emplace(DerivativeIndex::zeros(dimension), base_);
}

const KernelExpr& DerivativeTable::get(const DerivativeIndex& idx) {
    if (idx.dimension() != dim_) throw DomainError("derivative index dimension mismatch");
    check_order(idx, cap_);
    if (auto it = cache_.find(idx); it != cache_.end()) return it->second;
    // Peel off the last derivative in canonical order (wb from the back, then z).
    DerivativeIndex parent = idx;
    Slot slot = Slot::Z;
    int var = 0;
    for (int i = dim_ - 1; i >= 0 && var == 0; --i)
        if (parent.wb[i] > 0) {
            --parent.wb[i];
            slot = Slot::Wb;
            var = i + 1;
        }
    for (int i = dim_ - 1; i >= 0 && var == 0; --i)
        if (parent.z[i] > 0) {
            --parent.z[i];
            slot = Slot::Z;
            var = i + 1;
        }
    KernelExpr d = differentiate(get(parent), slot, var);
    return cache_.emplace(idx, std::move(d)).first->second;
}

cplx DerivativeTable::eval(const DerivativeIndex& idx, const EvalPoint& p, const ParameterBinding& params) {
    return evaluate(get(idx), p, params);
}

// ---------------------------------------------------------------------------
// Log derivatives on the diagonal

double diagonal_value(const KernelExpr& kernel, const CVector& z, const ParameterBinding& params) {
    const cplx h = evaluate(kernel, EvalPoint::diagonal(z), params);
    if (!(h.real() > 0.0) || std::abs(h.imag()) > 1e-10 * std::abs(h))
        throw EvalError("non-positive metric: K(z,z) is not real and positive");
    return h.real();
}

cplx mixed_log_derivative(const KernelExpr& kernel, int i, int j, const CVector& z, const ParameterBinding& params) {
    const int m = static_cast<int>(z.size());
    if (i < 1 || i > m || j < 1 || j > m) throw DomainError("mixed_log_derivative: index out of range");
    DerivativeTable t(kernel, m);
    const EvalPoint p = EvalPoint::diagonal(z);
    const double h = diagonal_value(kernel, z, params);
    const cplx dj = t.eval(DerivativeIndex::mixed(m, j, 1, i, 0), p, params);
    const cplx di = t.eval(DerivativeIndex::mixed(m, j, 0, i, 1), p, params);
    const cplx dij = t.eval(DerivativeIndex::mixed(m, j, 1, i, 1), p, params);
    return (h * dij - dj * di) / (h * h);
}

// ---------------------------------------------------------------------------
// Finite differences

namespace {

struct Stencil {
    std::vector<int> offsets;
    std::vector<double> weights;  // integers, so constant inputs cancel exactly
    double divisor;               // times h^order
};

const Stencil& stencil(int order) {
    static const std::array<Stencil, 5> table = {{
        {{0}, {1}, 1},
        {{-2, -1, 1, 2}, {1, -8, 8, -1}, 12},
        {{-2, -1, 0, 1, 2}, {-1, 16, -30, 16, -1}, 12},
        {{-3, -2, -1, 1, 2, 3}, {1, -8, 13, -13, 8, -1}, 8},
        {{-3, -2, -1, 0, 1, 2, 3}, {-1, 12, -39, 56, -39, 12, -1}, 6},
    }};
    if (order < 0 || order >= static_cast<int>(table.size()))
        throw DomainError("finite differences support at most order 4 per variable");
    return table[order];
}

}  // namespace

cplx fd_mixed_derivative(const KernelExpr& kernel, const DerivativeIndex& idx, const EvalPoint& p,
                         const ParameterBinding& params, double step) {
    if (!(step > 0.0)) throw DomainError("finite-difference step must be positive");
    const int m = p.dimension();
    if (idx.dimension() != m) throw DomainError("derivative index dimension mismatch");
    const int n = idx.order();
    const Tape tape = Tape::compile(kernel, params);
    if (n == 0) return tape(p);
    const double h = std::pow(step, 2.0 / (n + 1));

    // Active axes: (slot, variable, order).
    struct Axis {
        bool is_z;
        int var;
        const Stencil* st;
    };
    std::vector<Axis> axes;
    for (int i = 0; i < m; ++i) {
        if (idx.z[i] > 0) axes.push_back({true, i, &stencil(idx.z[i])});
        if (idx.wb[i] > 0) axes.push_back({false, i, &stencil(idx.wb[i])});
    }

    auto shifted = [&](const std::vector<double>& delta) {
        EvalPoint q = p;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            if (axes[a].is_z)
                q.z[axes[a].var] += delta[a];
            else
                q.w[axes[a].var] += delta[a];
        }
        return q;
    };

    // Margin: the kernel must be evaluable 4 working steps out along every active axis.
    for (std::size_t a = 0; a < axes.size(); ++a)
        for (double s : {-4.0, 4.0}) {
            std::vector<double> delta(axes.size(), 0.0);
            delta[a] = s * h;
            try {
                (void)tape(shifted(delta));
            } catch (const EvalError&) {
                throw DomainError("insufficient domain margin for finite differences");
            }
        }

    double divisor = std::pow(h, n);
    for (const auto& ax : axes) divisor *= ax.st->divisor;

    std::vector<std::size_t> pos(axes.size(), 0);
    cplx total(0.0);
    while (true) {
        std::vector<double> delta(axes.size());
        double w = 1.0;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            delta[a] = axes[a].st->offsets[pos[a]] * h;
            w *= axes[a].st->weights[pos[a]];
        }
        try {
            total += w * tape(shifted(delta));
        } catch (const EvalError&) {
            throw DomainError("insufficient domain margin for finite differences");
        }
        std::size_t a = 0;
        for (; a < axes.size(); ++a) {
            if (++pos[a] < axes[a].st->offsets.size()) break;
            pos[a] = 0;
        }
        if (a == axes.size()) break;
    }
    return total / divisor;
}

}  // namespace jetq
