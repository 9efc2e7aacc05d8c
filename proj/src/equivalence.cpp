#include "jetq/equivalence.hpp"

#include <cmath>

#include "jetq/grid.hpp"

namespace jetq {

void BlockResiduals::absorb(const BlockResiduals& o) {
    tan = std::max(tan, o.tan);
    row = std::max(row, o.row);
    col = std::max(col, o.col);
    scalar = std::max(scalar, o.scalar);
}

namespace {

double maxabs(const CMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }
double maxabs(const CVector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

CVector with_normal(const CVector& zprime) {
    CVector z(zprime.size() + 1);
    z[0] = 0.0;
    z.tail(zprime.size()) = zprime;
    return z;
}

void check_positive(const Tape& t, const EvalPoint& p, const char* which) {
    const cplx v = t(p);
    if (!(v.real() > 0.0) || std::abs(v.imag()) > 1e-10 * std::abs(v))
        throw EvalError(std::string("non-positive metric ratio: ") + which + "(z,z) is not positive");
}

}  // namespace

BlockResiduals DkResult::residuals() const {
    BlockResiduals r;
    r.tan = maxabs(tan_block);
    for (const auto& v : row_vectors) r.row = std::max(r.row, maxabs(v));
    for (const auto& v : col_vectors) r.col = std::max(r.col, maxabs(v));
    r.scalar = maxabs(scalar_block);
    return r;
}

DkPlan::DkPlan(const KernelExpr& rho, const KernelExpr& rho_tilde, int dimension, int k, const ParameterBinding& params)
    : m_(dimension), k_(k) {
    if (dimension < 1) throw DomainError("dimension must be >= 1");
    if (k < 1) throw DomainError("order k must be >= 1");
    if (max_variable_index(rho) > dimension || max_variable_index(rho_tilde) > dimension)
        throw DomainError("kernel uses more variables than the declared dimension");
    const KernelExpr g = expand_log(rho_tilde) - expand_log(rho);
    DerivativeTable t(g, m_, std::max(kDefaultOrderCap, 2 * (k - 1)));
    auto add = [&](int block, int a, int b, const DerivativeIndex& idx) {
        entries_.push_back({block, a, b});
        tapes_.push_back(Tape::compile(t.get(idx), params));
    };
    for (int i = 2; i <= m_; ++i)
        for (int j = 2; j <= m_; ++j) add(0, i - 2, j - 2, DerivativeIndex::mixed(m_, j, 1, i, 1));
    for (int j = 1; j < k_; ++j)
        for (int i = 2; i <= m_; ++i) add(1, j - 1, i - 2, DerivativeIndex::mixed(m_, 1, j, i, 1));
    for (int i = 1; i < k_; ++i)
        for (int j = 2; j <= m_; ++j) add(2, i - 1, j - 2, DerivativeIndex::mixed(m_, j, 1, 1, i));
    for (int i = 1; i < k_; ++i)
        for (int j = 1; j < k_; ++j) add(3, i - 1, j - 1, DerivativeIndex::mixed(m_, 1, j, 1, i));
    rho_ = Tape::compile(rho, params);
    rho_tilde_ = Tape::compile(rho_tilde, params);
}

DkResult DkPlan::assemble(const CVector& zprime, const CMatrix& values, Eigen::Index column) const {
    const int n = m_ - 1;
    DkResult r;
    r.order = k_;
    r.zprime = zprime;
    r.tan_block = CMatrix::Zero(n, n);
    r.row_vectors.assign(k_ - 1, CVector::Zero(n));
    r.col_vectors.assign(k_ - 1, CVector::Zero(n));
    r.scalar_block = CMatrix::Zero(k_ - 1, k_ - 1);
    for (std::size_t e = 0; e < entries_.size(); ++e) {
        const Entry& en = entries_[e];
        const cplx v = values(static_cast<Eigen::Index>(e), column);
        switch (en.block) {
            case 0: r.tan_block(en.a, en.b) = v; break;
            case 1: r.row_vectors[en.a][en.b] = v; break;
            case 2: r.col_vectors[en.a][en.b] = v; break;
            default: r.scalar_block(en.a, en.b) = v; break;
        }
    }
    return r;
}

std::vector<DkResult> DkPlan::at(const std::vector<CVector>& zprimes, bool parallel) const {
    std::vector<EvalPoint> pts;
    for (std::size_t s = 0; s < zprimes.size(); ++s) {
        if (zprimes[s].size() != m_ - 1)
            throw DomainError("sample " + std::to_string(s) + " has the wrong tangential dimension");
        pts.push_back(EvalPoint::diagonal(with_normal(zprimes[s])));
        try {
            check_positive(rho_, pts.back(), "rho");
            check_positive(rho_tilde_, pts.back(), "rho~");
        } catch (const EvalError& e) {
            throw EvalError("sample " + std::to_string(s) + ": " + e.what());
        }
    }
    CMatrix values = CMatrix::Zero(static_cast<Eigen::Index>(tapes_.size()), static_cast<Eigen::Index>(pts.size()));
    if (!tapes_.empty()) values = parallel ? evaluate_tapes(tapes_, pts) : evaluate_tapes_serial(tapes_, pts);
    std::vector<DkResult> out;
    for (std::size_t s = 0; s < pts.size(); ++s) out.push_back(assemble(zprimes[s], values, static_cast<Eigen::Index>(s)));
    return out;
}

DkResult DkPlan::at(const CVector& zprime) const { return at(std::vector<CVector>{zprime}, false).front(); }

DkResult dk_apply(const KernelExpr& rho, const KernelExpr& rho_tilde, int k, const CVector& zprime,
                  const ParameterBinding& params) {
    return DkPlan(rho, rho_tilde, static_cast<int>(zprime.size()) + 1, k, params).at(zprime);
}

EquivalenceReport order_k_equivalent(const KernelExpr& a, const KernelExpr& b, int k, const std::vector<CVector>& samples,
                                     double tol, const ParameterBinding& params, bool parallel) {
    if (samples.empty()) throw DomainError("order_k_equivalent needs at least one sample point");
    if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
    const DkPlan plan(a, b, static_cast<int>(samples.front().size()) + 1, k, params);
    EquivalenceReport rep;
    rep.order = k;
    rep.tol = tol;
    rep.samples = samples;
    for (const auto& r : plan.at(samples, parallel)) {
        rep.per_sample.push_back(r.residuals());
        rep.residuals.absorb(rep.per_sample.back());
    }
    rep.max_residual = rep.residuals.max();
    rep.equivalent = rep.max_residual <= tol;
    return rep;
}

CurvatureSplit rank2_invariants(const KernelExpr& kernel, const CVector& zprime, const ParameterBinding& params) {
    if (zprime.size() < 1) throw DomainError("rank2_invariants: no tangential directions in dimension 1");
    return curvature_split(curvature_matrix(kernel, with_normal(zprime), params));
}

bool invariants_agree(const KernelExpr& a, const KernelExpr& b, const std::vector<CVector>& samples, double tol,
                      const ParameterBinding& params) {
    for (const auto& s : samples) {
        const CurvatureSplit x = rank2_invariants(a, s, params);
        const CurvatureSplit y = rank2_invariants(b, s, params);
        if (maxabs(CMatrix(x.tan - y.tan)) > tol || std::abs(x.trans - y.trans) > tol ||
            maxabs(CVector(x.angle - y.angle)) > tol)
            return false;
    }
    return true;
}

// ---------------------------------------------------------------------------

CMatrix toeplitz_from_generators(const std::vector<cplx>& psi, int k) {
    if (k < 1) throw DomainError("order k must be >= 1");
    CMatrix out = CMatrix::Zero(k, k);
    for (int l = 0; l < k; ++l)
        for (int j = 0; j <= l; ++j)
            if (static_cast<std::size_t>(l - j) < psi.size()) out(l, j) = psi[l - j];
    return out;
}

std::vector<cplx> taylor_generators(const KernelExpr& psi, int k, const CVector& zprime, const ParameterBinding& params) {
    if (contains_slot(psi, Slot::Wb)) throw DomainError("generators must be holomorphic");
    const int m = static_cast<int>(zprime.size()) + 1;
    DerivativeTable t(psi, m, std::max(kDefaultOrderCap, k));
    const EvalPoint p = EvalPoint::diagonal(with_normal(zprime));
    std::vector<cplx> out;
    for (int n = 0; n < k; ++n) out.push_back(t.eval(DerivativeIndex::mixed(m, 1, n, 1, 0), p, params) / factorial(n));
    return out;
}

std::vector<cplx> evaluate_generators(const std::vector<KernelExpr>& psi, const CVector& zprime,
                                      const ParameterBinding& params) {
    const EvalPoint p = EvalPoint::diagonal(with_normal(zprime));
    std::vector<cplx> out;
    for (const auto& e : psi) {
        if (contains_slot(e, Slot::Wb)) throw DomainError("generators must be holomorphic");
        out.push_back(evaluate(e, p, params));
    }
    return out;
}

CMatrix taylor_jet(const KernelExpr& kernel, int k, const CVector& z, const ParameterBinding& params) {
    CMatrix j = jet_kernel(kernel, k, EvalPoint::diagonal(z), params).value;
    for (int l = 0; l < k; ++l)
        for (int c = 0; c < k; ++c) j(l, c) /= factorial(l) * factorial(c);
    return j;
}

double toeplitz_congruence_check(const KernelExpr& rho, const KernelExpr& rho_tilde, const std::vector<cplx>& psi, int k,
                                 const CVector& zprime, const ParameterBinding& params) {
    const CVector z = with_normal(zprime);
    const CMatrix P = toeplitz_from_generators(psi, k);
    return maxabs(CMatrix(taylor_jet(rho_tilde, k, z, params) - P * taylor_jet(rho, k, z, params) * P.adjoint()));
}

double toeplitz_congruence_check(const KernelExpr& rho, const KernelExpr& rho_tilde, const std::vector<KernelExpr>& psi,
                                 int k, const CVector& zprime, const ParameterBinding& params) {
    return toeplitz_congruence_check(rho, rho_tilde, evaluate_generators(psi, zprime, params), k, zprime, params);
}

CMatrix taylor_action(const KernelExpr& f, int k, const CVector& z, const ParameterBinding& params) {
    CMatrix t = toeplitz_jet_matrix(f, k, z, params);
    for (int l = 0; l < k; ++l)
        for (int j = 0; j <= l; ++j) t(l, j) *= factorial(j) / factorial(l);
    return t;
}

double intertwine_check(const std::vector<cplx>& psi, const KernelExpr& f, int k, const CVector& z,
                        const ParameterBinding& params) {
    return intertwine_check(toeplitz_from_generators(psi, k), f, z, params);
}

double intertwine_check(const CMatrix& psi, const KernelExpr& f, const CVector& z, const ParameterBinding& params) {
    if (psi.rows() != psi.cols()) throw DomainError("intertwine_check: Psi must be square");
    const CMatrix T = taylor_action(f, static_cast<int>(psi.rows()), z, params);
    return maxabs(CMatrix(psi * T - T * psi));
}

// ---------------------------------------------------------------------------

CMatrix Rank2Coeffs::matrix() const {
    CMatrix H(2, 2);
    H << h00, h01, h10, h11;
    return H;
}

Rank2Coeffs Rank2Coeffs::from_matrix(const CMatrix& H) {
    if (H.rows() != 2 || H.cols() != 2) throw DomainError("rank-2 coefficients need a 2x2 matrix");
    return {H(0, 0), H(1, 0), H(0, 1), H(1, 1)};
}

cplx Rank2Coeffs::k22() const {
    if (h00 == cplx(0.0)) throw EvalError("h00 vanishes");
    return (h11 * h00 - std::norm(h10)) / (h00 * h00);
}

Rank2Coeffs rank2_coeffs(const KernelExpr& rho, const CVector& zprime, const ParameterBinding& params) {
    return Rank2Coeffs::from_matrix(taylor_jet(rho, 2, with_normal(zprime), params));
}

Rank2Coeffs rank2_metric_relations(const Rank2Coeffs& h, cplx alpha, cplx beta) {
    const double a2 = std::norm(alpha);
    const cplx bb = std::conj(beta);
    return {a2 * h.h00, a2 * (h.h10 + beta * h.h00), a2 * (h.h01 + bb * h.h00),
            a2 * (h.h11 + bb * h.h10 + beta * h.h01 + std::norm(beta) * h.h00)};
}

Rank2Coeffs rank2_metric_relations(const std::array<KernelExpr, 4>& h, const KernelExpr& alpha, const KernelExpr& beta,
                                   const CVector& zprime, const ParameterBinding& params) {
    const EvalPoint p = EvalPoint::diagonal(with_normal(zprime));
    const Rank2Coeffs hv{evaluate(h[0], p, params), evaluate(h[1], p, params), evaluate(h[2], p, params),
                         evaluate(h[3], p, params)};
    if (!(hv.h00.real() > 0.0)) throw EvalError("h00 must be positive");
    const auto gens = evaluate_generators({alpha, beta}, zprime, params);
    return rank2_metric_relations(hv, gens[0], gens[1]);
}

Rank2Coeffs rank2_congruence(const Rank2Coeffs& h, cplx alpha, cplx beta) {
    CMatrix L(2, 2);
    L << alpha, 0.0, alpha * beta, alpha;
    return Rank2Coeffs::from_matrix(L * h.matrix() * L.adjoint());
}

}  // namespace jetq
