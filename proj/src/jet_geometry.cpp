#include "jetq/jet_geometry.hpp"

#include <cmath>

namespace jetq {

namespace {

int cap_for(int k) { return std::max(kDefaultOrderCap, 2 * (k - 1)); }

double real_positive(cplx v, const char* what) {
    if (!(v.real() > 0.0) || std::abs(v.imag()) > 1e-10 * std::abs(v)) throw EvalError(what);
    return v.real();
}

}  // namespace

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return std::round(r);
}

MatrixKernelValue jet_kernel(const KernelExpr& kernel, int k, const EvalPoint& at, const ParameterBinding& params) {
    if (k < 1) throw DomainError("jet order k must be >= 1");
    const int m = at.dimension();
    if (m < 1) throw DomainError("empty evaluation point");
    DerivativeTable t(kernel, m, cap_for(k));
    MatrixKernelValue out{CMatrix(k, k), k, at};
    for (int l = 0; l < k; ++l)
        for (int j = 0; j < k; ++j) out.value(l, j) = t.eval(DerivativeIndex::mixed(m, 1, l, 1, j), at, params);
    return out;
}

CMatrix toeplitz_from_derivatives(const std::vector<cplx>& derivs, int k) {
    if (k < 1) throw DomainError("jet order k must be >= 1");
    if (static_cast<int>(derivs.size()) < k) throw DomainError("need k derivatives for a k x k jet matrix");
    CMatrix out = CMatrix::Zero(k, k);
    for (int l = 0; l < k; ++l)
        for (int j = 0; j <= l; ++j) out(l, j) = binomial(l, j) * derivs[l - j];
    return out;
}

CMatrix toeplitz_jet_matrix(const KernelExpr& f, int k, const CVector& z, const ParameterBinding& params) {
    if (contains_slot(f, Slot::Wb)) throw DomainError("toeplitz_jet_matrix: f must be holomorphic (no wb variables)");
    if (k < 1) throw DomainError("jet order k must be >= 1");
    const int m = static_cast<int>(z.size());
    DerivativeTable t(f, m, cap_for(k));
    const EvalPoint p = EvalPoint::diagonal(z);
    std::vector<cplx> d;
    for (int n = 0; n < k; ++n) d.push_back(t.eval(DerivativeIndex::mixed(m, 1, n, 1, 0), p, params));
    return toeplitz_from_derivatives(d, k);
}

CMatrix curvature_matrix(const KernelExpr& kernel, const CVector& z, const ParameterBinding& params) {
    const int m = static_cast<int>(z.size());
    if (m < 1) throw DomainError("empty evaluation point");
    DerivativeTable t(kernel, m);
    const EvalPoint p = EvalPoint::diagonal(z);
    const double h = real_positive(t.eval(DerivativeIndex::zeros(m), p, params), "non-positive metric: K(z,z) <= 0");
    std::vector<cplx> dz(m), dwb(m);
    for (int i = 0; i < m; ++i) {
        dz[i] = t.eval(DerivativeIndex::mixed(m, i + 1, 1, 1, 0), p, params);
        dwb[i] = t.eval(DerivativeIndex::mixed(m, 1, 0, i + 1, 1), p, params);
    }
    CMatrix out(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const cplx dij = t.eval(DerivativeIndex::mixed(m, j + 1, 1, i + 1, 1), p, params);
            out(i, j) = (h * dij - dz[j] * dwb[i]) / (h * h);
        }
    return out;
}

CMatrix CurvatureSplit::reassemble() const {
    const auto n = tan.rows();
    CMatrix out(n + 1, n + 1);
    out(0, 0) = trans;
    out.block(0, 1, 1, n) = angle.transpose();
    out.block(1, 0, n, 1) = angle.conjugate();
    out.block(1, 1, n, n) = tan;
    return out;
}

CurvatureSplit curvature_split(const CMatrix& full) {
    if (full.rows() != full.cols() || full.rows() < 1) throw DomainError("curvature_split: need a square matrix");
    const auto n = full.rows() - 1;
    CurvatureSplit s;
    s.trans = full(0, 0).real();
    s.tan = full.block(1, 1, n, n);
    s.angle = full.block(0, 1, 1, n).transpose();
    return s;
}

namespace {

// Symbolic log h and its partials, shared by the second fundamental form and the connection.
struct LogJets {
    LogJets(const KernelExpr& kernel, const CVector& z, const ParameterBinding& params)
        : m(static_cast<int>(z.size())), p(EvalPoint::diagonal(z)), params(params), t(log(kernel), m) {
        if (m < 1) throw DomainError("empty evaluation point");
        diagonal_value(kernel, z, params);
        trans = t.eval(DerivativeIndex::mixed(m, 1, 1, 1, 1), p, params);
        if (!(trans.real() > 0.0) || std::abs(trans.imag()) > 1e-10 * std::abs(trans))
            throw EvalError("vanishing transverse curvature: d1 dbar1 log h <= 0");
        root = std::sqrt(trans.real());
    }

    cplx at(int zi, int zn, int wi, int wn) {
        DerivativeIndex idx = DerivativeIndex::zeros(m);
        if (zn) idx.add_z(zi, zn);
        if (wn) idx.add_wb(wi, wn);
        return t.eval(idx, p, params);
    }

    int m;
    EvalPoint p;
    const ParameterBinding& params;
    DerivativeTable t;
    cplx trans;
    double root = 0.0;
};

}  // namespace

CVector second_fundamental_form(const KernelExpr& kernel, const CVector& z, const ParameterBinding& params) {
    LogJets L(kernel, z, params);
    CVector out(L.m);
    for (int i = 1; i <= L.m; ++i) out[i - 1] = -L.at(1, 1, i, 1) / L.root;
    return out;
}

CVector second_fundamental_form_from_split(const CurvatureSplit& split) {
    if (!(split.trans > 0.0)) throw EvalError("vanishing transverse curvature: d1 dbar1 log h <= 0");
    const double root = std::sqrt(split.trans);
    CVector out(split.angle.size() + 1);
    out[0] = split.trans;
    out.tail(split.angle.size()) = split.angle.conjugate();
    return -out / root;
}

double ConnectionMatrix::compatibility_residual() const {
    double r = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            // (theta^*)_{ab} = conj(theta_{ba}); conjugation swaps dz and dzbar.
            const OneForm& x = theta[a][b];
            const OneForm& y = theta[b][a];
            r = std::max(r, (x.dz + y.dzbar.conjugate()).cwiseAbs().maxCoeff());
            r = std::max(r, (x.dzbar + y.dz.conjugate()).cwiseAbs().maxCoeff());
        }
    return r;
}

ConnectionMatrix connection_matrix(const KernelExpr& kernel, const CVector& z, const ParameterBinding& params) {
    LogJets L(kernel, z, params);
    const int m = L.m;
    // t = d1 dbar1 log h as a sesqui-holomorphic expression, for theta_22.
    const KernelExpr texpr = L.t.get(DerivativeIndex::mixed(m, 1, 1, 1, 1));
    DerivativeTable tt(texpr, m);
    const cplx tval = L.trans;

    ConnectionMatrix c;
    for (auto& row : c.theta)
        for (auto& f : row) f = {CVector::Zero(m), CVector::Zero(m)};
    for (int i = 1; i <= m; ++i) {
        const cplx dl = L.at(i, 1, 1, 0);
        const cplx dbl = L.at(1, 0, i, 1);
        c.theta[0][0].dz[i - 1] = 0.5 * dl;
        c.theta[0][0].dzbar[i - 1] = -0.5 * dbl;
        c.theta[0][1].dzbar[i - 1] = -L.at(1, 1, i, 1) / L.root;
        c.theta[1][0].dz[i - 1] = L.at(i, 1, 1, 1) / L.root;
        const cplx dt = tt.eval(DerivativeIndex::mixed(m, i, 1, 1, 0), L.p, params);
        const cplx dbt = tt.eval(DerivativeIndex::mixed(m, 1, 0, i, 1), L.p, params);
        c.theta[1][1].dz[i - 1] = 0.5 * (dl + dt / tval);
        c.theta[1][1].dzbar[i - 1] = -0.5 * (dbl + dbt / tval);
    }
    return c;
}

FrameChangeResult frame_change_check(const KernelExpr& g, const KernelExpr& s, int k, const EvalPoint& p,
                                     const ParameterBinding& params, double tol) {
    const int m = p.dimension();
    DerivativeTable gs(g * s, m, cap_for(k));
    DerivativeTable st(s, m, cap_for(k));
    CVector left(k), sj(k);
    for (int l = 0; l < k; ++l) {
        left[l] = gs.eval(DerivativeIndex::mixed(m, 1, l, 1, 0), p, params);
        sj[l] = st.eval(DerivativeIndex::mixed(m, 1, l, 1, 0), p, params);
    }
    const CVector right = toeplitz_jet_matrix(g, k, p.z, params) * sj;
    const double residual = (left - right).cwiseAbs().maxCoeff();
    return {residual <= tol * std::max(1.0, left.cwiseAbs().maxCoeff()), residual};
}

KernelExpr linear_change(const KernelExpr& e, const CMatrix& A, const CVector& shift) {
    const auto m = A.rows();
    if (A.cols() != m || shift.size() != m) throw DomainError("linear_change: dimension mismatch");
    std::vector<KernelExpr> zi, wi;
    for (Eigen::Index i = 0; i < m; ++i) {
        KernelExpr z = KernelExpr::constant(shift[i]);
        KernelExpr w = KernelExpr::constant(std::conj(shift[i]));
        for (Eigen::Index j = 0; j < m; ++j) {
            z = z + KernelExpr::constant(A(i, j)) * KernelExpr::z(static_cast<int>(j) + 1);
            w = w + KernelExpr::constant(std::conj(A(i, j))) * KernelExpr::wb(static_cast<int>(j) + 1);
        }
        zi.push_back(z);
        wi.push_back(w);
    }
    return substitute_variables(e, zi, wi);
}

KernelExpr to_u_coordinates(const KernelExpr& e) {
    CMatrix A(2, 2);
    A << 1.0, 1.0, -1.0, 1.0;
    return linear_change(e, A, CVector::Zero(2));
}

CMatrix u_order(const CMatrix& normal_first) {
    if (normal_first.rows() != 2 || normal_first.cols() != 2) throw DomainError("u_order expects a 2x2 matrix");
    CMatrix out(2, 2);
    out << normal_first(1, 1), normal_first(1, 0), normal_first(0, 1), normal_first(0, 0);
    return out;
}

}  // namespace jetq
