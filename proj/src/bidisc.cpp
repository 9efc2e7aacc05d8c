#include "jetq/bidisc.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <sstream>

namespace jetq {

namespace {

double finite(double v, const char* what) {
    if (!std::isfinite(v)) throw OverflowError(std::string(what) + " exceeds double range");
    return v;
}

double inner(const CVector& f, const CVector& g, const std::vector<double>& w) {
    double s = 0.0;
    for (Eigen::Index l = 0; l < f.size(); ++l) s += (f[l] * std::conj(g[l])).real() * w[l];
    return s;
}

cplx inner_c(const CVector& f, const CVector& g, const std::vector<double>& w) {
    cplx s = 0.0;
    for (Eigen::Index l = 0; l < f.size(); ++l) s += f[l] * std::conj(g[l]) * w[l];
    return s;
}

std::vector<double> weights(const ModuleParams& params, int p) {
    std::vector<double> w(p + 1);
    for (int l = 0; l <= p; ++l) w[l] = monomial_norm_sq(params, p, l);
    return w;
}

// Multiplication by z1 keeps l, by z2 shifts it.
CVector times_z(const CVector& f, int which) {
    CVector out = CVector::Zero(f.size() + 1);
    if (which == 1)
        out.head(f.size()) = f;
    else
        out.tail(f.size()) = f;
    return out;
}

QuotientDegree build_degree(const ModuleParams& params, int p) {
    QuotientDegree d;
    d.p = p;
    const std::vector<double> w = weights(params, p);
    d.g1 = CVector(p + 1);
    d.g2 = CVector(p + 1);
    for (int l = 0; l <= p; ++l) {
        // 1 / ||z1^(p-l) z2^l||^2 = c_{p-l}(lam) c_l(mu)
        const double c = binom_neg(params.lambda, p - l) * binom_neg(params.mu, l);
        d.g1[l] = c;
        d.g2[l] = l * c;
    }
    const double A = finite(inner(d.g1, d.g1, w), "gram norm");
    const double B = finite(inner(d.g1, d.g2, w), "gram inner product");
    const double C = finite(inner(d.g2, d.g2, w), "gram norm");
    // f2 = b_p g1 + a_p g2 with a_p = -||g1||^2: vanishes on the diagonal.
    d.f2 = B * d.g1 - A * d.g2;
    const double F = finite(inner(d.f2, d.f2, w), "gram norm");
    d.gram = {p, A, B, C, F};
    d.e1 = d.g1 / std::sqrt(A);
    d.e2 = F > 0.0 ? CVector(d.f2 / std::sqrt(F)) : CVector(CVector::Zero(p + 1));
    return d;
}

ShiftBlock compress(const ModuleParams& params, const QuotientDegree& from, const QuotientDegree& to) {
    const std::vector<double> w = weights(params, to.p);
    ShiftBlock b{from.p, CMatrix(2, 2), CMatrix(2, 2)};
    const CVector* src[2] = {&from.e1, &from.e2};
    const CVector* dst[2] = {&to.e1, &to.e2};
    for (int which = 1; which <= 2; ++which) {
        CMatrix& m = which == 1 ? b.m1 : b.m2;
        for (int j = 0; j < 2; ++j) {
            const CVector moved = times_z(*src[j], which);
            for (int i = 0; i < 2; ++i) m(i, j) = inner_c(moved, *dst[i], w);
        }
    }
    return b;
}

}  // namespace

void ModuleParams::validate() const {
    if (!(lambda > 0.0) || !(mu > 0.0) || !std::isfinite(lambda) || !std::isfinite(mu))
        throw DomainError("module weights must satisfy lambda > 0 and mu > 0");
}

double binom_neg(double lam, int n) {
    if (n < 0) return 0.0;
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= (lam + i) / (i + 1);
    return finite(r, "binomial coefficient");
}

KernelExpr bidisc_kernel(const ModuleParams& params) {
    params.validate();
    const KernelExpr one = KernelExpr::constant(1.0);
    return pow(one - KernelExpr::z(1) * KernelExpr::wb(1), Exponent(-params.lambda)) *
           pow(one - KernelExpr::z(2) * KernelExpr::wb(2), Exponent(-params.mu));
}

GramData gram_data(const ModuleParams& params, int p) {
    params.validate();
    if (p < 0) throw DomainError("degree p must be >= 0");
    const double s = params.sum(), mu = params.mu;
    GramData g;
    g.p = p;
    g.norm_g1_sq = binom_neg(s, p);
    g.inner_g1_g2 = mu * binom_neg(s + 1, p - 1);
    g.norm_g2_sq = mu * (binom_neg(s + 2, p - 1) + mu * binom_neg(s + 2, p - 2));
    const double det = g.norm_g1_sq * g.norm_g2_sq - g.inner_g1_g2 * g.inner_g1_g2;
    g.norm_f2_sq = finite(g.norm_g1_sq * det, "gram norm");
    return g;
}

double GramIdentity::relative_error() const {
    const double scale = std::max(std::abs(lhs), std::abs(rhs));
    return scale == 0.0 ? 0.0 : std::abs(lhs - rhs) / scale;
}

GramIdentity gram_identity(const ModuleParams& params, int p) {
    const GramData g = gram_data(params, p);
    const double s = params.sum();
    GramIdentity out;
    out.lhs = g.norm_g1_sq * g.norm_g2_sq - g.inner_g1_g2 * g.inner_g1_g2;
    out.rhs = params.lambda * params.mu / s * binom_neg(s, p) * binom_neg(s + 2, p - 1);
    return out;
}

ShiftBlock shift_blocks(const ModuleParams& params, int p) {
    params.validate();
    if (p < 0) throw DomainError("degree p must be >= 0");
    const double s = params.sum(), lam = params.lambda, mu = params.mu;
    const double alpha = std::sqrt(binom_neg(s, p) / binom_neg(s, p + 1));
    const double common = std::sqrt(s + 1) / std::sqrt((s + p) * (s + p + 1));
    // p = 0 has no e2 source, so eta vanishes there (c_{-1} = 0).
    const double eta = std::sqrt(binom_neg(s + 2, p - 1) / binom_neg(s + 2, p));
    ShiftBlock b{p, CMatrix::Zero(2, 2), CMatrix::Zero(2, 2)};
    b.m1(0, 0) = b.m2(0, 0) = alpha;
    b.m1(1, 1) = b.m2(1, 1) = eta;
    b.m1(1, 0) = std::sqrt(mu / lam) * common;
    b.m2(1, 0) = -std::sqrt(lam / mu) * common;
    return b;
}

std::string shift_table_csv(const ModuleParams& params, int p_max) {
    std::ostringstream out;
    out << "p,alpha_p,beta_p1,eta_p,beta_p2\n";
    char buf[160];
    for (int p = 0; p <= p_max; ++p) {
        const ShiftBlock b = shift_blocks(params, p);
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", p, b.m1(0, 0).real(), b.m1(1, 0).real(),
                      b.m1(1, 1).real(), b.m2(1, 0).real());
        out << buf;
    }
    return out.str();
}

double monomial_norm_sq(const ModuleParams& params, int p, int l) {
    return finite(1.0 / (binom_neg(params.lambda, p - l) * binom_neg(params.mu, l)), "monomial norm");
}

BruteForceQuotient brute_force_quotient(const ModuleParams& params, int p_max) {
    params.validate();
    if (p_max < 0) throw DomainError("p_max must be >= 0");
    BruteForceQuotient q{params, p_max, {}, {}};
    for (int p = 0; p <= p_max + 1; ++p) q.degrees.push_back(build_degree(params, p));
    for (int p = 0; p <= p_max; ++p) q.blocks.push_back(compress(params, q.degrees[p], q.degrees[p + 1]));
    return q;
}

std::vector<BruteForceQuotient> brute_force_sweep(const std::vector<ModuleParams>& cells, int p_max) {
    const int n = static_cast<int>(cells.size());
    std::vector<BruteForceQuotient> out(n);
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        try {
            out[i] = brute_force_quotient(cells[i], p_max);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

std::vector<BruteForceQuotient> brute_force_sweep_serial(const std::vector<ModuleParams>& cells, int p_max) {
    std::vector<BruteForceQuotient> out;
    for (const auto& c : cells) out.push_back(brute_force_quotient(c, p_max));
    return out;
}

CMatrix quotient_kernel_restricted(const ModuleParams& params, cplx z) {
    params.validate();
    const double r = std::norm(z);
    if (!(r < 1.0)) throw DomainError("quotient kernel needs |z| < 1");
    const double s = params.sum(), lam = params.lambda, mu = params.mu;
    const double q = 1.0 - r;
    CMatrix K(2, 2);
    K(0, 0) = std::pow(q, -s);
    K(0, 1) = mu * z * std::pow(q, -(s + 1));
    K(1, 0) = mu * std::conj(z) * std::pow(q, -(s + 1));
    // mu^2/s d/dr (r q^-(s+1)) + mu lam / s q^-(s+2)
    const double d = std::pow(q, -(s + 1)) + (s + 1) * r * std::pow(q, -(s + 2));
    K(1, 1) = mu * mu / s * d + mu * lam / s * std::pow(q, -(s + 2));
    return K;
}

CMatrix quotient_kernel_from_jets(const ModuleParams& params, cplx z) {
    if (!(std::norm(z) < 1.0)) throw DomainError("quotient kernel needs |z| < 1");
    DerivativeTable t(bidisc_kernel(params), 2);
    CVector zz(2);
    zz << z, z;
    const EvalPoint p = EvalPoint::diagonal(zz);
    CMatrix K(2, 2);
    for (int l = 0; l < 2; ++l)
        for (int j = 0; j < 2; ++j) K(l, j) = t.eval(DerivativeIndex::mixed(2, 2, l, 2, j), p, {});
    return K;
}

CVector FrameImage::e1_at(cplx z) const {
    CVector v(2);
    for (int i = 0; i < 2; ++i) v[i] = e1_power[i] < 0 ? cplx(0.0) : e1_coeff[i] * std::pow(z, e1_power[i]);
    return v;
}

CVector FrameImage::e2_at(cplx z) const {
    CVector v(2);
    for (int i = 0; i < 2; ++i) v[i] = e2_power[i] < 0 ? cplx(0.0) : e2_coeff[i] * std::pow(z, e2_power[i]);
    return v;
}

FrameImage jet_frame_image(const ModuleParams& params, int p) {
    params.validate();
    if (p < 0) throw DomainError("degree p must be >= 0");
    const double s = params.sum(), lam = params.lambda, mu = params.mu;
    FrameImage f;
    f.e1_coeff = {std::sqrt(binom_neg(s, p)), mu * std::sqrt(p / s) * std::sqrt(binom_neg(s + 1, p - 1))};
    f.e1_power = {p, p - 1};
    f.e2_coeff = {0.0, std::sqrt(lam * mu / s) * std::sqrt(binom_neg(s + 2, p - 1))};
    f.e2_power = {-1, p - 1};
    return f;
}

namespace {

CMatrix series_term(const ModuleParams& params, cplx z, int p) {
    const FrameImage f = jet_frame_image(params, p);
    const CVector a = f.e1_at(z), b = f.e2_at(z);
    return a * a.adjoint() + b * b.adjoint();
}

}  // namespace

CMatrix quotient_kernel_series(const ModuleParams& params, cplx z, int p_max) {
    params.validate();
    std::vector<CMatrix> terms(p_max + 1);
#pragma omp parallel for schedule(static)
    for (int p = 0; p <= p_max; ++p) terms[p] = series_term(params, z, p);
    CMatrix sum = CMatrix::Zero(2, 2);
    for (const auto& t : terms) sum += t;
    return sum;
}

CMatrix quotient_kernel_series_serial(const ModuleParams& params, cplx z, int p_max) {
    params.validate();
    CMatrix sum = CMatrix::Zero(2, 2);
    for (int p = 0; p <= p_max; ++p) sum += series_term(params, z, p);
    return sum;
}

CMatrix mobius_pullback_curvature(const CurvatureField& curvature, const CVector& a, const std::vector<double>& theta,
                                  const CVector& z) {
    const auto m = z.size();
    if (a.size() != m || static_cast<Eigen::Index>(theta.size()) != m)
        throw DomainError("mobius_pullback_curvature: dimension mismatch");
    CVector pre(m), d(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (!(std::abs(a[i]) < 1.0)) throw DomainError("Mobius parameter must lie in the open disc");
        const cplx rot = std::polar(1.0, -theta[i]) * z[i];
        const cplx den = 1.0 + std::conj(a[i]) * rot;
        pre[i] = (rot + a[i]) / den;
        d[i] = std::polar(1.0, -theta[i]) * (1.0 - std::norm(a[i])) / (den * den);
    }
    const CMatrix K = curvature(pre);
    return d.conjugate().asDiagonal() * K * d.asDiagonal();
}

TruncationCheck truncated_kernel_check(const ModuleParams& params, int degree_cap, const CVector& z, const CVector& w) {
    params.validate();
    if (z.size() != 2 || w.size() != 2) throw DomainError("truncated_kernel_check works on the bi-disc");
    if (degree_cap < 0) throw DomainError("degree cap must be >= 0");
    const int n = degree_cap + 1;
    std::vector<double> ca(n + 1), cb(n + 1);
    for (int i = 0; i <= n; ++i) {
        ca[i] = binom_neg(params.lambda, i);
        cb[i] = binom_neg(params.mu, i);
    }
    const cplx x1 = z[0] * std::conj(w[0]), x2 = z[1] * std::conj(w[1]);
    // Horner in x2, then x1, with a = b = 0 last so the constant term is exact.
    cplx s1 = 0.0, s2 = 0.0;
    for (int a = degree_cap; a >= 0; --a) s1 = s1 * x1 + ca[a];
    for (int b = degree_cap; b >= 0; --b) s2 = s2 * x2 + cb[b];
    const cplx closed = evaluate(bidisc_kernel(params), EvalPoint(z, w), {});
    TruncationCheck out;
    out.series_residual = std::abs(s1 * s2 - closed);

    // K_w has coefficients f_ab = c_a c_b conj(w1)^a conj(w2)^b; (M1^* f)_ab = f_{a+1,b} ||e_{a+1,b}||^2 / ||e_ab||^2.
    const cplx wb1 = std::conj(w[0]), wb2 = std::conj(w[1]);
    auto coeff = [&](int a, int b) -> cplx {
        if (a > degree_cap || b > degree_cap) return 0.0;
        return ca[a] * cb[b] * std::pow(wb1, a) * std::pow(wb2, b);
    };
    auto norm_sq = [&](int a, int b) { return 1.0 / (ca[a] * cb[b]); };
    double r1 = 0.0, r2 = 0.0;
    for (int a = 0; a <= degree_cap; ++a)
        for (int b = 0; b <= degree_cap; ++b) {
            const cplx f = coeff(a, b);
            const cplx adj1 = coeff(a + 1, b) * norm_sq(a + 1, b) / norm_sq(a, b);
            const cplx adj2 = coeff(a, b + 1) * norm_sq(a, b + 1) / norm_sq(a, b);
            r1 += std::norm(adj1 - wb1 * f) * norm_sq(a, b);
            r2 += std::norm(adj2 - wb2 * f) * norm_sq(a, b);
        }
    out.eigen_residual = std::sqrt(std::max(r1, r2));
    return out;
}

CMatrix quotient_shift(const ModuleParams& params, int p_max, int which) {
    if (which != 1 && which != 2) throw DomainError("shift index must be 1 or 2");
    const int n = quotient_size(p_max);
    CMatrix M = CMatrix::Zero(n, n);
    for (int p = 0; p < p_max; ++p) {
        const ShiftBlock b = shift_blocks(params, p);
        const CMatrix& m = which == 1 ? b.m1 : b.m2;
        for (int j = 0; j < 2; ++j) {
            if (p == 0 && j == 1) continue;
            for (int i = 0; i < 2; ++i) M(quotient_index(p + 1, i + 1), quotient_index(p, j + 1)) = m(i, j);
        }
    }
    return M;
}

namespace {

std::vector<cplx> taylor_coefficients(const KernelExpr& f, int degree) {
    if (contains_slot(f, Slot::Wb) || max_variable_index(f) > 1)
        throw DomainError("module action symbols must be holomorphic in one variable");
    DerivativeTable t(f, 1, std::max(kDefaultOrderCap, degree));
    const EvalPoint origin = EvalPoint::diagonal(CVector::Zero(1));
    std::vector<cplx> c(degree + 1);
    double fact = 1.0;
    for (int n = 0; n <= degree; ++n) {
        if (n > 0) fact *= n;
        c[n] = t.eval(DerivativeIndex::mixed(1, 1, n, 1, 0), origin, {}) / fact;
    }
    return c;
}

CMatrix horner(const std::vector<cplx>& c, const CMatrix& U) {
    CMatrix out = CMatrix::Zero(U.rows(), U.cols());
    const CMatrix I = CMatrix::Identity(U.rows(), U.cols());
    for (auto it = c.rbegin(); it != c.rend(); ++it) out = out * U + *it * I;
    return out;
}

}  // namespace

CMatrix quotient_module_action(const KernelExpr& f0, const KernelExpr& f1, const ModuleParams& params, int p_max) {
    params.validate();
    const CMatrix M1 = quotient_shift(params, p_max, 1), M2 = quotient_shift(params, p_max, 2);
    const CMatrix U1 = 0.5 * (M1 + M2), U2 = 0.5 * (M1 - M2);
    return horner(taylor_coefficients(f0, p_max), U1) + horner(taylor_coefficients(f1, p_max), U1) * U2;
}

std::array<double, 2> shift_norms(const ModuleParams& params, int p_max) {
    std::array<double, 2> out{};
    for (int which = 1; which <= 2; ++which) {
        Eigen::JacobiSVD<CMatrix> svd(quotient_shift(params, p_max, which));
        out[which - 1] = svd.singularValues()[0];
    }
    return out;
}

}  // namespace jetq
