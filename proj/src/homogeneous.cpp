#include "jetq/homogeneous.hpp"

#include <cmath>

namespace jetq {

void HomogBundleParams::validate() const {
    if (!std::isfinite(alpha) || !std::isfinite(delta) || !std::isfinite(beta))
        throw DomainError("homogeneous bundle parameters must be finite");
    if (!(alpha > 0.0)) throw DomainError("homogeneous bundle needs alpha > 0");
    if (!(delta > 0.0)) throw DomainError("homogeneous bundle needs delta > 0");
    if (!(alpha * delta - beta * beta > 0.0))
        throw DomainError("homogeneous bundle needs alpha*delta - beta^2 > 0 (got " +
                          std::to_string(alpha * delta - beta * beta) + ")");
}

KernelExpr homog_bundle_metric(const HomogBundleParams& params) {
    params.validate();
    const KernelExpr one = KernelExpr::constant(1.0);
    const KernelExpr z1 = KernelExpr::z(1), z2 = KernelExpr::z(2), w1 = KernelExpr::wb(1), w2 = KernelExpr::wb(2);
    const KernelExpr cross = pow((one - z1 * w2) * (one - z2 * w1), Exponent(-params.beta));
    return cross * pow(one - z1 * w1, Exponent(-params.alpha)) * pow(one - z2 * w2, Exponent(-params.delta));
}

CMatrix homog_curvature_restriction(const HomogBundleParams& params, cplx u1) {
    params.validate();
    const double r = std::norm(u1);
    if (!(r < 1.0)) throw DomainError("u1 must lie in the open disc");
    const double f = 1.0 / ((1.0 - r) * (1.0 - r));
    CMatrix K(2, 2);
    K << params.a() * f, params.b() * f, params.b() * f, params.c() * f;
    return K;
}

CMatrix diagonal_curvature_u(const KernelExpr& metric, cplx u1, const ParameterBinding& params) {
    CVector at(2);
    at << 0.0, u1;  // (u2, u1)
    return u_order(curvature_matrix(to_u_coordinates(metric), at, params));
}

HomogMetricCoeffs solve_homog_metric_coeffs(double a, double b, double c, cplx u1) {
    const double r = std::norm(u1);
    if (!(r < 1.0)) throw DomainError("u1 must lie in the open disc");
    const double q = 1.0 - r;
    HomogMetricCoeffs h;
    h.a00 = std::pow(q, -a);
    h.a10 = b * std::conj(u1) * std::pow(q, -a - 1);
    h.a11 = h.a00 / (q * q) * (c + b * b * r);
    return h;
}

HomogMetricExprs homog_metric_exprs(double a, double b, double c) {
    const KernelExpr x = KernelExpr::z(1) * KernelExpr::wb(1);
    const KernelExpr q = KernelExpr::constant(1.0) - x;
    HomogMetricExprs e;
    e.a00 = pow(q, Exponent(-a));
    e.a10 = KernelExpr::constant(b) * KernelExpr::wb(1) * pow(q, Exponent(-a - 1));
    e.a11 = e.a00 * pow(q, Exponent(-2.0)) * (KernelExpr::constant(c) + KernelExpr::constant(b * b) * x);
    return e;
}

HomogRelations homog_relations(double a, double b, double c, cplx u1) {
    const double r = std::norm(u1);
    if (!(r < 1.0)) throw DomainError("u1 must lie in the open disc");
    const HomogMetricExprs e = homog_metric_exprs(a, b, c);
    CVector z(1);
    z << u1;
    const EvalPoint p = EvalPoint::diagonal(z);
    const auto dbar = DerivativeIndex::mixed(1, 1, 0, 1, 1);

    HomogRelations out;
    out.k11 = mixed_log_derivative(e.a00, 1, 1, z, {}).real();
    DerivativeTable t00(e.a00, 1), t10(e.a10, 1);
    const cplx a00 = t00.eval(DerivativeIndex::zeros(1), p, {});
    const cplx a10 = t10.eval(DerivativeIndex::zeros(1), p, {});
    out.k12 = (a00 * t10.eval(dbar, p, {}) - a10 * t00.eval(dbar, p, {})) / (a00 * a00);
    const cplx a11 = evaluate(e.a11, p, {});
    out.k22 = ((a11 * a00 - std::norm(a10)) / (a00 * a00)).real();

    const double f = 1.0 / ((1.0 - r) * (1.0 - r));
    out.residual = std::max({std::abs(out.k11 - a * f), std::abs(out.k12 - b * f), std::abs(out.k22 - c * f)});
    return out;
}

}  // namespace jetq
