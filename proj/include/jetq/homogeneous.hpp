#pragma once

#include "jetq/jet_geometry.hpp"

namespace jetq {

// The homogeneous rank-2 family E_{alpha,delta}^beta on the bi-disc (real beta).

struct HomogBundleParams {
    double alpha = 1.0;
    double delta = 1.0;
    double beta = 0.0;

    /// Throws DomainError naming the violated condition (alpha > 0, delta > 0,
    /// alpha*delta - beta^2 > 0).
    void validate() const;

    // Coefficients of the restricted curvature in u-coordinates.
    double a() const { return alpha + delta + 2 * beta; }
    double b() const { return alpha - delta; }
    double c() const { return alpha + delta - 2 * beta; }
};

/// ((1 - z1 wb2)(1 - z2 wb1))^(-beta) (1 - z1 wb1)^(-alpha) (1 - z2 wb2)^(-delta)
KernelExpr homog_bundle_metric(const HomogBundleParams& params);

/// (1 - |u1|^2)^-2 [[a, b], [b, c]] in (u1, u2) order.
CMatrix homog_curvature_restriction(const HomogBundleParams& params, cplx u1);

/// Curvature of any bi-disc metric along the diagonal z1 = z2 = u1, in (u1, u2) order,
/// computed symbolically after the change to u-coordinates.
CMatrix diagonal_curvature_u(const KernelExpr& metric, cplx u1, const ParameterBinding& params = {});

struct HomogMetricCoeffs {
    double a00 = 0.0;
    cplx a10;
    double a11 = 0.0;
};

/// a00 = (1-|u1|^2)^-a, a10 = b conj(u1) (1-|u1|^2)^(-a-1), a11 = a00 (1-|u1|^2)^-2 (c + b^2 |u1|^2).
HomogMetricCoeffs solve_homog_metric_coeffs(double a, double b, double c, cplx u1);

/// The same coefficients as sesqui-holomorphic expressions in (z1, wb1), with z1 = u1.
struct HomogMetricExprs {
    KernelExpr a00, a10, a11;
};
HomogMetricExprs homog_metric_exprs(double a, double b, double c);

/// Left-hand sides of the three curvature relations, from symbolic derivatives of the
/// coefficient expressions at u1, and their distance from a, b, c times (1-|u1|^2)^-2.
struct HomogRelations {
    double k11 = 0.0;  // d dbar log a00
    cplx k12;          // a00^-2 (a00 dbar a10 - a10 dbar a00)
    double k22 = 0.0;  // (a11 a00 - |a10|^2) / a00^2
    double residual = 0.0;
};
HomogRelations homog_relations(double a, double b, double c, cplx u1);

}  // namespace jetq
