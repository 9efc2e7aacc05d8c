#pragma once

#include <array>

#include "jetq/wirtinger.hpp"

namespace jetq {

// Jet kernels, curvature and the second fundamental form for the hypersurface {z1 = 0}.
// The normal direction is always z1; matrices are 0-based in the jet order.

struct MatrixKernelValue {
    CMatrix value;  // (l, j) = d^l/dz1^l d^j/dwb1^j K
    int order = 1;
    EvalPoint at;
};

MatrixKernelValue jet_kernel(const KernelExpr& kernel, int k, const EvalPoint& at, const ParameterBinding& params);

/// (l, j) = binom(l, j) * d^(l-j)/dz1^(l-j) f at z, lower triangular. f must not contain wb.
CMatrix toeplitz_jet_matrix(const KernelExpr& f, int k, const CVector& z, const ParameterBinding& params);

/// Same matrix assembled from the derivative sequence f, f', f'', ...
CMatrix toeplitz_from_derivatives(const std::vector<cplx>& derivs, int k);

double binomial(int n, int k);

/// Curvature coefficient matrix, entry (i, j) = d/dwb_i d/dz_j log K(z, z) (0-based i, j).
CMatrix curvature_matrix(const KernelExpr& kernel, const CVector& z, const ParameterBinding& params);

struct CurvatureSplit {
    CMatrix tan;   // rows/cols 2..m
    double trans;  // (1, 1)
    CVector angle; // (1, j), j = 2..m

    CMatrix reassemble() const;
};

CurvatureSplit curvature_split(const CMatrix& full);

/// Component i = -(d/dwb_i d/dz1 log h) / sqrt(d/dz1 d/dwb1 log h), from log K differentiated
/// symbolically.
CVector second_fundamental_form(const KernelExpr& kernel, const CVector& z, const ParameterBinding& params);

/// The same covector rebuilt from a curvature split: -trans^(-1/2) [trans, conj(angle)].
CVector second_fundamental_form_from_split(const CurvatureSplit& split);

/// dz / dzbar coefficients of a 1-form.
struct OneForm {
    CVector dz;
    CVector dzbar;
};

/// theta[a][b] in the frame {e1, e2} of the order-2 jet bundle.
struct ConnectionMatrix {
    std::array<std::array<OneForm, 2>, 2> theta;

    /// max |theta + theta^*| over all coefficients.
    double compatibility_residual() const;
};

ConnectionMatrix connection_matrix(const KernelExpr& kernel, const CVector& z, const ParameterBinding& params);

struct FrameChangeResult {
    bool ok;
    double residual;
};

/// Checks [d1^l (g s)]_l == toeplitz_jet_matrix(g) [d1^l s]_l at the pair p.
FrameChangeResult frame_change_check(const KernelExpr& g, const KernelExpr& s, int k, const EvalPoint& p,
                                     const ParameterBinding& params, double tol = 1e-12);

/// Substitutes z_old = A z_new + shift and wb_old = conj(A) wb_new + conj(shift).
KernelExpr linear_change(const KernelExpr& e, const CMatrix& A, const CVector& shift);

/// Rewrites a bi-disc expression in the diagonal coordinates u1 = (z1+z2)/2, u2 = (z1-z2)/2,
/// with the normal coordinate u2 placed first: new z1 = u2, new z2 = u1.
KernelExpr to_u_coordinates(const KernelExpr& e);

/// Reorders a 2x2 matrix computed in (u2, u1) order into (u1, u2) order.
CMatrix u_order(const CMatrix& normal_first);

}  // namespace jetq
