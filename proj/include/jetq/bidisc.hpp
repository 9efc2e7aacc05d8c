#pragma once

#include <functional>
#include <string>
#include <vector>

#include "jetq/jet_geometry.hpp"

namespace jetq {

// The quotient module of M^(lam,mu) (functions on the bi-disc modulo those vanishing to order 2
// on the diagonal z1 = z2), its orthonormal basis and the block weighted shifts.

struct ModuleParams {
    double lambda = 1.0;
    double mu = 1.0;

    /// Throws DomainError unless both weights are strictly positive.
    void validate() const;
    double sum() const { return lambda + mu; }
};

/// Coefficient of x^n in (1 - x)^(-lam): lam (lam+1) ... (lam+n-1) / n!; 0 for n < 0.
double binom_neg(double lam, int n);

/// (1 - z1 wb1)^(-lambda) (1 - z2 wb2)^(-mu)
KernelExpr bidisc_kernel(const ModuleParams& params);

struct GramData {
    int p = 0;
    double norm_g1_sq = 0.0;   // -a_p
    double inner_g1_g2 = 0.0;  // b_p
    double norm_g2_sq = 0.0;   // c_p
    double norm_f2_sq = 0.0;
};

GramData gram_data(const ModuleParams& params, int p);

/// Both sides of ||g1||^2 ||g2||^2 - <g1, g2>^2 = (lam mu / (lam+mu)) c_p(lam+mu) c_{p-1}(lam+mu+2).
struct GramIdentity {
    double lhs = 0.0;
    double rhs = 0.0;
    double relative_error() const;
};

GramIdentity gram_identity(const ModuleParams& params, int p);

/// Matrices of multiplication by z1 (m1) and z2 (m2) from degree p to degree p+1, in the
/// bases {e1_p, e2_p} -> {e1_{p+1}, e2_{p+1}}: column = source, row = target.
struct ShiftBlock {
    int p = 0;
    CMatrix m1;
    CMatrix m2;
};

ShiftBlock shift_blocks(const ModuleParams& params, int p);

/// "p,alpha_p,beta_p1,eta_p,beta_p2" followed by one row per degree 0..p_max.
std::string shift_table_csv(const ModuleParams& params, int p_max);

// ---------------------------------------------------------------------------
// Brute-force oracle in the monomial basis. Coefficient vectors index z1^(p-l) z2^l by l.

struct QuotientDegree {
    int p = 0;
    GramData gram;
    CVector g1, g2, f2;  // the paper's generators
    CVector e1, e2;      // orthonormalised; e2 = 0 at p = 0
};

struct BruteForceQuotient {
    ModuleParams params;
    int p_max = 0;
    std::vector<QuotientDegree> degrees;  // 0..p_max+1
    std::vector<ShiftBlock> blocks;       // 0..p_max
};

/// ||z1^(p-l) z2^l||^2 = 1 / (c_{p-l}(lam) c_l(mu)).
double monomial_norm_sq(const ModuleParams& params, int p, int l);

/// Single-threaded construction for one parameter pair. OverflowError once a Gram quantity
/// leaves double range.
BruteForceQuotient brute_force_quotient(const ModuleParams& params, int p_max);

/// Independent parameter cells in parallel; results in input order.
std::vector<BruteForceQuotient> brute_force_sweep(const std::vector<ModuleParams>& cells, int p_max);
std::vector<BruteForceQuotient> brute_force_sweep_serial(const std::vector<ModuleParams>& cells, int p_max);

// ---------------------------------------------------------------------------
// The restricted kernel K_Q on the diagonal

/// Closed form, 2x2 hermitian; DomainError for |z| >= 1.
CMatrix quotient_kernel_restricted(const ModuleParams& params, cplx z);

/// (l, j) = d2^l dbar2^j K^(lam,mu) at ((z, z), (z, z)), l, j < 2.
CMatrix quotient_kernel_from_jets(const ModuleParams& params, cplx z);

/// Images of e1_p and e2_p: each entry is (coefficient, power of z); power -1 means zero.
struct FrameImage {
    std::array<cplx, 2> e1_coeff{};
    std::array<int, 2> e1_power{};
    std::array<cplx, 2> e2_coeff{};
    std::array<int, 2> e2_power{};

    CVector e1_at(cplx z) const;
    CVector e2_at(cplx z) const;
};

FrameImage jet_frame_image(const ModuleParams& params, int p);

/// sum_{p <= p_max} e_p(z) e_p(z)^*. Terms are computed in parallel and summed in degree order.
CMatrix quotient_kernel_series(const ModuleParams& params, cplx z, int p_max);
CMatrix quotient_kernel_series_serial(const ModuleParams& params, cplx z, int p_max);

// ---------------------------------------------------------------------------

using CurvatureField = std::function<CMatrix(const CVector&)>;

/// D^* K(phi^-1 z) D with phi_i^-1(z) = (e^{-i th_i} z + a_i) / (1 + conj(a_i) e^{-i th_i} z) acting
/// coordinatewise and D = diag(d phi_i^-1 / dz).
CMatrix mobius_pullback_curvature(const CurvatureField& curvature, const CVector& a, const std::vector<double>& theta,
                                  const CVector& z);

struct TruncationCheck {
    double series_residual = 0.0;  // |sum_{a,b <= cap} - K(z, w)|
    double eigen_residual = 0.0;   // max_i || M_i^* K_w - conj(w_i) K_w || in the module norm
};

TruncationCheck truncated_kernel_check(const ModuleParams& params, int degree_cap, const CVector& z, const CVector& w);

/// Basis order of the truncated quotient: e1_0, e1_1, e2_1, e1_2, e2_2, ...
inline int quotient_index(int p, int which) { return p == 0 ? 0 : 2 * p - 2 + which; }
inline int quotient_size(int p_max) { return 2 * p_max + 1; }

/// Truncated multiplication operators M1, M2 on degrees 0..p_max (closed-form blocks).
CMatrix quotient_shift(const ModuleParams& params, int p_max, int which);

/// f0(U1) + f1(U1) U2 with U1 = (M1 + M2) / 2, U2 = (M1 - M2) / 2. f0 and f1 are
/// holomorphic expressions in z1, expanded in Taylor series at 0 to degree p_max.
CMatrix quotient_module_action(const KernelExpr& f0, const KernelExpr& f1, const ModuleParams& params, int p_max);

/// Largest singular value of each truncated shift; exploratory, not a paper claim.
std::array<double, 2> shift_norms(const ModuleParams& params, int p_max);

}  // namespace jetq
