#pragma once

#include <vector>

#include "jetq/jet_geometry.hpp"

namespace jetq {

struct BlockResiduals {
    double tan = 0.0;
    double row = 0.0;
    double col = 0.0;
    double scalar = 0.0;

    double max() const { return std::max({tan, row, col, scalar}); }
    void absorb(const BlockResiduals& other);
};

/// D_k applied to g = log(rho~ / rho) at (0, z').
struct DkResult {
    int order = 1;
    CVector zprime;
    CMatrix tan_block;                // (i, j) = dbar_{i+2} d_{j+2} g
    std::vector<CVector> row_vectors; // [j-1][i] = dbar_{i+2} d_1^j g,   j = 1..k-1
    std::vector<CVector> col_vectors; // [i-1][j] = dbar_1^i d_{j+2} g,   i = 1..k-1
    CMatrix scalar_block;             // (i-1, j-1) = dbar_1^i d_1^j g,   i, j = 1..k-1

    BlockResiduals residuals() const;
};

/// Symbolic D_k entries of log(rho~/rho), compiled once and evaluated at many samples.
class DkPlan {
public:
    DkPlan(const KernelExpr& rho, const KernelExpr& rho_tilde, int dimension, int k, const ParameterBinding& params);

    DkResult at(const CVector& zprime) const;
    /// All samples; OpenMP over (entry, sample) unless `parallel` is false.
    std::vector<DkResult> at(const std::vector<CVector>& zprimes, bool parallel = true) const;

    int order() const { return k_; }
    int dimension() const { return m_; }

private:
    struct Entry {
        int block;  // 0 tan, 1 row, 2 col, 3 scalar
        int a, b;
    };
    DkResult assemble(const CVector& zprime, const CMatrix& values, Eigen::Index column) const;

    int m_, k_;
    std::vector<Entry> entries_;
    std::vector<Tape> tapes_;
    Tape rho_, rho_tilde_;
};

DkResult dk_apply(const KernelExpr& rho, const KernelExpr& rho_tilde, int k, const CVector& zprime,
                  const ParameterBinding& params);

struct EquivalenceReport {
    bool equivalent = false;
    int order = 1;
    double tol = 0.0;
    std::vector<CVector> samples;
    std::vector<BlockResiduals> per_sample;
    BlockResiduals residuals;  // max over samples
    double max_residual = 0.0;
};

inline constexpr double kDefaultTol = 1e-8;

/// Theorem-1 test on tangential samples z' (each of dimension m-1).
EquivalenceReport order_k_equivalent(const KernelExpr& a, const KernelExpr& b, int k, const std::vector<CVector>& samples,
                                     double tol, const ParameterBinding& params, bool parallel = true);

/// {tan, trans, angle} of the curvature at (0, z').
CurvatureSplit rank2_invariants(const KernelExpr& kernel, const CVector& zprime, const ParameterBinding& params);

/// True iff tan, trans and angle of the two kernels agree to `tol` at every sample.
bool invariants_agree(const KernelExpr& a, const KernelExpr& b, const std::vector<CVector>& samples, double tol,
                      const ParameterBinding& params);

// ---------------------------------------------------------------------------
// Toeplitz machinery. Matrices here are Taylor-normalised: entry (l, j) of a jet is divided by
// l! j!, which turns the module action into a genuine lower-triangular Toeplitz matrix.

/// Lower-triangular Toeplitz matrix with psi[p] on sub-diagonal p (missing entries are 0).
CMatrix toeplitz_from_generators(const std::vector<cplx>& psi, int k);

/// psi_p = d1^p psi / p! at (0, z').
std::vector<cplx> taylor_generators(const KernelExpr& psi, int k, const CVector& zprime, const ParameterBinding& params);

/// Each generator expression evaluated at (0, z').
std::vector<cplx> evaluate_generators(const std::vector<KernelExpr>& psi, const CVector& zprime,
                                      const ParameterBinding& params);

/// Jet kernel at the diagonal pair, entry (l, j) divided by l! j!.
CMatrix taylor_jet(const KernelExpr& kernel, int k, const CVector& z, const ParameterBinding& params);

/// ||J rho~ - Psi (J rho) Psi^*||_max at (0, z').
double toeplitz_congruence_check(const KernelExpr& rho, const KernelExpr& rho_tilde, const std::vector<cplx>& psi, int k,
                                 const CVector& zprime, const ParameterBinding& params);
double toeplitz_congruence_check(const KernelExpr& rho, const KernelExpr& rho_tilde, const std::vector<KernelExpr>& psi,
                                 int k, const CVector& zprime, const ParameterBinding& params);

/// Module action of f in Taylor normalisation: D (Jf) D^-1, entries f^(l-j)(z)/(l-j)!.
CMatrix taylor_action(const KernelExpr& f, int k, const CVector& z, const ParameterBinding& params);

/// ||Psi T_f - T_f Psi||_max.
double intertwine_check(const std::vector<cplx>& psi, const KernelExpr& f, int k, const CVector& z,
                        const ParameterBinding& params);
double intertwine_check(const CMatrix& psi, const KernelExpr& f, const CVector& z, const ParameterBinding& params);

// ---------------------------------------------------------------------------
// Rank-2 metric relations

struct Rank2Coeffs {
    cplx h00, h10, h01, h11;

    /// [[h00, h01], [h10, h11]]
    CMatrix matrix() const;
    static Rank2Coeffs from_matrix(const CMatrix& H);
    /// (h11 h00 - |h10|^2) / h00^2
    cplx k22() const;
};

/// h_ij = d1^i dbar1^j rho / (i! j!) at (0, z').
Rank2Coeffs rank2_coeffs(const KernelExpr& rho, const CVector& zprime, const ParameterBinding& params);

/// Closed-form transformation under the frame change (alpha, beta).
Rank2Coeffs rank2_metric_relations(const Rank2Coeffs& h, cplx alpha, cplx beta);
Rank2Coeffs rank2_metric_relations(const std::array<KernelExpr, 4>& h, const KernelExpr& alpha, const KernelExpr& beta,
                                   const CVector& zprime, const ParameterBinding& params);

/// The same transformation as the congruence [[a,0],[a b, a]] H [[a,0],[a b, a]]^*.
Rank2Coeffs rank2_congruence(const Rank2Coeffs& h, cplx alpha, cplx beta);

}  // namespace jetq
