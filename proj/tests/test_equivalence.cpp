#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "jetq/equivalence.hpp"
#include "jetq/grid.hpp"
#include "support.hpp"

#include <random>

using namespace jetq;

namespace {

CVector vec(std::initializer_list<cplx> xs) {
    CVector v(xs.size());
    int i = 0;
    for (cplx x : xs) v[i++] = x;
    return v;
}

KernelExpr unit_scaled(const KernelExpr& rho, const KernelExpr& psi) { return psi * conjugate_pattern(psi) * rho; }

KernelExpr u_bidisc(double lam, double mu) { return to_u_coordinates(testing::bidisc_kernel(lam, mu)); }

}  // namespace

TEST_CASE("dk_apply: identical metrics and holomorphic units give zero blocks") {
    const KernelExpr rho = testing::bidisc_kernel(1.5, 2.0);
    const CVector zp = vec({cplx(0.2, 0.1)});
    CHECK(dk_apply(rho, rho, 3, zp, {}).residuals().max() == 0.0);
    const KernelExpr scaled = unit_scaled(rho, parse_kernel("exp(z1)", 2));
    for (int k = 1; k <= 4; ++k) {
        const DkResult r = dk_apply(rho, scaled, k, zp, {});
        CHECK(r.residuals().max() <= 1e-12);
        CHECK(r.scalar_block.rows() == k - 1);
        CHECK(r.row_vectors.size() == static_cast<std::size_t>(k - 1));
    }
}

TEST_CASE("dk_apply: bi-disc pair with equal trace but different weights") {
    const double lam = 1.0, l1 = 0.5, m1 = 1.5, u1 = 0.3;
    const KernelExpr rho = u_bidisc(lam, lam), rt = u_bidisc(l1, m1);
    const DkResult r = dk_apply(rho, rt, 2, vec({u1}), {});
    CHECK(r.residuals().tan <= 1e-12);
    CHECK(r.residuals().scalar <= 1e-12);
    const double expected = (l1 - m1) / std::pow(1 - u1 * u1, 2);
    CHECK(std::abs(r.row_vectors[0][0] - expected) <= 1e-12);
    CHECK(std::abs(r.col_vectors[0][0] - expected) <= 1e-12);
    // finite-difference oracle on the log-ratio itself
    const KernelExpr g = log(rt / rho);
    DerivativeIndex idx = DerivativeIndex::zeros(2);
    idx.add_z(1).add_wb(2);
    const cplx fd = fd_mixed_derivative(g, idx, EvalPoint::diagonal(vec({0.0, u1})), {});
    CHECK(std::abs(fd - r.row_vectors[0][0]) <= 1e-6);
}

TEST_CASE("dk_apply: row/col vectors are conjugate for real log-ratios") {
    const KernelExpr rho = testing::ball_kernel(3, 2.0);
    const KernelExpr rt = testing::bidisc_kernel(1.0, 2.0) * testing::disc_factor(3, 1.5);
    const DkResult r = dk_apply(rho, rt, 3, vec({cplx(0.1, 0.2), cplx(-0.2, 0.1)}), {});
    for (int i = 0; i < 2; ++i) CHECK((r.col_vectors[i] - r.row_vectors[i].conjugate()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK_THROWS_AS(dk_apply(rho, parse_kernel("z1*wb1 - 1", 3), 2, vec({0.1, 0.1}), {}), EvalError);
}

TEST_CASE("order_k_equivalent: examples") {
    const auto samples = sample_grid(1, 5, 0.6, kDefaultSeed);
    const KernelExpr a = u_bidisc(1, 1);
    const auto same = order_k_equivalent(a, a, 2, samples, 1e-8, {});
    CHECK(same.equivalent);
    CHECK(same.max_residual == 0.0);
    const auto diff = order_k_equivalent(a, u_bidisc(0.5, 1.5), 2, samples, 1e-8, {});
    CHECK_FALSE(diff.equivalent);
    CHECK(diff.residuals.row >= 1.0 - 1e-12);
    CHECK(diff.residuals.tan <= 1e-12);
    const KernelExpr scaled = unit_scaled(a, parse_kernel("exp(z1 + z2^2)", 2));
    const auto unit = order_k_equivalent(a, scaled, 4, samples, 1e-8, {});
    CHECK(unit.equivalent);
    CHECK(unit.max_residual <= 1e-9);
    CHECK_THROWS_AS(order_k_equivalent(a, a, 2, {}, 1e-8, {}), DomainError);
}

TEST_CASE("order_k_equivalent: nesting, symmetry and serial reference") {
    const auto samples = sample_grid(1, 9, 0.6, kDefaultSeed);
    const KernelExpr a = testing::bidisc_kernel(1.0, 2.0);
    // differs only at order >= 3 in the normal direction
    const KernelExpr b = a * pow(KernelExpr::constant(1.0) - pow(KernelExpr::z(1) * KernelExpr::wb(1), Exponent(2.0)),
                                 Exponent(-1.0));
    for (int k = 1; k <= 4; ++k) {
        const auto ab = order_k_equivalent(a, b, k, samples, 1e-8, {});
        const auto ba = order_k_equivalent(b, a, k, samples, 1e-8, {});
        const auto serial = order_k_equivalent(a, b, k, samples, 1e-8, {}, false);
        CHECK(ab.equivalent == ba.equivalent);
        CHECK(ab.equivalent == (k <= 2));
        CHECK(ab.max_residual == serial.max_residual);
        if (ab.equivalent)
            for (int k2 = 1; k2 < k; ++k2) CHECK(order_k_equivalent(a, b, k2, samples, 1e-8, {}).equivalent);
    }
}

TEST_CASE("holomorphic unit invariance") {
    const auto samples = sample_grid(1, 9, 0.6, kDefaultSeed);
    testing::RandomSmooth gen(5, 2);
    const char* units[] = {"exp(z1 + z2^2)", "exp(0.3*z1*z2 - z2)", "2 + z1*z2 + z1", "exp(z1^2)*(3 - z2)"};
    for (const char* u : units) {
        const KernelExpr rho = testing::bidisc_kernel(gen.uni(0.5, 3), gen.uni(0.5, 3));
        const KernelExpr rt = unit_scaled(rho, parse_kernel(u, 2));
        for (int k = 1; k <= 4; ++k) {
            const auto rep = order_k_equivalent(rho, rt, k, samples, 1e-8, {});
            CHECK_MESSAGE(rep.max_residual <= 1e-9, u << " k=" << k);
        }
    }
}

TEST_CASE("rank2_invariants") {
    for (double r : {0.0, 0.3, 0.55}) {
        const auto s = rank2_invariants(u_bidisc(0.5, 2.0), vec({r}), {});
        const double f = 1.0 / std::pow(1 - r * r, 2);
        CHECK(std::abs(s.trans - 2.5 * f) <= 1e-10);
        CHECK(std::abs(s.tan(0, 0) - 2.5 * f) <= 1e-10);
        CHECK(std::abs(s.angle[0] - (-1.5) * f) <= 1e-10);
        CHECK(std::abs(rank2_invariants(u_bidisc(1.2, 1.2), vec({r}), {}).angle[0]) <= 1e-12);
    }
    CHECK_THROWS_AS(rank2_invariants(parse_kernel("(1 - z1*wb1)^(-2)", 1), CVector(0), {}), DomainError);
}

TEST_CASE("toeplitz congruence") {
    const KernelExpr rho = testing::bidisc_kernel(1.5, 2.0);
    const CVector zp = vec({cplx(0.3, -0.1)});
    CHECK(toeplitz_congruence_check(rho, rho, std::vector<cplx>{1.0, 0.0}, 2, zp, {}) == 0.0);
    const KernelExpr rt = unit_scaled(rho, parse_kernel("exp(z1)", 2));
    CHECK(toeplitz_congruence_check(rho, rt, std::vector<cplx>{1.0, 1.0, 0.5}, 2, zp, {}) <= 1e-10);
    CHECK(toeplitz_congruence_check(rho, rt, std::vector<cplx>{1.0, 1.1, 0.5}, 2, zp, {}) > 1e-3);
    // generators from expressions, and Taylor extraction, at higher order
    const KernelExpr psi = parse_kernel("exp(z1*z2 + z2)", 2);
    const KernelExpr rt2 = unit_scaled(rho, psi);
    const auto gens = taylor_generators(psi, 4, zp, {});
    CHECK(toeplitz_congruence_check(rho, rt2, gens, 4, zp, {}) <= 1e-10);
    const std::vector<KernelExpr> one{KernelExpr::constant(1.0)};
    CHECK(toeplitz_congruence_check(rho, rho, one, 3, zp, {}) == 0.0);
}

TEST_CASE("intertwining") {
    const CVector z = vec({0.2});
    CHECK(intertwine_check(std::vector<cplx>{1.0, 0.4, cplx(0.1, 0.3)}, KernelExpr::constant(2.5), 3, z, {}) == 0.0);
    const auto psi = taylor_generators(parse_kernel("exp(z1)", 1), 3, CVector(0), {});
    CHECK(intertwine_check(psi, parse_kernel("z1^2", 1), 3, z, {}) <= 1e-12);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    int nonzero = 0;
    for (int n = 0; n < 20; ++n) {
        CMatrix P = CMatrix::Zero(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j <= i; ++j) P(i, j) = cplx(nd(rng), nd(rng));
        if (intertwine_check(P, parse_kernel("z1", 1), z, {}) > 1e-6) ++nonzero;
    }
    CHECK(nonzero == 20);
}

TEST_CASE("rank-2 metric relations") {
    const Rank2Coeffs h{2.0, cplx(0.3, 0.1), cplx(0.3, -0.1), 1.5};
    const Rank2Coeffs id = rank2_metric_relations(h, 1.0, 0.0);
    CHECK(id.matrix() == h.matrix());
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    for (int n = 0; n < 50; ++n) {
        const cplx a(nd(rng), nd(rng)), b(nd(rng), nd(rng));
        const Rank2Coeffs t = rank2_metric_relations(h, a, b);
        CHECK(std::abs(t.k22() - h.k22()) <= 1e-10 * std::abs(h.k22()));
        CHECK((t.matrix() - rank2_congruence(h, a, b).matrix()).cwiseAbs().maxCoeff() <= 1e-12 * t.matrix().norm());
    }
    // expression form against the jets of an explicitly rescaled metric
    const KernelExpr rho = testing::ball_kernel(2, 1.5);
    const KernelExpr alpha = parse_kernel("2 + z2", 2), beta = parse_kernel("0.5 - z2", 2);
    const KernelExpr scale = alpha * exp(beta * KernelExpr::z(1));
    const KernelExpr rt = unit_scaled(rho, scale);
    const CVector zp = vec({cplx(0.2, 0.3)});
    const Rank2Coeffs H = rank2_coeffs(rho, zp, {});
    const Rank2Coeffs Ht = rank2_coeffs(rt, zp, {});
    const auto gens = evaluate_generators({alpha, beta}, zp, {});
    CHECK((rank2_metric_relations(H, gens[0], gens[1]).matrix() - Ht.matrix()).cwiseAbs().maxCoeff() <= 1e-10);
    const KernelExpr e = KernelExpr::constant(1.0);
    const Rank2Coeffs viaexpr = rank2_metric_relations(std::array<KernelExpr, 4>{e, KernelExpr::constant(0.5), KernelExpr::constant(0.5), KernelExpr::constant(3.0)}, alpha, beta, zp, {});
    CHECK(std::abs(viaexpr.h00 - std::norm(gens[0])) <= 1e-12);
}

TEST_CASE("order-2 equivalence agrees with the curvature invariants") {
    const auto samples = sample_grid(1, 9, 0.6, kDefaultSeed);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-0.5, 0.5);
    const KernelExpr z1 = KernelExpr::z(1), z2 = KernelExpr::z(2), w1 = KernelExpr::wb(1), w2 = KernelExpr::wb(2);
    const KernelExpr one = KernelExpr::constant(1.0);
    int agreeing = 0, equivalent = 0;
    for (int n = 0; n < 20; ++n) {
        const KernelExpr rho = testing::bidisc_kernel(1.0 + U(rng) + 0.5, 1.5 + U(rng));
        const cplx c(U(rng), U(rng)), b(U(rng), U(rng));
        KernelExpr rt;
        switch (n % 4) {
            case 0: {  // unit alpha(z2) conj(alpha(w2)) |exp(b z1)|^2
                const KernelExpr a = KernelExpr::constant(2.0) + KernelExpr::constant(c) * z2;
                rt = a * conjugate_pattern(a) * exp(KernelExpr::constant(b) * z1) *
                     exp(KernelExpr::constant(std::conj(b)) * w1) * rho;
                break;
            }
            case 1:  // transverse perturbation
                rt = rho * pow(one - KernelExpr::constant(std::abs(c)) * z1 * w1, Exponent(-1.0));
                break;
            case 2:  // angle perturbation
                rt = rho * (one - KernelExpr::constant(c) * z1 * w2) * (one - KernelExpr::constant(std::conj(c)) * z2 * w1);
                break;
            default:  // tangential perturbation
                rt = rho * pow(one - KernelExpr::constant(std::abs(c)) * z2 * w2, Exponent(-1.0));
        }
        const bool eq = order_k_equivalent(rho, rt, 2, samples, 1e-8, {}).equivalent;
        const bool inv = invariants_agree(rho, rt, samples, 1e-8, {});
        CHECK_MESSAGE(eq == inv, "pair " << n);
        agreeing += eq == inv;
        equivalent += eq;
    }
    CHECK(agreeing == 20);
    CHECK(equivalent == 5);
}
