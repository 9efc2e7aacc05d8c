// Acceptance suite: one PASS/FAIL line per criterion, with the measured worst residual and
// wall time. Exit status is 0 only if every criterion passes within its time budget.

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "jetq/bidisc.hpp"
#include "jetq/equivalence.hpp"
#include "jetq/grid.hpp"
#include "jetq/homogeneous.hpp"
#include "support.hpp"

using namespace jetq;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (pass) detail << "first failure: " << what << "; ";
            pass = false;
        }
    }
};

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
    return m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
}

const double kGrid[] = {0.5, 1.0, 1.7, 2.0, 3.0};

std::vector<ModuleParams> parameter_grid() {
    std::vector<ModuleParams> cells;
    for (double l : kGrid)
        for (double m : kGrid) cells.push_back({l, m});
    return cells;
}

KernelExpr unit_scaled(const KernelExpr& rho, const KernelExpr& psi) { return psi * conjugate_pattern(psi) * rho; }

// 1. Gram identity, closed form and brute force.
void gram_identity_criterion(Verdict& v) {
    double worst_id = 0.0, worst_oracle = 0.0;
    auto rel = [](double x, double y) { return std::abs(x - y) / std::max(1.0, std::abs(y)); };
    for (const auto& q : brute_force_sweep(parameter_grid(), 25))
        for (int p = 0; p <= 25; ++p) {
            worst_id = std::max(worst_id, gram_identity(q.params, p).relative_error());
            const GramData a = q.degrees[p].gram, b = gram_data(q.params, p);
            worst_oracle = std::max({worst_oracle, rel(a.norm_g1_sq, b.norm_g1_sq), rel(a.inner_g1_g2, b.inner_g1_g2),
                                     rel(a.norm_g2_sq, b.norm_g2_sq), rel(a.norm_f2_sq, b.norm_f2_sq)});
        }
    v.require(worst_id <= 1e-10, "identity");
    v.require(worst_oracle <= 1e-10, "oracle");
    v.detail << "identity rel " << worst_id << ", oracle rel " << worst_oracle;
}

// 2. Shift blocks against the oracle, plus the hand-checkable anchors.
void shift_block_criterion(Verdict& v) {
    double worst = 0.0;
    for (const auto& q : brute_force_sweep(parameter_grid(), 10))
        for (int p = 0; p <= 10; ++p) {
            const ShiftBlock c = shift_blocks(q.params, p);
            worst = std::max({worst, max_abs(c.m1 - q.blocks[p].m1), max_abs(c.m2 - q.blocks[p].m2)});
        }
    v.require(worst <= 1e-8, "blocks");
    const BruteForceQuotient hardy = brute_force_quotient({1, 1}, 2);
    const double r2 = 1 / std::sqrt(2.0);
    const double anchors = std::max({std::abs(hardy.blocks[0].m1(0, 0) - r2), std::abs(hardy.blocks[0].m1(1, 0) - r2),
                                     std::abs(hardy.blocks[1].m1(1, 1) - 0.5)});
    v.require(anchors <= 1e-12, "anchors");
    v.detail << "max |closed - oracle| " << worst << ", anchors " << anchors;
}

// 3. K_Q: closed form, jets of the bi-disc kernel, frame series.
void kq_criterion(Verdict& v) {
    double jets = 0.0, series = 0.0;
    for (ModuleParams m : {ModuleParams{1, 1}, ModuleParams{1, 2}})
        for (const CVector& z : sample_grid(1, 9, 0.5, kDefaultSeed)) {
            const CMatrix closed = quotient_kernel_restricted(m, z[0]);
            jets = std::max(jets, max_abs(closed - quotient_kernel_from_jets(m, z[0])));
            series = std::max(series, max_abs(closed - quotient_kernel_series(m, z[0], 300)));
        }
    v.require(jets <= 1e-10, "jets");
    v.require(series <= 1e-6, "series");
    v.detail << "jets " << jets << ", series " << series;
}

// 4. Discrimination of the bi-disc pairs and invariance under holomorphic units.
void discrimination_criterion(Verdict& v) {
    const auto samples = sample_grid(1, 9, 0.6, kDefaultSeed);
    double margin = INFINITY;
    const std::array<std::array<double, 3>, 4> pairs{{{1.0, 0.5, 1.5}, {1.0, 1.5, 0.5}, {1.5, 1.0, 2.0}, {2.0, 1.2, 2.8}}};
    for (const auto& [lam, l1, m1] : pairs) {
        const KernelExpr a = to_u_coordinates(testing::bidisc_kernel(lam, lam));
        const KernelExpr b = to_u_coordinates(testing::bidisc_kernel(l1, m1));
        const EquivalenceReport r = order_k_equivalent(a, b, 2, samples, kDefaultTol, {});
        v.require(!r.equivalent, "pair reported equivalent");
        for (std::size_t n = 0; n < samples.size(); ++n) {
            if (samples[n][0].imag() != 0.0) continue;  // the real-axis radii
            const double rr = std::norm(samples[n][0]);
            const double bound = std::abs(l1 - m1) / ((1 - rr) * (1 - rr));
            const double angle = std::max(r.per_sample[n].row, r.per_sample[n].col);
            margin = std::min(margin, angle - (bound - 1e-6));
        }
    }
    v.require(margin >= 0.0, "angle residual below bound");
    const KernelExpr unit = parse_kernel("exp(z1 + z2^2)", 2);
    double worst = 0.0;
    for (const KernelExpr& rho : {to_u_coordinates(testing::bidisc_kernel(1, 1)),
                                  to_u_coordinates(testing::bidisc_kernel(0.7, 1.9)), testing::ball_kernel(2, 2.0)})
        for (int k = 1; k <= 4; ++k) {
            const EquivalenceReport r = order_k_equivalent(rho, unit_scaled(rho, unit), k, samples, kDefaultTol, {});
            v.require(r.equivalent, "unit-scaled pair not equivalent");
            worst = std::max(worst, r.max_residual);
        }
    v.require(worst <= 1e-9, "unit residual");
    v.detail << "angle margin " << margin << ", unit residual " << worst;
}

// 5. D_2 verdict against equality of {tan, trans, angle}.
void theorem2_criterion(Verdict& v) {
    const auto samples = sample_grid(1, 9, 0.6, kDefaultSeed);
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> U(-0.5, 0.5);
    auto c = [&] { return cplx(U(rng), U(rng)); };
    const KernelExpr one = KernelExpr::constant(1.0);
    const KernelExpr z1 = KernelExpr::z(1), z2 = KernelExpr::z(2), w1 = KernelExpr::wb(1), w2 = KernelExpr::wb(2);
    int agree = 0, equivalent = 0;
    double construction = 0.0;
    for (int n = 0; n < 20; ++n) {
        const KernelExpr rho = testing::bidisc_kernel(1.5 + U(rng), 1.5 + U(rng)) * testing::ball_kernel(2, 1 + U(rng));
        // random holomorphic alpha(z2) (non-vanishing) and beta(z2)
        const KernelExpr alpha = KernelExpr::constant(2.0 + c()) + KernelExpr::constant(c()) * z2;
        const KernelExpr beta = KernelExpr::constant(c()) + KernelExpr::constant(c()) * z2 * z2;
        const KernelExpr base = unit_scaled(rho, alpha * exp(beta * z1));
        for (const CVector& zp : samples) {
            const auto g = evaluate_generators({alpha, beta}, zp, {});
            const Rank2Coeffs expect = rank2_metric_relations(rank2_coeffs(rho, zp, {}), g[0], g[1]);
            const CMatrix got = rank2_coeffs(base, zp, {}).matrix();
            construction = std::max(construction, max_abs(got - expect.matrix()) / max_abs(got));
        }
        const cplx p = c();
        KernelExpr rt;
        switch (n % 4) {
            case 0: rt = base; break;
            case 1: rt = base * pow(one - KernelExpr::constant(std::abs(p)) * z1 * w1, Exponent(-1.0)); break;
            case 2:
                rt = base * (one - KernelExpr::constant(p) * z1 * w2) * (one - KernelExpr::constant(std::conj(p)) * z2 * w1);
                break;
            default: rt = base * pow(one - KernelExpr::constant(std::abs(p)) * z2 * w2, Exponent(-1.0));
        }
        const bool d2 = order_k_equivalent(rho, rt, 2, samples, kDefaultTol, {}).equivalent;
        const bool inv = invariants_agree(rho, rt, samples, kDefaultTol, {});
        agree += d2 == inv;
        equivalent += d2;
    }
    v.require(construction <= 1e-10, "rank-2 relations construction");
    v.require(agree == 20, "verdict mismatch");
    v.detail << agree << "/20 agree (" << equivalent << " equivalent), construction rel " << construction;
}

// 6. Curvature anchors.
void curvature_criterion(Verdict& v) {
    double origin = 0.0, restriction = 0.0;
    for (auto [lam, mu] : {std::pair{1.0, 1.0}, {0.5, 3.0}, {1.7, 2.0}}) {
        const KernelExpr k = testing::bidisc_kernel(lam, mu);
        CMatrix d = CMatrix::Zero(2, 2);
        d(0, 0) = lam;
        d(1, 1) = mu;
        origin = std::max(origin, max_abs(curvature_matrix(k, CVector::Zero(2), {}) - d));
        for (double r : {0.0, 0.15, 0.3, 0.45, 0.6}) {
            const double f = 1 / std::pow(1 - r * r, 2);
            CMatrix e(2, 2);
            e << (lam + mu) * f, (lam - mu) * f, (lam - mu) * f, (lam + mu) * f;
            restriction = std::max(restriction, max_abs(diagonal_curvature_u(k, r) - e));
        }
    }
    v.require(origin <= 1e-12, "origin");
    v.require(restriction <= 1e-10, "u-restriction");
    v.detail << "origin " << origin << ", u-restriction " << restriction;
}

// 7. Homogeneity and the E_{alpha,delta}^beta data.
void homogeneity_criterion(Verdict& v) {
    std::mt19937_64 rng(707);
    std::uniform_real_distribution<double> U(-0.5, 0.5), T(0.0, 2 * M_PI), P(0.3, 3.0);
    const KernelExpr K = testing::bidisc_kernel(1.3, 2.2);
    const CurvatureField field = [&](const CVector& z) { return curvature_matrix(K, z, {}); };
    double pull = 0.0;
    for (int n = 0; n < 20; ++n) {
        CVector a(2), z(2);
        a << cplx(U(rng), U(rng)), cplx(U(rng), U(rng));
        z << cplx(U(rng), U(rng)), cplx(U(rng), U(rng));
        pull = std::max(pull, max_abs(mobius_pullback_curvature(field, a, {T(rng), T(rng)}, z) - field(z)));
    }
    double eq2 = 0.0, rel = 0.0;
    for (int n = 0; n < 10; ++n) {
        const double al = P(rng), de = P(rng);
        const double be = 0.95 * std::sqrt(al * de) * 2 * U(rng);
        const HomogBundleParams h{al, de, be};
        const cplx u1(U(rng), U(rng));
        eq2 = std::max(eq2, max_abs(diagonal_curvature_u(homog_bundle_metric(h), u1) - homog_curvature_restriction(h, u1)));
        rel = std::max(rel, homog_relations(h.a(), h.b(), h.c(), u1).residual);
    }
    v.require(pull <= 1e-9, "pullback");
    v.require(eq2 <= 1e-9, "restriction closed form");
    v.require(rel <= 1e-9, "metric relations");
    v.detail << "pullback " << pull << ", closed form " << eq2 << ", relations " << rel;
}

// 8. Differentiation engine.
void engine_criterion(Verdict& v) {
    testing::RandomSmooth gen(88, 2);
    double fd = 0.0;
    for (int n = 0; n < 200; ++n) {
        const KernelExpr e = gen(2);
        DerivativeIndex idx = DerivativeIndex::zeros(2);
        const int order = 1 + gen.pick(3);
        for (int k = 0; k < order; ++k) {
            if (gen.pick(2)) idx.add_z(1 + gen.pick(2));
            else idx.add_wb(1 + gen.pick(2));
        }
        const EvalPoint p{gen.point(), gen.point()};
        const cplx sym = evaluate(differentiate(e, idx), p, {});
        fd = std::max(fd, std::abs(sym - fd_mixed_derivative(e, idx, p, {})) / (1.0 + std::abs(sym)));
    }
    double herm = 0.0;
    for (int n = 0; n < 30; ++n) {
        const KernelExpr k = testing::bidisc_kernel(gen.uni(0.5, 3), gen.uni(0.5, 3)) * testing::ball_kernel(2, gen.uni(0.5, 2));
        const CMatrix c = curvature_matrix(k, gen.point(0.6), {});
        herm = std::max(herm, max_abs(c - c.adjoint()));
    }
    testing::RandomSmooth one(89, 1);
    double leibniz = 0.0;
    for (int n = 0; n < 50; ++n) {
        KernelExpr f = KernelExpr::constant(0.0), g = KernelExpr::constant(0.0);
        for (int d = 0; d <= 3; ++d) {
            f = f + KernelExpr::constant(cplx(one.uni(-1, 1), one.uni(-1, 1))) * pow(KernelExpr::z(1), Exponent(d));
            g = g + KernelExpr::constant(cplx(one.uni(-1, 1), one.uni(-1, 1))) * pow(KernelExpr::z(1), Exponent(d));
        }
        const CVector z = one.point(0.8);
        const CMatrix lhs = toeplitz_jet_matrix(f * g, 4, z, {});
        const CMatrix rhs = toeplitz_jet_matrix(f, 4, z, {}) * toeplitz_jet_matrix(g, 4, z, {});
        leibniz = std::max(leibniz, max_abs(lhs - rhs) / std::max(1.0, max_abs(lhs)));
    }
    double frame = 0.0;
    bool frames_ok = true;
    const char* gs[] = {"exp(z1)", "1 + 2*z1 - z1^3", "exp(0.5*z1^2) * (2 + z1)", "(3 - z1)^(-1)"};
    for (int n = 0; n < 20; ++n) {
        const KernelExpr g = parse_kernel(gs[n % 4], 1);
        const KernelExpr s = one(2);
        const auto r = frame_change_check(g, s, 2 + n % 3, EvalPoint{one.point(), one.point()}, {});
        frames_ok = frames_ok && r.ok;
        frame = std::max(frame, r.residual);
    }
    v.require(fd <= 1e-5, "finite differences");
    v.require(herm <= 1e-10, "hermiticity");
    v.require(leibniz <= 1e-10, "Leibniz");
    v.require(frames_ok, "frame change");
    v.detail << "fd rel " << fd << ", hermitian " << herm << ", Leibniz " << leibniz << ", frame change " << frame;
}

// 9. Second fundamental form and connection.
void secfund_criterion(Verdict& v) {
    double sf = 0.0, conn = 0.0;
    for (const KernelExpr& k : {testing::ball_kernel(2, 2.0), testing::ball_kernel(3, 1.5), testing::bidisc_kernel(1.5, 2.5)}) {
        const int m = max_variable_index(k);
        for (const CVector& z : on_hypersurface(sample_grid(m - 1, 10, 0.5, kDefaultSeed))) {
            const CVector direct = second_fundamental_form(k, z, {});
            const CVector rebuilt = second_fundamental_form_from_split(curvature_split(curvature_matrix(k, z, {})));
            sf = std::max(sf, max_abs(direct - rebuilt));
            conn = std::max(conn, connection_matrix(k, z, {}).compatibility_residual());
        }
    }
    v.require(sf <= 1e-10, "second fundamental form");
    v.require(conn <= 1e-10, "connection");
    v.detail << "direct vs reassembly " << sf << ", theta + theta* " << conn;
}

// 10. CLI contract through the real binary.
struct Process {
    int code;
    std::string out;
};

Process shell(const std::string& cmd) {
    Process p{-1, {}};
    FILE* f = ::popen((cmd + " 2>/dev/null").c_str(), "r");
    if (!f) return p;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) p.out.append(buf, n);
    const int status = ::pclose(f);
    p.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return p;
}

void cli_criterion(Verdict& v) {
    const std::string bin = JETQ_CLI, data = JETQ_TEST_DATA;
    auto k = [&](const char* name) { return " --kernel " + data + "/" + name; };
    const int same = shell(bin + " equiv" + k("bidisc_u_1_1.kernel") + k("bidisc_u_1_1.kernel")).code;
    const int diff = shell(bin + " equiv" + k("bidisc_u_1_1.kernel") + k("bidisc_u_05_15.kernel") + " --order 2").code;
    const int unit = shell(bin + " equiv" + k("bidisc_u_1_1.kernel") + k("bidisc_u_1_1_unit.kernel") + " --order 3").code;
    v.require(same == 0, "identical files");
    v.require(diff == 1, "(1,1) vs (0.5,1.5)");
    v.require(unit == 0, "unit-scaled");
    bool deterministic = true;
    for (const std::string args : {" equiv" + k("bidisc_u_1_1.kernel") + k("bidisc_u_05_15.kernel"),
                                   " invariants" + k("bidisc_u_1_1.kernel"),
                                   std::string(" homog --alpha 2 --delta 1 --beta 0.5")}) {
        const Process a = shell(bin + args + " --no-timing"), b = shell(bin + args + " --no-timing");
        deterministic = deterministic && !a.out.empty() && a.out == b.out;
    }
    v.require(deterministic, "byte-identical reports");
    v.detail << "exit codes " << same << "/" << diff << "/" << unit << " (expect 0/1/0), deterministic "
             << (deterministic ? "yes" : "no");
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double budget_s;
        std::function<void(Verdict&)> run;
    };
    const std::vector<Criterion> criteria{
        {"gram identity and oracle", 5, gram_identity_criterion},
        {"shift blocks vs brute force", 10, shift_block_criterion},
        {"K_Q triangle", 10, kq_criterion},
        {"order-k discrimination", 5, discrimination_criterion},
        {"D_2 vs invariant triple", 10, theorem2_criterion},
        {"curvature anchors", 2, curvature_criterion},
        {"homogeneity and E_{alpha,delta}^beta", 10, homogeneity_criterion},
        {"differentiation engine", 15, engine_criterion},
        {"second fundamental form", 5, secfund_criterion},
        {"CLI contract", 5, cli_criterion},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        v.detail.precision(3);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[i].run(v);
        } catch (const std::exception& e) {
            v.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        v.require(secs < criteria[i].budget_s, "time budget");
        failed += !v.pass;
        std::printf("[%s] %2zu %-38s %6.2fs  %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, secs,
                    v.detail.str().c_str());
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
