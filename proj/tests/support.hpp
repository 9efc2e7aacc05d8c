#pragma once

// Shared helpers for the test binaries: random expression trees and a few reference kernels.

#include <random>
#include <string>

#include "jetq/kernel_expr.hpp"

namespace jetq::testing {

inline KernelExpr disc_factor(int i, const Exponent& power) {
    return pow(KernelExpr::constant(1.0) - KernelExpr::z(i) * KernelExpr::wb(i), -power);
}

/// (1 - z1 wb1)^(-lam) (1 - z2 wb2)^(-mu)
inline KernelExpr bidisc_kernel(double lam, double mu) { return disc_factor(1, lam) * disc_factor(2, mu); }

/// (1 - <z, w>)^(-l) in m variables.
inline KernelExpr ball_kernel(int m, double l) {
    KernelExpr inner = KernelExpr::constant(0.0);
    for (int i = 1; i <= m; ++i) inner = inner + KernelExpr::z(i) * KernelExpr::wb(i);
    return pow(KernelExpr::constant(1.0) - inner, Exponent(-l));
}

/// Random trees built with the raw (non-folding) constructors, used for the round-trip
/// property. Every node kind and payload form appears.
class RandomTree {
public:
    RandomTree(std::uint64_t seed, int dim) : rng_(seed), dim_(dim) {}

    KernelExpr operator()(int depth) {
        if (depth <= 0 || coin(0.25)) return leaf();
        switch (pick(8)) {
            case 0: return KernelExpr::raw_binary(NodeKind::Add, (*this)(depth - 1), (*this)(depth - 1));
            case 1: return KernelExpr::raw_binary(NodeKind::Sub, (*this)(depth - 1), (*this)(depth - 1));
            case 2: return KernelExpr::raw_binary(NodeKind::Mul, (*this)(depth - 1), (*this)(depth - 1));
            case 3: return KernelExpr::raw_binary(NodeKind::Div, (*this)(depth - 1), (*this)(depth - 1));
            case 4: return KernelExpr::raw_unary(NodeKind::Neg, (*this)(depth - 1));
            case 5: return KernelExpr::raw_pow((*this)(depth - 1), exponent());
            case 6: return KernelExpr::raw_unary(NodeKind::Log, (*this)(depth - 1));
            default: return KernelExpr::raw_unary(NodeKind::Exp, (*this)(depth - 1));
        }
    }

private:
    bool coin(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p; }
    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
    double real() {
        static const double pool[] = {0.0, 1.0, 2.0, 0.5, 3.25, 1e-5, 1.5e20, 0.1, 7.0};
        return pool[pick(9)];
    }

    KernelExpr leaf() {
        switch (pick(6)) {
            case 0: return KernelExpr::variable(1 + pick(dim_), Slot::Z);
            case 1: return KernelExpr::variable(1 + pick(dim_), Slot::Wb);
            case 2: return KernelExpr::parameter(coin(0.5) ? "lam" : "mu_2");
            case 3: return KernelExpr::constant(real());
            case 4: return KernelExpr::constant(cplx((coin(0.5) ? -1 : 1) * real(), 0.0));
            default: return KernelExpr::constant(cplx((coin(0.5) ? -1 : 1) * real(), (coin(0.5) ? -1 : 1) * real()));
        }
    }

    Exponent exponent() {
        switch (pick(4)) {
            case 0: return Exponent(real());
            case 1: return Exponent(-real());
            case 2: return Exponent::parameter("lam", coin(0.5) ? 1.0 : -1.0);
            default: return Exponent::parameter("mu_2", -2.5) + Exponent(-real());
        }
    }

    std::mt19937_64 rng_;
    int dim_;
};

}  // namespace jetq::testing

namespace jetq::testing {

/// Random smooth sesqui-holomorphic expressions that stay inside the safe domain for
/// |z_i|, |w_i| <= 0.5: disc factors, exponentials, bilinear polynomials and a log, combined
/// by sums, products and quotients by disc factors.
class RandomSmooth {
public:
    RandomSmooth(std::uint64_t seed, int dim) : rng_(seed), dim_(dim) {}

    KernelExpr operator()(int depth = 2) {
        if (depth <= 0) return leaf();
        switch (pick(4)) {
            case 0: return (*this)(depth - 1) + (*this)(depth - 1);
            case 1: return (*this)(depth - 1) * (*this)(depth - 1);
            case 2: return (*this)(depth - 1) / disc();
            default: return leaf();
        }
    }

    CVector point(double radius = 0.5) {
        CVector v(dim_);
        for (int i = 0; i < dim_; ++i) v[i] = std::polar(radius * std::sqrt(uni(0, 1)), uni(0, 2 * M_PI));
        return v;
    }

    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
    double uni(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }

private:
    KernelExpr z() { return KernelExpr::z(1 + pick(dim_)); }
    KernelExpr wb() { return KernelExpr::wb(1 + pick(dim_)); }
    KernelExpr c(double a, double b) { return KernelExpr::constant(uni(a, b)); }

    KernelExpr disc() {
        static const double powers[] = {1.0, 1.5, 2.0, 2.5, 0.5};
        return pow(KernelExpr::constant(1.0) - c(0.2, 1.0) * z() * wb(), Exponent(-powers[pick(5)]));
    }

    KernelExpr leaf() {
        switch (pick(4)) {
            case 0: return disc();
            case 1: return exp(c(-1, 1) * z() + c(-1, 1) * wb());
            case 2: return c(0.5, 2) + c(-1, 1) * z() + c(-1, 1) * wb() + c(-1, 1) * z() * wb();
            default: return log(KernelExpr::constant(3.0) + z() * wb());
        }
    }

    std::mt19937_64 rng_;
    int dim_;
};

}  // namespace jetq::testing
