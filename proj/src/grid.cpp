#include "jetq/grid.hpp"

#include <exception>
#include <random>

namespace jetq {

std::vector<cplx> evaluate_grid(const Tape& tape, const std::vector<EvalPoint>& points) {
    const auto n = static_cast<std::ptrdiff_t>(points.size());
    std::vector<cplx> out(points.size());
    std::vector<std::exception_ptr> errors(points.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            out[i] = tape(points[i]);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

std::vector<cplx> evaluate_grid_serial(const Tape& tape, const std::vector<EvalPoint>& points) {
    std::vector<cplx> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(tape(p));
    return out;
}

CMatrix evaluate_tapes(const std::vector<Tape>& tapes, const std::vector<EvalPoint>& points) {
    const auto nt = static_cast<std::ptrdiff_t>(tapes.size());
    const auto np = static_cast<std::ptrdiff_t>(points.size());
    CMatrix out(nt, np);
    std::vector<std::exception_ptr> errors(tapes.size() * points.size());
#pragma omp parallel for collapse(2) schedule(dynamic)
    for (std::ptrdiff_t p = 0; p < np; ++p)
        for (std::ptrdiff_t t = 0; t < nt; ++t) {
            try {
                out(t, p) = tapes[t](points[p]);
            } catch (...) {
                errors[p * nt + t] = std::current_exception();
            }
        }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

CMatrix evaluate_tapes_serial(const std::vector<Tape>& tapes, const std::vector<EvalPoint>& points) {
    CMatrix out(tapes.size(), points.size());
    for (std::size_t p = 0; p < points.size(); ++p)
        for (std::size_t t = 0; t < tapes.size(); ++t) out(t, p) = tapes[t](points[p]);
    return out;
}

std::vector<CVector> sample_grid(int tangential_dim, int count, double radius, std::uint64_t seed) {
    if (tangential_dim < 0) throw DomainError("negative tangential dimension");
    if (count < 1) throw DomainError("sample count must be >= 1");
    if (!(radius >= 0.0)) throw DomainError("sample radius must be >= 0");
    std::vector<CVector> out;
    const int axis = std::min(count, 5);
    for (int i = 0; i < axis; ++i) {
        const double r = axis == 1 ? 0.0 : radius * i / (axis - 1);
        out.push_back(CVector::Constant(tangential_dim, cplx(r, 0.0)));
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = axis; i < count; ++i) {
        CVector v(tangential_dim);
        for (int j = 0; j < tangential_dim; ++j)
            v[j] = std::polar(radius * std::sqrt(unit(rng)), 2.0 * M_PI * unit(rng));
        out.push_back(v);
    }
    return out;
}

std::vector<CVector> on_hypersurface(const std::vector<CVector>& tangential) {
    std::vector<CVector> out;
    for (const auto& t : tangential) {
        CVector z(t.size() + 1);
        z[0] = 0.0;
        z.tail(t.size()) = t;
        out.push_back(z);
    }
    return out;
}

}  // namespace jetq
