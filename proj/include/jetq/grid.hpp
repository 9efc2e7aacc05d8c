#pragma once

#include <cstdint>
#include <vector>

#include "jetq/wirtinger.hpp"

namespace jetq {

/// Evaluate one tape at many points. Results are ordered by input index; the first failing
/// point (lowest index) has its error rethrown after the sweep.
std::vector<cplx> evaluate_grid(const Tape& tape, const std::vector<EvalPoint>& points);

/// Serial reference for evaluate_grid; same results, same error semantics.
std::vector<cplx> evaluate_grid_serial(const Tape& tape, const std::vector<EvalPoint>& points);

/// Several tapes at several points: out(t, p) = tapes[t](points[p]).
CMatrix evaluate_tapes(const std::vector<Tape>& tapes, const std::vector<EvalPoint>& points);
CMatrix evaluate_tapes_serial(const std::vector<Tape>& tapes, const std::vector<EvalPoint>& points);

inline constexpr std::uint64_t kDefaultSeed = 0x6A657471;

/// Tangential samples: min(count, 5) real points linspace(0, radius) (every coordinate equal),
/// then count-5 seeded random points with each coordinate uniform in the disc of `radius`.
std::vector<CVector> sample_grid(int tangential_dim, int count, double radius, std::uint64_t seed);

/// (0, z') for each tangential sample z'.
std::vector<CVector> on_hypersurface(const std::vector<CVector>& tangential);

}  // namespace jetq
