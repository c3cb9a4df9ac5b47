#pragma once

#include "nkq/measure.hpp"
#include "nkq/types.hpp"

#include <cstdint>
#include <optional>

namespace nkq {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Independent stream seed: splitmix64(seed ^ splitmix64(stream + golden)).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

// n iid draws (one per row) from the measure, using mt19937_64.
PointMatrix sample_iid(const MeasureSpec &measure, Index n, std::uint64_t seed);

struct PointSet {
  PointMatrix points;
  PointSource base = PointSource::QMC;
  std::uint64_t seed = 0;
  bool scrambled = false;
};

inline constexpr Index kSobolMaxDim = 64;

// First n points of the d-dimensional Sobol sequence starting at index 1
// (the origin is skipped), Joe-Kuo direction numbers. With a seed the points
// get nested uniform (Owen) digit scrambling, keyed on the seed.
PointSet sobol(Index n, Index d, std::optional<std::uint64_t> scramble_seed = {});

// n points from the measure: iid draws, or scrambled Sobol pushed through
// cube_map(measure).
PointMatrix sample_points(const MeasureSpec &measure, Index n, PointSource source,
                          std::uint64_t seed, bool *clamped = nullptr);

}  // namespace nkq
