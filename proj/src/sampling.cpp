#include "nkq/sampling.hpp"

#include "nkq/error.hpp"

#include <cmath>
#include <random>

namespace nkq {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(seed ^ splitmix64(stream + 0x9E3779B97F4A7C15ULL));
}

namespace {

void fill_iid(const MeasureSpec &m, PointMatrix &out, std::mt19937_64 &rng) {
  const Index n = out.rows();
  switch (m.kind) {
  case MeasureKind::Uniform01: {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < m.dim; ++j) out(i, j) = u(rng);
    return;
  }
  case MeasureKind::GaussianDiag: {
    std::normal_distribution<double> z;
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < m.dim; ++j) out(i, j) = m.mean[j] + m.std_dev[j] * z(rng);
    return;
  }
  case MeasureKind::GaussianFull: {
    std::normal_distribution<double> z;
    Vector e(m.dim);
    const auto lower = m.chol.triangularView<Eigen::Lower>();
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < m.dim; ++j) e[j] = z(rng);
      out.row(i) = (m.mean + lower * e).transpose();
    }
    return;
  }
  case MeasureKind::Lognormal: {
    std::normal_distribution<double> z;
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < m.dim; ++j)
        out(i, j) = std::exp(m.mean[j] + m.std_dev[j] * z(rng));
    return;
  }
  case MeasureKind::Pushforward: {
    PointMatrix base(n, m.base->dim);
    fill_iid(*m.base, base, rng);
    out = apply_transform(m.map, base).points;
    return;
  }
  }
  fail(ErrorCode::Unsupported, "sample_iid: unknown measure kind");
}

}  // namespace

PointMatrix sample_iid(const MeasureSpec &measure, Index n, std::uint64_t seed) {
  require(n >= 1, ErrorCode::InvalidArgument, "sample_iid: n must be >= 1");
  std::mt19937_64 rng(seed);
  PointMatrix out(n, measure.dim);
  fill_iid(measure, out, rng);
  return out;
}

PointMatrix sample_points(const MeasureSpec &measure, Index n, PointSource source,
                          std::uint64_t seed, bool *clamped) {
  if (source == PointSource::IID) {
    return sample_iid(measure, n, seed);
  }
  const PointSet qmc = sobol(n, measure.dim, seed);
  auto mapped = apply_transform(cube_map(measure), qmc.points);
  if (clamped != nullptr && mapped.clamped) {
    *clamped = true;
  }
  return std::move(mapped.points);
}

}  // namespace nkq
