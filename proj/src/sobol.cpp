#include "nkq/error.hpp"
#include "nkq/sampling.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace nkq {

namespace detail {
extern const std::string_view kSobolDirectionTable;
}

namespace {

constexpr int kBits = 32;
using Directions = std::array<std::uint32_t, kBits + 1>;  // 1-based

struct TableEntry {
  unsigned s = 0;
  unsigned a = 0;
  std::vector<std::uint32_t> m;
};

std::vector<TableEntry> parse_table(std::string_view text) {
  std::vector<TableEntry> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || line[first] == '#') continue;

    std::vector<std::uint64_t> nums;
    const char *p = line.data() + first;
    const char *last = line.data() + line.size();
    while (p < last) {
      while (p < last && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
      if (p >= last) break;
      std::uint64_t v = 0;
      auto [q, ec] = std::from_chars(p, last, v);
      if (ec != std::errc()) {
        fail(ErrorCode::Io, "malformed Sobol table line: " + std::string(line));
      }
      nums.push_back(v);
      p = q;
    }
    if (nums.size() < 4 || nums.size() != 3 + nums[1]) {
      fail(ErrorCode::Io, "malformed Sobol table line: " + std::string(line));
    }
    if (nums[0] != rows.size() + 2) {
      fail(ErrorCode::Io, "Sobol table dimensions out of order");
    }
    TableEntry e;
    e.s = static_cast<unsigned>(nums[1]);
    e.a = static_cast<unsigned>(nums[2]);
    for (std::size_t i = 3; i < nums.size(); ++i) {
      e.m.push_back(static_cast<std::uint32_t>(nums[i]));
    }
    rows.push_back(std::move(e));
  }
  return rows;
}

const std::vector<Directions> &direction_numbers() {
  static const std::vector<Directions> dirs = [] {
    const auto table = parse_table(detail::kSobolDirectionTable);
    std::vector<Directions> out(table.size() + 1);
    for (int i = 1; i <= kBits; ++i) {
      out[0][i] = 1u << (kBits - i);
    }
    for (std::size_t j = 0; j < table.size(); ++j) {
      const auto &e = table[j];
      auto &v = out[j + 1];
      const unsigned s = e.s;
      for (unsigned i = 1; i <= s && i <= kBits; ++i) {
        v[i] = e.m[i - 1] << (kBits - i);
      }
      for (unsigned i = s + 1; i <= kBits; ++i) {
        v[i] = v[i - s] ^ (v[i - s] >> s);
        for (unsigned k = 1; k < s; ++k) {
          if ((e.a >> (s - 1 - k)) & 1u) v[i] ^= v[i - k];
        }
      }
    }
    return out;
  }();
  return dirs;
}

// Nested uniform scrambling: each digit is flipped by a hash of the digits
// above it, and the bits below the 32-bit resolution are filled the same way.
double owen_scramble(std::uint32_t x, std::uint64_t key) {
  std::uint64_t y = 0;
  for (int b = 0; b < kBits; ++b) {
    const std::uint64_t prefix = b == 0 ? 0 : (x >> (kBits - b));
    const std::uint64_t h =
        splitmix64(key ^ ((static_cast<std::uint64_t>(b) << 32) | prefix));
    const std::uint64_t bit = ((x >> (kBits - 1 - b)) & 1u) ^ (h & 1u);
    y |= bit << (kBits - 1 - b);
  }
  const std::uint64_t tail =
      splitmix64(key ^ ((static_cast<std::uint64_t>(kBits) << 32) | x)) &
      ((1ULL << 21) - 1);
  return static_cast<double>((y << 21) | tail) * 0x1p-53;
}

}  // namespace

PointSet sobol(Index n, Index d, std::optional<std::uint64_t> scramble_seed) {
  require(n >= 1, ErrorCode::InvalidArgument, "sobol: n must be >= 1");
  require(d >= 1, ErrorCode::InvalidArgument, "sobol: d must be >= 1");
  if (d > kSobolMaxDim) {
    fail(ErrorCode::InvalidArgument,
         "sobol: dimension " + std::to_string(d) + " exceeds the direction table (" +
             std::to_string(kSobolMaxDim) + ")");
  }
  require(n < (Index{1} << kBits), ErrorCode::InvalidArgument,
          "sobol: n exceeds 2^32 - 1");
  const auto &dirs = direction_numbers();
  require(static_cast<Index>(dirs.size()) >= d, ErrorCode::Io,
          "sobol: direction table is shorter than expected");

  PointSet out;
  out.points.resize(n, d);
  out.base = PointSource::QMC;
  out.scrambled = scramble_seed.has_value();
  out.seed = scramble_seed.value_or(0);

  std::vector<std::uint64_t> keys(static_cast<std::size_t>(d));
  if (out.scrambled) {
    for (Index j = 0; j < d; ++j) {
      keys[static_cast<std::size_t>(j)] =
          derive_seed(*scramble_seed, static_cast<std::uint64_t>(j));
    }
  }

  std::vector<std::uint32_t> x(static_cast<std::size_t>(d), 0u);
  for (Index i = 1; i <= n; ++i) {
    // Gray-code step: index i differs from i-1 in bit ctz(i).
    const int c = std::countr_zero(static_cast<std::uint32_t>(i)) + 1;
    for (Index j = 0; j < d; ++j) {
      auto &xj = x[static_cast<std::size_t>(j)];
      xj ^= dirs[static_cast<std::size_t>(j)][c];
      out.points(i - 1, j) =
          out.scrambled ? owen_scramble(xj, keys[static_cast<std::size_t>(j)])
                        : static_cast<double>(xj) * 0x1p-32;
    }
  }
  return out;
}

}  // namespace nkq
