#pragma once

// DCT perceptual hash and blank-screen detection.
//
// Construction (fixed so hashes are bit-exact across implementations):
//   1. luma = 0.299 R + 0.587 G + 0.114 B
//   2. area-average (box filter) down to 32x32; the block sums are computed
//      in exact integer arithmetic, fractional source-pixel coverage included
//   3. orthonormal 2-D DCT-II, keep the top-left 8x8 block
//   4. drop the DC term; each of the remaining 63 coefficients is quantised
//      to 1e-6 and compared against their median (strictly greater -> 1)
//   5. coefficient k (row-major, DC skipped) lands in bit 63-k; bit 0 is 0
//
// Quantisation makes the all-AC-zero case exact: a constant image hashes to 0.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "uxpipe/error.hpp"
#include "uxpipe/image.hpp"

namespace uxpipe {

struct ScreenHash {
  std::uint64_t bits = 0;

  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(bits));
    return buf;
  }

  friend bool operator==(const ScreenHash&, const ScreenHash&) = default;
};

inline int hamming_distance(ScreenHash a, ScreenHash b) noexcept {
  return std::popcount(a.bits ^ b.bits);
}

inline constexpr int kDefaultSameScreenDistance = 4;
inline constexpr double kDefaultBlankEpsilon = 2.0;

// Inclusive: distance <= max_distance counts as the same screen. Not
// transitive.
inline bool same_screen(ScreenHash a, ScreenHash b,
                        int max_distance = kDefaultSameScreenDistance) noexcept {
  return hamming_distance(a, b) <= max_distance;
}

namespace phash_detail {

inline constexpr int kSize = 32;
inline constexpr int kBlock = 8;

// Mean luma of each 32x32 cell, via integer box-filter weights. Source pixel
// i covers [32 i, 32 i + 32) and output cell j covers [j L, (j+1) L) where L
// is the source length, so every overlap is an integer.
inline std::array<double, kSize * kSize> downscale_luma(const Screenshot& img) {
  const auto weights = [](int length) {
    std::vector<std::vector<std::pair<int, std::int64_t>>> w(kSize);
    for (int j = 0; j < kSize; ++j) {
      const std::int64_t lo = static_cast<std::int64_t>(j) * length;
      const std::int64_t hi = lo + length;
      for (std::int64_t i = lo / kSize; i < length && i * kSize < hi; ++i) {
        const std::int64_t overlap =
            std::min(hi, (i + 1) * kSize) - std::max(lo, i * kSize);
        if (overlap > 0) w[j].emplace_back(static_cast<int>(i), overlap);
      }
    }
    return w;
  };
  const auto wx = weights(img.width);
  const auto wy = weights(img.height);

  // luma * 1000 as an integer per pixel
  std::vector<std::int64_t> luma(static_cast<std::size_t>(img.width) * img.height);
  for (std::size_t i = 0; i < luma.size(); ++i) {
    const auto* p = &img.pixels[i * 3];
    luma[i] = 299 * p[0] + 587 * p[1] + 114 * p[2];
  }

  // horizontal pass: rows x 32
  std::vector<std::int64_t> horiz(static_cast<std::size_t>(img.height) * kSize, 0);
  for (int y = 0; y < img.height; ++y) {
    const auto* row = &luma[static_cast<std::size_t>(y) * img.width];
    for (int j = 0; j < kSize; ++j) {
      std::int64_t acc = 0;
      for (auto [i, w] : wx[j]) acc += w * row[i];
      horiz[static_cast<std::size_t>(y) * kSize + j] = acc;
    }
  }

  std::array<double, kSize * kSize> out{};
  const double denom = 1000.0 * static_cast<double>(img.width) * img.height;
  for (int r = 0; r < kSize; ++r) {
    for (int j = 0; j < kSize; ++j) {
      std::int64_t acc = 0;
      for (auto [i, w] : wy[r]) acc += w * horiz[static_cast<std::size_t>(i) * kSize + j];
      out[r * kSize + j] = static_cast<double>(acc) / denom;
    }
  }
  return out;
}

inline const std::array<double, kBlock * kSize>& dct_basis() {
  static const auto table = [] {
    std::array<double, kBlock * kSize> t{};
    for (int u = 0; u < kBlock; ++u) {
      const double scale = u == 0 ? std::sqrt(1.0 / kSize) : std::sqrt(2.0 / kSize);
      for (int x = 0; x < kSize; ++x)
        t[u * kSize + x] =
            scale * std::cos(std::numbers::pi * (2 * x + 1) * u / (2.0 * kSize));
    }
    return t;
  }();
  return table;
}

}  // namespace phash_detail

// Low-frequency 8x8 DCT block (row-major, [0] is DC) of the 32x32 luma image.
inline std::array<double, 64> low_frequency_dct(const Screenshot& img) {
  using namespace phash_detail;
  if (!img.valid()) throw DataError("phash: zero-dimension or malformed image");
  const auto cells = downscale_luma(img);
  const auto& basis = dct_basis();

  std::array<double, kBlock * kSize> cols{};  // [u][x]
  for (int u = 0; u < kBlock; ++u)
    for (int x = 0; x < kSize; ++x) {
      double acc = 0;
      for (int y = 0; y < kSize; ++y) acc += basis[u * kSize + y] * cells[y * kSize + x];
      cols[u * kSize + x] = acc;
    }
  std::array<double, 64> out{};
  for (int u = 0; u < kBlock; ++u)
    for (int v = 0; v < kBlock; ++v) {
      double acc = 0;
      for (int x = 0; x < kSize; ++x) acc += basis[v * kSize + x] * cols[u * kSize + x];
      out[u * kBlock + v] = acc;
    }
  return out;
}

inline ScreenHash phash(const Screenshot& img) {
  const auto dct = low_frequency_dct(img);
  std::array<std::int64_t, 63> ac{};
  for (int k = 0; k < 63; ++k) ac[k] = std::llround(dct[k + 1] * 1e6);

  auto sorted = ac;
  std::nth_element(sorted.begin(), sorted.begin() + 31, sorted.end());
  const std::int64_t median = sorted[31];

  std::uint64_t bits = 0;
  for (int k = 0; k < 63; ++k)
    if (ac[k] > median) bits |= std::uint64_t{1} << (63 - k);
  return {bits};
}

// Population standard deviation of each RGB channel.
inline std::array<double, 3> channel_stddev(const Screenshot& img) {
  if (!img.valid()) throw DataError("channel_stddev: malformed image");
  std::array<std::uint64_t, 3> sum{}, sq{};
  for (std::size_t i = 0; i < img.pixels.size(); i += 3)
    for (int c = 0; c < 3; ++c) {
      const std::uint64_t v = img.pixels[i + c];
      sum[c] += v;
      sq[c] += v * v;
    }
  const double n = static_cast<double>(img.pixels.size() / 3);
  std::array<double, 3> out{};
  for (int c = 0; c < 3; ++c) {
    const double mean = static_cast<double>(sum[c]) / n;
    out[c] = std::sqrt(std::max(0.0, static_cast<double>(sq[c]) / n - mean * mean));
  }
  return out;
}

// Blank iff every channel's standard deviation is below epsilon (0-255 scale).
inline bool is_blank(const Screenshot& img, double epsilon = kDefaultBlankEpsilon) {
  const auto sd = channel_stddev(img);
  return std::all_of(sd.begin(), sd.end(), [&](double s) { return s < epsilon; });
}

}  // namespace uxpipe
