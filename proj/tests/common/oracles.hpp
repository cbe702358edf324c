#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "soco/core.hpp"

namespace soco::oracle {

// Weight of neighbour offset (dr, dc) before border renormalization.
inline double raw_weight(int dr, int dc) { return (dr == 0 || dc == 0) ? 1.0 / 6.0 : 1.0 / 12.0; }

// Weighted neighbour average of pixel (r, c), channel k.
inline double neighbour_average(const Sample& x, std::size_t r, std::size_t c, std::size_t k) {
  const Shape& s = x.shape;
  double sum = 0.0, wsum = 0.0;
  for (int dr = -1; dr <= 1; ++dr)
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      const long rr = static_cast<long>(r) + dr, cc = static_cast<long>(c) + dc;
      if (rr < 0 || cc < 0 || rr >= static_cast<long>(s.height) || cc >= static_cast<long>(s.width)) continue;
      sum += raw_weight(dr, dc) * x.features[s.index(rr, cc, k)];
      wsum += raw_weight(dr, dc);
    }
  return sum / wsum;
}

// Dense Gaussian elimination with partial pivoting; a is n x n row-major.
inline std::vector<double> dense_solve(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (std::abs(a[piv * n + col]) < 1e-300) throw std::runtime_error("singular system");
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
      std::swap(b[col], b[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / a[col * n + col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i * n + c] * x[c];
    x[i] = s / a[i * n + i];
  }
  return x;
}

// Noise-free imputation by a dense direct solve of the same system.
inline Sample dense_impute(const Sample& x, const Mask& mask) {
  const Shape& s = x.shape;
  Sample out = x;
  for (std::size_t k = 0; k < s.channels; ++k) {
    std::vector<long> idx(s.height * s.width, -1);
    std::size_t n = 0;
    for (std::size_t p = 0; p < s.height * s.width; ++p)
      if (mask[p * s.channels + k]) idx[p] = static_cast<long>(n++);
    if (n == 0) continue;
    std::vector<double> a(n * n, 0.0), b(n, 0.0);
    for (std::size_t r = 0; r < s.height; ++r)
      for (std::size_t c = 0; c < s.width; ++c) {
        const long row = idx[r * s.width + c];
        if (row < 0) continue;
        double wsum = 0.0;
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const long rr = static_cast<long>(r) + dr, cc = static_cast<long>(c) + dc;
            if (rr < 0 || cc < 0 || rr >= static_cast<long>(s.height) || cc >= static_cast<long>(s.width)) continue;
            wsum += raw_weight(dr, dc);
          }
        a[row * n + row] = 1.0;
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const long rr = static_cast<long>(r) + dr, cc = static_cast<long>(c) + dc;
            if (rr < 0 || cc < 0 || rr >= static_cast<long>(s.height) || cc >= static_cast<long>(s.width)) continue;
            const double w = raw_weight(dr, dc) / wsum;
            const long q = idx[rr * s.width + cc];
            if (q >= 0) a[row * n + q] -= w;
            else b[row] += w * x.features[s.index(rr, cc, k)];
          }
      }
    const std::vector<double> sol = dense_solve(a, b);
    for (std::size_t p = 0; p < s.height * s.width; ++p)
      if (idx[p] >= 0) out.features[p * s.channels + k] = sol[idx[p]];
  }
  return out;
}

inline Sample random_grid(std::size_t h, std::size_t w, std::size_t c, std::uint64_t id, std::mt19937_64& gen) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Sample s{std::vector<double>(h * w * c), Shape::image(h, w, c), id};
  for (double& v : s.features) v = normal(gen);
  return s;
}

inline Mask random_mask(std::size_t d, double p, std::mt19937_64& gen) {
  std::bernoulli_distribution coin(p);
  Mask m(d);
  for (std::size_t j = 0; j < d; ++j)
    if (coin(gen)) m.set(j);
  return m;
}

inline AttributionMap random_map(std::size_t d, std::mt19937_64& gen, double zero_share = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(d);
  for (double& x : v) x = u(gen) < zero_share ? 0.0 : u(gen);
  return AttributionMap(std::move(v), true);
}

}  // namespace soco::oracle
