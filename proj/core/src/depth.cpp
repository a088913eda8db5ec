#include "stcov/depth.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "stcov/errors.hpp"

namespace stcov {
namespace {

using Index = Eigen::Index;

std::int64_t choose2(std::int64_t n) { return n * (n - 1) / 2; }

void check_curves(const RowMatrix& curves, Index min_rows) {
  if (curves.rows() < min_rows) {
    throw InputError("depth needs at least " + std::to_string(min_rows) + " curves, got " +
                     std::to_string(curves.rows()));
  }
  if (curves.cols() < 1) throw InputError("curves have an empty grid");
  if (!curves.allFinite()) throw InputError("curves contain non-finite values");
}

using Bits = std::vector<std::uint64_t>;

void set_bit(Bits& b, std::size_t j) { b[j / 64] |= std::uint64_t{1} << (j % 64); }

std::int64_t popcount(const Bits& b, std::size_t n) {
  std::int64_t total = 0;
  for (std::size_t w = 0; w < b.size(); ++w) {
    std::uint64_t word = b[w];
    if (w + 1 == b.size() && n % 64 != 0) word &= (std::uint64_t{1} << (n % 64)) - 1;
    total += std::popcount(word);
  }
  return total;
}

// Number of pairs whose band holds each curve. For curve c and partner a, the
// admissible b at time t are the curves at or above c when a is below it and
// at or below c when a is above it.
std::vector<std::int64_t> band_counts(const RowMatrix& y) {
  const auto n = static_cast<std::size_t>(y.rows());
  const auto T = static_cast<std::size_t>(y.cols());
  const std::size_t words = (n + 63) / 64;
  std::vector<std::int64_t> bands(n, 0);
  std::vector<Bits> geq(T, Bits(words)), leq(T, Bits(words));
  Bits acc(words);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t t = 0; t < T; ++t) {
      std::fill(geq[t].begin(), geq[t].end(), 0);
      std::fill(leq[t].begin(), leq[t].end(), 0);
      const double v = y(static_cast<Index>(c), static_cast<Index>(t));
      for (std::size_t j = 0; j < n; ++j) {
        const double w = y(static_cast<Index>(j), static_cast<Index>(t));
        if (w >= v) set_bit(geq[t], j);
        if (w <= v) set_bit(leq[t], j);
      }
    }
    // Ordered pairs (a, b), a != b, around c; a == c contributes n - 1.
    std::int64_t ordered = static_cast<std::int64_t>(n) - 1;
    for (std::size_t a = 0; a < n; ++a) {
      if (a == c) continue;
      std::fill(acc.begin(), acc.end(), ~std::uint64_t{0});
      bool equal = true;
      for (std::size_t t = 0; t < T; ++t) {
        const double va = y(static_cast<Index>(a), static_cast<Index>(t));
        const double vc = y(static_cast<Index>(c), static_cast<Index>(t));
        if (va < vc) {
          for (std::size_t w = 0; w < words; ++w) acc[w] &= geq[t][w];
          equal = false;
        } else if (va > vc) {
          for (std::size_t w = 0; w < words; ++w) acc[w] &= leq[t][w];
          equal = false;
        }
      }
      ordered += popcount(acc, n) - (equal ? 1 : 0);
    }
    bands[c] = ordered / 2;
  }
  return bands;
}

DepthCounts counts_by_rank(const RowMatrix& y) {
  const Index n = y.rows();
  DepthCounts out;
  out.pairs = choose2(n);
  out.grid = y.cols();
  out.bands = band_counts(y);
  out.hits.assign(static_cast<std::size_t>(n), 0);
  std::vector<double> column(static_cast<std::size_t>(n));
  for (Index t = 0; t < y.cols(); ++t) {
    for (Index c = 0; c < n; ++c) column[static_cast<std::size_t>(c)] = y(c, t);
    std::sort(column.begin(), column.end());
    for (Index c = 0; c < n; ++c) {
      const auto below = std::lower_bound(column.begin(), column.end(), y(c, t)) - column.begin();
      const auto above = column.end() - std::upper_bound(column.begin(), column.end(), y(c, t));
      out.hits[static_cast<std::size_t>(c)] += out.pairs - choose2(below) - choose2(above);
    }
  }
  return out;
}

std::vector<double> scaled(const std::vector<std::int64_t>& counts, std::int64_t denom) {
  std::vector<double> out(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out[i] = static_cast<double>(counts[i]) / static_cast<double>(denom);
  }
  return out;
}

}  // namespace

DepthCounts depth_counts_direct(const RowMatrix& curves) {
  check_curves(curves, 3);
  const Index n = curves.rows();
  DepthCounts out;
  out.pairs = choose2(n);
  out.grid = curves.cols();
  out.bands.assign(static_cast<std::size_t>(n), 0);
  out.hits.assign(static_cast<std::size_t>(n), 0);
  for (Index a = 0; a < n; ++a) {
    for (Index b = a + 1; b < n; ++b) {
      for (Index c = 0; c < n; ++c) {
        std::int64_t inside = 0;
        for (Index t = 0; t < curves.cols(); ++t) {
          const double lo = std::min(curves(a, t), curves(b, t));
          const double hi = std::max(curves(a, t), curves(b, t));
          if (lo <= curves(c, t) && curves(c, t) <= hi) ++inside;
        }
        out.hits[static_cast<std::size_t>(c)] += inside;
        if (inside == out.grid) ++out.bands[static_cast<std::size_t>(c)];
      }
    }
  }
  return out;
}

DepthCounts depth_counts(const RowMatrix& curves) {
  check_curves(curves, 3);
  return counts_by_rank(curves);
}

std::vector<double> band_depth(const RowMatrix& curves) {
  const auto c = depth_counts(curves);
  return scaled(c.bands, c.pairs);
}

std::vector<double> modified_band_depth(const RowMatrix& curves) {
  const auto c = depth_counts(curves);
  return scaled(c.hits, c.pairs * c.grid);
}

DepthRanking rank_curves(const RowMatrix& curves) {
  const auto c = depth_counts(curves);
  DepthRanking out;
  out.bd = scaled(c.bands, c.pairs);
  out.mbd = scaled(c.hits, c.pairs * c.grid);
  out.order.resize(c.bands.size());
  std::iota(out.order.begin(), out.order.end(), std::size_t{0});
  std::stable_sort(out.order.begin(), out.order.end(), [&](std::size_t a, std::size_t b) {
    if (c.bands[a] != c.bands[b]) return c.bands[a] > c.bands[b];
    return c.hits[a] > c.hits[b];
  });
  return out;
}

std::vector<std::size_t> mbd_order(const DepthCounts& counts) {
  std::vector<std::size_t> order(counts.hits.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return counts.hits[a] > counts.hits[b]; });
  return order;
}

ReferenceDepthIndex::ReferenceDepthIndex(RowMatrix reference) : ref_(std::move(reference)) {
  check_curves(ref_, 2);
  const auto r = static_cast<std::size_t>(ref_.rows());
  const auto T = static_cast<std::size_t>(ref_.cols());
  words_ = (r + 63) / 64;
  own_ = counts_by_rank(ref_);

  sorted_.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    auto& col = sorted_[t];
    col.resize(r);
    for (std::size_t j = 0; j < r; ++j) col[j] = ref_(static_cast<Index>(j), static_cast<Index>(t));
    std::sort(col.begin(), col.end());
  }

  geq_.assign(r * T, Bits(words_, 0));
  leq_.assign(r * T, Bits(words_, 0));
  geq_count_.assign(r * T, 0);
  leq_count_.assign(r * T, 0);
  for (std::size_t k = 0; k < r; ++k) {
    for (std::size_t t = 0; t < T; ++t) {
      const double v = ref_(static_cast<Index>(k), static_cast<Index>(t));
      auto& g = geq_[k * T + t];
      auto& l = leq_[k * T + t];
      for (std::size_t j = 0; j < r; ++j) {
        const double w = ref_(static_cast<Index>(j), static_cast<Index>(t));
        if (w >= v) g[j / 64] |= std::uint64_t{1} << (j % 64);
        if (w <= v) l[j / 64] |= std::uint64_t{1} << (j % 64);
      }
      geq_count_[k * T + t] = static_cast<std::int64_t>(
          sorted_[t].end() - std::lower_bound(sorted_[t].begin(), sorted_[t].end(), v));
      leq_count_[k * T + t] = static_cast<std::int64_t>(
          std::upper_bound(sorted_[t].begin(), sorted_[t].end(), v) - sorted_[t].begin());
    }
  }
}

PoolPosition ReferenceDepthIndex::locate(std::span<const double> x) const {
  const auto r = static_cast<std::size_t>(ref_.rows());
  const auto T = static_cast<std::size_t>(ref_.cols());
  if (x.size() != T) {
    throw InputError("curve has " + std::to_string(x.size()) + " grid points, reference has " +
                     std::to_string(T));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw InputError("curve contains non-finite values");
  }
  const auto ri = static_cast<std::int64_t>(r);
  const auto Ti = static_cast<std::int64_t>(T);

  // Depth tallies of x in the pool. Reference pairs (a, b) whose band holds x:
  // per t, a below x needs b at or above it and vice versa.
  std::vector<Bits> at_or_below(T, Bits(words_, 0)), at_or_above(T, Bits(words_, 0));
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t a = 0; a < r; ++a) {
      const double v = ref_(static_cast<Index>(a), static_cast<Index>(t));
      if (v <= x[t]) at_or_below[t][a / 64] |= std::uint64_t{1} << (a % 64);
      if (v >= x[t]) at_or_above[t][a / 64] |= std::uint64_t{1} << (a % 64);
    }
  }
  Bits acc(words_);
  std::int64_t ordered_pairs = 0;
  for (std::size_t a = 0; a < r; ++a) {
    std::fill(acc.begin(), acc.end(), ~std::uint64_t{0});
    for (std::size_t t = 0; t < T; ++t) {
      const double v = ref_(static_cast<Index>(a), static_cast<Index>(t));
      if (v < x[t]) {
        for (std::size_t w = 0; w < words_; ++w) acc[w] &= at_or_above[t][w];
      } else if (v > x[t]) {
        for (std::size_t w = 0; w < words_; ++w) acc[w] &= at_or_below[t][w];
      }
    }
    acc[a / 64] &= ~(std::uint64_t{1} << (a % 64));
    for (std::size_t w = 0; w < words_; ++w) {
      std::uint64_t word = acc[w];
      if (w + 1 == words_ && r % 64 != 0) word &= (std::uint64_t{1} << (r % 64)) - 1;
      ordered_pairs += std::popcount(word);
    }
  }
  const std::int64_t x_bands = ri + ordered_pairs / 2;
  std::int64_t x_hits = ri * Ti;
  for (std::size_t t = 0; t < T; ++t) {
    const auto& col = sorted_[t];
    const auto below = std::lower_bound(col.begin(), col.end(), x[t]) - col.begin();
    const auto above = col.end() - std::upper_bound(col.begin(), col.end(), x[t]);
    x_hits += choose2(ri) - choose2(below) - choose2(above);
  }

  // Depth tallies of each reference curve in the pool, compared with x.
  PoolPosition pos;
  for (std::size_t k = 0; k < r; ++k) {
    std::fill(acc.begin(), acc.end(), ~std::uint64_t{0});
    std::int64_t k_hits = own_.hits[k] + Ti;
    for (std::size_t t = 0; t < T; ++t) {
      const double v = ref_(static_cast<Index>(k), static_cast<Index>(t));
      const std::size_t cell = k * T + t;
      if (x[t] < v) {
        for (std::size_t w = 0; w < words_; ++w) acc[w] &= geq_[cell][w];
        k_hits += geq_count_[cell] - 1;
      } else if (x[t] > v) {
        for (std::size_t w = 0; w < words_; ++w) acc[w] &= leq_[cell][w];
        k_hits += leq_count_[cell] - 1;
      } else {
        k_hits += ri - 1;
      }
    }
    std::int64_t with_x = 0;
    for (std::size_t w = 0; w < words_; ++w) {
      std::uint64_t word = acc[w];
      if (w + 1 == words_ && r % 64 != 0) word &= (std::uint64_t{1} << (r % 64)) - 1;
      with_x += std::popcount(word);
    }
    // with_x counts k itself, whose pair with x is added separately.
    const std::int64_t k_bands = own_.bands[k] + 1 + (with_x - 1);
    if (k_bands == x_bands && k_hits == x_hits) pos.tied = true;
    if (k_bands < x_bands || (k_bands == x_bands && k_hits <= x_hits)) ++pos.below;
  }
  return pos;
}

}  // namespace stcov
