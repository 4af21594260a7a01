#pragma once

#include <map>
#include <stdexcept>
#include <vector>

#include "wdq/scalar.hpp"

namespace wdq {

using SparseVec = std::map<int, Scalar>;

inline void axpy(SparseVec& y, const Scalar& a, const SparseVec& x) {
  if (a.is_zero()) return;
  for (const auto& [i, v] : x) {
    auto [it, ins] = y.try_emplace(i, a * v);
    if (!ins) {
      it->second += a * v;
      if (it->second.is_zero()) y.erase(it);
    }
  }
}

inline SparseVec scaled(const SparseVec& x, const Scalar& a) {
  SparseVec r;
  if (a.is_zero()) return r;
  for (const auto& [i, v] : x) r.emplace_hint(r.end(), i, v * a);
  return r;
}

inline void add_entry(SparseVec& y, int i, const Scalar& v) {
  if (v.is_zero()) return;
  auto [it, ins] = y.try_emplace(i, v);
  if (!ins) {
    it->second += v;
    if (it->second.is_zero()) y.erase(it);
  }
}

/// Row echelon basis of a growing set of sparse vectors. Every stored row
/// remembers its expression in terms of the inserted vectors it came from,
/// so reductions return coordinates with respect to the accepted inputs.
class Echelon {
 public:
  struct Reduction {
    SparseVec residual;
    SparseVec coords;  ///< over accepted tags
  };

  Echelon() = default;
  /// With `track_coords == false` only ranks and residuals are maintained.
  explicit Echelon(bool track_coords) : track_(track_coords) {}

  Reduction reduce(SparseVec v) const {
    Reduction out;
    auto it = v.begin();
    while (it != v.end()) {
      const int col = it->first;
      auto row = rows_.find(col);
      if (row == rows_.end()) {
        ++it;
        continue;
      }
      Scalar c = it->second;
      axpy(v, -c, row->second.vec);
      if (track_) axpy(out.coords, c, row->second.combo);
      it = v.upper_bound(col);
    }
    out.residual = std::move(v);
    return out;
  }

  /// Inserts `v` tagged `tag`; returns false when `v` is already in the span.
  bool insert(const SparseVec& v, int tag) {
    Reduction red = reduce(v);
    if (red.residual.empty()) return false;
    const int pivot = red.residual.begin()->first;
    Scalar inv = Scalar(1) / red.residual.begin()->second;
    SparseVec combo;
    if (track_) {
      combo = scaled(red.coords, Scalar(-1));
      add_entry(combo, tag, Scalar(1));
    }
    rows_.emplace(pivot, Row{scaled(red.residual, inv), scaled(combo, inv)});
    return true;
  }

  int rank() const { return static_cast<int>(rows_.size()); }

 private:
  struct Row {
    SparseVec vec;
    SparseVec combo;
  };
  std::map<int, Row> rows_;
  bool track_ = true;
};

/// Rank of the span of `columns`.
inline int rank_of(const std::vector<SparseVec>& columns) {
  Echelon e(false);
  int tag = 0;
  for (const auto& c : columns) e.insert(c, tag++);
  return e.rank();
}

}  // namespace wdq
