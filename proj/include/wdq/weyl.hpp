#pragma once

#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "wdq/mixed_element.hpp"

namespace wdq {

/// Dense square matrix of scalars, row major.
struct ScalarMatrix {
  int size = 0;
  std::vector<Scalar> data;

  ScalarMatrix() = default;
  explicit ScalarMatrix(int n) : size(n), data(static_cast<std::size_t>(n * n)) {}

  Scalar& operator()(int i, int j) { return data[static_cast<std::size_t>(i * size + j)]; }
  const Scalar& operator()(int i, int j) const {
    return data[static_cast<std::size_t>(i * size + j)];
  }
  friend bool operator==(const ScalarMatrix&, const ScalarMatrix&) = default;
};

inline ScalarMatrix operator*(const ScalarMatrix& a, const ScalarMatrix& b) {
  ScalarMatrix r(a.size);
  for (int i = 0; i < a.size; ++i)
    for (int k = 0; k < a.size; ++k) {
      if (a(i, k).is_zero()) continue;
      for (int j = 0; j < a.size; ++j) r(i, j) += a(i, k) * b(k, j);
    }
  return r;
}

inline Scalar determinant(ScalarMatrix m) {
  const int n = m.size;
  Scalar det(1);
  for (int col = 0; col < n; ++col) {
    int pivot = -1;
    for (int r = col; r < n; ++r)
      if (!m(r, col).is_zero()) {
        pivot = r;
        break;
      }
    if (pivot < 0) return Scalar(0);
    if (pivot != col) {
      for (int j = 0; j < n; ++j) std::swap(m(pivot, j), m(col, j));
      det = Scalar(0) - det;
    }
    det = det * m(col, col);
    for (int r = col + 1; r < n; ++r) {
      if (m(r, col).is_zero()) continue;
      Scalar f = m(r, col) / m(col, col);
      for (int j = col; j < n; ++j) m(r, j) -= f * m(col, j);
    }
  }
  return det;
}

/// Gauss-Jordan inverse; throws std::domain_error when singular.
inline ScalarMatrix inverse(ScalarMatrix m) {
  const int n = m.size;
  ScalarMatrix inv(n);
  for (int i = 0; i < n; ++i) inv(i, i) = Scalar(1);
  for (int col = 0; col < n; ++col) {
    int pivot = -1;
    for (int r = col; r < n; ++r)
      if (!m(r, col).is_zero()) {
        pivot = r;
        break;
      }
    if (pivot < 0) throw std::domain_error("singular matrix");
    if (pivot != col)
      for (int j = 0; j < n; ++j) {
        std::swap(m(pivot, j), m(col, j));
        std::swap(inv(pivot, j), inv(col, j));
      }
    Scalar p = m(col, col);
    for (int j = 0; j < n; ++j) {
      m(col, j) /= p;
      inv(col, j) /= p;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col || m(r, col).is_zero()) continue;
      Scalar f = m(r, col);
      for (int j = 0; j < n; ++j) {
        m(r, j) -= f * m(col, j);
        inv(r, j) -= f * inv(col, j);
      }
    }
  }
  return inv;
}

/// Constant Poisson bivector pi^{ij} = {x^i, x^j} and its inverse omega.
class PoissonTensor {
 public:
  struct Entry {
    int i;
    int j;
    Scalar value;
  };

  /// Validates antisymmetry and invertibility.
  explicit PoissonTensor(ScalarMatrix pi) : pi_(std::move(pi)) {
    if (pi_.size < 2 || pi_.size % 2 != 0 || pi_.size > kMaxDim)
      throw std::invalid_argument("Poisson tensor must be 2n x 2n with 2n <= 8");
    for (int i = 0; i < pi_.size; ++i)
      for (int j = 0; j < pi_.size; ++j)
        if (pi_(i, j) != -pi_(j, i)) throw std::invalid_argument("Poisson tensor is not antisymmetric");
    try {
      omega_ = inverse(pi_);
    } catch (const std::domain_error&) {
      throw std::invalid_argument("Poisson tensor is not invertible");
    }
    for (int i = 0; i < pi_.size; ++i)
      for (int j = 0; j < pi_.size; ++j)
        if (!pi_(i, j).is_zero()) entries_.push_back({i, j, pi_(i, j)});
  }

  /// Darboux tensor with {x_{2a-1}, x_{2a}} = 1.
  static PoissonTensor darboux(int n) {
    ScalarMatrix pi(2 * n);
    for (int a = 0; a < n; ++a) {
      pi(2 * a, 2 * a + 1) = Scalar(1);
      pi(2 * a + 1, 2 * a) = Scalar(-1);
    }
    return PoissonTensor(std::move(pi));
  }

  int n() const { return pi_.size / 2; }
  int dim() const { return pi_.size; }
  const ScalarMatrix& pi() const { return pi_; }
  /// omega * pi = identity.
  const ScalarMatrix& omega() const { return omega_; }
  const std::vector<Entry>& entries() const { return entries_; }

  friend bool operator==(const PoissonTensor& a, const PoissonTensor& b) { return a.pi_ == b.pi_; }

 private:
  ScalarMatrix pi_;
  ScalarMatrix omega_;
  std::vector<Entry> entries_;
};

struct WeightedPair {
  Scalar weight;
  MixedElement left;
  MixedElement right;
};

/// pi^{ij} (d/dy_i a) (x) (d/dy_j b) as a list of weighted pairs.
inline std::vector<WeightedPair> pi_hat(const MixedElement& a, const MixedElement& b,
                                        const PoissonTensor& pt) {
  a.same_dim(b);
  if (a.dim() != pt.dim()) throw std::invalid_argument("dimension mismatch with Poisson tensor");
  std::vector<WeightedPair> out;
  for (const auto& e : pt.entries()) {
    MixedElement l = partial(a, Variable::Fiber, e.i + 1);
    if (l.is_zero()) continue;
    MixedElement r = partial(b, Variable::Fiber, e.j + 1);
    if (r.is_zero()) continue;
    out.push_back({e.value, std::move(l), std::move(r)});
  }
  return out;
}

namespace detail {

enum class MoyalMode { Product, Commutator, FiberFree };

struct FiberTerm {
  MultiIndex beta;
  int order;  // power of h produced by the contraction
  Scalar coeff;
};

/// y^beta o y^gamma (or its commutator) as a list of fiber monomials.
inline std::vector<FiberTerm> fiber_moyal(const MultiIndex& beta, const MultiIndex& gamma,
                                          const PoissonTensor& pt, int max_order, MoyalMode mode) {
  std::vector<FiberTerm> out;
  // Only the full contraction survives, and it needs |beta| = |gamma|.
  const int full = beta.total();
  if (mode == MoyalMode::FiberFree && (full != gamma.total() || full > max_order)) return out;
  std::map<std::pair<MultiIndex, MultiIndex>, Scalar> current;
  current.emplace(std::make_pair(beta, gamma), Scalar(1));
  const Scalar step = Scalar(Rational(0), Rational(-1, 2));  // -i/2
  Scalar prefactor(1);
  for (int k = 0; !current.empty() && k <= max_order; ++k) {
    if (k > 0) prefactor = prefactor * step / Scalar(k);
    bool emit = mode == MoyalMode::Product || (mode == MoyalMode::Commutator && k % 2 == 1) ||
                (mode == MoyalMode::FiberFree && k == full);
    if (emit) {
      Scalar f = mode == MoyalMode::Commutator ? prefactor * Scalar(2) : prefactor;
      for (const auto& [uv, c] : current) out.push_back({uv.first + uv.second, k, c * f});
    }
    std::map<std::pair<MultiIndex, MultiIndex>, Scalar> next;
    for (const auto& [uv, c] : current) {
      for (const auto& e : pt.entries()) {
        int ue = uv.first[e.i];
        int ve = uv.second[e.j];
        if (ue == 0 || ve == 0) continue;
        auto key = uv;
        key.first[e.i] = static_cast<std::uint8_t>(ue - 1);
        key.second[e.j] = static_cast<std::uint8_t>(ve - 1);
        Scalar v = c * e.value * Scalar(ue * ve);
        auto [it, ins] = next.try_emplace(key, v);
        if (!ins) {
          it->second += v;
          if (it->second.is_zero()) next.erase(it);
        }
      }
    }
    current = std::move(next);
  }
  return out;
}

inline MixedElement moyal_impl(const MixedElement& a, const MixedElement& b, const PoissonTensor& pt,
                               const TruncationPolicy& policy, MoyalMode mode) {
  a.same_dim(b);
  if (a.dim() != pt.dim()) throw std::invalid_argument("dimension mismatch with Poisson tensor");
  using Group = std::vector<std::pair<const Key*, const Scalar*>>;
  std::map<MultiIndex, Group> ga, gb;
  for (const auto& [k, c] : a.terms()) ga[k.beta].push_back({&k, &c});
  for (const auto& [k, c] : b.terms()) gb[k.beta].push_back({&k, &c});

  MixedElement r(a.dim());
  for (const auto& [beta, ta] : ga) {
    int min_ha = kUnbounded;
    for (auto& t : ta) min_ha = std::min<int>(min_ha, t.first->hbar);
    for (const auto& [gamma, tb] : gb) {
      int min_hb = kUnbounded;
      for (auto& t : tb) min_hb = std::min<int>(min_hb, t.first->hbar);
      // Moyal preserves the Fedosov degree, so pairs above the cap vanish.
      long max_order = static_cast<long>(policy.hbar_order) - min_ha - min_hb;
      if (max_order < 0) continue;
      std::vector<FiberTerm> fiber =
          fiber_moyal(beta, gamma, pt, static_cast<int>(std::min<long>(max_order, 64)), mode);
      if (fiber.empty()) continue;
      for (const auto& [ka, ca] : ta) {
        for (const auto& [kb, cb] : tb) {
          int sign = wedge_sign(ka->forms, kb->forms);
          if (sign == 0) continue;
          if (ka->fedosov_degree() + kb->fedosov_degree() > policy.fedosov_order) continue;
          Scalar cab = (*ca) * (*cb);
          if (sign < 0) cab = -cab;
          Key base;
          base.alpha = ka->alpha + kb->alpha;
          base.forms = ka->forms | kb->forms;
          for (const auto& ft : fiber) {
            Key k = base;
            k.beta = ft.beta;
            k.hbar = static_cast<std::int16_t>(ka->hbar + kb->hbar + ft.order);
            if (!policy.admits(k)) continue;
            r.add_term(k, cab * ft.coeff);
          }
        }
      }
    }
  }
  return r;
}

}  // namespace detail

/// Weyl-symmetric Moyal product sum_k ((-ih/2)^k / k!) mu(pi_hat^k(a (x) b)),
/// extended to form-valued elements with the Koszul sign.
inline MixedElement moyal(const MixedElement& a, const MixedElement& b, const PoissonTensor& pt,
                          const TruncationPolicy& policy) {
  return detail::moyal_impl(a, b, pt, policy, detail::MoyalMode::Product);
}

/// Fiber-degree-zero part of a o b.
inline MixedElement moyal_fiber_free(const MixedElement& a, const MixedElement& b, const PoissonTensor& pt,
                                     const TruncationPolicy& policy) {
  return detail::moyal_impl(a, b, pt, policy, detail::MoyalMode::FiberFree);
}

/// Graded commutator a o b - (-1)^{|a||b|} b o a (the plain commutator on 0-forms).
inline MixedElement star_commutator(const MixedElement& a, const MixedElement& b,
                                    const PoissonTensor& pt, const TruncationPolicy& policy) {
  return detail::moyal_impl(a, b, pt, policy, detail::MoyalMode::Commutator);
}

/// (i/h) [a, b]. Computed with one extra h order and two extra Fedosov
/// degrees so that the division by h loses nothing inside the caps.
inline MixedElement i_over_hbar_commutator(const MixedElement& a, const MixedElement& b,
                                           const PoissonTensor& pt,
                                           const TruncationPolicy& policy) {
  TruncationPolicy wide = policy;
  if (wide.hbar_order != kUnbounded) wide.hbar_order += 1;
  if (wide.fedosov_order != kUnbounded) wide.fedosov_order += 2;
  MixedElement c = star_commutator(a, b, pt, wide);
  MixedElement r = c.shift_hbar(-1);
  r *= Scalar::i();
  return r.truncated(policy);
}

/// Fiber Poisson bracket pi^{ij} d/dy_i a d/dy_j b.
inline MixedElement fiber_poisson(const MixedElement& a, const MixedElement& b,
                                  const PoissonTensor& pt, const TruncationPolicy& policy) {
  MixedElement r(a.dim());
  for (const auto& e : pt.entries()) {
    MixedElement l = partial(a, Variable::Fiber, e.i + 1);
    if (l.is_zero()) continue;
    r += e.value * mul(l, partial(b, Variable::Fiber, e.j + 1), policy);
  }
  return r;
}

/// Base Poisson bracket pi^{ij} d/dx_i f d/dx_j g.
inline MixedElement base_poisson(const MixedElement& f, const MixedElement& g,
                                 const PoissonTensor& pt, const TruncationPolicy& policy) {
  MixedElement r(f.dim());
  for (const auto& e : pt.entries()) {
    MixedElement l = partial(f, Variable::Base, e.i + 1);
    if (l.is_zero()) continue;
    r += e.value * mul(l, partial(g, Variable::Base, e.j + 1), policy);
  }
  return r;
}

namespace detail {

inline MixedElement swap_base_fiber(const MixedElement& a) {
  MixedElement r(a.dim());
  for (const auto& [key, c] : a.terms()) {
    Key k = key;
    std::swap(k.alpha, k.beta);
    r.add_term(k, c);
  }
  return r;
}

}  // namespace detail

/// Moyal product of base functions, sum_k ((-ih/2)^k / k!) Pi^{i1j1}..Pi^{ikjk}
/// d_{i1..ik} f d_{j1..jk} g, up to h^{policy.hbar_order}.
inline MixedElement base_moyal(const MixedElement& f, const MixedElement& g, const PoissonTensor& pt,
                               const TruncationPolicy& policy) {
  for (const auto* a : {&f, &g})
    for (const auto& [k, c] : a->terms())
      if (k.beta.total() != 0 || k.forms != 0) throw std::invalid_argument("base Moyal expects base functions");
  TruncationPolicy p = TruncationPolicy::unbounded(pt.n());
  p.hbar_order = policy.hbar_order;
  p.hbar_min = policy.hbar_min;
  return detail::swap_base_fiber(moyal(detail::swap_base_fiber(f), detail::swap_base_fiber(g), pt, p));
}

inline constexpr int kInfiniteDegree = kUnbounded;

/// min{ s + 2k : a_{s,k} != 0 }, kInfiniteDegree for zero.
inline int fedosov_degree(const MixedElement& a) {
  int m = kInfiniteDegree;
  for (const auto& [k, c] : a.terms()) m = std::min(m, k.fedosov_degree());
  return m;
}

/// delta(a) = sum_i dx^i ^ d/dy_i a.
inline MixedElement delta_op(const MixedElement& a) {
  MixedElement r(a.dim());
  for (const auto& [k, c] : a.terms()) {
    for (int j = 0; j < a.dim(); ++j) {
      int e = k.beta[j];
      if (e == 0) continue;
      FormMask bit = static_cast<FormMask>(1u << j);
      int sign = wedge_sign(bit, k.forms);
      if (sign == 0) continue;
      Key nk = k;
      nk.beta[j] = static_cast<std::uint8_t>(e - 1);
      nk.forms = k.forms | bit;
      r.add_term(nk, c * Scalar(sign * e));
    }
  }
  return r;
}

/// delta^{-1}: on fiber degree s, form degree t with s + t > 0 acts as
/// (1/(s+t)) sum_i y^i i(d/dx^i); annihilates the (0,0) part.
inline MixedElement delta_inv(const MixedElement& a) {
  MixedElement r(a.dim());
  for (const auto& [k, c] : a.terms()) {
    int t = form_degree(k.forms);
    int s = k.beta.total();
    if (t == 0) continue;
    Scalar w = c / Scalar(s + t);
    for (int j = 0; j < a.dim(); ++j) {
      if (!((k.forms >> j) & 1u)) continue;
      int below = std::popcount(static_cast<unsigned>(k.forms) & ((1u << j) - 1u));
      Key nk = k;
      nk.forms = static_cast<FormMask>(k.forms & ~(1u << j));
      nk.beta[j] = static_cast<std::uint8_t>(k.beta[j] + 1);
      r.add_term(nk, (below % 2) ? -w : w);
    }
  }
  return r;
}

}  // namespace wdq
