#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <climits>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wdq/scalar.hpp"

namespace wdq {

/// Largest supported ambient dimension 2n.
inline constexpr int kMaxDim = 8;
inline constexpr int kUnbounded = INT_MAX / 4;

/// Exponent vector over the 2n coordinates of either the base or the fiber.
struct MultiIndex {
  std::array<std::uint8_t, kMaxDim> e{};

  int total() const {
    int s = 0;
    for (auto v : e) s += v;
    return s;
  }
  std::uint8_t& operator[](int j) { return e[static_cast<std::size_t>(j)]; }
  std::uint8_t operator[](int j) const { return e[static_cast<std::size_t>(j)]; }
  bool divides(const MultiIndex& o) const {
    for (int j = 0; j < kMaxDim; ++j)
      if (e[j] > o.e[j]) return false;
    return true;
  }
  friend MultiIndex operator+(const MultiIndex& a, const MultiIndex& b) {
    MultiIndex r;
    for (int j = 0; j < kMaxDim; ++j) {
      int v = a.e[j] + b.e[j];
      if (v > 255) throw std::overflow_error("exponent overflow");
      r.e[j] = static_cast<std::uint8_t>(v);
    }
    return r;
  }
  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
  friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;
};

using FormMask = std::uint16_t;

inline int form_degree(FormMask m) { return std::popcount(static_cast<unsigned>(m)); }

/// Sign of dx^S ^ dx^T relative to the sorted wedge of S u T; zero on overlap.
inline int wedge_sign(FormMask s, FormMask t) {
  if ((s & t) != 0) return 0;
  int swaps = 0;
  for (int j = 0; j < kMaxDim; ++j)
    if (t & (1u << j)) swaps += std::popcount(static_cast<unsigned>(s) >> (j + 1));
  return (swaps % 2) ? -1 : 1;
}

/// A single monomial x^alpha y^beta h^k dx^S.
struct Key {
  MultiIndex alpha;
  MultiIndex beta;
  std::int16_t hbar = 0;
  FormMask forms = 0;

  int fedosov_degree() const { return beta.total() + 2 * hbar; }
  friend bool operator==(const Key&, const Key&) = default;
};

/// Canonical term order: hbar ascending, form degree, form set, then
/// higher total degree first, then reverse lexicographic exponents.
struct KeyOrder {
  bool operator()(const Key& a, const Key& b) const {
    if (a.hbar != b.hbar) return a.hbar < b.hbar;
    int fa = form_degree(a.forms), fb = form_degree(b.forms);
    if (fa != fb) return fa < fb;
    if (a.forms != b.forms) return a.forms < b.forms;
    int da = a.alpha.total() + a.beta.total();
    int db = b.alpha.total() + b.beta.total();
    if (da != db) return da > db;
    if (a.alpha != b.alpha) return a.alpha > b.alpha;
    return a.beta > b.beta;
  }
};

/// All truncation orders of a computation.
///
/// `jet_order` is the flatness order of Whitney jets, `base_degree` caps
/// x-degree plus form degree of stored terms, `fedosov_order` caps
/// |beta| + 2k and [hbar_min, hbar_order] is the admitted window of h powers.
struct TruncationPolicy {
  int n = 1;
  int jet_order = 4;
  int base_degree = kUnbounded;
  int fedosov_order = 8;
  int hbar_order = 3;
  int hbar_min = 0;

  int dim() const { return 2 * n; }

  bool admits(const Key& k) const {
    if (k.hbar > hbar_order || k.hbar < hbar_min) return false;
    if (k.fedosov_degree() > fedosov_order) return false;
    if (base_degree != kUnbounded && k.alpha.total() + form_degree(k.forms) > base_degree)
      return false;
    return true;
  }

  /// Base-degree cap for k-forms under the degree schedule.
  int base_cap(int form_deg) const {
    return base_degree == kUnbounded ? kUnbounded : base_degree - form_deg;
  }

  void validate() const {
    if (n < 1 || 2 * n > kMaxDim) throw std::invalid_argument("half-dimension out of range");
    if (jet_order < 0) throw std::invalid_argument("jet order must be >= 0");
    if (base_degree < 0) throw std::invalid_argument("base degree must be >= 0");
    if (fedosov_order < 0) throw std::invalid_argument("Fedosov order must be >= 0");
    if (hbar_min > hbar_order) throw std::invalid_argument("empty hbar window");
  }

  /// Caps loose enough that no admissible input term is ever dropped.
  static TruncationPolicy unbounded(int n) {
    TruncationPolicy p;
    p.n = n;
    p.jet_order = kUnbounded;
    p.fedosov_order = kUnbounded;
    p.hbar_order = kUnbounded;
    p.hbar_min = -kUnbounded;
    return p;
  }

  friend bool operator==(const TruncationPolicy&, const TruncationPolicy&) = default;
};

enum class Variable { Base, Fiber };

/// Sparse element of the polynomial Weyl-bundle form algebra.
class MixedElement {
 public:
  using Terms = std::map<Key, Scalar, KeyOrder>;

  MixedElement() = default;
  explicit MixedElement(int dim) : dim_(dim) {
    if (dim < 0 || dim > kMaxDim || dim % 2 != 0)
      throw std::invalid_argument("ambient dimension must be even and <= 8");
  }

  static MixedElement constant(int dim, const Scalar& c) {
    MixedElement e(dim);
    e.add_term(Key{}, c);
    return e;
  }
  static MixedElement monomial(int dim, const Key& k, const Scalar& c = Scalar(1)) {
    MixedElement e(dim);
    e.check_key(k);
    e.add_term(k, c);
    return e;
  }
  static MixedElement x(int dim, int j) { return generator(dim, Variable::Base, j); }
  static MixedElement y(int dim, int j) { return generator(dim, Variable::Fiber, j); }
  static MixedElement dx(int dim, int j) {
    MixedElement e(dim);
    e.check_index(j);
    Key k;
    k.forms = static_cast<FormMask>(1u << (j - 1));
    e.add_term(k, Scalar(1));
    return e;
  }
  static MixedElement hbar(int dim, int power = 1) {
    Key k;
    k.hbar = static_cast<std::int16_t>(power);
    return monomial(dim, k);
  }

  int dim() const { return dim_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  Scalar coefficient(const Key& k) const {
    auto it = terms_.find(k);
    return it == terms_.end() ? Scalar() : it->second;
  }

  void add_term(const Key& k, const Scalar& c) {
    if (c.is_zero()) return;
    auto [it, inserted] = terms_.try_emplace(k, c);
    if (!inserted) {
      it->second += c;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  MixedElement& operator+=(const MixedElement& o) {
    same_dim(o);
    for (const auto& [k, c] : o.terms_) add_term(k, c);
    return *this;
  }
  MixedElement& operator-=(const MixedElement& o) {
    same_dim(o);
    for (const auto& [k, c] : o.terms_) add_term(k, -c);
    return *this;
  }
  MixedElement& operator*=(const Scalar& s) {
    if (s.is_zero()) {
      terms_.clear();
      return *this;
    }
    for (auto& [k, c] : terms_) c *= s;
    return *this;
  }
  friend MixedElement operator+(MixedElement a, const MixedElement& b) { return a += b; }
  friend MixedElement operator-(MixedElement a, const MixedElement& b) { return a -= b; }
  friend MixedElement operator-(MixedElement a) { return a *= Scalar(-1); }
  friend MixedElement operator*(const Scalar& s, MixedElement a) { return a *= s; }
  friend MixedElement operator*(MixedElement a, const Scalar& s) { return a *= s; }

  friend bool operator==(const MixedElement& a, const MixedElement& b) {
    return a.dim_ == b.dim_ && a.terms_ == b.terms_;
  }

  /// Keeps only the terms admitted by `policy`.
  MixedElement truncated(const TruncationPolicy& policy) const {
    MixedElement r(dim_);
    for (const auto& [k, c] : terms_)
      if (policy.admits(k)) r.terms_.emplace_hint(r.terms_.end(), k, c);
    return r;
  }

  /// Keeps the terms satisfying `pred`.
  template <class Pred>
  MixedElement filtered(Pred&& pred) const {
    MixedElement r(dim_);
    for (const auto& [k, c] : terms_)
      if (pred(k)) r.terms_.emplace_hint(r.terms_.end(), k, c);
    return r;
  }

  /// Multiplies every term by h^power.
  MixedElement shift_hbar(int power) const {
    MixedElement r(dim_);
    for (const auto& [k, c] : terms_) {
      Key nk = k;
      nk.hbar = static_cast<std::int16_t>(k.hbar + power);
      r.terms_.emplace(nk, c);
    }
    return r;
  }

  int max_form_degree() const {
    int m = 0;
    for (const auto& [k, c] : terms_) m = std::max(m, form_degree(k.forms));
    return m;
  }
  int min_hbar() const {
    int m = kUnbounded;
    for (const auto& [k, c] : terms_) m = std::min<int>(m, k.hbar);
    return m;
  }

  /// Canonical text in key order, e.g. "x1*x2 + (-1/2*i)*h".
  std::string str() const;

  void same_dim(const MixedElement& o) const {
    if (o.dim_ != dim_) throw std::invalid_argument("dimension mismatch");
  }
  void check_index(int j) const {
    if (j < 1 || j > dim_) throw std::out_of_range("variable index out of range");
  }

 private:
  static MixedElement generator(int dim, Variable v, int j) {
    MixedElement e(dim);
    e.check_index(j);
    Key k;
    (v == Variable::Base ? k.alpha : k.beta)[j - 1] = 1;
    e.add_term(k, Scalar(1));
    return e;
  }
  void check_key(const Key& k) const {
    for (int j = dim_; j < kMaxDim; ++j)
      if (k.alpha[j] || k.beta[j] || (k.forms >> j) & 1u)
        throw std::invalid_argument("key uses coordinates beyond the ambient dimension");
  }

  int dim_ = 0;
  Terms terms_;
};

/// Graded-commutative pointwise product: coefficients and h multiply,
/// exponents add, form sets wedge with the shuffle sign.
inline MixedElement mul(const MixedElement& a, const MixedElement& b,
                        const TruncationPolicy& policy) {
  a.same_dim(b);
  MixedElement r(a.dim());
  for (const auto& [ka, ca] : a.terms()) {
    for (const auto& [kb, cb] : b.terms()) {
      int sign = wedge_sign(ka.forms, kb.forms);
      if (sign == 0) continue;
      Key k;
      k.forms = ka.forms | kb.forms;
      k.hbar = static_cast<std::int16_t>(ka.hbar + kb.hbar);
      k.alpha = ka.alpha + kb.alpha;
      k.beta = ka.beta + kb.beta;
      if (!policy.admits(k)) continue;
      Scalar c = ca * cb;
      if (sign < 0) c = -c;
      r.add_term(k, c);
    }
  }
  return r;
}

/// Partial derivative in x_j or y_j (1-based).
inline MixedElement partial(const MixedElement& a, Variable kind, int j) {
  a.check_index(j);
  MixedElement r(a.dim());
  for (const auto& [k, c] : a.terms()) {
    const MultiIndex& idx = kind == Variable::Base ? k.alpha : k.beta;
    int e = idx[j - 1];
    if (e == 0) continue;
    Key nk = k;
    (kind == Variable::Base ? nk.alpha : nk.beta)[j - 1] = static_cast<std::uint8_t>(e - 1);
    r.add_term(nk, c * Scalar(e));
  }
  return r;
}

/// The component a_{s,k}: terms of fiber degree s and h power k.
inline MixedElement grade_filter(const MixedElement& a, int s, int k) {
  return a.filtered([&](const Key& key) { return key.beta.total() == s && key.hbar == k; });
}

/// Base exterior derivative d_x a = sum_k dx^k ^ d/dx^k a.
inline MixedElement exterior_d(const MixedElement& a, const TruncationPolicy& policy) {
  MixedElement r(a.dim());
  for (const auto& [k, c] : a.terms()) {
    for (int j = 0; j < a.dim(); ++j) {
      int e = k.alpha[j];
      if (e == 0) continue;
      FormMask bit = static_cast<FormMask>(1u << j);
      int sign = wedge_sign(bit, k.forms);
      if (sign == 0) continue;
      Key nk = k;
      nk.alpha[j] = static_cast<std::uint8_t>(e - 1);
      nk.forms = k.forms | bit;
      if (!policy.admits(nk)) continue;
      r.add_term(nk, c * Scalar(sign * e));
    }
  }
  return r;
}

namespace detail {

inline std::string monomial_str(const Key& k, int dim) {
  std::string out;
  auto append = [&](const std::string& s) {
    if (!out.empty()) out += "*";
    out += s;
  };
  for (int j = 0; j < dim; ++j) {
    if (k.alpha[j] == 0) continue;
    std::string v = "x" + std::to_string(j + 1);
    if (k.alpha[j] > 1) v += "^" + std::to_string(k.alpha[j]);
    append(v);
  }
  for (int j = 0; j < dim; ++j) {
    if (k.beta[j] == 0) continue;
    std::string v = "y" + std::to_string(j + 1);
    if (k.beta[j] > 1) v += "^" + std::to_string(k.beta[j]);
    append(v);
  }
  if (k.hbar != 0) {
    std::string v = "h";
    if (k.hbar < 0)
      v += "^(" + std::to_string(k.hbar) + ")";
    else if (k.hbar > 1)
      v += "^" + std::to_string(k.hbar);
    append(v);
  }
  std::string forms;
  for (int j = 0; j < dim; ++j) {
    if (!((k.forms >> j) & 1u)) continue;
    if (!forms.empty()) forms += "^";
    forms += "dx" + std::to_string(j + 1);
  }
  if (!forms.empty()) append(forms);
  return out;
}

}  // namespace detail

inline std::string MixedElement::str() const {
  if (terms_.empty()) return "0";
  std::string out;
  for (const auto& [k, c] : terms_) {
    if (!out.empty()) out += " + ";
    std::string mono = detail::monomial_str(k, dim_);
    if (mono.empty()) {
      std::string s = c.str();
      bool compound = !c.is_real() && sgn(c.re()) != 0;
      out += compound ? "(" + s + ")" : s;
    } else if (c.is_one()) {
      out += mono;
    } else {
      out += "(" + c.str() + ")*" + mono;
    }
  }
  return out;
}

}  // namespace wdq
