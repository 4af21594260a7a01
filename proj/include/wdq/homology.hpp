#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wdq/derham.hpp"

namespace wdq {

/// Finite-dimensional unital algebra given by exact structure constants.
/// Basis index 0 is the unit. When built over a Whitney model the basis is
/// (level-k quotient basis) * h^k for k = 0..K, and products are truncated
/// at h^K.
class FiniteAlgebra {
 public:
  struct BasisElement {
    int hbar = 0;
    MultiIndex alpha;
  };

  FiniteAlgebra(std::vector<std::string> labels, std::vector<SparseVec> table, std::string descriptor)
      : labels_(std::move(labels)), descriptor_(std::move(descriptor)), lazy_(std::make_shared<Lazy>()) {
    const std::size_t n = labels_.size();
    if (n == 0) throw std::invalid_argument("algebra must be nonzero");
    if (table.size() != n * n) throw std::invalid_argument("product table has the wrong size");
    for (auto& entry : table) lazy_->table.emplace_back(std::move(entry));
    for (int a = 0; a < dim(); ++a)
      if (product(0, a) != SparseVec{{a, Scalar(1)}} || product(a, 0) != SparseVec{{a, Scalar(1)}})
        throw std::invalid_argument("basis element 0 is not a unit");
  }

  /// The ground field.
  static FiniteAlgebra scalars() { return FiniteAlgebra({"1"}, {SparseVec{{0, Scalar(1)}}}, "scalars"); }

  /// Truncated Whitney algebra of `model` with h-window [0, K]; deformed by
  /// the induced star product when `fd` is given, else pointwise. Structure
  /// constants are computed on first use.
  static FiniteAlgebra whitney(const ModelPtr& model, int K, const FedosovData* fd) {
    if (K < 0) throw std::invalid_argument("h window must be nonnegative");
    if (fd) {
      if (fd->policy.hbar_min != 0) throw std::invalid_argument("finite algebras need hbar_min = 0");
      if (fd->policy.hbar_order < K) throw std::invalid_argument("h window exceeds the star product's order");
      if (fd->conn.dim() != model->dim()) throw std::invalid_argument("dimension mismatch");
    }
    std::vector<BasisElement> basis;
    std::vector<int> offsets;
    for (int k = 0; k <= K; ++k) {
      offsets.push_back(static_cast<int>(basis.size()));
      for (const auto& a : model->level(k).basis()) basis.push_back({k, a});
    }
    if (basis.empty() || basis[0].hbar != 0 || basis[0].alpha.total() != 0)
      throw std::invalid_argument("quotient has no unit");
    const int n = static_cast<int>(basis.size());
    const int dim = model->dim();
    std::vector<std::string> labels;
    for (const auto& b : basis) {
      std::string mono = base_monomial(dim, b.alpha).str();
      if (b.hbar == 0) labels.push_back(mono);
      else labels.push_back((mono == "1" ? std::string() : mono + "*") + (b.hbar == 1 ? "h" : "h^" + std::to_string(b.hbar)));
    }
    std::string desc = model->subset().name() + (fd ? " star(" + fd->conn.name() + ")" : " pointwise") +
                       " N_jet=" + std::to_string(model->jet_order()) + " K=" + std::to_string(K);
    FiniteAlgebra alg;
    alg.labels_ = std::move(labels);
    alg.descriptor_ = std::move(desc);
    alg.lazy_ = std::make_shared<Lazy>();
    alg.lazy_->table.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    alg.lazy_->quantized.resize(static_cast<std::size_t>(n));
    if (fd) alg.lazy_->fd = std::make_shared<const FedosovData>(*fd);
    alg.model_ = model;
    alg.basis_ = std::move(basis);
    alg.offsets_ = std::move(offsets);
    alg.hbar_window_ = K;
    alg.deformed_ = fd != nullptr;
    return alg;
  }

  int dim() const { return static_cast<int>(labels_.size()); }
  const std::string& descriptor() const { return descriptor_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const ModelPtr& model() const { return model_; }
  bool deformed() const { return deformed_; }
  int hbar_window() const { return hbar_window_; }
  const std::vector<BasisElement>& basis() const { return basis_; }

  const SparseVec& product(int a, int b) const {
    if (a < 0 || b < 0 || a >= dim() || b >= dim()) throw std::out_of_range("basis index out of range");
    auto& slot = lazy_->table[static_cast<std::size_t>(a) * static_cast<std::size_t>(dim()) + static_cast<std::size_t>(b)];
    if (!slot) slot = compute_product(a, b);
    return *slot;
  }

  SparseVec multiply(const SparseVec& u, const SparseVec& v) const {
    SparseVec out;
    for (const auto& [a, x] : u)
      for (const auto& [b, y] : v) axpy(out, x * y, product(a, b));
    return out;
  }

  bool is_associative() const {
    for (int a = 0; a < dim(); ++a)
      for (int b = 0; b < dim(); ++b)
        for (int c = 0; c < dim(); ++c) {
          SparseVec ec{{c, Scalar(1)}};
          SparseVec ea{{a, Scalar(1)}};
          if (multiply(product(a, b), ec) != multiply(ea, product(b, c))) return false;
        }
    return true;
  }

  bool is_commutative() const {
    for (int a = 0; a < dim(); ++a)
      for (int b = 0; b < a; ++b)
        if (product(a, b) != product(b, a)) return false;
    return true;
  }

  /// Basis element as a polynomial h-series.
  MixedElement element(int idx) const {
    require_model();
    const auto& b = basis_[static_cast<std::size_t>(idx)];
    return base_monomial(model_->dim(), b.alpha).shift_hbar(b.hbar);
  }

  int hbar_of(int idx) const { return basis_.empty() ? 0 : basis_[static_cast<std::size_t>(idx)].hbar; }

  /// Coordinates of a polynomial h-series; powers above the window are dropped.
  SparseVec coords_of(const MixedElement& f) const {
    require_model();
    SparseVec out;
    for (int k = 0; k <= hbar_window_; ++k) {
      MixedElement c = hbar_coefficient(f, k);
      if (c.is_zero()) continue;
      for (const auto& [j, s] : model_->level(k).normal_form(c)) add_entry(out, offsets_[k] + j, s);
    }
    for (const auto& [key, c] : f.terms())
      if (key.hbar < 0) throw std::invalid_argument("negative h power in a finite algebra element");
    return out;
  }

  nlohmann::json describe() const {
    return {{"descriptor", descriptor_}, {"dim", dim()}, {"deformed", deformed_}, {"hbar_window", hbar_window_}};
  }

 private:
  struct Lazy {
    std::vector<std::optional<SparseVec>> table;
    std::vector<std::optional<MixedElement>> quantized;
    std::shared_ptr<const FedosovData> fd;
  };

  FiniteAlgebra() = default;

  void require_model() const {
    if (!model_) throw std::logic_error("algebra is not attached to a Whitney model");
  }

  const MixedElement& quantized(int a) const {
    auto& slot = lazy_->quantized[static_cast<std::size_t>(a)];
    if (!slot) slot = quantize(base_monomial(model_->dim(), basis_[static_cast<std::size_t>(a)].alpha), *lazy_->fd);
    return *slot;
  }

  SparseVec compute_product(int a, int b) const {
    require_model();
    const auto& ba = basis_[static_cast<std::size_t>(a)];
    const auto& bb = basis_[static_cast<std::size_t>(b)];
    const int shift = ba.hbar + bb.hbar;
    SparseVec out;
    if (shift > hbar_window_) return out;
    const int dim = model_->dim();
    MixedElement prod = lazy_->fd ? star_quantized(quantized(a), quantized(b), *lazy_->fd)
                                  : mul(base_monomial(dim, ba.alpha), base_monomial(dim, bb.alpha),
                                        TruncationPolicy::unbounded(dim / 2));
    for (int p = shift; p <= hbar_window_; ++p) {
      MixedElement c = hbar_coefficient(prod, p - shift);
      if (c.is_zero()) continue;
      for (const auto& [j, s] : model_->level(p).normal_form(c)) add_entry(out, offsets_[p] + j, s);
    }
    return out;
  }

  std::vector<std::string> labels_;
  std::string descriptor_;
  std::shared_ptr<Lazy> lazy_;
  ModelPtr model_;
  std::vector<BasisElement> basis_;
  std::vector<int> offsets_;
  int hbar_window_ = 0;
  bool deformed_ = false;
};

/// Hochschild chain: combination of (q+1)-tuples of basis indices. With the
/// normalized flag set, tuples carrying the unit (index 0) in positions
/// >= 1 are identified with zero.
class ChainVector {
 public:
  using Tuple = std::vector<int>;

  explicit ChainVector(int q, bool normalized = true) : q_(q), normalized_(normalized) {
    if (q < 0) throw std::invalid_argument("chain degree must be >= 0");
  }

  int q() const { return q_; }
  bool normalized() const { return normalized_; }
  const std::map<Tuple, Scalar>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  void add(const Tuple& t, const Scalar& c) {
    if (static_cast<int>(t.size()) != q_ + 1) throw std::invalid_argument("tuple length does not match degree");
    if (c.is_zero()) return;
    if (normalized_)
      for (std::size_t i = 1; i < t.size(); ++i)
        if (t[i] == 0) return;
    auto [it, fresh] = terms_.try_emplace(t, c);
    if (!fresh) {
      it->second += c;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  /// Adds c * (v_0 (x) v_1 (x) ... (x) v_q) for coordinate vectors v_i.
  void add_tensor(const std::vector<SparseVec>& factors, const Scalar& c) {
    if (static_cast<int>(factors.size()) != q_ + 1) throw std::invalid_argument("wrong number of factors");
    Tuple t(factors.size());
    std::function<void(std::size_t, Scalar)> rec = [&](std::size_t i, Scalar acc) {
      if (i == factors.size()) {
        add(t, acc);
        return;
      }
      for (const auto& [j, s] : factors[i]) {
        t[i] = j;
        rec(i + 1, acc * s);
      }
    };
    rec(0, c);
  }

  ChainVector& operator+=(const ChainVector& o) {
    check(o);
    for (const auto& [t, c] : o.terms_) add(t, c);
    return *this;
  }
  friend ChainVector operator+(ChainVector a, const ChainVector& b) { return a += b; }
  friend ChainVector operator-(ChainVector a, const ChainVector& b) {
    a.check(b);
    for (const auto& [t, c] : b.terms_) a.add(t, Scalar(0) - c);
    return a;
  }
  friend ChainVector operator*(const Scalar& s, const ChainVector& a) {
    ChainVector r(a.q_, a.normalized_);
    for (const auto& [t, c] : a.terms_) r.add(t, s * c);
    return r;
  }
  friend bool operator==(const ChainVector& a, const ChainVector& b) {
    return a.q_ == b.q_ && a.normalized_ == b.normalized_ && a.terms_ == b.terms_;
  }

  std::string str(const FiniteAlgebra& A) const {
    if (terms_.empty()) return "0";
    std::string out;
    for (const auto& [t, c] : terms_) {
      if (!out.empty()) out += " + ";
      out += "(" + c.str() + ")";
      for (std::size_t i = 0; i < t.size(); ++i) out += (i ? " (x) " : " ") + A.labels()[static_cast<std::size_t>(t[i])];
    }
    return out;
  }

 private:
  void check(const ChainVector& o) const {
    if (o.q_ != q_ || o.normalized_ != normalized_) throw std::invalid_argument("chains live in different spaces");
  }

  int q_;
  bool normalized_;
  std::map<Tuple, Scalar> terms_;
};

inline SparseVec unit_vector(int idx) { return SparseVec{{idx, Scalar(1)}}; }

/// b(a0..aq) = sum_{i<q} (-1)^i a0..(a_i a_{i+1})..aq + (-1)^q (aq a0) a1..a_{q-1}.
inline ChainVector hochschild_b(const ChainVector& c, const FiniteAlgebra& A) {
  if (c.q() < 1) throw std::invalid_argument("b needs degree >= 1");
  const int q = c.q();
  ChainVector out(q - 1, c.normalized());
  for (const auto& [t, coef] : c.terms()) {
    for (int i = 0; i < q; ++i) {
      std::vector<SparseVec> f;
      for (int j = 0; j < i; ++j) f.push_back(unit_vector(t[static_cast<std::size_t>(j)]));
      f.push_back(A.product(t[static_cast<std::size_t>(i)], t[static_cast<std::size_t>(i + 1)]));
      for (int j = i + 2; j <= q; ++j) f.push_back(unit_vector(t[static_cast<std::size_t>(j)]));
      out.add_tensor(f, i % 2 == 0 ? coef : Scalar(0) - coef);
    }
    std::vector<SparseVec> f{A.product(t[static_cast<std::size_t>(q)], t[0])};
    for (int j = 1; j < q; ++j) f.push_back(unit_vector(t[static_cast<std::size_t>(j)]));
    out.add_tensor(f, q % 2 == 0 ? coef : Scalar(0) - coef);
  }
  return out;
}

/// Normalized Connes operator B(a0..aq) = sum_i (-1)^{qi} 1 (x) a_i..a_q (x) a_0..a_{i-1}.
inline ChainVector connes_B(const ChainVector& c, const FiniteAlgebra& A) {
  if (!c.normalized()) throw std::invalid_argument("B is defined on the normalized complex");
  (void)A;
  const int q = c.q();
  ChainVector out(q + 1, true);
  for (const auto& [t, coef] : c.terms())
    for (int i = 0; i <= q; ++i) {
      ChainVector::Tuple s{0};
      for (int j = i; j <= q; ++j) s.push_back(t[static_cast<std::size_t>(j)]);
      for (int j = 0; j < i; ++j) s.push_back(t[static_cast<std::size_t>(j)]);
      out.add(s, (q * i) % 2 == 0 ? coef : Scalar(0) - coef);
    }
  return out;
}

/// mu(f0..fq) = (1/q!) f0 df1 ^ ... ^ dfq restricted to tuples of total h
/// power p (h stripped), as a q-form with de Rham weighting shifted by p.
inline WhitneyForm mu(const ChainVector& c, const FiniteAlgebra& A, int p = 0) {
  if (!A.model()) throw std::logic_error("mu needs an algebra over a Whitney model");
  const int dim = A.model()->dim();
  TruncationPolicy loose = TruncationPolicy::unbounded(dim / 2);
  MixedElement sum(dim);
  for (const auto& [t, coef] : c.terms()) {
    int power = 0;
    for (int idx : t) power += A.hbar_of(idx);
    if (power != p) continue;
    MixedElement term = A.element(t[0]).shift_hbar(-A.hbar_of(t[0]));
    for (std::size_t i = 1; i < t.size(); ++i) {
      MixedElement fi = A.element(t[i]).shift_hbar(-A.hbar_of(t[i]));
      term = mul(term, exterior_d(fi, loose), loose);
    }
    sum += coef * term;
  }
  sum *= Scalar(Rational(Rational(1) / factorial(static_cast<unsigned>(c.q()))));
  return WhitneyForm::from_element(sum, A.model(), c.q(), FormSchedule::de_rham(p));
}

namespace detail {

inline void permutations_with_sign(int q, const std::function<void(const std::vector<int>&, int)>& visit) {
  std::vector<int> perm(static_cast<std::size_t>(q));
  for (int i = 0; i < q; ++i) perm[static_cast<std::size_t>(i)] = i;
  do {
    int inversions = 0;
    for (int i = 0; i < q; ++i)
      for (int j = i + 1; j < q; ++j)
        if (perm[static_cast<std::size_t>(i)] > perm[static_cast<std::size_t>(j)]) ++inversions;
    visit(perm, inversions % 2 == 0 ? 1 : -1);
  } while (std::next_permutation(perm.begin(), perm.end()));
}

}  // namespace detail

/// eps(f0 df1 ^ ... ^ dfq) = sum_sigma sgn(sigma) f0 (x) f_sigma(1) (x) ... (x) f_sigma(q).
inline ChainVector antisymmetrize_decomposable(const MixedElement& f0, const std::vector<MixedElement>& fs,
                                               const FiniteAlgebra& A, bool normalized = true) {
  const int q = static_cast<int>(fs.size());
  ChainVector out(q, normalized);
  std::vector<SparseVec> coords;
  for (const auto& f : fs) coords.push_back(A.coords_of(f));
  const SparseVec c0 = A.coords_of(f0);
  detail::permutations_with_sign(q, [&](const std::vector<int>& perm, int sign) {
    std::vector<SparseVec> factors{c0};
    for (int i : perm) factors.push_back(coords[static_cast<std::size_t>(i)]);
    out.add_tensor(factors, Scalar(sign));
  });
  return out;
}

/// eps on a de Rham form with zero shift, componentwise on f dx_{s1} ^ ... ^ dx_{sq}.
inline ChainVector antisymmetrize(const WhitneyForm& w, const FiniteAlgebra& A, bool normalized = true) {
  if (!(w.schedule() == FormSchedule::de_rham())) throw std::invalid_argument("eps expects an unshifted de Rham form");
  if (w.model() != A.model()) throw std::invalid_argument("form and algebra over different models");
  ChainVector out(w.degree(), normalized);
  for (const auto& [s, c] : w.components())
    out += antisymmetrize_decomposable(c.representative(), coordinate_factors(w.dim(), s), A, normalized);
  return out;
}

/// Chain with h^p part only.
inline ChainVector hbar_part(const ChainVector& c, const FiniteAlgebra& A, int p) {
  ChainVector out(c.q(), c.normalized());
  for (const auto& [t, coef] : c.terms()) {
    int power = 0;
    for (int idx : t) power += A.hbar_of(idx);
    if (power == p) out.add(t, coef);
  }
  return out;
}

struct E1ProbeResult {
  WhitneyForm output;  ///< mu of the h^1 part of b(eps(omega))
  WhitneyForm delta;   ///< Brylinski delta of omega, same truncation
  std::optional<Scalar> kappa;  ///< output = kappa * delta, when delta != 0
  bool proportional = false;
};

/// First differential of the h-filtration on eps(f0 df1 ^ ... ^ dfq).
inline E1ProbeResult e1_probe(const MixedElement& f0, const std::vector<MixedElement>& fs, const FiniteAlgebra& A,
                              const PoissonTensor& pt) {
  if (fs.empty()) throw std::invalid_argument("probe needs degree >= 1");
  if (!A.deformed() || A.hbar_window() < 1) throw std::invalid_argument("probe needs a deformed algebra with h^1");
  const int q = static_cast<int>(fs.size());
  ChainVector eps = antisymmetrize_decomposable(f0, fs, A);
  ChainVector bc = hochschild_b(eps, A);
  if (!hbar_part(bc, A, 0).is_zero()) throw std::logic_error("h^0 part of b(eps) is nonzero");
  WhitneyForm out = mu(hbar_part(bc, A, 1), A, 1);
  // Both sides compared where delta of an unshifted de Rham form lands.
  MixedElement omega = f0;
  TruncationPolicy loose = TruncationPolicy::unbounded(pt.n());
  for (const auto& f : fs) omega = mul(omega, exterior_d(f, loose), loose);
  WhitneyForm w = WhitneyForm::from_element(omega, A.model(), q);
  WhitneyForm del = brylinski_delta(w, pt);
  E1ProbeResult r{out.coarsen(del.schedule()), del, std::nullopt, false};
  if (del.is_zero()) {
    r.proportional = r.output.is_zero();
    return r;
  }
  // kappa from any nonzero coordinate, then verified on all of them.
  const auto& [mask, cls] = *del.components().begin();
  const auto& [j, dv] = *cls.coords().begin();
  Scalar ov;
  auto oc = r.output.component(mask).coords();
  if (auto it = oc.find(j); it != oc.end()) ov = it->second;
  Scalar kappa = ov / dv;
  r.kappa = kappa;
  r.proportional = r.output == kappa * del;
  return r;
}

/// Single constant fitting a sequence of probes.
struct KappaFit {
  std::optional<Scalar> kappa;
  int trials = 0;
  int informative = 0;
  bool consistent = true;

  void absorb(const E1ProbeResult& r) {
    ++trials;
    if (!r.proportional) consistent = false;
    if (!r.kappa) return;
    ++informative;
    if (!kappa) kappa = r.kappa;
    else if (!(*kappa == *r.kappa)) consistent = false;
  }
};

struct HochschildDegree {
  int q = 0;
  long chain_dim = 0;
  long rank_b = 0;  ///< rank of b : C_q -> C_{q-1}
  long homology = 0;
};

struct HochschildReport {
  nlohmann::json algebra;
  std::vector<HochschildDegree> degrees;
  bool normalized = true;

  std::vector<long> dims() const {
    std::vector<long> out;
    for (const auto& d : degrees) out.push_back(d.homology);
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["algebra"] = algebra;
    j["normalized_complex"] = normalized;
    j["caveat"] = "truncated-algebra homology; not the h-localized untruncated homology";
    j["degrees"] = nlohmann::json::array();
    for (const auto& d : degrees)
      j["degrees"].push_back({{"q", d.q}, {"dim_C", d.chain_dim}, {"rank_b", d.rank_b}, {"homology", d.homology}});
    return j;
  }
};

constexpr int kMaxHochschildAlgebraDim = 12;
constexpr int kMaxHochschildDegree = 3;

/// Exact Hochschild homology of a small algebra in degrees 0..q_max,
/// computed on the normalized complex.
inline HochschildReport hochschild_dims(const FiniteAlgebra& A, int q_max) {
  if (A.dim() > kMaxHochschildAlgebraDim) throw std::invalid_argument("algebra exceeds the Hochschild guardrail (dim <= 12)");
  if (q_max < 0 || q_max > kMaxHochschildDegree) throw std::invalid_argument("q_max must lie in [0, 3]");
  const int n = A.dim();
  auto chain_dim = [n](int q) {
    long d = n;
    for (int i = 0; i < q; ++i) d *= (n - 1);
    return d;
  };
  auto index_of = [n](const ChainVector::Tuple& t) {
    long idx = t[0];
    for (std::size_t i = 1; i < t.size(); ++i) idx = idx * (n - 1) + (t[i] - 1);
    return idx;
  };
  std::vector<long> rank(static_cast<std::size_t>(q_max + 2), 0);
  for (int q = 1; q <= q_max + 1; ++q) {
    Echelon e(false);
    ChainVector::Tuple t(static_cast<std::size_t>(q + 1));
    const long total = chain_dim(q);
    for (long idx = 0; idx < total; ++idx) {
      long r = idx;
      for (int i = q; i >= 1; --i) {
        t[static_cast<std::size_t>(i)] = static_cast<int>(r % (n - 1)) + 1;
        r /= (n - 1);
      }
      t[0] = static_cast<int>(r);
      ChainVector c(q, true);
      c.add(t, Scalar(1));
      SparseVec v;
      const ChainVector bc = hochschild_b(c, A);
      for (const auto& [s, coef] : bc.terms()) v[static_cast<int>(index_of(s))] = coef;
      e.insert(v, static_cast<int>(idx));
    }
    rank[static_cast<std::size_t>(q)] = e.rank();
  }
  HochschildReport rep;
  rep.algebra = A.describe();
  for (int q = 0; q <= q_max; ++q) {
    HochschildDegree d;
    d.q = q;
    d.chain_dim = chain_dim(q);
    d.rank_b = rank[static_cast<std::size_t>(q)];
    d.homology = d.chain_dim - d.rank_b - rank[static_cast<std::size_t>(q + 1)];
    rep.degrees.push_back(d);
  }
  return rep;
}

/// Random chain of degree q with small integer coefficients.
inline ChainVector random_chain(const FiniteAlgebra& A, int q, std::mt19937_64& rng, int terms = 3,
                                bool normalized = true) {
  ChainVector c(q, normalized);
  std::uniform_int_distribution<int> any(0, A.dim() - 1);
  std::uniform_int_distribution<int> nonunit(A.dim() > 1 ? 1 : 0, A.dim() - 1);
  std::uniform_int_distribution<int> coef(-3, 3);
  for (int t = 0; t < terms; ++t) {
    ChainVector::Tuple tup{any(rng)};
    for (int i = 0; i < q; ++i) tup.push_back(normalized ? nonunit(rng) : any(rng));
    int v = coef(rng);
    c.add(tup, Scalar(v == 0 ? 1 : v));
  }
  return c;
}

}  // namespace wdq
