#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "wdq/fedosov.hpp"
#include "wdq/linalg.hpp"
#include "wdq/mixed_element.hpp"

namespace wdq {

/// Affine coordinate subspace point + span{e_t : t in directions}.
struct Germ {
  std::vector<Rational> point;
  FormMask directions = 0;  ///< bit t-1 set for direction e_t

  friend bool operator==(const Germ&, const Germ&) = default;
};

/// Finite union of affine coordinate subspaces with rational base points.
class SubsetModel {
 public:
  SubsetModel(int dim, std::vector<Germ> germs, std::string name = "custom")
      : dim_(dim), germs_(std::move(germs)), name_(std::move(name)) {
    if (dim < 2 || dim % 2 != 0 || dim > kMaxDim) throw std::invalid_argument("invalid subset dimension");
    if (germs_.empty()) throw std::invalid_argument("subset must have at least one germ");
    for (std::size_t a = 0; a < germs_.size(); ++a) {
      if (static_cast<int>(germs_[a].point.size()) != dim)
        throw std::invalid_argument("germ point has wrong dimension");
      if (germs_[a].directions >> dim) throw std::invalid_argument("germ direction out of range");
      for (std::size_t b = 0; b < a; ++b)
        if (germs_[a] == germs_[b]) throw std::invalid_argument("duplicate germ");
    }
  }

  static SubsetModel builtin(const std::string& name, int n) {
    const int dim = 2 * n;
    auto at = [dim](std::vector<long> coords, FormMask dirs) {
      Germ g;
      g.point.assign(static_cast<std::size_t>(dim), Rational(0));
      for (std::size_t j = 0; j < coords.size(); ++j) g.point[j] = Rational(coords[j]);
      g.directions = dirs;
      return g;
    };
    if (name == "point") return SubsetModel(dim, {at({}, 0)}, name);
    if (name == "axis") return SubsetModel(dim, {at({}, 0b1)}, name);
    if (name == "cross") return SubsetModel(dim, {at({}, 0b1), at({}, 0b10)}, name);
    if (name == "two-points") return SubsetModel(dim, {at({1}, 0), at({-1}, 0)}, name);
    if (name == "plane-in-r4") {
      if (n != 2) throw std::invalid_argument("plane-in-r4 requires n = 2");
      return SubsetModel(dim, {at({}, 0b11)}, name);
    }
    if (name == "whole-space") return SubsetModel(dim, {at({}, static_cast<FormMask>((1u << dim) - 1))}, name);
    throw std::invalid_argument("unknown subset: " + name);
  }

  static const std::vector<std::string>& catalogue() {
    static const std::vector<std::string> names{"point", "axis", "cross", "two-points", "plane-in-r4"};
    return names;
  }

  int dim() const { return dim_; }
  const std::vector<Germ>& germs() const { return germs_; }
  const std::string& name() const { return name_; }

  /// Union with one more germ.
  SubsetModel with_germ(const Germ& g) const {
    auto gs = germs_;
    gs.push_back(g);
    return SubsetModel(dim_, std::move(gs), name_ + "+germ");
  }

 private:
  int dim_;
  std::vector<Germ> germs_;
  std::string name_;
};

inline SubsetModel subset_from_json(const nlohmann::json& j) {
  int dim = j.at("dim").get<int>();
  std::vector<Germ> germs;
  for (const auto& gj : j.at("germs")) {
    Germ g;
    for (const auto& v : gj.at("point"))
      g.point.push_back(v.is_string() ? parse_rational(v.get<std::string>()) : Rational(v.get<long>()));
    for (int t : gj.at("directions").get<std::vector<int>>()) {
      if (t < 1 || t > dim) throw std::invalid_argument("germ direction out of range");
      g.directions |= static_cast<FormMask>(1u << (t - 1));
    }
    germs.push_back(std::move(g));
  }
  return SubsetModel(dim, std::move(germs), j.value("name", std::string("custom")));
}

inline nlohmann::json subset_to_json(const SubsetModel& x) {
  nlohmann::json j;
  j["name"] = x.name();
  j["dim"] = x.dim();
  j["germs"] = nlohmann::json::array();
  for (const auto& g : x.germs()) {
    nlohmann::json gj;
    gj["point"] = nlohmann::json::array();
    for (const auto& p : g.point) gj["point"].push_back(p.get_str());
    gj["directions"] = nlohmann::json::array();
    for (int t = 0; t < x.dim(); ++t)
      if ((g.directions >> t) & 1u) gj["directions"].push_back(t + 1);
    j["germs"].push_back(gj);
  }
  return j;
}

/// All exponent vectors of total degree `d` in `dim` variables, in
/// decreasing lexicographic order.
inline std::vector<MultiIndex> monomials_of_degree(int dim, int d) {
  std::vector<MultiIndex> out;
  MultiIndex cur;
  std::function<void(int, int)> rec = [&](int j, int left) {
    if (j == dim - 1) {
      cur[j] = static_cast<std::uint8_t>(left);
      out.push_back(cur);
      cur[j] = 0;
      return;
    }
    for (int v = left; v >= 0; --v) {
      cur[j] = static_cast<std::uint8_t>(v);
      rec(j + 1, left - v);
    }
    cur[j] = 0;
  };
  if (dim > 0) rec(0, d);
  return out;
}

inline MixedElement base_monomial(int dim, const MultiIndex& alpha, const Scalar& c = Scalar(1)) {
  Key k;
  k.alpha = alpha;
  return MixedElement::monomial(dim, k, c);
}

/// Per-germ truncation: jets of normal order <= order and total order
/// <= total. A negative order drops the germ's conditions entirely, so
/// every function is flat there.
struct GermCap {
  int order;
  int total;
  friend auto operator<=>(const GermCap&, const GermCap&) = default;
};

/// Polynomials modulo those whose truncated Taylor data vanishes on every
/// germ (measured from the germ's base point).
class JetSpace {
 public:
  struct Coord {
    int germ;
    MultiIndex gamma;
  };

  JetSpace(const SubsetModel& x, int level, int order, int total)
      : JetSpace(x, std::vector<GermCap>(x.germs().size(), GermCap{order, total}), level) {}

  JetSpace(const SubsetModel& x, std::vector<GermCap> caps, int level = -1)
      : dim_(x.dim()), level_(level), caps_(std::move(caps)), germs_(x.germs()) {
    if (caps_.size() != germs_.size()) throw std::invalid_argument("one cap per germ required");
    for (int g = 0; g < static_cast<int>(germs_.size()); ++g) {
      if (caps_[g].order < 0) continue;
      int cap = germ_cap(g);
      for (int d = 0; d <= cap; ++d)
        for (const auto& gamma : monomials_of_degree(dim_, d)) {
          if (normal_degree(g, gamma) > caps_[g].order) continue;
          coord_index_.emplace(std::make_pair(g, gamma), static_cast<int>(coords_.size()));
          coords_.push_back({g, gamma});
        }
    }
    // Spanning degree for the quotient: Hermite interpolation over distinct base points.
    std::set<std::vector<Rational>> points;
    int e = 0;
    for (int g = 0; g < static_cast<int>(germs_.size()); ++g) {
      if (caps_[g].order < 0) continue;
      points.insert(germs_[g].point);
      e = std::max(e, germ_cap(g));
    }
    const int np = static_cast<int>(points.size());
    probe_degree_ = np <= 1 ? e : (np - 1) * (e + 1) + e;
    const int full = static_cast<int>(coords_.size());
    for (int d = 0; d <= probe_degree_ && echelon_.rank() < full; ++d)
      for (const auto& alpha : monomials_of_degree(dim_, d)) {
        ++domain_dim_;
        if (echelon_.insert(jet_of_monomial(alpha, Scalar(1)), static_cast<int>(basis_.size()))) {
          basis_.push_back(alpha);
        } else {
          kernel_leads_.push_back(alpha);
        }
        if (echelon_.rank() == full) break;
      }
  }

  /// Level in the function tower, or -1 for a space built from explicit caps.
  int level() const { return level_; }
  const std::vector<GermCap>& caps() const { return caps_; }
  int dim() const { return static_cast<int>(basis_.size()); }
  int ambient_dim() const { return dim_; }
  bool empty() const { return basis_.empty(); }
  const std::vector<MultiIndex>& basis() const { return basis_; }
  const std::vector<Coord>& coords() const { return coords_; }
  /// Monomials examined while choosing the basis, and the ones rejected.
  long domain_dim() const { return domain_dim_; }
  const std::vector<MultiIndex>& kernel_leads() const { return kernel_leads_; }
  int probe_degree() const { return probe_degree_; }

  /// Exact Taylor data of a base polynomial on every germ.
  SparseVec jet(const MixedElement& p) const {
    SparseVec v;
    for (const auto& [k, c] : p.terms()) {
      if (k.beta.total() != 0 || k.forms != 0)
        throw std::invalid_argument("jet expects a base polynomial");
      SparseVec m = jet_of_monomial(k.alpha, c);
      for (const auto& [i, s] : m) add_entry(v, i, s);
    }
    return v;
  }

  bool is_flat(const MixedElement& p) const { return jet(p).empty(); }

  /// Coordinates of the class of `p` in the quotient basis.
  SparseVec normal_form(const MixedElement& p) const {
    auto red = echelon_.reduce(jet(p));
    if (!red.residual.empty()) throw std::logic_error("jet outside the span of the quotient basis");
    return red.coords;
  }

  /// The canonical representative sum_j coords_j x^{basis_j}.
  MixedElement representative(const SparseVec& coords) const {
    MixedElement r(dim_);
    for (const auto& [j, c] : coords) r += base_monomial(dim_, basis_[static_cast<std::size_t>(j)], c);
    return r;
  }

 private:
  int germ_cap(int g) const { return germs_[g].directions == 0 ? caps_[g].order : caps_[g].total; }
  int normal_degree(int g, const MultiIndex& gamma) const {
    int s = 0;
    for (int j = 0; j < dim_; ++j)
      if (!((germs_[g].directions >> j) & 1u)) s += gamma[j];
    return s;
  }

  SparseVec jet_of_monomial(const MultiIndex& alpha, const Scalar& c) const {
    SparseVec v;
    for (int g = 0; g < static_cast<int>(germs_.size()); ++g) {
      if (caps_[g].order < 0) continue;
      const auto& pt = germs_[g].point;
      const int order = caps_[g].order;
      const int cap = germ_cap(g);
      MultiIndex gamma;
      std::function<void(int, int, int, Scalar)> rec = [&](int j, int tot, int nrm, Scalar f) {
        if (tot > cap || nrm > order) return;
        if (j == dim_) {
          auto it = coord_index_.find(std::make_pair(g, gamma));
          if (it != coord_index_.end()) add_entry(v, it->second, f);
          return;
        }
        const bool normal = !((germs_[g].directions >> j) & 1u);
        const int a = alpha[j];
        if (sgn(pt[j]) == 0) {
          gamma[j] = static_cast<std::uint8_t>(a);
          rec(j + 1, tot + a, nrm + (normal ? a : 0), f);
        } else {
          for (int s = 0; s <= a; ++s) {
            gamma[j] = static_cast<std::uint8_t>(s);
            Rational w = binomial(static_cast<unsigned>(a), static_cast<unsigned>(s));
            Rational pw(1);
            for (int t = 0; t < a - s; ++t) pw *= pt[j];
            rec(j + 1, tot + s, nrm + (normal ? s : 0), f * Scalar(Rational(w * pw)));
          }
        }
        gamma[j] = 0;
      };
      rec(0, 0, 0, c);
    }
    return v;
  }

  int dim_;
  int level_;
  std::vector<GermCap> caps_;
  std::vector<Germ> germs_;
  std::vector<Coord> coords_;
  std::map<std::pair<int, MultiIndex>, int> coord_index_;
  std::vector<MultiIndex> basis_;
  std::vector<MultiIndex> kernel_leads_;
  Echelon echelon_;
  long domain_dim_ = 0;
  int probe_degree_ = 0;
};

/// The tower of truncated Whitney algebras of X. Level l keeps jets of
/// normal order jet_order - l and total order base_degree - l; every
/// derivative consumed (by d, a Poisson bracket, or a power of h in a star
/// product) moves one level up.
class WhitneyModel {
 public:
  WhitneyModel(SubsetModel x, int jet_order, int base_degree)
      : x_(std::move(x)), jet_order_(jet_order), base_degree_(base_degree), empty_(x_, jet_order + 1, -1, -1) {
    if (jet_order < 0) throw std::invalid_argument("jet order must be >= 0");
    if (base_degree < jet_order) throw std::invalid_argument("base degree must be >= jet order");
    for (int l = 0; l <= jet_order; ++l) levels_.emplace_back(x_, l, jet_order - l, base_degree - l);
  }

  /// Default tangential cap when the policy leaves the base degree unbounded.
  static int default_base_degree(int jet_order) { return 2 * jet_order + 2; }

  static std::shared_ptr<const WhitneyModel> make(const SubsetModel& x, const TruncationPolicy& policy) {
    int d = policy.base_degree == kUnbounded ? default_base_degree(policy.jet_order) : policy.base_degree;
    return std::make_shared<const WhitneyModel>(x, policy.jet_order, d);
  }

  const SubsetModel& subset() const { return x_; }
  int dim() const { return x_.dim(); }
  int jet_order() const { return jet_order_; }
  int base_degree() const { return base_degree_; }
  int max_level() const { return jet_order_; }

  const JetSpace& level(int l) const {
    if (l < 0) throw std::out_of_range("negative level");
    if (l > jet_order_) return empty_;
    return levels_[static_cast<std::size_t>(l)];
  }

  /// Quotient for explicit per-germ caps, built once and cached.
  const JetSpace& space(const std::vector<GermCap>& caps) const {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = cache_.find(caps);
    if (it == cache_.end()) it = cache_.emplace(caps, std::make_unique<JetSpace>(x_, caps)).first;
    return *it->second;
  }

 private:
  SubsetModel x_;
  int jet_order_;
  int base_degree_;
  std::vector<JetSpace> levels_;
  JetSpace empty_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::vector<GermCap>, std::unique_ptr<JetSpace>> cache_;
};

using ModelPtr = std::shared_ptr<const WhitneyModel>;

/// Element of a truncated Whitney quotient (a tower level or a capped space).
class WhitneyClass {
 public:
  WhitneyClass(ModelPtr model, int level, SparseVec coords = {})
      : model_(std::move(model)), space_(&model_->level(level)), level_(level), coords_(std::move(coords)) {}
  WhitneyClass(ModelPtr model, const JetSpace& space, SparseVec coords = {})
      : model_(std::move(model)), space_(&space), level_(space.level()), coords_(std::move(coords)) {}

  const ModelPtr& model() const { return model_; }
  const JetSpace& space() const { return *space_; }
  int level() const { return level_; }
  const SparseVec& coords() const { return coords_; }
  bool is_zero() const { return coords_.empty(); }

  MixedElement representative() const { return space_->representative(coords_); }

  /// The same function seen at a coarser level.
  WhitneyClass coarsen(int level) const {
    if (level_ < 0) throw std::invalid_argument("class is not in the level tower");
    if (level < level_) throw std::invalid_argument("cannot refine a class");
    if (level == level_) return *this;
    return {model_, level, model_->level(level).normal_form(representative())};
  }

  WhitneyClass& operator+=(const WhitneyClass& o) {
    check(o);
    axpy(coords_, Scalar(1), o.coords_);
    return *this;
  }
  WhitneyClass& operator-=(const WhitneyClass& o) {
    check(o);
    axpy(coords_, Scalar(-1), o.coords_);
    return *this;
  }
  friend WhitneyClass operator+(WhitneyClass a, const WhitneyClass& b) { return a += b; }
  friend WhitneyClass operator-(WhitneyClass a, const WhitneyClass& b) { return a -= b; }
  friend WhitneyClass operator*(const Scalar& s, const WhitneyClass& a) {
    return {a.model_, *a.space_, scaled(a.coords_, s)};
  }
  friend bool operator==(const WhitneyClass& a, const WhitneyClass& b) {
    return a.model_ == b.model_ && a.space_ == b.space_ && a.coords_ == b.coords_;
  }

  std::string str() const { return representative().str(); }

 private:
  void check(const WhitneyClass& o) const {
    if (o.model_ != model_ || o.space_ != space_)
      throw std::invalid_argument("classes live in different quotients");
  }

  ModelPtr model_;
  const JetSpace* space_;
  int level_;
  SparseVec coords_;
};

inline WhitneyClass project(const MixedElement& p, const ModelPtr& model, const JetSpace& space) {
  return {model, space, space.normal_form(p)};
}

/// Class of a base polynomial (no h) at `level`.
inline WhitneyClass project(const MixedElement& p, const ModelPtr& model, int level = 0) {
  return {model, level, model->level(level).normal_form(p)};
}

/// Class of p at level 0 for X under the policy's truncation.
inline WhitneyClass project(const MixedElement& p, const SubsetModel& x, const TruncationPolicy& policy) {
  return project(p, WhitneyModel::make(x, policy), 0);
}

/// Pointwise product of classes, at the coarser of the two levels.
inline WhitneyClass multiply(const WhitneyClass& a, const WhitneyClass& b) {
  if (a.model() != b.model()) throw std::invalid_argument("classes over different subsets");
  const int level = std::max(a.level(), b.level());
  TruncationPolicy loose = TruncationPolicy::unbounded(a.model()->dim() / 2);
  return project(mul(a.representative(), b.representative(), loose), a.model(), level);
}

inline bool flat_ideal_member(const MixedElement& p, const ModelPtr& model, int level = 0) {
  return model->level(level).is_flat(p);
}

inline bool flat_ideal_member(const MixedElement& p, const SubsetModel& x, const TruncationPolicy& policy) {
  return flat_ideal_member(p, WhitneyModel::make(x, policy), 0);
}

/// h-series of classes; the h^k coefficient lives at level base + k.
class WhitneySeries {
 public:
  WhitneySeries(ModelPtr model, int base_level) : model_(std::move(model)), base_(base_level) {}

  const ModelPtr& model() const { return model_; }
  int base_level() const { return base_; }
  const std::map<int, WhitneyClass>& coeffs() const { return coeffs_; }

  int level_of(int k) const { return base_ + k; }

  WhitneyClass coefficient(int k) const {
    auto it = coeffs_.find(k);
    return it == coeffs_.end() ? WhitneyClass(model_, level_of(k)) : it->second;
  }

  void add(int k, const WhitneyClass& c) {
    if (c.level() != level_of(k)) throw std::invalid_argument("series coefficient at the wrong level");
    if (c.is_zero()) return;
    auto it = coeffs_.find(k);
    if (it == coeffs_.end()) {
      coeffs_.emplace(k, c);
    } else {
      it->second += c;
      if (it->second.is_zero()) coeffs_.erase(it);
    }
  }

  friend WhitneySeries operator-(WhitneySeries a, const WhitneySeries& b) {
    for (const auto& [k, c] : b.coeffs_) a.add(k, Scalar(-1) * c);
    return a;
  }
  friend bool operator==(const WhitneySeries& a, const WhitneySeries& b) {
    return a.model_ == b.model_ && a.base_ == b.base_ && a.coeffs_ == b.coeffs_;
  }

  std::string str() const {
    if (coeffs_.empty()) return "0";
    std::string out;
    for (const auto& [k, c] : coeffs_) {
      if (!out.empty()) out += " + ";
      out += "[" + c.str() + "]";
      if (k == 1) out += "*h";
      if (k > 1) out += "*h^" + std::to_string(k);
    }
    return out;
  }

 private:
  ModelPtr model_;
  int base_;
  std::map<int, WhitneyClass> coeffs_;
};

/// Projects a base h-series; the h^k part goes to level base + k.
inline WhitneySeries project_series(const MixedElement& series, const ModelPtr& model, int base_level = 0,
                                    int max_hbar = kUnbounded) {
  WhitneySeries s(model, base_level);
  std::set<int> powers;
  for (const auto& [k, c] : series.terms()) {
    if (k.hbar < 0) throw std::invalid_argument("negative h powers have no Whitney level");
    powers.insert(k.hbar);
  }
  for (int k : powers) {
    if (k > max_hbar) continue;
    s.add(k, project(hbar_coefficient(series, k), model, base_level + k));
  }
  return s;
}

inline WhitneySeries as_series(const WhitneyClass& c) {
  WhitneySeries s(c.model(), c.level());
  s.add(0, c);
  return s;
}

/// Polynomial h-series representing a Whitney series.
inline MixedElement series_representative(const WhitneySeries& s) {
  MixedElement r(s.model()->dim());
  for (const auto& [k, c] : s.coeffs()) r += c.representative().shift_hbar(k);
  return r;
}

/// Star product on E(X)[[h]] induced from the ambient Fedosov star product:
/// multiply representatives, project each h-coefficient.
inline WhitneySeries induced_star(const WhitneySeries& F, const WhitneySeries& G, const FedosovData& fd) {
  if (F.model() != G.model()) throw std::invalid_argument("series over different subsets");
  const int base = std::max(F.base_level(), G.base_level());
  MixedElement prod = star(series_representative(F), series_representative(G), fd);
  return project_series(prod, F.model(), base, fd.policy.hbar_order);
}

inline WhitneySeries induced_star(const WhitneyClass& F, const WhitneyClass& G, const FedosovData& fd) {
  return induced_star(as_series(F), as_series(G), fd);
}

/// Global Whitney-Poisson bracket, one level coarser than its arguments.
inline WhitneyClass whitney_poisson(const WhitneyClass& F, const WhitneyClass& G, const PoissonTensor& pt) {
  if (F.model() != G.model()) throw std::invalid_argument("classes over different subsets");
  const int level = std::max(F.level(), G.level()) + 1;
  TruncationPolicy loose = TruncationPolicy::unbounded(pt.n());
  return project(base_poisson(F.representative(), G.representative(), pt, loose), F.model(), level);
}

/// Random base polynomial with small integer coefficients.
inline MixedElement random_polynomial(int dim, int max_degree, int terms, std::mt19937_64& rng,
                                      int coeff_range = 3) {
  std::uniform_int_distribution<int> deg(0, max_degree);
  std::uniform_int_distribution<int> coord(0, dim - 1);
  std::uniform_int_distribution<int> coef(-coeff_range, coeff_range);
  MixedElement p(dim);
  for (int t = 0; t < terms; ++t) {
    Key k;
    int d = deg(rng);
    for (int s = 0; s < d; ++s) ++k.alpha[coord(rng)];
    int c = coef(rng);
    if (c == 0) c = 1;
    p.add_term(k, Scalar(c));
  }
  return p;
}

/// Random element of the level-l flat ideal: p minus its canonical representative.
inline MixedElement random_flat(const ModelPtr& model, int level, int max_degree, int terms,
                                std::mt19937_64& rng) {
  const JetSpace& jl = model->level(level);
  MixedElement p = random_polynomial(model->dim(), max_degree, terms, rng);
  return p - jl.representative(jl.normal_form(p));
}

struct IdealStabilityTrial {
  bool passed = true;
  std::string detail;
};

struct IdealStabilityReport {
  int trials = 0;
  int passed = 0;
  int hbar_order = 0;
  std::vector<IdealStabilityTrial> entries;
  bool ok() const { return passed == trials; }
};

/// For random flat p and arbitrary q checks that c_k(p, q) and c_k(q, p)
/// are flat one level per power of h deeper (c_k differentiates each
/// argument at most k times).
inline IdealStabilityReport verify_ideal_stability(const FedosovData& fd, const ModelPtr& model, int trials,
                                                   std::mt19937_64& rng, int max_degree = 4) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  IdealStabilityReport rep;
  rep.hbar_order = fd.policy.hbar_order;
  const int dim = model->dim();
  const int flat_degree = std::max(max_degree, model->level(0).probe_degree() + 1);
  for (int t = 0; t < trials; ++t) {
    IdealStabilityTrial trial;
    MixedElement p = random_flat(model, 0, flat_degree, 4, rng);
    MixedElement q = random_polynomial(dim, max_degree, 3, rng);
    MixedElement qp = quantize(p, fd);
    MixedElement qq = quantize(q, fd);
    MixedElement left = star_quantized(qp, qq, fd);
    MixedElement right = star_quantized(qq, qp, fd);
    for (int k = 0; k <= fd.policy.hbar_order; ++k) {
      const JetSpace& jl = model->level(k);
      if (!jl.is_flat(hbar_coefficient(left, k)) || !jl.is_flat(hbar_coefficient(right, k))) {
        trial.passed = false;
        trial.detail = "c_" + std::to_string(k) + " of a flat element is not flat";
        break;
      }
    }
    ++rep.trials;
    if (trial.passed) ++rep.passed;
    rep.entries.push_back(std::move(trial));
  }
  return rep;
}

struct ExactSequenceWitness {
  long domain_dim = 0;
  long kernel_dim = 0;
  long quotient_dim = 0;
  bool kernel_flat = true;
  bool holds() const { return kernel_flat && domain_dim == kernel_dim + quotient_dim; }
};

/// Rank-nullity on the polynomials examined at `level`: every rejected
/// monomial yields an explicit flat element, and the rest map
/// isomorphically onto the quotient.
inline ExactSequenceWitness exact_sequence_witness(const ModelPtr& model, int level = 0) {
  const JetSpace& jl = model->level(level);
  ExactSequenceWitness w;
  w.domain_dim = jl.domain_dim();
  w.quotient_dim = jl.dim();
  std::set<MultiIndex> leads;
  for (const auto& alpha : jl.kernel_leads()) {
    MixedElement m = base_monomial(model->dim(), alpha);
    MixedElement flat = m - jl.representative(jl.normal_form(m));
    // The kernel element has x^alpha as a non-basis leading monomial, so
    // distinct alpha give independent kernel vectors.
    if (!jl.is_flat(flat) || flat.coefficient(Key{alpha, {}, 0, 0}) != Scalar(1)) w.kernel_flat = false;
    leads.insert(alpha);
  }
  w.kernel_dim = static_cast<long>(leads.size());
  return w;
}

}  // namespace wdq
