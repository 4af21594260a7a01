#pragma once

#include <array>
#include <bit>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "wdq/whitney.hpp"

namespace wdq {

/// All form index sets of size k among `dim` coordinates, increasing.
inline std::vector<FormMask> form_masks(int dim, int k) {
  std::vector<FormMask> out;
  for (unsigned m = 0; m < (1u << dim); ++m)
    if (std::popcount(m) == k) out.push_back(static_cast<FormMask>(m));
  return out;
}

inline FormMask full_mask(int dim) { return static_cast<FormMask>((1u << dim) - 1); }

/// Index involution i -> the unique j with Pi^{ij} != 0. Throws unless Pi is
/// coordinate aligned (one nonzero per row), which makes the symplectic
/// star send basis forms to basis forms.
inline std::array<int, kMaxDim> poisson_partner(const PoissonTensor& pt) {
  std::array<int, kMaxDim> partner{};
  for (int i = 0; i < pt.dim(); ++i) {
    int found = -1;
    for (int j = 0; j < pt.dim(); ++j)
      if (!pt.pi()(i, j).is_zero()) {
        if (found >= 0) throw std::invalid_argument("Whitney forms need a coordinate-aligned Poisson tensor");
        found = j;
      }
    partner[static_cast<std::size_t>(i)] = found;
  }
  return partner;
}

/// Truncation pattern for forms. Per germ with tangent directions T, the
/// coefficient of dx_S keeps normal order jet_order - shift - |W \ T| and
/// total order base_degree - shift - |W|, where W = S (de Rham weighting) or
/// W = complement(partner(S)) (Poisson weighting, the star image of the
/// former). Under de Rham weighting d keeps the shift and delta adds 2;
/// under Poisson weighting the roles swap.
struct FormSchedule {
  enum class Kind { DeRham, Poisson };
  Kind kind = Kind::DeRham;
  int shift = 0;
  std::array<int, kMaxDim> partner{};

  static FormSchedule de_rham(int shift = 0) { return {Kind::DeRham, shift, {}}; }
  static FormSchedule poisson(const PoissonTensor& pt, int shift = 0) {
    return {Kind::Poisson, shift, poisson_partner(pt)};
  }

  FormMask weight_mask(FormMask s, int dim) const {
    if (kind == Kind::DeRham) return s;
    FormMask img = 0;
    for (int j = 0; j < dim; ++j)
      if ((s >> j) & 1u) img |= static_cast<FormMask>(1u << partner[static_cast<std::size_t>(j)]);
    return static_cast<FormMask>(full_mask(dim) & ~img);
  }

  int weight_degree(int k, int dim) const { return kind == Kind::DeRham ? k : dim - k; }

  std::vector<GermCap> caps(const WhitneyModel& model, FormMask s) const {
    const FormMask w = weight_mask(s, model.dim());
    std::vector<GermCap> out;
    for (const auto& g : model.subset().germs()) {
      int normal = form_degree(static_cast<FormMask>(w & ~g.directions));
      out.push_back({model.jet_order() - shift - normal, model.base_degree() - shift - form_degree(w)});
    }
    return out;
  }

  FormSchedule shifted(int by) const {
    FormSchedule r = *this;
    r.shift += by;
    return r;
  }

  /// The schedule the symplectic star maps this one onto.
  FormSchedule dual(const PoissonTensor& pt) const {
    return kind == Kind::DeRham ? poisson(pt, shift) : de_rham(shift);
  }

  std::string str() const { return (kind == Kind::DeRham ? "de-rham+" : "poisson+") + std::to_string(shift); }

  friend bool operator==(const FormSchedule&, const FormSchedule&) = default;
};

inline MixedElement form_monomial(int dim, FormMask s, const MixedElement& coeff = MixedElement()) {
  Key k;
  k.forms = s;
  MixedElement dxs = MixedElement::monomial(dim, k, Scalar(1));
  if (coeff.dim() == 0) return dxs;
  return mul(coeff, dxs, TruncationPolicy::unbounded(dim / 2));
}

/// Whitney-de Rham k-form: one class per sorted index set.
class WhitneyForm {
 public:
  WhitneyForm(ModelPtr model, int degree, FormSchedule schedule = FormSchedule::de_rham())
      : model_(std::move(model)), degree_(degree), schedule_(schedule) {
    if (degree < 0 || degree > model_->dim()) throw std::invalid_argument("form degree out of range");
  }

  const JetSpace& space(FormMask s) const { return model_->space(schedule_.caps(*model_, s)); }

  /// Projects a homogeneous polynomial form coefficientwise.
  static WhitneyForm from_element(const MixedElement& rep, const ModelPtr& model, int degree,
                                  FormSchedule schedule = FormSchedule::de_rham()) {
    WhitneyForm w(model, degree, schedule);
    std::map<FormMask, MixedElement> split;
    for (const auto& [k, c] : rep.terms()) {
      if (k.beta.total() != 0 || k.hbar != 0) throw std::invalid_argument("expected a base form");
      if (form_degree(k.forms) != degree) throw std::invalid_argument("form is not homogeneous of the stated degree");
      Key base = k;
      base.forms = 0;
      auto it = split.try_emplace(k.forms, rep.dim()).first;
      it->second.add_term(base, c);
    }
    for (const auto& [s, coeff] : split) w.add(s, project(coeff, model, w.space(s)));
    return w;
  }

  const ModelPtr& model() const { return model_; }
  int degree() const { return degree_; }
  const FormSchedule& schedule() const { return schedule_; }
  int dim() const { return model_->dim(); }
  const std::map<FormMask, WhitneyClass>& components() const { return comps_; }
  bool is_zero() const { return comps_.empty(); }

  WhitneyClass component(FormMask s) const {
    auto it = comps_.find(s);
    return it == comps_.end() ? WhitneyClass(model_, space(s)) : it->second;
  }

  void add(FormMask s, const WhitneyClass& c) {
    if (form_degree(s) != degree_) throw std::invalid_argument("component has the wrong degree");
    if (c.model() != model_ || &c.space() != &space(s)) throw std::invalid_argument("component lives elsewhere");
    if (c.is_zero()) return;
    auto it = comps_.find(s);
    if (it == comps_.end()) {
      comps_.emplace(s, c);
    } else {
      it->second += c;
      if (it->second.is_zero()) comps_.erase(it);
    }
  }

  MixedElement representative() const {
    MixedElement r(dim());
    for (const auto& [s, c] : comps_) r += form_monomial(dim(), s, c.representative());
    return r;
  }

  /// Same form under a coarser truncation (larger shift, same weighting).
  WhitneyForm coarsen(const FormSchedule& target) const {
    if (target.kind != schedule_.kind || target.shift < schedule_.shift)
      throw std::invalid_argument("can only coarsen to a larger shift");
    return from_element(representative(), model_, degree_, target);
  }

  WhitneyForm& operator+=(const WhitneyForm& o) {
    check(o);
    for (const auto& [s, c] : o.comps_) add(s, c);
    return *this;
  }
  WhitneyForm& operator-=(const WhitneyForm& o) {
    check(o);
    for (const auto& [s, c] : o.comps_) add(s, Scalar(-1) * c);
    return *this;
  }
  friend WhitneyForm operator+(WhitneyForm a, const WhitneyForm& b) { return a += b; }
  friend WhitneyForm operator-(WhitneyForm a, const WhitneyForm& b) { return a -= b; }
  friend WhitneyForm operator*(const Scalar& s, const WhitneyForm& a) {
    WhitneyForm w(a.model_, a.degree_, a.schedule_);
    for (const auto& [m, c] : a.comps_) w.add(m, s * c);
    return w;
  }
  friend bool operator==(const WhitneyForm& a, const WhitneyForm& b) {
    return a.model_ == b.model_ && a.degree_ == b.degree_ && a.schedule_ == b.schedule_ && a.comps_ == b.comps_;
  }

  std::string str() const { return representative().str(); }

 private:
  void check(const WhitneyForm& o) const {
    if (o.model_ != model_ || o.degree_ != degree_ || !(o.schedule_ == schedule_))
      throw std::invalid_argument("forms live in different spaces");
  }

  ModelPtr model_;
  int degree_;
  FormSchedule schedule_;
  std::map<FormMask, WhitneyClass> comps_;
};

inline WhitneyForm function_form(const MixedElement& f, const ModelPtr& model,
                                 FormSchedule schedule = FormSchedule::de_rham()) {
  return WhitneyForm::from_element(f, model, 0, schedule);
}

/// Exterior derivative; the Poisson weighting loses two orders per d.
inline WhitneyForm d(const WhitneyForm& w) {
  if (w.degree() >= w.dim()) throw std::invalid_argument("d of a top-degree form");
  MixedElement rep = exterior_d(w.representative(), TruncationPolicy::unbounded(w.dim() / 2));
  const int by = w.schedule().kind == FormSchedule::Kind::DeRham ? 0 : 2;
  return WhitneyForm::from_element(rep, w.model(), w.degree() + 1, w.schedule().shifted(by));
}

/// det of the k x k matrix Pi(dx_{s_a}, dx_{t_b}).
inline Scalar lambda_pi_basis(FormMask s, FormMask t, const PoissonTensor& pt) {
  std::vector<int> a, b;
  for (int j = 0; j < pt.dim(); ++j) {
    if ((s >> j) & 1u) a.push_back(j);
    if ((t >> j) & 1u) b.push_back(j);
  }
  if (a.size() != b.size()) throw std::invalid_argument("lambda_pi needs equal degrees");
  const int k = static_cast<int>(a.size());
  ScalarMatrix m(k);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) m(r, c) = pt.pi()(a[static_cast<std::size_t>(r)], b[static_cast<std::size_t>(c)]);
  return determinant(m);
}

/// Lambda^k Pi pairing, as a function class at the first tower level that
/// both coefficient truncations dominate.
inline WhitneyClass lambda_pi(const WhitneyForm& a, const WhitneyForm& b, const PoissonTensor& pt) {
  if (a.degree() != b.degree()) throw std::invalid_argument("lambda_pi needs equal degrees");
  if (a.model() != b.model()) throw std::invalid_argument("forms over different subsets");
  const int dim = a.dim();
  const int level = std::max(a.schedule().shift + a.schedule().weight_degree(a.degree(), dim),
                             b.schedule().shift + b.schedule().weight_degree(b.degree(), dim));
  TruncationPolicy loose = TruncationPolicy::unbounded(pt.n());
  MixedElement sum(dim);
  for (const auto& [s, ca] : a.components())
    for (const auto& [t, cb] : b.components()) {
      Scalar det = lambda_pi_basis(s, t, pt);
      if (det.is_zero()) continue;
      sum += det * mul(ca.representative(), cb.representative(), loose);
    }
  return project(sum, a.model(), level);
}

/// nu = omega^n / n!, with omega(dx_i, dx_j) = (Pi^{-1})_{ji} so that nu = dx1^...^dx2n for Darboux Pi.
inline MixedElement volume_form(const PoissonTensor& pt) {
  const int dim = pt.dim();
  TruncationPolicy loose = TruncationPolicy::unbounded(pt.n());
  ScalarMatrix om = pt.omega();
  MixedElement omega(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j)
      if (!om(j, i).is_zero())
        omega += om(j, i) * mul(MixedElement::dx(dim, i + 1), MixedElement::dx(dim, j + 1), loose);
  MixedElement nu = MixedElement::constant(dim, Scalar(1));
  for (int a = 0; a < pt.n(); ++a) nu = mul(nu, omega, loose);
  return nu * Scalar(Rational(Rational(1) / factorial(static_cast<unsigned>(pt.n()))));
}

/// Star on basis forms, star(dx_S) = sum_T H[S][T] dx_T, solved from
/// dx_R ^ star(dx_S) = Lambda(dx_R, dx_S) nu for every basis R. Only
/// T = complement(R) pairs nontrivially with dx_R, so each unknown is
/// fixed by exactly one equation.
class HodgeTable {
 public:
  explicit HodgeTable(const PoissonTensor& pt) : dim_(pt.dim()) {
    const Key top{{}, {}, 0, full_mask(dim_)};
    const Scalar vol = volume_form(pt).coefficient(top);
    if (vol.is_zero()) throw std::logic_error("degenerate volume form");
    for (int k = 0; k <= dim_; ++k) {
      const auto basis = form_masks(dim_, k);
      for (FormMask s : basis) {
        auto& row = table_[s];
        for (FormMask r : basis) {
          Scalar rhs = lambda_pi_basis(r, s, pt) * vol;
          if (rhs.is_zero()) continue;
          FormMask t = static_cast<FormMask>(full_mask(dim_) & ~r);
          row[t] = rhs / Scalar(wedge_sign(r, t));
        }
      }
    }
  }

  const std::map<FormMask, Scalar>& image(FormMask s) const { return table_.at(s); }

 private:
  int dim_;
  std::map<FormMask, std::map<FormMask, Scalar>> table_;
};

inline WhitneyForm hodge_star(const WhitneyForm& w, const PoissonTensor& pt) {
  if (pt.dim() != w.dim()) throw std::invalid_argument("dimension mismatch");
  HodgeTable h(pt);
  WhitneyForm out(w.model(), w.dim() - w.degree(), w.schedule().dual(pt));
  for (const auto& [s, c] : w.components())
    for (const auto& [t, coeff] : h.image(s)) out.add(t, WhitneyClass(w.model(), out.space(t), scaled(c.coords(), coeff)));
  return out;
}

/// Brylinski boundary of f0 df1 ^ ... ^ dfq on representatives:
///   sum_i (-1)^{i+1} {f0, fi} df1..^i..dfq + sum_{i<j} (-1)^{i+j} f0 d{fi,fj} df1..^i..^j..dfq.
inline MixedElement brylinski_decomposable(const MixedElement& f0, const std::vector<MixedElement>& fs,
                                           const PoissonTensor& pt) {
  const int q = static_cast<int>(fs.size());
  if (q < 1) throw std::invalid_argument("delta needs degree >= 1");
  TruncationPolicy loose = TruncationPolicy::unbounded(pt.n());
  auto wedge_d = [&](MixedElement acc, int skip1, int skip2) {
    for (int t = 0; t < q; ++t)
      if (t != skip1 && t != skip2) acc = mul(acc, exterior_d(fs[static_cast<std::size_t>(t)], loose), loose);
    return acc;
  };
  MixedElement out(pt.dim());
  for (int i = 0; i < q; ++i) {
    Scalar sign(i % 2 == 0 ? 1 : -1);
    out += sign * wedge_d(base_poisson(f0, fs[static_cast<std::size_t>(i)], pt, loose), i, -1);
  }
  for (int i = 0; i < q; ++i)
    for (int j = i + 1; j < q; ++j) {
      Scalar sign((i + j) % 2 == 0 ? 1 : -1);
      MixedElement br = base_poisson(fs[static_cast<std::size_t>(i)], fs[static_cast<std::size_t>(j)], pt, loose);
      out += sign * wedge_d(mul(f0, exterior_d(br, loose), loose), i, j);
    }
  return out;
}

/// Coordinate functions x_{s1}, ..., x_{sk} of a form index set.
inline std::vector<MixedElement> coordinate_factors(int dim, FormMask s) {
  std::vector<MixedElement> fs;
  for (int j = 0; j < dim; ++j)
    if ((s >> j) & 1u) fs.push_back(MixedElement::x(dim, j + 1));
  return fs;
}

/// Brylinski delta through the two-sum formula on f dx_{s1} ^ ... ^ dx_{sk}.
inline WhitneyForm brylinski_delta(const WhitneyForm& w, const PoissonTensor& pt) {
  if (w.degree() < 1) throw std::invalid_argument("delta of a 0-form");
  MixedElement out(w.dim());
  for (const auto& [s, c] : w.components())
    out += brylinski_decomposable(c.representative(), coordinate_factors(w.dim(), s), pt);
  const int by = w.schedule().kind == FormSchedule::Kind::DeRham ? 2 : 0;
  return WhitneyForm::from_element(out, w.model(), w.degree() - 1, w.schedule().shifted(by));
}

/// (-1)^{k+1} * d * route.
inline WhitneyForm brylinski_delta_via_star(const WhitneyForm& w, const PoissonTensor& pt) {
  if (w.degree() < 1) throw std::invalid_argument("delta of a 0-form");
  WhitneyForm r = hodge_star(d(hodge_star(w, pt)), pt);
  return (w.degree() % 2 == 1) ? r : Scalar(-1) * r;
}

/// Coordinates of a space of k-forms: blocks of quotient bases, one per mask.
struct FormSpace {
  struct Block {
    FormMask mask;
    const JetSpace* space;
    int offset;
  };
  std::vector<Block> blocks;
  int size = 0;
};

inline FormSpace form_space(const ModelPtr& model, int k, const FormSchedule& schedule) {
  FormSpace fs;
  for (FormMask s : form_masks(model->dim(), k)) {
    const JetSpace& sp = model->space(schedule.caps(*model, s));
    fs.blocks.push_back({s, &sp, fs.size});
    fs.size += sp.dim();
  }
  return fs;
}

inline SparseVec form_coords(const WhitneyForm& w, const FormSpace& fs) {
  SparseVec v;
  for (const auto& b : fs.blocks) {
    auto it = w.components().find(b.mask);
    if (it == w.components().end()) continue;
    for (const auto& [j, c] : it->second.coords()) v[b.offset + j] = c;
  }
  return v;
}

/// Basis form number `idx` of a form space.
inline WhitneyForm basis_form(const ModelPtr& model, int k, const FormSchedule& schedule, const FormSpace& fs,
                              int idx) {
  WhitneyForm w(model, k, schedule);
  for (const auto& b : fs.blocks)
    if (idx >= b.offset && idx < b.offset + b.space->dim()) {
      w.add(b.mask, WhitneyClass(model, *b.space, SparseVec{{idx - b.offset, Scalar(1)}}));
      return w;
    }
  throw std::out_of_range("basis index out of range");
}

namespace detail {

template <class Op>
long operator_rank(const ModelPtr& model, int k, const FormSchedule& schedule, int target_k,
                   const FormSchedule& target, Op op) {
  FormSpace src = form_space(model, k, schedule);
  FormSpace dst = form_space(model, target_k, target);
  Echelon e(false);
  for (int idx = 0; idx < src.size; ++idx) e.insert(form_coords(op(basis_form(model, k, schedule, src, idx)), dst), idx);
  return e.rank();
}

inline void require_full_schedule(const ModelPtr& model) {
  if (model->jet_order() < model->dim())
    throw std::invalid_argument("jet order must be at least 2n to hold every form degree");
}

}  // namespace detail

/// Betti numbers of the truncated Whitney-de Rham complex.
inline std::vector<long> cohomology_dims(const ModelPtr& model) {
  detail::require_full_schedule(model);
  const int dim = model->dim();
  const FormSchedule sch = FormSchedule::de_rham();
  std::vector<long> space, rank;
  for (int k = 0; k <= dim; ++k) {
    space.push_back(form_space(model, k, sch).size);
    rank.push_back(k < dim ? detail::operator_rank(model, k, sch, k + 1, sch, [](const WhitneyForm& w) { return d(w); })
                           : 0);
  }
  std::vector<long> betti;
  for (int k = 0; k <= dim; ++k)
    betti.push_back(space[static_cast<std::size_t>(k)] - rank[static_cast<std::size_t>(k)] -
                    (k > 0 ? rank[static_cast<std::size_t>(k - 1)] : 0));
  return betti;
}

inline std::vector<long> cohomology_dims(const SubsetModel& x, const TruncationPolicy& policy) {
  return cohomology_dims(WhitneyModel::make(x, policy));
}

/// Homology of (forms, delta) under the Poisson weighting.
inline std::vector<long> poisson_homology_dims(const ModelPtr& model, const PoissonTensor& pt) {
  detail::require_full_schedule(model);
  const int dim = model->dim();
  const FormSchedule sch = FormSchedule::poisson(pt);
  std::vector<long> space, rank;
  for (int k = 0; k <= dim; ++k) {
    space.push_back(form_space(model, k, sch).size);
    rank.push_back(k > 0 ? detail::operator_rank(model, k, sch, k - 1, sch,
                                                 [&pt](const WhitneyForm& w) { return brylinski_delta(w, pt); })
                         : 0);
  }
  std::vector<long> dims;
  for (int k = 0; k <= dim; ++k)
    dims.push_back(space[static_cast<std::size_t>(k)] - rank[static_cast<std::size_t>(k)] -
                   (k < dim ? rank[static_cast<std::size_t>(k + 1)] : 0));
  return dims;
}

inline std::vector<long> poisson_homology_dims(const SubsetModel& x, const PoissonTensor& pt,
                                               const TruncationPolicy& policy) {
  return poisson_homology_dims(WhitneyModel::make(x, policy), pt);
}

struct BettiTable {
  std::string subset;
  int jet_order = 0;
  int base_degree = 0;
  std::vector<long> de_rham;
  std::vector<long> poisson;

  /// dim H^delta_q == dim H^{2n-q}.
  bool duality_holds() const {
    if (poisson.size() != de_rham.size() || de_rham.empty()) return false;
    const std::size_t top = de_rham.size() - 1;
    for (std::size_t q = 0; q <= top; ++q)
      if (poisson[q] != de_rham[top - q]) return false;
    return true;
  }

  nlohmann::json to_json() const {
    return {{"subset", subset},   {"jet_order", jet_order}, {"base_degree", base_degree},
            {"de_rham", de_rham}, {"poisson", poisson},     {"duality", duality_holds()}};
  }

  std::string to_text() const {
    std::ostringstream os;
    os << "subset " << subset << " (jet order " << jet_order << ", base degree " << base_degree << ")\n";
    os << "   q     H^q  H^delta_q  H^(2n-q)\n";
    const std::size_t top = de_rham.size() - 1;
    for (std::size_t q = 0; q <= top; ++q)
      os << std::setw(4) << q << std::setw(8) << de_rham[q] << std::setw(11) << poisson[q] << std::setw(10)
         << de_rham[top - q] << "\n";
    os << "  duality: " << (duality_holds() ? "holds" : "FAILS") << "\n";
    return os.str();
  }
};

inline BettiTable betti_table(const ModelPtr& model, const PoissonTensor& pt) {
  BettiTable t;
  t.subset = model->subset().name();
  t.jet_order = model->jet_order();
  t.base_degree = model->base_degree();
  t.de_rham = cohomology_dims(model);
  t.poisson = poisson_homology_dims(model, pt);
  return t;
}

/// Random k-form with small integer coefficients on basis forms.
inline WhitneyForm random_form(const ModelPtr& model, int k, const FormSchedule& schedule, std::mt19937_64& rng,
                               int terms = 4) {
  FormSpace fs = form_space(model, k, schedule);
  WhitneyForm w(model, k, schedule);
  if (fs.size == 0) return w;
  std::uniform_int_distribution<int> pick(0, fs.size - 1);
  std::uniform_int_distribution<int> coef(-3, 3);
  for (int t = 0; t < terms; ++t) {
    int c = coef(rng);
    w += Scalar(c == 0 ? 1 : c) * basis_form(model, k, schedule, fs, pick(rng));
  }
  return w;
}

}  // namespace wdq
