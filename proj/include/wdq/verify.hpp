#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "wdq/homology.hpp"
#include "wdq/version.hpp"

namespace wdq {

/// Invalid configuration (exit code 2 at the command line).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command = "verify";
  std::string suite = "all";
  int n = 1;
  int jet_order = 4;
  int base_degree = -1;  ///< -1: 2 * jet_order + 2
  int fedosov_order = 6;
  int hbar_order = 3;
  int hbar_min = 0;
  std::string connection = "flat";
  std::string subset = "point";
  std::optional<nlohmann::json> poisson;
  std::uint64_t seed = 1;
  int trials = 10;
  std::string format = "json";
  std::string out;
  bool hochschild = false;
  int q_max = 2;

  TruncationPolicy policy() const {
    TruncationPolicy p;
    p.n = n;
    p.jet_order = jet_order;
    p.base_degree = base_degree < 0 ? kUnbounded : base_degree;
    p.fedosov_order = fedosov_order;
    p.hbar_order = hbar_order;
    p.hbar_min = hbar_min;
    return p;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"command", command},     {"suite", suite},       {"dim", n},
                     {"jet_order", jet_order}, {"fedosov_order", fedosov_order},
                     {"hbar_order", hbar_order}, {"hbar_min", hbar_min}, {"connection", connection},
                     {"subset", subset},       {"seed", seed},         {"trials", trials},
                     {"format", format},       {"hochschild", hochschild}, {"q_max", q_max}};
    j["base_degree"] = base_degree < 0 ? 2 * jet_order + 2 : base_degree;
    j["poisson"] = poisson ? *poisson : nlohmann::json(nullptr);
    return j;
  }

  /// Overwrites fields present in `j`; unknown keys are rejected.
  void merge_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    try {
      for (const auto& [key, v] : j.items()) {
        if (key == "command") command = v.get<std::string>();
        else if (key == "suite") suite = v.get<std::string>();
        else if (key == "dim") n = v.get<int>();
        else if (key == "jet_order") jet_order = v.get<int>();
        else if (key == "base_degree") base_degree = v.is_null() ? -1 : v.get<int>();
        else if (key == "fedosov_order") fedosov_order = v.get<int>();
        else if (key == "hbar_order") hbar_order = v.get<int>();
        else if (key == "hbar_min") hbar_min = v.get<int>();
        else if (key == "connection") connection = v.get<std::string>();
        else if (key == "subset") subset = v.get<std::string>();
        else if (key == "poisson") poisson = v.is_null() ? std::nullopt : std::optional<nlohmann::json>(v);
        else if (key == "seed") seed = v.get<std::uint64_t>();
        else if (key == "trials") trials = v.get<int>();
        else if (key == "format") format = v.get<std::string>();
        else if (key == "out") out = v.get<std::string>();
        else if (key == "hochschild") hochschild = v.get<bool>();
        else if (key == "q_max") q_max = v.get<int>();
        else throw ConfigError("unknown config key: " + key);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("bad config value: ") + e.what());
    }
  }

  void validate() const {
    try {
      policy().validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (format != "json" && format != "text") throw ConfigError("format must be json or text");
    if (base_degree >= 0 && base_degree < jet_order) throw ConfigError("base degree must be >= jet order");
    if (hbar_min != 0) throw ConfigError("verification and homology need hbar_min = 0");
    if (fedosov_order < 2 * hbar_order)
      throw ConfigError("fedosov order must be >= 2 * hbar order for exact star coefficients");
  }
};

namespace detail {

inline bool looks_like_file(const std::string& s) {
  return s.find('/') != std::string::npos || s.find(".json") != std::string::npos;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
}

}  // namespace detail

inline PoissonTensor poisson_from_json(const nlohmann::json& rows, int dim) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != dim) throw std::invalid_argument("poisson matrix has the wrong size");
  ScalarMatrix m(dim);
  for (int i = 0; i < dim; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<int>(row.size()) != dim) throw std::invalid_argument("poisson matrix has the wrong size");
    for (int j = 0; j < dim; ++j) {
      const auto& v = row[static_cast<std::size_t>(j)];
      m(i, j) = Scalar(v.is_string() ? parse_rational(v.get<std::string>()) : Rational(v.get<long>()));
    }
  }
  return PoissonTensor(m);
}

/// Connection named by the config (built-in or JSON file), with the Poisson override applied.
inline ConnectionInput resolve_connection(const RunConfig& cfg) {
  try {
    ConnectionInput conn = detail::looks_like_file(cfg.connection)
                               ? connection_from_json(detail::read_json_file(cfg.connection))
                               : ConnectionInput::builtin(cfg.connection, cfg.n);
    if (conn.dim() != 2 * cfg.n) throw ConfigError("connection dimension does not match --dim");
    if (cfg.poisson) {
      PoissonTensor pt = poisson_from_json(*cfg.poisson, 2 * cfg.n);
      ConnectionInput c(pt, conn.name());
      for (const auto& [idx, poly] : conn.entries()) c.set_gamma(idx[0], idx[1], idx[2], poly);
      conn = c;
    }
    if (!check_symplectic(conn)) throw ConfigError("connection is not torsion-free symplectic");
    return conn;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

inline SubsetModel resolve_subset(const RunConfig& cfg) {
  try {
    SubsetModel x = detail::looks_like_file(cfg.subset) ? subset_from_json(detail::read_json_file(cfg.subset))
                                                        : SubsetModel::builtin(cfg.subset, cfg.n);
    if (x.dim() != 2 * cfg.n) throw ConfigError("subset dimension does not match --dim");
    return x;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

/// Pass count of one named property over a number of trials.
struct Invariant {
  std::string name;
  int trials = 0;
  int passed = 0;
  std::string note;

  bool pass() const { return trials > 0 && passed == trials; }

  nlohmann::json to_json() const {
    nlohmann::json j{{"name", name}, {"trials", trials}, {"passed", passed}, {"status", pass() ? "pass" : "fail"}};
    if (!note.empty()) j["note"] = note;
    return j;
  }
};

/// Runs `trial` `count` times; an exception fails that trial and is noted.
inline Invariant run_trials(const std::string& name, int count, const std::function<bool(int)>& trial) {
  Invariant inv{name, 0, 0, {}};
  for (int t = 0; t < count; ++t) {
    ++inv.trials;
    try {
      if (trial(t)) ++inv.passed;
      else if (inv.note.empty()) inv.note = "first failure at trial " + std::to_string(t);
    } catch (const std::exception& e) {
      if (inv.note.empty()) inv.note = "trial " + std::to_string(t) + ": " + e.what();
    }
  }
  return inv;
}

/// Random element of the Weyl form algebra with small integer coefficients.
inline MixedElement random_weyl(int dim, std::mt19937_64& rng, int max_fiber = 3, int max_base = 2,
                                int max_forms = 1, int terms = 3) {
  std::uniform_int_distribution<int> coord(0, dim - 1);
  std::uniform_int_distribution<int> fib(0, max_fiber), bas(0, max_base), frm(0, max_forms), hb(0, 1);
  std::uniform_int_distribution<int> coef(-3, 3);
  MixedElement a(dim);
  for (int t = 0; t < terms; ++t) {
    Key k;
    for (int s = fib(rng); s > 0; --s) ++k.beta[coord(rng)];
    for (int s = bas(rng); s > 0; --s) ++k.alpha[coord(rng)];
    for (int s = frm(rng); s > 0; --s) k.forms |= static_cast<FormMask>(1u << coord(rng));
    k.hbar = static_cast<std::int16_t>(hb(rng));
    int c = coef(rng);
    a.add_term(k, Scalar(c == 0 ? 1 : c));
  }
  return a;
}

inline int hbar_order_of(const MixedElement& a) {
  int m = kUnbounded;
  for (const auto& [k, c] : a.terms()) m = std::min(m, static_cast<int>(k.hbar));
  return m;
}

namespace checks {

// ---------------------------------------------------------------- weyl

inline std::vector<Invariant> weyl(const PoissonTensor& pt, const TruncationPolicy& policy, int trials,
                                   std::mt19937_64& rng) {
  const int dim = pt.dim();
  std::vector<Invariant> out;
  out.push_back(run_trials("poisson_inverse", 1, [&](int) {
    ScalarMatrix id(dim);
    for (int i = 0; i < dim; ++i) id(i, i) = Scalar(1);
    return pt.omega() * pt.pi() == id;
  }));
  out.push_back(run_trials("canonical_commutator", 1, [&](int) {
    for (int i = 1; i <= dim; ++i)
      for (int j = 1; j <= dim; ++j) {
        MixedElement c = star_commutator(MixedElement::y(dim, i), MixedElement::y(dim, j), pt, policy);
        MixedElement want = (Scalar(0) - Scalar::i() * pt.pi()(i - 1, j - 1)) * MixedElement::hbar(dim);
        if (c != want.truncated(policy)) return false;
      }
    return true;
  }));
  out.push_back(run_trials("moyal_unit", trials, [&](int) {
    MixedElement a = random_weyl(dim, rng).truncated(policy);
    MixedElement one = MixedElement::constant(dim, Scalar(1));
    return moyal(one, a, pt, policy) == a && moyal(a, one, pt, policy) == a;
  }));
  out.push_back(run_trials("moyal_associativity", trials, [&](int) {
    MixedElement a = random_weyl(dim, rng), b = random_weyl(dim, rng), c = random_weyl(dim, rng);
    return moyal(moyal(a, b, pt, policy), c, pt, policy) == moyal(a, moyal(b, c, pt, policy), pt, policy);
  }));
  out.push_back(run_trials("graded_commutator_antisymmetry", trials, [&](int) {
    MixedElement a = random_weyl(dim, rng, 3, 2, 0), b = random_weyl(dim, rng, 3, 2, 0);
    return star_commutator(a, b, pt, policy) == Scalar(-1) * star_commutator(b, a, pt, policy);
  }));
  out.push_back(run_trials("delta_squared_zero", trials, [&](int) {
    MixedElement a = random_weyl(dim, rng, 3, 2, 2);
    return delta_op(delta_op(a)).is_zero() && delta_inv(delta_inv(a)).is_zero();
  }));
  out.push_back(run_trials("homotopy_identity", trials, [&](int) {
    MixedElement a = random_weyl(dim, rng, 3, 2, 2);
    MixedElement lhs = delta_op(delta_inv(a)) + delta_inv(delta_op(a));
    MixedElement a00 = a.filtered([](const Key& k) { return k.beta.total() == 0 && k.forms == 0; });
    return lhs == a - a00;
  }));
  out.push_back(run_trials("parser_roundtrip", trials, [&](int) {
    MixedElement a = random_weyl(dim, rng, 3, 2, 2);
    a += Scalar::ratio(1, 3) * Scalar::i() * MixedElement::hbar(dim);
    return parse_element(a.str(), TruncationPolicy::unbounded(dim / 2)) == a;
  }));
  return out;
}

// ------------------------------------------------------------- fedosov

struct StarSample {
  int max_degree = 4;
  int terms = 3;
};

inline std::vector<Invariant> star_axioms(const FedosovData& fd, int trials, std::mt19937_64& rng,
                                          StarSample sample = {}) {
  const int dim = fd.conn.dim();
  const int K = fd.policy.hbar_order;
  const PoissonTensor& pt = fd.conn.poisson();
  const TruncationPolicy loose = TruncationPolicy::unbounded(pt.n());
  auto poly = [&] { return random_polynomial(dim, sample.max_degree, sample.terms, rng); };
  std::vector<Invariant> out;
  out.push_back(run_trials("c0_is_pointwise_product", trials, [&](int) {
    MixedElement f = poly(), g = poly();
    return hbar_coefficient(star(f, g, fd), 0) == mul(f, g, loose);
  }));
  out.push_back(run_trials("unit_law", trials, [&](int) {
    MixedElement f = poly();
    MixedElement one = MixedElement::constant(dim, Scalar(1));
    return star(one, f, fd) == f && star(f, one, fd) == f;
  }));
  out.push_back(run_trials("associativity_mod_h^" + std::to_string(K + 1), trials, [&](int) {
    MixedElement f = poly(), g = poly(), h = poly();
    return star(star(f, g, fd), h, fd) == star(f, star(g, h, fd), fd);
  }));
  const int want = fd.conn.is_flat_input() ? 3 : 2;
  out.push_back(run_trials("commutator_matches_poisson", trials, [&](int) {
    MixedElement f = poly(), g = poly();
    MixedElement c = star(f, g, fd) - star(g, f, fd);
    c += Scalar::i() * base_poisson(f, g, pt, loose).shift_hbar(1);
    // Only orders below the truncation are meaningful.
    MixedElement kept = c.filtered([&](const Key& k) { return k.hbar <= K; });
    return kept.is_zero() || hbar_order_of(kept) >= std::min(want, K + 1);
  }));
  return out;
}

inline std::vector<Invariant> fedosov_structure(const FedosovData& fd, int trials, std::mt19937_64& rng,
                                                int flat_trials = -1) {
  const int dim = fd.conn.dim();
  if (flat_trials < 0) flat_trials = trials;
  std::vector<Invariant> out;
  out.push_back(run_trials("fedosov_curvature_noncentral_zero", 1, [&](int) { return fd.is_flat(); }));
  out.push_back(run_trials("D_squared_zero", trials, [&](int) {
    MixedElement a = random_weyl(dim, rng, 3, 2, 0).truncated(fd.policy);
    MixedElement dd = fedosov_D(fedosov_D(a, fd), fd);
    return dd.filtered([&](const Key& k) { return k.fedosov_degree() <= fd.policy.fedosov_order - 2; }).is_zero();
  }));
  out.push_back(run_trials("sigma_q_identity", trials, [&](int) {
    MixedElement f = random_polynomial(dim, 4, 3, rng);
    return symbol(quantize(f, fd)) == f.truncated(fd.policy);
  }));
  out.push_back(run_trials("q_sigma_identity_on_flat_sections", flat_trials, [&](int) {
    MixedElement a = quantize(random_polynomial(dim, 4, 3, rng), fd);
    return is_flat_section(a, fd) && quantize(symbol(a), fd) == a;
  }));
  return out;
}

inline Invariant flat_oracle(const FedosovData& fd, int trials, std::mt19937_64& rng) {
  const int dim = fd.conn.dim();
  return run_trials("flat_star_equals_moyal", trials, [&](int) {
    if (!fd.conn.is_flat_input()) throw std::invalid_argument("connection is not flat");
    MixedElement f = random_polynomial(dim, 4, 3, rng), g = random_polynomial(dim, 4, 3, rng);
    return star(f, g, fd) == base_moyal(f, g, fd.conn.poisson(), fd.policy);
  });
}

// ------------------------------------------------------------- whitney

inline std::vector<Invariant> whitney(const FedosovData& fd, const ModelPtr& model, int trials,
                                      std::mt19937_64& rng) {
  const int dim = model->dim();
  const int K = fd.policy.hbar_order;
  std::vector<Invariant> out;
  out.push_back(run_trials("exact_sequence", model->max_level() + 1,
                           [&](int l) { return exact_sequence_witness(model, l).holds(); }));
  out.push_back(run_trials("ideal_stability", trials, [&](int) {
    auto rep = verify_ideal_stability(fd, model, 1, rng);
    return rep.ok();
  }));
  const int flat_degree = model->level(0).probe_degree() + 1;
  out.push_back(run_trials("induced_star_representative_independence", trials, [&](int) {
    MixedElement f = random_polynomial(dim, 3, 3, rng), g = random_polynomial(dim, 3, 3, rng);
    MixedElement f2 = f + random_flat(model, 0, flat_degree, 3, rng);
    MixedElement g2 = g + random_flat(model, 0, flat_degree, 3, rng);
    return project_series(star(f, g, fd), model, 0, K) == project_series(star(f2, g2, fd), model, 0, K);
  }));
  out.push_back(run_trials("induced_star_associativity", trials, [&](int) {
    auto F = as_series(project(random_polynomial(dim, 3, 3, rng), model));
    auto G = as_series(project(random_polynomial(dim, 3, 3, rng), model));
    auto H = as_series(project(random_polynomial(dim, 3, 3, rng), model));
    return induced_star(induced_star(F, G, fd), H, fd) == induced_star(F, induced_star(G, H, fd), fd);
  }));
  out.push_back(run_trials("induced_star_unit", trials, [&](int) {
    auto F = project(random_polynomial(dim, 3, 3, rng), model);
    auto one = project(MixedElement::constant(dim, Scalar(1)), model);
    return induced_star(one, F, fd) == as_series(F) && induced_star(F, one, fd) == as_series(F);
  }));
  out.push_back(run_trials("quotient_commutator_matches_poisson", trials, [&](int) {
    auto F = project(random_polynomial(dim, 3, 3, rng), model);
    auto G = project(random_polynomial(dim, 3, 3, rng), model);
    WhitneySeries c = induced_star(F, G, fd) - induced_star(G, F, fd);
    if (!c.coefficient(0).is_zero()) return false;
    if (K < 1) return true;
    return c.coefficient(1) == (Scalar(0) - Scalar::i()) * whitney_poisson(F, G, fd.conn.poisson());
  }));
  return out;
}

// -------------------------------------------------------------- derham

inline std::vector<Invariant> forms(const ModelPtr& model, const PoissonTensor& pt, int trials,
                                    std::mt19937_64& rng) {
  const int dim = model->dim();
  const FormSchedule dr = FormSchedule::de_rham();
  const FormSchedule po = FormSchedule::poisson(pt);
  std::vector<Invariant> out;
  out.push_back(run_trials("star_involution", 2 * (dim + 1), [&](int t) {
    const FormSchedule& s = t % 2 == 0 ? dr : po;
    const int k = t / 2;
    FormSpace fs = form_space(model, k, s);
    for (int idx = 0; idx < fs.size; ++idx) {
      WhitneyForm w = basis_form(model, k, s, fs, idx);
      if (!(hodge_star(hodge_star(w, pt), pt) == w)) return false;
    }
    return true;
  }));
  out.push_back(run_trials("d_squared_zero", trials * (dim - 1), [&](int t) {
    const int k = t % (dim - 1);
    WhitneyForm w = random_form(model, k, dr, rng);
    return d(d(w)).is_zero();
  }));
  out.push_back(run_trials("delta_equals_signed_star_d_star", trials * dim, [&](int t) {
    const int k = 1 + t % dim;
    WhitneyForm w = random_form(model, k, t % 2 == 0 ? po : dr, rng);
    return brylinski_delta(w, pt) == brylinski_delta_via_star(w, pt);
  }));
  out.push_back(run_trials("delta_squared_zero", trials * (dim - 1), [&](int t) {
    const int k = 2 + t % (dim - 1);
    WhitneyForm w = random_form(model, k, po, rng);
    return brylinski_delta(brylinski_delta(w, pt), pt).is_zero();
  }));
  return out;
}

/// Zeroth Betti number of each catalogue set (singular cohomology).
inline long expected_b0(const std::string& name) { return name == "two-points" ? 2 : 1; }

inline std::vector<std::string> catalogue_for(int n) {
  std::vector<std::string> names;
  for (const auto& s : SubsetModel::catalogue())
    if (s != "plane-in-r4" || n == 2) names.push_back(s);
  return names;
}

struct BettiCheck {
  std::vector<Invariant> invariants;
  std::vector<BettiTable> tables;
};

inline BettiCheck betti(int n, int jet_order, int base_degree, const PoissonTensor& pt,
                        const std::vector<std::string>& names) {
  BettiCheck out;
  Invariant expected{"betti_numbers_match_singular_cohomology", 0, 0, {}};
  Invariant duality{"poisson_duality", 0, 0, {}};
  Invariant stable{"betti_stable_under_jet_order_plus_one", 0, 0, {}};
  for (const auto& name : names) {
    SubsetModel x = SubsetModel::builtin(name, n);
    const int D = base_degree < 0 ? WhitneyModel::default_base_degree(jet_order) : base_degree;
    const int D1 = base_degree < 0 ? WhitneyModel::default_base_degree(jet_order + 1) : base_degree + 1;
    auto m = std::make_shared<const WhitneyModel>(x, jet_order, D);
    auto m1 = std::make_shared<const WhitneyModel>(x, jet_order + 1, D1);
    BettiTable t = betti_table(m, pt);
    std::vector<long> want(static_cast<std::size_t>(2 * n + 1), 0);
    want[0] = expected_b0(name);
    ++expected.trials;
    if (t.de_rham == want) ++expected.passed;
    else if (expected.note.empty()) expected.note = name + " differs";
    ++duality.trials;
    if (t.duality_holds()) ++duality.passed;
    else if (duality.note.empty()) duality.note = name + " differs";
    ++stable.trials;
    if (cohomology_dims(m1) == t.de_rham) ++stable.passed;
    else if (stable.note.empty()) stable.note = name + " changes";
    out.tables.push_back(std::move(t));
  }
  out.invariants = {expected, duality, stable};
  return out;
}

// ------------------------------------------------------------ homology

inline std::vector<Invariant> chains(const FiniteAlgebra& deformed, const FiniteAlgebra& undeformed, int trials,
                                     std::mt19937_64& rng) {
  const int top = deformed.model()->dim();
  std::vector<Invariant> out;
  out.push_back(run_trials("b_squared_zero", trials, [&](int t) {
    ChainVector c = random_chain(deformed, 2 + t % 2, rng);
    return hochschild_b(hochschild_b(c, deformed), deformed).is_zero();
  }));
  out.push_back(run_trials("B_squared_zero", trials, [&](int t) {
    ChainVector c = random_chain(deformed, t % 3, rng);
    return connes_B(connes_B(c, deformed), deformed).is_zero();
  }));
  out.push_back(run_trials("bB_plus_Bb_zero", trials, [&](int t) {
    ChainVector c = random_chain(deformed, 1 + t % 2, rng);
    ChainVector s = hochschild_b(connes_B(c, deformed), deformed) + connes_B(hochschild_b(c, deformed), deformed);
    return s.is_zero();
  }));
  out.push_back(run_trials("mu_b_zero_undeformed", trials, [&](int t) {
    ChainVector c = random_chain(undeformed, 1 + t % top, rng);
    return mu(hochschild_b(c, undeformed), undeformed).is_zero();
  }));
  out.push_back(run_trials("mu_B_equals_d_mu", trials, [&](int t) {
    const FiniteAlgebra& A = t % 2 == 0 ? deformed : undeformed;
    ChainVector c = random_chain(A, t % top, rng);
    return mu(connes_B(c, A), A) == d(mu(c, A));
  }));
  out.push_back(run_trials("mu_eps_identity", trials, [&](int t) {
    WhitneyForm w = random_form(undeformed.model(), t % (top + 1), FormSchedule::de_rham(), rng);
    return mu(antisymmetrize(w, undeformed), undeformed) == w;
  }));
  return out;
}

/// kappa_1 = -i exactly and one kappa_q for all inputs, q = 1..q_max.
inline std::vector<Invariant> e1(const FiniteAlgebra& A, const PoissonTensor& pt, int trials, std::mt19937_64& rng,
                                 int q_max = 2) {
  const int dim = A.model()->dim();
  std::vector<Invariant> out;
  for (int q = 1; q <= q_max; ++q) {
    KappaFit fit;
    Invariant inv = run_trials("e1_kappa_q" + std::to_string(q), trials, [&](int) {
      MixedElement f0 = random_polynomial(dim, 2, 2, rng);
      std::vector<MixedElement> fs;
      for (int i = 0; i < q; ++i) fs.push_back(random_polynomial(dim, 2, 2, rng));
      E1ProbeResult r = e1_probe(f0, fs, A, pt);
      fit.absorb(r);
      return r.proportional && fit.consistent;
    });
    if (!fit.kappa) {
      inv.passed = 0;
      inv.note = "no informative trial";
    } else {
      inv.note = "kappa = " + fit.kappa->str() + " over " + std::to_string(fit.informative) + " informative trials";
      if (q == 1 && !(*fit.kappa == Scalar(0) - Scalar::i())) inv.passed = 0;
    }
    out.push_back(inv);
  }
  return out;
}

}  // namespace checks

/// Deterministic verification report.
struct Report {
  std::string command;
  nlohmann::json config;
  std::vector<std::pair<std::string, std::vector<Invariant>>> sections;
  nlohmann::json extra = nlohmann::json::object();
  std::vector<std::string> text_blocks;

  bool pass() const {
    for (const auto& [name, invs] : sections)
      for (const auto& inv : invs)
        if (!inv.pass()) return false;
    return true;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["schema"] = kReportSchema;
    j["version"] = kVersion;
    j["command"] = command;
    j["config"] = config;
    j["suites"] = nlohmann::json::array();
    for (const auto& [name, invs] : sections) {
      nlohmann::json s{{"suite", name}, {"invariants", nlohmann::json::array()}};
      bool ok = true;
      for (const auto& inv : invs) {
        s["invariants"].push_back(inv.to_json());
        ok = ok && inv.pass();
      }
      s["status"] = ok ? "pass" : "fail";
      j["suites"].push_back(s);
    }
    for (const auto& [k, v] : extra.items()) j[k] = v;
    j["status"] = pass() ? "pass" : "fail";
    return j;
  }

  std::string to_text() const {
    std::ostringstream os;
    os << "wdq " << kVersion << " " << command << "\n";
    for (const auto& b : text_blocks) os << b;
    for (const auto& [name, invs] : sections) {
      os << "[" << name << "]\n";
      for (const auto& inv : invs) {
        os << "  " << inv.name << ": " << (inv.pass() ? "pass" : "FAIL") << " (" << inv.passed << "/" << inv.trials
           << ")";
        if (!inv.note.empty()) os << "  " << inv.note;
        os << "\n";
      }
    }
    if (!sections.empty()) os << "overall: " << (pass() ? "pass" : "FAIL") << "\n";
    return os.str();
  }
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"weyl", "fedosov", "whitney", "derham", "homology"};
  return names;
}

/// Per-suite generator, independent of which other suites run.
inline std::mt19937_64 suite_rng(std::uint64_t seed, const std::string& suite) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(std::hash<std::string>{}(suite) & 0xffffffffu)};
  return std::mt19937_64(seq);
}

inline Report run_verify(const RunConfig& cfg) {
  cfg.validate();
  const auto& all = suite_names();
  if (cfg.suite != "all" && std::find(all.begin(), all.end(), cfg.suite) == all.end())
    throw ConfigError("unknown suite: " + cfg.suite);
  ConnectionInput conn = resolve_connection(cfg);
  SubsetModel x = resolve_subset(cfg);
  const TruncationPolicy policy = cfg.policy();
  const PoissonTensor& pt = conn.poisson();
  auto wants = [&](const std::string& s) { return cfg.suite == "all" || cfg.suite == s; };

  Report rep;
  rep.command = "verify";
  rep.config = cfg.to_json();
  std::optional<FedosovData> fd;
  auto fedosov = [&]() -> const FedosovData& {
    if (!fd) fd = build_A(conn, policy);
    return *fd;
  };
  ModelPtr model;
  auto whitney_model = [&]() -> const ModelPtr& {
    if (!model) model = WhitneyModel::make(x, policy);
    return model;
  };

  if (wants("weyl")) {
    auto rng = suite_rng(cfg.seed, "weyl");
    rep.sections.emplace_back("weyl", checks::weyl(pt, policy, cfg.trials, rng));
  }
  if (wants("fedosov")) {
    auto rng = suite_rng(cfg.seed, "fedosov");
    auto invs = checks::star_axioms(fedosov(), cfg.trials, rng);
    for (auto& inv : checks::fedosov_structure(fedosov(), cfg.trials, rng)) invs.push_back(inv);
    if (conn.is_flat_input()) invs.push_back(checks::flat_oracle(fedosov(), cfg.trials, rng));
    rep.sections.emplace_back("fedosov", invs);
  }
  if (wants("whitney")) {
    auto rng = suite_rng(cfg.seed, "whitney");
    rep.sections.emplace_back("whitney", checks::whitney(fedosov(), whitney_model(), cfg.trials, rng));
  }
  if (wants("derham")) {
    auto rng = suite_rng(cfg.seed, "derham");
    if (cfg.jet_order < 2 * cfg.n) throw ConfigError("derham needs jet order >= 2n");
    auto invs = checks::forms(whitney_model(), pt, cfg.trials, rng);
    auto b = checks::betti(cfg.n, cfg.jet_order, cfg.base_degree, pt, checks::catalogue_for(cfg.n));
    for (auto& inv : b.invariants) invs.push_back(inv);
    nlohmann::json tables = nlohmann::json::array();
    for (const auto& t : b.tables) tables.push_back(t.to_json());
    rep.extra["betti_tables"] = tables;
    rep.sections.emplace_back("derham", invs);
  }
  if (wants("homology")) {
    auto rng = suite_rng(cfg.seed, "homology");
    const int K = std::min(cfg.hbar_order, 2);
    FiniteAlgebra deformed = FiniteAlgebra::whitney(whitney_model(), K, &fedosov());
    FiniteAlgebra undeformed = FiniteAlgebra::whitney(whitney_model(), 0, nullptr);
    auto invs = checks::chains(deformed, undeformed, cfg.trials, rng);
    invs.push_back(run_trials("structure_constants_associative", cfg.trials, [&](int) {
      std::uniform_int_distribution<int> pick(0, deformed.dim() - 1);
      SparseVec a{{pick(rng), Scalar(1)}}, b{{pick(rng), Scalar(1)}}, c{{pick(rng), Scalar(1)}};
      return deformed.multiply(deformed.multiply(a, b), c) == deformed.multiply(a, deformed.multiply(b, c));
    }));
    for (auto& inv : checks::e1(deformed, pt, cfg.trials, rng)) invs.push_back(inv);
    rep.sections.emplace_back("homology", invs);
  }
  return rep;
}

/// Expansion c_0..c_K of f star g, and its image in the Whitney quotient when
/// `induced` is set.
inline Report run_star(const RunConfig& cfg, const std::string& f_text, const std::string& g_text, bool induced) {
  try {
    cfg.policy().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  ConnectionInput conn = resolve_connection(cfg);
  const TruncationPolicy policy = cfg.policy();
  const TruncationPolicy loose = TruncationPolicy::unbounded(cfg.n);
  MixedElement f(2 * cfg.n), g(2 * cfg.n);
  try {
    f = parse_element(f_text, loose);
    g = parse_element(g_text, loose);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  FedosovData fd = build_A(conn, policy);
  MixedElement prod(2 * cfg.n);
  try {
    prod = star(f, g, fd);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  Report rep;
  rep.command = "star";
  rep.config = cfg.to_json();
  nlohmann::json coeffs = nlohmann::json::array();
  std::ostringstream os;
  os << "f*g = " << prod.str() << "\n";
  for (int k = policy.hbar_min; k <= policy.hbar_order; ++k) {
    std::string c = hbar_coefficient(prod, k).str();
    coeffs.push_back({{"k", k}, {"c", c}});
    os << "  c_" << k << " = " << c << "\n";
  }
  rep.extra["f"] = f.str();
  rep.extra["g"] = g.str();
  rep.extra["ambient"] = {{"series", prod.str()}, {"coefficients", coeffs}};
  if (induced) {
    SubsetModel x = resolve_subset(cfg);
    ModelPtr model = WhitneyModel::make(x, policy);
    WhitneySeries s = project_series(prod, model, 0, policy.hbar_order);
    nlohmann::json ic = nlohmann::json::array();
    os << "induced on " << x.name() << ": " << s.str() << "\n";
    for (int k = 0; k <= policy.hbar_order; ++k) {
      std::string c = s.coefficient(k).str();
      ic.push_back({{"k", k}, {"c", c}, {"level", k}});
    }
    rep.extra["induced"] = {{"subset", x.name()}, {"series", s.str()}, {"coefficients", ic}};
  }
  rep.text_blocks.push_back(os.str());
  return rep;
}

/// Betti tables, Poisson-homology tables and duality witness, plus optional
/// brute-force Hochschild dimensions.
inline Report run_homology(const RunConfig& cfg) {
  cfg.validate();
  ConnectionInput conn = resolve_connection(cfg);
  SubsetModel x = resolve_subset(cfg);
  if (cfg.jet_order < 2 * cfg.n) throw ConfigError("homology tables need jet order >= 2n");
  const TruncationPolicy policy = cfg.policy();
  ModelPtr model = WhitneyModel::make(x, policy);
  Report rep;
  rep.command = "homology";
  rep.config = cfg.to_json();
  BettiTable t = betti_table(model, conn.poisson());
  rep.extra["betti"] = t.to_json();
  rep.text_blocks.push_back(t.to_text());
  Invariant dual{"poisson_duality", 1, t.duality_holds() ? 1 : 0, {}};
  rep.sections.emplace_back("duality", std::vector<Invariant>{dual});
  if (cfg.hochschild) {
    if (cfg.q_max < 0 || cfg.q_max > kMaxHochschildDegree) throw ConfigError("q_max must lie in [0, 3]");
    TruncationPolicy small = policy;
    small.jet_order = 1;
    small.base_degree = policy.base_degree == kUnbounded ? kUnbounded : std::max(1, policy.base_degree);
    ModelPtr sm = WhitneyModel::make(x, small);
    const int K = std::min(1, cfg.hbar_order);
    FedosovData fd = build_A(conn, policy);
    nlohmann::json hh = nlohmann::json::array();
    try {
      for (bool deformed : {false, true}) {
        FiniteAlgebra A = FiniteAlgebra::whitney(sm, K, deformed ? &fd : nullptr);
        HochschildReport r = hochschild_dims(A, cfg.q_max);
        hh.push_back(r.to_json());
        std::ostringstream os;
        os << "hochschild " << A.descriptor() << " (dim " << A.dim() << ")\n  HH_q for q = 0.." << cfg.q_max << ":";
        for (long v : r.dims()) os << " " << v;
        os << "\n  caveat: truncated-algebra homology, not the h-localized untruncated homology\n";
        rep.text_blocks.push_back(os.str());
      }
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    rep.extra["hochschild"] = hh;
  }
  return rep;
}

}  // namespace wdq
