#pragma once

#include <array>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>

#include "json.hpp"
#include "wdq/mixed_element.hpp"
#include "wdq/parser.hpp"
#include "wdq/weyl.hpp"

namespace wdq {

/// Raised when a fixed-point iteration fails to stabilize inside the
/// number of rounds its degree stratification guarantees.
class ConvergenceError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Symplectic connection in Darboux coordinates, given by its totally
/// symmetric lowered coefficients Gamma_{ijk}(x).
class ConnectionInput {
 public:
  using Index3 = std::array<int, 3>;

  ConnectionInput(PoissonTensor pt, std::string name = "custom")
      : pt_(std::move(pt)), name_(std::move(name)) {}

  /// Sets Gamma_{ijk} (1-based) for every permutation of (i, j, k).
  void set_gamma(int i, int j, int k, const MixedElement& poly) {
    for (int v : {i, j, k})
      if (v < 1 || v > pt_.dim()) throw std::out_of_range("connection index out of range");
    for (const auto& [key, c] : poly.terms())
      if (key.beta.total() != 0 || key.forms != 0 || key.hbar != 0)
        throw std::invalid_argument("connection coefficients must be polynomials in x");
    Index3 idx = sorted(i, j, k);
    if (poly.is_zero())
      gamma_.erase(idx);
    else
      gamma_[idx] = poly;
  }

  MixedElement gamma(int i, int j, int k) const {
    auto it = gamma_.find(sorted(i, j, k));
    return it == gamma_.end() ? MixedElement(pt_.dim()) : it->second;
  }

  const std::map<Index3, MixedElement>& entries() const { return gamma_; }
  const PoissonTensor& poisson() const { return pt_; }
  const std::string& name() const { return name_; }
  int dim() const { return pt_.dim(); }
  bool is_flat_input() const { return gamma_.empty(); }

  /// Gamma-hat = 1/2 Gamma_{ijk} y^i y^j dx^k.
  MixedElement gamma_hat() const {
    const int dim = pt_.dim();
    MixedElement g(dim);
    const TruncationPolicy loose = TruncationPolicy::unbounded(pt_.n());
    for (int i = 1; i <= dim; ++i)
      for (int j = 1; j <= dim; ++j)
        for (int k = 1; k <= dim; ++k) {
          auto it = gamma_.find(sorted(i, j, k));
          if (it == gamma_.end()) continue;
          MixedElement mono = mul(mul(MixedElement::y(dim, i), MixedElement::y(dim, j), loose),
                                  MixedElement::dx(dim, k), loose);
          g += Scalar::ratio(1, 2) * mul(it->second, mono, loose);
        }
    return g;
  }

  static ConnectionInput flat(int n) { return ConnectionInput(PoissonTensor::darboux(n), "flat"); }

  /// n = 2 example with linear coefficients and nonzero curvature:
  /// Gamma_{111} = x1, Gamma_{133} = x2.
  static ConnectionInput curved_linear_n2() {
    ConnectionInput c(PoissonTensor::darboux(2), "curved-linear-n2");
    c.set_gamma(1, 1, 1, MixedElement::x(4, 1));
    c.set_gamma(1, 3, 3, MixedElement::x(4, 2));
    return c;
  }

  static ConnectionInput builtin(const std::string& name, int n) {
    if (name == "flat") return flat(n);
    if (name == "curved-linear-n2") {
      if (n != 2) throw std::invalid_argument("curved-linear-n2 requires n = 2");
      return curved_linear_n2();
    }
    throw std::invalid_argument("unknown connection: " + name);
  }

 private:
  static Index3 sorted(int i, int j, int k) {
    Index3 a{i, j, k};
    std::sort(a.begin(), a.end());
    return a;
  }

  PoissonTensor pt_;
  std::string name_;
  std::map<Index3, MixedElement> gamma_;
};

/// Checks that the induced connection is torsion free and preserves the
/// Poisson tensor: with c^l_{jk} = pi^{il} Gamma_{ijk}, c^l_{jk} = c^l_{kj}
/// and (C_k pi) is symmetric for every k.
inline bool check_symplectic(const ConnectionInput& conn) {
  const int dim = conn.dim();
  const auto& pi = conn.poisson().pi();
  auto christoffel = [&](int l, int j, int k) {
    MixedElement s(dim);
    for (int i = 0; i < dim; ++i)
      if (!pi(i, l).is_zero()) s += pi(i, l) * conn.gamma(i + 1, j + 1, k + 1);
    return s;
  };
  for (int k = 0; k < dim; ++k) {
    for (int l = 0; l < dim; ++l)
      for (int j = 0; j < dim; ++j)
        if (!(christoffel(l, j, k) == christoffel(l, k, j))) return false;
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) {
        MixedElement ab(dim), ba(dim);
        for (int j = 0; j < dim; ++j) {
          if (!pi(j, b).is_zero()) ab += pi(j, b) * christoffel(a, j, k);
          if (!pi(j, a).is_zero()) ba += pi(j, a) * christoffel(b, j, k);
        }
        if (!(ab == ba)) return false;
      }
  }
  return true;
}

/// Lifted connection: d_x a + (i/h)[Gamma-hat, a].
inline MixedElement nabla(const MixedElement& a, const ConnectionInput& conn,
                          const TruncationPolicy& policy) {
  MixedElement r = exterior_d(a, policy);
  if (!conn.is_flat_input())
    r += i_over_hbar_commutator(conn.gamma_hat(), a, conn.poisson(), policy);
  return r;
}

/// Weyl curvature d_x Gamma-hat + (i/h) Gamma-hat o Gamma-hat.
inline MixedElement curvature(const ConnectionInput& conn, const TruncationPolicy& policy) {
  if (conn.is_flat_input()) return MixedElement(conn.dim());
  MixedElement g = conn.gamma_hat();
  MixedElement r = exterior_d(g, policy);
  // g is odd, so g o g = 1/2 [g, g].
  r += Scalar::ratio(1, 2) * i_over_hbar_commutator(g, g, conn.poisson(), policy);
  return r.truncated(policy);
}

/// Abelian Fedosov connection D = nabla + (i/h)[A, -], A = omega_{ij} y^i dx^j + r.
struct FedosovData {
  ConnectionInput conn;
  TruncationPolicy policy;
  MixedElement theta;  ///< omega_{ij} y^i dx^j
  MixedElement r;      ///< normalized remainder, delta_inv(r) = 0, deg_F(r) >= 3
  MixedElement A;
  /// Non-central part of the curvature of D with Fedosov degree <= N_F - 1.
  MixedElement curvature_residual;
  int rounds = 0;

  bool is_flat() const { return curvature_residual.is_zero(); }
};

inline MixedElement symplectic_potential(const PoissonTensor& pt) {
  const int dim = pt.dim();
  MixedElement t(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      const Scalar& w = pt.omega()(i, j);
      if (w.is_zero()) continue;
      Key k;
      k.beta[i] = 1;
      k.forms = static_cast<FormMask>(1u << j);
      t.add_term(k, w);
    }
  return t;
}

/// D a = nabla a + (i/h)[A, a].
inline MixedElement fedosov_D(const MixedElement& a, const FedosovData& fd) {
  MixedElement r = nabla(a, fd.conn, fd.policy);
  r += i_over_hbar_commutator(fd.A, a, fd.conn.poisson(), fd.policy);
  return r.truncated(fd.policy);
}

/// Drops the Fedosov degrees that truncation at N_F does not determine
/// after one application of delta.
inline MixedElement reliable_part(const MixedElement& a, const TruncationPolicy& policy) {
  if (policy.fedosov_order == kUnbounded) return a;
  return a.filtered([&](const Key& k) { return k.fedosov_degree() <= policy.fedosov_order - 1; });
}

/// Curvature d_x B + (i/h) B o B of D = d_x + (i/h)[B, -], B = Gamma-hat + A,
/// minus its central (fiber-degree zero) part.
inline MixedElement fedosov_curvature_defect(const ConnectionInput& conn, const MixedElement& A,
                                             const TruncationPolicy& policy) {
  MixedElement B = A;
  if (!conn.is_flat_input()) B += conn.gamma_hat();
  MixedElement omega = exterior_d(B, policy);
  omega += Scalar::ratio(1, 2) * i_over_hbar_commutator(B, B, conn.poisson(), policy);
  MixedElement noncentral = omega.filtered([](const Key& k) { return k.beta.total() > 0; });
  return reliable_part(noncentral, policy);
}

/// Solves r = delta_inv(R + nabla r + (i/h) r o r) degree by degree.
inline FedosovData build_A(const ConnectionInput& conn, const TruncationPolicy& policy) {
  policy.validate();
  if (policy.dim() != conn.dim()) throw std::invalid_argument("policy and connection dimensions differ");
  if (policy.fedosov_order < 2) throw std::invalid_argument("Fedosov order must be >= 2");
  const PoissonTensor& pt = conn.poisson();
  MixedElement R = curvature(conn, policy);
  MixedElement r(conn.dim());
  int rounds = 0;
  bool stable = false;
  const int max_rounds = policy.fedosov_order + 2;
  while (rounds < max_rounds) {
    ++rounds;
    MixedElement rhs = R + nabla(r, conn, policy);
    rhs += Scalar::ratio(1, 2) * i_over_hbar_commutator(r, r, pt, policy);
    MixedElement next = delta_inv(rhs).truncated(policy);
    if (next == r) {
      stable = true;
      break;
    }
    r = std::move(next);
  }
  if (!stable) throw ConvergenceError("Fedosov recursion for A did not stabilize");
  MixedElement theta = symplectic_potential(pt);
  MixedElement A = theta + r;
  MixedElement residual = fedosov_curvature_defect(conn, A, policy);
  return FedosovData{conn, policy, std::move(theta), std::move(r), std::move(A), std::move(residual),
                     rounds};
}

inline void require_base_function(const MixedElement& f) {
  for (const auto& [k, c] : f.terms())
    if (k.beta.total() != 0 || k.forms != 0)
      throw std::invalid_argument("expected a base function (no fiber variables or forms)");
}

/// The flat section with symbol f, a = f + delta_inv(nabla a + (i/h)[r, a]).
/// The map is linear, so each round only transports the previous increment.
inline MixedElement quantize(const MixedElement& f, const FedosovData& fd) {
  require_base_function(f);
  MixedElement a = f.truncated(fd.policy);
  MixedElement step = a;
  const int max_rounds = fd.policy.fedosov_order == kUnbounded ? 64 : fd.policy.fedosov_order + 2;
  for (int round = 0; round < max_rounds; ++round) {
    MixedElement rhs = nabla(step, fd.conn, fd.policy);
    if (!fd.r.is_zero()) rhs += i_over_hbar_commutator(fd.r, step, fd.conn.poisson(), fd.policy);
    step = delta_inv(rhs).truncated(fd.policy);
    if (step.is_zero()) return a;
    a += step;
  }
  throw ConvergenceError("quantization iteration did not stabilize");
}

/// Projection to fiber degree zero (the h-series of base functions).
inline MixedElement symbol(const MixedElement& a) {
  for (const auto& [k, c] : a.terms())
    if (k.forms != 0) throw std::invalid_argument("symbol expects a 0-form");
  return a.filtered([](const Key& k) { return k.beta.total() == 0; });
}

/// True when D a vanishes in every Fedosov degree the truncation determines.
inline bool is_flat_section(const MixedElement& a, const FedosovData& fd) {
  return reliable_part(fedosov_D(a, fd), fd.policy).is_zero();
}

/// sigma(qa o qb) for already quantized factors.
inline MixedElement star_quantized(const MixedElement& qa, const MixedElement& qb,
                                   const FedosovData& fd) {
  for (const auto* q : {&qa, &qb})
    for (const auto& [k, c] : q->terms())
      if (k.forms != 0) throw std::invalid_argument("symbol expects a 0-form");
  return moyal_fiber_free(qa, qb, fd.conn.poisson(), fd.policy);
}

/// f * g = sigma(q(f) o q(g)).
inline MixedElement star(const MixedElement& f, const MixedElement& g, const FedosovData& fd) {
  return star_quantized(quantize(f, fd), quantize(g, fd), fd);
}

/// Coefficient of h^k of a base series, returned with h power 0.
inline MixedElement hbar_coefficient(const MixedElement& series, int k) {
  return series.filtered([k](const Key& key) { return key.hbar == k; }).shift_hbar(-k);
}

inline MixedElement c_k(const MixedElement& f, const MixedElement& g, const FedosovData& fd, int k) {
  return hbar_coefficient(star(f, g, fd), k);
}

/// Reads {"dim": 2n, "poisson": [[...]] (optional), "gamma": [{"indices": [i,j,k],
/// "polynomial": "..."}]}.
inline ConnectionInput connection_from_json(const nlohmann::json& j) {
  int dim = j.at("dim").get<int>();
  if (dim < 2 || dim % 2 != 0 || dim > kMaxDim) throw std::invalid_argument("invalid connection dim");
  PoissonTensor pt = PoissonTensor::darboux(dim / 2);
  if (j.contains("poisson")) {
    ScalarMatrix m(dim);
    const auto& rows = j.at("poisson");
    if (!rows.is_array() || static_cast<int>(rows.size()) != dim)
      throw std::invalid_argument("poisson must be a dim x dim matrix");
    for (int a = 0; a < dim; ++a) {
      if (!rows[a].is_array() || static_cast<int>(rows[a].size()) != dim)
        throw std::invalid_argument("poisson must be a dim x dim matrix");
      for (int b = 0; b < dim; ++b) {
        const auto& v = rows[a][b];
        m(a, b) = Scalar(v.is_string() ? parse_rational(v.get<std::string>()) : Rational(v.get<long>()));
      }
    }
    pt = PoissonTensor(std::move(m));
  }
  ConnectionInput conn(pt, j.value("name", std::string("custom")));
  TruncationPolicy loose = TruncationPolicy::unbounded(dim / 2);
  if (j.contains("gamma"))
    for (const auto& e : j.at("gamma")) {
      auto idx = e.at("indices").get<std::vector<int>>();
      if (idx.size() != 3) throw std::invalid_argument("gamma indices must be a triple");
      conn.set_gamma(idx[0], idx[1], idx[2], parse_element(e.at("polynomial").get<std::string>(), loose));
    }
  if (!check_symplectic(conn)) throw std::invalid_argument("connection is not symplectic");
  return conn;
}

inline nlohmann::json connection_to_json(const ConnectionInput& conn) {
  nlohmann::json j;
  j["name"] = conn.name();
  j["dim"] = conn.dim();
  if (!(conn.poisson() == PoissonTensor::darboux(conn.dim() / 2))) {
    nlohmann::json rows = nlohmann::json::array();
    for (int a = 0; a < conn.dim(); ++a) {
      nlohmann::json row = nlohmann::json::array();
      for (int b = 0; b < conn.dim(); ++b) row.push_back(conn.poisson().pi()(a, b).re().get_str());
      rows.push_back(row);
    }
    j["poisson"] = rows;
  }
  nlohmann::json g = nlohmann::json::array();
  for (const auto& [idx, poly] : conn.entries())
    g.push_back({{"indices", {idx[0], idx[1], idx[2]}}, {"polynomial", poly.str()}});
  j["gamma"] = g;
  return j;
}

}  // namespace wdq
