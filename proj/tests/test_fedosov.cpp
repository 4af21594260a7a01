#include <gtest/gtest.h>

#include "support.hpp"

using namespace wdq;
using wdq::test::P;

namespace {

const FedosovData& flat1() {
  static const FedosovData fd = build_A(ConnectionInput::flat(1), test::policy(1, 4, 8, 3));
  return fd;
}

const FedosovData& curved() {
  static const FedosovData fd = build_A(ConnectionInput::curved_linear_n2(), test::policy(2, 4, 6, 3));
  return fd;
}

bool constant_term_zero(const MixedElement& f) {
  for (const auto& [k, c] : f.terms())
    if (k.alpha.total() == 0) return false;
  return true;
}

}  // namespace

TEST(Nabla, FlatExamples) {
  ConnectionInput flat = ConnectionInput::flat(1);
  TruncationPolicy p = test::policy(1);
  EXPECT_EQ(nabla(P("x1*y1"), flat, p), P("y1*dx1"));
  EXPECT_TRUE(nabla(P("y1"), flat, p).is_zero());
}

TEST(Nabla, ConstantChristoffel) {
  ConnectionInput c(PoissonTensor::darboux(1), "const");
  c.set_gamma(1, 1, 1, P("1"));
  ASSERT_TRUE(check_symplectic(c));
  TruncationPolicy p = test::policy(1);
  EXPECT_TRUE(nabla(P("y1"), c, p).is_zero());
  EXPECT_EQ(nabla(P("y2"), c, p), P("y1*dx1"));
}

TEST(Curvature, VanishingCases) {
  TruncationPolicy p1 = test::policy(1);
  EXPECT_TRUE(curvature(ConnectionInput::flat(1), p1).is_zero());
  ConnectionInput lin(PoissonTensor::darboux(1), "lin");
  lin.set_gamma(1, 1, 1, P("x1"));
  EXPECT_TRUE(curvature(lin, p1).is_zero());
  ConnectionInput lin2(PoissonTensor::darboux(2), "lin2");
  lin2.set_gamma(1, 1, 1, P("x1", 2));
  EXPECT_TRUE(curvature(lin2, test::policy(2)).is_zero());
  EXPECT_FALSE(curvature(ConnectionInput::curved_linear_n2(), test::policy(2)).is_zero());
}

TEST(BuildA, FlatIsTrivialFixedPoint) {
  const FedosovData& fd = flat1();
  EXPECT_TRUE(fd.r.is_zero());
  EXPECT_EQ(fd.A, symplectic_potential(PoissonTensor::darboux(1)));
  EXPECT_EQ(fd.A, P("y2*dx1 - y1*dx2"));
  EXPECT_TRUE(fd.is_flat());
}

TEST(BuildA, CurvedHasCorrectionAndZeroResidual) {
  for (int nf : {6, 8}) {
    FedosovData fd = build_A(ConnectionInput::curved_linear_n2(), test::policy(2, 4, nf, 3));
    EXPECT_FALSE(fd.r.is_zero());
    EXPECT_TRUE(fd.is_flat()) << fd.curvature_residual.str();
    EXPECT_GE(fedosov_degree(fd.r), 3);
    EXPECT_TRUE(delta_inv(fd.r).is_zero());
  }
}

TEST(BuildA, DSquaredVanishesInReliableDegrees) {
  auto rng = test::rng(1);
  const FedosovData& fd = curved();
  for (int t = 0; t < 10; ++t) {
    MixedElement a = random_weyl(4, rng, 3, 2, 0).truncated(fd.policy);
    MixedElement dd = fedosov_D(fedosov_D(a, fd), fd);
    EXPECT_TRUE(dd.filtered([&](const Key& k) { return k.fedosov_degree() <= fd.policy.fedosov_order - 2; })
                    .is_zero());
  }
}

TEST(BuildA, RejectsBadPolicies) {
  EXPECT_THROW(build_A(ConnectionInput::flat(1), test::policy(2)), std::invalid_argument);
  EXPECT_THROW(build_A(ConnectionInput::flat(1), test::policy(1, 4, 1, 0)), std::invalid_argument);
  EXPECT_THROW(ConnectionInput::builtin("curved-linear-n2", 1), std::invalid_argument);
  EXPECT_THROW(ConnectionInput::builtin("torus", 1), std::invalid_argument);
}

TEST(Quantize, FlatExamples) {
  const FedosovData& fd = flat1();
  EXPECT_EQ(quantize(P("x1"), fd), P("x1 + y1"));
  EXPECT_EQ(quantize(P("1"), fd), P("1"));
  EXPECT_EQ(quantize(P("x1^2"), fd), P("x1^2 + 2*x1*y1 + y1^2"));
  EXPECT_THROW(quantize(P("y1"), fd), std::invalid_argument);
  EXPECT_THROW(quantize(P("dx1"), fd), std::invalid_argument);
}

TEST(Symbol, Examples) {
  EXPECT_EQ(symbol(P("x1 + y1")), P("x1"));
  EXPECT_TRUE(symbol(P("h*y1*y2")).is_zero());
  EXPECT_THROW(symbol(P("dx1")), std::invalid_argument);
}

TEST(Quantize, SectionsAreFlatAndInvertSymbol) {
  auto rng = test::rng(17);
  for (const FedosovData* fd : {&flat1(), &curved()}) {
    const int dim = fd->conn.dim();
    for (int t = 0; t < 10; ++t) {
      MixedElement f = random_polynomial(dim, 4, 3, rng);
      MixedElement a = quantize(f, *fd);
      EXPECT_TRUE(is_flat_section(a, *fd));
      EXPECT_EQ(symbol(a), f);
      EXPECT_EQ(quantize(symbol(a), *fd), a);
    }
  }
}

TEST(Star, FlatExamples) {
  const FedosovData& fd = flat1();
  EXPECT_EQ(star(P("x1"), P("x2"), fd), P("x1*x2 - (1/2)*i*h"));
  EXPECT_EQ(star(P("x1^2"), P("x2^2"), fd), P("x1^2*x2^2 - 2*i*h*x1*x2 - (1/2)*h^2"));
  EXPECT_EQ(star(P("x1^3 + x2"), P("1"), fd), P("x1^3 + x2"));
  EXPECT_EQ(c_k(P("x1"), P("x2"), fd, 1), P("-(1/2)*i"));
}

TEST(Star, FlatEqualsBaseMoyal) {
  auto rng = test::rng(23);
  const FedosovData& fd = flat1();
  for (int t = 0; t < 30; ++t) {
    MixedElement f = random_polynomial(2, 4, 3, rng), g = random_polynomial(2, 4, 3, rng);
    EXPECT_EQ(star(f, g, fd), base_moyal(f, g, fd.conn.poisson(), fd.policy));
  }
}

TEST(Star, CurvedFirstOrderIsHalfPoissonBracket) {
  const FedosovData& fd = curved();
  MixedElement s = star(P("x1", 2), P("x2", 2), fd);
  EXPECT_EQ(hbar_coefficient(s, 0), P("x1*x2", 2));
  MixedElement t = star(P("x2", 2), P("x1", 2), fd);
  EXPECT_EQ(hbar_coefficient(s, 1) - hbar_coefficient(t, 1), P("-i", 2));
}

TEST(Star, AxiomsOnRandomInputs) {
  auto rng = test::rng(29);
  for (const FedosovData* fd : {&flat1(), &curved()})
    for (const auto& inv : checks::star_axioms(*fd, 5, rng)) EXPECT_TRUE(inv.pass()) << inv.name << " " << inv.note;
}

TEST(Star, CoefficientsAreBidifferentialOfOrderAtMostK) {
  // c_k(f, g)(0) depends only on the k-jets of f and g at 0.
  auto rng = test::rng(31);
  for (const FedosovData* fd : {&flat1(), &curved()}) {
    const int dim = fd->conn.dim();
    for (int t = 0; t < 2; ++t)
      for (int k = 1; k <= fd->policy.hbar_order; ++k) {
        MixedElement g = random_polynomial(dim, 3, 3, rng);
        MixedElement f(dim);
        for (const auto& m : monomials_of_degree(dim, k + 1)) f += base_monomial(dim, m, Scalar(1));
        f = mul(f, random_polynomial(dim, 1, 2, rng) + P("1", dim / 2), TruncationPolicy::unbounded(dim / 2));
        EXPECT_TRUE(constant_term_zero(c_k(f, g, *fd, k)));
        EXPECT_TRUE(constant_term_zero(c_k(g, f, *fd, k)));
      }
  }
}

TEST(Connection, JsonRoundTrip) {
  ConnectionInput c = ConnectionInput::curved_linear_n2();
  ConnectionInput back = connection_from_json(connection_to_json(c));
  EXPECT_EQ(back.entries(), c.entries());
  EXPECT_EQ(back.poisson(), c.poisson());
  ScalarMatrix m(2);
  m(0, 1) = Scalar(2);
  m(1, 0) = Scalar(-2);
  ConnectionInput scaled(PoissonTensor(m), "scaled");
  EXPECT_EQ(connection_from_json(connection_to_json(scaled)).poisson(), scaled.poisson());
}

TEST(Connection, JsonErrors) {
  using nlohmann::json;
  EXPECT_THROW(connection_from_json(json{{"dim", 3}}), std::invalid_argument);
  EXPECT_THROW(connection_from_json(json{{"dim", 2}, {"poisson", {{0, 0}, {0, 0}}}}), std::invalid_argument);
  EXPECT_THROW(connection_from_json(json{{"dim", 2}, {"gamma", {{{"indices", {1, 1}}, {"polynomial", "x1"}}}}}),
               std::invalid_argument);
  EXPECT_THROW(connection_from_json(json{{"dim", 2}, {"gamma", {{{"indices", {1, 1, 3}}, {"polynomial", "x1"}}}}}),
               std::out_of_range);
  EXPECT_THROW(connection_from_json(json{{"dim", 2}, {"gamma", {{{"indices", {1, 1, 1}}, {"polynomial", "y1"}}}}}),
               std::invalid_argument);
}
