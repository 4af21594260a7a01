#include <gtest/gtest.h>

#include "support.hpp"

using namespace wdq;
using wdq::test::P;

namespace {

const PoissonTensor kD1 = PoissonTensor::darboux(1);

const FedosovData& flat1() {
  static const FedosovData fd = build_A(ConnectionInput::flat(1), test::policy(1, 4, 6, 3));
  return fd;
}

ModelPtr model(const std::string& name, int jet = 3) {
  return WhitneyModel::make(SubsetModel::builtin(name, 1), test::policy(1, jet));
}

struct Algebras {
  ModelPtr m;
  FiniteAlgebra deformed;
  FiniteAlgebra undeformed;
  explicit Algebras(const std::string& name, int jet = 3)
      : m(model(name, jet)),
        deformed(FiniteAlgebra::whitney(m, 2, &flat1())),
        undeformed(FiniteAlgebra::whitney(m, 0, nullptr)) {}
};

const Algebras& point() {
  static const Algebras a("point");
  return a;
}

ChainVector tensor(const FiniteAlgebra& A, const std::vector<MixedElement>& fs, const Scalar& c = Scalar(1)) {
  std::vector<SparseVec> factors;
  for (const auto& f : fs) factors.push_back(A.coords_of(f));
  ChainVector out(static_cast<int>(fs.size()) - 1);
  out.add_tensor(factors, c);
  return out;
}

}  // namespace

TEST(FiniteAlgebra, ValidatesUnit) {
  EXPECT_THROW(FiniteAlgebra({"a", "b"}, {SparseVec{}, SparseVec{}, SparseVec{}, SparseVec{}}, "bad"),
               std::invalid_argument);
  EXPECT_THROW(FiniteAlgebra({"a"}, {}, "bad"), std::invalid_argument);
  EXPECT_EQ(FiniteAlgebra::scalars().dim(), 1);
}

TEST(FiniteAlgebra, WhitneyStructure) {
  const auto& A = point();
  EXPECT_EQ(A.undeformed.dim(), 10);
  EXPECT_EQ(A.deformed.dim(), 10 + 6 + 3);
  EXPECT_TRUE(A.deformed.is_associative());
  EXPECT_FALSE(A.deformed.is_commutative());
  EXPECT_TRUE(A.undeformed.is_commutative());
  EXPECT_EQ(A.deformed.labels()[0], "1");
  TruncationPolicy bad = test::policy(1);
  bad.hbar_min = -1;
  FedosovData laurent = build_A(ConnectionInput::flat(1), bad);
  EXPECT_THROW(FiniteAlgebra::whitney(A.m, 1, &laurent), std::invalid_argument);
  EXPECT_THROW(FiniteAlgebra::whitney(A.m, 4, &flat1()), std::invalid_argument);
}

TEST(FiniteAlgebra, ProductsMatchInducedStar) {
  const auto& A = point();
  SparseVec got = A.deformed.multiply(A.deformed.coords_of(P("x1")), A.deformed.coords_of(P("x2")));
  EXPECT_EQ(got, A.deformed.coords_of(P("x1*x2 - (1/2)*i*h")));
}

TEST(HochschildB, Examples) {
  const auto& A = point();
  EXPECT_TRUE(hochschild_b(tensor(A.undeformed, {P("x1"), P("x2")}), A.undeformed).is_zero());
  ChainVector b = hochschild_b(tensor(A.deformed, {P("x1"), P("x2")}), A.deformed);
  ChainVector want(0);
  want.add_tensor({A.deformed.coords_of(P("-i*h"))}, Scalar(1));
  EXPECT_EQ(b, want);
  EXPECT_THROW(hochschild_b(ChainVector(0), A.deformed), std::invalid_argument);
}

TEST(ConnesB, Examples) {
  const auto& A = point();
  ChainVector f = tensor(A.deformed, {P("x1")});
  EXPECT_EQ(connes_B(f, A.deformed), tensor(A.deformed, {P("1"), P("x1")}));
}

TEST(ChainIdentities, RandomTrials) {
  auto rng = test::rng(5);
  for (const char* name : {"point", "two-points"}) {
    Algebras A(name, 2);
    for (const auto& inv : checks::chains(A.deformed, A.undeformed, 15, rng))
      EXPECT_TRUE(inv.pass()) << name << " " << inv.name << " " << inv.note;
  }
}

TEST(Mu, Examples) {
  const auto& A = point();
  const FiniteAlgebra& U = A.undeformed;
  EXPECT_EQ(mu(tensor(U, {P("x1")}), U), function_form(P("x1"), A.m));
  EXPECT_EQ(mu(connes_B(tensor(U, {P("x1^2")}), U), U), d(function_form(P("x1^2"), A.m)));
  EXPECT_TRUE(mu(hochschild_b(tensor(U, {P("x1"), P("x2"), P("x1*x2")}), U), U).is_zero());
  EXPECT_EQ(mu(tensor(U, {P("x1"), P("x2")}), U), WhitneyForm::from_element(P("x1*dx2"), A.m, 1));
}

TEST(Epsilon, Examples) {
  const auto& A = point();
  const FiniteAlgebra& U = A.undeformed;
  EXPECT_EQ(antisymmetrize_decomposable(P("x1"), {P("x2")}, U), tensor(U, {P("x1"), P("x2")}));
  ChainVector two = antisymmetrize_decomposable(P("x1"), {P("x1"), P("x2")}, U);
  EXPECT_EQ(two, tensor(U, {P("x1"), P("x1"), P("x2")}) - tensor(U, {P("x1"), P("x2"), P("x1")}));
  auto rng = test::rng(9);
  for (int t = 0; t < 20; ++t) {
    WhitneyForm w = random_form(A.m, t % 3, FormSchedule::de_rham(), rng);
    EXPECT_EQ(mu(antisymmetrize(w, U), U), w);
  }
}

TEST(E1Probe, DegreeOneExample) {
  const auto& A = point();
  E1ProbeResult r = e1_probe(P("x1"), {P("x2")}, A.deformed, kD1);
  ASSERT_TRUE(r.kappa.has_value());
  EXPECT_EQ(*r.kappa, Scalar(0) - Scalar::i());
  EXPECT_TRUE(r.proportional);
  EXPECT_EQ(r.delta.representative(), P("1"));
  E1ProbeResult closed = e1_probe(P("1"), {P("x1")}, A.deformed, kD1);
  EXPECT_TRUE(closed.output.is_zero());
  EXPECT_FALSE(closed.kappa.has_value());
  EXPECT_THROW(e1_probe(P("x1"), {P("x2")}, A.undeformed, kD1), std::invalid_argument);
}

TEST(E1Probe, KappaIsInputIndependent) {
  auto rng = test::rng(13);
  for (const char* name : {"point", "axis"}) {
    Algebras A(name, 3);
    for (const auto& inv : checks::e1(A.deformed, kD1, 20, rng)) {
      EXPECT_TRUE(inv.pass()) << name << " " << inv.name << " " << inv.note;
      EXPECT_NE(inv.note.find("kappa = -i"), std::string::npos) << inv.note;
    }
  }
}

TEST(HochschildDims, ScalarsAndPoint) {
  EXPECT_EQ(hochschild_dims(FiniteAlgebra::scalars(), 3).dims(), (std::vector<long>{1, 0, 0, 0}));
  ModelPtr m = model("point", 1);
  FiniteAlgebra u0 = FiniteAlgebra::whitney(m, 0, nullptr);
  EXPECT_EQ(u0.dim(), 3);
  EXPECT_EQ(hochschild_dims(u0, 1).dims()[0], 3);
  FiniteAlgebra u1 = FiniteAlgebra::whitney(m, 1, nullptr);
  FiniteAlgebra d1 = FiniteAlgebra::whitney(m, 1, &flat1());
  long hh0_u = hochschild_dims(u1, 0).dims()[0];
  long hh0_d = hochschild_dims(d1, 0).dims()[0];
  EXPECT_EQ(hh0_u, 4);
  EXPECT_LT(hh0_d, hh0_u);
  auto report = hochschild_dims(d1, 1).to_json();
  EXPECT_TRUE(report.contains("caveat"));
}

TEST(HochschildDims, Guardrails) {
  EXPECT_THROW(hochschild_dims(point().deformed, 1), std::invalid_argument);
  EXPECT_THROW(hochschild_dims(FiniteAlgebra::scalars(), 4), std::invalid_argument);
}
