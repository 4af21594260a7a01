#include <gtest/gtest.h>

#include "support.hpp"

using namespace wdq;
using wdq::test::P;

TEST(Scalar, GaussianArithmetic) {
  Scalar a(Rational(1, 2), Rational(3));
  Scalar b = Scalar::i();
  EXPECT_EQ(b * b, Scalar(-1));
  EXPECT_EQ(a * a.conj(), Scalar(Rational(37, 4)));
  EXPECT_EQ((a / a), Scalar(1));
  EXPECT_THROW(a / Scalar(0), std::domain_error);
  EXPECT_EQ(Scalar::ratio(2, 4), Scalar(Rational(1, 2)));
}

TEST(Scalar, Printing) {
  EXPECT_EQ(Scalar(Rational(-1, 2)).str(), "-1/2");
  EXPECT_EQ((Scalar::ratio(-1, 2) * Scalar::i()).str(), "-1/2*i");
  EXPECT_EQ(Scalar::i().str(), "i");
}

TEST(Parser, TwoTermExample) {
  MixedElement a = P("x1*y2 - (1/2)*i*h");
  EXPECT_EQ(a.size(), 2u);
  Key k1;
  k1.alpha[0] = 1;
  k1.beta[1] = 1;
  EXPECT_EQ(a.coefficient(k1), Scalar(1));
  Key k2;
  k2.hbar = 1;
  EXPECT_EQ(a.coefficient(k2), Scalar::ratio(-1, 2) * Scalar::i());
}

TEST(Parser, WedgeIsSorted) {
  MixedElement a = P("dx2^dx1");
  Key k;
  k.forms = 0b11;
  EXPECT_EQ(a.size(), 1u);
  EXPECT_EQ(a.coefficient(k), Scalar(-1));
}

TEST(Parser, FedosovCapTruncatesWithNotice) {
  TruncationPolicy p = TruncationPolicy::unbounded(1);
  p.fedosov_order = 2;
  EXPECT_TRUE(parse_element("y1^3", p).is_zero());
  ParseResult r = parse_element_checked("y1^3 + x1", p);
  EXPECT_TRUE(r.truncated);
  EXPECT_EQ(r.value, P("x1"));
}

TEST(Parser, SyntaxErrorCarriesPosition) {
  try {
    parse_element("x1 + * x2", TruncationPolicy::unbounded(1));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 5u);
  }
  EXPECT_THROW(P("x3"), ParseError);
  EXPECT_THROW(P("(x1"), ParseError);
  EXPECT_THROW(P("z1"), ParseError);
}

TEST(Parser, RoundTripsPrinter) {
  auto rng = test::rng(3);
  for (int t = 0; t < 50; ++t) {
    MixedElement a = random_weyl(4, rng, 3, 3, 2, 4);
    a += Scalar(Rational(2, 7), Rational(-5, 3)) * MixedElement::hbar(4, 2);
    EXPECT_EQ(P(a.str(), 2), a) << a.str();
  }
}

TEST(Mul, Examples) {
  TruncationPolicy loose = TruncationPolicy::unbounded(1);
  EXPECT_EQ(mul(P("x1*dx1"), P("y1*dx2"), loose), P("x1*y1*dx1^dx2"));
  EXPECT_TRUE(mul(P("dx1"), P("dx1"), loose).is_zero());
  TruncationPolicy k1 = loose;
  k1.hbar_order = 1;
  EXPECT_EQ(mul(P("1 + h"), P("1 - h"), k1), P("1"));
  EXPECT_THROW(mul(P("x1"), P("x1", 2), loose), std::invalid_argument);
}

TEST(Mul, GradedCommutative) {
  auto rng = test::rng(11);
  TruncationPolicy loose = TruncationPolicy::unbounded(2);
  for (int t = 0; t < 30; ++t) {
    MixedElement a = random_weyl(4, rng, 2, 2, 0), b = random_weyl(4, rng, 2, 2, 0);
    MixedElement one = P("dx1", 2), two = P("dx3", 2);
    MixedElement ab = mul(mul(a, one, loose), mul(b, two, loose), loose);
    MixedElement ba = mul(mul(b, two, loose), mul(a, one, loose), loose);
    EXPECT_EQ(ab, Scalar(-1) * ba);
  }
}

TEST(Partial, Examples) {
  EXPECT_EQ(partial(P("y1^2*y2"), Variable::Fiber, 1), P("2*y1*y2"));
  EXPECT_TRUE(partial(P("y2"), Variable::Base, 1).is_zero());
  EXPECT_EQ(partial(partial(P("y1*y2"), Variable::Fiber, 1), Variable::Fiber, 2), P("1"));
  EXPECT_THROW(partial(P("y1"), Variable::Fiber, 3), std::out_of_range);
}

TEST(GradeFilter, Examples) {
  EXPECT_EQ(grade_filter(P("y1 + h*y1*y2"), 2, 1), P("h*y1*y2"));
  EXPECT_TRUE(grade_filter(P("y1"), 0, 0).is_zero());
}

TEST(GradeFilter, ComponentsSumToWhole) {
  auto rng = test::rng(5);
  for (int t = 0; t < 30; ++t) {
    MixedElement a = random_weyl(2, rng, 3, 2, 1, 5);
    MixedElement sum(2);
    for (int s = 0; s <= 6; ++s)
      for (int k = 0; k <= 2; ++k) sum += grade_filter(a, s, k);
    EXPECT_EQ(sum, a);
  }
}

TEST(Policy, Validation) {
  TruncationPolicy p;
  p.n = 5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.n = 1;
  p.hbar_min = 4;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.hbar_min = -2;
  EXPECT_NO_THROW(p.validate());
}
