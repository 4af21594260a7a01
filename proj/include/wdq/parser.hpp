#pragma once

// Expression grammar (whitespace is ignored):
//
//   expr    = [ "+" | "-" ] term { ( "+" | "-" ) term } ;
//   term    = power { ( "*" | "/" ) power } ;
//   power   = primary { "^" ( exponent | primary ) } ;
//   exponent= integer | "-" integer | "(" "-" integer ")" ;
//   primary = integer | variable | "(" expr ")" ;
//   variable= "x" index | "y" index | "dx" index | "h" | "i" ;
//
// "a^n" with an integer n is a power; "a^b" with any other right operand is
// the (wedge) product, so "dx2^dx1" equals -dx1^dx2. Division is only
// allowed by nonzero scalar constants. Negative exponents are only allowed
// on monomials in h with a scalar coefficient.

#include <cctype>
#include <stdexcept>
#include <string>
#include <string_view>

#include "wdq/mixed_element.hpp"

namespace wdq {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

struct ParseResult {
  MixedElement value;
  /// True when terms exceeding the policy caps were dropped.
  bool truncated = false;
};

namespace detail {

class Parser {
 public:
  Parser(std::string_view text, int dim) : text_(text), dim_(dim), loose_(loose_policy(dim)) {}

  MixedElement parse() {
    MixedElement e = expr();
    skip();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  static TruncationPolicy loose_policy(int dim) {
    TruncationPolicy p = TruncationPolicy::unbounded(dim / 2 > 0 ? dim / 2 : 1);
    return p;
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool peek(char c) {
    skip();
    return pos_ < text_.size() && text_[pos_] == c;
  }
  bool accept(char c) {
    if (!peek(c)) return false;
    ++pos_;
    return true;
  }

  MixedElement expr() {
    MixedElement acc(dim_);
    bool negate = false;
    if (accept('-'))
      negate = true;
    else
      accept('+');
    MixedElement t = term();
    acc += negate ? -t : t;
    while (true) {
      if (accept('+'))
        acc += term();
      else if (accept('-'))
        acc -= term();
      else
        break;
    }
    return acc;
  }

  MixedElement term() {
    MixedElement acc = power();
    while (true) {
      if (accept('*')) {
        acc = mul(acc, power(), loose_);
      } else if (peek('/')) {
        std::size_t at = pos_;
        ++pos_;
        MixedElement d = power();
        if (d.size() != 1 || !(d.terms().begin()->first == Key{})) {
          pos_ = at;
          fail("division by a non-constant");
        }
        const Scalar& c = d.terms().begin()->second;
        acc *= Scalar(1) / c;
      } else {
        break;
      }
    }
    return acc;
  }

  bool try_exponent(long& out) {
    skip();
    std::size_t save = pos_;
    bool neg = false;
    bool paren = false;
    if (accept('(')) paren = true;
    if (accept('-')) neg = true;
    skip();
    if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      long v = integer();
      if (paren && !accept(')')) {
        pos_ = save;
        return false;
      }
      out = neg ? -v : v;
      return true;
    }
    pos_ = save;
    return false;
  }

  MixedElement power() {
    MixedElement base = primary();
    while (true) {
      skip();
      if (!accept('^')) break;
      long e = 0;
      std::size_t at = pos_;
      if (try_exponent(e)) {
        base = raise(base, e, at);
      } else {
        base = mul(base, primary(), loose_);
      }
    }
    return base;
  }

  MixedElement raise(const MixedElement& base, long e, std::size_t at) {
    if (e > 4096) {
      pos_ = at;
      fail("exponent too large");
    }
    if (e < 0) {
      if (base.size() != 1) {
        pos_ = at;
        fail("negative exponent on a non-monomial");
      }
      const auto& [k, c] = *base.terms().begin();
      if (!(k.alpha == MultiIndex{}) || !(k.beta == MultiIndex{}) || k.forms != 0) {
        pos_ = at;
        fail("negative exponent is only allowed for h");
      }
      Key nk;
      nk.hbar = static_cast<std::int16_t>(k.hbar * e);
      return MixedElement::monomial(dim_, nk, pow(Scalar(1) / c, static_cast<unsigned>(-e)));
    }
    MixedElement r = MixedElement::constant(dim_, Scalar(1));
    try {
      for (long k = 0; k < e; ++k) r = mul(r, base, loose_);
    } catch (const std::overflow_error&) {
      pos_ = at;
      fail("exponent overflow");
    }
    return r;
  }

  long integer() {
    skip();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("expected integer");
    std::string digits(text_.substr(start, pos_ - start));
    if (digits.size() > 9) {
      pos_ = start;
      fail("integer literal too long for an exponent or index");
    }
    return std::stol(digits);
  }

  MixedElement number() {
    skip();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    mpz_class z(std::string(text_.substr(start, pos_ - start)));
    return MixedElement::constant(dim_, Scalar(Rational(z)));
  }

  int index(char kind) {
    skip();
    std::size_t at = pos_;
    if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
      fail(std::string("expected index after '") + kind + "'");
    long j = integer();
    if (j < 1 || j > dim_) {
      pos_ = at;
      fail("variable index out of range");
    }
    return static_cast<int>(j);
  }

  MixedElement primary() {
    skip();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      MixedElement e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) return number();
    if (text_.substr(pos_, 2) == "dx") {
      pos_ += 2;
      return MixedElement::dx(dim_, index('d'));
    }
    if (c == 'x') {
      ++pos_;
      return MixedElement::x(dim_, index('x'));
    }
    if (c == 'y') {
      ++pos_;
      return MixedElement::y(dim_, index('y'));
    }
    if (c == 'h') {
      ++pos_;
      return MixedElement::hbar(dim_, 1);
    }
    if (c == 'i') {
      ++pos_;
      return MixedElement::constant(dim_, Scalar::i());
    }
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int dim_;
  TruncationPolicy loose_;
};

}  // namespace detail

/// Parses `text` exactly, then truncates per `policy`, reporting whether
/// anything was dropped.
inline ParseResult parse_element_checked(std::string_view text, const TruncationPolicy& policy) {
  policy.validate();
  detail::Parser p(text, policy.dim());
  MixedElement full = p.parse();
  ParseResult r{full.truncated(policy), false};
  r.truncated = r.value.size() != full.size();
  return r;
}

inline MixedElement parse_element(std::string_view text, const TruncationPolicy& policy) {
  return parse_element_checked(text, policy).value;
}

}  // namespace wdq
