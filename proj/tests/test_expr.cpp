#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "seqwarp/expr.hpp"

using namespace seqwarp;

TEST(Parse, PolynomialPlusSine) {
  const auto e = parse("x^2 + sin(y)", {"x", "y"});
  ASSERT_EQ(e.op(), Op::add);
  EXPECT_EQ(e.lhs().op(), Op::pow);
  EXPECT_EQ(e.lhs().lhs().op(), Op::variable);
  EXPECT_EQ(e.lhs().lhs().name(), "x");
  EXPECT_TRUE(e.lhs().rhs().is_constant_value(2.0));
  EXPECT_EQ(e.rhs().op(), Op::call);
  EXPECT_EQ(e.rhs().fn(), Fn::sin);
  EXPECT_EQ(e.rhs().lhs().name(), "y");
}

TEST(Parse, ProductOfCalls) {
  const auto e = parse("exp(x1)*cosh(x2)", {"x1", "x2"});
  ASSERT_EQ(e.op(), Op::mul);
  EXPECT_EQ(e.lhs().fn(), Fn::exp);
  EXPECT_EQ(e.rhs().fn(), Fn::cosh);
  EXPECT_EQ(e.rhs().lhs().name(), "x2");
}

TEST(Parse, SyntaxErrorOffset) {
  try {
    (void)parse("x +* y", {"x", "y"});
    FAIL() << "expected a parse error";
  } catch (const ParseError& err) {
    EXPECT_EQ(err.offset(), 3u);
    EXPECT_EQ(err.kind(), ParseError::Kind::syntax);
  }
}

TEST(Parse, UnclosedCallReportsEndOfInput) {
  try {
    (void)parse("exp(x1", {"x1"});
    FAIL() << "expected a parse error";
  } catch (const ParseError& err) {
    EXPECT_EQ(err.offset(), 6u);
    EXPECT_EQ(err.column(), 7u);
  }
}

TEST(Parse, UnknownIdentifier) {
  try {
    (void)parse("x + z", {"x"});
    FAIL();
  } catch (const ParseError& err) {
    EXPECT_EQ(err.kind(), ParseError::Kind::unknown_identifier);
    EXPECT_EQ(err.offset(), 4u);
  }
}

TEST(Parse, PowerIsRightAssociativeAndBindsTighterThanUnaryMinus) {
  const EvalPoint p{{"x", 2.0}};
  EXPECT_DOUBLE_EQ(evaluate(parse("2^3^2", {}), p), 512.0);
  EXPECT_DOUBLE_EQ(evaluate(parse("-x^2", {"x"}), p), -4.0);
  EXPECT_DOUBLE_EQ(evaluate(parse("1e-1*x", {"x"}), p), 0.2);
}

TEST(Evaluate, Basics) {
  EXPECT_DOUBLE_EQ(evaluate(parse("2*x", {"x"}), {{"x", 3.0}}), 6.0);
  EXPECT_DOUBLE_EQ(evaluate(parse("exp(x)", {"x"}), {{"x", 0.0}}), 1.0);
}

TEST(Evaluate, DomainErrors) {
  EXPECT_THROW(evaluate(parse("sqrt(x)", {"x"}), {{"x", -1.0}}), DomainError);
  EXPECT_THROW(evaluate(parse("log(x)", {"x"}), {{"x", 0.0}}), DomainError);
  EXPECT_THROW(evaluate(parse("1/x", {"x"}), {{"x", 0.0}}), DomainError);
}

TEST(Evaluate, MissingVariable) { EXPECT_ANY_THROW(evaluate(parse("x*y", {"x", "y"}), {{"x", 1.0}})); }

TEST(Differentiate, MatchesCentralDifferences) {
  const std::vector<std::string> vars{"x", "y"};
  const char* cases[] = {"x^2*y", "sin(x)*cosh(y)", "exp(x*y)/(2+cos(x))", "sqrt(1+x^2+y^2)", "tanh(x)-log(3+y)",
                         "x^3.5", "(1+x^2)^(y/3)"};
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.2, 1.2);
  for (const char* text : cases) {
    const auto e = parse(text, vars);
    for (int k = 0; k < 10; ++k) {
      EvalPoint p{{"x", u(rng)}, {"y", u(rng)}};
      for (const auto& v : vars) {
        const double h = 1e-5;
        EvalPoint a = p, b = p;
        a[v] += h;
        b[v] -= h;
        const double fd = (evaluate(e, a) - evaluate(e, b)) / (2 * h);
        const double ad = evaluate(differentiate(e, v), p);
        EXPECT_NEAR(ad, fd, 1e-6 * (1.0 + std::abs(fd))) << text << " d/d" << v;
      }
    }
  }
}

TEST(RoundTrip, PrintedFormReparsesToSameTree) {
  const std::vector<std::string> vars{"x", "y"};
  const char* cases[] = {"x^2 + sin(y)", "-(x - y) - x", "x/(y*x)", "2^3^2", "(-x)^2", "-x^2", "exp(-x)*cos(y)/3",
                         "x - (y - 1)", "1.5e-3*x"};
  for (const char* text : cases) {
    const auto e = parse(text, vars);
    const auto again = parse(e.to_string(), vars);
    EXPECT_TRUE(e == again) << text << " printed as " << e.to_string();
  }
}

TEST(RoundTrip, RandomTrees) {
  std::mt19937_64 rng(7);
  const std::vector<std::string> vars{"x", "y"};
  std::function<Expr(int)> gen = [&](int depth) -> Expr {
    const int pick = static_cast<int>(rng() % (depth <= 0 ? 2 : 9));
    switch (pick) {
      case 0:
        return Expr::constant(static_cast<double>(rng() % 7) + 0.5);
      case 1:
        return Expr::variable(vars[rng() % 2]);
      case 2:
        return Expr::negate(gen(depth - 1));
      case 3:
        return Expr::binary(Op::add, gen(depth - 1), gen(depth - 1));
      case 4:
        return Expr::binary(Op::sub, gen(depth - 1), gen(depth - 1));
      case 5:
        return Expr::binary(Op::mul, gen(depth - 1), gen(depth - 1));
      case 6:
        return Expr::binary(Op::div, gen(depth - 1), gen(depth - 1));
      case 7:
        return Expr::binary(Op::pow, gen(depth - 1), Expr::constant(static_cast<double>(rng() % 4)));
      default:
        return Expr::call(kFunctions[rng() % kFunctions.size()].second, gen(depth - 1));
    }
  };
  for (int k = 0; k < 300; ++k) {
    const auto e = gen(6);
    EXPECT_TRUE(e == parse(e.to_string(), vars)) << e.to_string();
  }
}

TEST(FreeVariables, Collected) {
  const auto e = parse("x*sin(y) + 2", {"x", "y", "z"});
  EXPECT_EQ(e.free_variables(), (std::set<std::string>{"x", "y"}));
  EXPECT_FALSE(parse("2*3", {}).has_variables());
}
