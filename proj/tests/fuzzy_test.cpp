#include <gtest/gtest.h>

#include "hyq/error.hpp"
#include "hyq/fuzzy.hpp"
#include "hyq/random.hpp"

using namespace hyq;

namespace {

FuzzySetd random_set(Rng& rng, Eigen::Index n) {
  FuzzySetd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.uniform();
  return x;
}

FuzzySetd crisp_set(Rng& rng, Eigen::Index n) {
  FuzzySetd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  return x;
}

FuzzySetd vec(std::initializer_list<double> v) {
  FuzzySetd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

}  // namespace

TEST(Conjunction, Examples) {
  Rng rng(1);
  const auto x = random_set(rng, 7);
  EXPECT_EQ(conjunction(x, FuzzySetd::Ones(7)), x);
  EXPECT_EQ(conjunction(x, FuzzySetd::Zero(7)), FuzzySetd::Zero(7));
  EXPECT_TRUE(conjunction(vec({0.5, 0.2}), vec({0.4, 1.0})).isApprox(vec({0.2, 0.2}), 1e-15));
}

TEST(Disjunction, Examples) {
  Rng rng(2);
  const auto x = random_set(rng, 7);
  EXPECT_EQ(disjunction(x, FuzzySetd::Zero(7)), x);
  EXPECT_LE((disjunction(x, FuzzySetd::Ones(7)).array() - 1.0).abs().maxCoeff(), 1e-15);
  EXPECT_TRUE(disjunction(vec({0.5, 0.2}), vec({0.4, 1.0})).isApprox(vec({0.7, 1.0}), 1e-15));
}

TEST(Negation, Examples) {
  Rng rng(3);
  const auto x = random_set(rng, 7);
  EXPECT_EQ(negation(FuzzySetd::Zero(4)), FuzzySetd::Ones(4));
  EXPECT_TRUE(negation(negation(x)).isApprox(x, 1e-15));
  EXPECT_NEAR(negation(vec({0.3}))[0], 0.7, 1e-15);
}

TEST(Connectives, LengthMismatchIsDimensionError) {
  EXPECT_THROW(conjunction(FuzzySetd::Zero(3), FuzzySetd::Zero(4)), DimensionError);
  EXPECT_THROW(disjunction(FuzzySetd::Zero(3), FuzzySetd::Zero(4)), DimensionError);
}

TEST(Connectives, ClampAbsorbsRounding) {
  const auto x = vec({1.0 + 1e-16, -1e-17, 1.0 + 4e-16});
  EXPECT_TRUE(is_fuzzy_set(negation(x)));
  EXPECT_TRUE(is_fuzzy_set(conjunction(x, x)));
  EXPECT_TRUE(is_fuzzy_set(disjunction(x, x)));
}

TEST(Connectives, Laws) {
  Rng rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    const auto x = random_set(rng, 50), y = random_set(rng, 50), z = random_set(rng, 50);
    EXPECT_EQ(conjunction(x, y), conjunction(y, x));
    EXPECT_EQ(disjunction(x, y), disjunction(y, x));
    EXPECT_LE((conjunction(conjunction(x, y), z) - conjunction(x, conjunction(y, z))).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((disjunction(disjunction(x, y), z) - disjunction(x, disjunction(y, z))).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((negation(conjunction(x, y)) - disjunction(negation(x), negation(y))).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_TRUE(is_fuzzy_set(conjunction(x, y)));
    EXPECT_TRUE(is_fuzzy_set(disjunction(x, y)));
    EXPECT_TRUE(is_fuzzy_set(negation(x)));
  }
}

TEST(Connectives, CrispInputsAreBoolean) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto x = crisp_set(rng, 40), y = crisp_set(rng, 40);
    const auto c = conjunction(x, y), d = disjunction(x, y), n = negation(x);
    for (Eigen::Index i = 0; i < 40; ++i) {
      const bool a = x[i] == 1.0, b = y[i] == 1.0;
      EXPECT_EQ(c[i], (a && b) ? 1.0 : 0.0);
      EXPECT_EQ(d[i], (a || b) ? 1.0 : 0.0);
      EXPECT_EQ(n[i], a ? 0.0 : 1.0);
    }
  }
}

// Product logic is not idempotent and has no excluded middle off the crisp
// values; these document that on purpose.
TEST(Connectives, IdempotenceAndExcludedMiddleDoNotHold) {
  const auto x = vec({0.5, 0.3});
  EXPECT_NE(conjunction(x, x), x);
  EXPECT_NE(disjunction(x, negation(x)), FuzzySetd::Ones(2));
  const auto crisp = vec({0.0, 1.0});
  EXPECT_EQ(conjunction(crisp, crisp), crisp);
  EXPECT_EQ(disjunction(crisp, negation(crisp)), FuzzySetd::Ones(2));
}

TEST(Connectives, WorkOnFloat) {
  Eigen::VectorXf x(2), y(2);
  x << 0.5f, 0.2f;
  y << 0.4f, 1.0f;
  const FuzzySet<float> c = conjunction(x, y);
  EXPECT_FLOAT_EQ(c[0], 0.2f);
  EXPECT_FLOAT_EQ(disjunction(x, y)[1], 1.0f);
}
