#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sandkit/directions.hpp"
#include "sandkit/error.hpp"
#include "sandkit/intervene.hpp"

namespace sandkit {
namespace {

using testing::Rng;

ConceptDirection dir(const Vector& v) { return ConceptDirection::normalized(v, Method::sand_e, "c", 0); }

TEST(ApplyIntervention, Examples) {
  const Vector lambda = {0.5, -2, 3};
  EXPECT_EQ(apply_intervention(lambda, dir({0, 1, 0}), 0.0), lambda);
  EXPECT_EQ(apply_intervention(Vector{0, 0, 0}, dir({1, 0, 0}), kDefaultAlpha), (Vector{10, 0, 0}));
  EXPECT_THROW(apply_intervention(Vector{0, 0}, dir({1, 0, 0}), 1.0), DimensionError);
}

TEST(ApplyIntervention, DisplacementHasLengthAlpha) {
  Rng rng(1);
  std::normal_distribution<double> a(0.0, 20.0);
  for (int t = 0; t < 200; ++t) {
    const Vector lambda = testing::random_vector(30, rng);
    const auto u = dir(testing::random_vector(30, rng));
    const double alpha = a(rng);
    const Vector out = apply_intervention(lambda, u, alpha);
    Vector delta(30);
    for (std::size_t i = 0; i < 30; ++i) delta[i] = out[i] - lambda[i];
    EXPECT_NEAR(testing::norm_of(delta), std::fabs(alpha), 1e-12 * std::max(1.0, std::fabs(alpha)));
  }
}

TEST(Unembedding, LabelChecks) {
  EXPECT_THROW(UnembeddingTable(Matrix::identity(2), {"a"}), ValidationError);
  EXPECT_THROW(UnembeddingTable(Matrix::identity(2), {"a", "a"}), ValidationError);
  const UnembeddingTable g(Matrix::identity(2), {"a", "b"});
  EXPECT_EQ(g.index_of("b"), 1u);
  EXPECT_THROW(g.index_of("c"), ValidationError);
}

TEST(LogOddsShift, HandArithmetic) {
  const UnembeddingTable g(Matrix(2, 2, {1, 0, 0, 1}), {"y1", "y2"});
  EXPECT_EQ(log_odds_shift(g, dir({1, 0}), 10.0, "y1", "y2"), 10.0);
  EXPECT_EQ(log_odds_shift(g, dir({1, 0}), 0.0, "y1", "y2"), 0.0);
  EXPECT_EQ(log_odds_shift(g, dir({1, 1}), 7.0, "y1", "y2"), 0.0);
  EXPECT_THROW(log_odds_shift(g, dir({1, 0}), 1.0, "y1", "nope"), ValidationError);
}

// Change in log(Pr[y1]/Pr[y2]) computed from full softmax log-probabilities.
double softmax_shift(const Matrix& table, const Vector& lambda, const Vector& u, double alpha, std::size_t y1,
                     std::size_t y2) {
  auto logits = [&](const Vector& x) {
    Vector z(table.rows());
    for (std::size_t r = 0; r < table.rows(); ++r) {
      z[r] = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) z[r] += table(r, i) * x[i];
    }
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    for (double& v : z) v -= m + std::log(s);
    return z;
  };
  Vector moved = lambda;
  for (std::size_t i = 0; i < u.size(); ++i) moved[i] += alpha * u[i];
  const Vector before = logits(lambda);
  const Vector after = logits(moved);
  return (after[y1] - after[y2]) - (before[y1] - before[y2]);
}

TEST(LogOddsShift, MatchesSoftmaxModelAtAnyBaseActivation) {
  Rng rng(2);
  const Matrix table = testing::random_matrix(12, 6, rng, 0.3);
  std::vector<std::string> labels;
  for (int i = 0; i < 12; ++i) labels.push_back("t" + std::to_string(i));
  const UnembeddingTable g(table, labels);
  const auto u = dir(testing::random_vector(6, rng));
  for (int t = 0; t < 50; ++t) {
    const Vector lambda = testing::random_vector(6, rng, 2.0);
    const std::size_t y1 = rng() % 12, y2 = rng() % 12;
    const double got = log_odds_shift(g, u, 1.5, labels[y1], labels[y2]);
    EXPECT_NEAR(got, softmax_shift(table, lambda, u.vector(), 1.5, y1, y2), 1e-9);
  }
}

TEST(LogOddsShift, LinearAndAntisymmetric) {
  Rng rng(3);
  const UnembeddingTable g(testing::random_matrix(3, 8, rng), {"a", "b", "c"});
  const auto u = dir(testing::random_vector(8, rng));
  // Doubling commutes with rounding, so equal strengths add exactly.
  std::uniform_real_distribution<double> unif(-20.0, 20.0);
  for (int t = 0; t < 100; ++t) {
    const double a = unif(rng);
    EXPECT_EQ(log_odds_shift(g, u, a + a, "a", "b"), log_odds_shift(g, u, a, "a", "b") + log_odds_shift(g, u, a, "a", "b"));
  }
  for (int t = 0; t < 100; ++t) {
    const double a1 = unif(rng), a2 = unif(rng);
    const double lhs = log_odds_shift(g, u, a1 + a2, "a", "c");
    const double rhs = log_odds_shift(g, u, a1, "a", "c") + log_odds_shift(g, u, a2, "a", "c");
    EXPECT_NEAR(lhs, rhs, 1e-13 * std::max(1.0, std::fabs(lhs)));
    EXPECT_EQ(log_odds_shift(g, u, a1, "a", "c"), -log_odds_shift(g, u, a1, "c", "a"));
  }
}

// king/queen/King/Queen with a gender axis f and a capitalization axis c.
struct Toy {
  UnembeddingTable table;
  Vector f;
  Vector c;
};

Toy royal_table(Rng& rng) {
  const std::size_t d = 8;
  const Vector base = testing::random_vector(d, rng);
  Vector f(d, 0.0), c(d, 0.0);
  f[0] = 1.0;
  c[1] = 1.0;
  const Vector jitter = testing::random_vector(d, rng, 0.05);
  std::vector<Vector> rows(4, base);
  for (std::size_t i = 0; i < d; ++i) {
    rows[1][i] += f[i];
    rows[2][i] += c[i] + jitter[i];
    rows[3][i] += f[i] + c[i];
  }
  std::vector<double> flat;
  for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  return {UnembeddingTable(Matrix(4, d, flat), {"king", "queen", "King", "Queen"}), f, c};
}

TEST(ArrowMap, RoyalTableSteersRight) {
  Rng rng(4);
  const Toy toy = royal_table(rng);
  // Male to female differences read off the table, with noise and uneven scales.
  std::vector<Vector> cols;
  std::lognormal_distribution<double> scale(0.0, 1.0);
  for (int j = 0; j < 20; ++j) {
    const auto q = toy.table.gamma(j % 2 ? "Queen" : "queen");
    const auto k = toy.table.gamma(j % 2 ? "King" : "king");
    const Vector noise = testing::random_vector(8, rng, 0.1);
    const double s = scale(rng);
    Vector col(8);
    for (std::size_t i = 0; i < 8; ++i) col[i] = s * (q[i] - k[i] + noise[i]);
    cols.push_back(col);
  }
  Vector u = sand_euclidean({Matrix::from_columns(cols), {}}).vector();
  // Remove the capitalization component.
  const auto kc = toy.table.gamma("King");
  const auto kl = toy.table.gamma("king");
  Vector g(8);
  for (std::size_t i = 0; i < 8; ++i) g[i] = kc[i] - kl[i];
  const double proj = dot(u, g) / dot(g, g);
  for (std::size_t i = 0; i < 8; ++i) u[i] -= proj * g[i];
  const auto steer = dir(u);

  const Matrix acts = testing::random_matrix(8, 3, rng);
  const ArrowMap m = arrow_map(acts, toy.table, steer, kDefaultAlpha, {"queen", "king"}, {"King", "king"});
  ASSERT_EQ(m.records.size(), 3u);
  for (const auto& r : m.records) {
    EXPECT_GT(r.dx, 0.0);
    EXPECT_LE(std::fabs(r.dy), 0.1 * std::fabs(r.dx));
  }
  EXPECT_EQ(m.records[0].input_id, "0");
  EXPECT_EQ(m.records[2].input_id, "2");
}

TEST(ArrowMap, AlignedDirectionHandOracle) {
  Rng rng(5);
  const Toy toy = royal_table(rng);
  const auto u = dir(toy.f);
  const ArrowMap m = arrow_map(Matrix::zeros(8, 1), toy.table, u, 10.0, {"queen", "king"}, {"King", "king"});
  const auto kc = toy.table.gamma("King");
  const auto kl = toy.table.gamma("king");
  double expect_dy = 0.0;
  for (std::size_t i = 0; i < 8; ++i) expect_dy += u.vector()[i] * (kc[i] - kl[i]);
  EXPECT_NEAR(m.records[0].dx, 10.0, 1e-12);
  EXPECT_NEAR(m.records[0].dy, 10.0 * expect_dy, 1e-12);
}

TEST(ArrowMap, ArrowsIgnoreActivationsAndScaleWithAlpha) {
  Rng rng(6);
  const Toy toy = royal_table(rng);
  const auto u = dir(testing::random_vector(8, rng));
  const Matrix acts = testing::random_matrix(8, 3, rng, 5.0);
  const ArrowMap m5 = arrow_map(acts, toy.table, u, 5.0, {"queen", "king"}, {"King", "king"}, {"x", "y", "z"});
  const ArrowMap m10 = arrow_map(acts, toy.table, u, 10.0, {"queen", "king"}, {"King", "king"}, {"x", "y", "z"});
  const ArrowMap m0 = arrow_map(acts, toy.table, u, 0.0, {"queen", "king"}, {"King", "king"});
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(m5.records[j].dx, m5.records[0].dx);
    EXPECT_EQ(m5.records[j].dy, m5.records[0].dy);
    EXPECT_EQ(m10.records[j].dx, 2.0 * m5.records[j].dx);
    EXPECT_EQ(m10.records[j].dy, 2.0 * m5.records[j].dy);
    EXPECT_EQ(m0.records[j].dx, 0.0);
    EXPECT_EQ(m0.records[j].dy, 0.0);
  }
  EXPECT_EQ(m5.mean_arrow.first, m5.records[0].dx);
  EXPECT_EQ(m5.mean_arrow.second, m5.records[0].dy);
  EXPECT_EQ(m5.records[1].input_id, "y");
  EXPECT_EQ(m5.alpha, 5.0);
}

TEST(ArrowMap, Errors) {
  Rng rng(7);
  const Toy toy = royal_table(rng);
  const auto u = dir(testing::random_vector(8, rng));
  EXPECT_THROW(arrow_map(Matrix::zeros(8, 0), toy.table, u, 1.0, {"queen", "king"}, {"King", "king"}),
               ValidationError);
  EXPECT_THROW(arrow_map(Matrix::zeros(8, 1), toy.table, u, 1.0, {"prince", "king"}, {"King", "king"}),
               ValidationError);
  EXPECT_THROW(arrow_map(Matrix::zeros(7, 1), toy.table, u, 1.0, {"queen", "king"}, {"King", "king"}),
               DimensionError);
  EXPECT_THROW(arrow_map(Matrix::zeros(8, 2), toy.table, u, 1.0, {"queen", "king"}, {"King", "king"}, {"a"}),
               ValidationError);
}

}  // namespace
}  // namespace sandkit
