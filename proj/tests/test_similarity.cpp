#include "kgalign/similarity.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <vector>

using namespace kgalign;

TEST_CASE("cosine basics") {
  Vector u(3), v(3);
  u << 1, 2, 3;
  v << 3, 2, 1;
  CHECK(cosine(u, v) == doctest::Approx(10.0 / 14.0).epsilon(1e-12));
  CHECK(cosine(u, u) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine(u, Vector::Zero(3)) == 0.0);
  CHECK(cosine(Vector::Zero(3), Vector::Zero(3)) == 0.0);
  Vector w(2);
  CHECK_THROWS_AS(cosine(u, w), UsageError);
  Vector neg = -u;
  CHECK(cosine(u, neg) == doctest::Approx(-1.0));
  CHECK(cosine(u, neg) >= -1.0);  // clamped
}

TEST_CASE("pairwise cosine matches the scalar oracle and is thread-invariant") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g;
  Matrix a(7, 5), b(9, 5);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  for (Index i = 0; i < b.size(); ++i) b.data()[i] = g(rng);
  b.row(4).setZero();  // zero rows must yield 0, not NaN

  const Matrix s1 = pairwise_cosine(a, b, 1);
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.rows(); ++j)
      CHECK(s1(i, j) == doctest::Approx(cosine(Vector(a.row(i)), Vector(b.row(j)))).epsilon(1e-10));

  const Matrix s4 = pairwise_cosine(a, b, 4);
  CHECK((s1 - s4).cwiseAbs().maxCoeff() <= 1e-12);

  Matrix c(2, 4);
  CHECK_THROWS_AS(pairwise_cosine(a, c, 1), UsageError);
}

TEST_CASE("top_k resolves ties by lower id and clamps k") {
  RowVector scores(3);
  scores << 0.2, 0.9, 0.9;
  const auto two = top_k(scores, 2);
  REQUIRE(two.size() == 2);
  CHECK(two[0].id == 1);
  CHECK(two[1].id == 2);
  const auto three = top_k(scores, 3);
  REQUIRE(three.size() == 3);
  CHECK(three[2].id == 0);
  CHECK(top_k(scores, 10).size() == 3);
  CHECK(top_k(scores, 0).empty());

  // positive rescaling preserves the order
  const auto scaled = top_k(RowVector(scores * 7.5), 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(scaled[i].id == three[i].id);
}

TEST_CASE("top_k equals a full-sort oracle on random rows with ties") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> coarse(0, 9);  // quantized scores force ties
  for (int trial = 0; trial < 100; ++trial) {
    RowVector scores(50);
    for (Index i = 0; i < 50; ++i) scores[i] = coarse(rng) / 10.0;
    std::vector<Index> ids(50);
    for (Index i = 0; i < 50; ++i) ids[static_cast<std::size_t>(i)] = i;
    std::sort(ids.begin(), ids.end(), [&](Index x, Index y) {
      if (scores[x] != scores[y]) return scores[x] > scores[y];
      return x < y;
    });
    const int k = 1 + static_cast<int>(rng() % 50);
    const auto got = top_k(scores, k);
    REQUIRE(got.size() == static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
      CHECK(got[static_cast<std::size_t>(i)].id == ids[static_cast<std::size_t>(i)]);
      CHECK(got[static_cast<std::size_t>(i)].score == scores[ids[static_cast<std::size_t>(i)]]);
    }
  }
}

TEST_CASE("rank_of counts strictly-better scores and ties with lower ids") {
  RowVector scores(5);
  scores << 0.3, 0.9, 0.5, 0.5, 0.1;
  const std::vector<Index> all{0, 1, 2, 3, 4};
  CHECK(rank_of(scores, all, 1) == 1);
  CHECK(rank_of(scores, all, 2) == 2);   // beaten by id 1 only
  CHECK(rank_of(scores, all, 3) == 3);   // tie with id 2 resolved against id 3
  CHECK(rank_of(scores, all, 4) == 5);
  const std::vector<Index> pool{1, 3, 4};
  CHECK(rank_of(scores, pool, 3) == 2);  // id 2 outside the pool no longer counts
  CHECK_THROWS_AS(rank_of(scores, pool, 0), UsageError);
}

TEST_CASE("score export writes the top pairs per source") {
  Matrix scores(2, 3);
  scores << 0.1, 0.8, 0.3, 0.9, 0.2, 0.9;
  const auto dir = test_util::temp_dir("scores");
  export_scores_csv(scores, {"s0", "s1"}, {"t0", "t1", "t2"}, dir / "scores.csv", 2);
  CHECK(test_util::read_file(dir / "scores.csv") ==
        "source,target,score\n"
        "s0,t1,0.8\n"
        "s0,t2,0.3\n"
        "s1,t0,0.9\n"
        "s1,t2,0.9\n");
  CHECK_THROWS_AS(export_scores_csv(scores, {"s0"}, {"t0", "t1", "t2"}, dir / "x.csv", 2), UsageError);
}
