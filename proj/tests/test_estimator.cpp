#include <algorithm>
#include <catch2/catch_amalgamated.hpp>

#include "cosrec/estimator.hpp"
#include "cosrec/rng.hpp"

using namespace cosrec;

namespace {

struct Instance {
  RatingScale scale;
  QueryUser query;
  DatabaseSnapshot db;
};

// All reveal masks cover the query mask, so the ranking must agree with
// plain Euclidean nearest neighbors on the normalized restrictions.
Instance random_covered_instance(Rng& rng, bool with_duplicates) {
  const int d = 2 + static_cast<int>(rng.below(9));
  const RatingScale scale(10.0, d);

  std::vector<int> mask_items;
  for (int j = 1; j <= d; ++j)
    if (rng.bernoulli(0.6)) mask_items.push_back(j);
  if (mask_items.empty())
    mask_items.push_back(1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(d))));
  const MaskSet mask = MaskSet::checked(mask_items, d);

  std::vector<double> query_values(static_cast<std::size_t>(d), 0.0);
  for (int j : mask.items())
    query_values[static_cast<std::size_t>(j - 1)] = rng.uniform(1.0, 10.0);
  QueryUser query(RatingVector::unchecked(query_values), mask, scale);

  const int n = 5 + static_cast<int>(rng.below(40));
  std::vector<DbUser> users;
  std::vector<int> responders;
  for (int i = 1; i <= n; ++i) {
    DbUser u;
    if (with_duplicates && i > 1 && rng.bernoulli(0.3)) {
      u = users[static_cast<std::size_t>(rng.below(users.size()))];
    } else {
      std::vector<double> raw(static_cast<std::size_t>(d));
      for (auto& v : raw) v = rng.uniform(1.0, 10.0);
      u.raw = RatingVector::unchecked(std::move(raw));
      u.reveal = MaskSet::full(d);
      u.target = rng.uniform(1.0, 10.0);
    }
    users.push_back(std::move(u));
    responders.push_back(i);
  }
  return Instance{scale, std::move(query),
                  DatabaseSnapshot(scale, std::move(users), std::move(responders))};
}

// Brute-force oracle: rank responders by Euclidean distance between the
// normalized masked vectors, ties to the smaller index.
std::vector<int> euclidean_knn(const Instance& inst, int k) {
  std::vector<std::pair<double, int>> scored;
  const auto& q = inst.query.ratings().entries();
  const double qn = inst.query.norm();
  for (int i : inst.db.responders()) {
    const DbUser& u = inst.db.user(i);
    double norm_sq = 0.0;
    for (int j : inst.query.mask().items()) {
      const double v = u.raw.at_item(j);
      norm_sq += v * v;
    }
    const double un = std::sqrt(norm_sq);
    double dist_sq = 0.0;
    for (int j : inst.query.mask().items()) {
      const double diff = q[static_cast<std::size_t>(j - 1)] / qn -
                          u.raw.at_item(j) / un;
      dist_sq += diff * diff;
    }
    scored.emplace_back(dist_sq, i);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<int> picked;
  for (int t = 0; t < k; ++t) picked.push_back(scored[static_cast<std::size_t>(t)].second);
  std::sort(picked.begin(), picked.end());
  return picked;
}

}  // namespace

TEST_CASE("fewer responders than k yields the empty selection") {
  const RatingScale scale(10.0, 2);
  std::vector<DbUser> users(2);
  for (auto& u : users) {
    u.raw = RatingVector::checked({2, 3}, scale);
    u.reveal = MaskSet::full(2);
    u.target = 4.0;
  }
  const DatabaseSnapshot db(scale, users, {1, 2});
  const QueryUser q(RatingVector::checked({3, 4}, scale), MaskSet::full(2),
                    scale);

  const auto w = select_k_most_similar(q, db, 5, PenaltyMap::identity());
  CHECK(w.selected.empty());
  CHECK(estimate(q, db, 5, PenaltyMap::identity()) == 0.0);
}

TEST_CASE("exact similarity ties go to the smaller index") {
  const RatingScale scale(10.0, 2);
  std::vector<DbUser> users(3);
  users[0] = DbUser{RatingVector::checked({2, 4}, scale), MaskSet::full(2), 3.0};
  users[1] = users[0];  // bitwise duplicate of user 1
  users[2] = DbUser{RatingVector::checked({4, 2}, scale), MaskSet::full(2), 9.0};
  const DatabaseSnapshot db(scale, users, {1, 2, 3});
  const QueryUser q(RatingVector::checked({1, 2}, scale), MaskSet::full(2),
                    scale);

  const auto w = select_k_most_similar(q, db, 1, PenaltyMap::identity());
  REQUIRE(w.selected.size() == 1);
  CHECK(w.selected[0].index == 1);
}

TEST_CASE("k equal to the responder count selects everyone") {
  Rng rng(5);
  const RatingScale scale(10.0, 3);
  std::vector<DbUser> users;
  for (int i = 0; i < 4; ++i) {
    std::vector<double> raw{rng.uniform(1, 10), rng.uniform(1, 10),
                            rng.uniform(1, 10)};
    users.push_back(DbUser{RatingVector::unchecked(raw), MaskSet::full(3), 5.0});
  }
  const DatabaseSnapshot db(scale, users, {1, 2, 3, 4});
  const QueryUser q(RatingVector::checked({2, 3, 4}, scale), MaskSet::full(3),
                    scale);

  const auto w = select_k_most_similar(q, db, 4, PenaltyMap::identity());
  REQUIRE(w.selected.size() == 4);
  for (const auto& e : w.selected) CHECK(e.weight == 0.25);
  CHECK(w.weight_sum() == 1.0);
}

TEST_CASE("single proportional neighbor reproduces the scaled target") {
  const RatingScale scale(10.0, 2);
  std::vector<DbUser> users{
      DbUser{RatingVector::checked({6, 8}, scale), MaskSet::full(2), 5.0}};
  const DatabaseSnapshot db(scale, users, {1});
  const QueryUser q(RatingVector::checked({3, 4}, scale), MaskSet::full(2),
                    scale);
  // |x| = 5, |X| = 10: prediction is 5 * 5/10 = 2.5, exactly
  CHECK(estimate(q, db, 1, PenaltyMap::identity()) == 2.5);
}

TEST_CASE("zero masked vectors carry zero weight") {
  const RatingScale scale(10.0, 4);
  const MaskSet mask = MaskSet::checked({1, 2}, 4);
  const QueryUser q(RatingVector::checked({3, 4, 0, 0}, scale), mask, scale);

  std::vector<DbUser> users;
  // responder 1 reveals nothing the query rated
  users.push_back(DbUser{RatingVector::checked({2, 2, 2, 2}, scale),
                         MaskSet::checked({3, 4}, 4), 9.0});
  // responder 2 is proportional to the query on the mask
  users.push_back(DbUser{RatingVector::checked({6, 8, 2, 2}, scale),
                         MaskSet::full(4), 5.0});
  const DatabaseSnapshot db(scale, users, {1, 2});

  SECTION("mixed selection keeps the zero vector at weight zero") {
    const auto w = select_k_most_similar(q, db, 2, PenaltyMap::identity());
    REQUIRE(w.selected.size() == 2);
    CHECK(w.selected[0].index == 2);
    CHECK(w.selected[0].weight == 0.5);
    CHECK(w.selected[1].index == 1);
    CHECK(w.selected[1].weight == 0.0);
    CHECK(w.weight_sum() == 0.5);
    // 5 * (1/2) * 5/10
    CHECK(estimate(q, db, 2, PenaltyMap::identity()) == 1.25);
  }

  SECTION("all-zero selection returns zero") {
    std::vector<DbUser> blind;
    blind.push_back(users[0]);
    blind.push_back(DbUser{RatingVector::checked({2, 2, 2, 2}, scale),
                           MaskSet::checked({3}, 4), 7.0});
    const DatabaseSnapshot db2(scale, blind, {1, 2});
    CHECK(estimate(q, db2, 2, PenaltyMap::identity()) == 0.0);
  }
}

TEST_CASE("selection agrees with the Euclidean oracle under full coverage") {
  Rng rng(424242);
  for (int trial = 0; trial < 200; ++trial) {
    const Instance inst = random_covered_instance(rng, trial % 5 == 0);
    const int k = 1 + static_cast<int>(rng.below(
        static_cast<std::uint64_t>(inst.db.responders().size())));
    const auto w =
        select_k_most_similar(inst.query, inst.db, k, PenaltyMap::identity());
    std::vector<int> got;
    for (const auto& e : w.selected) got.push_back(e.index);
    std::sort(got.begin(), got.end());
    REQUIRE(got == euclidean_knn(inst, k));
  }
}

TEST_CASE("scale equivariance of the estimate") {
  Rng rng(777);
  for (int trial = 0; trial < 100; ++trial) {
    // entries kept in [2, 4] so both lambda and 1/lambda stay in range
    const int d = 3 + static_cast<int>(rng.below(5));
    const RatingScale scale(20.0, d);
    std::vector<double> qv(static_cast<std::size_t>(d));
    for (auto& v : qv) v = rng.uniform(2.0, 4.0);
    const QueryUser q(RatingVector::checked(qv, scale), MaskSet::full(d), scale);

    std::vector<DbUser> users;
    std::vector<int> responders;
    const int n = 6 + static_cast<int>(rng.below(20));
    for (int i = 1; i <= n; ++i) {
      std::vector<double> raw(static_cast<std::size_t>(d));
      for (auto& v : raw) v = rng.uniform(1.0, 10.0);
      users.push_back(DbUser{RatingVector::unchecked(raw),
                             MaskSet::full(d), rng.uniform(1.0, 10.0)});
      responders.push_back(i);
    }
    const DatabaseSnapshot db(scale, users, responders);

    const double lambda = trial % 2 == 0 ? 2.0 : 3.5;
    std::vector<double> scaled = qv;
    for (auto& v : scaled) v *= lambda;
    const QueryUser q2(RatingVector::checked(scaled, scale), MaskSet::full(d),
                       scale);

    const int k = 1 + static_cast<int>(rng.below(5));
    const auto w1 = select_k_most_similar(q, db, k, PenaltyMap::identity());
    const auto w2 = select_k_most_similar(q2, db, k, PenaltyMap::identity());
    REQUIRE(w1.selected.size() == w2.selected.size());
    for (std::size_t t = 0; t < w1.selected.size(); ++t)
      CHECK(w1.selected[t].index == w2.selected[t].index);

    const double e1 = estimate(q, db, k, PenaltyMap::identity());
    const double e2 = estimate(q2, db, k, PenaltyMap::identity());
    CHECK(e2 / e1 == Catch::Approx(lambda).margin(1e-12));
  }
}

TEST_CASE("estimate range and determinism") {
  Rng rng(2025);
  for (int trial = 0; trial < 100; ++trial) {
    const Instance inst = random_covered_instance(rng, false);
    const int k = 1 + static_cast<int>(rng.below(6));
    const double value =
        estimate(inst.query, inst.db, k, PenaltyMap::identity());
    CHECK(value >= 0.0);
    CHECK(value <= inst.scale.max_rating() * inst.query.norm() + 1e-12);
    // bit-identical on repeat evaluation
    CHECK(value == estimate(inst.query, inst.db, k, PenaltyMap::identity()));

    const auto w =
        select_k_most_similar(inst.query, inst.db, k, PenaltyMap::identity());
    CHECK(w.weight_sum() <= 1.0 + 1e-15);
  }
}
