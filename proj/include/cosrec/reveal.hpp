#pragma once

#include <cassert>
#include <cstdint>
#include <string>
#include <vector>

#include "cosrec/core.hpp"
#include "cosrec/rng.hpp"

namespace cosrec {

/// How a user's rated-item set grows over time. A user's whole reveal
/// history is one uniform random permutation of {1, ..., d}: the mask after
/// `age` steps is the prefix of size min(d, b0 + b*(age-1)). Every sequence
/// starts nonempty, grows monotonically and covers all d items after a
/// finite number of steps.
class RevealProcess {
 public:
  enum class Kind { all_at_once, incremental_4_plus_1, uniform_batch };

  /// Users rate every item the first time they appear.
  static RevealProcess all_at_once() {
    return RevealProcess(Kind::all_at_once, 0, 0);
  }

  /// Four uniformly guessed items at entry, then exactly one new uniformly
  /// chosen item per step. Requires d >= 4.
  static RevealProcess incremental_4_plus_1() {
    return RevealProcess(Kind::incremental_4_plus_1, 4, 1);
  }

  /// Generalization used for experiments: `initial` items at entry, then
  /// min(per_step, #remaining) uniform items per step. Not part of the
  /// reference protocols above.
  static RevealProcess uniform_batch(int initial, int per_step) {
    if (initial < 1)
      throw std::invalid_argument("uniform_batch: initial size must be >= 1");
    if (per_step < 1)
      throw std::invalid_argument("uniform_batch: step size must be >= 1");
    return RevealProcess(Kind::uniform_batch, initial, per_step);
  }

  Kind kind() const { return kind_; }

  std::string kind_name() const {
    switch (kind_) {
      case Kind::all_at_once: return "all_at_once";
      case Kind::incremental_4_plus_1: return "incremental_4_plus_1";
      case Kind::uniform_batch: return "uniform_batch";
    }
    return {};
  }

  void validate_for(int item_count) const {
    if (kind_ == Kind::incremental_4_plus_1 && item_count < 4)
      throw std::invalid_argument(
          "incremental_4_plus_1 requires at least 4 items");
    if (kind_ == Kind::uniform_batch && initial_ > item_count)
      throw std::invalid_argument(
          "uniform_batch: initial size exceeds item count");
  }

  int initial_size(int item_count) const {
    return kind_ == Kind::all_at_once ? item_count : initial_;
  }

  int per_step(int item_count) const {
    return kind_ == Kind::all_at_once ? item_count : per_step_;
  }

  /// Mask size after `age` steps (age >= 1).
  int mask_size(int item_count, int age) const {
    const long long size = static_cast<long long>(initial_size(item_count)) +
                           static_cast<long long>(per_step(item_count)) *
                               (static_cast<long long>(age) - 1);
    return static_cast<int>(std::min<long long>(item_count, size));
  }

  /// One user's full reveal history as a permutation of {1, ..., d}.
  std::vector<int> draw_schedule(int item_count, Rng& rng) const {
    validate_for(item_count);
    return rng.permutation(item_count);
  }

  /// The law of the first-step mask; query masks are drawn from this same
  /// law so a prediction target looks like a user entering the database.
  MaskSet draw_initial_mask(int item_count, Rng& rng) const {
    validate_for(item_count);
    if (kind_ == Kind::all_at_once) return MaskSet::full(item_count);
    std::vector<int> order = rng.permutation(item_count);
    order.resize(static_cast<std::size_t>(initial_size(item_count)));
    return MaskSet::checked(std::move(order), item_count);
  }

 private:
  RevealProcess(Kind kind, int initial, int per_step)
      : kind_(kind), initial_(initial), per_step_(per_step) {}

  Kind kind_;
  int initial_;
  int per_step_;
};

/// Which users have rated the target item by time n.
class ResponderProcess {
 public:
  enum class Kind { all, bernoulli_growth };

  /// Every user responds: R_n = {1, ..., n}.
  static ResponderProcess all() { return ResponderProcess(Kind::all, 0.0); }

  /// R_1 = {1}; at each later step one uniformly chosen non-responder is
  /// added with probability p. |R_n| - 1 is Binomial(n - 1, p).
  static ResponderProcess bernoulli_growth(double p) {
    if (!(p > 0.0 && p <= 1.0))
      throw std::invalid_argument("bernoulli_growth: p must be in (0, 1]");
    return ResponderProcess(Kind::bernoulli_growth, p);
  }

  Kind kind() const { return kind_; }
  double p() const { return p_; }

  std::string kind_name() const {
    return kind_ == Kind::all ? "all" : "bernoulli_growth";
  }

 private:
  ResponderProcess(Kind kind, double p) : kind_(kind), p_(p) {}

  Kind kind_;
  double p_;
};

/// Sequential state of the responder set. Supports stand-alone stepping so
/// the responder law can be studied without the full simulator.
class ResponderState {
 public:
  ResponderState(ResponderProcess process, Rng rng)
      : process_(process), rng_(rng) {}

  /// Advance to the next time step (the new user has just entered).
  void step() {
    ++time_;
    member_.push_back(false);
    if (process_.kind() == ResponderProcess::Kind::all) {
      member_.back() = true;
      ++count_;
      return;
    }
    if (time_ == 1) {
      member_.back() = true;
      ++count_;
      return;
    }
    // The new user joins the candidate pool before the coin flip.
    non_members_.push_back(time_);
    if (rng_.bernoulli(process_.p())) {
      const auto pick = static_cast<std::size_t>(rng_.below(non_members_.size()));
      const int user = non_members_[pick];
      non_members_[pick] = non_members_.back();
      non_members_.pop_back();
      member_[static_cast<std::size_t>(user - 1)] = true;
      ++count_;
    }
  }

  int time() const { return time_; }
  int count() const { return count_; }
  bool is_member(int i) const { return member_[static_cast<std::size_t>(i - 1)]; }

  std::vector<int> members() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(count_));
    for (int i = 1; i <= time_; ++i)
      if (member_[static_cast<std::size_t>(i - 1)]) out.push_back(i);
    return out;
  }

 private:
  ResponderProcess process_;
  Rng rng_;
  int time_ = 0;
  int count_ = 0;
  std::vector<bool> member_;
  std::vector<int> non_members_;  // only for bernoulli growth; new user 1 is
                                  // a member immediately and never enters
};

/// Discrete-time simulator: at each step a new user enters and reveals a
/// first batch of items while all existing users advance one step of their
/// reveal sequences and the responder set advances by its own law.
///
/// Reveal schedules are materialized explicitly at entry (one permutation
/// per user); RNG streams derive from (master seed, replication, user) so
/// runs are reproducible and replications independent.
class SimState {
 public:
  SimState(RatingScale scale, RevealProcess reveal, ResponderProcess responders,
           std::uint64_t master_seed, std::uint64_t replication)
      : scale_(scale), reveal_(reveal),
        responders_(responders,
                    Rng::stream(master_seed, replication, 0,
                                stream_purpose::responders)),
        master_seed_(master_seed), replication_(replication) {
    reveal_.validate_for(scale_.item_count());
  }

  /// A new user enters with raw ratings and a target rating.
  void step(RatingVector raw, double target) {
    if (raw.size() != scale_.item_count())
      throw std::invalid_argument("SimState::step: ratings length mismatch");
    ++time_;
    Rng schedule_rng = Rng::stream(master_seed_, replication_,
                                   static_cast<std::uint64_t>(time_),
                                   stream_purpose::reveal_schedule);
    users_.push_back(UserRecord{time_,
                                reveal_.draw_schedule(scale_.item_count(),
                                                      schedule_rng),
                                std::move(raw), target});
    responders_.step();
#ifndef NDEBUG
    for (int i = 1; i < time_; ++i)
      assert(mask_size_at(i, time_) >= mask_size_at(i, time_ - 1));
#endif
  }

  int time() const { return time_; }
  const RatingScale& scale() const { return scale_; }

  int reveal_mask_size(int i) const { return mask_size_at(i, time_); }

  /// User i's reveal mask at the current time.
  MaskSet reveal_mask(int i) const {
    const UserRecord& u = users_[static_cast<std::size_t>(i - 1)];
    std::vector<int> items(u.schedule.begin(),
                           u.schedule.begin() + reveal_mask_size(i));
    return MaskSet::checked(std::move(items), scale_.item_count());
  }

  /// First time instant at which user i has revealed every item of
  /// `query_mask` (finite for every user: schedules cover all items).
  int first_full_time(int i, const MaskSet& query_mask) const {
    const UserRecord& u = users_[static_cast<std::size_t>(i - 1)];
    int needed_prefix = 0;
    for (int item : query_mask.items()) {
      int pos = 0;
      while (u.schedule[static_cast<std::size_t>(pos)] != item) ++pos;
      needed_prefix = std::max(needed_prefix, pos + 1);
    }
    int age = 1;
    while (reveal_.mask_size(scale_.item_count(), age) < needed_prefix) ++age;
    return u.entry_time + age - 1;
  }

  /// Responders whose current reveal mask covers the query mask.
  std::vector<int> covered_responders(const MaskSet& query_mask) const {
    std::vector<int> covered;
    for (int i : responders_.members()) {
      if (reveal_mask(i).contains_all(query_mask)) covered.push_back(i);
    }
    return covered;
  }

  std::vector<int> responders() const { return responders_.members(); }

  /// Immutable view of the current state for estimation or export. Target
  /// ratings of non-responders are withheld.
  DatabaseSnapshot snapshot() const {
    if (time_ == 0) throw std::invalid_argument("SimState: empty snapshot");
    std::vector<DbUser> rows;
    rows.reserve(users_.size());
    for (int i = 1; i <= time_; ++i) {
      const UserRecord& u = users_[static_cast<std::size_t>(i - 1)];
      DbUser row;
      row.raw = u.raw;
      row.reveal = reveal_mask(i);
      if (responders_.is_member(i)) row.target = u.target;
      rows.push_back(std::move(row));
    }
    return DatabaseSnapshot(scale_, std::move(rows), responders_.members());
  }

 private:
  struct UserRecord {
    int entry_time;
    std::vector<int> schedule;  // permutation of 1..d in reveal order
    RatingVector raw;
    double target;
  };

  int mask_size_at(int i, int at_time) const {
    const UserRecord& u = users_[static_cast<std::size_t>(i - 1)];
    const int age = at_time - u.entry_time + 1;
    return reveal_.mask_size(scale_.item_count(), age);
  }

  RatingScale scale_;
  RevealProcess reveal_;
  ResponderState responders_;
  std::uint64_t master_seed_;
  std::uint64_t replication_;
  int time_ = 0;
  std::vector<UserRecord> users_;
};

namespace detail {

/// Exact binomial coefficient; throws on intermediate overflow.
inline unsigned __int128 binomial_exact(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  unsigned __int128 result = 1;
  for (int t = 1; t <= k; ++t) {
    const auto factor = static_cast<unsigned __int128>(n - k + t);
    if (result > (~static_cast<unsigned __int128>(0)) / factor)
      throw std::overflow_error("binomial_exact: overflow");
    result = result * factor / static_cast<unsigned __int128>(t);
  }
  return result;
}

}  // namespace detail

/// Probability that a user who entered at time i has not yet revealed a
/// fixed 4-item query mask by time n, under the 4-plus-1 incremental
/// process: 0 for i <= n-d+4, else 1 - C(d-4, n-i) / C(d, n+4-i).
/// Binomials are computed exactly in integer arithmetic before dividing.
inline double alpha_closed_form(int n, int i, int d) {
  if (d < 5)
    throw std::invalid_argument("alpha_closed_form: requires d >= 5");
  if (i < 1 || i > n)
    throw std::invalid_argument("alpha_closed_form: need 1 <= i <= n");
  if (i <= n - d + 4) return 0.0;
  const unsigned __int128 num = detail::binomial_exact(d - 4, n - i);
  const unsigned __int128 den = detail::binomial_exact(d, n + 4 - i);
  return 1.0 - static_cast<double>(static_cast<long double>(num) /
                                   static_cast<long double>(den));
}

}  // namespace cosrec
