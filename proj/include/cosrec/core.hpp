#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cosrec {

/// Raised for malformed input files (CSV matrices, results files).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised for invalid experiment configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Rating scale: d predictor items rated in {0} u [1, s], where 0 encodes
/// "unrated" and s > 1 is the maximal rating. The target item is carried
/// separately and never appears inside a RatingVector.
class RatingScale {
 public:
  RatingScale(double max_rating, int item_count)
      : max_rating_(max_rating), item_count_(item_count) {
    if (!(max_rating > 1.0))
      throw std::invalid_argument("RatingScale: max rating must be > 1");
    if (item_count < 1)
      throw std::invalid_argument("RatingScale: item count must be >= 1");
  }

  double max_rating() const { return max_rating_; }
  int item_count() const { return item_count_; }

 private:
  double max_rating_;
  int item_count_;
};

/// A user's ratings over the d predictor items; every entry is either 0
/// (unrated) or lies in [1, s]. Validation is eager: out-of-range entries
/// are rejected at construction, never clamped.
class RatingVector {
 public:
  RatingVector() = default;

  static RatingVector checked(std::vector<double> entries,
                              const RatingScale& scale) {
    if (static_cast<int>(entries.size()) != scale.item_count())
      throw std::invalid_argument("RatingVector: expected " +
                                  std::to_string(scale.item_count()) +
                                  " entries, got " +
                                  std::to_string(entries.size()));
    for (std::size_t j = 0; j < entries.size(); ++j) {
      const double e = entries[j];
      if (e != 0.0 && !(e >= 1.0 && e <= scale.max_rating()))
        throw std::invalid_argument(
            "RatingVector: entry for item " + std::to_string(j + 1) +
            " must be 0 or in [1, " + std::to_string(scale.max_rating()) +
            "], got " + std::to_string(e));
    }
    return RatingVector(std::move(entries));
  }

  /// For values already known to satisfy the range constraint (masked
  /// copies, simulator output).
  static RatingVector unchecked(std::vector<double> entries) {
    return RatingVector(std::move(entries));
  }

  const std::vector<double>& entries() const { return entries_; }
  int size() const { return static_cast<int>(entries_.size()); }

  /// 1-based item access.
  double at_item(int item) const { return entries_[item - 1]; }

  double norm() const {
    double sum = 0.0;
    for (double e : entries_) sum += e * e;
    return std::sqrt(sum);
  }

  bool is_zero() const {
    return std::all_of(entries_.begin(), entries_.end(),
                       [](double e) { return e == 0.0; });
  }

 private:
  explicit RatingVector(std::vector<double> entries)
      : entries_(std::move(entries)) {}

  std::vector<double> entries_;
};

/// A subset of the item indices {1, ..., d}, stored sorted ascending.
class MaskSet {
 public:
  MaskSet() = default;

  static MaskSet checked(std::vector<int> items, int item_count) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    for (int j : items)
      if (j < 1 || j > item_count)
        throw std::invalid_argument("MaskSet: item " + std::to_string(j) +
                                    " outside {1, ..., " +
                                    std::to_string(item_count) + "}");
    return MaskSet(std::move(items));
  }

  static MaskSet full(int item_count) {
    std::vector<int> items(item_count);
    for (int j = 0; j < item_count; ++j) items[j] = j + 1;
    return MaskSet(std::move(items));
  }

  const std::vector<int>& items() const { return items_; }
  int size() const { return static_cast<int>(items_.size()); }
  bool empty() const { return items_.empty(); }

  bool contains(int item) const {
    return std::binary_search(items_.begin(), items_.end(), item);
  }

  /// Superset test: does this mask contain every item of `other`?
  bool contains_all(const MaskSet& other) const {
    return std::includes(items_.begin(), items_.end(), other.items_.begin(),
                         other.items_.end());
  }

  MaskSet intersect(const MaskSet& other) const {
    std::vector<int> common;
    std::set_intersection(items_.begin(), items_.end(), other.items_.begin(),
                          other.items_.end(), std::back_inserter(common));
    return MaskSet(std::move(common));
  }

  int intersection_size(const MaskSet& other) const {
    int count = 0;
    auto a = items_.begin();
    auto b = other.items_.begin();
    while (a != items_.end() && b != other.items_.end()) {
      if (*a < *b)
        ++a;
      else if (*b < *a)
        ++b;
      else {
        ++count;
        ++a;
        ++b;
      }
    }
    return count;
  }

  bool operator==(const MaskSet& other) const { return items_ == other.items_; }

 private:
  explicit MaskSet(std::vector<int> items) : items_(std::move(items)) {}

  std::vector<int> items_;
};

/// The user asking for a prediction: ratings supported exactly on a
/// nonempty mask. Its Euclidean norm is automatically >= 1 (at least one
/// entry >= 1) and <= s * sqrt(d); both bounds are asserted eagerly.
class QueryUser {
 public:
  QueryUser(RatingVector ratings, MaskSet mask, const RatingScale& scale)
      : ratings_(std::move(ratings)), mask_(std::move(mask)) {
    if (mask_.empty()) throw std::invalid_argument("QueryUser: empty mask");
    if (ratings_.size() != scale.item_count())
      throw std::invalid_argument("QueryUser: ratings length mismatch");
    for (int j = 1; j <= ratings_.size(); ++j) {
      const bool rated = ratings_.at_item(j) != 0.0;
      if (rated != mask_.contains(j))
        throw std::invalid_argument(
            "QueryUser: ratings must be nonzero exactly on the mask (item " +
            std::to_string(j) + ")");
    }
    norm_ = ratings_.norm();
    const double upper =
        scale.max_rating() * std::sqrt(static_cast<double>(scale.item_count()));
    if (!(norm_ >= 1.0 && norm_ <= upper + 1e-9))
      throw std::invalid_argument("QueryUser: norm outside [1, s*sqrt(d)]");
  }

  const RatingVector& ratings() const { return ratings_; }
  const MaskSet& mask() const { return mask_; }
  double norm() const { return norm_; }

 private:
  RatingVector ratings_;
  MaskSet mask_;
  double norm_ = 0.0;
};

/// A database user's ratings restricted to reveal-mask /\ query-mask,
/// zero elsewhere. May legitimately be the all-zero vector.
struct MaskedUserVector {
  std::vector<double> values;

  double norm() const {
    double sum = 0.0;
    for (double v : values) sum += v * v;
    return std::sqrt(sum);
  }

  bool is_zero() const {
    return std::all_of(values.begin(), values.end(),
                       [](double v) { return v == 0.0; });
  }
};

/// Entry j of the result is raw_j when j lies in reveal /\ query, else 0.
inline void apply_mask_into(const RatingVector& raw, const MaskSet& reveal,
                            const MaskSet& query, MaskedUserVector& out) {
  out.values.assign(static_cast<std::size_t>(raw.size()), 0.0);
  const auto& a = reveal.items();
  const auto& b = query.items();
  std::size_t ia = 0, ib = 0;
  while (ia < a.size() && ib < b.size()) {
    if (a[ia] < b[ib])
      ++ia;
    else if (b[ib] < a[ia])
      ++ib;
    else {
      out.values[a[ia] - 1] = raw.at_item(a[ia]);
      ++ia;
      ++ib;
    }
  }
}

inline MaskedUserVector apply_mask(const RatingVector& raw,
                                   const MaskSet& reveal,
                                   const MaskSet& query) {
  MaskedUserVector out;
  apply_mask_into(raw, reveal, query, out);
  return out;
}

/// One row of the database at a fixed time: the raw ratings, the items the
/// user has revealed so far, and the target rating (NaN when the user has
/// not rated the target item).
struct DbUser {
  RatingVector raw;
  MaskSet reveal;
  double target = std::numeric_limits<double>::quiet_NaN();
};

/// The time-n state seen by the estimator. `responders` are the users whose
/// target rating is visible; their `target` must be a valid rating. Target
/// values are only ever consulted for responders.
class DatabaseSnapshot {
 public:
  DatabaseSnapshot(RatingScale scale, std::vector<DbUser> users,
                   std::vector<int> responders)
      : scale_(scale), users_(std::move(users)),
        responders_(std::move(responders)) {
    const int n = static_cast<int>(users_.size());
    if (n < 1) throw std::invalid_argument("DatabaseSnapshot: no users");
    std::sort(responders_.begin(), responders_.end());
    if (responders_.empty())
      throw std::invalid_argument("DatabaseSnapshot: responders empty");
    if (std::adjacent_find(responders_.begin(), responders_.end()) !=
        responders_.end())
      throw std::invalid_argument("DatabaseSnapshot: duplicate responder");
    if (responders_.front() < 1 || responders_.back() > n)
      throw std::invalid_argument(
          "DatabaseSnapshot: responder index outside {1, ..., n}");
    for (int i = 1; i <= n; ++i) {
      const DbUser& u = users_[i - 1];
      if (u.raw.size() != scale_.item_count())
        throw std::invalid_argument("DatabaseSnapshot: user " +
                                    std::to_string(i) + " ratings length");
      for (int j : u.reveal.items())
        if (u.raw.at_item(j) == 0.0)
          throw std::invalid_argument("DatabaseSnapshot: user " +
                                      std::to_string(i) +
                                      " reveals unrated item " +
                                      std::to_string(j));
    }
    for (int i : responders_) {
      const double y = users_[i - 1].target;
      if (!(y >= 1.0 && y <= scale_.max_rating()))
        throw std::invalid_argument("DatabaseSnapshot: responder " +
                                    std::to_string(i) +
                                    " target rating outside [1, s]");
    }
  }

  int size() const { return static_cast<int>(users_.size()); }
  const RatingScale& scale() const { return scale_; }
  /// 1-based user access.
  const DbUser& user(int i) const { return users_[i - 1]; }
  const std::vector<int>& responders() const { return responders_; }

 private:
  RatingScale scale_;
  std::vector<DbUser> users_;
  std::vector<int> responders_;
};

}  // namespace cosrec
