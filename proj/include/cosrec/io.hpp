#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "cosrec/core.hpp"
#include "cosrec/harness.hpp"

namespace cosrec {

namespace detail {

/// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& field, int line_no) {
  double value{};
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc{} || res.ptr != last)
    throw DataError("line " + std::to_string(line_no) + ": invalid number '" +
                    field + "'");
  return value;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace detail

/// Raw parse of a ratings-matrix file. Predictor entries use 0 for "NA";
/// target entries use NaN. Ratings must be >= 1: a literal 0 is rejected so
/// files never depend on the internal unrated encoding.
struct ParsedMatrix {
  int item_count = 0;
  std::vector<std::string> user_ids;
  std::vector<std::vector<double>> predictors;
  std::vector<double> targets;

  double max_rating() const {
    double max_seen = 0.0;
    for (const auto& row : predictors)
      for (double v : row) max_seen = std::max(max_seen, v);
    for (double t : targets)
      if (!std::isnan(t)) max_seen = std::max(max_seen, t);
    return max_seen;
  }
};

/// Field value: a decimal >= 1 or the exact token "NA".
inline double parse_rating_field(const std::string& field, int line_no,
                                 bool* is_na) {
  if (field == "NA") {
    *is_na = true;
    return 0.0;
  }
  *is_na = false;
  const double value = detail::parse_double(field, line_no);
  if (!(value >= 1.0))
    throw DataError("line " + std::to_string(line_no) +
                    ": rating must be >= 1 or 'NA', got '" + field + "'");
  return value;
}

inline ParsedMatrix read_matrix_csv(std::istream& in) {
  ParsedMatrix out;
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw DataError("line 1: missing header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_csv_line(line);
  if (header.size() < 3 || header.front() != "user" ||
      header.back() != "target")
    throw DataError("line 1: header must be user,item_1,...,item_d,target");
  out.item_count = static_cast<int>(header.size()) - 2;
  for (int j = 1; j <= out.item_count; ++j)
    if (header[static_cast<std::size_t>(j)] != "item_" + std::to_string(j))
      throw DataError("line 1: column " + std::to_string(j + 1) +
                      " must be item_" + std::to_string(j));

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (static_cast<int>(fields.size()) != out.item_count + 2)
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(out.item_count + 2) + " fields, got " +
                      std::to_string(fields.size()));
    out.user_ids.push_back(fields.front());
    std::vector<double> row(static_cast<std::size_t>(out.item_count));
    bool is_na = false;
    for (int j = 1; j <= out.item_count; ++j)
      row[static_cast<std::size_t>(j - 1)] =
          parse_rating_field(fields[static_cast<std::size_t>(j)], line_no,
                             &is_na);
    out.predictors.push_back(std::move(row));
    const double target =
        parse_rating_field(fields.back(), line_no, &is_na);
    out.targets.push_back(is_na ? std::numeric_limits<double>::quiet_NaN()
                                : target);
  }
  if (out.user_ids.empty()) throw DataError("matrix file has no user rows");
  return out;
}

inline ParsedMatrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_matrix_csv(in);
}

/// Builds the estimator's view of a parsed file: each user's reveal mask is
/// the set of non-NA predictors; users with a target rating respond.
inline DatabaseSnapshot to_snapshot(const ParsedMatrix& parsed,
                                    const RatingScale& scale) {
  std::vector<DbUser> users;
  std::vector<int> responders;
  for (std::size_t i = 0; i < parsed.user_ids.size(); ++i) {
    DbUser u;
    std::vector<int> revealed;
    for (int j = 1; j <= parsed.item_count; ++j)
      if (parsed.predictors[i][static_cast<std::size_t>(j - 1)] != 0.0)
        revealed.push_back(j);
    u.raw = RatingVector::checked(parsed.predictors[i], scale);
    u.reveal = MaskSet::checked(std::move(revealed), parsed.item_count);
    u.target = parsed.targets[i];
    if (!std::isnan(parsed.targets[i]))
      responders.push_back(static_cast<int>(i) + 1);
    users.push_back(std::move(u));
  }
  if (responders.empty())
    throw DataError("matrix file has no user with a target rating");
  return DatabaseSnapshot(scale, std::move(users), std::move(responders));
}

inline void write_matrix_csv(std::ostream& out, const DatabaseSnapshot& db,
                             const std::vector<std::string>& user_ids) {
  out << "user";
  for (int j = 1; j <= db.scale().item_count(); ++j) out << ",item_" << j;
  out << ",target\n";
  for (int i = 1; i <= db.size(); ++i) {
    const DbUser& u = db.user(i);
    out << user_ids[static_cast<std::size_t>(i - 1)];
    for (int j = 1; j <= db.scale().item_count(); ++j) {
      out << ',';
      if (u.reveal.contains(j))
        out << detail::format_double(u.raw.at_item(j));
      else
        out << "NA";
    }
    out << ',';
    if (std::isnan(u.target))
      out << "NA";
    else
      out << detail::format_double(u.target);
    out << '\n';
  }
}

inline void write_matrix_csv(const std::string& path,
                             const DatabaseSnapshot& db,
                             const std::vector<std::string>& user_ids) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_matrix_csv(out, db, user_ids);
}

/// The query row of a prediction request: d comma-separated ratings, each a
/// decimal >= 1 or "NA".
inline std::vector<double> parse_query_row(const std::string& csv_values,
                                           int item_count) {
  const auto fields = detail::split_csv_line(csv_values);
  if (static_cast<int>(fields.size()) != item_count)
    throw DataError("query row: expected " + std::to_string(item_count) +
                    " values, got " + std::to_string(fields.size()));
  std::vector<double> values(static_cast<std::size_t>(item_count));
  bool is_na = false;
  for (std::size_t j = 0; j < fields.size(); ++j)
    values[j] = parse_rating_field(fields[j], 1, &is_na);
  return values;
}

inline void write_results_csv(std::ostream& out,
                              const ConvergenceResult& result) {
  out << "n,k,replications,mean_abs_err,std_err\n";
  for (const StudyRow& row : result.rows) {
    out << row.n << ',' << row.k << ',' << row.replications << ','
        << detail::format_double(row.mean_abs_err) << ','
        << detail::format_double(row.std_err) << '\n';
  }
  out << "# slope=" << detail::format_double(result.fit.slope)
      << " intercept=" << detail::format_double(result.fit.intercept)
      << " r2=" << detail::format_double(result.fit.r_squared) << '\n';
}

inline void write_results_csv(const std::string& path,
                              const ConvergenceResult& result) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_results_csv(out, result);
}

/// (n, mean_abs_err) pairs from a results file; comment lines are ignored.
inline std::vector<std::pair<double, double>> read_results_csv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<std::pair<double, double>> points;
  std::string line;
  int line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!saw_header) {
      if (line != "n,k,replications,mean_abs_err,std_err")
        throw DataError("line " + std::to_string(line_no) +
                        ": expected results header "
                        "n,k,replications,mean_abs_err,std_err");
      saw_header = true;
      continue;
    }
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 5)
      throw DataError("line " + std::to_string(line_no) +
                      ": expected 5 fields");
    points.emplace_back(detail::parse_double(fields[0], line_no),
                        detail::parse_double(fields[3], line_no));
  }
  if (points.empty())
    throw DataError("results file contains no data rows");
  return points;
}

}  // namespace cosrec
