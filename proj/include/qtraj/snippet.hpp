#pragma once

#include "csv.hpp"
#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace qtraj {

//! Closed interval [lo, hi].
struct Interval
{
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const { return x >= lo && x <= hi; }
  double width() const { return hi - lo; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

//! One subject's short longitudinal record, sorted by time.
struct Snippet
{
  std::string subject_id;
  std::vector<double> times;
  std::vector<double> values;
  std::optional<std::string> group;
};

//! Level/slope surrogate of one snippet: within-snippet mean and OLS slope.
struct LevelSlopePair
{
  std::string subject_id;
  double level = 0.0;
  double slope = 0.0;
  std::size_t n_obs = 0;
  double time_span = 0.0;
  double last_level = 0.0;
  std::optional<std::string> group;

  friend bool operator==(const LevelSlopePair&, const LevelSlopePair&) = default;
};

struct Exclusion
{
  std::string subject_id;
  std::string reason;

  friend bool operator==(const Exclusion&, const Exclusion&) = default;
};

using Reduction = std::variant<LevelSlopePair, Exclusion>;

//! One long-format input row.
struct Record
{
  std::string subject_id;
  double time = 0.0;
  double value = 0.0;
  std::optional<std::string> group;
  std::size_t row = 0; //!< source row for error messages; 0 if unknown
};

//! Reads `subject_id,time,value[,group]` records. Column order is free;
//! extra columns are ignored.
inline std::vector<Record> read_records(std::istream& in, std::string_view group_column = "group")
{
  auto table = csv::read(in);
  auto id_col = table.column("subject_id");
  auto time_col = table.column("time");
  auto value_col = table.column("value");
  auto group_col = table.column(group_column);
  for (auto [col, name] : {std::pair{id_col, "subject_id"},
                           std::pair{time_col, "time"},
                           std::pair{value_col, "value"}}) {
    if (!col)
      throw ParseError(1, std::string("missing required column '") + name + "'");
  }

  std::vector<Record> records;
  records.reserve(table.rows.size());
  for (const auto& [row, fields] : table.rows) {
    Record r;
    r.row = row;
    r.subject_id = fields[*id_col];
    if (r.subject_id.empty())
      throw ParseError(row, "empty subject_id");
    auto t = csv::parse_double(fields[*time_col]);
    if (!t)
      throw ParseError(row, "time '" + fields[*time_col] + "' is not a finite number");
    auto v = csv::parse_double(fields[*value_col]);
    if (!v)
      throw ParseError(row, "value '" + fields[*value_col] + "' is not a finite number");
    r.time = *t;
    r.value = *v;
    if (group_col && !fields[*group_col].empty())
      r.group = fields[*group_col];
    records.push_back(std::move(r));
  }
  return records;
}

//! Groups records into one snippet per subject (ordered by subject id), each
//! sorted by time. Rejects duplicate timestamps and conflicting group labels.
inline std::vector<Snippet> parse_snippets(std::span<const Record> records)
{
  std::map<std::string, std::vector<const Record*>> by_subject;
  for (const auto& r : records) {
    if (!std::isfinite(r.time) || !std::isfinite(r.value))
      throw ParseError(r.row, "non-finite time or value");
    by_subject[r.subject_id].push_back(&r);
  }

  std::vector<Snippet> snippets;
  snippets.reserve(by_subject.size());
  for (auto& [id, rows] : by_subject) {
    std::stable_sort(rows.begin(), rows.end(), [](const Record* a, const Record* b) {
      return a->time < b->time;
    });
    Snippet s;
    s.subject_id = id;
    s.group = rows.front()->group;
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (j > 0 && rows[j]->time == rows[j - 1]->time)
        throw ValidationError("subject '" + id + "' has duplicate timestamp " +
                              csv::format(rows[j]->time));
      if (rows[j]->group != s.group)
        throw ValidationError("subject '" + id + "' has conflicting group labels");
      s.times.push_back(rows[j]->time);
      s.values.push_back(rows[j]->value);
    }
    snippets.push_back(std::move(s));
  }
  return snippets;
}

//! Level = mean of values, slope = least-squares slope of values on times.
//! Snippets without a defined slope are returned as exclusions.
inline Reduction extract_level_slope(const Snippet& snippet)
{
  const std::size_t n = snippet.values.size();
  if (n != snippet.times.size())
    throw ValidationError("subject '" + snippet.subject_id +
                          "' has mismatched times and values");
  if (n < 2)
    return Exclusion{snippet.subject_id, "fewer than two observations"};

  const double dn = static_cast<double>(n);
  const double t_mean =
    std::accumulate(snippet.times.begin(), snippet.times.end(), 0.0) / dn;
  const double y_mean =
    std::accumulate(snippet.values.begin(), snippet.values.end(), 0.0) / dn;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double dt = snippet.times[j] - t_mean;
    sxx += dt * dt;
    sxy += dt * (snippet.values[j] - y_mean);
  }
  if (!(sxx > 0.0))
    return Exclusion{snippet.subject_id, "zero time variance"};

  LevelSlopePair pair;
  pair.subject_id = snippet.subject_id;
  pair.level = y_mean;
  pair.slope = sxy / sxx;
  pair.n_obs = n;
  pair.time_span = snippet.times.back() - snippet.times.front();
  pair.last_level = snippet.values.back();
  pair.group = snippet.group;
  return pair;
}

//! Immutable collection of level/slope pairs with their empirical ranges.
class SnippetDataset
{
public:
  const std::vector<LevelSlopePair>& pairs() const { return pairs_; }
  const std::vector<Exclusion>& exclusions() const { return exclusions_; }
  const Interval& level_range() const { return level_range_; }
  const Interval& slope_range() const { return slope_range_; }
  std::size_t size() const { return pairs_.size(); }

  //! Looks up a retained subject; nullptr if absent.
  const LevelSlopePair* find(std::string_view subject_id) const
  {
    for (const auto& p : pairs_)
      if (p.subject_id == subject_id)
        return &p;
    return nullptr;
  }

  friend SnippetDataset build_dataset(std::vector<LevelSlopePair>,
                                      std::vector<Exclusion>);

private:
  std::vector<LevelSlopePair> pairs_;
  std::vector<Exclusion> exclusions_;
  Interval level_range_;
  Interval slope_range_;
};

//! Requires at least two retained pairs with finite level and slope.
inline SnippetDataset build_dataset(std::vector<LevelSlopePair> pairs,
                                    std::vector<Exclusion> exclusions = {})
{
  if (pairs.size() < 2)
    throw InsufficientDataError("need at least 2 level/slope pairs, have " +
                                std::to_string(pairs.size()));
  SnippetDataset ds;
  constexpr double inf = std::numeric_limits<double>::infinity();
  ds.level_range_ = {inf, -inf};
  ds.slope_range_ = {inf, -inf};
  for (const auto& p : pairs) {
    if (!std::isfinite(p.level) || !std::isfinite(p.slope))
      throw ValidationError("subject '" + p.subject_id + "' has non-finite level or slope");
    ds.level_range_.lo = std::min(ds.level_range_.lo, p.level);
    ds.level_range_.hi = std::max(ds.level_range_.hi, p.level);
    ds.slope_range_.lo = std::min(ds.slope_range_.lo, p.slope);
    ds.slope_range_.hi = std::max(ds.slope_range_.hi, p.slope);
  }
  ds.pairs_ = std::move(pairs);
  ds.exclusions_ = std::move(exclusions);
  return ds;
}

inline SnippetDataset build_dataset(std::span<const Reduction> reductions)
{
  std::vector<LevelSlopePair> pairs;
  std::vector<Exclusion> exclusions;
  for (const auto& r : reductions) {
    if (const auto* p = std::get_if<LevelSlopePair>(&r))
      pairs.push_back(*p);
    else
      exclusions.push_back(std::get<Exclusion>(r));
  }
  return build_dataset(std::move(pairs), std::move(exclusions));
}

inline SnippetDataset reduce_snippets(std::span<const Snippet> snippets)
{
  std::vector<Reduction> reductions;
  reductions.reserve(snippets.size());
  for (const auto& s : snippets)
    reductions.push_back(extract_level_slope(s));
  return build_dataset(reductions);
}

//! Writes `subject_id,level,slope,n_obs,time_span,last_level[,group]`. The
//! group column is present when any pair carries a group.
inline void write_pairs_csv(std::ostream& out, std::span<const LevelSlopePair> pairs)
{
  const bool grouped = std::any_of(pairs.begin(), pairs.end(),
                                   [](const auto& p) { return p.group.has_value(); });
  out << "subject_id,level,slope,n_obs,time_span,last_level";
  if (grouped)
    out << ",group";
  out << '\n';
  for (const auto& p : pairs) {
    out << csv::quote(p.subject_id) << ',' << csv::format(p.level) << ','
        << csv::format(p.slope) << ',' << p.n_obs << ',' << csv::format(p.time_span)
        << ',' << csv::format(p.last_level);
    if (grouped)
      out << ',' << csv::quote(p.group.value_or(""));
    out << '\n';
  }
}

//! Reads pairs in the layout of write_pairs_csv. Only subject_id, level and
//! slope are required; last_level defaults to level.
inline std::vector<LevelSlopePair> read_pairs(std::istream& in,
                                              std::string_view group_column = "group")
{
  auto table = csv::read(in);
  auto id_col = table.column("subject_id");
  auto level_col = table.column("level");
  auto slope_col = table.column("slope");
  for (auto [col, name] : {std::pair{id_col, "subject_id"},
                           std::pair{level_col, "level"},
                           std::pair{slope_col, "slope"}}) {
    if (!col)
      throw ParseError(1, std::string("missing required column '") + name + "'");
  }
  auto n_col = table.column("n_obs");
  auto span_col = table.column("time_span");
  auto last_col = table.column("last_level");
  auto group_col = table.column(group_column);

  auto number = [](std::size_t row, const std::string& field, const char* name) {
    auto v = csv::parse_double(field);
    if (!v)
      throw ParseError(row, std::string(name) + " '" + field + "' is not a finite number");
    return *v;
  };
  std::vector<LevelSlopePair> pairs;
  pairs.reserve(table.rows.size());
  for (const auto& [row, fields] : table.rows) {
    LevelSlopePair p;
    p.subject_id = fields[*id_col];
    if (p.subject_id.empty())
      throw ParseError(row, "empty subject_id");
    p.level = number(row, fields[*level_col], "level");
    p.slope = number(row, fields[*slope_col], "slope");
    p.n_obs = 2;
    if (n_col) {
      const double n = number(row, fields[*n_col], "n_obs");
      if (!(n >= 2 && n == std::floor(n)))
        throw ParseError(row, "n_obs must be an integer >= 2");
      p.n_obs = static_cast<std::size_t>(n);
    }
    if (span_col)
      p.time_span = number(row, fields[*span_col], "time_span");
    p.last_level = last_col ? number(row, fields[*last_col], "last_level") : p.level;
    if (group_col && !fields[*group_col].empty())
      p.group = fields[*group_col];
    pairs.push_back(std::move(p));
  }
  return pairs;
}

//! Writes snippets back out in long format.
inline void write_snippets_csv(std::ostream& out, std::span<const Snippet> snippets)
{
  const bool grouped = std::any_of(snippets.begin(), snippets.end(),
                                   [](const auto& s) { return s.group.has_value(); });
  out << "subject_id,time,value";
  if (grouped)
    out << ",group";
  out << '\n';
  for (const auto& s : snippets) {
    for (std::size_t j = 0; j < s.times.size(); ++j) {
      out << csv::quote(s.subject_id) << ',' << csv::format(s.times[j]) << ','
          << csv::format(s.values[j]);
      if (grouped)
        out << ',' << csv::quote(s.group.value_or(""));
      out << '\n';
    }
  }
}

} // namespace qtraj
