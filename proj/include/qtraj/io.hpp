#pragma once

#include "cond_dist.hpp"
#include "csv.hpp"
#include "dynamics.hpp"
#include "integrate.hpp"
#include "sim.hpp"

#include <json.hpp>

#include <cstdio>
#include <ostream>
#include <span>
#include <string>

//! CSV and JSON serialisation of trajectories, bands and benchmark reports.
namespace qtraj::io {

using json = nlohmann::ordered_json;

inline json number(double v)
{
  return std::isfinite(v) ? json(v) : json(nullptr);
}

//! Column suffix for a coverage, e.g. 0.9 -> "90", 0.975 -> "97.5".
inline std::string coverage_label(double coverage)
{
  return csv::format(std::round(coverage * 1e6) / 1e4);
}

//! `s,value`
inline void write_trajectory_csv(std::ostream& out, const TrajectorySolution& sol)
{
  out << "s,value\n";
  for (std::size_t i = 0; i < sol.values.size(); ++i)
    out << csv::format(sol.s[i]) << ',' << csv::format(sol.values[i]) << '\n';
}

inline json integrator_json(const IntegratorSpec& spec)
{
  return {{"method", to_string(spec.method)},
          {"step", spec.step},
          {"horizon", spec.horizon},
          {"max_steps", spec.max_steps}};
}

inline json trajectory_json(const TrajectorySolution& sol, std::optional<std::uint64_t> seed = {})
{
  json j;
  j["alpha"] = sol.alpha ? json(*sol.alpha) : json("mean");
  j["x0"] = sol.x0;
  j["integrator"] = integrator_json(sol.spec);
  j["exit_reason"] = to_string(sol.exit_reason);
  j["truncated_at"] = sol.truncated_at ? json(*sol.truncated_at) : json(nullptr);
  if (!sol.message.empty())
    j["message"] = sol.message;
  j["seed"] = seed ? json(*seed) : json(nullptr);
  j["s"] = sol.s;
  j["values"] = sol.values;
  return j;
}

//! `s,value,lower90,upper90,lower95,upper95,successes`; undefined cells are
//! empty.
inline void write_bands_csv(std::ostream& out, const BandResult& r)
{
  out << "s,value";
  for (const auto& b : r.bands)
    out << ",lower" << coverage_label(b.coverage) << ",upper" << coverage_label(b.coverage);
  out << ",successes\n";
  for (std::size_t i = 0; i < r.s.size(); ++i) {
    out << csv::format(r.s[i]) << ',' << csv::format(r.point[i]);
    for (const auto& b : r.bands)
      out << ',' << csv::format(b.lower[i]) << ',' << csv::format(b.upper[i]);
    out << ',' << r.successes[i] << '\n';
  }
}

inline json bands_json(const BandResult& r)
{
  json j;
  j["alpha"] = r.alpha;
  j["x0"] = r.x0;
  j["integrator"] = integrator_json(r.spec);
  j["seed"] = r.seed;
  j["replicates"] = r.replicates;
  j["s"] = r.s;
  json point = json::array();
  for (double v : r.point)
    point.push_back(number(v));
  j["difference"] = point;
  json bands = json::array();
  for (const auto& b : r.bands) {
    json lo = json::array(), hi = json::array();
    for (std::size_t i = 0; i < r.s.size(); ++i) {
      lo.push_back(number(b.lower[i]));
      hi.push_back(number(b.upper[i]));
    }
    bands.push_back({{"coverage", b.coverage}, {"lower", lo}, {"upper", hi}});
  }
  j["bands"] = bands;
  j["successes"] = r.successes;
  json undefined = json::array();
  for (std::size_t i = 0; i < r.s.size(); ++i)
    if (r.undefined[i])
      undefined.push_back(r.s[i]);
  j["undefined_at"] = undefined;
  return j;
}

//! `x,z,F`
inline void write_cdf_grid_csv(std::ostream& out, std::span<const CdfGridPoint> grid)
{
  out << "x,z,F\n";
  for (const auto& p : grid)
    out << csv::format(p.x) << ',' << csv::format(p.z) << ',' << csv::format(p.F) << '\n';
}

//! `x,slope,error`
inline void write_slope_field_csv(std::ostream& out, std::span<const SlopeFieldPoint> field)
{
  out << "x,slope,error\n";
  for (const auto& p : field)
    out << csv::format(p.level) << ',' << (p.slope ? csv::format(*p.slope) : std::string())
        << ',' << csv::quote(p.error) << '\n';
}

//! One row per scenario and n: `scenario,n,alpha=...` with AISE x 1000 per cell.
inline void write_aise_csv(std::ostream& out, const sim::AiseReport& report)
{
  const auto& cfg = report.config;
  out << "scenario,n";
  for (double a : cfg.alphas)
    out << ",alpha=" << csv::format(a);
  out << '\n';
  for (const auto& noise : cfg.scenarios) {
    for (auto n : cfg.ns) {
      out << csv::quote(noise.label()) << ',' << n;
      for (double a : cfg.alphas) {
        const auto* cell = report.find(noise, n, a);
        out << ',' << (cell ? csv::format(cell->aise_x1000()) : std::string());
      }
      out << '\n';
    }
  }
}

inline json aise_json(const sim::AiseReport& report)
{
  const auto& cfg = report.config;
  json j;
  json scenarios = json::array();
  for (const auto& s : cfg.scenarios)
    scenarios.push_back(s.label());
  j["config"] = {
    {"scenarios", scenarios},
    {"ns", cfg.ns},
    {"alphas", cfg.alphas},
    {"reps", cfg.reps},
    {"h_k", cfg.h_k},
    {"h_h", cfg.h_h},
    {"kernel", "gaussian"},
    {"estimator", "joint-kernel"},
    {"x0", cfg.x0},
    {"horizon", cfg.horizon},
    {"integrator", integrator_json(cfg.integrator())},
    {"seed", cfg.seed},
    {"oracle_mc", cfg.oracle_mc},
    {"oracle_seed", cfg.resolved_oracle_seed()},
    {"b_range", {cfg.process.b_range.lo, cfg.process.b_range.hi}},
    {"center_range", {cfg.process.center_range.lo, cfg.process.center_range.hi}},
    {"half_width", cfg.process.half_width},
    {"obs_choices", cfg.process.obs_choices},
  };
  if (!report.oracles.empty()) {
    const auto& o = report.oracles.front();
    j["oracle"] = {{"grid_points", o.grid_points},
                   {"relative_bin_half_width", o.relative_half_width},
                   {"max_step", o.max_step}};
  }
  json cells = json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"scenario", c.noise.label()},
                     {"n", c.n},
                     {"alpha", c.alpha},
                     {"aise", number(c.aise)},
                     {"aise_x1000", number(c.aise_x1000())},
                     {"replicates_used", c.used},
                     {"replicates_failed", c.failed},
                     {"replicates_truncated", c.truncated},
                     {"warning", c.warning()}});
  }
  j["cells"] = cells;
  j["warning"] = report.warning();
  return j;
}

} // namespace qtraj::io
