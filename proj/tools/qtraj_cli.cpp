// qtraj: quantile trajectories from longitudinal snippets.
//
//   qtraj fit         --input data.csv                 conditional c.d.f. grid
//   qtraj trajectory  --input data.csv --alpha .25,.5 --x0 0.4
//   qtraj predict     --input data.csv --subject-id A --target-alphas .5,.9
//   qtraj rank        --input data.csv                 alpha* per subject
//   qtraj bands       --input g1.csv --input2 g2.csv --alpha .5 --x0 0.4
//   qtraj slope-field --input data.csv --alpha .5
//   qtraj simulate    --n 300 --scenario noiseless
//   qtraj bench       --ns 300,1000 --reps 200
//
// Every command writes into --out and leaves <command>.ini there, a config
// file that reproduces the run with `qtraj --config <file>`.

#include <qtraj/qtraj.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace qtraj;

namespace {

struct RunConfig
{
  std::string input;
  std::string input2;
  std::string group_column = "group";
  std::vector<std::string> groups;
  std::string out = ".";

  std::string estimator = "joint-kernel";
  std::string kernel = "gaussian";
  std::optional<double> h_k;
  std::optional<double> h_h;
  std::optional<double> bin_width;

  std::vector<double> alphas;
  std::optional<double> x0;
  std::string method;
  std::optional<double> step;
  double horizon = 8.0;
  std::uint64_t seed = 1;
  std::size_t reps = 200;
  std::size_t b_boot = 200;
  unsigned threads = 1;

  std::size_t grid_x = 25;
  std::size_t grid_z = 25;
  std::size_t levels = 50;
  bool mean = false;

  std::string subject_id;
  std::vector<double> target_alphas;

  std::size_t n = 300;
  std::string scenario = "true-xz";
  std::optional<double> sigma;
  std::vector<std::size_t> ns;
  std::vector<std::string> scenarios;
  std::size_t oracle_mc = 1'000'000;
  std::optional<std::uint64_t> oracle_seed;
};

//! Output files written so far, and whether any requested output failed.
struct RunStatus
{
  std::vector<fs::path> written;
  std::vector<std::string> failures;
};

[[noreturn]] void invalid(const std::string& what) { throw ValidationError(what); }

void check_alpha(double a, const char* flag)
{
  if (!(a > 0.0 && a < 1.0))
    invalid(std::string(flag) + " values must lie in (0, 1), got " + csv::format(a));
}

void check_positive(const std::optional<double>& v, const char* flag)
{
  if (v && !(std::isfinite(*v) && *v > 0.0))
    invalid(std::string(flag) + " must be positive and finite, got " + csv::format(*v));
}

//! Flag checks shared by every command; runs before any input is read.
void validate_common(const RunConfig& c)
{
  check_positive(c.h_k, "--h-k");
  check_positive(c.h_h, "--h-h");
  check_positive(c.bin_width, "--bin-width");
  check_positive(c.step, "--step");
  check_positive(c.horizon, "--horizon");
  if (c.x0 && !std::isfinite(*c.x0))
    invalid("--x0 must be finite");
  for (double a : c.alphas)
    check_alpha(a, "--alpha");
  for (double a : c.target_alphas)
    check_alpha(a, "--target-alphas");
  parse_cdf_method(c.estimator);
  parse_kernel_kind(c.kernel);
  if (!c.method.empty())
    parse_integrator_method(c.method);
  if (c.step && *c.step > c.horizon)
    invalid("--step must not exceed --horizon");
}

CdfOptions cdf_options(const RunConfig& c)
{
  CdfOptions o;
  o.method = parse_cdf_method(c.estimator);
  o.kernel = parse_kernel_kind(c.kernel);
  o.h_k = c.h_k;
  o.h_h = c.h_h;
  o.bin_width = c.bin_width;
  return o;
}

IntegratorSpec integrator(const RunConfig& c, IntegratorMethod fallback)
{
  IntegratorSpec spec;
  spec.method = c.method.empty() ? fallback : parse_integrator_method(c.method);
  spec.horizon = c.horizon;
  spec.step = c.step.value_or(c.horizon / 1000.0);
  spec.validate();
  return spec;
}

std::string read_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ValidationError("cannot open input '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

//! Level/slope pairs from either a long-format file (subject_id,time,value)
//! or a pairs file (subject_id,level,slope,...), chosen by its header.
std::vector<LevelSlopePair> load_pairs(const std::string& path, const RunConfig& c,
                                       std::vector<Exclusion>& exclusions)
{
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string header;
  std::getline(in, header);
  const auto columns = csv::split_line(header);
  auto has = [&](std::string_view name) {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
  };
  in.clear();
  in.seekg(0);
  try {
    if (has("level") && has("slope"))
      return read_pairs(in, c.group_column);
    const auto records = read_records(in, c.group_column);
    std::vector<LevelSlopePair> pairs;
    for (const auto& s : parse_snippets(records)) {
      auto r = extract_level_slope(s);
      if (auto* p = std::get_if<LevelSlopePair>(&r))
        pairs.push_back(std::move(*p));
      else
        exclusions.push_back(std::get<Exclusion>(r));
    }
    return pairs;
  } catch (const ParseError& e) {
    throw Error(path + ": " + e.what());
  }
}

SnippetDataset load_dataset(const std::string& path, const RunConfig& c)
{
  if (path.empty())
    invalid("--input is required");
  std::vector<Exclusion> exclusions;
  auto pairs = load_pairs(path, c, exclusions);
  for (const auto& e : exclusions)
    std::cerr << "note: subject '" << e.subject_id << "' excluded: " << e.reason << '\n';
  return build_dataset(std::move(pairs), std::move(exclusions));
}

class Output
{
public:
  Output(const RunConfig& c, RunStatus& status)
    : dir_(c.out)
    , status_(status)
  {
    fs::create_directories(dir_);
  }

  template <class F>
  void write(const std::string& name, F&& body)
  {
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out)
      throw ValidationError("cannot write '" + path.string() + "'");
    body(out);
    out.flush();
    if (!out)
      throw ValidationError("failed writing '" + path.string() + "'");
    status_.written.push_back(path);
  }

  void json(const std::string& name, const io::json& j)
  {
    write(name, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
  }

private:
  fs::path dir_;
  RunStatus& status_;
};

std::string alpha_tag(double a) { return "a" + csv::format(a); }

std::vector<double> linspace(Interval r, std::size_t count)
{
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i)
    v[i] = count == 1 ? r.lo
                      : r.lo + r.width() * static_cast<double>(i) / static_cast<double>(count - 1);
  if (count > 1)
    v.back() = r.hi;
  return v;
}

//! Resolved settings that are not flags themselves, appended to the echo.
using Resolved = std::vector<std::pair<std::string, std::string>>;

Resolved resolved_cdf(const CdfOptions& o)
{
  Resolved r;
  r.emplace_back("estimator", std::string(to_string(o.method)));
  if (o.h_k) r.emplace_back("h-k", csv::format(*o.h_k));
  if (o.h_h) r.emplace_back("h-h", csv::format(*o.h_h));
  if (o.bin_width) r.emplace_back("bin-width", csv::format(*o.bin_width));
  return r;
}

void add_integrator(Resolved& r, const IntegratorSpec& spec)
{
  r.emplace_back("method", std::string(to_string(spec.method)));
  r.emplace_back("step", csv::format(spec.step));
}

// ---------------------------------------------------------------- commands

Resolved cmd_fit(const RunConfig& c, Output& out, RunStatus&)
{
  if (c.grid_x < 1 || c.grid_z < 2)
    invalid("--grid-x must be >= 1 and --grid-z >= 2");
  const auto ds = load_dataset(c.input, c);
  const auto opts = cdf_options(c).resolved(ds);
  const auto cdf = fit_cdf(ds, opts);
  const auto xs = linspace(ds.level_range(), c.grid_x);
  const auto zs = linspace(ds.slope_range(), c.grid_z);
  const auto grid = cdf_grid(cdf, xs, zs);
  out.write("cdf_grid.csv", [&](std::ostream& o) { io::write_cdf_grid_csv(o, grid); });
  if (cdf.method() == CdfMethod::logistic) {
    const auto& f = cdf.logistic();
    out.json("logistic.json", {{"intercept", f.intercept},
                               {"level_coef", f.level_coef},
                               {"slope_coef", f.slope_coef},
                               {"iterations", f.iterations},
                               {"level_dropped", f.level_dropped}});
  }
  return resolved_cdf(opts);
}

Resolved cmd_trajectory(const RunConfig& c, Output& out, RunStatus& status)
{
  if (!c.x0)
    invalid("--x0 is required");
  if (c.alphas.empty() && !c.mean)
    invalid("--alpha or --mean is required");
  const auto spec = integrator(c, IntegratorMethod::rk4);
  const auto ds = load_dataset(c.input, c);
  const auto opts = cdf_options(c).resolved(ds);
  if (!ds.level_range().contains(*c.x0))
    throw DomainError("--x0 " + csv::format(*c.x0) + " outside the data's level range [" +
                      csv::format(ds.level_range().lo) + ", " +
                      csv::format(ds.level_range().hi) + "]");
  const auto cdf = fit_cdf(ds, opts);

  auto emit = [&](const std::string& tag, const TrajectorySolution& sol) {
    out.write("trajectory_" + tag + ".csv", [&](std::ostream& o) { io::write_trajectory_csv(o, sol); });
    out.json("trajectory_" + tag + ".json", io::trajectory_json(sol));
    if (!sol.complete())
      std::cerr << "warning: trajectory " << tag << " stopped at s = "
                << csv::format(*sol.truncated_at) << ": " << sol.message << '\n';
  };
  for (double a : c.alphas) {
    try {
      emit(alpha_tag(a), quantile_trajectory(cdf, a, *c.x0, spec));
    } catch (const Error& e) {
      status.failures.push_back("alpha " + csv::format(a) + ": " + e.what());
    }
  }
  if (c.mean) {
    try {
      emit("mean", mean_trajectory(ds, opts.kernel_spec(), *c.x0, spec));
    } catch (const Error& e) {
      status.failures.push_back(std::string("mean: ") + e.what());
    }
  }
  auto r = resolved_cdf(opts);
  add_integrator(r, spec);
  return r;
}

Resolved cmd_predict(const RunConfig& c, Output& out, RunStatus& status)
{
  if (c.subject_id.empty())
    invalid("--subject-id is required");
  if (c.target_alphas.empty())
    invalid("--target-alphas is required");
  const auto spec = integrator(c, IntegratorMethod::euler);
  const auto ds = load_dataset(c.input, c);
  const auto* subject = ds.find(c.subject_id);
  if (!subject)
    invalid("unknown subject id '" + c.subject_id + "'");
  if (!(subject->time_span > 0.0))
    invalid("subject '" + c.subject_id + "' has no time span, so S* is undefined");
  const auto opts = cdf_options(c).resolved(ds);
  const auto cdf = fit_cdf(ds, opts);
  const double alpha_star = estimate_alpha_star(*subject, cdf);

  out.write("alpha_star.csv", [&](std::ostream& o) {
    o << "subject_id,last_level,slope,alpha_star,S_star\n"
      << csv::quote(subject->subject_id) << ',' << csv::format(subject->last_level) << ','
      << csv::format(subject->slope) << ',' << csv::format(alpha_star) << ','
      << csv::format(0.5 * subject->time_span) << '\n';
  });
  for (double target : c.target_alphas) {
    try {
      auto pred = prediction_trajectory(cdf, *subject, target, spec);
      const auto tag = "prediction_" + alpha_tag(target);
      out.write(tag + ".csv", [&](std::ostream& o) { io::write_trajectory_csv(o, pred.trajectory); });
      auto j = io::trajectory_json(pred.trajectory);
      j["subject_id"] = subject->subject_id;
      j["alpha_star"] = pred.schedule.alpha_star;
      j["S_star"] = pred.schedule.adherence;
      out.json(tag + ".json", j);
    } catch (const Error& e) {
      status.failures.push_back("target " + csv::format(target) + ": " + e.what());
    }
  }
  auto r = resolved_cdf(opts);
  add_integrator(r, spec);
  return r;
}

Resolved cmd_rank(const RunConfig& c, Output& out, RunStatus& status)
{
  const auto ds = load_dataset(c.input, c);
  const auto opts = cdf_options(c).resolved(ds);
  const auto cdf = fit_cdf(ds, opts);
  std::size_t failed = 0;
  out.write("rank.csv", [&](std::ostream& o) {
    o << "subject_id,last_level,slope,alpha_star,error\n";
    for (const auto& p : ds.pairs()) {
      o << csv::quote(p.subject_id) << ',' << csv::format(p.last_level) << ','
        << csv::format(p.slope) << ',';
      try {
        o << csv::format(estimate_alpha_star(p, cdf)) << ",\n";
      } catch (const Error& e) {
        o << ',' << csv::quote(e.what()) << '\n';
        ++failed;
      }
    }
  });
  if (failed > 0)
    status.failures.push_back(std::to_string(failed) + " subject(s) could not be ranked");
  return resolved_cdf(opts);
}

Resolved cmd_bands(const RunConfig& c, Output& out, RunStatus& status)
{
  if (!c.x0)
    invalid("--x0 is required");
  if (c.alphas.size() != 1)
    invalid("bands take exactly one --alpha");
  if (c.b_boot < 100)
    invalid("--b-boot must be at least 100");
  if (!c.input2.empty() && !c.groups.empty())
    invalid("use either --input2 or --groups");
  const auto spec = integrator(c, IntegratorMethod::rk4);

  std::optional<SnippetDataset> g1, g2;
  if (!c.input2.empty()) {
    g1 = load_dataset(c.input, c);
    g2 = load_dataset(c.input2, c);
  } else {
    if (c.input.empty())
      invalid("--input is required");
    std::vector<Exclusion> exclusions;
    auto pairs = load_pairs(c.input, c, exclusions);
    std::set<std::string> labels;
    for (const auto& p : pairs)
      if (p.group) labels.insert(*p.group);
    std::vector<std::string> chosen = c.groups;
    if (chosen.empty())
      chosen.assign(labels.begin(), labels.end());
    if (chosen.size() != 2)
      invalid("need exactly two groups in column '" + c.group_column + "' (found " +
              std::to_string(labels.size()) + "); pass --groups or --input2");
    std::vector<LevelSlopePair> a, b;
    for (auto& p : pairs) {
      if (p.group == chosen[0]) a.push_back(p);
      else if (p.group == chosen[1]) b.push_back(p);
    }
    g1 = build_dataset(std::move(a));
    g2 = build_dataset(std::move(b));
  }

  BootstrapSettings bs;
  bs.replicates = c.b_boot;
  bs.seed = c.seed;
  bs.threads = c.threads;
  const auto opts = cdf_options(c);
  const auto result = bootstrap_difference_bands(*g1, *g2, opts, c.alphas[0], *c.x0, spec, bs);
  out.write("bands.csv", [&](std::ostream& o) { io::write_bands_csv(o, result); });
  out.json("bands.json", io::bands_json(result));
  if (result.any_undefined())
    status.failures.push_back("bands undefined at some s (more than half of replicates failed)");

  Resolved r;
  auto r1 = resolved_cdf(opts.resolved(*g1));
  auto r2 = resolved_cdf(opts.resolved(*g2));
  for (auto& [k, v] : r1) r.emplace_back("group1." + k, v);
  for (auto& [k, v] : r2) r.emplace_back("group2." + k, v);
  add_integrator(r, spec);
  return r;
}

Resolved cmd_slope_field(const RunConfig& c, Output& out, RunStatus& status)
{
  if (c.alphas.empty())
    invalid("--alpha is required");
  if (c.levels < 1)
    invalid("--levels must be positive");
  const auto ds = load_dataset(c.input, c);
  const auto opts = cdf_options(c).resolved(ds);
  const auto cdf = fit_cdf(ds, opts);
  const auto levels = linspace(ds.level_range(), c.levels);
  for (double a : c.alphas) {
    const auto field = slope_field(cdf, a, levels);
    out.write("slope_field_" + alpha_tag(a) + ".csv",
              [&](std::ostream& o) { io::write_slope_field_csv(o, field); });
    for (const auto& p : field)
      if (!p.slope) {
        status.failures.push_back("alpha " + csv::format(a) + ": slope undefined at some levels");
        break;
      }
  }
  return resolved_cdf(opts);
}

sim::NoiseSetting noise_from(const std::string& scenario, const std::optional<double>& sigma)
{
  if (sigma) {
    if (scenario != "true-xz" && scenario != "gaussian")
      invalid("--sigma only combines with a gaussian scenario");
    sim::NoiseSetting s{sim::NoiseScenario::gaussian, *sigma};
    s.validate();
    return s;
  }
  if (scenario == "gaussian")
    invalid("--scenario gaussian needs --sigma");
  return sim::parse_noise_setting(scenario);
}

Resolved cmd_simulate(const RunConfig& c, Output& out, RunStatus&)
{
  sim::SimulationConfig cfg;
  cfg.n = c.n;
  cfg.seed = c.seed;
  cfg.noise = noise_from(c.scenario, c.sigma);
  const auto data = sim::generate_snippets(cfg);
  out.write("pairs.csv", [&](std::ostream& o) { write_pairs_csv(o, data.dataset.pairs()); });
  if (!data.snippets.empty())
    out.write("snippets.csv", [&](std::ostream& o) { write_snippets_csv(o, data.snippets); });
  return {{"noise", cfg.noise.label()}};
}

Resolved cmd_bench(const RunConfig& c, Output& out, RunStatus& status)
{
  sim::BenchmarkConfig cfg;
  if (!c.alphas.empty())
    cfg.alphas = c.alphas;
  if (!c.ns.empty())
    cfg.ns = c.ns;
  if (!c.scenarios.empty()) {
    cfg.scenarios.clear();
    for (const auto& s : c.scenarios)
      cfg.scenarios.push_back(sim::parse_noise_setting(s));
  }
  if (c.estimator != "joint-kernel" || c.kernel != "gaussian")
    invalid("bench always uses the joint-kernel estimator with gaussian kernels");
  cfg.reps = c.reps;
  cfg.h_k = c.h_k.value_or(0.01);
  cfg.h_h = c.h_h.value_or(0.001);
  cfg.x0 = c.x0.value_or(0.4);
  cfg.horizon = c.horizon;
  const double step = c.step.value_or(c.horizon / 1000.0);
  const double steps = std::round(c.horizon / step);
  if (std::abs(steps * step - c.horizon) > 1e-9 * c.horizon)
    invalid("bench needs --horizon to be a whole multiple of --step");
  cfg.steps = static_cast<std::size_t>(steps);
  cfg.method = c.method.empty() ? IntegratorMethod::rk4 : parse_integrator_method(c.method);
  cfg.seed = c.seed;
  cfg.oracle_mc = c.oracle_mc;
  cfg.oracle_seed = c.oracle_seed;
  cfg.threads = c.threads;
  const auto report = sim::run_aise_benchmark(cfg);
  out.write("aise.csv", [&](std::ostream& o) { io::write_aise_csv(o, report); });
  out.json("aise.json", io::aise_json(report));
  if (report.warning())
    std::cerr << "warning: more than 10% of replicates failed in some cells\n";
  for (const auto& cell : report.cells)
    if (cell.used == 0)
      status.failures.push_back("no successful replicate for " + cell.noise.label() + ", n = " +
                                std::to_string(cell.n) + ", alpha = " + csv::format(cell.alpha));
  return {{"oracle-seed", std::to_string(cfg.resolved_oracle_seed())},
          {"steps", std::to_string(cfg.steps)}};
}

// ---------------------------------------------------------------- wiring

void add_data_flags(CLI::App* sub, RunConfig& c)
{
  sub->add_option("--input,-i", c.input, "input CSV: subject_id,time,value[,group] or pairs");
  sub->add_option("--group-column", c.group_column, "name of the group column")
    ->capture_default_str();
}

void add_estimator_flags(CLI::App* sub, RunConfig& c)
{
  sub->add_option("--estimator", c.estimator, "binned, kernel, joint-kernel or logistic")
    ->capture_default_str();
  sub->add_option("--kernel", c.kernel, "gaussian or epanechnikov")->capture_default_str();
  sub->add_option("--h-k", c.h_k, "level bandwidth (default: Silverman)");
  sub->add_option("--h-h", c.h_h, "slope bandwidth for joint-kernel (default: Silverman)");
  sub->add_option("--bin-width", c.bin_width, "bin half-width for binned (default: Silverman)");
}

void add_integrator_flags(CLI::App* sub, RunConfig& c)
{
  sub->add_option("--method", c.method, "euler or rk4");
  sub->add_option("--step", c.step, "integration step (default: horizon / 1000)");
  sub->add_option("--horizon", c.horizon, "integration horizon")->capture_default_str();
}

void add_alpha_flag(CLI::App* sub, RunConfig& c)
{
  sub->add_option("--alpha,-a", c.alphas, "quantile levels, comma separated")->delimiter(',');
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Conditional quantile trajectories from longitudinal snippets"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read flags from an INI/TOML file");
  RunConfig c;

  std::map<CLI::App*, std::function<Resolved(const RunConfig&, Output&, RunStatus&)>> commands;
  auto sub = [&](const char* name, const char* help, auto fn) {
    auto* s = app.add_subcommand(name, help);
    s->configurable();
    s->add_option("--out,-o", c.out, "output directory")->capture_default_str();
    s->add_option("--threads", c.threads, "worker threads, 0 = all cores")->capture_default_str();
    commands[s] = fn;
    return s;
  };

  auto* fit = sub("fit", "evaluate the conditional c.d.f. on a grid", cmd_fit);
  add_data_flags(fit, c);
  add_estimator_flags(fit, c);
  fit->add_option("--grid-x", c.grid_x, "levels in the grid")->capture_default_str();
  fit->add_option("--grid-z", c.grid_z, "slopes in the grid")->capture_default_str();

  auto* traj = sub("trajectory", "quantile trajectories from x0", cmd_trajectory);
  add_data_flags(traj, c);
  add_estimator_flags(traj, c);
  add_integrator_flags(traj, c);
  add_alpha_flag(traj, c);
  traj->add_option("--x0", c.x0, "starting level");
  traj->add_flag("--mean", c.mean, "also write the conditional-mean trajectory");

  auto* pred = sub("predict", "prediction trajectories for one subject", cmd_predict);
  add_data_flags(pred, c);
  add_estimator_flags(pred, c);
  add_integrator_flags(pred, c);
  pred->add_option("--subject-id", c.subject_id, "subject to predict");
  pred->add_option("--target-alphas", c.target_alphas, "target quantile levels")->delimiter(',');

  auto* rank = sub("rank", "alpha* for every subject", cmd_rank);
  add_data_flags(rank, c);
  add_estimator_flags(rank, c);

  auto* bands = sub("bands", "bootstrap bands for a group difference", cmd_bands);
  add_data_flags(bands, c);
  add_estimator_flags(bands, c);
  add_integrator_flags(bands, c);
  add_alpha_flag(bands, c);
  bands->add_option("--input2", c.input2, "second group's CSV");
  bands->add_option("--groups", c.groups, "two group labels in --input")->delimiter(',');
  bands->add_option("--x0", c.x0, "starting level");
  bands->add_option("--b-boot", c.b_boot, "bootstrap replicates")->capture_default_str();
  bands->add_option("--seed", c.seed, "master seed")->capture_default_str();

  auto* field = sub("slope-field", "quantile gradient on a level grid", cmd_slope_field);
  add_data_flags(field, c);
  add_estimator_flags(field, c);
  add_alpha_flag(field, c);
  field->add_option("--levels", c.levels, "grid points over the level range")
    ->capture_default_str();

  auto* simulate = sub("simulate", "exponential-decline snippet data", cmd_simulate);
  simulate->add_option("--n", c.n, "subjects")->capture_default_str();
  simulate->add_option("--scenario", c.scenario, "true-xz, noiseless or gaussian")
    ->capture_default_str();
  simulate->add_option("--sigma", c.sigma, "noise standard deviation");
  simulate->add_option("--seed", c.seed, "master seed")->capture_default_str();

  auto* bench = sub("bench", "AISE benchmark against the Monte Carlo oracle", cmd_bench);
  add_estimator_flags(bench, c);
  add_integrator_flags(bench, c);
  add_alpha_flag(bench, c);
  bench->add_option("--ns", c.ns, "sample sizes")->delimiter(',');
  bench->add_option("--scenarios", c.scenarios, "true-xz, noiseless or sigma values")
    ->delimiter(',');
  bench->add_option("--x0", c.x0, "starting level (default 0.4)");
  bench->add_option("--reps", c.reps, "replicates per cell")->capture_default_str();
  bench->add_option("--seed", c.seed, "master seed")->capture_default_str();
  bench->add_option("--oracle-mc", c.oracle_mc, "Monte Carlo draws for the oracle")
    ->capture_default_str();
  bench->add_option("--oracle-seed", c.oracle_seed, "oracle seed (default: from --seed)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  CLI::App* chosen = app.get_subcommands().front();
  RunStatus status;
  try {
    validate_common(c);
    Output out(c, status);
    const Resolved resolved = commands.at(chosen)(c, out, status);
    out.write(chosen->get_name() + ".ini", [&](std::ostream& o) {
      // unset optional flags are left out so that the file parses back
      std::istringstream lines(chosen->config_to_str(true, false));
      o << '[' << chosen->get_name() << "]\n";
      for (std::string line; std::getline(lines, line);)
        if (!line.ends_with("=\"\"") && !line.ends_with("=''"))
          o << line << '\n';
      o << "# resolved\n";
      for (const auto& [k, v] : resolved)
        o << "# " << k << " = " << v << '\n';
    });
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  for (const auto& f : status.failures)
    std::cerr << "error: " << f << '\n';
  return status.failures.empty() ? 0 : 2;
}
