#include "levy/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "levy/analytic.hpp"
#include "levy/density.hpp"
#include "levy/error.hpp"
#include "levy/filter.hpp"
#include "levy/io.hpp"
#include "levy/parallel.hpp"
#include "levy/simulate.hpp"
#include "levy/validate.hpp"

#ifndef LEVY_VERSION
#define LEVY_VERSION "0.0.0"
#endif

namespace levy {

const char* version() { return LEVY_VERSION; }

namespace {

using json = nlohmann::ordered_json;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kFailed = 2;

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_given = false;
  double dt = 0.01;
  double horizon = 10.0;
  std::size_t n = 10000;
  std::string out;
  std::string format = "csv";
  unsigned threads = 1;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;

  std::vector<double> values() const {
    std::vector<double> v(count);
    for (std::size_t i = 0; i < count; ++i) {
      v[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return v;
  }
};

Range parse_range(const std::string& text) {
  Range r;
  std::stringstream ss(text);
  std::string a, b, c;
  if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c)) {
    throw Error(ErrorCode::InvalidConfig, "range must look like lo:hi:count, got '" + text + "'");
  }
  try {
    r.lo = std::stod(a);
    r.hi = std::stod(b);
    r.count = static_cast<std::size_t>(std::stoul(c));
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig, "range must look like lo:hi:count, got '" + text + "'");
  }
  if (r.count == 0 || r.hi < r.lo || (r.count > 1 && r.hi == r.lo)) {
    throw Error(ErrorCode::InvalidConfig, "range needs count >= 1 and lo < hi");
  }
  return r;
}

void add_common(CLI::App* app, Common& c, bool needs_config = true) {
  auto* cfg = app->add_option("--config", c.config, "Model config file (key = value)");
  if (needs_config) cfg->required();
  app->add_option_function<std::uint64_t>(
      "--seed", [&c](const std::uint64_t& s) {
        c.seed = s;
        c.seed_given = true;
      }, "Master seed");
  app->add_option("--dt", c.dt, "Grid or observation step")->check(CLI::PositiveNumber);
  app->add_option("--horizon", c.horizon, "Time horizon")->check(CLI::PositiveNumber);
  app->add_option("--n", c.n, "Number of paths or particles")->check(CLI::PositiveNumber);
  app->add_option("--out", c.out, "Output file (default: standard output)");
  app->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--threads", c.threads, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);
}

std::uint64_t resolve_seed(const Common& c) {
  if (c.seed_given) return c.seed;
  if (const char* env = std::getenv("LEVY_DEFAULT_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, "LEVY_DEFAULT_SEED is not an unsigned integer");
    }
  }
  return 1;
}

void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    std::cout.flush();
  } else {
    write_text_file(c.out, text);
  }
}

void write_manifest(const Common& c, const std::vector<std::string>& args, const std::string& command,
                    const ModelConfig* config, std::uint64_t seed) {
  if (c.out.empty()) return;
  json j;
  j["tool"] = "levy";
  j["version"] = version();
  j["command"] = command;
  j["argv"] = std::vector<std::string>(args.begin() + 1, args.end());
  j["seed"] = seed;
  j["dt"] = c.dt;
  j["horizon"] = c.horizon;
  j["n"] = c.n;
  j["output"] = c.out;
  if (config) j["config"] = to_config_text(*config);
  write_text_file(c.out + ".manifest.json", j.dump(2) + "\n");
}

std::string fmt(double v) { return format_double(v); }

// simulate --------------------------------------------------------------

int run_simulate(const Common& c, const std::string& dump_path, const std::vector<std::string>& args) {
  const ModelConfig config = load_config(c.config);
  const ValidatedParams p = validate_params(config.params);
  const std::uint64_t seed = resolve_seed(c);
  std::vector<PassageSample> samples(c.n);
  parallel_for(c.n, [&](std::size_t i) {
    Stream rng(seed, stream_tag::kPath, i);
    samples[i] = sample_tau(p, c.horizon, c.dt, rng, i == 0 && !dump_path.empty());
  });
  std::string text;
  if (c.format == "json") {
    json j;
    j["horizon"] = c.horizon;
    auto& arr = j["samples"] = json::array();
    for (const auto& s : samples) {
      arr.push_back({{"tau", s.censored() ? json(nullptr) : json(s.tau)}, {"crossed_at_jump", s.crossed_at_jump}});
    }
    text = j.dump(2) + "\n";
  } else {
    text = "path,tau,crossed_at_jump\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
      text += csv_row({std::to_string(i), fmt(samples[i].tau), samples[i].crossed_at_jump ? "1" : "0"});
    }
  }
  emit(c, text);
  if (!dump_path.empty() && samples.front().path) {
    std::ostringstream os;
    write_path_csv(os, *samples.front().path);
    write_text_file(dump_path, os.str());
  }
  write_manifest(c, args, "simulate", &config, seed);
  return kOk;
}

// density ---------------------------------------------------------------

struct DensityArgs {
  std::string t_grid;
  bool table = false;
  double z_max = 0.0;
  std::size_t z_count = 41;
};

int run_density(const Common& c, const DensityArgs& d, const std::vector<std::string>& args) {
  const ModelConfig config = load_config(c.config);
  const ValidatedParams p = validate_params(config.params);
  const std::uint64_t seed = resolve_seed(c);
  const std::vector<double> t_grid = d.t_grid.empty() ? Range{0.0, c.horizon, 101}.values() : parse_range(d.t_grid).values();
  TableOptions opt;
  opt.grid_dt = c.dt;
  std::string text;
  if (d.table) {
    const double z_max = d.z_max > 0.0 ? d.z_max : auto_z_max(p, t_grid.back());
    const DensityTable table = build_table(p, t_grid, quadratic_grid(z_max, d.z_count), c.n, seed, opt);
    std::ostringstream os;
    table.write_csv(os);
    text = os.str();
    if (!c.out.empty()) write_text_file(c.out + ".json", table.sidecar_json());
  } else {
    opt.interp_tol = -1.0;
    const DensityTable table = build_table(p, t_grid, {p.barrier()}, c.n, seed, opt);
    if (c.format == "json") {
      json j;
      auto& rows = j["rows"] = json::array();
      for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const auto& f = table.f_node(i, 0);
        const auto& g = table.G_node(i, 0);
        rows.push_back({{"t", t_grid[i]}, {"f", f.value}, {"f_stderr", f.std_error}, {"G", g.value},
                        {"G_stderr", g.std_error}});
      }
      text = j.dump(2) + "\n";
    } else {
      text = "t,f,f_stderr,G,G_stderr\n";
      for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const auto& f = table.f_node(i, 0);
        const auto& g = table.G_node(i, 0);
        text += csv_row({fmt(t_grid[i]), fmt(f.value), fmt(f.std_error), fmt(g.value), fmt(g.std_error)});
      }
    }
  }
  emit(c, text);
  write_manifest(c, args, "density", &config, seed);
  return kOk;
}

// bounds ----------------------------------------------------------------

int run_bounds(const Common& c, const std::vector<std::string>& args) {
  const ModelConfig config = load_config(c.config);
  const ValidatedParams p = validate_params(config.params);
  const std::uint64_t seed = resolve_seed(c);
  BoundsOptions opt;
  opt.jump_time_draws = c.n;
  const BoundsReport report = bounds_suite(p, seed, opt);
  std::string text;
  if (c.format == "json") {
    json j;
    auto& arr = j["checks"] = json::array();
    for (const auto& b : report.checks) {
      arr.push_back({{"check", b.name}, {"value", b.value}, {"bound", b.bound}, {"std_error", b.std_error},
                     {"cases", b.cases}, {"violations", b.violations}, {"passed", b.passed}});
    }
    j["passed"] = report.all_passed();
    text = j.dump(2) + "\n";
  } else {
    text = "check,value,bound,std_error,cases,violations,passed\n";
    for (const auto& b : report.checks) {
      text += csv_row({"\"" + b.name + "\"", fmt(b.value), fmt(b.bound), fmt(b.std_error), std::to_string(b.cases),
                       std::to_string(b.violations), b.passed ? "1" : "0"});
    }
  }
  emit(c, text);
  write_manifest(c, args, "bounds", &config, seed);
  return report.all_passed() ? kOk : kFailed;
}

// filter ----------------------------------------------------------------

struct FilterArgs {
  std::string obs_file;
  std::string r_grid;
  double resample = 0.5;
  std::size_t table_paths = 20000;
  double table_dt = 0.05;
  std::size_t z_count = 61;
};

int run_filter_cmd(const Common& c, const FilterArgs& f, const std::vector<std::string>& args) {
  const ModelConfig config = load_config(c.config);
  const ValidatedParams p = validate_params(config.params);
  const std::uint64_t seed = resolve_seed(c);

  ObservationPath obs;
  if (!f.obs_file.empty()) {
    obs = read_observation_csv(f.obs_file, config.h);
  } else {
    Stream path_rng(seed, stream_tag::kObservation, 0);
    const SkeletonPath truth = simulate_skeleton(p, c.horizon, c.dt, path_rng);
    Stream noise_rng(seed, stream_tag::kObservation, 1);
    obs = synthesize_observation(truth, config.h, c.dt, noise_rng);
    if (!c.out.empty()) {
      std::ostringstream os;
      write_observation_csv(os, obs);
      write_text_file(c.out + ".obs.csv", os.str());
    }
  }

  TableOptions topt;
  topt.grid_dt = f.table_dt;
  topt.interp_tol = -1.0;
  topt.with_density = false;
  const double defect_t = std::max(defect_horizon(p), f.table_dt);
  const DensityTable defect_table =
      build_table(p, uniform_grid(defect_t, std::min(f.table_dt, defect_t)),
                  quadratic_grid(auto_z_max(p, defect_t), f.z_count), f.table_paths,
                  Stream::derive(seed, stream_tag::kTable), topt);

  ParticleEnsemble ens = ParticleEnsemble::initial(c.n);
  const auto rows = run_filter(ens, obs, p, defect_table, Stream::derive(seed, stream_tag::kParticle), f.resample);

  std::string text = "t,ess,alive_frac,defect_est\n";
  for (const auto& r : rows) text += csv_row({fmt(r.t), fmt(r.ess), fmt(r.alive_fraction), fmt(r.defect)});
  emit(c, text);

  if (!f.r_grid.empty()) {
    const auto range = parse_range(f.r_grid);
    const auto r_values = range.values();
    if (!(r_values.front() > ens.t)) throw Error(ErrorCode::PreconditionViolated, "r grid must lie after the last observation");
    const double s_max = r_values.back() - ens.t;
    const double s_min = r_values.front() - ens.t;
    topt.with_density = true;
    topt.grid_dt = std::min(f.table_dt, s_max);
    std::vector<double> s_grid = uniform_grid(s_max, topt.grid_dt);
    s_grid.erase(std::remove_if(s_grid.begin(), s_grid.end(), [&](double s) { return s > 0.0 && s < s_min - topt.grid_dt; }),
                 s_grid.end());
    const DensityTable table = build_table(p, s_grid, quadratic_grid(auto_z_max(p, ens.t + s_max), f.z_count),
                                           f.table_paths, Stream::derive(seed, stream_tag::kTable + 100), topt);
    std::string curve = "r,f_bar\n";
    for (double r : r_values) curve += csv_row({fmt(r), fmt(conditional_density(ens, r, table))});
    if (c.out.empty()) {
      std::cout << curve;
    } else {
      write_text_file(c.out + ".fbar.csv", curve);
    }
  }
  write_manifest(c, args, "filter", &config, seed);
  return kOk;
}

// validate --------------------------------------------------------------

struct TheoremArgs {
  double r = 2.0;
  double t = 0.5;
  std::string ladder = "default";
  std::size_t seeds = 20;
  std::size_t table_paths = 200000;
  bool literal = false;
  bool independent = false;
};

int run_theorem1(const Common& c, const TheoremArgs& a, const std::vector<std::string>& args) {
  const ModelConfig config = load_config(c.config);
  const ValidatedParams p = validate_params(config.params);
  const std::uint64_t seed = resolve_seed(c);
  LadderOptions opt;
  opt.r = a.r;
  opt.t = a.t;
  opt.seeds = a.seeds;
  opt.base_seed = seed;
  opt.table_paths = a.table_paths;
  opt.residual.literal_statement = a.literal;
  opt.residual.independent_clouds = a.independent;
  if (a.ladder == "single") {
    opt.rungs = {{c.dt, c.n}};
  } else if (a.ladder != "default") {
    throw Error(ErrorCode::InvalidConfig, "--ladder must be 'default' or 'single'");
  }
  const LadderResult result = theorem1_ladder(p, config.h, opt);
  std::string text = "dt,n,seed_index,lhs,rhs,residual,mc_stderr,term1,term2,term3,term4,term5\n";
  for (const auto& rung : result.rungs) {
    for (std::size_t s = 0; s < rung.reports.size(); ++s) {
      const auto& r = rung.reports[s];
      text += csv_row({fmt(rung.rung.dt), std::to_string(rung.rung.n_particles), std::to_string(s), fmt(r.lhs),
                       fmt(r.rhs), fmt(r.residual), fmt(r.mc_stderr), fmt(r.terms[0]), fmt(r.terms[1]),
                       fmt(r.terms[2]), fmt(r.terms[3]), fmt(r.terms[4])});
    }
  }
  emit(c, text);
  std::ostream& summary = c.out.empty() ? std::cerr : std::cout;
  for (const auto& rung : result.rungs) {
    summary << "dt=" << fmt(rung.rung.dt) << " n=" << rung.rung.n_particles
            << " median|residual|=" << fmt(rung.median_abs_residual) << " median_se=" << fmt(rung.median_stderr)
            << (rung.within_tolerance ? " ok" : " exceeds") << "\n";
  }
  summary << (result.monotone ? "monotone" : "not monotone") << ", " << (result.passed ? "PASS" : "FAIL") << "\n";
  write_manifest(c, args, "validate theorem1", &config, seed);
  return result.passed ? kOk : kFailed;
}

struct ZakaiArgs {
  double T = 1.0;
  double t = 0.5;
  std::size_t seeds = 20;
  std::size_t table_paths = 100000;
};

int run_zakai(const Common& c, const ZakaiArgs& a, const std::vector<std::string>& args) {
  const ModelConfig config = load_config(c.config);
  const ValidatedParams p = validate_params(config.params);
  const std::uint64_t seed = resolve_seed(c);
  ZakaiOptions opt;
  opt.T = a.T;
  opt.t = a.t;
  opt.dt = c.dt;
  opt.n_particles = c.n;
  opt.seeds = a.seeds;
  opt.base_seed = seed;
  opt.table_paths = a.table_paths;
  const auto result = zakai_suite(p, config.h, opt);
  std::string text = "seed_index,lhs,rhs,difference,stderr\n";
  for (std::size_t s = 0; s < result.reports.size(); ++s) {
    const auto& r = result.reports[s];
    text += csv_row({std::to_string(s), fmt(r.lhs), fmt(r.rhs), fmt(r.difference), fmt(r.stderr_combined)});
  }
  emit(c, text);
  std::ostream& summary = c.out.empty() ? std::cerr : std::cout;
  summary << result.within << "/" << result.reports.size() << " seeds within tolerance, "
          << (result.passed ? "PASS" : "FAIL") << "\n";
  write_manifest(c, args, "validate zakai", &config, seed);
  return result.passed ? kOk : kFailed;
}

struct KsArgs {
  bool analytic = false;
  std::size_t table_paths = 20000;
  double table_dt = 0.01;
};

int run_ks(const Common& c, const KsArgs& a, const std::vector<std::string>& args) {
  const ModelConfig config = load_config(c.config);
  const ValidatedParams p = validate_params(config.params);
  const std::uint64_t seed = resolve_seed(c);
  KsReport rep;
  if (a.analytic) {
    if (p.lambda() != 0.0) throw Error(ErrorCode::InvalidConfig, "--analytic needs lambda = 0");
    const auto sample = sample_passage_times(p, c.n, c.horizon, c.dt, Stream::derive(seed, 1));
    rep = ks_test(sample, analytic_conditional_cdf(p.barrier(), p.m(), c.horizon));
  } else {
    TableOptions topt;
    topt.grid_dt = a.table_dt;
    topt.interp_tol = -1.0;
    const DensityTable table = build_table(p, uniform_grid(c.horizon, a.table_dt), {p.barrier()}, a.table_paths,
                                           Stream::derive(seed, 2), topt);
    rep = ks_goodness(p, c.n, table, c.dt, Stream::derive(seed, 1));
  }
  std::string text = "statistic,critical,p_value,n,passed\n";
  text += csv_row({fmt(rep.statistic), fmt(rep.critical), fmt(rep.p_value), std::to_string(rep.n),
                   rep.passed ? "1" : "0"});
  emit(c, text);
  write_manifest(c, args, "validate ks", &config, seed);
  return rep.passed ? kOk : kFailed;
}

int dispatch(const std::vector<std::string>& args);

int run_replay(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::Io, "cannot open manifest '" + manifest_path + "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::Io, std::string("malformed manifest: ") + e.what());
  }
  std::vector<std::string> args{"levy"};
  for (const auto& a : j.at("argv")) args.push_back(a.get<std::string>());
  // Pin the seed actually used, which may have come from the environment.
  if (j.contains("seed") && std::find(args.begin(), args.end(), "--seed") == args.end()) {
    args.push_back("--seed");
    args.push_back(std::to_string(j.at("seed").get<std::uint64_t>()));
  }
  // Fall back to the recorded config text when the original file is gone.
  auto cfg = std::find(args.begin(), args.end(), "--config");
  if (cfg != args.end() && cfg + 1 != args.end() && !std::filesystem::exists(*(cfg + 1)) && j.contains("config")) {
    const std::string copy = manifest_path + ".cfg";
    write_text_file(copy, j.at("config").get<std::string>());
    *(cfg + 1) = copy;
  }
  return dispatch(args);
}

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"Default-time simulation, filtering and validation"};
  app.name("levy");
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  Common c;
  std::string dump_path;
  auto* simulate = app.add_subcommand("simulate", "Sample first-passage times");
  add_common(simulate, c);
  simulate->add_option("--dump-path", dump_path, "Write the first skeleton path as CSV");

  DensityArgs d;
  auto* density = app.add_subcommand("density", "Estimate f and G curves or tables");
  add_common(density, c);
  density->add_option("--t-grid", d.t_grid, "Times as lo:hi:count");
  density->add_flag("--table", d.table, "Emit the full (t, z) table");
  density->add_option("--z-max", d.z_max, "Largest barrier distance in the table");
  density->add_option("--z-count", d.z_count, "Number of z nodes")->check(CLI::Range(std::size_t{2}, std::size_t{100000}));

  auto* bounds = app.add_subcommand("bounds", "Check the explicit bounds");
  add_common(bounds, c);

  FilterArgs f;
  auto* filter = app.add_subcommand("filter", "Run the particle filter");
  add_common(filter, c);
  filter->add_option("--obs", f.obs_file, "Observation CSV (t,q); synthesized when absent");
  filter->add_option("--r-grid", f.r_grid, "Conditional density times as lo:hi:count");
  filter->add_option("--resample", f.resample, "Resampling threshold as a fraction of n");
  filter->add_option("--table-paths", f.table_paths, "Paths per table");
  filter->add_option("--table-dt", f.table_dt, "Table time step")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "Run a validation suite");
  validate->require_subcommand(1);
  TheoremArgs ta;
  auto* theorem1 = validate->add_subcommand("theorem1", "Conditional-density equation residual");
  add_common(theorem1, c);
  theorem1->add_option("--r", ta.r, "Density time r");
  theorem1->add_option("--t", ta.t, "Conditioning time t");
  theorem1->add_option("--ladder", ta.ladder, "'default' (three rungs) or 'single' (--dt, --n)");
  theorem1->add_option("--seeds", ta.seeds, "Independent replications");
  theorem1->add_option("--table-paths", ta.table_paths, "Paths per table");
  theorem1->add_flag("--literal", ta.literal, "Use the statement's denominator powers");
  theorem1->add_flag("--independent", ta.independent, "Disjoint clouds per conditional expectation");
  ZakaiArgs za;
  auto* zakai = validate->add_subcommand("zakai", "Unnormalized survival identity");
  add_common(zakai, c);
  zakai->add_option("--T", za.T, "Payoff time T");
  zakai->add_option("--t", za.t, "Observation time t < T");
  zakai->add_option("--seeds", za.seeds, "Independent replications");
  zakai->add_option("--table-paths", za.table_paths, "Paths per table");
  KsArgs ka;
  auto* ks = validate->add_subcommand("ks", "Kolmogorov-Smirnov goodness of fit");
  add_common(ks, c);
  ks->add_flag("--analytic", ka.analytic, "Compare with the closed form (lambda = 0)");
  ks->add_option("--table-paths", ka.table_paths, "Paths for the table CDF");
  ks->add_option("--table-dt", ka.table_dt, "Table time step")->check(CLI::PositiveNumber);

  std::string manifest;
  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("manifest", manifest, "Manifest JSON")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, std::cout, std::cerr);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, std::cout, std::cerr);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, std::cout, std::cerr);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }
  set_thread_count(c.threads);

  if (*simulate) return run_simulate(c, dump_path, args);
  if (*density) return run_density(c, d, args);
  if (*bounds) return run_bounds(c, args);
  if (*filter) return run_filter_cmd(c, f, args);
  if (*theorem1) return run_theorem1(c, ta, args);
  if (*zakai) return run_zakai(c, za, args);
  if (*ks) return run_ks(c, ka, args);
  if (*replay) return run_replay(manifest);
  std::cerr << app.help();
  return kUsage;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  try {
    return dispatch(args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace levy
