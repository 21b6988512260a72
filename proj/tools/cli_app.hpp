#pragma once

// Command-line front end. Kept in a header so the test suite can drive
// `run_cli` in-process.
//
// Exit codes: 0 success, 2 configuration/usage error, 3 numeric failure.

#include "toffoli/experiments.hpp"
#include "toffoli/io.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace toffoli::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "TOFFOLI_OUTPUT_DIR";

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out_dir;
  bool paper_scale = false;
};

struct Context {
  io::RunConfig config;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::filesystem::path out_dir;
  std::string command_line;
  std::ostream* out = nullptr;

  /// Relative output paths are placed under the output directory.
  std::string output_path(const std::string& p) const {
    std::filesystem::path path(p);
    if (path.is_absolute() || out_dir.empty()) return path.string();
    return (out_dir / path).string();
  }

  io::Provenance provenance(std::size_t n = 0, const std::string& schedule = {}) const {
    io::Provenance p;
    p.command = command_line;
    p.config = io::run_config_to_json(config);
    p.config["seed"] = seed;
    p.seed = seed;
    p.n_realizations = n;
    p.schedule_id = schedule;
    return p;
  }

  void echo_units() const {
    const double jbar = config.jbar_mhz;
    const double tg = config.system.gate_time;
    std::ostringstream os;
    os << "system: t_g = " << tg << " /Jbar (" << tg / jbar * 1000.0 << " ns at Jbar = " << jbar
       << " MHz), N_t = " << config.system.n_pulses << ", u_max = " << config.system.u_max << " Jbar ("
       << config.system.u_max * jbar << " MHz)\n";
    *out << os.str();
  }
};

inline Context make_context(const CommonArgs& args, const std::string& command_line, std::ostream& out) {
  Context ctx;
  ctx.out = &out;
  ctx.command_line = command_line;
  if (!args.config_path.empty()) ctx.config = io::read_run_config(args.config_path);
  if (args.paper_scale) ctx.config.paper_scale = true;
  if (args.seed) ctx.config.seed = args.seed;
  if (!ctx.config.seed) throw ConfigError("a seed is required (--seed or \"seed\" in the config)");
  ctx.seed = *ctx.config.seed;
  ctx.threads = args.threads ? *args.threads : ctx.config.threads;

  if (!args.out_dir.empty()) {
    ctx.out_dir = args.out_dir;
  } else if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
    ctx.out_dir = env;
  } else {
    ctx.out_dir = ctx.config.output_dir;
  }
  if (!ctx.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(ctx.out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + ctx.out_dir.string() + "'");
  }
  return ctx;
}

inline ControlSchedule load_fields(const Context& ctx, const std::string& path) {
  const io::ScheduleFile f = io::read_schedule(path);
  if (f.schedule.n_pulses() != ctx.config.system.n_pulses) {
    throw ConfigError("schedule '" + path + "' has " + std::to_string(f.schedule.n_pulses()) +
                      " pulses, config expects " + std::to_string(ctx.config.system.n_pulses));
  }
  if (const auto bad = f.schedule.first_violation(ctx.config.system.u_max)) {
    throw ConfigError("schedule '" + path + "': row " + std::to_string(*bad) + " exceeds the configured u_max");
  }
  return f.schedule;
}

inline void add_common(CLI::App* sub, CommonArgs& a) {
  sub->add_option("--config", a.config_path, "Run configuration JSON")->check(CLI::ExistingFile);
  sub->add_option("--seed", a.seed, "Master seed (required here or in the config)");
  sub->add_option("--threads", a.threads, "Worker threads (0 = all cores); results do not depend on it");
  sub->add_option("--out-dir", a.out_dir, "Output directory for relative paths (overrides $TOFFOLI_OUTPUT_DIR)");
  sub->add_flag("--paper-scale", a.paper_scale, "Use the larger realization counts by default");
}

inline std::string join_args(int argc, const char* const* argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Toffoli gate pulse synthesis and coupling-noise analysis", "toffoli_cli"};
  app.require_subcommand(1);
  CommonArgs common;
  const std::string command_line = join_args(argc, argv);

  // optimize
  auto* opt = app.add_subcommand("optimize", "Synthesize a control schedule");
  add_common(opt, common);
  int starts = 200;
  std::string objective = "standard";
  std::string warm_path;
  std::string opt_out = "fields.json";
  std::string gradient = "analytic";
  opt->add_option("--starts", starts, "Number of starts")->check(CLI::PositiveNumber);
  opt->add_option("--objective", objective, "standard | weighted | smoothed")
      ->check(CLI::IsMember({"standard", "weighted", "smoothed"}));
  opt->add_option("--warm-start", warm_path, "Schedule file used as start #1")->check(CLI::ExistingFile);
  opt->add_option("--gradient", gradient, "analytic | fd")->check(CLI::IsMember({"analytic", "fd"}));
  opt->add_option("--out", opt_out, "Output schedule file");

  // sweep-dynamic
  auto* dyn = app.add_subcommand("sweep-dynamic", "Average fidelity vs sigma for several t_g f_c");
  add_common(dyn, common);
  std::string dyn_fields, dyn_out = "dynamic.csv";
  double sigma_max = 2.0, sigma_step = 0.05;
  std::vector<double> tgfc_list = default_tgfc_list();
  std::optional<std::size_t> dyn_n;
  std::optional<int> dyn_sources;
  dyn->add_option("--fields", dyn_fields, "Schedule file")->required()->check(CLI::ExistingFile);
  dyn->add_option("--sigma-max", sigma_max, "Largest sigma");
  dyn->add_option("--sigma-step", sigma_step, "Sigma grid step");
  dyn->add_option("--tgfc", tgfc_list, "t_g f_c values")->delimiter(',');
  dyn->add_option("--n", dyn_n, "Realizations per point (default 1000, 10000 with --paper-scale)");
  dyn->add_option("--sources", dyn_sources, "Independent noise sources: 1, 3 or 6");
  dyn->add_option("--out", dyn_out, "Output CSV");

  // sweep-static
  auto* sta = app.add_subcommand("sweep-static", "Average fidelity vs static half-width delta");
  add_common(sta, common);
  std::string sta_fields, sta_out = "static.csv";
  double delta_max = 0.5, delta_step = 0.01;
  std::optional<std::size_t> sta_n;
  std::optional<int> sta_sources;
  sta->add_option("--fields", sta_fields, "Schedule file")->required()->check(CLI::ExistingFile);
  sta->add_option("--delta-max", delta_max, "Largest delta");
  sta->add_option("--delta-step", delta_step, "Delta grid step");
  sta->add_option("--n", sta_n, "Realizations per point (default 10000, 100000 with --paper-scale)");
  sta->add_option("--sources", sta_sources, "Independent noise sources: 1, 3 or 6");
  sta->add_option("--out", sta_out, "Output CSV");

  // compare-robust
  auto* cmp = app.add_subcommand("compare-robust", "Standard vs weighted vs smoothed schedules");
  add_common(cmp, common);
  int std_starts = 200, w_starts = 200;
  std::string std_fields, cmp_prefix = "robust";
  double cmp_delta = 0.1;
  std::optional<std::size_t> cmp_n;
  cmp->add_option("--standard-starts", std_starts, "Starts for the standard objective")->check(CLI::PositiveNumber);
  cmp->add_option("--weighted-starts", w_starts, "Starts for the weighted objective")->check(CLI::PositiveNumber);
  cmp->add_option("--standard-fields", std_fields, "Reuse this standard schedule")->check(CLI::ExistingFile);
  cmp->add_option("--delta", cmp_delta, "Static half-width of the comparison row");
  cmp->add_option("--n", cmp_n, "Realizations for the comparison row (default 10000)");
  cmp->add_option("--prefix", cmp_prefix, "Output file prefix");

  // converge
  auto* conv = app.add_subcommand("converge", "Noisy product propagator vs its noiseless limit");
  add_common(conv, common);
  double conv_sigma = 0.3, conv_T = 0.209;
  std::vector<std::size_t> conv_steps{10, 100, 1000, 10000};
  std::size_t conv_trials = 200;
  std::string conv_out = "converge.csv";
  conv->add_option("--sigma", conv_sigma, "Noise std-dev");
  conv->add_option("--T", conv_T, "Total time");
  conv->add_option("--steps", conv_steps, "Step counts N")->delimiter(',');
  conv->add_option("--trials", conv_trials, "Trials per N")->check(CLI::PositiveNumber);
  conv->add_option("--out", conv_out, "Output CSV");

  // curve
  auto* crv = app.add_subcommand("curve", "Noise-free fidelity vs J/Jbar");
  add_common(crv, common);
  std::string crv_fields, crv_out = "curve.csv";
  double j_min = 0.8, j_max = 1.2, j_step = 0.005;
  crv->add_option("--fields", crv_fields, "Schedule file")->required()->check(CLI::ExistingFile);
  crv->add_option("--j-min", j_min, "Smallest J/Jbar");
  crv->add_option("--j-max", j_max, "Largest J/Jbar");
  crv->add_option("--j-step", j_step, "Grid step");
  crv->add_option("--out", crv_out, "Output CSV");

  // plot
  auto* plt = app.add_subcommand("plot", "Render a CSV as an SVG line chart");
  std::string plt_in, plt_out, plt_x, plt_y, plt_group, plt_title;
  plt->add_option("--in", plt_in, "Input CSV")->required()->check(CLI::ExistingFile);
  plt->add_option("--out", plt_out, "Output SVG")->required();
  plt->add_option("--x", plt_x, "x column");
  plt->add_option("--y", plt_y, "y column");
  plt->add_option("--group", plt_group, "Column whose values split the series");
  plt->add_option("--title", plt_title, "Chart title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitConfig;
  }

  try {
    if (*plt) {
      const io::CsvTable table = io::parse_csv(io::read_text(plt_in));
      io::PlotSpec spec = io::default_plot_spec(table);
      if (!plt_x.empty()) spec.x_column = plt_x;
      if (!plt_y.empty()) spec.y_column = plt_y;
      if (!plt_group.empty()) spec.group_column = plt_group == "none" ? "" : plt_group;
      spec.title = plt_title;
      io::write_text(plt_out, io::render_svg(table, spec));
      out << "wrote " << plt_out << " (" << table.rows.size() << " points)\n";
      return kExitOk;
    }

    const Context ctx = make_context(common, command_line, out);
    const SystemConfig& cfg = ctx.config.system;

    if (*opt) {
      ctx.echo_units();
      OptimizeOptions o;
      o.kind = objective_kind_from_string(objective);
      o.robust = o.kind == ObjectiveKind::Smoothed ? ctx.config.smoothed : ctx.config.weighted;
      o.n_starts = starts;
      o.seed = ctx.seed;
      o.threads = ctx.threads;
      o.gradient = gradient == "fd" ? GradientMethod::FiniteDifference : GradientMethod::Analytic;
      if (!warm_path.empty()) o.warm_start = load_fields(ctx, warm_path);
      const OptimizationReport rep = optimize(cfg, o);
      const std::string path = ctx.output_path(opt_out);
      io::write_schedule(path, rep.best_schedule, cfg.u_max,
                         {{"report", io::report_to_json(rep)}, {"config", io::run_config_to_json(ctx.config)}});
      out << "objective " << objective << ": best " << io::format_double(rep.best_objective) << " (start "
          << rep.best_start << " of " << rep.n_starts << ")\n";
      out << "fidelity " << io::format_double(rep.best_fidelity_at_nominal) << "\n";
      out << "wrote " << path << "\n";
      return kExitOk;
    }

    if (*dyn) {
      ctx.echo_units();
      const ControlSchedule u = load_fields(ctx, dyn_fields);
      const std::size_t n = dyn_n.value_or(ctx.config.paper_scale ? 10000 : 1000);
      const int sources = dyn_sources.value_or(ctx.config.n_sources);
      const auto sweeps = run_dynamic_sweep(cfg, u, linear_grid(0.0, sigma_max, sigma_step), tgfc_list, n, ctx.seed,
                                            ctx.threads, sources, dyn_fields);
      const std::string path = ctx.output_path(dyn_out);
      io::write_text(path, io::dynamic_sweep_csv(sweeps, ctx.provenance(n, dyn_fields)));
      out << "wrote " << path << "\n";
      return kExitOk;
    }

    if (*sta) {
      ctx.echo_units();
      const ControlSchedule u = load_fields(ctx, sta_fields);
      const std::size_t n = sta_n.value_or(ctx.config.paper_scale ? 100000 : 10000);
      const int sources = sta_sources.value_or(ctx.config.n_sources);
      const auto sweeps =
          run_static_sweep(cfg, {{sta_fields, u}}, linear_grid(0.0, delta_max, delta_step), n, ctx.seed, ctx.threads, sources);
      const std::string path = ctx.output_path(sta_out);
      io::write_text(path, io::static_sweep_csv(sweeps.front(), ctx.provenance(n, sta_fields)));
      out << "wrote " << path << "\n";
      return kExitOk;
    }

    if (*cmp) {
      ctx.echo_units();
      RobustnessOptions o;
      o.weighted = ctx.config.weighted;
      o.smoothed = ctx.config.smoothed;
      o.standard_starts = std_starts;
      o.weighted_starts = w_starts;
      o.standard_seed = ctx.seed;
      o.weighted_seed = ctx.seed + 1;
      o.noise_seed = ctx.seed + 2;
      o.delta = cmp_delta;
      o.n_realizations = cmp_n.value_or(ctx.config.paper_scale ? 100000 : 10000);
      o.threads = ctx.threads;
      if (!std_fields.empty()) o.standard_schedule = load_fields(ctx, std_fields);
      const RobustnessComparison res = run_robustness_comparison(cfg, o);

      const OptimizationReport* reports[] = {&res.standard, &res.weighted, &res.smoothed};
      std::ostringstream table;
      table << ctx.provenance(o.n_realizations).block() << "# delta: " << io::format_double(res.delta) << "\n"
            << "schedule,nominal_fidelity,mean_fidelity,std_error,n\n";
      for (std::size_t k = 0; k < 3; ++k) {
        const auto& row = res.rows[k];
        const std::string sched = ctx.output_path(cmp_prefix + "_" + row.name + ".json");
        io::write_schedule(sched, reports[k]->best_schedule, cfg.u_max, {{"report", io::report_to_json(*reports[k])}});
        io::write_text(ctx.output_path(cmp_prefix + "_curve_" + row.name + ".csv"),
                       io::curve_csv(res.curves[k], ctx.provenance(0, sched)));
        table << row.name << ',' << io::format_double(row.nominal_fidelity) << ',' << io::format_double(row.at_delta.mean)
              << ',' << io::format_double(row.at_delta.std_error) << ',' << row.at_delta.n_realizations << '\n';
        out << row.name << ": nominal " << io::format_double(row.nominal_fidelity) << ", mean at delta="
            << res.delta << ": " << io::format_double(row.at_delta.mean) << " +- "
            << io::format_double(row.at_delta.std_error) << "\n";
      }
      const std::string path = ctx.output_path(cmp_prefix + "_comparison.csv");
      io::write_text(path, table.str());
      out << "wrote " << path << "\n";
      return kExitOk;
    }

    if (*conv) {
      ConvergenceOptions co;
      co.couplings = cfg.couplings;
      co.seed = ctx.seed;
      co.threads = ctx.threads;
      const ConvergenceTable t = run_convergence_check(conv_sigma, conv_T, conv_steps, conv_trials, co);
      const std::string path = ctx.output_path(conv_out);
      io::write_text(path, io::convergence_csv(t, ctx.provenance(conv_trials)));
      for (const auto& p : t.points) out << "N=" << p.n_steps << " median=" << io::format_double(p.median) << "\n";
      out << "slope " << io::format_double(t.slope) << "\n";
      out << "wrote " << path << "\n";
      return kExitOk;
    }

    if (*crv) {
      const ControlSchedule u = load_fields(ctx, crv_fields);
      const auto curve = fidelity_vs_coupling(cfg, u, linear_grid(j_min, j_max, j_step));
      const std::string path = ctx.output_path(crv_out);
      io::write_text(path, io::curve_csv(curve, ctx.provenance(0, crv_fields)));
      out << "wrote " << path << "\n";
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitConfig;
}

}  // namespace toffoli::cli
