#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "dnls/errors.hpp"
#include "dnls/expcli.hpp"

namespace {

namespace cli = dnls::cli;

enum Exit { ok = 0, config_error = 2, numerical_error = 3, diagnostic_error = 4 };

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  int threads = 1;
  bool quiet = false;
};

// Direct subcommand: defaults for one experiment, an optional config file on
// top, then --set overrides and a few named shortcuts.
struct Direct {
  CLI::App* sub = nullptr;
  std::string experiment;
  std::optional<std::string> config;
  std::vector<std::string> sets;
  std::map<std::string, std::string> shortcuts;  // config path -> value given on the command line
};

int run_config(cli::ExperimentConfig cfg, const Globals& g, const std::vector<std::string>& sets) {
  for (const auto& s : sets) cfg.set(s);
  if (g.seed) cfg.set(fmt::format("experiment.seed={}", *g.seed));
  cfg.validate();
  cli::RunContext ctx;
  ctx.out_dir = g.out ? *g.out : cfg.output_dir();
  ctx.threads = g.threads;
  ctx.quiet = g.quiet;
  ctx.log = [](const std::string& line) { std::fprintf(stderr, "%s\n", line.c_str()); };
  const auto outcome = cli::run(cfg, ctx);
  if (!g.quiet) {
    for (const auto& f : outcome.files) std::printf("wrote %s\n", f.string().c_str());
  }
  return outcome.diagnostics_failed ? diagnostic_error : ok;
}

int plot_command(const std::string& csv, const cli::PlotSpec& spec, const std::optional<std::string>& svg,
                 const Globals& g) {
  std::ifstream is(csv, std::ios::binary);
  if (!is) throw dnls::ConfigError(fmt::format("{}: cannot open csv", csv));
  const auto table = cli::read_csv(is);
  std::filesystem::path target;
  if (svg)
    target = *svg;
  else if (g.out)
    target = std::filesystem::path(*g.out) / std::filesystem::path(csv).filename().replace_extension(".svg");
  else
    target = std::filesystem::path(csv).replace_extension(".svg");

  cli::PlotSpec s = spec;
  if (table.header.empty()) {
    // nothing to read the columns from: draw bare axes
    cli::Table stub;
    stub.header.push_back(s.x);
    for (const auto& y : s.y) stub.header.push_back(y);
    if (!g.quiet) std::fprintf(stderr, "warning: %s is empty; writing empty axes\n", csv.c_str());
    const auto text = cli::render_svg(stub, s);
    if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
    std::ofstream(target) << text;
    return ok;
  }
  if (table.rows.empty() && !g.quiet) std::fprintf(stderr, "warning: %s has no rows; writing empty axes\n", csv.c_str());
  const auto text = cli::render_svg(table, s);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  std::ofstream os(target);
  os << text;
  if (!os) throw std::runtime_error("write failed: " + target.string());
  if (!g.quiet) std::printf("wrote %s\n", target.string().c_str());
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete NLS lattice experiments: Gibbs sampling, dynamics, ground states"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "RNG seed (overrides experiment.seed)");
  app.add_option("--out", g.out, "output directory (overrides experiment.output_dir)");
  app.add_option("--threads", g.threads, "worker threads for tempered sweeps")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", g.quiet, "no progress output");

  std::string config_path;
  std::vector<std::string> run_sets;
  auto* run = app.add_subcommand("run", "run the experiment named in a config file");
  run->add_option("config", config_path, "INI config file")->required();
  run->add_option("--set", run_sets, "override, section.key=value");

  std::vector<Direct> directs;
  directs.reserve(8);
  struct Shortcut {
    const char* flag;
    const char* path;
    const char* help;
  };
  auto direct = [&](const char* name, const char* experiment, const char* help, std::vector<Shortcut> shortcuts) {
    directs.push_back({nullptr, experiment, {}, {}, {}});
    Direct& d = directs.back();
    auto* sub = app.add_subcommand(name, help);
    d.sub = sub;
    sub->add_option("--config", d.config, "INI file layered over the defaults");
    sub->add_option("--set", d.sets, "override, section.key=value");
    for (const auto& s : shortcuts)
      sub->add_option_function<std::string>(
          s.flag, [&d, path = std::string(s.path)](const std::string& v) { d.shortcuts[path] = v; }, s.help);
    return sub;
  };

  direct("theory", "theory_table", "closed-form free energy, threshold and condensate fraction table",
         {{"--B", "theory.B", "cutoff B"}, {"--betas", "theory.betas", "list or start:stop:count"}});
  direct("sweep", "sweep", "tempered Gibbs sweep across beta (phase diagram)",
         {{"--B", "gibbs.B", "cutoff B"},
          {"--betas", "gibbs.betas", "list or start:stop:count"},
          {"--L", "lattice.L", "side length"},
          {"--sweeps", "gibbs.sweeps", "sweeps per replica"}});
  direct("breather", "breather", "argmax persistence of Gibbs samples under the flow",
         {{"--beta", "gibbs.beta", "inverse temperature"},
          {"--samples", "gibbs.samples", "condensed samples"},
          {"--T", "dynamics.T", "time horizon"}});
  direct("marginals", "marginals", "moment and KS tests of single-site marginals",
         {{"--beta", "gibbs.beta", "inverse temperature"}, {"--m", "gibbs.m", "coordinates per sample"}});
  direct("continuum", "continuum", "long-range lattice vs continuum convergence",
         {{"--s", "continuum.s", "long-range exponent"},
          {"--ref-alpha", "continuum.ref_alpha", "reference order"},
          {"--ref-c", "continuum.ref_c", "reference constant"}});
  direct("decay", "decay", "sup-norm decay of free evolution",
         {{"--d", "lattice.d", "dimension"}, {"--L", "lattice.L", "side length"}});
  direct("groundstate", "groundstate", "constrained minimizers and excitation threshold",
         {{"--nus", "groundstate.nus", "powers"},
          {"--threshold-lo", "groundstate.threshold_lo", "threshold bracket low end"},
          {"--threshold-hi", "groundstate.threshold_hi", "threshold bracket high end"}});
  direct("jjt", "jjt_concentration", "spectral saturable ensemble vs ground-state orbit",
         {{"--kappa", "jjt.kappa", "-1 focusing, +1 defocusing"}, {"--modes", "jjt.modes", "mode counts"}});

  std::string csv;
  cli::PlotSpec spec;
  std::optional<std::string> svg;
  auto* plot = app.add_subcommand("plot", "SVG chart from CSV columns");
  plot->add_option("csv", csv, "input CSV")->required();
  plot->add_option("--x", spec.x, "x column")->required();
  plot->add_option("--y", spec.y, "y column(s)")->required();
  plot->add_option("--title", spec.title);
  plot->add_option("--xlabel", spec.xlabel);
  plot->add_option("--ylabel", spec.ylabel);
  plot->add_flag("--scatter", spec.scatter, "markers only");
  plot->add_flag("--logx", spec.logx);
  plot->add_flag("--logy", spec.logy);
  plot->add_option("--svg", svg, "output file (default: next to the CSV, or under --out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  try {
    if (*run) return run_config(cli::ExperimentConfig::load(config_path), g, run_sets);
    if (*plot) return plot_command(csv, spec, svg, g);
    for (Direct& d : directs) {
      if (!*d.sub) continue;
      cli::ExperimentConfig cfg = d.config ? cli::ExperimentConfig::load(*d.config)
                                           : cli::ExperimentConfig::defaults(d.experiment);
      if (cfg.experiment() != d.experiment)
        throw dnls::ConfigError(fmt::format("experiment.name: \"{}\" given to the {} subcommand", cfg.experiment(),
                                            d.sub->get_name()));
      std::vector<std::string> sets;
      for (const auto& [path, value] : d.shortcuts) sets.push_back(path + "=" + value);
      sets.insert(sets.end(), d.sets.begin(), d.sets.end());
      return run_config(cfg, g, sets);
    }
  } catch (const std::invalid_argument& e) {  // ConfigError and argument checks
    std::fprintf(stderr, "config error: %s\n", e.what());
    return config_error;
  } catch (const dnls::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return numerical_error;
  } catch (const dnls::DiagnosticError& e) {
    std::fprintf(stderr, "diagnostic failure: %s\n", e.what());
    return diagnostic_error;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return ok;
}
