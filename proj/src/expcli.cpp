#include "dnls/expcli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include "json.hpp"

#include "dnls/dynamics.hpp"
#include "dnls/errors.hpp"
#include "dnls/experiments.hpp"
#include "dnls/groundstate.hpp"
#include "dnls/theory.hpp"

namespace dnls::cli {

using json = nlohmann::ordered_json;

namespace {

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::string> provenance{"beta", "B", "n", "L", "h", "seed"};

std::vector<std::string> with_provenance(std::vector<std::string> extra) {
  std::vector<std::string> h = provenance;
  h.insert(h.end(), extra.begin(), extra.end());
  return h;
}

class Emitter {
 public:
  Emitter(const ExperimentConfig& cfg, const RunContext& ctx) : cfg_(cfg), ctx_(ctx) {
    std::error_code ec;
    std::filesystem::create_directories(ctx.out_dir, ec);
    if (ec) throw ConfigError(fmt::format("--out: cannot create {}: {}", ctx.out_dir.string(), ec.message()));
  }

  void log(const std::string& line) const {
    if (!ctx_.quiet && ctx_.log) ctx_.log(line);
  }

  void file(const std::string& name, const std::string& content) {
    const auto path = ctx_.out_dir / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << content;
    if (!os) throw std::runtime_error("write failed: " + path.string());
    entries_.push_back({{"path", name}, {"bytes", content.size()}, {"sha1", git_blob_sha1(content)}});
    out_.files.push_back(path);
  }

  // csv text plus the matching chart(s)
  void csv(const std::string& name, const std::string& text, const std::vector<PlotSpec>& plots,
           const std::vector<std::string>& svg_names) {
    file(name, text);
    std::istringstream is(text);
    const Table t = read_csv(is);
    for (std::size_t i = 0; i < plots.size(); ++i) file(svg_names[i], render_svg(t, plots[i]));
  }

  void warn(const std::string& w) {
    out_.warnings.push_back(w);
    log("warning: " + w);
  }
  void fail_diagnostics(const std::string& why) {
    out_.diagnostics_failed = true;
    warn(why);
  }

  json results = json::object();

  RunOutcome finish() {
    json m;
    m["experiment"] = cfg_.experiment();
    m["seed"] = cfg_.seed();
    json echo = json::object();
    for (const auto& [k, v] : cfg_.echo()) echo[k] = v;
    m["config"] = echo;
    m["config_sha1"] = git_blob_sha1(cfg_.canonical_text());
    m["threads"] = ctx_.threads;
    m["files"] = entries_;
    m["results"] = results;
    m["warnings"] = out_.warnings;
    m["diagnostics_failed"] = out_.diagnostics_failed;
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
    m["created_utc"] = stamp;

    const auto path = ctx_.out_dir / "manifest.json";
    std::ofstream os(path);
    os << m.dump(2) << "\n";
    if (!os) throw std::runtime_error("write failed: " + path.string());
    out_.files.push_back(path);
    return out_;
  }

 private:
  const ExperimentConfig& cfg_;
  const RunContext& ctx_;
  json entries_ = json::array();
  RunOutcome out_;
};

LatticeConfig lattice_of(const ExperimentConfig& c) {
  return build_torus(static_cast<int>(c.get_int("lattice.d")), static_cast<int>(c.get_int("lattice.L")),
                     c.get_double("lattice.h"));
}

SamplerOptions sampler_of(const ExperimentConfig& c) {
  SamplerOptions so;
  so.sweeps = c.get_int("gibbs.sweeps");
  so.burn_in = c.get_int("gibbs.burn_in");
  so.record_every = static_cast<int>(c.get_int("gibbs.record_every"));
  so.transfer_moves = static_cast<int>(c.get_int("gibbs.transfer_moves"));
  so.swap_moves = static_cast<int>(c.get_int("gibbs.swap_moves"));
  so.condensate_moves = static_cast<int>(c.get_int("gibbs.condensate_moves"));
  return so;
}

std::vector<std::string> prov_row(double beta, double B, double n, double L, double h, std::uint64_t seed) {
  return {cell(beta), cell(B), cell(n), cell(L), cell(h), fmt::format("{}", seed)};
}

template <class... T>
std::vector<std::string> join(std::vector<std::string> a, T&&... more) {
  (a.push_back(std::forward<T>(more)), ...);
  return a;
}

// ---------------------------------------------------------------------------

void run_theory(const ExperimentConfig& c, Emitter& em) {
  const double B = c.get_double("theory.B");
  const auto rows = theory_table(c.get_list("theory.betas"), B);
  std::ostringstream os;
  CsvWriter w(os, with_provenance({"theta", "g", "F", "a", "energy_density", "phase"}));
  for (const auto& r : rows)
    w.row(join(prov_row(r.beta, B, nan_v, nan_v, nan_v, c.seed()), cell(r.theta), cell(r.g.value_or(nan_v)),
               cell(r.F), cell(r.a.value_or(nan_v)), cell(r.a ? -*r.a * *r.a : 0.0), r.phase));
  em.csv("theory_table.csv", os.str(),
         {{"Limiting free energy", "beta", {"F"}, "beta", "(1/n) log Z"},
          {"Condensate fraction", "beta", {"a"}, "beta", "a"}},
         {"theory_F.svg", "theory_a.svg"});
  em.results["theta_c"] = theory::theta_c();
  em.results["rows"] = rows.size();
}

void run_sweep(const ExperimentConfig& c, Emitter& em, int threads) {
  SweepOptions o;
  o.B = c.get_double("gibbs.B");
  o.betas = c.get_list("gibbs.betas");
  o.lattice = lattice_of(c);
  o.edge_weight = c.get_double("gibbs.edge_weight");
  o.sampler = sampler_of(c);
  o.threads = threads;
  o.min_ess = c.get_double("gibbs.min_ess");
  em.log(fmt::format("sweep: {} temperatures, n = {}, {} sweeps", o.betas.size(), o.lattice.n, o.sampler.sweeps));
  const auto res = sweep_beta(o, c.seed());

  const double n = static_cast<double>(o.lattice.n);
  std::ostringstream os;
  CsvWriter w(os, with_provenance({"N", "N_se", "H", "H_se", "M1", "M1_se", "M2", "M2_se", "mass_fraction",
                                   "mass_fraction_se", "ess", "F_sampled", "F_theory", "a_theory",
                                   "mass_fraction_theory", "H_theory", "accept_local", "accept_transfer",
                                   "accept_swap", "accept_condensate", "low_ess"}));
  for (const auto& r : res.rows) {
    const auto& s = r.stats;
    const double a = r.a_theory.value_or(nan_v);
    const bool super = r.beta * o.B * o.B > theory::theta_c();
    w.row(join(prov_row(r.beta, o.B, n, o.lattice.L, o.lattice.h, c.seed()), cell(s.N.mean), cell(s.N.se),
               cell(s.H.mean), cell(s.H.se), cell(s.M1.mean), cell(s.M1.se), cell(s.M2.mean), cell(s.M2.se),
               cell(s.mass_fraction.mean), cell(s.mass_fraction.se), cell(s.ess), cell(r.F_sampled),
               cell(r.F_theory), cell(a), cell(super ? a / o.B : 0.0), cell(super ? -a * a : 0.0),
               cell(s.accept_local), cell(s.accept_transfer), cell(s.accept_swap), cell(s.accept_condensate),
               r.low_ess ? "1" : "0"));
  }
  em.csv("sweep.csv", os.str(),
         {{"Free energy", "beta", {"F_sampled", "F_theory"}, "beta", "(1/n) log Z"},
          {"Mass fraction of the largest site", "beta", {"mass_fraction", "mass_fraction_theory"}, "beta", "M1 / N"},
          {"Energy per site", "beta", {"H", "H_theory"}, "beta", "H / n"}},
         {"sweep_F.svg", "sweep_mass_fraction.svg", "sweep_energy.svg"});

  em.results["jump_beta"] = res.jump_beta ? json(*res.jump_beta) : json(nullptr);
  em.results["jump_size"] = res.jump_size;
  em.results["theta_c"] = theory::theta_c();
  em.results["swap_acceptance"] = res.swap_acceptance;
  em.results["mixing_ok"] = res.mixing_ok;
  if (!res.mixing_ok) em.fail_diagnostics(fmt::format("effective sample size below {} at some temperature", o.min_ess));
  for (std::size_t i = 0; i < res.swap_acceptance.size(); ++i)
    if (res.swap_acceptance[i] < 0.01)
      em.warn(fmt::format("replica swap acceptance {:.3g} between beta {} and {}", res.swap_acceptance[i],
                          res.rows[i].beta, res.rows[i + 1].beta));
}

void run_breather(const ExperimentConfig& c, Emitter& em) {
  BreatherOptions o;
  o.beta = c.get_double("gibbs.beta");
  o.B = c.get_double("gibbs.B");
  o.lattice = lattice_of(c);
  o.edge_weight = c.get_double("gibbs.edge_weight");
  o.samples = static_cast<int>(c.get_int("gibbs.samples"));
  o.burn_in = c.get_int("gibbs.burn_in");
  o.sweeps_between = c.get_int("gibbs.sweeps_between");
  o.T = c.get_double("dynamics.T");
  o.dt = c.get_double("dynamics.dt");
  o.snapshot_stride = static_cast<int>(c.get_int("dynamics.snapshot_stride"));
  em.log(fmt::format("breather: {} samples to T = {}", o.samples, o.T));
  const auto res = breather_persistence(o, c.seed());

  const double n = static_cast<double>(o.lattice.n);
  std::ostringstream os;
  CsvWriter w(os, with_provenance({"run", "site", "persisted", "hops", "min_mass_fraction"}));
  std::ostringstream jl;
  for (std::size_t i = 0; i < res.runs.size(); ++i) {
    const auto& r = res.runs[i];
    w.row(join(prov_row(o.beta, o.B, n, o.lattice.L, o.lattice.h, c.seed()), cell(static_cast<long>(i)),
               cell(static_cast<long>(r.site)), r.persisted ? "1" : "0", cell(static_cast<long>(r.hops)),
               cell(r.min_mass_fraction)));
    jl << json{{"run", i}, {"site", r.site}, {"persisted", r.persisted}, {"hops", r.hops},
               {"min_mass_fraction", r.min_mass_fraction}}
              .dump()
       << "\n";
  }
  em.csv("breather.csv", os.str(),
         {{"Minimum mass fraction per run", "run", {"min_mass_fraction"}, "run", "min over t of M1 / N", true}},
         {"breather.svg"});
  em.file("breather.jsonl", jl.str());
  em.results["condensed"] = res.condensed;
  em.results["excluded"] = res.excluded;
  em.results["persistence"] = res.persistence;
  em.results["min_mass_fraction"] = res.min_mass_fraction;
  em.results["max_power_drift"] = res.max_power_drift;
  if (res.condensed < o.samples)
    em.warn(fmt::format("only {} of {} requested condensed samples were drawn", res.condensed, o.samples));
}

void run_marginals(const ExperimentConfig& c, Emitter& em) {
  MarginalOptions o;
  o.beta = c.get_double("gibbs.beta");
  o.B = c.get_double("gibbs.B");
  o.lattice = lattice_of(c);
  o.edge_weight = c.get_double("gibbs.edge_weight");
  o.m = static_cast<int>(c.get_int("gibbs.m"));
  o.samples = static_cast<int>(c.get_int("gibbs.samples"));
  o.thin = c.get_int("gibbs.thin");
  o.burn_in = c.get_int("gibbs.burn_in");
  const auto r = marginal_test(o, c.seed());

  std::ostringstream os;
  CsvWriter w(os, with_provenance({"m", "values", "variance", "argmax_removed", "second_moment_ratio", "mean_re",
                                   "mean_im", "ks_stat", "ks_p", "shortage"}));
  w.row(join(prov_row(o.beta, o.B, static_cast<double>(o.lattice.n), o.lattice.L, o.lattice.h, c.seed()),
             cell(static_cast<long>(r.m)), cell(r.values), cell(r.variance), r.argmax_removed ? "1" : "0",
             cell(r.second_moment_ratio), cell(r.mean_re), cell(r.mean_im), cell(r.ks_stat), cell(r.ks_p),
             r.shortage ? "1" : "0"));
  em.file("marginals.csv", os.str());
  em.results["second_moment_ratio"] = r.second_moment_ratio;
  em.results["ks_p"] = r.ks_p;
  em.results["argmax_removed"] = r.argmax_removed;
  if (r.shortage) em.fail_diagnostics("fewer than 200 effective marginal samples");
}

void run_continuum(const ExperimentConfig& c, Emitter& em) {
  ContinuumOptions o;
  o.s = c.get_double("continuum.s");
  o.hs = c.get_list("continuum.hs");
  o.T = c.get_double("continuum.T");
  o.dt = c.get_double("continuum.dt");
  o.period = c.get_double("continuum.period");
  o.amplitude = c.get_double("continuum.amplitude");
  o.ref_modes = static_cast<int>(c.get_int("continuum.ref_modes"));
  if (c.has("continuum.ref_alpha")) o.ref_alpha = c.get_double("continuum.ref_alpha");
  if (c.has("continuum.ref_c")) o.ref_c = c.get_double("continuum.ref_c");
  em.log(fmt::format("continuum: s = {}, {} resolutions", o.s, o.hs.size()));
  const auto r = continuum_convergence(o);

  std::ostringstream os;
  CsvWriter w(os, with_provenance({"s", "alpha", "c", "error"}));
  for (std::size_t i = 0; i < r.hs.size(); ++i) {
    const double L = std::round(o.period / r.hs[i]);
    w.row(join(prov_row(nan_v, nan_v, L, L, r.hs[i], c.seed()), cell(o.s), cell(r.alpha), cell(r.c),
               cell(r.errors[i])));
  }
  em.csv("continuum.csv", os.str(),
         {{"Discrete vs continuum error at T", "h", {"error"}, "h", "relative l2 error", false, true, true}},
         {"continuum.svg"});
  em.results["alpha"] = r.alpha;
  em.results["c"] = r.c;
  em.results["order"] = r.order;
  em.results["monotone"] = r.monotone;
  em.results["ref_self_check"] = r.ref_self_check;
  if (r.ref_self_check > 1e-3 * *std::min_element(r.errors.begin(), r.errors.end()))
    em.warn(fmt::format("reference self-check {:.3g} is not small against the errors", r.ref_self_check));
}

void run_decay(const ExperimentConfig& c, Emitter& em) {
  const int d = static_cast<int>(c.get_int("lattice.d"));
  const int L = static_cast<int>(c.get_int("lattice.L"));
  if (c.get_double("lattice.h") != 1.0) throw ConfigError("lattice.h: the decay experiment runs at h = 1");
  const auto r = decay_experiment(d, L, c.get_double("decay.T"), {c.get_double("decay.t1"), c.get_double("decay.t2")},
                                  static_cast<int>(c.get_int("decay.samples")));
  std::ostringstream os;
  CsvWriter w(os, with_provenance({"t", "sup_norm"}));
  const double n = std::pow(static_cast<double>(L), d);
  for (std::size_t i = 0; i < r.times.size(); ++i)
    w.row(join(prov_row(nan_v, nan_v, n, L, 1.0, c.seed()), cell(r.times[i]), cell(r.sup_norm[i])));
  em.csv("decay.csv", os.str(),
         {{"Free evolution of a unit delta", "t", {"sup_norm"}, "t", "sup norm", false, true, true}},
         {"decay.svg"});
  em.results["exponent"] = r.exponent;
  em.results["expected"] = -d / 3.0;
  em.results["wrap_time"] = r.wrap_time;
  if (c.get_double("decay.t2") > r.wrap_time)
    em.warn(fmt::format("fit window ends after the wrap-around time {:.4g}", r.wrap_time));
}

void run_groundstate(const ExperimentConfig& c, Emitter& em) {
  const auto lat = lattice_of(c);
  const auto model = cubic_focusing(nearest_neighbor_kernel(lat));
  MinimizeOptions mo;
  mo.tol = c.get_double("groundstate.tol");
  mo.max_iters = static_cast<int>(c.get_int("groundstate.max_iters"));
  mo.step = c.get_double("groundstate.step");
  const auto rows = groundstate_grid(model, c.get_list("groundstate.nus"), mo);

  std::ostringstream os;
  CsvWriter w(os, with_provenance({"nu", "omega", "energy", "uniform_energy", "residual", "mass_fraction",
                                   "converged", "origin"}));
  for (const auto& r : rows)
    w.row(join(prov_row(nan_v, nan_v, static_cast<double>(lat.n), lat.L, lat.h, c.seed()), cell(r.nu),
               cell(r.omega), cell(r.energy), cell(r.uniform_energy), cell(r.residual), cell(r.mass_fraction),
               r.converged ? "1" : "0", r.origin));
  em.csv("groundstate.csv", os.str(),
         {{"Constrained minimum of H", "nu", {"energy", "uniform_energy"}, "power nu", "energy", false, true}},
         {"groundstate.svg"});
  for (const auto& r : rows)
    if (!r.converged) em.warn(fmt::format("ground state at nu = {} stopped at residual {:.3g}", r.nu, r.residual));

  if (c.has("groundstate.threshold_lo")) {
    const auto t = excitation_threshold(model, {c.get_double("groundstate.threshold_lo"),
                                                c.get_double("groundstate.threshold_hi")},
                                        c.get_double("groundstate.threshold_tol"), mo);
    std::ostringstream ts;
    CsvWriter tw(ts, with_provenance({"nu", "energy", "baseline", "localized"}));
    for (const auto& p : t.probes)
      tw.row(join(prov_row(nan_v, nan_v, static_cast<double>(lat.n), lat.L, lat.h, c.seed()), cell(p.nu),
                  cell(p.energy), cell(p.baseline), p.localized ? "1" : "0"));
    em.file("threshold.csv", ts.str());
    em.results["threshold"] = t.nu_c ? json(*t.nu_c) : json("none_detected");
    em.results["threshold_bracket"] = {t.bracket_lo, t.bracket_hi};
    em.results["threshold_inconsistent"] = t.inconsistent;
    if (t.inconsistent) em.warn("threshold probes are not monotone in nu or the bracket holds no crossing");
  }
}

void run_jjt(const ExperimentConfig& c, Emitter& em) {
  JjtOptions o;
  o.modes.clear();
  for (double m : c.get_list("jjt.modes")) o.modes.push_back(static_cast<int>(m));
  o.B = c.get_double("jjt.B");
  o.C = c.get_double("jjt.C");
  o.kappa = static_cast<int>(c.get_int("jjt.kappa"));
  o.grid = static_cast<int>(c.get_int("jjt.grid"));
  o.pcn.steps = c.get_int("jjt.steps");
  o.pcn.burn_in = c.get_int("jjt.burn_in");
  o.pcn.thin = static_cast<int>(c.get_int("jjt.thin"));
  em.log(fmt::format("jjt: modes up to {}, kappa = {}", o.modes.back(), o.kappa));
  const auto r = jjt_concentration(o, c.seed());

  std::ostringstream os;
  CsvWriter w(os, with_provenance({"n_modes", "distance", "distance_se", "acceptance", "samples"}));
  for (const auto& row : r.rows)
    w.row(join(prov_row(row.beta, o.B, 2.0 * row.n_modes + 1, nan_v, nan_v, c.seed()),
               cell(static_cast<long>(row.n_modes)), cell(row.distance.mean), cell(row.distance.se),
               cell(row.acceptance), cell(row.samples)));
  em.csv("jjt.csv", os.str(),
         {{"H1 distance to the ground-state orbit", "n_modes", {"distance"}, "modes n", "distance", false, true}},
         {"jjt.svg"});
  em.results["ground_energy"] = r.ground_energy;
  em.results["ground_h1"] = r.ground_h1;
  em.results["non_increasing"] = r.non_increasing;
  for (const auto& row : r.rows)
    if (row.acceptance < 0.05 || row.samples < 50)
      em.fail_diagnostics(fmt::format("pCN chain at n = {} has acceptance {:.3g} with {} samples", row.n_modes,
                                      row.acceptance, row.samples));
}

}  // namespace

RunOutcome run(const ExperimentConfig& cfg, const RunContext& ctx) {
  cfg.validate();
  if (ctx.threads < 1) throw ConfigError("--threads: must be at least 1");
  Emitter em(cfg, ctx);
  const auto& e = cfg.experiment();
  if (e == "theory_table")
    run_theory(cfg, em);
  else if (e == "sweep")
    run_sweep(cfg, em, ctx.threads);
  else if (e == "breather")
    run_breather(cfg, em);
  else if (e == "marginals")
    run_marginals(cfg, em);
  else if (e == "continuum")
    run_continuum(cfg, em);
  else if (e == "decay")
    run_decay(cfg, em);
  else if (e == "groundstate")
    run_groundstate(cfg, em);
  else if (e == "jjt_concentration")
    run_jjt(cfg, em);
  else
    throw ConfigError(fmt::format("experiment.name: unknown experiment \"{}\"", e));
  return em.finish();
}

}  // namespace dnls::cli
