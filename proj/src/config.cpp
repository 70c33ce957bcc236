#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <fmt/format.h>

#include "dnls/errors.hpp"
#include "dnls/expcli.hpp"

namespace dnls::cli {

namespace pt = boost::property_tree;

namespace {

enum class Kind { integer, unsigned_integer, real, list, text };

struct Field {
  const char* key;
  Kind kind;
};

struct Section {
  const char* name;
  std::vector<Field> fields;
};

const std::vector<Section>& schema() {
  static const std::vector<Section> s{
      {"experiment", {{"name", Kind::text}, {"seed", Kind::unsigned_integer}, {"output_dir", Kind::text}}},
      {"lattice", {{"d", Kind::integer}, {"L", Kind::integer}, {"h", Kind::real}}},
      {"gibbs",
       {{"beta", Kind::real},
        {"B", Kind::real},
        {"betas", Kind::list},
        {"sweeps", Kind::integer},
        {"burn_in", Kind::integer},
        {"record_every", Kind::integer},
        {"transfer_moves", Kind::integer},
        {"swap_moves", Kind::integer},
        {"condensate_moves", Kind::integer},
        {"min_ess", Kind::real},
        {"samples", Kind::integer},
        {"thin", Kind::integer},
        {"m", Kind::integer},
        {"sweeps_between", Kind::integer},
        {"edge_weight", Kind::real}}},
      {"dynamics", {{"T", Kind::real}, {"dt", Kind::real}, {"snapshot_stride", Kind::integer}}},
      {"continuum",
       {{"s", Kind::real},
        {"hs", Kind::list},
        {"T", Kind::real},
        {"dt", Kind::real},
        {"period", Kind::real},
        {"amplitude", Kind::real},
        {"ref_modes", Kind::integer},
        {"ref_alpha", Kind::real},
        {"ref_c", Kind::real}}},
      {"decay", {{"T", Kind::real}, {"t1", Kind::real}, {"t2", Kind::real}, {"samples", Kind::integer}}},
      {"groundstate",
       {{"nus", Kind::list},
        {"tol", Kind::real},
        {"max_iters", Kind::integer},
        {"step", Kind::real},
        {"threshold_lo", Kind::real},
        {"threshold_hi", Kind::real},
        {"threshold_tol", Kind::real}}},
      {"jjt",
       {{"modes", Kind::list},
        {"B", Kind::real},
        {"C", Kind::real},
        {"kappa", Kind::integer},
        {"grid", Kind::integer},
        {"steps", Kind::integer},
        {"burn_in", Kind::integer},
        {"thin", Kind::integer}}},
      {"theory", {{"betas", Kind::list}, {"B", Kind::real}}},
  };
  return s;
}

const Section* find_section(const std::string& name) {
  for (const auto& s : schema())
    if (name == s.name) return &s;
  return nullptr;
}

const Field* find_field(const Section& s, const std::string& key) {
  for (const auto& f : s.fields)
    if (key == f.key) return &f;
  return nullptr;
}

// sections each experiment reads; a config file must contain all of them
const std::map<std::string, std::vector<std::string>>& required_sections() {
  static const std::map<std::string, std::vector<std::string>> m{
      {"sweep", {"lattice", "gibbs"}},
      {"breather", {"lattice", "gibbs", "dynamics"}},
      {"marginals", {"lattice", "gibbs"}},
      {"continuum", {"continuum"}},
      {"decay", {"lattice", "decay"}},
      {"groundstate", {"lattice", "groundstate"}},
      {"jjt_concentration", {"jjt"}},
      {"theory_table", {"theory"}},
  };
  return m;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <class T>
bool parse_number(const std::string& text, T& out) {
  const auto t = trim(text);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  auto [p, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && p == last;
}

double parse_real(const std::string& path, const std::string& text) {
  double v = 0.0;
  if (!parse_number(text, v) || !std::isfinite(v))
    throw ConfigError(fmt::format("{}: expected a number, got \"{}\"", path, text));
  return v;
}

long parse_integer(const std::string& path, const std::string& text) {
  long v = 0;
  if (!parse_number(text, v)) throw ConfigError(fmt::format("{}: expected an integer, got \"{}\"", path, text));
  return v;
}

std::uint64_t parse_unsigned(const std::string& path, const std::string& text) {
  std::uint64_t v = 0;
  if (!parse_number(text, v))
    throw ConfigError(fmt::format("{}: expected a non-negative integer, got \"{}\"", path, text));
  return v;
}

std::vector<double> parse_list(const std::string& path, const std::string& text) {
  const auto t = trim(text);
  if (t.empty()) throw ConfigError(fmt::format("{}: empty list", path));
  if (t.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(t);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() != 3) throw ConfigError(fmt::format("{}: range must be start:stop:count, got \"{}\"", path, t));
    const double a = parse_real(path, parts[0]);
    const double b = parse_real(path, parts[1]);
    const long count = parse_integer(path, parts[2]);
    if (count < 1) throw ConfigError(fmt::format("{}: range count must be positive", path));
    std::vector<double> out(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = count == 1 ? a : a + (b - a) * i / (count - 1);
    return out;
  }
  std::vector<double> out;
  std::stringstream ss(t);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(parse_real(path, item));
  return out;
}

void check_value(const std::string& path, Kind kind, const std::string& text) {
  switch (kind) {
    case Kind::integer: parse_integer(path, text); break;
    case Kind::unsigned_integer: parse_unsigned(path, text); break;
    case Kind::real: parse_real(path, text); break;
    case Kind::list: parse_list(path, text); break;
    case Kind::text: break;
  }
}

pt::ptree default_tree(const std::string& experiment) {
  pt::ptree t;
  t.put("experiment.name", experiment);
  t.put("experiment.seed", "1");
  t.put("experiment.output_dir", "out");

  if (experiment == "decay") {
    t.put("lattice.d", "1");
    t.put("lattice.L", "4096");
    t.put("lattice.h", "1");
  } else if (experiment == "groundstate") {
    t.put("lattice.d", "3");
    t.put("lattice.L", "16");
    t.put("lattice.h", "0.0625");
  } else {
    t.put("lattice.d", "3");
    t.put("lattice.L", "8");
    t.put("lattice.h", "1");
  }

  t.put("gibbs.beta", experiment == "marginals" ? "1" : "4");
  t.put("gibbs.B", "1");
  t.put("gibbs.betas", "0.5:6:12");
  t.put("gibbs.sweeps", "6000");
  t.put("gibbs.burn_in", "1000");
  t.put("gibbs.record_every", "1");
  t.put("gibbs.transfer_moves", "1");
  t.put("gibbs.swap_moves", "1");
  t.put("gibbs.condensate_moves", "1");
  t.put("gibbs.min_ess", "50");
  t.put("gibbs.samples", experiment == "breather" ? "50" : "2000");
  t.put("gibbs.thin", "10");
  t.put("gibbs.m", "8");
  t.put("gibbs.sweeps_between", "100");
  t.put("gibbs.edge_weight", "2");

  t.put("dynamics.T", "100");
  t.put("dynamics.dt", "0.002");
  t.put("dynamics.snapshot_stride", "50");

  t.put("continuum.s", "2");
  t.put("continuum.hs", "0.03125, 0.015625, 0.0078125");
  t.put("continuum.T", "0.5");
  t.put("continuum.dt", "0.0001");
  t.put("continuum.period", "4");
  t.put("continuum.amplitude", "1");
  t.put("continuum.ref_modes", "1024");

  t.put("decay.T", "400");
  t.put("decay.t1", "20");
  t.put("decay.t2", "400");
  t.put("decay.samples", "64");

  t.put("groundstate.nus", "100, 1000, 2000, 3000, 5000");
  t.put("groundstate.tol", "1e-8");
  t.put("groundstate.max_iters", "3000");
  t.put("groundstate.step", "1");
  t.put("groundstate.threshold_tol", "5");

  t.put("jjt.modes", "8, 16, 32");
  t.put("jjt.B", "3");
  t.put("jjt.C", "20");
  t.put("jjt.kappa", "-1");
  t.put("jjt.grid", "512");
  t.put("jjt.steps", "20000");
  t.put("jjt.burn_in", "2000");
  t.put("jjt.thin", "10");

  t.put("theory.betas", "0:6:61");
  t.put("theory.B", "1");
  return t;
}

// rejects unknown sections or keys and malformed values; returns the section names seen
std::vector<std::string> check_tree(const pt::ptree& t) {
  std::vector<std::string> seen;
  for (const auto& [sec, body] : t) {
    const Section* s = find_section(sec);
    if (!s) throw ConfigError(fmt::format("{}: unknown section", sec));
    if (!body.data().empty()) throw ConfigError(fmt::format("{}: key outside of any section", sec));
    for (const auto& [key, node] : body) {
      const std::string path = sec + "." + key;
      const Field* f = find_field(*s, key);
      if (!f) throw ConfigError(fmt::format("{}: unknown key", path));
      check_value(path, f->kind, node.data());
    }
    seen.push_back(sec);
  }
  return seen;
}

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path + ": " + what);
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"sweep",       "breather",          "marginals",   "continuum",
                                              "decay",       "groundstate",       "jjt_concentration",
                                              "theory_table"};
  return names;
}

ExperimentConfig ExperimentConfig::defaults(const std::string& experiment) {
  if (std::find(experiment_names().begin(), experiment_names().end(), experiment) == experiment_names().end())
    throw ConfigError(fmt::format("experiment.name: unknown experiment \"{}\"", experiment));
  ExperimentConfig c;
  c.tree_ = default_tree(experiment);
  c.experiment_ = experiment;
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::parse(std::istream& is, const std::string& origin) {
  const std::string text{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
  pt::ptree file;
  try {
    std::istringstream ts(text);
    pt::read_ini(ts, file);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("{}:{}: {}", origin, e.line(), e.message()));
  }
  auto seen = check_tree(file);
  // read_ini drops sections without keys; those still count as present
  std::istringstream ls(text);
  for (std::string line; std::getline(ls, line);) {
    line = trim(line);
    if (line.size() < 2 || line.front() != '[' || line.back() != ']') continue;
    const std::string sec = trim(line.substr(1, line.size() - 2));
    if (!find_section(sec)) throw ConfigError(fmt::format("{}: unknown section", sec));
    seen.push_back(sec);
  }

  const auto name = file.get_optional<std::string>("experiment.name");
  if (!name) throw ConfigError("experiment.name: required");
  const std::string exp = trim(*name);
  if (std::find(experiment_names().begin(), experiment_names().end(), exp) == experiment_names().end())
    throw ConfigError(fmt::format("experiment.name: unknown experiment \"{}\"", exp));
  for (const auto& sec : required_sections().at(exp))
    if (std::find(seen.begin(), seen.end(), sec) == seen.end())
      throw ConfigError(fmt::format("{}: section required by experiment \"{}\" is missing", sec, exp));

  ExperimentConfig c;
  c.tree_ = default_tree(exp);
  c.experiment_ = exp;
  for (const auto& [sec, body] : file)
    for (const auto& [key, node] : body) c.tree_.put(sec + "." + key, trim(node.data()));
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(fmt::format("{}: cannot open config file", path.string()));
  return parse(is, path.string());
}

void ExperimentConfig::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError(fmt::format("override \"{}\": expected section.key=value", assignment));
  const std::string path = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  const auto dot = path.find('.');
  if (dot == std::string::npos) throw ConfigError(fmt::format("{}: expected section.key", path));
  const Section* s = find_section(path.substr(0, dot));
  if (!s) throw ConfigError(fmt::format("{}: unknown section", path.substr(0, dot)));
  const Field* f = find_field(*s, path.substr(dot + 1));
  if (!f) throw ConfigError(fmt::format("{}: unknown key", path));
  if (path == "experiment.name") throw ConfigError("experiment.name: cannot be overridden");
  check_value(path, f->kind, value);
  tree_.put(path, value);
}

const std::string& ExperimentConfig::experiment() const { return experiment_; }
std::uint64_t ExperimentConfig::seed() const {
  return parse_unsigned("experiment.seed", tree_.get<std::string>("experiment.seed"));
}
std::string ExperimentConfig::output_dir() const { return get_string("experiment.output_dir"); }

bool ExperimentConfig::has(const std::string& path) const { return tree_.get_optional<std::string>(path).has_value(); }

std::string ExperimentConfig::get_string(const std::string& path) const {
  const auto v = tree_.get_optional<std::string>(path);
  if (!v) throw ConfigError(path + ": missing");
  return *v;
}
long ExperimentConfig::get_int(const std::string& path) const { return parse_integer(path, get_string(path)); }
double ExperimentConfig::get_double(const std::string& path) const { return parse_real(path, get_string(path)); }
std::vector<double> ExperimentConfig::get_list(const std::string& path) const {
  return parse_list(path, get_string(path));
}

void ExperimentConfig::validate() const {
  check_tree(tree_);
  const auto& e = experiment_;
  const auto& secs = required_sections().at(e);
  auto uses = [&](const char* s) { return std::find(secs.begin(), secs.end(), s) != secs.end(); };

  if (uses("lattice")) {
    const long d = get_int("lattice.d"), L = get_int("lattice.L");
    require(d >= 1 && d <= 3, "lattice.d", "must be 1, 2 or 3");
    require(L >= 2, "lattice.L", "must be at least 2");
    require(std::pow(static_cast<double>(L), static_cast<double>(d)) <= 1 << 24, "lattice.L", "lattice too large");
    require(get_double("lattice.h") > 0.0, "lattice.h", "must be positive");
  }
  if (uses("gibbs")) {
    require(get_double("gibbs.B") > 0.0, "gibbs.B", "must be positive");
    require(get_double("gibbs.beta") >= 0.0, "gibbs.beta", "must be non-negative");
    const auto betas = get_list("gibbs.betas");
    require(betas.front() >= 0.0, "gibbs.betas", "must be non-negative");
    require(std::is_sorted(betas.begin(), betas.end(), std::less_equal<>()) || betas.size() == 1, "gibbs.betas",
            "must be strictly increasing");
    const long sweeps = get_int("gibbs.sweeps"), burn = get_int("gibbs.burn_in");
    require(sweeps > 0, "gibbs.sweeps", "must be positive");
    require(burn >= 0 && burn < sweeps, "gibbs.burn_in", "must lie in [0, gibbs.sweeps)");
    require(get_int("gibbs.record_every") >= 1, "gibbs.record_every", "must be at least 1");
    for (const char* k : {"gibbs.transfer_moves", "gibbs.swap_moves", "gibbs.condensate_moves"})
      require(get_int(k) >= 0, k, "must be non-negative");
    require(get_int("gibbs.samples") >= 0, "gibbs.samples", "must be non-negative");
    require(get_int("gibbs.thin") >= 1, "gibbs.thin", "must be at least 1");
    require(get_int("gibbs.sweeps_between") >= 1, "gibbs.sweeps_between", "must be at least 1");
    require(get_double("gibbs.edge_weight") > 0.0, "gibbs.edge_weight", "must be positive");
    const long m = get_int("gibbs.m");
    require(m >= 0, "gibbs.m", "must be non-negative");
    if (uses("lattice")) {
      const double n = std::pow(static_cast<double>(get_int("lattice.L")), static_cast<double>(get_int("lattice.d")));
      require(2.0 * m <= n, "gibbs.m", "must be small against the number of sites");
    }
  }
  if (uses("dynamics")) {
    require(get_double("dynamics.T") >= 0.0, "dynamics.T", "must be non-negative");
    require(get_double("dynamics.dt") > 0.0, "dynamics.dt", "must be positive");
    require(get_int("dynamics.snapshot_stride") >= 1, "dynamics.snapshot_stride", "must be at least 1");
  }
  if (uses("continuum")) {
    require(get_double("continuum.s") > 0.5, "continuum.s", "must exceed 1/2");
    const double P = get_double("continuum.period");
    require(P > 0.0, "continuum.period", "must be positive");
    const auto hs = get_list("continuum.hs");
    const long M = get_int("continuum.ref_modes");
    for (std::size_t i = 0; i < hs.size(); ++i) {
      require(hs[i] > 0.0, "continuum.hs", "must be positive");
      if (i > 0) require(hs[i] < hs[i - 1], "continuum.hs", "must be decreasing");
      const double L = P / hs[i];
      require(std::abs(L - std::round(L)) < 1e-9 * L && L >= 4, "continuum.hs",
              "period / h must be an integer of at least 4");
      require(M % std::lround(L) == 0, "continuum.ref_modes", "must be a multiple of every period / h");
    }
    require(get_double("continuum.T") >= 0.0, "continuum.T", "must be non-negative");
    require(get_double("continuum.dt") > 0.0, "continuum.dt", "must be positive");
  }
  if (uses("decay")) {
    const double T = get_double("decay.T"), t1 = get_double("decay.t1"), t2 = get_double("decay.t2");
    require(T > 0.0, "decay.T", "must be positive");
    require(t1 > 0.0 && t1 < t2, "decay.t1", "must satisfy 0 < t1 < t2");
    require(t2 <= T, "decay.t2", "must not exceed decay.T");
    require(get_int("decay.samples") >= 2, "decay.samples", "must be at least 2");
  }
  if (uses("groundstate")) {
    for (double nu : get_list("groundstate.nus")) require(nu > 0.0, "groundstate.nus", "must be positive");
    require(get_double("groundstate.tol") > 0.0, "groundstate.tol", "must be positive");
    require(get_int("groundstate.max_iters") >= 1, "groundstate.max_iters", "must be at least 1");
    require(get_double("groundstate.step") > 0.0, "groundstate.step", "must be positive");
    const bool lo = has("groundstate.threshold_lo"), hi = has("groundstate.threshold_hi");
    require(lo == hi, lo ? "groundstate.threshold_hi" : "groundstate.threshold_lo",
            "threshold_lo and threshold_hi go together");
    if (lo)
      require(get_double("groundstate.threshold_lo") > 0.0 &&
                  get_double("groundstate.threshold_hi") > get_double("groundstate.threshold_lo"),
              "groundstate.threshold_hi", "need 0 < threshold_lo < threshold_hi");
    require(get_double("groundstate.threshold_tol") > 0.0, "groundstate.threshold_tol", "must be positive");
  }
  if (uses("jjt")) {
    const auto modes = get_list("jjt.modes");
    for (std::size_t i = 0; i < modes.size(); ++i) {
      require(modes[i] >= 1 && modes[i] == std::floor(modes[i]), "jjt.modes", "must be positive integers");
      if (i > 0) require(modes[i] > modes[i - 1], "jjt.modes", "must be increasing");
    }
    require(get_double("jjt.B") > 0.0, "jjt.B", "must be positive");
    require(get_double("jjt.C") > 0.0, "jjt.C", "must be positive");
    const long k = get_int("jjt.kappa");
    require(k == 1 || k == -1, "jjt.kappa", "must be +1 or -1");
    require(get_int("jjt.grid") >= 2 * static_cast<long>(modes.back()) + 1, "jjt.grid",
            "must resolve the largest mode count");
    const long steps = get_int("jjt.steps"), burn = get_int("jjt.burn_in");
    require(steps > 0, "jjt.steps", "must be positive");
    require(burn >= 0 && burn < steps, "jjt.burn_in", "must lie in [0, jjt.steps)");
    require(get_int("jjt.thin") >= 1, "jjt.thin", "must be at least 1");
  }
  if (uses("theory")) {
    for (double b : get_list("theory.betas")) require(b >= 0.0, "theory.betas", "must be non-negative");
    require(get_double("theory.B") > 0.0, "theory.B", "must be positive");
  }
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> out;
  const auto& secs = required_sections().at(experiment_);
  for (const auto& s : schema()) {
    const bool used = std::string(s.name) == "experiment" || std::find(secs.begin(), secs.end(), s.name) != secs.end();
    if (!used) continue;
    for (const auto& f : s.fields) {
      const std::string path = std::string(s.name) + "." + f.key;
      if (has(path)) out.emplace_back(path, get_string(path));
    }
  }
  return out;
}

std::string ExperimentConfig::canonical_text() const {
  std::string out, section;
  for (const auto& [path, value] : echo()) {
    const auto dot = path.find('.');
    if (path.substr(0, dot) != section) {
      section = path.substr(0, dot);
      out += (out.empty() ? "[" : "\n[") + section + "]\n";
    }
    out += path.substr(dot + 1) + " = " + value + "\n";
  }
  return out;
}

}  // namespace dnls::cli
