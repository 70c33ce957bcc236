#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "dnls/errors.hpp"
#include "dnls/experiments.hpp"
#include "dnls/expcli.hpp"
#include "dnls/theory.hpp"

using namespace dnls;
using namespace dnls::cli;

namespace {

std::string config_error(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

ExperimentConfig parse(const std::string& text) {
  std::istringstream is(text);
  return ExperimentConfig::parse(is, "test.ini");
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("dnls_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("config errors name the offending field") {
  CHECK(config_error([] { parse("[experiment]\nname = sweep\n[gibbs]\nsweeps = lots\n").validate(); })
            .starts_with("gibbs.sweeps: expected an integer"));
  CHECK(config_error([] { parse("[experiment]\nname = sweep\n[lattice]\nspin = 2\n[gibbs]\n"); })
            .starts_with("lattice.spin: unknown key"));
  CHECK(config_error([] { parse("[experiment]\nname = warp\n"); }).find("unknown experiment") != std::string::npos);
  CHECK(config_error([] { parse("[experiment]\nname = breather\n[lattice]\n[gibbs]\n"); })
            .starts_with("dynamics: section required"));
  CHECK(config_error([] { parse("[nonsense]\n"); }).starts_with("nonsense: unknown section"));
  CHECK(config_error([] { parse("[experiment\n"); }).starts_with("test.ini:"));
  CHECK(config_error([] { parse("[theory]\nB = 1\n"); }).starts_with("experiment.name: required"));
}

TEST_CASE("cross-field checks run in validate") {
  auto c = ExperimentConfig::defaults("decay");
  c.set("decay.t2=1e9");
  CHECK(config_error([&] { c.validate(); }).starts_with("decay.t2:"));
  c.set("decay.T=2e9");
  CHECK_NOTHROW(c.validate());

  auto s = ExperimentConfig::defaults("sweep");
  s.set("gibbs.betas=3,2");
  CHECK(config_error([&] { s.validate(); }).starts_with("gibbs.betas:"));
  s.set("gibbs.betas=0:1:3");
  s.set("gibbs.burn_in=99999999");
  CHECK(config_error([&] { s.validate(); }).starts_with("gibbs.burn_in:"));

  auto g = ExperimentConfig::defaults("groundstate");
  g.set("groundstate.threshold_lo=10");
  CHECK(config_error([&] { g.validate(); }).starts_with("groundstate.threshold_hi:"));

  auto j = ExperimentConfig::defaults("jjt_concentration");
  j.set("jjt.kappa=0");
  CHECK(config_error([&] { j.validate(); }).starts_with("jjt.kappa:"));
}

TEST_CASE("overrides are type-checked immediately") {
  auto c = ExperimentConfig::defaults("sweep");
  CHECK(config_error([&] { c.set("gibbs.sweeps=1.5"); }).starts_with("gibbs.sweeps:"));
  CHECK(config_error([&] { c.set("gibbs.nothing=1"); }).starts_with("gibbs.nothing: unknown key"));
  CHECK(config_error([&] { c.set("no_equals_sign"); }).find("section.key=value") != std::string::npos);
  CHECK(config_error([&] { c.set("experiment.name=decay"); }).starts_with("experiment.name"));
  c.set("gibbs.sweeps=123");
  CHECK(c.get_int("gibbs.sweeps") == 123);
}

TEST_CASE("lists and ranges") {
  auto c = ExperimentConfig::defaults("theory_table");
  c.set("theory.betas=0:1:5");
  const auto r = c.get_list("theory.betas");
  REQUIRE(r.size() == 5);
  CHECK(r[1] == doctest::Approx(0.25));
  CHECK(r.back() == doctest::Approx(1.0));
  c.set("theory.betas= 1, 2.5 ,4");
  CHECK(c.get_list("theory.betas") == std::vector<double>{1.0, 2.5, 4.0});
  CHECK(config_error([&] { c.set("theory.betas=1:2"); }).starts_with("theory.betas: range"));
  CHECK(config_error([&] { c.set("theory.betas=1,x"); }).starts_with("theory.betas:"));
}

TEST_CASE("every experiment has valid defaults") {
  for (const auto& name : experiment_names()) {
    CAPTURE(name);
    const auto c = ExperimentConfig::defaults(name);
    CHECK_NOTHROW(c.validate());
    CHECK(c.experiment() == name);
    // canonical text parses back to the same configuration
    const auto again = parse(c.canonical_text());
    CHECK(again.canonical_text() == c.canonical_text());
  }
}

TEST_CASE("csv quoting round-trips") {
  std::ostringstream os;
  CsvWriter w(os, {"a", "b,c", "d"});
  w.row({"plain", "with \"quotes\"", "two\r\nlines"});
  w.row({"", "1e-300", ","});
  CHECK(os.str().starts_with("a,\"b,c\",d\r\n"));
  std::istringstream is(os.str());
  const auto t = read_csv(is);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.header[1] == "b,c");
  CHECK(t.rows[0][1] == "with \"quotes\"");
  CHECK(t.rows[0][2] == "two\r\nlines");
  CHECK(t.rows[1][2] == ",");
  CHECK(t.column("d") == 2);
  CHECK(t.column("zz") == -1);
  const auto b = t.numeric("b,c");
  CHECK(std::isnan(b[0]));
  CHECK(b[1] == 1e-300);
  CHECK_THROWS_AS(w.row({"too", "few"}), std::logic_error);
}

TEST_CASE("cells print shortest round-trip decimals") {
  for (double x : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-17}) CHECK(std::stod(cell(x)) == x);
  CHECK(cell(std::numeric_limits<double>::quiet_NaN()).empty());
  CHECK(cell(42L) == "42");
}

TEST_CASE("git blob ids") {
  CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("svg charts") {
  Table t;
  t.header = {"x", "y<1>", "z"};
  for (int i = 0; i < 20000; ++i) t.rows.push_back({cell(i * 0.01), cell(std::sin(i * 0.01)), i % 3 ? cell(1.0 * i) : ""});
  PlotSpec spec{"A & B", "x", {"y<1>", "z"}, "x", "value", false, false, false};
  const auto svg = render_svg(t, spec);
  CHECK(svg.size() < 2u * 1024 * 1024);
  CHECK(svg.starts_with("<?xml") );
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("A &amp; B") != std::string::npos);
  CHECK(svg.find("y&lt;1&gt;") != std::string::npos);
  CHECK(svg.find("A & B") == std::string::npos);

  spec.y = {"missing"};
  CHECK_THROWS_AS(render_svg(t, spec), ConfigError);

  Table empty;
  empty.header = {"x", "y"};
  CHECK(render_svg(empty, {"", "x", {"y"}, "", "", true, true, true}).find("</svg>") != std::string::npos);
}

TEST_CASE("theory run is deterministic and matches the closed forms") {
  auto c = ExperimentConfig::defaults("theory_table");
  c.set("theory.betas=0:6:13");
  c.validate();
  const auto d1 = scratch("theory1"), d2 = scratch("theory2");
  RunContext ctx;
  ctx.quiet = true;
  ctx.out_dir = d1;
  const auto out = run(c, ctx);
  ctx.out_dir = d2;
  run(c, ctx);
  CHECK(out.files.back().filename() == "manifest.json");
  for (const char* f : {"theory_table.csv", "theory_F.svg", "theory_a.svg"})
    CHECK(slurp(d1 / f) == slurp(d2 / f));

  std::ifstream is(d1 / "theory_table.csv");
  const auto t = read_csv(is);
  for (const char* col : {"beta", "B", "n", "L", "h", "seed"}) CHECK(t.column(col) >= 0);
  const auto betas = t.numeric("beta"), F = t.numeric("F"), a = t.numeric("a");
  REQUIRE(betas.size() == 13);
  for (std::size_t i = 0; i < betas.size(); ++i) {
    CHECK(F[i] == doctest::Approx(theory::free_energy(betas[i], 1.0)).epsilon(1e-14));
    if (betas[i] > theory::theta_c())
      CHECK(a[i] == doctest::Approx(theory::condensate_fraction(betas[i], 1.0).a).epsilon(1e-14));
    else
      CHECK(std::isnan(a[i]));
  }
  const auto manifest = slurp(d1 / "manifest.json");
  CHECK(manifest.find(git_blob_sha1(slurp(d1 / "theory_table.csv"))) != std::string::npos);
  CHECK(manifest.find(git_blob_sha1(c.canonical_text())) != std::string::npos);
}

TEST_CASE("small sweep locates the condensation jump") {
  auto c = ExperimentConfig::defaults("sweep");
  c.set("lattice.L=6");
  c.set("gibbs.betas=1:4.5:15");
  c.set("gibbs.sweeps=3000");
  c.set("gibbs.burn_in=500");
  c.validate();
  RunContext ctx;
  ctx.quiet = true;
  ctx.threads = 4;
  ctx.out_dir = scratch("sweep");
  run(c, ctx);
  const auto manifest = slurp(ctx.out_dir / "manifest.json");
  CHECK(manifest.find("\"jump_beta\"") != std::string::npos);

  SweepOptions o;
  o.betas = c.get_list("gibbs.betas");
  o.lattice = build_torus(3, 6, 1.0);
  o.sampler.sweeps = 3000;
  o.sampler.burn_in = 500;
  o.threads = 4;
  const auto res = sweep_beta(o, c.seed());
  REQUIRE(res.jump_beta.has_value());
  CHECK(*res.jump_beta == doctest::Approx(theory::theta_c()).epsilon(0.3 / theory::theta_c()));
}
