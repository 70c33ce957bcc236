#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

namespace dnls::cli {

// ---- configuration --------------------------------------------------------

/// Validated experiment configuration.
///
/// The file is INI: `key = value` lines under `[section]` headers. Every key is
/// checked against a fixed schema before anything runs; errors carry the field
/// path, e.g. `gibbs.sweeps: expected an integer, got "lots"`.
///
/// Lists are comma separated (`hs = 0.03125, 0.015625`) or a range
/// `start:stop:count` with evenly spaced points.
class ExperimentConfig {
 public:
  static ExperimentConfig parse(std::istream& is, const std::string& origin = "<config>");
  static ExperimentConfig load(const std::filesystem::path& path);
  /// Defaults for one experiment, as used by the direct subcommands.
  static ExperimentConfig defaults(const std::string& experiment);

  /// `section.key=value` override, type-checked; call validate() once all are applied.
  void set(const std::string& assignment);
  void validate() const;

  const std::string& experiment() const;
  std::uint64_t seed() const;
  std::string output_dir() const;

  bool has(const std::string& path) const;
  std::string get_string(const std::string& path) const;
  long get_int(const std::string& path) const;
  double get_double(const std::string& path) const;
  std::vector<double> get_list(const std::string& path) const;

  /// Resolved values (defaults filled in) in section order, for the manifest echo.
  std::vector<std::pair<std::string, std::string>> echo() const;
  /// Canonical INI text of echo(); hashed into the manifest.
  std::string canonical_text() const;

  const boost::property_tree::ptree& tree() const { return tree_; }

 private:
  boost::property_tree::ptree tree_;
  std::string experiment_;
};

const std::vector<std::string>& experiment_names();

// ---- CSV --------------------------------------------------------------------

/// RFC 4180 writer: CRLF line ends, fields quoted when they contain , " CR or LF.
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::vector<std::string> header);
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& os_;
  std::size_t width_;
  void line(const std::vector<std::string>& fields);
};

/// Shortest round-trip decimal; empty for NaN.
std::string cell(double x);
std::string cell(long x);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
  std::vector<double> numeric(const std::string& name) const;  // NaN for blanks
};

Table read_csv(std::istream& is);

// ---- plots ------------------------------------------------------------------

struct PlotSpec {
  std::string title;
  std::string x;
  std::vector<std::string> y;
  std::string xlabel;
  std::string ylabel;
  bool scatter = false;
  bool logx = false;   // non-positive values are dropped on log axes
  bool logy = false;
};

/// Standalone SVG chart of the named columns. Missing columns raise ConfigError;
/// a table without rows gives empty axes.
std::string render_svg(const Table& table, const PlotSpec& spec);

// ---- manifest ---------------------------------------------------------------

/// SHA-1 of "blob <size>\0<content>", as git computes object ids.
std::string git_blob_sha1(const std::string& content);

// ---- running ----------------------------------------------------------------

struct RunContext {
  std::filesystem::path out_dir;
  int threads = 1;
  bool quiet = false;
  std::function<void(const std::string&)> log;  // progress lines; unused when quiet
};

struct RunOutcome {
  std::vector<std::filesystem::path> files;  // everything written, manifest last
  std::vector<std::string> warnings;
  bool diagnostics_failed = false;           // mixing or ESS below threshold
};

/// Runs the configured experiment and writes its CSV/JSONL/SVG files plus
/// manifest.json into ctx.out_dir. Diagnostic failures still write all files and
/// are reported through the outcome; configuration and numerical failures throw.
RunOutcome run(const ExperimentConfig& cfg, const RunContext& ctx);

}  // namespace dnls::cli
