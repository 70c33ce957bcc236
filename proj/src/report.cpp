#include <algorithm>
#include <climits>
#include <cmath>
#include <istream>
#include <limits>
#include <set>
#include <ostream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "dnls/errors.hpp"
#include "dnls/expcli.hpp"

namespace dnls::cli {

// ---- CSV ------------------------------------------------------------------

CsvWriter::CsvWriter(std::ostream& os, std::vector<std::string> header) : os_(os), width_(header.size()) {
  line(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_)
    throw std::logic_error(fmt::format("csv row has {} fields, header has {}", fields.size(), width_));
  line(fields);
}

void CsvWriter::line(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os_ << ',';
    const auto& f = fields[i];
    // a lone empty field would otherwise be a blank line
    const bool lone_empty = fields.size() == 1 && f.empty();
    if (!lone_empty && f.find_first_of(",\"\r\n") == std::string::npos) {
      os_ << f;
      continue;
    }
    os_ << '"';
    for (char c : f) {
      if (c == '"') os_ << '"';
      os_ << c;
    }
    os_ << '"';
  }
  os_ << "\r\n";
}

std::string cell(double x) { return std::isnan(x) ? std::string() : fmt::format("{}", x); }
std::string cell(long x) { return fmt::format("{}", x); }

int Table::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

std::vector<double> Table::numeric(const std::string& name) const {
  const int c = column(name);
  if (c < 0) throw ConfigError(fmt::format("column \"{}\" not found", name));
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    const auto& s = static_cast<std::size_t>(c) < r.size() ? r[static_cast<std::size_t>(c)] : std::string();
    char* end = nullptr;
    const double v = s.empty() ? std::numeric_limits<double>::quiet_NaN() : std::strtod(s.c_str(), &end);
    out.push_back(s.empty() || end != s.c_str() + s.size() ? std::numeric_limits<double>::quiet_NaN() : v);
  }
  return out;
}

Table read_csv(std::istream& is) {
  Table t;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, any = false, had_quote = false;
  auto end_record = [&] {
    record.push_back(field);
    field.clear();
    if (t.header.empty())
      t.header = record;
    else if (had_quote || !(record.size() == 1 && record[0].empty()))
      t.rows.push_back(record);
    record.clear();
    any = had_quote = false;
  };
  for (int ch; (ch = is.get()) != EOF;) {
    const char c = static_cast<char>(ch);
    any = true;
    if (quoted) {
      if (c == '"') {
        if (is.peek() == '"') {
          field += '"';
          is.get();
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = had_quote = true;
    } else if (c == ',') {
      record.push_back(field);
      field.clear();
    } else if (c == '\r') {
      if (is.peek() == '\n') is.get();
      end_record();
    } else if (c == '\n') {
      end_record();
    } else {
      field += c;
    }
  }
  if (quoted) throw ConfigError("csv: unterminated quoted field");
  if (any || !record.empty()) end_record();
  return t;
}

// ---- SVG ------------------------------------------------------------------

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// round step from {1, 2, 5} x 10^k giving about `target` intervals
double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) return m * mag;
  return 10.0 * mag;
}

const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

}  // namespace

std::string render_svg(const Table& table, const PlotSpec& spec) {
  if (spec.y.empty()) throw ConfigError("plot: no y columns given");
  if (table.column(spec.x) < 0) throw ConfigError(fmt::format("plot: column \"{}\" not found", spec.x));
  for (const auto& y : spec.y)
    if (table.column(y) < 0) throw ConfigError(fmt::format("plot: column \"{}\" not found", y));

  auto tx = [&](double v) { return spec.logx ? (v > 0 ? std::log10(v) : NAN) : v; };
  auto ty = [&](double v) { return spec.logy ? (v > 0 ? std::log10(v) : NAN) : v; };

  const auto xs = table.numeric(spec.x);
  std::vector<std::vector<std::pair<double, double>>> series;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& name : spec.y) {
    const auto ys = table.numeric(name);
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double x = tx(xs[i]), y = ty(ys[i]);
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      pts.emplace_back(x, y);
      x0 = std::min(x0, x), x1 = std::max(x1, x);
      y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
    series.push_back(std::move(pts));
  }
  if (!(x0 <= x1)) x0 = 0, x1 = 1;
  if (!(y0 <= y1)) y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12 * std::max(1.0, std::abs(x0))) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12 * std::max(1.0, std::abs(y0))) y0 -= 0.5, y1 += 0.5;
  const double xstep = nice_step(x1 - x0, 6), ystep = nice_step(y1 - y0, 5);
  x0 = std::floor(x0 / xstep) * xstep, x1 = std::ceil(x1 / xstep) * xstep;
  y0 = std::floor(y0 / ystep) * ystep, y1 = std::ceil(y1 / ystep) * ystep;

  constexpr double W = 720, H = 480, left = 80, right = 160, top = 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (y1 - y) / (y1 - y0) * ph; };
  auto tick_label = [](double v, bool log) {
    if (std::abs(v) < 1e-12) v = 0.0;
    return log ? fmt::format("1e{:g}", v) : fmt::format("{:g}", v);
  };

  std::string s;
  s += fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      W, H);
  s += fmt::format("<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n", left + pw / 2,
                   xml_escape(spec.title));
  s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", left, top,
                   pw, ph);
  for (double v = x0; v <= x1 + 1e-9 * xstep; v += xstep) {
    const double x = px(v);
    s += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" stroke=\"#ddd\"/>\n", x, top, top + ph);
    s += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", x, top + ph + 16,
                     tick_label(v, spec.logx));
  }
  for (double v = y0; v <= y1 + 1e-9 * ystep; v += ystep) {
    const double y = py(v);
    s += fmt::format("<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"#ddd\"/>\n", left, y,
                     left + pw);
    s += fmt::format("<text x=\"{}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n", left - 6, y + 4,
                     tick_label(v, spec.logy));
  }
  s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", left + pw / 2, H - 18,
                   xml_escape(spec.xlabel.empty() ? spec.x : spec.xlabel));
  s += fmt::format("<text x=\"20\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {0})\">{1}</text>\n",
                   top + ph / 2, xml_escape(spec.ylabel));

  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = palette[k % std::size(palette)];
    const auto& pts = series[k];
    // points are snapped to half pixels and repeats dropped, which keeps large tables small
    auto snap = [](double v) { return std::lround(2.0 * v); };
    if (!spec.scatter && pts.size() > 1) {
      s += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\" points=\"", color);
      std::pair<long, long> last{LONG_MIN, LONG_MIN};
      for (const auto& [x, y] : pts) {
        const std::pair<long, long> q{snap(px(x)), snap(py(y))};
        if (q == last) continue;
        last = q;
        s += fmt::format("{},{} ", 0.5 * q.first, 0.5 * q.second);
      }
      s += "\"/>\n";
    }
    if (spec.scatter || pts.size() <= 200) {
      std::set<std::pair<long, long>> drawn;
      for (const auto& [x, y] : pts) {
        const std::pair<long, long> q{snap(px(x)), snap(py(y))};
        if (!drawn.insert(q).second) continue;
        s += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\"/>\n", 0.5 * q.first, 0.5 * q.second,
                         spec.scatter ? 3 : 2, color);
      }
    }
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    s += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"/>\n",
                     left + pw + 12, ly, left + pw + 32, color);
    s += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", left + pw + 38, ly + 4, xml_escape(spec.y[k]));
  }
  s += "</svg>\n";
  return s;
}

// ---- hashing ----------------------------------------------------------------

std::string git_blob_sha1(const std::string& content) {
  const std::string head = "blob " + std::to_string(content.size()) + '\0';
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("sha1: context allocation failed");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) && EVP_DigestUpdate(ctx, head.data(), head.size()) &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) && EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("sha1: digest failed");
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

}  // namespace dnls::cli
