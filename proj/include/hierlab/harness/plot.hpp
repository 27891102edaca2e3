#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hierlab/harness/run.hpp"

namespace hierlab::harness {

/// A CSV that does not follow the run output format.
class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::vector<EvalRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot read " + path);
  std::vector<EvalRecord> rows;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::string where = path + ":" + std::to_string(lineno) + ": ";
    if (!header) {
      if (line != kCsvHeader) throw CsvError(where + "unexpected header '" + line + "'");
      header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) throw CsvError(where + "expected 5 fields, got " + std::to_string(cells.size()));
    EvalRecord r;
    try {
      std::size_t used = 0;
      auto full = [&](const std::string& s) {
        if (used != s.size()) throw std::invalid_argument("trailing characters");
      };
      r.seed = std::stoull(cells[0], &used);
      full(cells[0]);
      r.env_step = std::stol(cells[1], &used);
      full(cells[1]);
      r.success_rate = std::stod(cells[2], &used);
      full(cells[2]);
      r.mean_return = std::stod(cells[3], &used);
      full(cells[3]);
      r.wall_clock_seconds = std::stod(cells[4], &used);
      full(cells[4]);
    } catch (const std::exception&) {
      throw CsvError(where + "malformed row '" + line + "'");
    }
    if (!(r.success_rate >= 0 && r.success_rate <= 1)) throw CsvError(where + "success_rate outside [0, 1]");
    rows.push_back(r);
  }
  if (!header) throw CsvError(path + ": missing header");
  return rows;
}

struct CurvePoint {
  long env_step = 0;
  double mean = 0.0;
  double stderr_ = 0.0;  // sample std / sqrt(n); zero for a single seed
  int n = 0;
};

/// Mean success over seeds at every evaluated step.
inline std::vector<CurvePoint> curve_stats(const std::vector<EvalRecord>& rows) {
  std::map<long, std::vector<double>> by_step;
  for (const auto& r : rows) by_step[r.env_step].push_back(r.success_rate);
  std::vector<CurvePoint> out;
  for (const auto& [step, xs] : by_step) {
    CurvePoint p;
    p.env_step = step;
    p.n = static_cast<int>(xs.size());
    for (double x : xs) p.mean += x;
    p.mean /= p.n;
    if (p.n > 1) {
      double ss = 0;
      for (double x : xs) ss += (x - p.mean) * (x - p.mean);
      p.stderr_ = std::sqrt(ss / (p.n - 1)) / std::sqrt(static_cast<double>(p.n));
    }
    out.push_back(p);
  }
  return out;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

/// Writes a standalone SVG: one line per CSV with a standard-error band; a
/// series with a single point is drawn as a marker.
inline void emit_curves(const std::vector<std::string>& csv_paths, const std::string& out_path) {
  if (csv_paths.empty()) throw std::invalid_argument("emit_curves: no input CSVs");
  std::vector<std::vector<CurvePoint>> series;
  long max_step = 1;
  for (const auto& p : csv_paths) {
    series.push_back(curve_stats(read_records(p)));
    for (const auto& c : series.back()) max_step = std::max(max_step, c.env_step);
  }
  constexpr double W = 640, H = 400, L = 60, R = 180, T = 20, B = 50;
  const double pw = W - L - R, ph = H - T - B;
  auto X = [&](long s) { return L + pw * static_cast<double>(s) / static_cast<double>(max_step); };
  auto Y = [&](double v) { return T + ph * (1.0 - std::clamp(v, 0.0, 1.0)); };
  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' '
     << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<g stroke=\"black\" fill=\"none\"><line x1=\"" << L << "\" y1=\"" << T + ph << "\" x2=\"" << L + pw << "\" y2=\""
     << T + ph << "\"/><line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << T + ph << "\"/></g>\n";
  os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0;
    os << "<text x=\"" << L - 6 << "\" y=\"" << Y(v) + 4 << "\" text-anchor=\"end\">" << v << "</text>\n";
    const long s = max_step * i / 4;
    os << "<text x=\"" << X(s) << "\" y=\"" << T + ph + 16 << "\" text-anchor=\"middle\">" << s << "</text>\n";
  }
  os << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">env_step</text>\n";
  os << "<text x=\"14\" y=\"" << T + ph / 2 << "\" transform=\"rotate(-90 14 " << T + ph / 2
     << ")\" text-anchor=\"middle\">success rate</text>\n</g>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& pts = series[k];
    const char* col = colours[k % std::size(colours)];
    os << "<g class=\"series\" data-source=\"" << xml_escape(std::filesystem::path(csv_paths[k]).filename().string()) << "\">\n";
    if (pts.size() == 1) {
      os << "<circle cx=\"" << X(pts[0].env_step) << "\" cy=\"" << Y(pts[0].mean) << "\" r=\"3\" fill=\"" << col << "\"/>\n";
    } else if (!pts.empty()) {
      os << "<polygon class=\"band\" fill=\"" << col << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (const auto& p : pts) os << X(p.env_step) << ',' << Y(p.mean + p.stderr_) << ' ';
      for (auto it = pts.rbegin(); it != pts.rend(); ++it) os << X(it->env_step) << ',' << Y(it->mean - it->stderr_) << ' ';
      os << "\"/>\n<polyline class=\"mean\" fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& p : pts) os << X(p.env_step) << ',' << Y(p.mean) << ' ';
      os << "\"/>\n";
    }
    const double ly = T + 14.0 * static_cast<double>(k + 1);
    os << "<text x=\"" << L + pw + 10 << "\" y=\"" << ly << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << col
       << "\">" << xml_escape(std::filesystem::path(csv_paths[k]).stem().string()) << "</text>\n</g>\n";
  }
  os << "</svg>\n";
  write_text(out_path, os.str());
}

}  // namespace hierlab::harness
