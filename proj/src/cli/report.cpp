#include "pifo/cli/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "pifo/bytes.hpp"
#include "pifo/errors.hpp"
#include "pifo/rl/config.hpp"

namespace pifo::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kLeft = 70.0;
constexpr double kRight = 780.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 450.0;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string px(double v) { return fmt("%.3f", v); }

std::string escape(const std::string& s) {
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

// Labels in order of first appearance.
std::vector<std::string> labels_of(const std::vector<RunSeries>& runs) {
  std::vector<std::string> out;
  for (const auto& r : runs) {
    if (std::find(out.begin(), out.end(), r.label) == out.end()) out.push_back(r.label);
  }
  return out;
}

const char* color_for(const std::vector<std::string>& labels, const std::string& label) {
  const auto i = static_cast<std::size_t>(std::find(labels.begin(), labels.end(), label) - labels.begin());
  return kPalette[i % std::size(kPalette)];
}

struct MeanBand {
  std::vector<double> iterations;
  std::vector<double> mean;
  std::vector<double> half_width;
};

MeanBand mean_band(const std::vector<const RunSeries*>& group) {
  std::set<std::size_t> shared;
  for (const auto& row : group.front()->rows) shared.insert(row.iteration);
  for (const auto* run : group) {
    std::set<std::size_t> its;
    for (const auto& row : run->rows) its.insert(row.iteration);
    std::set<std::size_t> kept;
    std::set_intersection(shared.begin(), shared.end(), its.begin(), its.end(), std::inserter(kept, kept.begin()));
    shared = std::move(kept);
  }
  MeanBand out;
  const double n = static_cast<double>(group.size());
  for (std::size_t it : shared) {
    std::vector<double> xs;
    for (const auto* run : group) {
      for (const auto& row : run->rows) {
        if (row.iteration == it) xs.push_back(row.normalized_score);
      }
    }
    double m = 0.0;
    for (double x : xs) m += x;
    m /= n;
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    out.iterations.push_back(static_cast<double>(it));
    out.mean.push_back(m);
    out.half_width.push_back(std::sqrt(ss / (n - 1.0)) / std::sqrt(n));
  }
  return out;
}

double nice_step(double span) {
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

struct Frame2d {
  double xmin, xmax, ymin, ymax;
  double x(double v) const { return kLeft + (v - xmin) / (xmax - xmin) * (kRight - kLeft); }
  double y(double v) const { return kBottom - (v - ymin) / (ymax - ymin) * (kBottom - kTop); }
};

void widen(double& lo, double& hi, double v) {
  if (!std::isfinite(v)) return;
  lo = std::min(lo, v);
  hi = std::max(hi, v);
}

std::string svg_open(const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\" width=\"800\" height=\"500\" "
         "font-family=\"sans-serif\" font-size=\"12\">\n<title>" +
         escape(title) + "</title>\n<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"#ffffff\"/>\n";
}

std::string y_axis(const Frame2d& f, const std::string& caption) {
  std::string s;
  const double step = nice_step(f.ymax - f.ymin);
  for (double v = std::ceil(f.ymin / step - 1e-9) * step; v <= f.ymax + 1e-9; v += step) {
    const std::string yy = px(f.y(v));
    s += "<line x1=\"" + px(kLeft - 4) + "\" y1=\"" + yy + "\" x2=\"" + px(kRight) + "\" y2=\"" + yy +
         "\" stroke=\"#e0e0e0\"/>\n";
    s += "<text x=\"" + px(kLeft - 8) + "\" y=\"" + yy + "\" text-anchor=\"end\" dominant-baseline=\"middle\">" +
         fmt("%g", std::abs(v) < 1e-12 ? 0.0 : v) + "</text>\n";
  }
  s += "<line x1=\"" + px(kLeft) + "\" y1=\"" + px(kTop) + "\" x2=\"" + px(kLeft) + "\" y2=\"" + px(kBottom) +
       "\" stroke=\"#000000\"/>\n";
  s += "<text x=\"18\" y=\"" + px((kTop + kBottom) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
       px((kTop + kBottom) / 2) + ")\">" + escape(caption) + "</text>\n";
  return s;
}

std::string legend(const std::vector<std::string>& labels) {
  std::string s;
  double y = kTop + 6;
  for (const auto& label : labels) {
    s += "<rect x=\"" + px(kRight - 150) + "\" y=\"" + px(y - 5) + "\" width=\"14\" height=\"10\" fill=\"" +
         color_for(labels, label) + "\"/>\n";
    s += "<text x=\"" + px(kRight - 130) + "\" y=\"" + px(y) + "\" dominant-baseline=\"middle\">" + escape(label) +
         "</text>\n";
    y += 16;
  }
  return s;
}

std::string points(const std::vector<double>& xs, const std::vector<double>& ys, const Frame2d& f) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ' ';
    s += px(f.x(xs[i])) + "," + px(f.y(ys[i]));
  }
  return s;
}

double final_score(const RunSeries& run) { return run.rows.empty() ? 0.0 : run.rows.back().normalized_score; }

}  // namespace

RunSeries load_run(const fs::path& dir) {
  RunSeries run;
  run.dir = dir.string();
  const fs::path metrics = dir / "metrics.csv";
  if (!fs::exists(metrics)) throw UsageError("report: " + metrics.string() + " does not exist");
  run.rows = load_metrics(metrics);
  run.label = dir.filename().string();
  if (run.label.empty()) run.label = dir.parent_path().filename().string();
  if (fs::exists(dir / "config.txt")) {
    const rl::TrainConfig cfg = rl::load_config(dir / "config.txt");
    run.label = cfg.label.empty() ? cfg.env + ":" + cfg.mode : cfg.label;
  }
  return run;
}

std::optional<std::size_t> first_iteration_reaching(const std::vector<MetricsRow>& rows, double threshold) {
  for (const auto& r : rows) {
    if (r.normalized_score >= threshold) return r.iteration;
  }
  return std::nullopt;
}

std::string render_curves_svg(const std::vector<RunSeries>& runs) {
  const auto labels = labels_of(runs);
  std::map<std::string, MeanBand> bands;
  double xmax = 1.0;
  double ylo = 0.0;
  double yhi = 1.0;
  for (const auto& label : labels) {
    std::vector<const RunSeries*> group;
    for (const auto& r : runs) {
      if (r.label == label) group.push_back(&r);
    }
    if (group.size() >= 2) {
      MeanBand b = mean_band(group);
      for (std::size_t i = 0; i < b.mean.size(); ++i) {
        widen(ylo, yhi, b.mean[i] - b.half_width[i]);
        widen(ylo, yhi, b.mean[i] + b.half_width[i]);
      }
      bands.emplace(label, std::move(b));
    }
  }
  for (const auto& r : runs) {
    for (const auto& row : r.rows) {
      xmax = std::max(xmax, static_cast<double>(row.iteration));
      widen(ylo, yhi, row.normalized_score);
    }
  }
  const Frame2d f{0.0, xmax, std::floor(ylo * 10.0) / 10.0, std::ceil(yhi * 10.0) / 10.0};

  std::string s = svg_open("normalized score vs. iteration");
  s += "<g id=\"plot\" data-xmin=\"" + fmt("%.17g", f.xmin) + "\" data-xmax=\"" + fmt("%.17g", f.xmax) +
       "\" data-ymin=\"" + fmt("%.17g", f.ymin) + "\" data-ymax=\"" + fmt("%.17g", f.ymax) + "\" data-left=\"" +
       px(kLeft) + "\" data-right=\"" + px(kRight) + "\" data-top=\"" + px(kTop) + "\" data-bottom=\"" + px(kBottom) +
       "\">\n";
  s += y_axis(f, "normalized score");
  s += "<line x1=\"" + px(kLeft) + "\" y1=\"" + px(kBottom) + "\" x2=\"" + px(kRight) + "\" y2=\"" + px(kBottom) +
       "\" stroke=\"#000000\"/>\n";
  const double xstep = std::max(1.0, nice_step(f.xmax - f.xmin));
  for (double v = 0.0; v <= f.xmax + 1e-9; v += xstep) {
    s += "<text x=\"" + px(f.x(v)) + "\" y=\"" + px(kBottom + 16) + "\" text-anchor=\"middle\">" + fmt("%g", v) +
         "</text>\n";
  }
  s += "<text x=\"" + px((kLeft + kRight) / 2) + "\" y=\"" + px(kBottom + 38) + "\" text-anchor=\"middle\">iteration</text>\n";
  for (double ref : {0.0, 1.0}) {
    s += "<line class=\"reference\" x1=\"" + px(kLeft) + "\" y1=\"" + px(f.y(ref)) + "\" x2=\"" + px(kRight) +
         "\" y2=\"" + px(f.y(ref)) + "\" stroke=\"#888888\" stroke-dasharray=\"4 4\"/>\n";
  }
  for (const auto& label : labels) {
    const auto it = bands.find(label);
    if (it == bands.end()) continue;
    const MeanBand& b = it->second;
    std::vector<double> upper(b.mean.size()), lower(b.mean.size());
    for (std::size_t i = 0; i < b.mean.size(); ++i) {
      upper[i] = b.mean[i] + b.half_width[i];
      lower[i] = b.mean[i] - b.half_width[i];
    }
    std::vector<double> rx(b.iterations.rbegin(), b.iterations.rend());
    std::vector<double> ry(lower.rbegin(), lower.rend());
    s += "<polygon class=\"band\" data-label=\"" + escape(label) + "\" fill=\"" + color_for(labels, label) +
         "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"" + points(b.iterations, upper, f) + " " + points(rx, ry, f) +
         "\"/>\n";
  }
  for (const auto& r : runs) {
    std::vector<double> xs, ys;
    for (const auto& row : r.rows) {
      xs.push_back(static_cast<double>(row.iteration));
      ys.push_back(row.normalized_score);
    }
    const bool grouped = bands.count(r.label) > 0;
    s += "<polyline class=\"run\" data-label=\"" + escape(r.label) + "\" data-run=\"" + escape(r.dir) +
         "\" fill=\"none\" stroke=\"" + color_for(labels, r.label) + "\" stroke-width=\"1\"" +
         (grouped ? " stroke-opacity=\"0.35\"" : "") + " points=\"" + points(xs, ys, f) + "\"/>\n";
  }
  for (const auto& label : labels) {
    const auto it = bands.find(label);
    if (it == bands.end()) continue;
    s += "<polyline class=\"mean\" data-label=\"" + escape(label) + "\" fill=\"none\" stroke=\"" +
         color_for(labels, label) + "\" stroke-width=\"2.5\" points=\"" + points(it->second.iterations, it->second.mean, f) +
         "\"/>\n";
  }
  s += "</g>\n" + legend(labels) + "</svg>\n";
  return s;
}

std::string render_bars_svg(const std::vector<RunSeries>& runs) {
  const auto labels = labels_of(runs);
  std::vector<double> means, errs;
  double ylo = 0.0;
  double yhi = 1.0;
  for (const auto& label : labels) {
    std::vector<double> xs;
    for (const auto& r : runs) {
      if (r.label == label) xs.push_back(final_score(r));
    }
    const double n = static_cast<double>(xs.size());
    double m = 0.0;
    for (double x : xs) m += x;
    m /= n;
    double se = 0.0;
    if (xs.size() >= 2) {
      double ss = 0.0;
      for (double x : xs) ss += (x - m) * (x - m);
      se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    means.push_back(m);
    errs.push_back(se);
    widen(ylo, yhi, m - se);
    widen(ylo, yhi, m + se);
  }
  const Frame2d f{0.0, 1.0, std::floor(ylo * 10.0) / 10.0, std::ceil(yhi * 10.0) / 10.0};

  std::string s = svg_open("final normalized score per label");
  s += "<g id=\"plot\" data-ymin=\"" + fmt("%.17g", f.ymin) + "\" data-ymax=\"" + fmt("%.17g", f.ymax) + "\">\n";
  s += y_axis(f, "final normalized score");
  s += "<line x1=\"" + px(kLeft) + "\" y1=\"" + px(f.y(0.0)) + "\" x2=\"" + px(kRight) + "\" y2=\"" + px(f.y(0.0)) +
       "\" stroke=\"#000000\"/>\n";
  const double slot = (kRight - kLeft) / static_cast<double>(std::max<std::size_t>(1, labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double cx = kLeft + slot * (static_cast<double>(i) + 0.5);
    const double w = std::min(80.0, slot * 0.6);
    const double top = f.y(std::max(means[i], 0.0));
    const double bottom = f.y(std::min(means[i], 0.0));
    s += "<rect class=\"bar\" data-label=\"" + escape(labels[i]) + "\" data-mean=\"" + fmt("%.17g", means[i]) +
         "\" data-stderr=\"" + fmt("%.17g", errs[i]) + "\" x=\"" + px(cx - w / 2) + "\" y=\"" + px(top) +
         "\" width=\"" + px(w) + "\" height=\"" + px(bottom - top) + "\" fill=\"" + color_for(labels, labels[i]) +
         "\"/>\n";
    const std::string hi = px(f.y(means[i] + errs[i]));
    const std::string lo = px(f.y(means[i] - errs[i]));
    s += "<line class=\"error\" x1=\"" + px(cx) + "\" y1=\"" + lo + "\" x2=\"" + px(cx) + "\" y2=\"" + hi +
         "\" stroke=\"#000000\"/>\n";
    for (const auto& yy : {lo, hi}) {
      s += "<line x1=\"" + px(cx - 8) + "\" y1=\"" + yy + "\" x2=\"" + px(cx + 8) + "\" y2=\"" + yy +
           "\" stroke=\"#000000\"/>\n";
    }
    s += "<text x=\"" + px(cx) + "\" y=\"" + px(kBottom + 20) + "\" text-anchor=\"middle\">" + escape(labels[i]) +
         "</text>\n";
  }
  s += "</g>\n</svg>\n";
  return s;
}

std::string render_summary_csv(const std::vector<RunSeries>& runs) {
  std::string s = "label,run_dir,final_iteration,final_normalized_score,first_iteration_at_0.8\n";
  for (const auto& r : runs) {
    const auto first = first_iteration_reaching(r.rows, 0.8);
    s += r.label + "," + r.dir + "," + std::to_string(r.rows.empty() ? 0 : r.rows.back().iteration) + "," +
         fmt("%.17g", final_score(r)) + "," + (first ? std::to_string(*first) : std::string()) + "\n";
  }
  return s;
}

void emit_report(const std::vector<fs::path>& run_dirs, const fs::path& out_dir) {
  if (run_dirs.empty()) throw UsageError("report: no run directories given");
  std::vector<RunSeries> runs;
  for (const auto& d : run_dirs) runs.push_back(load_run(d));
  fs::create_directories(out_dir);
  write_file(out_dir / "curves.svg", render_curves_svg(runs));
  write_file(out_dir / "bars.svg", render_bars_svg(runs));
  write_file(out_dir / "summary.csv", render_summary_csv(runs));
}

}  // namespace pifo::cli
