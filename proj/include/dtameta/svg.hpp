#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtameta/diagnostics.hpp"

namespace dtameta {

namespace svg {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
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

// Accumulates SVG elements with fixed numeric formatting so output bytes
// are identical across runs.
class Builder {
 public:
  Builder(int width, int height) : width_(width), height_(height) {}

  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double width = 1.0, const std::string& dash = "") {
    body_ += "<line x1=\"" + fmt(x1) + "\" y1=\"" + fmt(y1) + "\" x2=\"" + fmt(x2) + "\" y2=\"" +
             fmt(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" + fmt(width) + "\"";
    if (!dash.empty()) body_ += " stroke-dasharray=\"" + dash + "\"";
    body_ += "/>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& stroke = "none") {
    body_ += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(w) +
             "\" height=\"" + fmt(h) + "\" fill=\"" + fill + "\" stroke=\"" + stroke + "\"/>\n";
  }

  void circle(double cx, double cy, double r, const std::string& fill,
              const std::string& stroke) {
    body_ += "<circle cx=\"" + fmt(cx) + "\" cy=\"" + fmt(cy) + "\" r=\"" + fmt(r) +
             "\" fill=\"" + fill + "\" stroke=\"" + stroke + "\"/>\n";
  }

  void text(double x, double y, const std::string& s, int size = 11,
            const std::string& anchor = "start") {
    body_ += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" font-size=\"" +
             std::to_string(size) + "\" font-family=\"sans-serif\" text-anchor=\"" + anchor +
             "\">" + escape(s) + "</text>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke,
                double width = 1.5) {
    body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + fmt(width) +
             "\" points=\"";
    for (const auto& [x, y] : pts) body_ += fmt(x) + "," + fmt(y) + " ";
    body_ += "\"/>\n";
  }

  void cross(double cx, double cy, double r, const std::string& stroke) {
    line(cx - r, cy - r, cx + r, cy + r, stroke, 1.6);
    line(cx - r, cy + r, cx + r, cy - r, stroke, 1.6);
  }

  std::string finish() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width_) +
           "\" height=\"" + std::to_string(height_) + "\" viewBox=\"0 0 " +
           std::to_string(width_) + " " + std::to_string(height_) + "\">\n" +
           "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body_ + "</svg>\n";
  }

 private:
  int width_;
  int height_;
  std::string body_;
};

// maps data coordinates into a pixel rectangle (y axis flipped)
struct Area {
  double x0, y0, x1, y1;        // pixel corners (y0 = top)
  double xmin, xmax, ymin, ymax;

  double px(double x) const { return x0 + (x - xmin) / (xmax - xmin) * (x1 - x0); }
  double py(double y) const { return y1 - (y - ymin) / (ymax - ymin) * (y1 - y0); }
};

inline void probability_axes(Builder& b, const Area& a, const std::string& xlabel,
                             const std::string& ylabel, int font = 11) {
  b.line(a.x0, a.y1, a.x1, a.y1, "black");
  b.line(a.x0, a.y0, a.x0, a.y1, "black");
  for (int i = 0; i <= 5; ++i) {
    const double v = i / 5.0;
    const double x = a.px(v);
    const double y = a.py(v);
    b.line(x, a.y1, x, a.y1 + 4, "black");
    b.text(x, a.y1 + 15, fmt(v), font - 2, "middle");
    b.line(a.x0 - 4, y, a.x0, y, "black");
    b.text(a.x0 - 6, y + 3, fmt(v), font - 2, "end");
  }
  b.text((a.x0 + a.x1) / 2, a.y1 + 30, xlabel, font, "middle");
  b.text(a.x0 - 40, (a.y0 + a.y1) / 2, ylabel, font, "middle");
}

}  // namespace svg

namespace detail {

inline std::string short_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// one bar panel of a per-study statistic, with an optional threshold rule
inline void bar_panel(svg::Builder& b, const svg::Area& frame, const std::string& title,
                      const std::vector<int>& ids, const std::vector<double>& values,
                      const std::vector<bool>& present, double rule_pos, double rule_neg,
                      bool has_rule) {
  double vmax = 0.0, vmin = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!present[i]) continue;
    vmax = std::max(vmax, values[i]);
    vmin = std::min(vmin, values[i]);
  }
  if (has_rule) {
    vmax = std::max(vmax, rule_pos);
    if (rule_neg < 0.0) vmin = std::min(vmin, rule_neg);
  }
  if (vmax == 0.0 && vmin == 0.0) vmax = 1.0;
  vmax *= 1.15;
  vmin = (vmin < 0.0) ? vmin * 1.15 : 0.0;

  svg::Area a = frame;
  a.xmin = 0.0;
  a.xmax = static_cast<double>(ids.size());
  a.ymin = vmin;
  a.ymax = vmax;

  b.text(a.x0, a.y0 - 3, title, 10);
  b.line(a.x0, a.y0, a.x0, a.y1, "black", 0.8);
  const double zero_y = a.py(0.0);
  b.line(a.x0, zero_y, a.x1, zero_y, "black", 0.8);
  b.text(a.x0 - 3, a.py(vmax / 1.15) + 3, short_number(vmax / 1.15), 7, "end");
  if (vmin < 0.0) b.text(a.x0 - 3, a.py(vmin / 1.15) + 3, short_number(vmin / 1.15), 7, "end");

  const double band = (a.x1 - a.x0) / static_cast<double>(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double cx = a.x0 + (static_cast<double>(i) + 0.5) * band;
    if (present[i]) {
      const double v = values[i];
      const double y = a.py(v);
      const double top = std::min(y, zero_y);
      const double h = std::abs(y - zero_y);
      b.rect(cx - band * 0.35, top, band * 0.7, h, "#9ecae1", "#3182bd");
    } else {
      b.text(cx, zero_y - 2, "x", 7, "middle");
    }
    b.text(cx, a.y1 + 8, std::to_string(ids[i]), 6, "middle");
  }
  if (has_rule) {
    b.line(a.x0, a.py(rule_pos), a.x1, a.py(rule_pos), "#d62728", 1.0, "4,3");
    if (rule_neg < 0.0) b.line(a.x0, a.py(rule_neg), a.x1, a.py(rule_neg), "#d62728", 1.0, "4,3");
  }
}

}  // namespace detail

// Figure 1 analog: per-study (FPR, sensitivity) scatter, white circles, with
// the pooled point as a filled black circle.
inline std::string fig_scatter(const AnalysisResult& result) {
  svg::Builder b(800, 600);
  svg::Area a{70, 30, 760, 540, 0.0, 1.0, 0.0, 1.0};
  svg::probability_axes(b, a, "False positive rate", "Sensitivity");
  for (const auto& s : result.dataset.studies()) {
    const auto [sens, fpr] = observed_proportions(s);
    b.circle(a.px(fpr), a.py(sens), 5, "white", "black");
  }
  b.circle(a.px(result.pooled.fpr.value), a.py(result.pooled.sensitivity.value), 6, "black",
           "black");
  return b.finish();
}

// Figure 2 analog: ten bar panels, one per relative-distance / standardized-
// residual measure, x = deleted study id, with threshold rules where the
// classification uses one.
inline std::string fig_distance_panels(const AnalysisResult& result, const Thresholds& th) {
  svg::Builder b(800, 600);
  std::vector<int> ids;
  for (const auto& s : result.dataset.studies()) ids.push_back(s.id);
  const std::size_t n = ids.size();

  struct Panel {
    std::string title;
    std::vector<double> values;
    std::vector<bool> present;
    double rule = 0.0;
    bool has_rule = false;
    bool signed_values = false;
  };
  std::vector<Panel> panels(10);
  const char* titles[10] = {"(a) RD sensitivity", "(b) RD FPR",        "(c) SRD",
                            "(d) ARD",            "(e) RD DOR",        "(f) SR sensitivity",
                            "(g) SR FPR",         "(h) SSR",           "(i) ASR",
                            "(j) SR DOR"};
  for (int pi = 0; pi < 10; ++pi) {
    panels[pi].title = titles[pi];
    panels[pi].values.resize(n, 0.0);
    panels[pi].present.resize(n, false);
  }
  panels[2].rule = th.srd;
  panels[2].has_rule = true;
  panels[4].rule = th.rd_dor;
  panels[4].has_rule = true;
  panels[7].rule = th.ssr;
  panels[7].has_rule = true;

  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = result.influence[i];
    if (!rec.complete) continue;
    const double vals[10] = {rec.rd.rd_a, rec.rd.rd_b,  rec.rd.srd,
                             rec.rd.ard,  rec.rd.rd_dor, rec.sr.sr_a,
                             rec.sr.sr_b, rec.sr.ssr.value_or(0.0), rec.sr.asr,
                             rec.sr.sr_dor};
    for (int pi = 0; pi < 10; ++pi) {
      panels[pi].values[i] = vals[pi];
      panels[pi].present[i] = (pi != 7) || rec.sr.ssr.has_value();
    }
  }

  const double col_w = 390.0, row_h = 116.0;
  for (int pi = 0; pi < 10; ++pi) {
    const int col = pi % 2;
    const int row = pi / 2;
    svg::Area frame{30.0 + col * col_w + 30.0, 18.0 + row * row_h, 30.0 + col * col_w + 370.0,
                    18.0 + row * row_h + 84.0, 0, 1, 0, 1};
    detail::bar_panel(b, frame, panels[pi].title, ids, panels[pi].values, panels[pi].present,
                      panels[pi].rule, 0.0, panels[pi].has_rule);
  }
  return b.finish();
}

// Figure 3 analog: delta-AUC bars with rules at +/- the threshold.
inline std::string fig_delta_auc(const AnalysisResult& result, const Thresholds& th) {
  svg::Builder b(800, 600);
  std::vector<int> ids;
  std::vector<double> values;
  std::vector<bool> present;
  for (std::size_t i = 0; i < result.dataset.size(); ++i) {
    ids.push_back(result.dataset.studies()[i].id);
    values.push_back(result.influence[i].delta_auc);
    present.push_back(result.influence[i].complete);
  }
  svg::Area frame{80, 60, 740, 500, 0, 1, 0, 1};
  detail::bar_panel(b, frame, "Influence on AUC (full minus leave-one-out)", ids, values,
                    present, th.delta_auc, -th.delta_auc, true);
  b.text(410, 540, "Deleted study id", 12, "middle");
  return b.finish();
}

// Figure 4 analog: one SROC panel per flagging method (plus the all-studies
// panel); flagged studies drawn as crosses, the refit curve overlaid.
inline std::string fig_sroc_panels(const AnalysisResult& result,
                                   const std::vector<MethodRefit>& refits) {
  svg::Builder b(800, 600);
  struct Panel {
    std::string title;
    const SrocCurve* curve;
    const PooledEstimates* pooled;
    std::vector<int> flagged;
  };
  std::vector<Panel> panels;
  panels.push_back({"All studies", &result.sroc, &result.pooled, {}});
  for (const auto& r : refits) {
    panels.push_back({r.method_label, r.refitted ? &r.sroc : &result.sroc,
                      r.refitted ? &r.pooled : &result.pooled, r.removed});
  }

  const int cols = 3;
  const double col_w = 258.0, row_h = 280.0;
  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const int col = static_cast<int>(pi) % cols;
    const int row = static_cast<int>(pi) / cols;
    svg::Area a{20.0 + col * col_w + 38.0, 20.0 + row * row_h + 18.0,
                20.0 + col * col_w + 238.0, 20.0 + row * row_h + 238.0, 0.0, 1.0, 0.0, 1.0};
    b.text(a.x0, a.y0 - 6, panels[pi].title, 11);
    b.line(a.x0, a.y1, a.x1, a.y1, "black", 0.8);
    b.line(a.x0, a.y0, a.x0, a.y1, "black", 0.8);
    for (int i = 0; i <= 2; ++i) {
      const double v = i / 2.0;
      b.text(a.px(v), a.y1 + 10, svg::fmt(v), 7, "middle");
      b.text(a.x0 - 4, a.py(v) + 3, svg::fmt(v), 7, "end");
    }

    const auto& flagged = panels[pi].flagged;
    for (const auto& s : result.dataset.studies()) {
      const auto [sens, fpr] = observed_proportions(s);
      const bool is_flagged =
          std::find(flagged.begin(), flagged.end(), s.id) != flagged.end();
      if (is_flagged)
        b.cross(a.px(fpr), a.py(sens), 4, "#d62728");
      else
        b.circle(a.px(fpr), a.py(sens), 3.5, "white", "black");
    }

    std::vector<std::pair<double, double>> pts;
    const auto& grid = panels[pi].curve->grid;
    const std::size_t stride = std::max<std::size_t>(1, grid.size() / 200);
    for (std::size_t g = 0; g < grid.size(); g += stride)
      pts.emplace_back(a.px(grid[g].first), a.py(grid[g].second));
    b.polyline(pts, "#3182bd", 1.5);

    b.circle(a.px(panels[pi].pooled->fpr.value), a.py(panels[pi].pooled->sensitivity.value), 4,
             "black", "black");
  }
  return b.finish();
}

// Writes the four figures; returns the file names written.
inline std::vector<std::string> render_figures(const AnalysisResult& result,
                                               const std::vector<MethodRefit>& refits,
                                               const std::string& out_dir) {
  const std::vector<std::pair<std::string, std::string>> files = {
      {"fig1_scatter.svg", fig_scatter(result)},
      {"fig2_distances.svg", fig_distance_panels(result, result.meta.thresholds)},
      {"fig3_dauc.svg", fig_delta_auc(result, result.meta.thresholds)},
      {"fig4_sroc_panels.svg", fig_sroc_panels(result, refits)},
  };
  std::vector<std::string> written;
  for (const auto& [name, content] : files) {
    const std::string path = out_dir + "/" + name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write figure: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
    written.push_back(name);
  }
  return written;
}

}  // namespace dtameta
