// Copyright 2026 The courtlens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "courtlens/svg.hpp"

#include "courtlens/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace courtlens {

namespace {

constexpr double kFontSize = 11.0;
constexpr double kCharWidth = 6.6;  // monospace advance at kFontSize
constexpr double kWidth = 640.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 44.0;
constexpr double kRight = 20.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

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

double text_width(const std::string& s) { return kCharWidth * static_cast<double>(s.size()); }

[[noreturn]] void fail(const std::string& kind, const std::string& msg) {
  throw Error(ErrorCode::render, kind + ": " + msg);
}

const nlohmann::json& require(const nlohmann::json& doc, const std::string& kind, const std::string& key) {
  if (!doc.is_object() || !doc.contains(key)) fail(kind, "missing key '" + key + "'");
  return doc.at(key);
}

std::vector<double> numbers(const nlohmann::json& doc, const std::string& kind, const std::string& key) {
  const auto& a = require(doc, kind, key);
  if (!a.is_array()) fail(kind, "key '" + key + "' must be an array");
  if (a.empty()) fail(kind, "key '" + key + "' is empty");
  std::vector<double> out;
  for (const auto& v : a) {
    if (!v.is_number()) fail(kind, "key '" + key + "' holds a non-numeric entry");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(kind, "key '" + key + "' holds a non-finite entry");
    out.push_back(x);
  }
  return out;
}

std::vector<std::string> strings(const nlohmann::json& doc, const std::string& kind, const std::string& key) {
  const auto& a = require(doc, kind, key);
  if (!a.is_array()) fail(kind, "key '" + key + "' must be an array");
  if (a.empty()) fail(kind, "key '" + key + "' is empty");
  std::vector<std::string> out;
  for (const auto& v : a) out.push_back(v.is_string() ? v.get<std::string>() : v.dump());
  return out;
}

std::string optional_text(const nlohmann::json& doc, const std::string& key) {
  if (doc.is_object() && doc.contains(key) && doc.at(key).is_string()) return doc.at(key).get<std::string>();
  return {};
}

void same_length(const std::string& kind, std::size_t a, std::size_t b, const std::string& what) {
  if (a != b) fail(kind, what + " differ in length");
}

struct Range {
  double lo;
  double hi;
};

Range padded(double lo, double hi) {
  if (hi - lo < 1e-12) {
    const double pad = std::max(1.0, std::abs(lo) * 0.1);
    return {lo - pad, hi + pad};
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

// Up to ~6 ticks at 1/2/5 x 10^k spacing.
std::vector<double> ticks(Range r) {
  const double raw = (r.hi - r.lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(r.lo / step) * step; t <= r.hi + 1e-9 * step; t += step) out.push_back(t);
  return out;
}

class Canvas {
 public:
  Canvas(double height, double left) : height_(height), left_(left) {}

  double plot_left() const { return left_; }
  double plot_right() const { return kWidth - kRight; }
  double plot_top() const { return kTop; }
  double plot_bottom() const { return height_ - kBottom; }

  double sx(double v, Range r) const { return left_ + (v - r.lo) / (r.hi - r.lo) * (plot_right() - left_); }
  double sy(double v, Range r) const { return plot_bottom() - (v - r.lo) / (r.hi - r.lo) * (plot_bottom() - kTop); }

  void line(double x1, double y1, double x2, double y2, const std::string& cls, const std::string& stroke = "#333") {
    body_ << "<line class=\"" << cls << "\" x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2)
          << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke << "\"/>\n";
  }
  void rect(double x, double y, double w, double h, const std::string& cls, const std::string& fill) {
    body_ << "<rect class=\"" << cls << "\" x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
          << "\" height=\"" << num(h) << "\" fill=\"" << fill << "\" stroke=\"#333\"/>\n";
  }
  void circle(double x, double y, double r, const std::string& cls, const std::string& fill) {
    body_ << "<circle class=\"" << cls << "\" cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << num(r)
          << "\" fill=\"" << fill << "\"/>\n";
  }
  void text(double x, double y, const std::string& s, const std::string& cls, const char* anchor = "start") {
    body_ << "<text class=\"" << cls << "\" x=\"" << num(x) << "\" y=\"" << num(y) << "\" text-anchor=\"" << anchor
          << "\">" << escape(s) << "</text>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& cls, const std::string& stroke) {
    body_ << "<polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << stroke << "\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) body_ << (i ? " " : "") << num(pts[i].first) << "," << num(pts[i].second);
    body_ << "\"/>\n";
  }

  void x_axis(Range r, const std::string& label) {
    line(left_, plot_bottom(), plot_right(), plot_bottom(), "axis");
    for (double t : ticks(r)) {
      const double x = sx(t, r);
      line(x, plot_bottom(), x, plot_bottom() + 4.0, "tick");
      text(x, plot_bottom() + 16.0, tick_label(t), "xtick", "middle");
    }
    if (!label.empty()) text(0.5 * (left_ + plot_right()), height_ - 8.0, label, "xlabel", "middle");
  }
  void y_axis(Range r, const std::string& label) {
    line(left_, kTop, left_, plot_bottom(), "axis");
    for (double t : ticks(r)) {
      const double y = sy(t, r);
      line(left_ - 4.0, y, left_, y, "tick");
      text(left_ - 6.0, y + 4.0, tick_label(t), "ytick", "end");
    }
    if (!label.empty()) text(8.0, kTop - 10.0, label, "ylabel-title");
  }

  std::string finish(const std::string& kind, const std::string& title) const {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\"" << num(height_)
        << "\" viewBox=\"0 0 " << num(kWidth) << " " << num(height_) << "\" class=\"" << kind << "\">\n";
    out << "<style>text{font-family:monospace;font-size:" << num(kFontSize) << "px}</style>\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << num(kWidth) << "\" height=\"" << num(height_) << "\" fill=\"white\"/>\n";
    if (!title.empty()) out << "<text class=\"title\" x=\"" << num(kWidth / 2) << "\" y=\"20.00\" text-anchor=\"middle\">"
                            << escape(title) << "</text>\n";
    out << body_.str() << "</svg>\n";
    return out.str();
  }

 private:
  double height_;
  double left_;
  std::ostringstream body_;
};

std::string weight_plot(const nlohmann::json& doc) {
  const std::string kind = "weight_plot";
  const auto names = strings(doc, kind, "feature_names");
  const auto values = numbers(doc, kind, "values");
  const auto lower = numbers(doc, kind, "lower");
  const auto upper = numbers(doc, kind, "upper");
  same_length(kind, names.size(), values.size(), "feature_names and values");
  same_length(kind, values.size(), lower.size(), "values and lower");
  same_length(kind, values.size(), upper.size(), "values and upper");

  double longest = 0.0;
  for (const auto& n : names) longest = std::max(longest, text_width(n));
  const double row = 22.0;
  const double height = kTop + row * static_cast<double>(names.size()) + kBottom;
  Canvas c(height, longest + 16.0);
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    lo = std::min({lo, lower[i], values[i]});
    hi = std::max({hi, upper[i], values[i]});
  }
  const Range r = padded(lo, hi);
  c.x_axis(r, optional_text(doc, "xlabel").empty() ? "weight (95% interval)" : optional_text(doc, "xlabel"));
  c.line(c.sx(0.0, r), kTop, c.sx(0.0, r), c.plot_bottom(), "zero", "#999");
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = kTop + row * (static_cast<double>(i) + 0.5);
    c.text(c.plot_left() - 8.0, y + 4.0, names[i], "ylabel", "end");
    c.line(c.sx(lower[i], r), y, c.sx(upper[i], r), y, "whisker");
    c.line(c.sx(lower[i], r), y - 4.0, c.sx(lower[i], r), y + 4.0, "whisker-cap");
    c.line(c.sx(upper[i], r), y - 4.0, c.sx(upper[i], r), y + 4.0, "whisker-cap");
    c.circle(c.sx(values[i], r), y, 3.5, "point", kPalette[0]);
  }
  return c.finish(kind, optional_text(doc, "title"));
}

std::string pdp_plot(const nlohmann::json& doc) {
  const std::string kind = "pdp";
  const auto grid = numbers(doc, kind, "grid");
  const auto values = numbers(doc, kind, "values");
  same_length(kind, grid.size(), values.size(), "grid and values");
  std::vector<double> ox, oy;
  if (doc.contains("observed_x")) {
    ox = numbers(doc, kind, "observed_x");
    oy = numbers(doc, kind, "observed_y");
    same_length(kind, ox.size(), oy.size(), "observed_x and observed_y");
  }
  double xlo = *std::min_element(grid.begin(), grid.end()), xhi = *std::max_element(grid.begin(), grid.end());
  double ylo = *std::min_element(values.begin(), values.end()), yhi = *std::max_element(values.begin(), values.end());
  for (std::size_t i = 0; i < ox.size(); ++i) {
    xlo = std::min(xlo, ox[i]);
    xhi = std::max(xhi, ox[i]);
    ylo = std::min(ylo, oy[i]);
    yhi = std::max(yhi, oy[i]);
  }
  const Range rx = padded(xlo, xhi), ry = padded(ylo, yhi);
  Canvas c(360.0, 70.0);
  c.x_axis(rx, optional_text(doc, "xlabel"));
  c.y_axis(ry, optional_text(doc, "ylabel"));
  for (std::size_t i = 0; i < ox.size(); ++i) c.circle(c.sx(ox[i], rx), c.sy(oy[i], ry), 1.8, "observed", "#bbbbbb");
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < grid.size(); ++i) pts.emplace_back(c.sx(grid[i], rx), c.sy(values[i], ry));
  c.polyline(pts, "curve", kPalette[0]);
  return c.finish(kind, optional_text(doc, "title"));
}

std::string scree_plot(const nlohmann::json& doc) {
  const std::string kind = "scree";
  const auto values = numbers(doc, kind, "values");
  const double hi = std::max(*std::max_element(values.begin(), values.end()), 0.0);
  const double lo = std::min(*std::min_element(values.begin(), values.end()), 0.0);
  const Range r{lo, hi > lo ? hi * 1.05 : lo + 1.0};
  Canvas c(320.0, 60.0);
  c.y_axis(r, optional_text(doc, "ylabel").empty() ? "explained variance ratio" : optional_text(doc, "ylabel"));
  c.line(c.plot_left(), c.plot_bottom(), c.plot_right(), c.plot_bottom(), "axis");
  const double slot = (c.plot_right() - c.plot_left()) / static_cast<double>(values.size());
  const double base = c.sy(0.0, r);
  double cumulative = 0.0;
  std::vector<std::pair<double, double>> cum;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = c.plot_left() + slot * static_cast<double>(i);
    const double y = c.sy(values[i], r);
    c.rect(x + 0.15 * slot, std::min(y, base), 0.7 * slot, std::abs(base - y), "bar", kPalette[0]);
    c.text(x + 0.5 * slot, c.plot_bottom() + 16.0, "PC" + std::to_string(i + 1), "xtick", "middle");
    cumulative += values[i];
    if (cumulative <= r.hi) cum.emplace_back(x + 0.5 * slot, c.sy(cumulative, r));
  }
  if (cum.size() > 1) c.polyline(cum, "cumulative", kPalette[1]);
  return c.finish(kind, optional_text(doc, "title"));
}

double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::string box_plot(const nlohmann::json& doc) {
  const std::string kind = "box_by_group";
  const auto groups = strings(doc, kind, "groups");
  const auto& vals = require(doc, kind, "values");
  if (!vals.is_array()) fail(kind, "key 'values' must be an array");
  same_length(kind, groups.size(), vals.size(), "groups and values");
  std::vector<std::vector<double>> data;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    nlohmann::json wrap{{"values", vals[g]}};
    data.push_back(numbers(wrap, kind, "values"));
    lo = std::min(lo, *std::min_element(data.back().begin(), data.back().end()));
    hi = std::max(hi, *std::max_element(data.back().begin(), data.back().end()));
  }
  const Range r = padded(lo, hi);
  Canvas c(340.0, 70.0);
  c.y_axis(r, optional_text(doc, "ylabel"));
  c.line(c.plot_left(), c.plot_bottom(), c.plot_right(), c.plot_bottom(), "axis");
  const double slot = (c.plot_right() - c.plot_left()) / static_cast<double>(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& v = data[g];
    const double x0 = c.plot_left() + slot * static_cast<double>(g);
    const double mid = x0 + 0.5 * slot, half = 0.25 * slot;
    const double q1 = quantile(v, 0.25), med = quantile(v, 0.5), q3 = quantile(v, 0.75);
    const double vmin = *std::min_element(v.begin(), v.end()), vmax = *std::max_element(v.begin(), v.end());
    c.line(mid, c.sy(vmin, r), mid, c.sy(q1, r), "whisker");
    c.line(mid, c.sy(q3, r), mid, c.sy(vmax, r), "whisker");
    c.rect(mid - half, c.sy(q3, r), 2.0 * half, c.sy(q1, r) - c.sy(q3, r), "box", "#dbe9f6");
    c.line(mid - half, c.sy(med, r), mid + half, c.sy(med, r), "median", kPalette[1]);
    c.text(mid, c.plot_bottom() + 16.0, groups[g], "xtick", "middle");
  }
  return c.finish(kind, optional_text(doc, "title"));
}

std::string scatter_plot(const nlohmann::json& doc) {
  const std::string kind = "scatter";
  const auto x = numbers(doc, kind, "x");
  const auto y = numbers(doc, kind, "y");
  same_length(kind, x.size(), y.size(), "x and y");
  std::vector<std::string> labels;
  if (doc.contains("labels")) {
    labels = strings(doc, kind, "labels");
    same_length(kind, x.size(), labels.size(), "x and labels");
  }
  std::vector<std::string> legend = labels;
  std::sort(legend.begin(), legend.end());
  legend.erase(std::unique(legend.begin(), legend.end()), legend.end());

  const Range rx = padded(*std::min_element(x.begin(), x.end()), *std::max_element(x.begin(), x.end()));
  const Range ry = padded(*std::min_element(y.begin(), y.end()), *std::max_element(y.begin(), y.end()));
  Canvas c(400.0, 70.0);
  c.x_axis(rx, optional_text(doc, "xlabel"));
  c.y_axis(ry, optional_text(doc, "ylabel"));
  constexpr std::size_t n_colors = sizeof kPalette / sizeof kPalette[0];
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::size_t color = 0;
    if (!labels.empty())
      color = static_cast<std::size_t>(std::lower_bound(legend.begin(), legend.end(), labels[i]) - legend.begin());
    c.circle(c.sx(x[i], rx), c.sy(y[i], ry), 2.5, "point", kPalette[color % n_colors]);
  }
  for (std::size_t k = 0; k < legend.size(); ++k) {
    const double ly = kTop + 14.0 * static_cast<double>(k);
    const double lx = c.plot_right() - text_width(legend[k]) - 16.0;
    c.circle(lx, ly - 4.0, 3.0, "legend-mark", kPalette[k % n_colors]);
    c.text(lx + 8.0, ly, legend[k], "legend");
  }
  return c.finish(kind, optional_text(doc, "title"));
}

}  // namespace

std::string render_svg(const std::string& kind, const nlohmann::json& data) {
  if (kind == "weight_plot") return weight_plot(data);
  if (kind == "pdp") return pdp_plot(data);
  if (kind == "scree") return scree_plot(data);
  if (kind == "box_by_group") return box_plot(data);
  if (kind == "scatter") return scatter_plot(data);
  throw Error(ErrorCode::usage, "unknown plot kind '" + kind + "'");
}

}  // namespace courtlens
