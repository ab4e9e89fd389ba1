#include "predepth/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace predepth {

namespace {

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
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

// round toward a 1/2/5 mantissa for tick spacing
double nice_step(double span, int target_ticks) {
  if (span <= 0) return 1.0;
  const double raw = span / target_ticks;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double frac = raw / mag;
  double step;
  if (frac <= 1.5)
    step = 1.0;
  else if (frac <= 3.5)
    step = 2.0;
  else if (frac <= 7.5)
    step = 5.0;
  else
    step = 10.0;
  return step * mag;
}

}  // namespace

SvgPlot::SvgPlot(int width, int height, std::string title, std::string xlabel,
                 std::string ylabel)
    : width_(width),
      height_(height),
      title_(std::move(title)),
      xlabel_(std::move(xlabel)),
      ylabel_(std::move(ylabel)) {}

void SvgPlot::set_range(double x_min, double x_max, double y_min, double y_max) {
  has_range_ = true;
  x_min_ = x_min;
  x_max_ = x_max;
  y_min_ = y_min;
  y_max_ = y_max;
}

void SvgPlot::set_subtitle(std::string subtitle) { subtitle_ = std::move(subtitle); }

void SvgPlot::add_scatter(const std::vector<double>& xs, const std::vector<double>& ys,
                          const std::string& color, double radius,
                          const std::string& name) {
  series_.push_back({Series::scatter, xs, ys, color, radius, false, name});
}

void SvgPlot::add_line(const std::vector<double>& xs, const std::vector<double>& ys,
                       const std::string& color, bool dashed, const std::string& name) {
  series_.push_back({Series::line, xs, ys, color, 1.5, dashed, name});
}

void SvgPlot::add_bars(const std::vector<double>& xs, const std::vector<double>& heights,
                       double bar_width, const std::string& color,
                       const std::string& name) {
  series_.push_back({Series::bars, xs, heights, color, bar_width, false, name});
}

void SvgPlot::auto_range() {
  if (has_range_) return;
  double xmn = 0, xmx = 1, ymn = 0, ymx = 1;
  bool first = true;
  for (const auto& s : series_) {
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (first) {
        xmn = xmx = s.xs[i];
        ymn = ymx = s.ys[i];
        first = false;
      }
      xmn = std::min(xmn, s.xs[i]);
      xmx = std::max(xmx, s.xs[i]);
      ymn = std::min(ymn, s.ys[i]);
      ymx = std::max(ymx, s.ys[i]);
    }
    if (s.kind == Series::bars) ymn = std::min(ymn, 0.0);
  }
  if (xmx == xmn) xmx = xmn + 1;
  if (ymx == ymn) ymx = ymn + 1;
  const double xpad = 0.05 * (xmx - xmn);
  const double ypad = 0.05 * (ymx - ymn);
  x_min_ = xmn - xpad;
  x_max_ = xmx + xpad;
  y_min_ = ymn - ypad;
  y_max_ = ymx + ypad;
}

std::string SvgPlot::render() const {
  const_cast<SvgPlot*>(this)->auto_range();
  const double ml = 62, mr = 18, mt = subtitle_.empty() ? 34 : 50, mb = 46;
  const double pw = width_ - ml - mr;
  const double ph = height_ - mt - mb;
  auto px = [&](double x) { return ml + (x - x_min_) / (x_max_ - x_min_) * pw; };
  auto py = [&](double y) { return mt + ph - (y - y_min_) / (y_max_ - y_min_) * ph; };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\""
    << height_ << "\" viewBox=\"0 0 " << width_ << " " << height_ << "\">\n";
  o << "<rect x=\"0\" y=\"0\" width=\"" << width_ << "\" height=\"" << height_
    << "\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(width_ / 2.0)
    << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">"
    << escape_xml(title_) << "</text>\n";
  if (!subtitle_.empty())
    o << "<text x=\"" << num(width_ / 2.0)
      << "\" y=\"34\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#555\" "
         "text-anchor=\"middle\">"
      << escape_xml(subtitle_) << "</text>\n";

  // axes box
  o << "<rect x=\"" << num(ml) << "\" y=\"" << num(mt) << "\" width=\"" << num(pw)
    << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

  // ticks
  const double xstep = nice_step(x_max_ - x_min_, 6);
  for (double t = std::ceil(x_min_ / xstep) * xstep; t <= x_max_ + 1e-12; t += xstep) {
    o << "<line x1=\"" << num(px(t)) << "\" y1=\"" << num(mt + ph) << "\" x2=\""
      << num(px(t)) << "\" y2=\"" << num(mt + ph + 4) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(px(t)) << "\" y=\"" << num(mt + ph + 16)
      << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">" << num(t)
      << "</text>\n";
  }
  const double ystep = nice_step(y_max_ - y_min_, 6);
  for (double t = std::ceil(y_min_ / ystep) * ystep; t <= y_max_ + 1e-12; t += ystep) {
    o << "<line x1=\"" << num(ml - 4) << "\" y1=\"" << num(py(t)) << "\" x2=\"" << num(ml)
      << "\" y2=\"" << num(py(t)) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(ml - 7) << "\" y=\"" << num(py(t) + 3)
      << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" << num(t)
      << "</text>\n";
  }
  o << "<text x=\"" << num(ml + pw / 2) << "\" y=\"" << num(height_ - 8)
    << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
    << escape_xml(xlabel_) << "</text>\n";
  o << "<text x=\"14\" y=\"" << num(mt + ph / 2)
    << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\" "
       "transform=\"rotate(-90 14 "
    << num(mt + ph / 2) << ")\">" << escape_xml(ylabel_) << "</text>\n";

  auto clamp_x = [&](double x) { return std::min(std::max(x, ml), ml + pw); };
  auto clamp_y = [&](double y) { return std::min(std::max(y, mt), mt + ph); };

  for (const auto& s : series_) {
    if (s.kind == Series::scatter) {
      for (std::size_t i = 0; i < s.xs.size(); ++i)
        o << "<circle cx=\"" << num(clamp_x(px(s.xs[i]))) << "\" cy=\""
          << num(clamp_y(py(s.ys[i]))) << "\" r=\"" << num(s.size) << "\" fill=\""
          << s.color << "\" fill-opacity=\"0.55\"/>\n";
    } else if (s.kind == Series::line) {
      o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
      if (s.dashed) o << " stroke-dasharray=\"5,3\"";
      o << " points=\"";
      for (std::size_t i = 0; i < s.xs.size(); ++i) {
        if (i) o << ' ';
        o << num(clamp_x(px(s.xs[i]))) << ',' << num(clamp_y(py(s.ys[i])));
      }
      o << "\"/>\n";
    } else {
      for (std::size_t i = 0; i < s.xs.size(); ++i) {
        const double x0 = clamp_x(px(s.xs[i] - s.size / 2));
        const double x1 = clamp_x(px(s.xs[i] + s.size / 2));
        const double y0 = clamp_y(py(std::max(0.0, s.ys[i])));
        const double y1 = clamp_y(py(std::min(0.0, s.ys[i])));
        o << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\""
          << num(x1 - x0) << "\" height=\"" << num(std::max(0.0, y1 - y0))
          << "\" fill=\"" << s.color << "\" fill-opacity=\"0.75\" stroke=\"black\" "
             "stroke-width=\"0.5\"/>\n";
      }
    }
  }

  // legend
  double ly = mt + 12;
  for (const auto& s : series_) {
    if (s.name.empty()) continue;
    o << "<rect x=\"" << num(ml + 8) << "\" y=\"" << num(ly - 8)
      << "\" width=\"10\" height=\"10\" fill=\"" << s.color << "\"/>\n";
    o << "<text x=\"" << num(ml + 22) << "\" y=\"" << num(ly + 1)
      << "\" font-family=\"sans-serif\" font-size=\"10\">" << escape_xml(s.name)
      << "</text>\n";
    ly += 14;
  }

  o << "</svg>\n";
  return o.str();
}

}  // namespace predepth
