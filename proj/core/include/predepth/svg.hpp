#pragma once

#include <string>
#include <vector>

namespace predepth {

// Minimal deterministic SVG plotting: plain shapes, fixed number formatting,
// no external assets. Output bytes depend only on the data added.
class SvgPlot {
 public:
  SvgPlot(int width, int height, std::string title, std::string xlabel,
          std::string ylabel);

  void set_range(double x_min, double x_max, double y_min, double y_max);
  void set_subtitle(std::string subtitle);

  void add_scatter(const std::vector<double>& xs, const std::vector<double>& ys,
                   const std::string& color, double radius, const std::string& name = "");
  void add_line(const std::vector<double>& xs, const std::vector<double>& ys,
                const std::string& color, bool dashed = false,
                const std::string& name = "");
  // Bars centered on xs with the given world-coordinate width.
  void add_bars(const std::vector<double>& xs, const std::vector<double>& heights,
                double bar_width, const std::string& color, const std::string& name = "");

  std::string render() const;

 private:
  struct Series {
    enum Kind { scatter, line, bars } kind;
    std::vector<double> xs, ys;
    std::string color;
    double size = 0.0;
    bool dashed = false;
    std::string name;
  };

  int width_, height_;
  std::string title_, subtitle_, xlabel_, ylabel_;
  bool has_range_ = false;
  double x_min_ = 0, x_max_ = 1, y_min_ = 0, y_max_ = 1;
  std::vector<Series> series_;

  void auto_range();
};

}  // namespace predepth
