#include "predepth/margin.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace predepth {

double output_margin(std::span<const float> logits) {
  if (logits.size() < 2)
    throw std::invalid_argument("output_margin: need at least 2 logits");
  double top1 = -std::numeric_limits<double>::infinity();
  double top2 = -std::numeric_limits<double>::infinity();
  for (float z : logits) {
    if (!std::isfinite(z)) throw std::domain_error("output_margin: non-finite logit");
    const double v = z;
    if (v > top1) {
      top2 = top1;
      top1 = v;
    } else if (v > top2) {
      top2 = v;
    }
  }
  return top1 - top2;
}

MarginEstimate input_margin(const MlpModel& model, std::span<const float> x) {
  Workspace<float> ws;
  ws.resize(model);
  forward(model, x, ws);
  const auto& logits = ws.pre.back();
  for (float z : logits)
    if (!std::isfinite(z)) throw std::domain_error("input_margin: non-finite logit");

  MarginEstimate m;
  m.predicted = static_cast<std::int32_t>(argmax_lowest(std::span<const float>(logits)));
  m.output_margin = output_margin(std::span<const float>(logits));

  constexpr double kZeroGradient = 1e-12;
  double best = std::numeric_limits<double>::infinity();
  bool any_nonzero = false;
  for (int j = 0; j < model.num_classes(); ++j) {
    if (j == m.predicted) continue;
    auto grad = input_gradient(model, x, m.predicted, j);
    double norm_sq = 0.0;
    for (double g : grad) {
      if (!std::isfinite(g)) throw std::domain_error("input_margin: non-finite gradient");
      norm_sq += g * g;
    }
    const double norm = std::sqrt(norm_sq);
    if (norm < kZeroGradient) continue;
    any_nonzero = true;
    const double gamma =
        std::abs(static_cast<double>(logits[m.predicted]) - static_cast<double>(logits[j])) /
        norm;
    if (gamma < best) {
      best = gamma;
      m.min_pair_class = j;
    }
  }
  m.input_margin = any_nonzero ? best : std::numeric_limits<double>::infinity();
  return m;
}

}  // namespace predepth
