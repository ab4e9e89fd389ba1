#pragma once

#include <cstdint>
#include <span>

#include "predepth/mlp.hpp"

namespace predepth {

struct MarginEstimate {
  double output_margin = 0.0;  // top logit minus second logit
  double input_margin = 0.0;   // +inf sentinel when every pairwise gradient vanishes
  std::int32_t predicted = -1;
  std::int32_t min_pair_class = -1;  // the j attaining the input-margin minimum
};

// z_(1) - z_(2) >= 0; throws with fewer than two logits.
double output_margin(std::span<const float> logits);

// Linear-approximation adversarial margin:
// min over j != argmax of |z_i - z_j| / ||grad_x (z_i - z_j)||_2.
MarginEstimate input_margin(const MlpModel& model, std::span<const float> x);

}  // namespace predepth
