#pragma once

// Compares reverse-mode gradients with central finite differences at 64-bit
// precision on a randomly parameterized network and random game positions.

#include <cstdint>
#include <string>

#include "zggp/game.hpp"
#include "zggp/neural/value_net.hpp"

namespace zggp {

struct GradCheckOptions {
  double epsilon = 1e-5;
  int samples = 3;
  // Denominator floor of the relative error; keeps entries whose true
  // gradient is exactly zero (e.g. key biases) from dividing noise by zero.
  double floor = 1e-5;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t parameters = 0;
  // Coordinates skipped because the perturbation flipped a ReLU.
  std::size_t kinks = 0;
  std::string worst_parameter;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Config sized for exhaustive checks (at most ~5k parameters): attention
// d=16 h=2 L=2 ff=32 sinusoidal; conv 12 channels x 3 layers.
NetConfig gradcheck_config(Architecture arch, const GameSpec& game);

GradCheckReport gradient_check(const NetConfig& config, const Game& game,
                               std::uint64_t seed,
                               const GradCheckOptions& options = {});

}  // namespace zggp
