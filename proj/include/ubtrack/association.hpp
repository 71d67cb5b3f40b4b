#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ubtrack/bodymodel.hpp"

namespace ubtrack {

// Undirected linear edge segment: orientation normalised to [0, pi).
struct EdgeSegment {
  double x = 0.0;
  double y = 0.0;
  double orientation = 0.0;
  int frame = 0;
};

struct LimbHypothesis {
  Eigen::Vector2d a;
  Eigen::Vector2d b;

  Eigen::Vector2d midpoint() const { return 0.5 * (a + b); }
  double orientation() const;  // [0, pi)
};

struct EdgeSupportParams {
  double sigma_theta = 15.0 * M_PI / 180.0;
  double sigma_x = 20.0;
  double sigma_y = 20.0;
  double tau = 0.0;  // <= 0: default = density at (2 sigma) offsets

  double effective_tau() const;
  double peak_density() const;
};

// Angle difference wrapped to [-pi/2, pi/2] for undirected lines.
double wrap_orientation_diff(double a, double b);

double edge_density(const EdgeSegment& e, const LimbHypothesis& l,
                    const EdgeSupportParams& p);
bool edge_supports(const EdgeSegment& e, const LimbHypothesis& l,
                   const EdgeSupportParams& p);

std::vector<int> support_count(const std::vector<EdgeSegment>& edges,
                               const std::vector<LimbHypothesis>& limbs,
                               const EdgeSupportParams& p);

enum class SwapDecision { Keep, Swap };

// Compares forearm edge support under the as-is vs hand-swapped assignment.
SwapDecision check_hand_swap(const FullBodyEstimate& estimate,
                             const std::vector<EdgeSegment>& edges,
                             const EdgeSupportParams& p, int margin = 2);

struct CorruptionModel {
  double noise_sigma_px = 0.0;
  double p_drop = 0.0;
  double p_swap_onset = 0.0;
  double swap_mean_duration = 10.0;
};

struct CorruptionResult {
  std::vector<MeasurementFrame> frames;
  std::vector<bool> swap_active;  // per frame
};

CorruptionResult corrupt_measurements(const std::vector<MeasurementFrame>& clean,
                                      const CorruptionModel& model,
                                      std::uint64_t rng_seed);

}  // namespace ubtrack
