#include "ubtrack/association.hpp"

#include <cmath>

#include "ubtrack/rng.hpp"

namespace ubtrack {

double LimbHypothesis::orientation() const {
  Eigen::Vector2d d = b - a;
  double th = std::atan2(d.y(), d.x());
  while (th < 0.0) th += M_PI;
  while (th >= M_PI) th -= M_PI;
  return th;
}

double EdgeSupportParams::peak_density() const {
  return 1.0 / (std::pow(2.0 * M_PI, 1.5) * sigma_theta * sigma_x * sigma_y);
}

double EdgeSupportParams::effective_tau() const {
  if (tau > 0.0) return tau;
  // Default cut: accept up to a 2-sigma offset in every coordinate.
  return peak_density() * std::exp(-0.5 * (4.0 + 4.0 + 4.0));
}

double wrap_orientation_diff(double a, double b) {
  double d = std::fmod(a - b, M_PI);
  if (d > M_PI / 2.0) d -= M_PI;
  if (d < -M_PI / 2.0) d += M_PI;
  return d;
}

double edge_density(const EdgeSegment& e, const LimbHypothesis& l,
                    const EdgeSupportParams& p) {
  const double dth = wrap_orientation_diff(e.orientation, l.orientation());
  const Eigen::Vector2d mid = l.midpoint();
  const double dx = e.x - mid.x();
  const double dy = e.y - mid.y();
  const double quad = dth * dth / (p.sigma_theta * p.sigma_theta) +
                      dx * dx / (p.sigma_x * p.sigma_x) +
                      dy * dy / (p.sigma_y * p.sigma_y);
  return p.peak_density() * std::exp(-0.5 * quad);
}

bool edge_supports(const EdgeSegment& e, const LimbHypothesis& l,
                   const EdgeSupportParams& p) {
  return edge_density(e, l, p) > p.effective_tau();
}

std::vector<int> support_count(const std::vector<EdgeSegment>& edges,
                               const std::vector<LimbHypothesis>& limbs,
                               const EdgeSupportParams& p) {
  std::vector<int> counts(limbs.size(), 0);
  for (const auto& e : edges) {
    for (std::size_t i = 0; i < limbs.size(); ++i) {
      if (edge_supports(e, limbs[i], p)) ++counts[i];
    }
  }
  return counts;
}

namespace {

Eigen::Vector2d pixel(const FullBodyEstimate& est, BodyJoint j) {
  const Eigen::Vector3d& v = est.joints[static_cast<std::size_t>(j)];
  return {v(0), v(1)};
}

}  // namespace

SwapDecision check_hand_swap(const FullBodyEstimate& estimate,
                             const std::vector<EdgeSegment>& edges,
                             const EdgeSupportParams& p, int margin) {
  // Only forearms vote: a hand swap leaves upper arms unchanged.
  const Eigen::Vector2d el = pixel(estimate, BodyJoint::ElbowL);
  const Eigen::Vector2d er = pixel(estimate, BodyJoint::ElbowR);
  const Eigen::Vector2d hl = pixel(estimate, BodyJoint::HandL);
  const Eigen::Vector2d hr = pixel(estimate, BodyJoint::HandR);

  auto total = [&](const Eigen::Vector2d& lh, const Eigen::Vector2d& rh) {
    std::vector<LimbHypothesis> limbs = {{el, lh}, {er, rh}};
    auto counts = support_count(edges, limbs, p);
    return counts[0] + counts[1];
  };

  const int as_is = total(hl, hr);
  const int swapped = total(hr, hl);
  return (swapped > as_is + margin) ? SwapDecision::Swap : SwapDecision::Keep;
}

CorruptionResult corrupt_measurements(const std::vector<MeasurementFrame>& clean,
                                      const CorruptionModel& model,
                                      std::uint64_t rng_seed) {
  CorruptionResult out;
  out.frames = clean;
  out.swap_active.assign(clean.size(), false);

  auto rng = substream(rng_seed, 0x636f7272ULL);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double p_end =
      model.swap_mean_duration > 0.0 ? 1.0 / model.swap_mean_duration : 1.0;

  bool swapping = false;
  for (std::size_t t = 0; t < out.frames.size(); ++t) {
    auto& frame = out.frames[t];
    if (model.noise_sigma_px > 0.0) {
      for (auto& jm : frame.joints) {
        if (!jm.visible) continue;
        jm.u += model.noise_sigma_px * noise(rng);
        jm.v += model.noise_sigma_px * noise(rng);
      }
    }
    if (model.p_drop > 0.0) {
      for (auto& jm : frame.joints) {
        if (jm.visible && u01(rng) < model.p_drop) jm.visible = false;
      }
    }
    if (swapping) {
      if (u01(rng) < p_end) swapping = false;
    } else if (model.p_swap_onset > 0.0 && u01(rng) < model.p_swap_onset) {
      swapping = true;
    }
    if (swapping) {
      std::swap(frame.joints[static_cast<std::size_t>(BodyJoint::HandL)],
                frame.joints[static_cast<std::size_t>(BodyJoint::HandR)]);
      out.swap_active[t] = true;
    }
  }
  return out;
}

}  // namespace ubtrack
