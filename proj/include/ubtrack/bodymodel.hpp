#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ubtrack/gaussian.hpp"
#include "ubtrack/geometry.hpp"
#include "ubtrack/skeleton.hpp"

namespace ubtrack {

enum class Side { Left, Right };

// One arm chain: head, neck, shoulder, elbow, hand, each contributing
// (u/lambda, v/lambda, lambda) to the state vector. d = 15 by default.
struct StateLayout {
  Side side = Side::Left;
  std::vector<std::string> joints = {"head", "neck", "shoulder", "elbow", "hand"};

  Eigen::Index dim() const { return static_cast<Eigen::Index>(3 * joints.size()); }
  // Index of a chain joint (0-based slot in `joints`), -1 if absent.
  int joint_slot(const std::string& name) const;
  // The BodyJoint each chain slot maps to, given the side.
  BodyJoint body_joint(int slot) const;
};

struct PoseState {
  StateLayout layout;
  Eigen::VectorXd values;
};

// Random-walk noise covariance, diagonal. Entries alternate pixel^2 terms
// for u/lambda, v/lambda and a scale^2 term for lambda.
struct TransitionParams {
  Eigen::VectorXd q_diag;

  static TransitionParams defaults(const StateLayout& layout,
                                   double sigma_px = 4.0,
                                   double sigma_lambda = 0.02);
  Eigen::MatrixXd q() const { return q_diag.asDiagonal(); }
  TransitionParams scaled(double factor) const;
};

struct JointMeasurement {
  double u = 0.0;
  double v = 0.0;
  bool visible = false;
};

// Observed image coordinates of the measurable joints at one time step.
struct MeasurementFrame {
  int t = 0;
  // Keyed by full-body joint (head, neck, hand_l, hand_r by default).
  std::array<JointMeasurement, kNumBodyJoints> joints{};
};

// Selection of measurable state coordinates plus their noise.
struct ObservationParams {
  // Chain slots whose (u/lambda, v/lambda) are observable.
  std::vector<int> measured_slots;
  double r_sigma_px = 8.0;

  static ObservationParams defaults(const StateLayout& layout,
                                    bool measure_neck = true,
                                    double sigma_px = 8.0);

  // Extracts the visible measurement rows for this chain: returns H (m x d),
  // diag(R) (m) and the stacked measurement vector (m). m = 0 when nothing
  // relevant is visible.
  struct VisibleSystem {
    Eigen::MatrixXd h;
    Eigen::VectorXd r_diag;
    Eigen::VectorXd z;
  };
  VisibleSystem visible_system(const StateLayout& layout,
                               const MeasurementFrame& frame) const;
};

// Full 8-joint estimate in (u/lambda, v/lambda, lambda) coordinates.
struct FullBodyEstimate {
  std::array<Eigen::Vector3d, kNumBodyJoints> joints{};
};

// Per-component transition machinery shared by all trackers. Precomputes, for
// a fixed Q, everything that does not depend on the previous state.
class TransitionModel {
 public:
  TransitionModel(const GaussianMixture& prior, const TransitionParams& tp);

  Eigen::Index dim() const { return prior_->dim(); }
  Eigen::Index components() const { return prior_->size(); }
  const GaussianMixture& prior() const { return *prior_; }
  const Eigen::VectorXd& q_diag() const { return q_diag_; }

  // log N(x_prev | mu_i, Q + Sigma_i)
  double log_scale(Eigen::Index i, const Eigen::VectorXd& x_prev) const;
  // logsumexp_i(log pi_i + log c_i)
  double log_evidence(const Eigen::VectorXd& x_prev) const;

  // Conditional transition for component i: N(F_i x_prev + B_i mu_i, S_i).
  Eigen::VectorXd conditional_mean(Eigen::Index i, const Eigen::VectorXd& x_prev) const;
  const Eigen::MatrixXd& conditional_cov(Eigen::Index i) const { return comp_[i].cond_cov; }
  const Eigen::MatrixXd& f(Eigen::Index i) const { return comp_[i].f; }
  const Eigen::MatrixXd& b(Eigen::Index i) const { return comp_[i].b; }

  double conditional_logpdf(Eigen::Index i, const Eigen::VectorXd& x_prev,
                            const Eigen::VectorXd& x) const;

  // Normalised mixture transition density.
  double logpdf(const Eigen::VectorXd& x_prev, const Eigen::VectorXd& x) const;

  // Draws from the normalised mixture transition.
  Eigen::VectorXd sample(const Eigen::VectorXd& x_prev, std::mt19937_64& rng) const;

 private:
  struct ComponentCache {
    Eigen::MatrixXd f;         // (Q^-1 + S^-1)^-1 Q^-1
    Eigen::MatrixXd b;         // (Q^-1 + S^-1)^-1 S^-1
    Eigen::VectorXd b_mu;      // b * mu_i
    Eigen::MatrixXd cond_cov;  // (Q^-1 + S^-1)^-1
    Eigen::LLT<Eigen::MatrixXd> cond_llt;
    double cond_log_norm;      // -1/2 log((2 pi)^d |cond_cov|)
    Eigen::LLT<Eigen::MatrixXd> marg_llt;  // chol(Q + Sigma_i)
    double marg_log_norm;
  };

  const GaussianMixture* prior_;
  Eigen::VectorXd q_diag_;
  std::vector<ComponentCache> comp_;
};

// Free-function forms of the model densities.
double transition_logpdf(const GaussianMixture& prior, const TransitionParams& tp,
                         const PoseState& x_prev, const PoseState& x);
Gaussian transition_conditional(const Gaussian& prior_component,
                                const TransitionParams& tp,
                                const PoseState& x_prev);
double observation_logpdf(const ObservationParams& op, const PoseState& x,
                          const MeasurementFrame& z);

// Projects every recording frame through n_views sampled viewpoints and
// stacks the chain states for one side.
std::vector<PoseState> generate_training_set(const SkeletonRecording& rec,
                                             const CameraIntrinsics& intr,
                                             int n_views,
                                             const ViewpointLimits& limits,
                                             std::uint64_t rng_seed, Side side);

FullBodyEstimate merge_arm_estimates(const PoseState& left, const PoseState& right);

}  // namespace ubtrack
