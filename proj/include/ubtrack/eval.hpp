#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ubtrack/bodymodel.hpp"
#include "ubtrack/geometry.hpp"
#include "ubtrack/skeleton.hpp"

namespace ubtrack {

struct JointErrorSeries {
  // errors(frame, joint): Euclidean pixel distance.
  Eigen::MatrixXd errors;
  Eigen::VectorXd means;  // per joint over the sequence
};

// Per-frame 2D joint positions, pixel coordinates, indexed by BodyJoint.
using JointTrack2D = std::vector<std::array<Eigen::Vector2d, kNumBodyJoints>>;

JointErrorSeries joint_pixel_error(const JointTrack2D& est, const JointTrack2D& truth);

struct PcpCurve {
  Eigen::VectorXd thresholds;  // ascending fractions of limb length
  Eigen::VectorXd values;      // fraction of correct (limb, frame) pairs
};

Eigen::VectorXd default_pcp_thresholds();  // 0.05 .. 1.0 step 0.05

struct Limb {
  BodyJoint a;
  BodyJoint b;
};

// The four arm limbs scored by the metric.
std::vector<Limb> arm_limbs();

PcpCurve pcp(const JointTrack2D& est, const JointTrack2D& truth,
             const std::vector<Limb>& limbs, const Eigen::VectorXd& thresholds);

struct AlignmentResult {
  Eigen::Matrix3d rotation;
  Eigen::Vector3d translation;

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }
};

// Rigid (scale = 1) least-squares alignment of source onto target.
AlignmentResult procrustes_fixed_scale(const std::vector<Eigen::Vector3d>& source,
                                       const std::vector<Eigen::Vector3d>& target);

struct Error3dSeries {
  Eigen::MatrixXd errors;  // (frame, joint) metres
  Eigen::VectorXd means;
};

// Back-projects estimated full-body states, aligns each frame on
// align_joints (default head, neck, shoulders) and reports metre errors.
Error3dSeries error_3d(const std::vector<FullBodyEstimate>& est,
                       const SkeletonRecording& truth,
                       const ProjectionMatrix& camera,
                       const std::vector<BodyJoint>& align_joints = {
                           BodyJoint::Head, BodyJoint::Neck, BodyJoint::ShoulderL,
                           BodyJoint::ShoulderR});

}  // namespace ubtrack
