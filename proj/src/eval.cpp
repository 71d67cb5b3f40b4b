#include "ubtrack/eval.hpp"

#include <cmath>

namespace ubtrack {

JointErrorSeries joint_pixel_error(const JointTrack2D& est, const JointTrack2D& truth) {
  if (est.size() != truth.size()) {
    throw LengthMismatch("joint_pixel_error: sequence lengths differ");
  }
  JointErrorSeries out;
  out.errors.resize(static_cast<Eigen::Index>(est.size()), kNumBodyJoints);
  for (std::size_t f = 0; f < est.size(); ++f) {
    for (std::size_t j = 0; j < kNumBodyJoints; ++j) {
      out.errors(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(j)) =
          (est[f][j] - truth[f][j]).norm();
    }
  }
  out.means = out.errors.colwise().mean();
  return out;
}

Eigen::VectorXd default_pcp_thresholds() {
  Eigen::VectorXd t(20);
  for (int i = 0; i < 20; ++i) t(i) = 0.05 * (i + 1);
  return t;
}

std::vector<Limb> arm_limbs() {
  return {{BodyJoint::ShoulderL, BodyJoint::ElbowL},
          {BodyJoint::ShoulderR, BodyJoint::ElbowR},
          {BodyJoint::ElbowL, BodyJoint::HandL},
          {BodyJoint::ElbowR, BodyJoint::HandR}};
}

PcpCurve pcp(const JointTrack2D& est, const JointTrack2D& truth,
             const std::vector<Limb>& limbs, const Eigen::VectorXd& thresholds) {
  if (est.size() != truth.size()) {
    throw LengthMismatch("pcp: sequence lengths differ");
  }
  PcpCurve curve;
  curve.thresholds = thresholds;
  curve.values = Eigen::VectorXd::Zero(thresholds.size());
  const double total = static_cast<double>(est.size() * limbs.size());

  for (std::size_t f = 0; f < est.size(); ++f) {
    for (const auto& limb : limbs) {
      const auto a = static_cast<std::size_t>(limb.a);
      const auto b = static_cast<std::size_t>(limb.b);
      const double len = (truth[f][a] - truth[f][b]).norm();
      if (len <= 0.0) {
        throw ZeroLengthLimb("pcp: zero-length ground-truth limb");
      }
      const double ea = (est[f][a] - truth[f][a]).norm();
      const double eb = (est[f][b] - truth[f][b]).norm();
      const double worst = std::max(ea, eb);
      for (Eigen::Index i = 0; i < thresholds.size(); ++i) {
        // Boundary inclusive: an endpoint exactly at f*L still counts.
        if (worst <= thresholds(i) * len) curve.values(i) += 1.0 / total;
      }
    }
  }
  return curve;
}

AlignmentResult procrustes_fixed_scale(const std::vector<Eigen::Vector3d>& source,
                                       const std::vector<Eigen::Vector3d>& target) {
  if (source.size() != target.size()) {
    throw LengthMismatch("procrustes: point counts differ");
  }
  if (source.size() < 3) {
    throw DegenerateConfiguration("procrustes: need at least 3 point pairs");
  }
  const double n = static_cast<double>(source.size());
  Eigen::Vector3d cs = Eigen::Vector3d::Zero(), ct = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    cs += source[i];
    ct += target[i];
  }
  cs /= n;
  ct /= n;

  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    h += (source[i] - cs) * (target[i] - ct).transpose();
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  // Two vanishing singular values means the points are collinear or
  // coincident and the rotation is not determined.
  const Eigen::Vector3d sv = svd.singularValues();
  if (sv(1) <= 1e-12 * std::max(sv(0), 1e-300)) {
    throw DegenerateConfiguration("procrustes: collinear or coincident points");
  }

  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) {
    d(2, 2) = -1.0;  // reflection correction
  }
  AlignmentResult out;
  out.rotation = svd.matrixV() * d * svd.matrixU().transpose();
  out.translation = ct - out.rotation * cs;
  return out;
}

Error3dSeries error_3d(const std::vector<FullBodyEstimate>& est,
                       const SkeletonRecording& truth,
                       const ProjectionMatrix& camera,
                       const std::vector<BodyJoint>& align_joints) {
  if (est.size() != truth.frames.size()) {
    throw LengthMismatch("error_3d: sequence lengths differ");
  }
  Error3dSeries out;
  out.errors.resize(static_cast<Eigen::Index>(est.size()), kNumBodyJoints);

  for (std::size_t f = 0; f < est.size(); ++f) {
    std::array<Eigen::Vector3d, kNumBodyJoints> est3d;
    for (std::size_t j = 0; j < kNumBodyJoints; ++j) {
      const Eigen::Vector3d& v = est[f].joints[j];
      JointImage ji{v(0), v(1), v(2)};
      Joint3D p = backproject(camera, ji);
      est3d[j] = p.vec();
    }
    std::vector<Eigen::Vector3d> src, tgt;
    for (BodyJoint bj : align_joints) {
      src.push_back(est3d[static_cast<std::size_t>(bj)]);
      tgt.push_back(truth.frames[f].joints[static_cast<std::size_t>(bj)].vec());
    }
    AlignmentResult align = procrustes_fixed_scale(src, tgt);
    for (std::size_t j = 0; j < kNumBodyJoints; ++j) {
      out.errors(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(j)) =
          (align.apply(est3d[j]) - truth.frames[f].joints[j].vec()).norm();
    }
  }
  out.means = out.errors.colwise().mean();
  return out;
}

}  // namespace ubtrack
