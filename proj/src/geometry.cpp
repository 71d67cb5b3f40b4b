#include "ubtrack/geometry.hpp"

#include <cmath>

#include "ubtrack/rng.hpp"

namespace ubtrack {

ProjectionMatrix build_projection(const CameraIntrinsics& intr,
                                  const CameraPose& pose) {
  const double ca = std::cos(pose.alpha), sa = std::sin(pose.alpha);
  const double cb = std::cos(pose.beta), sb = std::sin(pose.beta);
  const double cg = std::cos(pose.gamma), sg = std::sin(pose.gamma);

  Eigen::Matrix3d rz, rx, ry;
  rz << cg, -sg, 0, sg, cg, 0, 0, 0, 1;
  rx << 1, 0, 0, 0, cb, -sb, 0, sb, cb;
  ry << ca, 0, sa, 0, 1, 0, -sa, 0, ca;

  Eigen::Matrix<double, 3, 4> rt;
  rt.leftCols<3>() = rz * rx * ry;
  rt.col(3) = Eigen::Vector3d(pose.tx, pose.ty, pose.tz);

  ProjectionMatrix pm;
  pm.p = intr.K() * rt;
  return pm;
}

JointImage project(const ProjectionMatrix& pm, const Joint3D& j) {
  Eigen::Vector4d hom(j.x, j.y, j.z, 1.0);
  Eigen::Vector3d uvl = pm.p * hom;
  if (std::abs(uvl(2)) < 1e-12) {
    throw DegenerateProjection("project: joint lies on the camera plane (|lambda| < 1e-12)");
  }
  JointImage ji;
  ji.lambda = uvl(2);
  ji.u_over_lambda = uvl(0) / uvl(2);
  ji.v_over_lambda = uvl(1) / uvl(2);
  return ji;
}

Joint3D backproject(const ProjectionMatrix& pm, const JointImage& ji) {
  Eigen::Matrix3d m = pm.p.leftCols<3>();
  Eigen::FullPivLU<Eigen::Matrix3d> lu(m);
  if (!lu.isInvertible()) {
    throw SingularCamera("backproject: left 3x3 block of projection matrix is singular");
  }
  Eigen::Vector3d xyz = lu.solve(ji.uvl() - pm.p.col(3));
  return {xyz(0), xyz(1), xyz(2)};
}

CameraPose sample_viewpoint(std::uint64_t rng_seed, const ViewpointLimits& limits) {
  auto rng = substream(rng_seed, 0x76696577ULL);
  std::uniform_real_distribution<double> ang(-limits.max_angle, limits.max_angle);
  std::uniform_real_distribution<double> trn(-limits.max_translation,
                                             limits.max_translation);
  CameraPose pose;
  if (limits.max_translation > 0) {
    pose.tx = trn(rng);
    pose.ty = trn(rng);
    pose.tz = trn(rng);
  }
  if (limits.max_angle > 0) {
    pose.alpha = ang(rng);
    pose.beta = ang(rng);
    pose.gamma = ang(rng);
  }
  return pose;
}

}  // namespace ubtrack
