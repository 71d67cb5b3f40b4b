#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "ubtrack/errors.hpp"

namespace ubtrack {

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  Eigen::Matrix3d K() const {
    Eigen::Matrix3d k;
    k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
    return k;
  }
};

// 6-DoF camera pose: translation in metres, rotation angles in radians.
struct CameraPose {
  double tx = 0.0, ty = 0.0, tz = 0.0;
  double alpha = 0.0;  // rotation about y
  double beta = 0.0;   // rotation about x
  double gamma = 0.0;  // rotation about z
};

struct ProjectionMatrix {
  Eigen::Matrix<double, 3, 4> p;
};

struct Joint3D {
  double x = 0.0, y = 0.0, z = 0.0;

  Eigen::Vector3d vec() const { return {x, y, z}; }
};

// Scaled image coordinates of one joint: the state stores (u/lambda,
// v/lambda, lambda) so that the projection stays linear in the state.
struct JointImage {
  double u_over_lambda = 0.0;
  double v_over_lambda = 0.0;
  double lambda = 1.0;

  // Homogeneous (u, v, lambda).
  Eigen::Vector3d uvl() const {
    return {u_over_lambda * lambda, v_over_lambda * lambda, lambda};
  }
};

// Sampling box for synthetic viewpoints. Angles in radians here; the CLI
// converts from degrees.
struct ViewpointLimits {
  double max_angle = 30.0 * M_PI / 180.0;
  double max_translation = 0.5;
};

// Composes K * [Rz(gamma) Rx(beta) Ry(alpha) | t].
ProjectionMatrix build_projection(const CameraIntrinsics& intr,
                                  const CameraPose& pose);

JointImage project(const ProjectionMatrix& pm, const Joint3D& j);

Joint3D backproject(const ProjectionMatrix& pm, const JointImage& ji);

CameraPose sample_viewpoint(std::uint64_t rng_seed, const ViewpointLimits& limits);

}  // namespace ubtrack
