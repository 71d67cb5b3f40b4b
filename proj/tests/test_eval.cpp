#include <doctest.h>

#include <cmath>
#include <random>

#include "ubtrack/eval.hpp"

using namespace ubtrack;

namespace {

JointTrack2D flat_track(std::size_t frames, double spacing = 100.0) {
  JointTrack2D t(frames);
  for (auto& f : t) {
    for (std::size_t j = 0; j < kNumBodyJoints; ++j) {
      f[j] = Eigen::Vector2d(spacing * static_cast<double>(j), 0.0);
    }
  }
  return t;
}

Eigen::Matrix3d rot(double angle, const Eigen::Vector3d& axis) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

// Arm-limb truth with every limb exactly 100 px long.
JointTrack2D arm_truth(std::size_t frames) {
  JointTrack2D t(frames);
  auto set = [](std::array<Eigen::Vector2d, kNumBodyJoints>& f, BodyJoint j,
                double u, double v) { f[static_cast<std::size_t>(j)] = {u, v}; };
  for (auto& f : t) {
    set(f, BodyJoint::Head, 0, -150);
    set(f, BodyJoint::Neck, 0, -100);
    set(f, BodyJoint::ShoulderL, -60, -100);
    set(f, BodyJoint::ShoulderR, 60, -100);
    set(f, BodyJoint::ElbowL, -60, 0);
    set(f, BodyJoint::ElbowR, 60, 0);
    set(f, BodyJoint::HandL, -60, 100);
    set(f, BodyJoint::HandR, 60, 100);
  }
  return t;
}

}  // namespace

TEST_CASE("joint_pixel_error") {
  auto truth = flat_track(2);
  auto est = truth;
  est[0][0] += Eigen::Vector2d(3.0, 4.0);  // 3-4-5
  est[1][0] += Eigen::Vector2d(-3.0, 4.0);
  est[1][5] += Eigen::Vector2d(0.0, 7.0);

  auto series = joint_pixel_error(est, truth);
  CHECK(series.errors(0, 0) == doctest::Approx(5.0));
  CHECK(series.errors(1, 0) == doctest::Approx(5.0));
  CHECK(series.errors(0, 5) == doctest::Approx(0.0));
  CHECK(series.errors(1, 5) == doctest::Approx(7.0));
  CHECK(series.means(0) == doctest::Approx(5.0));
  CHECK(series.means(5) == doctest::Approx(3.5));
  CHECK(series.means(7) == doctest::Approx(0.0));

  CHECK_THROWS_AS(joint_pixel_error(flat_track(3), truth), LengthMismatch);
}

TEST_CASE("pcp exact two-frame fixture") {
  auto truth = arm_truth(2);
  auto est = truth;
  // frame 1: left hand off by exactly half the forearm length
  est[1][static_cast<std::size_t>(BodyJoint::HandL)] += Eigen::Vector2d(0.0, 50.0);

  auto curve = pcp(est, truth, arm_limbs(), default_pcp_thresholds());
  REQUIRE(curve.thresholds.size() == 20);
  CHECK(curve.thresholds(0) == doctest::Approx(0.05));
  CHECK(curve.thresholds(19) == doctest::Approx(1.0));
  // 8 (limb, frame) pairs; the damaged forearm fails below 0.5 and counts
  // exactly at 0.5 (inclusive boundary)
  for (Eigen::Index i = 0; i < 20; ++i) {
    double expect = (curve.thresholds(i) < 0.5 - 1e-12) ? 7.0 / 8.0 : 1.0;
    CHECK(curve.values(i) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("pcp is non-decreasing in the threshold") {
  auto truth = arm_truth(10);
  auto est = truth;
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n01;
  for (auto& f : est) {
    for (auto& p : f) p += 30.0 * Eigen::Vector2d(n01(rng), n01(rng));
  }
  auto curve = pcp(est, truth, arm_limbs(), default_pcp_thresholds());
  for (Eigen::Index i = 1; i < curve.values.size(); ++i) {
    CHECK(curve.values(i) >= curve.values(i - 1));
  }
  CHECK(curve.values.minCoeff() >= 0.0);
  CHECK(curve.values.maxCoeff() <= 1.0);
}

TEST_CASE("pcp guards") {
  auto truth = arm_truth(2);
  CHECK_THROWS_AS(pcp(arm_truth(3), truth, arm_limbs(), default_pcp_thresholds()),
                  LengthMismatch);
  auto degenerate = truth;
  for (auto& f : degenerate) {
    f[static_cast<std::size_t>(BodyJoint::ElbowL)] =
        f[static_cast<std::size_t>(BodyJoint::HandL)];
  }
  CHECK_THROWS_AS(pcp(truth, degenerate, arm_limbs(), default_pcp_thresholds()),
                  ZeroLengthLimb);
}

TEST_CASE("procrustes recovers a constructed rigid transform") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n01;
  Eigen::Matrix3d r = rot(0.7, {1.0, -2.0, 0.5});
  Eigen::Vector3d t(0.3, -1.2, 2.0);

  std::vector<Eigen::Vector3d> src, tgt;
  for (int i = 0; i < 8; ++i) {
    Eigen::Vector3d p(n01(rng), n01(rng), n01(rng));
    src.push_back(p);
    tgt.push_back(r * p + t);
  }
  auto align = procrustes_fixed_scale(src, tgt);
  CHECK((align.rotation - r).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((align.translation - t).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(align.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 0; i < src.size(); ++i) {
    CHECK((align.apply(src[i]) - tgt[i]).norm() < 1e-10);
  }
}

TEST_CASE("procrustes under noise still returns a proper rotation") {
  std::mt19937_64 rng(32);
  std::normal_distribution<double> n01;
  Eigen::Matrix3d r = rot(-1.1, {0.2, 1.0, 1.0});
  Eigen::Vector3d t(5.0, 0.0, -2.0);
  std::vector<Eigen::Vector3d> src, tgt;
  for (int i = 0; i < 50; ++i) {
    Eigen::Vector3d p(n01(rng), n01(rng), n01(rng));
    src.push_back(p);
    tgt.push_back(r * p + t + 0.01 * Eigen::Vector3d(n01(rng), n01(rng), n01(rng)));
  }
  auto align = procrustes_fixed_scale(src, tgt);
  CHECK(align.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK((align.rotation.transpose() * align.rotation - Eigen::Matrix3d::Identity())
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  CHECK((align.rotation - r).cwiseAbs().maxCoeff() < 0.02);
  double rss = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    rss += (align.apply(src[i]) - tgt[i]).squaredNorm();
  }
  CHECK(std::sqrt(rss / 50.0) < 0.05);
}

TEST_CASE("procrustes guards") {
  std::vector<Eigen::Vector3d> two = {{0, 0, 0}, {1, 0, 0}};
  CHECK_THROWS_AS(procrustes_fixed_scale(two, two), DegenerateConfiguration);
  std::vector<Eigen::Vector3d> a = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  CHECK_THROWS_AS(procrustes_fixed_scale(a, a), DegenerateConfiguration);
  std::vector<Eigen::Vector3d> tri = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  CHECK_THROWS_AS(procrustes_fixed_scale(tri, a), DegenerateConfiguration);
  std::vector<Eigen::Vector3d> four = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  CHECK_THROWS_AS(procrustes_fixed_scale(four, tri), LengthMismatch);
}

namespace {

SkeletonRecording simple_recording(std::size_t frames) {
  SkeletonRecording rec;
  rec.frames.resize(frames);
  auto set = [](SkeletonFrame& f, BodyJoint j, double x, double y, double z) {
    f.joints[static_cast<std::size_t>(j)] = Joint3D{x, y, z};
  };
  for (std::size_t t = 0; t < frames; ++t) {
    auto& f = rec.frames[t];
    double wob = 0.05 * std::sin(0.3 * static_cast<double>(t));
    set(f, BodyJoint::Head, 0.0, -0.55, 2.5);
    set(f, BodyJoint::Neck, 0.0, -0.30, 2.5);
    set(f, BodyJoint::ShoulderL, -0.22, -0.30, 2.5);
    set(f, BodyJoint::ShoulderR, 0.22, -0.30, 2.5);
    set(f, BodyJoint::ElbowL, -0.25, 0.0, 2.45 + wob);
    set(f, BodyJoint::ElbowR, 0.25, 0.0, 2.45 - wob);
    set(f, BodyJoint::HandL, -0.22, 0.25, 2.4);
    set(f, BodyJoint::HandR, 0.22, 0.25 + wob, 2.4);
  }
  return rec;
}

std::vector<FullBodyEstimate> project_states(const SkeletonRecording& rec,
                                             const ProjectionMatrix& pm) {
  std::vector<FullBodyEstimate> out(rec.frames.size());
  for (std::size_t t = 0; t < rec.frames.size(); ++t) {
    for (std::size_t j = 0; j < kNumBodyJoints; ++j) {
      JointImage ji = project(pm, rec.frames[t].joints[j]);
      out[t].joints[j] = Eigen::Vector3d(ji.u_over_lambda, ji.v_over_lambda, ji.lambda);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("error_3d round trip is exact") {
  auto rec = simple_recording(6);
  auto pm = build_projection(CameraIntrinsics{500, 510, 320, 240}, CameraPose{});
  auto est = project_states(rec, pm);
  auto series = error_3d(est, rec, pm);
  CHECK(series.errors.maxCoeff() < 1e-9);
}

TEST_CASE("error_3d absorbs a rigid transform of the estimate") {
  auto rec = simple_recording(4);
  auto pm = build_projection(CameraIntrinsics{500, 500, 320, 240}, CameraPose{});
  Eigen::Matrix3d r = rot(0.2, {0.0, 1.0, 0.3});
  Eigen::Vector3d t(0.1, -0.05, 0.2);

  SkeletonRecording moved = rec;
  for (auto& f : moved.frames) {
    for (auto& j : f.joints) {
      Eigen::Vector3d p = r * j.vec() + t;
      j = Joint3D{p(0), p(1), p(2)};
    }
  }
  auto est = project_states(moved, pm);
  auto series = error_3d(est, rec, pm);
  CHECK(series.errors.maxCoeff() < 1e-9);
}

TEST_CASE("error_3d isolates a displaced hand") {
  auto rec = simple_recording(5);
  auto pm = build_projection(CameraIntrinsics{520, 520, 320, 240}, CameraPose{});
  SkeletonRecording bent = rec;
  for (auto& f : bent.frames) {
    auto& h = f.joints[static_cast<std::size_t>(BodyJoint::HandL)];
    h = Joint3D{h.x + 0.2, h.y, h.z};
  }
  auto est = project_states(bent, pm);
  auto series = error_3d(est, rec, pm);
  const auto hl = static_cast<Eigen::Index>(BodyJoint::HandL);
  for (Eigen::Index f = 0; f < series.errors.rows(); ++f) {
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(kNumBodyJoints); ++j) {
      if (j == hl) {
        CHECK(series.errors(f, j) == doctest::Approx(0.2).epsilon(1e-9));
      } else {
        CHECK(series.errors(f, j) < 1e-9);
      }
    }
  }
  CHECK(series.means(hl) == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("error_3d length guard") {
  auto rec = simple_recording(3);
  auto pm = build_projection(CameraIntrinsics{500, 500, 320, 240}, CameraPose{});
  auto est = project_states(simple_recording(4), pm);
  CHECK_THROWS_AS(error_3d(est, rec, pm), LengthMismatch);
}
