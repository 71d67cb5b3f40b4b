#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "ubtrack/geometry.hpp"

namespace ubtrack {

// The eight upper-body joints tracked throughout.
enum class BodyJoint : int {
  Head = 0,
  Neck,
  ShoulderL,
  ShoulderR,
  ElbowL,
  ElbowR,
  HandL,
  HandR,
};

inline constexpr std::size_t kNumBodyJoints = 8;

inline constexpr std::array<const char*, kNumBodyJoints> kBodyJointNames = {
    "head", "neck", "shoulder_l", "shoulder_r",
    "elbow_l", "elbow_r", "hand_l", "hand_r"};

// Returns -1 when the name is unknown.
int body_joint_index(const std::string& name);

struct SkeletonFrame {
  std::array<Joint3D, kNumBodyJoints> joints;
};

struct SkeletonRecording {
  std::vector<SkeletonFrame> frames;
  double fps = 30.0;
};

}  // namespace ubtrack
