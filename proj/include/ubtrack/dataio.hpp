#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ubtrack/association.hpp"
#include "ubtrack/bodymodel.hpp"
#include "ubtrack/eval.hpp"
#include "ubtrack/gaussian.hpp"
#include "ubtrack/geometry.hpp"
#include "ubtrack/skeleton.hpp"
#include "ubtrack/trackers.hpp"

namespace ubtrack {

// ---- skeleton recordings: CSV "frame,joint,x,y,z" ----

SkeletonRecording load_skeleton_csv(const std::string& path);
void save_skeleton_csv(const SkeletonRecording& rec, const std::string& path);

// ---- measurement sequences: JSON lines, header object first ----

struct MeasurementSequence {
  std::vector<MeasurementFrame> frames;
  CameraIntrinsics intrinsics;
  CameraPose camera_pose;
  std::vector<std::string> measured_joints;  // full-body joint names
  std::string provenance;
};

MeasurementSequence load_measurements_jsonl(const std::string& path);
void save_measurements_jsonl(const MeasurementSequence& seq, const std::string& path);

// ---- prior files: versioned JSON ----

struct PriorFile {
  GaussianMixture mixture;
  StateLayout layout;
};

PriorFile load_prior_json(const std::string& path);
void save_prior_json(const PriorFile& prior, const std::string& path);

// ---- edge files: CSV "frame,mid_x,mid_y,orientation_radians" ----

std::vector<EdgeSegment> load_edges_csv(const std::string& path);
void save_edges_csv(const std::vector<EdgeSegment>& edges, const std::string& path);

// ---- estimates / diagnostics CSV ----

void save_estimates_csv(const std::vector<FullBodyEstimate>& estimates,
                        const std::vector<FrameDiagnostics>& diagnostics,
                        const std::string& path);
std::vector<FullBodyEstimate> load_estimates_csv(const std::string& path);

// ---- synthetic skeleton motion ----

struct MotionSpec {
  // neutral | wave | reach | crossed | clap | random
  std::string primitive = "random";
  double fps = 30.0;
  double period_frames = 120.0;  // oscillation period for cyclic primitives
};

SkeletonRecording synth_skeleton(const MotionSpec& spec, int n_frames,
                                 std::uint64_t rng_seed);

// Projects a recording and keeps the measurable subset, all visible.
MeasurementSequence make_measurements(const SkeletonRecording& rec,
                                      const CameraIntrinsics& intr,
                                      const CameraPose& pose,
                                      const std::vector<std::string>& subset,
                                      std::uint64_t rng_seed);

std::vector<std::string> default_measured_joints();

// Projected ground-truth pixel positions for every body joint.
JointTrack2D project_recording(const SkeletonRecording& rec,
                               const ProjectionMatrix& pm);

// 2D pixel tracks from full-body estimates (u/lambda, v/lambda components).
JointTrack2D estimates_to_track2d(const std::vector<FullBodyEstimate>& est);

}  // namespace ubtrack
