#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "ubtrack/bodymodel.hpp"
#include "ubtrack/gaussian.hpp"

namespace ubtrack {

enum class TrackerVariant {
  PfGmm,             // proposal = full mixture transition, weight = p(z|x)
  PfSimpleScaled,    // proposal = random walk, weight = p(z|x) Phi(x) / evidence
  PfSimpleUnscaled,  // as above, evidence term dropped
  MkfSampled,        // indicators sampled from the prior weights
  MkfFixed,          // one frozen trajectory per mixture component
};

const char* variant_name(TrackerVariant v);
std::optional<TrackerVariant> variant_from_name(const std::string& name);

// Burn-in inflation of diag(Q): factor (kappa - 1)(1 - t/T_b) + 1 for
// t < T_b, exactly 1 afterwards.
struct AnnealingSchedule {
  double inflation = 100.0;  // kappa
  int burn_in = 50;          // T_b frames

  double factor(int t) const;
};

struct TrackerConfig {
  TrackerVariant variant = TrackerVariant::MkfFixed;
  int n_particles = 1000;
  int n_tracks = 0;  // 0 = default: N for mkf-fixed, 3N for mkf-sampled
  double resample_threshold = 0.5;  // fraction of N_s
  double epsilon_floor = -1.0;      // < 0 = default 1e-3 / count
  AnnealingSchedule annealing;
  // unset = variant default: annealed for the random-walk samplers, off for
  // pf-gmm (which needs the wider mixture proposal as-is) and the MKFs.
  std::optional<bool> anneal;
  std::uint64_t rng_seed = 0;

  bool anneal_enabled() const;
  int effective_tracks(Eigen::Index n_components) const;
  double effective_epsilon(int count) const;
};

struct ParticleSet {
  std::vector<Eigen::VectorXd> particles;
  Eigen::VectorXd weights;  // normalised
};

struct MkfTrack {
  int indicator = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  double weight = 0.0;
};

double effective_particles(const Eigen::VectorXd& weights);

ParticleSet resample(const ParticleSet& ps, std::uint64_t rng_seed);
std::vector<MkfTrack> resample_tracks(const std::vector<MkfTrack>& tracks,
                                      std::uint64_t rng_seed);

struct StepInfo {
  double neff = 0.0;
  bool resampled = false;
};

ParticleSet pf_step(const ParticleSet& ps, const TransitionModel& tm,
                    const ObservationParams& op, const StateLayout& layout,
                    const MeasurementFrame& z, const TrackerConfig& cfg,
                    int frame_index, StepInfo* info = nullptr);

struct MkfPrediction {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

MkfPrediction mkf_predict(const MkfTrack& track, const Gaussian& component,
                          const TransitionParams& tp);

struct MkfUpdateResult {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  double log_marginal = 0.0;  // log N(z | H x_hat, H P_hat H^T + R)
};

MkfUpdateResult mkf_update(const MkfPrediction& pred, const ObservationParams& op,
                           const StateLayout& layout, const MeasurementFrame& z);

std::vector<MkfTrack> mkf_step(const std::vector<MkfTrack>& tracks,
                               const TransitionModel& tm,
                               const ObservationParams& op,
                               const StateLayout& layout,
                               const MeasurementFrame& z,
                               const TrackerConfig& cfg, int frame_index,
                               StepInfo* info = nullptr);

Eigen::VectorXd point_estimate(const ParticleSet& ps);
Eigen::VectorXd point_estimate(const std::vector<MkfTrack>& tracks);

// Everything one arm chain needs to filter.
struct ChainModel {
  StateLayout layout;
  GaussianMixture prior;
  TransitionParams tp;
  ObservationParams op;
};

struct FrameDiagnostics {
  int frame = 0;
  double neff_left = 0.0;
  double neff_right = 0.0;
  bool resampled_left = false;
  bool resampled_right = false;
  double iter_seconds = 0.0;
};

struct TrackResult {
  std::vector<FullBodyEstimate> estimates;
  std::vector<FrameDiagnostics> diagnostics;
};

TrackResult track_sequence(const std::vector<MeasurementFrame>& frames,
                           const ChainModel& left, const ChainModel& right,
                           const TrackerConfig& cfg);

// Single-chain driver, used by track_sequence and directly by tests.
std::vector<Eigen::VectorXd> track_chain(const std::vector<MeasurementFrame>& frames,
                                         const ChainModel& chain,
                                         const TrackerConfig& cfg,
                                         std::uint64_t stream_tag,
                                         std::vector<StepInfo>* infos = nullptr);

}  // namespace ubtrack
