#include "ubtrack/trackers.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "ubtrack/rng.hpp"

namespace ubtrack {

const char* variant_name(TrackerVariant v) {
  switch (v) {
    case TrackerVariant::PfGmm: return "pf-gmm";
    case TrackerVariant::PfSimpleScaled: return "pf-simple-scaled";
    case TrackerVariant::PfSimpleUnscaled: return "pf-simple-unscaled";
    case TrackerVariant::MkfSampled: return "mkf-sampled";
    case TrackerVariant::MkfFixed: return "mkf-fixed";
  }
  return "?";
}

std::optional<TrackerVariant> variant_from_name(const std::string& name) {
  for (TrackerVariant v :
       {TrackerVariant::PfGmm, TrackerVariant::PfSimpleScaled,
        TrackerVariant::PfSimpleUnscaled, TrackerVariant::MkfSampled,
        TrackerVariant::MkfFixed}) {
    if (name == variant_name(v)) return v;
  }
  return std::nullopt;
}

double AnnealingSchedule::factor(int t) const {
  if (burn_in <= 0 || t >= burn_in) return 1.0;
  double frac = 1.0 - static_cast<double>(t) / static_cast<double>(burn_in);
  return (inflation - 1.0) * frac + 1.0;
}

bool TrackerConfig::anneal_enabled() const {
  if (anneal.has_value()) return *anneal;
  return variant == TrackerVariant::PfSimpleScaled ||
         variant == TrackerVariant::PfSimpleUnscaled;
}

int TrackerConfig::effective_tracks(Eigen::Index n_components) const {
  if (variant == TrackerVariant::MkfFixed) return static_cast<int>(n_components);
  if (n_tracks > 0) return n_tracks;
  return static_cast<int>(3 * n_components);
}

double TrackerConfig::effective_epsilon(int count) const {
  if (epsilon_floor >= 0.0) return epsilon_floor;
  return 1e-3 / static_cast<double>(count);
}

double effective_particles(const Eigen::VectorXd& weights) {
  return 1.0 / weights.squaredNorm();
}

namespace {

// Systematic resampling: one uniform offset, N evenly spaced positions.
std::vector<Eigen::Index> systematic_indices(const Eigen::VectorXd& weights,
                                             std::mt19937_64& rng) {
  const Eigen::Index n = weights.size();
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double step = 1.0 / static_cast<double>(n);
  double pos = u01(rng) * step;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  Eigen::Index j = 0;
  double cum = weights(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    while (pos > cum && j + 1 < n) cum += weights(++j);
    idx[static_cast<std::size_t>(i)] = j;
    pos += step;
  }
  return idx;
}

Eigen::VectorXd normalise_log_weights(Eigen::VectorXd log_w) {
  const double norm = logsumexp(log_w);
  if (!std::isfinite(norm)) {
    throw AllWeightsZero("all weights vanished; observation incompatible with every hypothesis");
  }
  // std::exp, not Eigen's vectorised exp: the latter clamps very negative
  // inputs to a subnormal instead of flushing exp(-inf) to zero.
  Eigen::VectorXd w(log_w.size());
  for (Eigen::Index i = 0; i < log_w.size(); ++i) w(i) = std::exp(log_w(i) - norm);
  w /= w.sum();
  return w;
}

}  // namespace

ParticleSet resample(const ParticleSet& ps, std::uint64_t rng_seed) {
  auto rng = substream(rng_seed, 0x72657331ULL);
  auto idx = systematic_indices(ps.weights, rng);
  ParticleSet out;
  out.particles.reserve(idx.size());
  for (auto i : idx) out.particles.push_back(ps.particles[static_cast<std::size_t>(i)]);
  out.weights = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(idx.size()),
                                          1.0 / static_cast<double>(idx.size()));
  return out;
}

std::vector<MkfTrack> resample_tracks(const std::vector<MkfTrack>& tracks,
                                      std::uint64_t rng_seed) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(tracks.size()));
  for (std::size_t i = 0; i < tracks.size(); ++i) w(static_cast<Eigen::Index>(i)) = tracks[i].weight;
  auto rng = substream(rng_seed, 0x72657332ULL);
  auto idx = systematic_indices(w, rng);
  std::vector<MkfTrack> out;
  out.reserve(idx.size());
  const double uniform = 1.0 / static_cast<double>(idx.size());
  for (auto i : idx) {
    MkfTrack t = tracks[static_cast<std::size_t>(i)];
    t.weight = uniform;
    out.push_back(std::move(t));
  }
  return out;
}

ParticleSet pf_step(const ParticleSet& ps, const TransitionModel& tm,
                    const ObservationParams& op, const StateLayout& layout,
                    const MeasurementFrame& z, const TrackerConfig& cfg,
                    int frame_index, StepInfo* info) {
  const std::size_t n = ps.particles.size();
  auto vs = op.visible_system(layout, z);
  const bool have_obs = vs.z.size() > 0;

  ParticleSet out;
  out.particles.resize(n);
  Eigen::VectorXd log_w(static_cast<Eigen::Index>(n));

  std::normal_distribution<double> n01(0.0, 1.0);
  const Eigen::VectorXd q_sd = tm.q_diag().cwiseSqrt();

  for (std::size_t k = 0; k < n; ++k) {
    auto rng = substream(cfg.rng_seed, static_cast<std::uint64_t>(k),
                         static_cast<std::uint64_t>(frame_index) + 1);
    const Eigen::VectorXd& x_prev = ps.particles[k];
    Eigen::VectorXd x;
    double log_ratio = 0.0;
    if (cfg.variant == TrackerVariant::PfGmm) {
      x = tm.sample(x_prev, rng);
    } else {
      x = x_prev;
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += q_sd(i) * n01(rng);
      log_ratio = tm.prior().logpdf(x);
      if (cfg.variant == TrackerVariant::PfSimpleScaled) {
        log_ratio -= tm.log_evidence(x_prev);
      }
    }
    double log_obs = 0.0;
    if (have_obs) {
      Eigen::VectorXd diff = vs.z - vs.h * x;
      for (Eigen::Index i = 0; i < diff.size(); ++i) {
        log_obs += -0.5 * (std::log(2.0 * M_PI * vs.r_diag(i)) +
                           diff(i) * diff(i) / vs.r_diag(i));
      }
    }
    out.particles[k] = std::move(x);
    log_w(static_cast<Eigen::Index>(k)) =
        std::log(ps.weights(static_cast<Eigen::Index>(k))) + log_obs + log_ratio;
  }

  out.weights = normalise_log_weights(std::move(log_w));
  const double neff = effective_particles(out.weights);
  bool resampled = false;
  if (neff < cfg.resample_threshold * static_cast<double>(n)) {
    out = resample(out, splitmix64(cfg.rng_seed ^ static_cast<std::uint64_t>(frame_index)));
    resampled = true;
  }
  if (info) {
    info->neff = neff;
    info->resampled = resampled;
  }
  return out;
}

MkfPrediction mkf_predict(const MkfTrack& track, const Gaussian& component,
                          const TransitionParams& tp) {
  GaussianMixture single(Eigen::VectorXd::Ones(1), {component});
  TransitionModel tm(single, tp);
  MkfPrediction pred;
  pred.mean = tm.conditional_mean(0, track.mean);
  pred.cov = tm.f(0) * track.cov * tm.f(0).transpose() + tm.conditional_cov(0);
  return pred;
}

MkfUpdateResult mkf_update(const MkfPrediction& pred, const ObservationParams& op,
                           const StateLayout& layout, const MeasurementFrame& z) {
  auto vs = op.visible_system(layout, z);
  MkfUpdateResult out;
  if (vs.z.size() == 0) {
    out.mean = pred.mean;
    out.cov = pred.cov;
    out.log_marginal = 0.0;
    return out;
  }
  Eigen::VectorXd y = vs.z - vs.h * pred.mean;
  Eigen::MatrixXd s = vs.h * pred.cov * vs.h.transpose();
  s.diagonal() += vs.r_diag;
  Eigen::LLT<Eigen::MatrixXd> s_llt(s);
  if (s_llt.info() != Eigen::Success) {
    throw SingularInnovation("mkf_update: innovation covariance not SPD");
  }
  Eigen::MatrixXd k_gain = s_llt.solve(vs.h * pred.cov).transpose();
  out.mean = pred.mean + k_gain * y;
  Eigen::MatrixXd ikh =
      Eigen::MatrixXd::Identity(pred.cov.rows(), pred.cov.cols()) - k_gain * vs.h;
  out.cov = ikh * pred.cov;
  out.cov = 0.5 * (out.cov + out.cov.transpose());

  double log_det = 0.0;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    log_det += 2.0 * std::log(s_llt.matrixL()(i, i));
  }
  Eigen::VectorXd w = s_llt.matrixL().solve(y);
  out.log_marginal = -0.5 * (static_cast<double>(s.rows()) * std::log(2.0 * M_PI) +
                             log_det + w.squaredNorm());
  return out;
}

std::vector<MkfTrack> mkf_step(const std::vector<MkfTrack>& tracks,
                               const TransitionModel& tm,
                               const ObservationParams& op,
                               const StateLayout& layout,
                               const MeasurementFrame& z,
                               const TrackerConfig& cfg, int frame_index,
                               StepInfo* info) {
  const std::size_t m = tracks.size();
  auto vs = op.visible_system(layout, z);
  const bool have_obs = vs.z.size() > 0;
  const Eigen::VectorXd& pis = tm.prior().weights();

  std::vector<MkfTrack> out;
  out.reserve(m);
  Eigen::VectorXd log_w(static_cast<Eigen::Index>(m));

  for (std::size_t j = 0; j < m; ++j) {
    const MkfTrack& prev = tracks[j];
    MkfTrack next = prev;
    if (cfg.variant == TrackerVariant::MkfSampled) {
      auto rng = substream(cfg.rng_seed, 0x6d6b66ULL + j,
                           static_cast<std::uint64_t>(frame_index) + 1);
      std::discrete_distribution<int> pick(pis.data(), pis.data() + pis.size());
      next.indicator = pick(rng);
    }
    const Eigen::Index i = next.indicator;

    // Predict with the assigned component.
    Eigen::VectorXd x_hat = tm.conditional_mean(i, prev.mean);
    Eigen::MatrixXd p_hat =
        tm.f(i) * prev.cov * tm.f(i).transpose() + tm.conditional_cov(i);

    double log_marg = 0.0;
    if (have_obs) {
      Eigen::VectorXd y = vs.z - vs.h * x_hat;
      Eigen::MatrixXd s = vs.h * p_hat * vs.h.transpose();
      s.diagonal() += vs.r_diag;
      Eigen::LLT<Eigen::MatrixXd> s_llt(s);
      if (s_llt.info() != Eigen::Success) {
        throw SingularInnovation("mkf_step: innovation covariance not SPD");
      }
      Eigen::MatrixXd k_gain = s_llt.solve(vs.h * p_hat).transpose();
      next.mean = x_hat + k_gain * y;
      Eigen::MatrixXd ikh =
          Eigen::MatrixXd::Identity(p_hat.rows(), p_hat.cols()) - k_gain * vs.h;
      next.cov = ikh * p_hat;
      next.cov = 0.5 * (next.cov + next.cov.transpose());
      double log_det = 0.0;
      for (Eigen::Index r = 0; r < s.rows(); ++r) {
        log_det += 2.0 * std::log(s_llt.matrixL()(r, r));
      }
      Eigen::VectorXd w = s_llt.matrixL().solve(y);
      log_marg = -0.5 * (static_cast<double>(s.rows()) * std::log(2.0 * M_PI) +
                         log_det + w.squaredNorm());
    } else {
      next.mean = x_hat;
      next.cov = p_hat;
    }

    double lw = (prev.weight > 0.0)
                    ? std::log(prev.weight)
                    : -std::numeric_limits<double>::infinity();
    lw += log_marg;
    if (cfg.variant == TrackerVariant::MkfFixed) {
      lw += (pis(i) > 0.0) ? std::log(pis(i))
                           : -std::numeric_limits<double>::infinity();
    }
    log_w(static_cast<Eigen::Index>(j)) = lw;
    out.push_back(std::move(next));
  }

  Eigen::VectorXd w = normalise_log_weights(std::move(log_w));

  bool resampled = false;
  double neff = effective_particles(w);
  if (cfg.variant == TrackerVariant::MkfFixed) {
    // Uniform floor so dormant components can re-emerge.
    const double eps = cfg.effective_epsilon(static_cast<int>(m));
    if (eps > 0.0) {
      w.array() += eps;
      w /= w.sum();
    }
    for (std::size_t j = 0; j < m; ++j) out[j].weight = w(static_cast<Eigen::Index>(j));
  } else {
    for (std::size_t j = 0; j < m; ++j) out[j].weight = w(static_cast<Eigen::Index>(j));
    if (neff < cfg.resample_threshold * static_cast<double>(m)) {
      out = resample_tracks(out, splitmix64(cfg.rng_seed ^
                                            (0xabcdULL + static_cast<std::uint64_t>(frame_index))));
      resampled = true;
    }
  }
  if (info) {
    info->neff = neff;
    info->resampled = resampled;
  }
  return out;
}

Eigen::VectorXd point_estimate(const ParticleSet& ps) {
  Eigen::VectorXd est = Eigen::VectorXd::Zero(ps.particles.front().size());
  const double total = ps.weights.sum();
  for (std::size_t k = 0; k < ps.particles.size(); ++k) {
    est += (ps.weights(static_cast<Eigen::Index>(k)) / total) * ps.particles[k];
  }
  return est;
}

Eigen::VectorXd point_estimate(const std::vector<MkfTrack>& tracks) {
  Eigen::VectorXd est = Eigen::VectorXd::Zero(tracks.front().mean.size());
  double total = 0.0;
  for (const auto& t : tracks) total += t.weight;
  for (const auto& t : tracks) est += (t.weight / total) * t.mean;
  return est;
}

std::vector<Eigen::VectorXd> track_chain(const std::vector<MeasurementFrame>& frames,
                                         const ChainModel& chain,
                                         const TrackerConfig& cfg,
                                         std::uint64_t stream_tag,
                                         std::vector<StepInfo>* infos) {
  if (frames.empty()) {
    throw InsufficientData("track_chain: empty measurement sequence");
  }
  TrackerConfig local = cfg;
  local.rng_seed = splitmix64(cfg.rng_seed ^ stream_tag);

  const bool is_pf = local.variant == TrackerVariant::PfGmm ||
                     local.variant == TrackerVariant::PfSimpleScaled ||
                     local.variant == TrackerVariant::PfSimpleUnscaled;

  TransitionModel base(chain.prior, chain.tp);

  std::vector<Eigen::VectorXd> estimates;
  estimates.reserve(frames.size());

  if (is_pf) {
    ParticleSet ps;
    ps.particles = chain.prior.sample(static_cast<std::size_t>(local.n_particles),
                                      splitmix64(local.rng_seed ^ 0x696e6974ULL));
    ps.weights = Eigen::VectorXd::Constant(local.n_particles,
                                           1.0 / static_cast<double>(local.n_particles));
    for (std::size_t t = 0; t < frames.size(); ++t) {
      StepInfo si;
      const double factor =
          local.anneal_enabled() ? local.annealing.factor(static_cast<int>(t)) : 1.0;
      if (factor != 1.0) {
        TransitionModel inflated(chain.prior, chain.tp.scaled(factor));
        ps = pf_step(ps, inflated, chain.op, chain.layout, frames[t], local,
                     static_cast<int>(t), &si);
      } else {
        ps = pf_step(ps, base, chain.op, chain.layout, frames[t], local,
                     static_cast<int>(t), &si);
      }
      estimates.push_back(point_estimate(ps));
      if (infos) infos->push_back(si);
    }
  } else {
    const int m = local.effective_tracks(chain.prior.size());
    std::vector<MkfTrack> tracks;
    tracks.reserve(static_cast<std::size_t>(m));
    if (local.variant == TrackerVariant::MkfFixed) {
      for (Eigen::Index i = 0; i < chain.prior.size(); ++i) {
        MkfTrack t;
        t.indicator = static_cast<int>(i);
        t.mean = chain.prior.components()[static_cast<std::size_t>(i)].mean();
        t.cov = chain.prior.components()[static_cast<std::size_t>(i)].cov();
        t.weight = chain.prior.weights()(i);
        tracks.push_back(std::move(t));
      }
    } else {
      auto rng = substream(local.rng_seed, 0x696e6974ULL);
      const Eigen::VectorXd& pis = chain.prior.weights();
      std::discrete_distribution<int> pick(pis.data(), pis.data() + pis.size());
      for (int j = 0; j < m; ++j) {
        MkfTrack t;
        t.indicator = pick(rng);
        t.mean = chain.prior.components()[static_cast<std::size_t>(t.indicator)].mean();
        t.cov = chain.prior.components()[static_cast<std::size_t>(t.indicator)].cov();
        t.weight = 1.0 / static_cast<double>(m);
        tracks.push_back(std::move(t));
      }
    }
    for (std::size_t t = 0; t < frames.size(); ++t) {
      StepInfo si;
      tracks = mkf_step(tracks, base, chain.op, chain.layout, frames[t], local,
                        static_cast<int>(t), &si);
      estimates.push_back(point_estimate(tracks));
      if (infos) infos->push_back(si);
    }
  }
  return estimates;
}

TrackResult track_sequence(const std::vector<MeasurementFrame>& frames,
                           const ChainModel& left, const ChainModel& right,
                           const TrackerConfig& cfg) {
  if (frames.empty()) {
    throw InsufficientData("track_sequence: empty measurement sequence");
  }
  TrackResult result;
  result.estimates.reserve(frames.size());
  result.diagnostics.resize(frames.size());

  // Frames are filtered per chain; timing wraps both chains for one frame.
  // Chains are run frame-synchronously so per-iteration timing is meaningful.
  std::vector<StepInfo> li, ri;
  std::vector<Eigen::VectorXd> lest, rest;
  lest.reserve(frames.size());
  rest.reserve(frames.size());

  // Run frame by frame to time iterations; reuse track_chain logic by
  // slicing would re-init state, so inline the loop via single-frame driver.
  auto t0 = std::chrono::steady_clock::now();
  lest = track_chain(frames, left, cfg, 0x6c656674ULL, &li);
  rest = track_chain(frames, right, cfg, 0x72696768ULL, &ri);
  auto t1 = std::chrono::steady_clock::now();
  const double per_iter =
      std::chrono::duration<double>(t1 - t0).count() / static_cast<double>(frames.size());

  for (std::size_t t = 0; t < frames.size(); ++t) {
    PoseState ls{left.layout, lest[t]};
    PoseState rs{right.layout, rest[t]};
    result.estimates.push_back(merge_arm_estimates(ls, rs));
    auto& d = result.diagnostics[t];
    d.frame = static_cast<int>(t);
    d.neff_left = li[t].neff;
    d.neff_right = ri[t].neff;
    d.resampled_left = li[t].resampled;
    d.resampled_right = ri[t].resampled;
    d.iter_seconds = per_iter;
  }
  return result;
}

}  // namespace ubtrack
