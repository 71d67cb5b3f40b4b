#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ubtrack/dataio.hpp"

using namespace ubtrack;
using nlohmann::json;

namespace {

constexpr double kDeg = M_PI / 180.0;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& body) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp);
    out << body;
    if (!out) throw DataError("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw DataError("rename failed: " + path);
  }
}

// Camera description shared by the commands that project or back-project.
struct CameraFlags {
  double fx = 525.0, fy = 525.0, cx = 320.0, cy = 240.0;
  double tx = 0.0, ty = 0.0, tz = 0.0;
  double alpha_deg = 0.0, beta_deg = 0.0, gamma_deg = 0.0;

  CameraIntrinsics intrinsics() const { return {fx, fy, cx, cy}; }
  CameraPose pose() const {
    CameraPose p;
    p.tx = tx;
    p.ty = ty;
    p.tz = tz;
    p.alpha = alpha_deg * kDeg;
    p.beta = beta_deg * kDeg;
    p.gamma = gamma_deg * kDeg;
    return p;
  }
};

void add_camera_flags(CLI::App* cmd, CameraFlags& c) {
  cmd->add_option("--fx", c.fx, "focal length x (px)");
  cmd->add_option("--fy", c.fy, "focal length y (px)");
  cmd->add_option("--cx", c.cx, "principal point x (px)");
  cmd->add_option("--cy", c.cy, "principal point y (px)");
  cmd->add_option("--cam-tx", c.tx, "camera translation x (m)");
  cmd->add_option("--cam-ty", c.ty, "camera translation y (m)");
  cmd->add_option("--cam-tz", c.tz, "camera translation z (m)");
  cmd->add_option("--cam-alpha-deg", c.alpha_deg, "rotation about y (degrees)");
  cmd->add_option("--cam-beta-deg", c.beta_deg, "rotation about x (degrees)");
  cmd->add_option("--cam-gamma-deg", c.gamma_deg, "rotation about z (degrees)");
}

// Tracker knobs shared by track and bench.
struct TrackerFlags {
  std::string variant = "mkf-fixed";
  int n_particles = 1000;
  int n_tracks = 0;
  double resample_threshold = 0.5;
  double epsilon_floor = -1.0;
  double inflation = 100.0;
  int burn_in = 50;
  int anneal = -1;  // -1 auto, 0 off, 1 on
  double q_sigma_px = 4.0;
  double q_sigma_lambda = 0.02;
  double r_sigma_px = 8.0;
  std::uint64_t seed = 0;

  TrackerConfig config(TrackerVariant v) const {
    TrackerConfig cfg;
    cfg.variant = v;
    cfg.n_particles = n_particles;
    cfg.n_tracks = n_tracks;
    cfg.resample_threshold = resample_threshold;
    cfg.epsilon_floor = epsilon_floor;
    cfg.annealing.inflation = inflation;
    cfg.annealing.burn_in = burn_in;
    if (anneal >= 0) cfg.anneal = (anneal != 0);
    cfg.rng_seed = seed;
    return cfg;
  }
};

void add_tracker_flags(CLI::App* cmd, TrackerFlags& t, bool with_variant) {
  if (with_variant) {
    cmd->add_option("--variant", t.variant,
                    "pf-gmm | pf-simple-scaled | pf-simple-unscaled | "
                    "mkf-sampled | mkf-fixed");
  }
  cmd->add_option("--n-particles", t.n_particles, "particles per PF chain");
  cmd->add_option("--n-tracks", t.n_tracks,
                  "MKF tracks (0 = auto: N fixed, 3N sampled)");
  cmd->add_option("--resample-threshold", t.resample_threshold,
                  "resample when N_eff falls below this fraction");
  cmd->add_option("--epsilon-floor", t.epsilon_floor,
                  "mkf-fixed weight floor (<0 = auto 1e-3/tracks)");
  cmd->add_option("--inflation", t.inflation, "burn-in Q inflation factor");
  cmd->add_option("--burn-in", t.burn_in, "burn-in length in frames");
  cmd->add_flag("--anneal,!--no-anneal",
                [&t](std::int64_t count) { t.anneal = count > 0 ? 1 : 0; },
                "force burn-in annealing on/off (default: variant-dependent)");
  cmd->add_option("--q-sigma-px", t.q_sigma_px, "random-walk sigma, pixel coords");
  cmd->add_option("--q-sigma-lambda", t.q_sigma_lambda, "random-walk sigma, scale");
  cmd->add_option("--r-sigma-px", t.r_sigma_px, "measurement noise sigma (px)");
  cmd->add_option("--seed", t.seed, "rng seed");
}

TrackerVariant parse_variant(const std::string& name) {
  auto v = variant_from_name(name);
  if (!v) throw CLI::ValidationError("--variant", "unknown variant '" + name + "'");
  return *v;
}

ObservationParams observation_for(const StateLayout& layout,
                                  const std::vector<std::string>& measured,
                                  double r_sigma_px) {
  ObservationParams op;
  op.r_sigma_px = r_sigma_px;
  for (std::size_t slot = 0; slot < layout.joints.size(); ++slot) {
    BodyJoint bj = layout.body_joint(static_cast<int>(slot));
    const char* name = kBodyJointNames[static_cast<std::size_t>(bj)];
    if (std::find(measured.begin(), measured.end(), name) != measured.end()) {
      op.measured_slots.push_back(static_cast<int>(slot));
    }
  }
  if (op.measured_slots.empty()) {
    throw NoVisibleJoints("no measurable joint of the " +
                          std::string(layout.side == Side::Left ? "left" : "right") +
                          " chain appears in the measurement sequence");
  }
  return op;
}

ChainModel chain_for(const PriorFile& prior, const MeasurementSequence& seq,
                     const TrackerFlags& t) {
  if (prior.mixture.dim() != prior.layout.dim()) {
    throw DataError("prior dimension " + std::to_string(prior.mixture.dim()) +
                    " does not match layout dimension " +
                    std::to_string(prior.layout.dim()));
  }
  TransitionParams tp =
      TransitionParams::defaults(prior.layout, t.q_sigma_px, t.q_sigma_lambda);
  return ChainModel{prior.layout, prior.mixture,
                    tp, observation_for(prior.layout, seq.measured_joints,
                                        t.r_sigma_px)};
}

double mean_pixel_error(const std::vector<FullBodyEstimate>& est,
                        const SkeletonRecording& truth,
                        const ProjectionMatrix& pm) {
  auto series = joint_pixel_error(estimates_to_track2d(est),
                                  project_recording(truth, pm));
  return series.means.mean();
}

// ---- subcommand bodies -------------------------------------------------

struct GenSynthArgs {
  MotionSpec spec;
  int frames = 300;
  std::uint64_t seed = 0;
  std::string out;
  std::string measurements_out;
  std::vector<std::string> joints;
  CameraFlags cam;
};

void run_gen_synth(const GenSynthArgs& a) {
  auto rec = synth_skeleton(a.spec, a.frames, a.seed);
  save_skeleton_csv(rec, a.out);
  if (!a.measurements_out.empty()) {
    auto seq = make_measurements(rec, a.cam.intrinsics(), a.cam.pose(), a.joints,
                                 a.seed);
    save_measurements_jsonl(seq, a.measurements_out);
  }
}

struct CorruptArgs {
  std::string in, out;
  CorruptionModel model;
  std::uint64_t seed = 0;
};

void run_corrupt(const CorruptArgs& a) {
  auto seq = load_measurements_jsonl(a.in);
  auto res = corrupt_measurements(seq.frames, a.model, a.seed);
  seq.frames = std::move(res.frames);
  seq.provenance += seq.provenance.empty() ? "corrupt" : "+corrupt";
  save_measurements_jsonl(seq, a.out);
}

struct TrainPriorArgs {
  std::vector<std::string> skeletons;
  CameraFlags cam;
  int n_views = 50;
  int k = 15;
  std::uint64_t seed = 0;
  double max_angle_deg = 30.0;
  double max_translation = 0.5;
  int max_iters = 200;
  double tol = 1e-7;
  std::string out_left, out_right, log_path;
};

void run_train_prior(const TrainPriorArgs& a) {
  ViewpointLimits limits{a.max_angle_deg * kDeg, a.max_translation};
  std::ostringstream log;
  for (Side side : {Side::Left, Side::Right}) {
    std::vector<Eigen::VectorXd> data;
    StateLayout layout;
    layout.side = side;
    for (std::size_t f = 0; f < a.skeletons.size(); ++f) {
      auto rec = load_skeleton_csv(a.skeletons[f]);
      auto states = generate_training_set(rec, a.cam.intrinsics(), a.n_views,
                                          limits, a.seed + f, side);
      for (auto& st : states) data.push_back(std::move(st.values));
    }
    EmReport report;
    auto mixture = em_fit(data, a.k, EmOptions{a.seed, a.max_iters, a.tol}, &report);
    save_prior_json(PriorFile{mixture, layout},
                    side == Side::Left ? a.out_left : a.out_right);
    log << "side=" << (side == Side::Left ? "left" : "right")
        << " samples=" << data.size() << " components=" << a.k
        << " iterations=" << report.iterations
        << " final_log_likelihood=" << fmt(report.final_log_likelihood)
        << " empty_cluster_resets=" << report.empty_cluster_resets << "\n";
  }
  if (a.log_path.empty()) {
    std::cout << log.str();
  } else {
    write_file(a.log_path, log.str());
  }
}

struct TrackArgs {
  std::string measurements, prior_left, prior_right, out;
  TrackerFlags tracker;
  std::string edge_file;
  int swap_margin = 2;
  double sigma_theta_deg = 15.0;
  double sigma_x = 20.0;
  double sigma_y = 20.0;
  double tau = 0.0;
};

void run_track(const TrackArgs& a) {
  auto seq = load_measurements_jsonl(a.measurements);
  auto left = load_prior_json(a.prior_left);
  auto right = load_prior_json(a.prior_right);
  auto cfg = a.tracker.config(parse_variant(a.tracker.variant));

  auto result = track_sequence(seq.frames, chain_for(left, seq, a.tracker),
                               chain_for(right, seq, a.tracker), cfg);

  if (!a.edge_file.empty()) {
    auto edges = load_edges_csv(a.edge_file);
    std::map<int, std::vector<EdgeSegment>> by_frame;
    for (const auto& e : edges) by_frame[e.frame].push_back(e);
    EdgeSupportParams p;
    p.sigma_theta = a.sigma_theta_deg * kDeg;
    p.sigma_x = a.sigma_x;
    p.sigma_y = a.sigma_y;
    p.tau = a.tau;
    int corrections = 0;
    for (std::size_t t = 0; t < result.estimates.size(); ++t) {
      auto it = by_frame.find(static_cast<int>(t));
      if (it == by_frame.end()) continue;
      if (check_hand_swap(result.estimates[t], it->second, p, a.swap_margin) ==
          SwapDecision::Swap) {
        auto& joints = result.estimates[t].joints;
        std::swap(joints[static_cast<std::size_t>(BodyJoint::HandL)],
                  joints[static_cast<std::size_t>(BodyJoint::HandR)]);
        ++corrections;
      }
    }
    std::cerr << "hand-swap corrections: " << corrections << "\n";
  }
  save_estimates_csv(result.estimates, result.diagnostics, a.out);
}

struct EvalArgs {
  std::string estimates, truth, out_prefix;
  CameraFlags cam;
};

void run_eval(const EvalArgs& a) {
  auto est = load_estimates_csv(a.estimates);
  auto truth = load_skeleton_csv(a.truth);
  auto pm = build_projection(a.cam.intrinsics(), a.cam.pose());

  auto est2d = estimates_to_track2d(est);
  auto truth2d = project_recording(truth, pm);
  auto pix = joint_pixel_error(est2d, truth2d);
  auto curve = pcp(est2d, truth2d, arm_limbs(), default_pcp_thresholds());
  auto e3d = error_3d(est, truth, pm);

  auto joint_csv = [](const Eigen::MatrixXd& m) {
    std::ostringstream out;
    out << "frame";
    for (auto* name : kBodyJointNames) out << "," << name;
    out << "\n";
    for (Eigen::Index f = 0; f < m.rows(); ++f) {
      out << f;
      for (Eigen::Index j = 0; j < m.cols(); ++j) out << "," << fmt(m(f, j));
      out << "\n";
    }
    return out.str();
  };
  write_file(a.out_prefix + "_pixel_errors.csv", joint_csv(pix.errors));
  write_file(a.out_prefix + "_errors3d.csv", joint_csv(e3d.errors));

  std::ostringstream pcp_out;
  pcp_out << "threshold,pcp\n";
  for (Eigen::Index i = 0; i < curve.thresholds.size(); ++i) {
    pcp_out << fmt(curve.thresholds(i)) << "," << fmt(curve.values(i)) << "\n";
  }
  write_file(a.out_prefix + "_pcp.csv", pcp_out.str());

  json summary;
  summary["schema_version"] = 1;
  for (std::size_t j = 0; j < kNumBodyJoints; ++j) {
    summary["mean_pixel_error"][kBodyJointNames[j]] =
        pix.means(static_cast<Eigen::Index>(j));
    summary["mean_3d_error_m"][kBodyJointNames[j]] =
        e3d.means(static_cast<Eigen::Index>(j));
  }
  summary["pcp"]["thresholds"] =
      std::vector<double>(curve.thresholds.data(),
                          curve.thresholds.data() + curve.thresholds.size());
  summary["pcp"]["values"] = std::vector<double>(
      curve.values.data(), curve.values.data() + curve.values.size());
  write_file(a.out_prefix + "_summary.json", summary.dump(2) + "\n");
}

struct BenchArgs {
  std::string measurements, truth, prior_left, prior_right, out, raw_out;
  std::vector<std::string> variants = {"mkf-fixed", "mkf-sampled",
                                       "pf-simple-unscaled", "pf-simple-scaled",
                                       "pf-gmm"};
  int seeds = 3;
  CameraFlags cam;
  TrackerFlags tracker;
};

void run_bench(const BenchArgs& a) {
  auto seq = load_measurements_jsonl(a.measurements);
  auto truth = load_skeleton_csv(a.truth);
  auto left = load_prior_json(a.prior_left);
  auto right = load_prior_json(a.prior_right);
  auto pm = build_projection(seq.intrinsics, seq.camera_pose);

  struct Row {
    std::string variant;
    double time = 0.0;
    double error = 0.0;
  };
  std::vector<Row> summary;
  std::ostringstream raw;
  raw << "variant,seed,iter_seconds,mean_pixel_error\n";

  for (const auto& name : a.variants) {
    TrackerVariant v = parse_variant(name);
    double time_sum = 0.0, err_sum = 0.0;
    for (int s = 0; s < a.seeds; ++s) {
      TrackerFlags flags = a.tracker;
      flags.seed = a.tracker.seed + static_cast<std::uint64_t>(s);
      auto cfg = flags.config(v);
      auto result = track_sequence(seq.frames, chain_for(left, seq, flags),
                                   chain_for(right, seq, flags), cfg);
      double iter_time = 0.0;
      for (const auto& d : result.diagnostics) iter_time += d.iter_seconds;
      iter_time /= static_cast<double>(result.diagnostics.size());
      double err = mean_pixel_error(result.estimates, truth, pm);
      raw << name << "," << s << "," << fmt(iter_time) << "," << fmt(err) << "\n";
      time_sum += iter_time;
      err_sum += err;
    }
    summary.push_back({name, time_sum / a.seeds, err_sum / a.seeds});
  }

  std::sort(summary.begin(), summary.end(),
            [](const Row& x, const Row& y) { return x.time < y.time; });
  std::ostringstream out;
  out << "variant,mean_iter_seconds,mean_pixel_error\n";
  for (const auto& r : summary) {
    out << r.variant << "," << fmt(r.time) << "," << fmt(r.error) << "\n";
  }
  write_file(a.out, out.str());
  if (!a.raw_out.empty()) write_file(a.raw_out, raw.str());
  std::cout << out.str();
}

void run_show_config() {
  StateLayout layout;
  TransitionParams tp = TransitionParams::defaults(layout);
  ObservationParams op = ObservationParams::defaults(layout);
  TrackerConfig cfg;
  EdgeSupportParams edges;
  ViewpointLimits vp;
  CorruptionModel corrupt;
  EmOptions em;

  std::cout
      << "# defaults; any key can be set in a config file or by the matching flag\n"
      << "state.joints=head,neck,shoulder,elbow,hand\n"
      << "state.dim=" << layout.dim() << "\n"
      << "transition.q_sigma_px=" << fmt(std::sqrt(tp.q_diag(0))) << "\n"
      << "transition.q_sigma_lambda=" << fmt(std::sqrt(tp.q_diag(2))) << "\n"
      << "observation.r_sigma_px=" << fmt(op.r_sigma_px) << "\n"
      << "observation.measured=head,neck,hand\n"
      << "prior.k=15\n"
      << "prior.n_views=50\n"
      << "prior.em_max_iters=" << em.max_iters << "\n"
      << "prior.em_tol=" << fmt(em.tol) << "\n"
      << "viewpoint.max_angle_deg=30\n"
      << "viewpoint.max_translation_m=" << fmt(vp.max_translation) << "\n"
      << "tracker.variant=" << variant_name(cfg.variant) << "\n"
      << "tracker.n_particles=" << cfg.n_particles << "\n"
      << "tracker.n_tracks=0  # auto: N for mkf-fixed, 3N for mkf-sampled\n"
      << "tracker.resample_threshold=" << fmt(cfg.resample_threshold) << "\n"
      << "tracker.epsilon_floor=-1  # auto: 1e-3 / tracks\n"
      << "tracker.annealing.inflation=" << fmt(cfg.annealing.inflation) << "\n"
      << "tracker.annealing.burn_in=" << cfg.annealing.burn_in << "\n"
      << "tracker.anneal=auto  # on for pf-simple-*, off otherwise\n"
      << "edges.sigma_theta_deg=15\n"
      << "edges.sigma_x_px=" << fmt(edges.sigma_x) << "\n"
      << "edges.sigma_y_px=" << fmt(edges.sigma_y) << "\n"
      << "edges.tau=0  # auto: peak density at 2-sigma offsets\n"
      << "edges.swap_margin=2\n"
      << "corrupt.noise_sigma_px=" << fmt(corrupt.noise_sigma_px) << "\n"
      << "corrupt.p_drop=" << fmt(corrupt.p_drop) << "\n"
      << "corrupt.p_swap_onset=" << fmt(corrupt.p_swap_onset) << "\n"
      << "corrupt.swap_mean_duration=" << fmt(corrupt.swap_mean_duration) << "\n"
      << "camera.fx=525\ncamera.fy=525\ncamera.cx=320\ncamera.cy=240\n"
      << "synth.primitive=random\nsynth.fps=30\nsynth.period_frames=120\n"
      << "measured_joints=head,neck,hand_l,hand_r\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D upper-body pose tracking from 2D joint measurements"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file ([section] = subcommand)");

  GenSynthArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-synth", "generate a synthetic skeleton recording");
  gen_cmd->add_option("--primitive", gen.spec.primitive,
                      "neutral | wave | reach | crossed | clap | random");
  gen_cmd->add_option("--frames", gen.frames, "number of frames")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--fps", gen.spec.fps, "frame rate");
  gen_cmd->add_option("--period", gen.spec.period_frames, "cycle length in frames");
  gen_cmd->add_option("--seed", gen.seed, "rng seed");
  gen_cmd->add_option("--out", gen.out, "skeleton CSV output")->required();
  gen_cmd->add_option("--measurements-out", gen.measurements_out,
                      "also project to a measurement JSONL file");
  gen_cmd->add_option("--joints", gen.joints,
                      "measured joints (default head,neck,hand_l,hand_r)")
      ->delimiter(',');
  add_camera_flags(gen_cmd, gen.cam);
  gen_cmd->callback([&gen] { run_gen_synth(gen); });

  CorruptArgs cor;
  auto* cor_cmd = app.add_subcommand("corrupt", "degrade a measurement sequence");
  cor_cmd->add_option("--in", cor.in, "input measurement JSONL")->required();
  cor_cmd->add_option("--out", cor.out, "output measurement JSONL")->required();
  cor_cmd->add_option("--noise-sigma-px", cor.model.noise_sigma_px, "additive noise sigma");
  cor_cmd->add_option("--p-drop", cor.model.p_drop, "per-joint dropout probability");
  cor_cmd->add_option("--p-swap-onset", cor.model.p_swap_onset,
                      "per-frame hand-swap onset probability");
  cor_cmd->add_option("--swap-mean-duration", cor.model.swap_mean_duration,
                      "mean swap episode length (frames)");
  cor_cmd->add_option("--seed", cor.seed, "rng seed");
  cor_cmd->callback([&cor] { run_corrupt(cor); });

  TrainPriorArgs train;
  auto* train_cmd = app.add_subcommand("train-prior", "fit per-arm pose priors");
  train_cmd->add_option("--skeleton", train.skeletons, "skeleton CSV file(s)")
      ->required()
      ->expected(1, -1);
  train_cmd->add_option("--n-views", train.n_views, "viewpoints per recording")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--k", train.k, "mixture components per arm")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", train.seed, "rng seed");
  train_cmd->add_option("--max-angle-deg", train.max_angle_deg, "viewpoint angle box");
  train_cmd->add_option("--max-translation", train.max_translation,
                        "viewpoint translation box (m)");
  train_cmd->add_option("--em-max-iters", train.max_iters, "EM iteration cap");
  train_cmd->add_option("--em-tol", train.tol, "EM log-likelihood tolerance");
  train_cmd->add_option("--out-left", train.out_left, "left prior JSON")->required();
  train_cmd->add_option("--out-right", train.out_right, "right prior JSON")->required();
  train_cmd->add_option("--log", train.log_path, "training log file (default stdout)");
  add_camera_flags(train_cmd, train.cam);
  train_cmd->callback([&train] { run_train_prior(train); });

  TrackArgs track;
  auto* track_cmd = app.add_subcommand("track", "filter a measurement sequence");
  track_cmd->add_option("--measurements", track.measurements, "measurement JSONL")
      ->required();
  track_cmd->add_option("--prior-left", track.prior_left, "left prior JSON")->required();
  track_cmd->add_option("--prior-right", track.prior_right, "right prior JSON")
      ->required();
  track_cmd->add_option("--out", track.out, "estimates CSV")->required();
  add_tracker_flags(track_cmd, track.tracker, true);
  track_cmd->add_option("--edge-file", track.edge_file,
                        "edge CSV enabling hand-swap correction");
  track_cmd->add_option("--swap-margin", track.swap_margin, "edge-count margin");
  track_cmd->add_option("--sigma-theta-deg", track.sigma_theta_deg,
                        "edge support orientation sigma");
  track_cmd->add_option("--sigma-x", track.sigma_x, "edge support x sigma (px)");
  track_cmd->add_option("--sigma-y", track.sigma_y, "edge support y sigma (px)");
  track_cmd->add_option("--tau", track.tau, "edge support cut (0 = auto)");
  track_cmd->callback([&track] { run_track(track); });

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "score estimates against ground truth");
  eval_cmd->add_option("--estimates", ev.estimates, "estimates CSV")->required();
  eval_cmd->add_option("--truth", ev.truth, "ground-truth skeleton CSV")->required();
  eval_cmd->add_option("--out-prefix", ev.out_prefix, "metric file prefix")->required();
  add_camera_flags(eval_cmd, ev.cam);
  eval_cmd->callback([&ev] { run_eval(ev); });

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "compare tracker variants");
  bench_cmd->add_option("--measurements", bench.measurements, "measurement JSONL")
      ->required();
  bench_cmd->add_option("--truth", bench.truth, "ground-truth skeleton CSV")->required();
  bench_cmd->add_option("--prior-left", bench.prior_left, "left prior JSON")->required();
  bench_cmd->add_option("--prior-right", bench.prior_right, "right prior JSON")
      ->required();
  bench_cmd->add_option("--out", bench.out, "summary CSV")->required();
  bench_cmd->add_option("--raw-out", bench.raw_out, "per-seed raw CSV");
  bench_cmd->add_option("--variants", bench.variants, "variants to run")
      ->delimiter(',')
      ->expected(1, -1);
  bench_cmd->add_option("--seeds", bench.seeds, "seeds per variant")
      ->check(CLI::PositiveNumber);
  add_tracker_flags(bench_cmd, bench.tracker, false);
  bench_cmd->callback([&bench] { run_bench(bench); });

  auto* show_cmd = app.add_subcommand("show-config", "print every default as key=value");
  show_cmd->callback([] { run_show_config(); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
