#include <doctest.h>

#include <cmath>
#include <random>

#include "ubtrack/trackers.hpp"

using namespace ubtrack;

namespace {

// Single-joint chain: state (u, v, lambda), head measurable.
StateLayout tiny_layout() {
  StateLayout l;
  l.joints = {"head"};
  return l;
}

MeasurementFrame head_frame(int t, double u, double v) {
  MeasurementFrame z;
  z.t = t;
  z.joints[static_cast<std::size_t>(BodyJoint::Head)] = {u, v, true};
  return z;
}

// Reference Kalman recursion on the conditional model, written with plain
// inverses so it shares nothing with the production path.
struct RefKalman {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  // Returns the log marginal likelihood of z.
  double step(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
              const Eigen::MatrixXd& q, const Eigen::MatrixXd& h,
              const Eigen::MatrixXd& r, const Eigen::VectorXd& z) {
    Eigen::MatrixXd sc = (q.inverse() + sigma.inverse()).inverse();
    Eigen::MatrixXd f = sc * q.inverse();
    Eigen::MatrixXd b = sc * sigma.inverse();
    mean = f * mean + b * mu;
    cov = f * cov * f.transpose() + sc;
    Eigen::MatrixXd s = h * cov * h.transpose() + r;
    Eigen::VectorXd y = z - h * mean;
    Eigen::MatrixXd k = cov * h.transpose() * s.inverse();
    mean += k * y;
    cov = (Eigen::MatrixXd::Identity(cov.rows(), cov.cols()) - k * h) * cov;
    return -0.5 * (static_cast<double>(s.rows()) * std::log(2.0 * M_PI) +
                   std::log(s.determinant()) + y.dot(s.inverse() * y));
  }
};

ChainModel tiny_chain(const GaussianMixture& prior, double q_px = 1.0,
                      double q_lambda = 0.1, double r_px = 2.0) {
  TransitionParams tp;
  tp.q_diag = (Eigen::VectorXd(3) << q_px * q_px, q_px * q_px,
               q_lambda * q_lambda)
                  .finished();
  StateLayout layout = tiny_layout();
  ObservationParams op = ObservationParams::defaults(layout);
  op.r_sigma_px = r_px;
  return ChainModel{layout, prior, tp, op};
}

GaussianMixture single_prior(const Eigen::Vector3d& mu, double var) {
  return GaussianMixture(Eigen::VectorXd::Ones(1),
                         {Gaussian(mu, var * Eigen::MatrixXd::Identity(3, 3))});
}

}  // namespace

TEST_CASE("effective_particles") {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(10, 0.1);
  CHECK(effective_particles(w) == doctest::Approx(10.0));
  Eigen::VectorXd one = Eigen::VectorXd::Zero(5);
  one(2) = 1.0;
  CHECK(effective_particles(one) == doctest::Approx(1.0));
  Eigen::VectorXd half(4);
  half << 0.5, 0.5, 0.0, 0.0;
  CHECK(effective_particles(half) == doctest::Approx(2.0));
}

TEST_CASE("annealing schedule") {
  AnnealingSchedule a{100.0, 50};
  CHECK(a.factor(0) == doctest::Approx(100.0));
  CHECK(a.factor(50) == doctest::Approx(1.0));
  CHECK(a.factor(100) == doctest::Approx(1.0));
  CHECK(a.factor(25) == doctest::Approx(50.5));
}

TEST_CASE("resample") {
  ParticleSet ps;
  for (int i = 0; i < 8; ++i) {
    ps.particles.push_back(Eigen::VectorXd::Constant(1, static_cast<double>(i)));
  }
  SUBCASE("degenerate weights copy one particle") {
    ps.weights = Eigen::VectorXd::Zero(8);
    ps.weights(3) = 1.0;
    auto out = resample(ps, 1);
    for (const auto& p : out.particles) CHECK(p(0) == doctest::Approx(3.0));
    CHECK(out.weights(0) == doctest::Approx(1.0 / 8.0));
  }
  SUBCASE("uniform weights keep every particle within +-1 copy") {
    ps.weights = Eigen::VectorXd::Constant(8, 1.0 / 8.0);
    auto out = resample(ps, 2);
    std::vector<int> counts(8, 0);
    for (const auto& p : out.particles) ++counts[static_cast<int>(p(0))];
    for (int c : counts) {
      CHECK(c >= 0);
      CHECK(std::abs(c - 1) <= 1);
    }
  }
  SUBCASE("resampled mean is unbiased") {
    ps.weights.resize(8);
    ps.weights << 0.4, 0.2, 0.1, 0.1, 0.05, 0.05, 0.05, 0.05;
    double target = 0.0;
    for (int i = 0; i < 8; ++i) target += ps.weights(i) * ps.particles[i](0);
    double acc = 0.0;
    const int trials = 1000;
    for (int s = 0; s < trials; ++s) {
      auto out = resample(ps, static_cast<std::uint64_t>(s));
      for (const auto& p : out.particles) acc += p(0) / 8.0;
    }
    double mean = acc / trials;
    // systematic resampling variance per trial is tiny; 3 wide std errors
    CHECK(mean == doctest::Approx(target).epsilon(0.02));
  }
}

TEST_CASE("pf posterior matches Kalman oracle for a single-component prior") {
  Eigen::Vector3d mu(100.0, 120.0, 2.0);
  auto prior = single_prior(mu, 100.0);
  ChainModel chain = tiny_chain(prior, 2.0, 0.1, 3.0);

  const int t_steps = 12;
  std::vector<MeasurementFrame> frames;
  std::mt19937_64 mrng(77);
  std::normal_distribution<double> n01;
  for (int t = 0; t < t_steps; ++t) {
    frames.push_back(head_frame(t, 104.0 + 2.0 * n01(mrng), 118.0 + 2.0 * n01(mrng)));
  }

  // oracle
  RefKalman ref{mu, 100.0 * Eigen::MatrixXd::Identity(3, 3)};
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 3);
  h(0, 0) = h(1, 1) = 1.0;
  Eigen::MatrixXd r = 9.0 * Eigen::MatrixXd::Identity(2, 2);
  for (const auto& z : frames) {
    const auto& jm = z.joints[static_cast<std::size_t>(BodyJoint::Head)];
    ref.step(mu, 100.0 * Eigen::MatrixXd::Identity(3, 3), chain.tp.q(), h, r,
             (Eigen::VectorXd(2) << jm.u, jm.v).finished());
  }

  auto mean_err = [&](TrackerVariant variant) {
    const int n_s = 4000;
    double err_sum = 0.0;
    const int seeds = 5;
    for (int s = 0; s < seeds; ++s) {
      TrackerConfig cfg;
      cfg.variant = variant;
      cfg.n_particles = n_s;
      cfg.anneal = false;
      cfg.rng_seed = static_cast<std::uint64_t>(1000 + s);
      auto est = track_chain(frames, chain, cfg, 0);
      err_sum += (est.back().head<2>() -
                  Eigen::Vector2d(ref.mean(0), ref.mean(1))).norm();
    }
    return err_sum / seeds;
  };
  // posterior std is ~1.4 px; Monte Carlo error ~ sigma/sqrt(N_s)
  CHECK(mean_err(TrackerVariant::PfGmm) < 0.4);
  CHECK(mean_err(TrackerVariant::PfSimpleScaled) < 0.4);
  // the unscaled weights skip the evidence term, so only rough agreement
  CHECK(mean_err(TrackerVariant::PfSimpleUnscaled) < 1.0);
}

TEST_CASE("pf scaled and unscaled agree when all particles share a parent") {
  Eigen::VectorXd w(2);
  w << 0.5, 0.5;
  GaussianMixture prior(
      w, {Gaussian(Eigen::Vector3d(0, 0, 1), Eigen::MatrixXd::Identity(3, 3)),
          Gaussian(Eigen::Vector3d(5, 5, 2), Eigen::MatrixXd::Identity(3, 3))});
  ChainModel chain = tiny_chain(prior);
  TransitionModel tm(chain.prior, chain.tp);

  ParticleSet ps;
  for (int i = 0; i < 64; ++i) ps.particles.push_back(Eigen::Vector3d(1.0, 2.0, 1.5));
  ps.weights = Eigen::VectorXd::Constant(64, 1.0 / 64.0);
  auto z = head_frame(0, 1.0, 2.0);

  TrackerConfig cfg;
  cfg.resample_threshold = 0.0;  // keep raw weights comparable
  cfg.rng_seed = 9;
  cfg.variant = TrackerVariant::PfSimpleScaled;
  auto scaled = pf_step(ps, tm, chain.op, chain.layout, z, cfg, 0);
  cfg.variant = TrackerVariant::PfSimpleUnscaled;
  auto unscaled = pf_step(ps, tm, chain.op, chain.layout, z, cfg, 0);

  for (int i = 0; i < 64; ++i) {
    CHECK(scaled.particles[i] == unscaled.particles[i]);
    CHECK(scaled.weights(i) == doctest::Approx(unscaled.weights(i)).epsilon(1e-10));
  }
}

TEST_CASE("mkf_predict") {
  TransitionParams tp;
  tp.q_diag = Eigen::VectorXd::Ones(3);
  Gaussian comp(Eigen::Vector3d(2.0, 2.0, 2.0), Eigen::MatrixXd::Identity(3, 3));

  SUBCASE("fixed point at the component mean") {
    MkfTrack t{0, comp.mean(), Eigen::MatrixXd::Identity(3, 3), 1.0};
    auto pred = mkf_predict(t, comp, tp);
    CHECK((pred.mean - comp.mean()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("Q = Sigma = I averages towards the mean") {
    MkfTrack t{0, Eigen::Vector3d::Zero(), Eigen::MatrixXd::Zero(3, 3), 1.0};
    t.cov = 1e-12 * Eigen::MatrixXd::Identity(3, 3);
    auto pred = mkf_predict(t, comp, tp);
    CHECK(pred.mean(0) == doctest::Approx(1.0).epsilon(1e-9));
    // process noise term (Q^-1 + S^-1)^-1 = I/2
    CHECK(pred.cov(0, 0) == doctest::Approx(0.5).epsilon(1e-6));
  }
  SUBCASE("flat prior is a random walk") {
    Gaussian flat(Eigen::Vector3d::Zero(), 1e6 * Eigen::MatrixXd::Identity(3, 3));
    MkfTrack t{0, Eigen::Vector3d(7, 8, 9), 2.0 * Eigen::MatrixXd::Identity(3, 3), 1.0};
    auto pred = mkf_predict(t, flat, tp);
    CHECK((pred.mean - t.mean).cwiseAbs().maxCoeff() < 1e-3);
    CHECK((pred.cov - (t.cov + Eigen::MatrixXd::Identity(3, 3))).cwiseAbs().maxCoeff() <
          1e-2);
  }
  SUBCASE("F + B = I") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n01;
    for (int rep = 0; rep < 20; ++rep) {
      Eigen::MatrixXd a(3, 3);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a(i, j) = n01(rng);
      Gaussian g(Eigen::Vector3d::Zero(),
                 a * a.transpose() + Eigen::MatrixXd::Identity(3, 3));
      GaussianMixture m(Eigen::VectorXd::Ones(1), {g});
      TransitionParams q;
      q.q_diag = Eigen::Vector3d(0.5, 1.5, 2.5);
      TransitionModel tm(m, q);
      CHECK((tm.f(0) + tm.b(0) - Eigen::MatrixXd::Identity(3, 3))
                .cwiseAbs()
                .maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("mkf_update") {
  StateLayout layout = tiny_layout();
  ObservationParams op = ObservationParams::defaults(layout);
  op.r_sigma_px = 1.0;

  SUBCASE("zero residual keeps the prediction") {
    MkfPrediction pred{Eigen::Vector3d(3, 4, 2), Eigen::MatrixXd::Identity(3, 3)};
    auto up = mkf_update(pred, op, layout, head_frame(0, 3.0, 4.0));
    CHECK((up.mean - pred.mean).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("unit-variance scalar algebra: K = 0.5") {
    MkfPrediction pred{Eigen::Vector3d::Zero(), Eigen::MatrixXd::Identity(3, 3)};
    auto up = mkf_update(pred, op, layout, head_frame(0, 2.0, 0.0));
    CHECK(up.mean(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(up.cov(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(up.cov(2, 2) == doctest::Approx(1.0).epsilon(1e-12));  // lambda untouched
  }
  SUBCASE("posterior covariance never exceeds the prediction (Loewner)") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> n01;
    for (int rep = 0; rep < 20; ++rep) {
      Eigen::MatrixXd a(3, 3);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a(i, j) = n01(rng);
      MkfPrediction pred{Eigen::Vector3d::Zero(),
                         a * a.transpose() + Eigen::MatrixXd::Identity(3, 3)};
      auto up = mkf_update(pred, op, layout, head_frame(0, n01(rng), n01(rng)));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pred.cov - up.cov);
      CHECK(es.eigenvalues().minCoeff() > -1e-10);
    }
  }
  SUBCASE("no visible joints passes the prediction through") {
    MkfPrediction pred{Eigen::Vector3d(1, 2, 3), Eigen::MatrixXd::Identity(3, 3)};
    MeasurementFrame nothing;
    auto up = mkf_update(pred, op, layout, nothing);
    CHECK(up.mean == pred.mean);
    CHECK(up.log_marginal == 0.0);
  }
}

TEST_CASE("mkf with one component equals a plain Kalman filter") {
  Eigen::Vector3d mu(50.0, 60.0, 1.5);
  auto prior = single_prior(mu, 25.0);
  ChainModel chain = tiny_chain(prior, 1.5, 0.05, 2.5);

  std::vector<MeasurementFrame> frames;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 100; ++t) {
    frames.push_back(head_frame(t, 50.0 + 10.0 * std::sin(0.1 * t) + n01(rng),
                                60.0 + 5.0 * std::cos(0.07 * t) + n01(rng)));
  }

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 3);
  h(0, 0) = h(1, 1) = 1.0;
  Eigen::MatrixXd r = 2.5 * 2.5 * Eigen::MatrixXd::Identity(2, 2);

  for (TrackerVariant variant : {TrackerVariant::MkfFixed, TrackerVariant::MkfSampled}) {
    CAPTURE(variant_name(variant));
    TrackerConfig cfg;
    cfg.variant = variant;
    cfg.n_tracks = 1;
    cfg.epsilon_floor = 0.0;
    cfg.rng_seed = 3;
    RefKalman ref{mu, 25.0 * Eigen::MatrixXd::Identity(3, 3)};
    std::vector<Eigen::VectorXd> est = track_chain(frames, chain, cfg, 0);
    for (std::size_t t = 0; t < frames.size(); ++t) {
      const auto& jm = frames[t].joints[static_cast<std::size_t>(BodyJoint::Head)];
      ref.step(mu, 25.0 * Eigen::MatrixXd::Identity(3, 3), chain.tp.q(), h, r,
               (Eigen::VectorXd(2) << jm.u, jm.v).finished());
      CHECK((est[t] - ref.mean).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

namespace {

// Exhaustive trajectory posterior for small N, T: enumerates every initial
// component and indicator sequence with its exact weight.
Eigen::VectorXd exhaustive_posterior_mean(const GaussianMixture& prior,
                                          const TransitionParams& tp,
                                          const ObservationParams& op,
                                          const StateLayout& layout,
                                          const std::vector<MeasurementFrame>& frames) {
  const int n = static_cast<int>(prior.size());
  const int t_len = static_cast<int>(frames.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 3);
  h(0, 0) = h(1, 1) = 1.0;
  Eigen::MatrixXd r =
      op.r_sigma_px * op.r_sigma_px * Eigen::MatrixXd::Identity(2, 2);

  long total = 1;
  for (int t = 0; t <= t_len; ++t) total *= n;

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(prior.dim());
  double norm = 0.0;
  for (long code = 0; code < total; ++code) {
    long c = code;
    const int i0 = static_cast<int>(c % n);
    c /= n;
    RefKalman kf{prior.components()[i0].mean(), prior.components()[i0].cov()};
    double log_w = std::log(prior.weights()(i0));
    for (int t = 0; t < t_len; ++t) {
      const int it = static_cast<int>(c % n);
      c /= n;
      const auto& jm = frames[t].joints[static_cast<std::size_t>(BodyJoint::Head)];
      double lm = kf.step(prior.components()[it].mean(), prior.components()[it].cov(),
                          tp.q(), h, r, (Eigen::VectorXd(2) << jm.u, jm.v).finished());
      log_w += std::log(prior.weights()(it)) + lm;
    }
    const double w = std::exp(log_w);
    acc += w * kf.mean;
    norm += w;
  }
  return acc / norm;
}

}  // namespace

TEST_CASE("mkf-sampled converges to the exhaustive trajectory posterior") {
  Eigen::VectorXd w(2);
  w << 0.6, 0.4;
  GaussianMixture prior(
      w, {Gaussian(Eigen::Vector3d(0.0, 0.0, 1.0), 4.0 * Eigen::MatrixXd::Identity(3, 3)),
          Gaussian(Eigen::Vector3d(10.0, 6.0, 2.0), 4.0 * Eigen::MatrixXd::Identity(3, 3))});
  ChainModel chain = tiny_chain(prior, 1.0, 0.1, 2.0);

  std::vector<MeasurementFrame> frames;
  for (int t = 0; t < 5; ++t) {
    frames.push_back(head_frame(t, 4.0 + 0.5 * t, 2.0 + 0.3 * t));
  }
  Eigen::VectorXd exact =
      exhaustive_posterior_mean(prior, chain.tp, chain.op, chain.layout, frames);

  const int seeds = 30;
  std::vector<Eigen::VectorXd> means;
  for (int s = 0; s < seeds; ++s) {
    TrackerConfig cfg;
    cfg.variant = TrackerVariant::MkfSampled;
    cfg.n_tracks = 2000;
    cfg.rng_seed = static_cast<std::uint64_t>(100 + s);
    auto est = track_chain(frames, chain, cfg, 0);
    means.push_back(est.back());
  }
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(3);
  for (const auto& m : means) avg += m / seeds;
  Eigen::VectorXd var = Eigen::VectorXd::Zero(3);
  for (const auto& m : means) var += (m - avg).cwiseAbs2() / (seeds - 1);
  Eigen::VectorXd se = (var / seeds).cwiseSqrt();
  for (int c = 0; c < 3; ++c) {
    CHECK(std::abs(avg(c) - exact(c)) < 3.0 * se(c) + 1e-9);
  }
}

TEST_CASE("mkf-fixed epsilon floor semantics") {
  Eigen::VectorXd w(2);
  w << 0.5, 0.5;
  GaussianMixture prior(
      w, {Gaussian(Eigen::Vector3d(0, 0, 1), Eigen::MatrixXd::Identity(3, 3)),
          Gaussian(Eigen::Vector3d(40, 40, 2), Eigen::MatrixXd::Identity(3, 3))});
  ChainModel chain = tiny_chain(prior);
  TransitionModel tm(chain.prior, chain.tp);

  std::vector<MkfTrack> tracks;
  for (int i = 0; i < 2; ++i) {
    MkfTrack t;
    t.indicator = i;
    t.mean = prior.components()[i].mean();
    t.cov = prior.components()[i].cov();
    t.weight = (i == 0) ? 1.0 : 0.0;  // component 1 dormant
    tracks.push_back(t);
  }

  TrackerConfig cfg;
  cfg.variant = TrackerVariant::MkfFixed;

  SUBCASE("epsilon = 0 keeps a dead component dead") {
    cfg.epsilon_floor = 0.0;
    auto out = tracks;
    for (int t = 0; t < 10; ++t) {
      out = mkf_step(out, tm, chain.op, chain.layout, head_frame(t, 40.0, 40.0),
                     cfg, t);
      CHECK(out[1].weight == 0.0);
    }
  }
  SUBCASE("epsilon > 0 lets favoured components recover") {
    cfg.epsilon_floor = 1e-3;
    auto out = tracks;
    for (int t = 0; t < 30; ++t) {
      out = mkf_step(out, tm, chain.op, chain.layout, head_frame(t, 40.0, 40.0),
                     cfg, t);
    }
    CHECK(out[1].weight > 0.5);
  }
}

TEST_CASE("point_estimate") {
  std::vector<MkfTrack> tracks(2);
  tracks[0] = {0, Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), 0.5};
  tracks[1] = {1, Eigen::VectorXd::Constant(2, 2.0), Eigen::MatrixXd::Identity(2, 2), 0.5};
  auto est = point_estimate(tracks);
  CHECK(est(0) == doctest::Approx(1.0));

  tracks[0].weight = 1.0;
  tracks[1].weight = 0.0;
  CHECK(point_estimate(tracks)(0) == doctest::Approx(0.0));

  // invariant under common rescaling
  tracks[0].weight = 3.0;
  tracks[1].weight = 0.0;
  CHECK(point_estimate(tracks)(0) == doctest::Approx(0.0));
}

TEST_CASE("track_sequence") {
  Eigen::Vector3d mu(30.0, 40.0, 1.2);
  auto prior = single_prior(mu, 16.0);
  ChainModel left = tiny_chain(prior);
  ChainModel right = tiny_chain(prior);
  right.layout.side = Side::Right;

  std::vector<MeasurementFrame> frames;
  for (int t = 0; t < 60; ++t) frames.push_back(head_frame(t, 30.0, 40.0));

  TrackerConfig cfg;
  cfg.variant = TrackerVariant::MkfFixed;
  cfg.rng_seed = 17;

  SUBCASE("constant measurements converge to a fixed point") {
    auto res = track_sequence(frames, left, right, cfg);
    REQUIRE(res.estimates.size() == frames.size());
    auto head = [&](std::size_t t) {
      return res.estimates[t].joints[static_cast<std::size_t>(BodyJoint::Head)];
    };
    double late_move = (head(59) - head(58)).norm();
    CHECK(late_move < 1e-9);
    CHECK((head(59).head<2>() - Eigen::Vector2d(30.0, 40.0)).norm() < 1.0);
  }
  SUBCASE("deterministic across reruns") {
    cfg.variant = TrackerVariant::PfSimpleUnscaled;
    cfg.n_particles = 200;
    auto a = track_sequence(frames, left, right, cfg);
    auto b = track_sequence(frames, left, right, cfg);
    for (std::size_t t = 0; t < frames.size(); ++t) {
      for (std::size_t j = 0; j < kNumBodyJoints; ++j) {
        CHECK(a.estimates[t].joints[j] == b.estimates[t].joints[j]);
      }
    }
  }
  SUBCASE("empty sequence is an error") {
    CHECK_THROWS_AS(track_sequence({}, left, right, cfg), InsufficientData);
  }
}
