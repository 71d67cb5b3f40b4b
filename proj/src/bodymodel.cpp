#include "ubtrack/bodymodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ubtrack/rng.hpp"

namespace ubtrack {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

int body_joint_index(const std::string& name) {
  for (std::size_t i = 0; i < kNumBodyJoints; ++i) {
    if (name == kBodyJointNames[i]) return static_cast<int>(i);
  }
  return -1;
}

int StateLayout::joint_slot(const std::string& name) const {
  for (std::size_t i = 0; i < joints.size(); ++i) {
    if (joints[i] == name) return static_cast<int>(i);
  }
  return -1;
}

BodyJoint StateLayout::body_joint(int slot) const {
  const std::string& name = joints.at(static_cast<std::size_t>(slot));
  const bool left = (side == Side::Left);
  if (name == "head") return BodyJoint::Head;
  if (name == "neck") return BodyJoint::Neck;
  if (name == "shoulder") return left ? BodyJoint::ShoulderL : BodyJoint::ShoulderR;
  if (name == "elbow") return left ? BodyJoint::ElbowL : BodyJoint::ElbowR;
  if (name == "hand") return left ? BodyJoint::HandL : BodyJoint::HandR;
  throw MissingJoint("unknown chain joint: " + name);
}

TransitionParams TransitionParams::defaults(const StateLayout& layout,
                                            double sigma_px, double sigma_lambda) {
  TransitionParams tp;
  tp.q_diag.resize(layout.dim());
  for (Eigen::Index i = 0; i < layout.dim(); ++i) {
    tp.q_diag(i) = (i % 3 == 2) ? sigma_lambda * sigma_lambda : sigma_px * sigma_px;
  }
  return tp;
}

TransitionParams TransitionParams::scaled(double factor) const {
  TransitionParams tp;
  tp.q_diag = q_diag * factor;
  return tp;
}

ObservationParams ObservationParams::defaults(const StateLayout& layout,
                                              bool measure_neck, double sigma_px) {
  ObservationParams op;
  op.r_sigma_px = sigma_px;
  for (const char* name : {"head", "neck", "hand"}) {
    if (!measure_neck && std::string(name) == "neck") continue;
    int slot = layout.joint_slot(name);
    if (slot >= 0) op.measured_slots.push_back(slot);
  }
  return op;
}

ObservationParams::VisibleSystem ObservationParams::visible_system(
    const StateLayout& layout, const MeasurementFrame& frame) const {
  std::vector<int> slots;
  for (int slot : measured_slots) {
    BodyJoint bj = layout.body_joint(slot);
    if (frame.joints[static_cast<std::size_t>(bj)].visible) slots.push_back(slot);
  }
  VisibleSystem vs;
  const Eigen::Index m = static_cast<Eigen::Index>(2 * slots.size());
  vs.h = Eigen::MatrixXd::Zero(m, layout.dim());
  vs.r_diag = Eigen::VectorXd::Constant(m, r_sigma_px * r_sigma_px);
  vs.z.resize(m);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const int slot = slots[i];
    const auto& jm = frame.joints[static_cast<std::size_t>(layout.body_joint(slot))];
    vs.h(static_cast<Eigen::Index>(2 * i), 3 * slot) = 1.0;
    vs.h(static_cast<Eigen::Index>(2 * i + 1), 3 * slot + 1) = 1.0;
    vs.z(static_cast<Eigen::Index>(2 * i)) = jm.u;
    vs.z(static_cast<Eigen::Index>(2 * i + 1)) = jm.v;
  }
  return vs;
}

TransitionModel::TransitionModel(const GaussianMixture& prior,
                                 const TransitionParams& tp)
    : prior_(&prior), q_diag_(tp.q_diag) {
  const Eigen::Index d = prior.dim();
  if (q_diag_.size() != d) {
    throw DimensionMismatch("TransitionModel: Q dimension does not match prior");
  }
  if (q_diag_.minCoeff() <= 0.0) {
    throw SingularCovariance("TransitionModel: Q diagonal must be positive");
  }
  Eigen::VectorXd q_inv_diag = q_diag_.cwiseInverse();
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);

  comp_.reserve(static_cast<std::size_t>(prior.size()));
  for (Eigen::Index i = 0; i < prior.size(); ++i) {
    const Gaussian& g = prior.components()[static_cast<std::size_t>(i)];
    ComponentCache cc;
    Eigen::MatrixXd s_inv = g.llt().solve(id);
    Eigen::MatrixXd prec = s_inv;
    prec.diagonal() += q_inv_diag;
    Eigen::LLT<Eigen::MatrixXd> prec_llt(prec);
    if (prec_llt.info() != Eigen::Success) {
      throw SingularCovariance("TransitionModel: combined precision not SPD");
    }
    cc.cond_cov = prec_llt.solve(id);
    cc.cond_cov = 0.5 * (cc.cond_cov + cc.cond_cov.transpose());
    cc.f = cc.cond_cov * q_inv_diag.asDiagonal();
    cc.b = cc.cond_cov * s_inv;
    cc.b_mu = cc.b * g.mean();
    cc.cond_llt.compute(cc.cond_cov);
    if (cc.cond_llt.info() != Eigen::Success) {
      throw SingularCovariance("TransitionModel: conditional covariance not SPD");
    }
    double log_det = 0.0;
    for (Eigen::Index r = 0; r < d; ++r) {
      log_det += 2.0 * std::log(cc.cond_llt.matrixL()(r, r));
    }
    cc.cond_log_norm = -0.5 * (static_cast<double>(d) * kLog2Pi + log_det);

    Eigen::MatrixXd marg = g.cov();
    marg.diagonal() += q_diag_;
    cc.marg_llt.compute(marg);
    if (cc.marg_llt.info() != Eigen::Success) {
      throw SingularCovariance("TransitionModel: Q + Sigma not SPD");
    }
    log_det = 0.0;
    for (Eigen::Index r = 0; r < d; ++r) {
      log_det += 2.0 * std::log(cc.marg_llt.matrixL()(r, r));
    }
    cc.marg_log_norm = -0.5 * (static_cast<double>(d) * kLog2Pi + log_det);
    comp_.push_back(std::move(cc));
  }
}

double TransitionModel::log_scale(Eigen::Index i, const Eigen::VectorXd& x_prev) const {
  const auto& cc = comp_[static_cast<std::size_t>(i)];
  const Gaussian& g = prior_->components()[static_cast<std::size_t>(i)];
  Eigen::VectorXd w = cc.marg_llt.matrixL().solve(x_prev - g.mean());
  return cc.marg_log_norm - 0.5 * w.squaredNorm();
}

double TransitionModel::log_evidence(const Eigen::VectorXd& x_prev) const {
  Eigen::VectorXd terms(components());
  for (Eigen::Index i = 0; i < components(); ++i) {
    const double pi = prior_->weights()(i);
    terms(i) = (pi > 0.0) ? std::log(pi) + log_scale(i, x_prev)
                          : -std::numeric_limits<double>::infinity();
  }
  return logsumexp(terms);
}

Eigen::VectorXd TransitionModel::conditional_mean(Eigen::Index i,
                                                  const Eigen::VectorXd& x_prev) const {
  const auto& cc = comp_[static_cast<std::size_t>(i)];
  return cc.f * x_prev + cc.b_mu;
}

double TransitionModel::conditional_logpdf(Eigen::Index i,
                                           const Eigen::VectorXd& x_prev,
                                           const Eigen::VectorXd& x) const {
  const auto& cc = comp_[static_cast<std::size_t>(i)];
  Eigen::VectorXd w = cc.cond_llt.matrixL().solve(x - conditional_mean(i, x_prev));
  return cc.cond_log_norm - 0.5 * w.squaredNorm();
}

double TransitionModel::logpdf(const Eigen::VectorXd& x_prev,
                               const Eigen::VectorXd& x) const {
  Eigen::VectorXd lw(components());
  Eigen::VectorXd terms(components());
  for (Eigen::Index i = 0; i < components(); ++i) {
    const double pi = prior_->weights()(i);
    if (pi > 0.0) {
      lw(i) = std::log(pi) + log_scale(i, x_prev);
      terms(i) = lw(i) + conditional_logpdf(i, x_prev, x);
    } else {
      lw(i) = terms(i) = -std::numeric_limits<double>::infinity();
    }
  }
  return logsumexp(terms) - logsumexp(lw);
}

Eigen::VectorXd TransitionModel::sample(const Eigen::VectorXd& x_prev,
                                        std::mt19937_64& rng) const {
  // Construct the state-conditioned transition mixture per call: weights and
  // conditional means for every component, then the drawn component's
  // conditional covariance. Each draw pays for the full mixture
  // construction; that is intrinsic to sampling the exact transition.
  const Eigen::Index n = components();
  const Eigen::Index d = dim();
  Eigen::MatrixXd q = q_diag_.asDiagonal();
  Eigen::VectorXd lw(n);
  Eigen::MatrixXd cond_means(d, n);
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Gaussian& g = prior_->components()[static_cast<std::size_t>(i)];
    m = q + g.cov();
    Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> m_llt(m);
    if (m_llt.info() != Eigen::Success) {
      throw SingularCovariance("TransitionModel::sample: Q + Sigma not SPD");
    }
    // B (mu - x_prev) with B = Q (Q + Sigma)^-1.
    Eigen::VectorXd sol = g.mean() - x_prev;
    m_llt.solveInPlace(sol);
    cond_means.col(i) = x_prev + q_diag_.cwiseProduct(sol);
    double log_det = 0.0;
    for (Eigen::Index r = 0; r < d; ++r) {
      log_det += 2.0 * std::log(m_llt.matrixL()(r, r));
    }
    Eigen::VectorXd w = x_prev - g.mean();
    m_llt.matrixL().solveInPlace(w);
    const double pi = prior_->weights()(i);
    lw(i) = (pi > 0.0)
                ? std::log(pi) -
                      0.5 * (static_cast<double>(d) * kLog2Pi + log_det +
                             w.squaredNorm())
                : -std::numeric_limits<double>::infinity();
  }
  const double norm = logsumexp(lw);
  Eigen::VectorXd probs = (lw.array() - norm).exp();
  std::discrete_distribution<int> pick(probs.data(), probs.data() + probs.size());
  const Eigen::Index i = pick(rng);

  GaussianProduct gp =
      gaussian_product(prior_->components()[static_cast<std::size_t>(i)],
                       x_prev, q);
  Eigen::LLT<Eigen::MatrixXd> cond_llt(gp.cov);
  if (cond_llt.info() != Eigen::Success) {
    throw SingularCovariance("TransitionModel::sample: conditional covariance not SPD");
  }
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::VectorXd z(d);
  for (Eigen::Index r = 0; r < z.size(); ++r) z(r) = n01(rng);
  return cond_means.col(i) + cond_llt.matrixL() * z;
}

double transition_logpdf(const GaussianMixture& prior, const TransitionParams& tp,
                         const PoseState& x_prev, const PoseState& x) {
  if (x_prev.values.size() != prior.dim() || x.values.size() != prior.dim()) {
    throw DimensionMismatch("transition_logpdf: state dimension mismatch");
  }
  TransitionModel model(prior, tp);
  return model.logpdf(x_prev.values, x.values);
}

Gaussian transition_conditional(const Gaussian& prior_component,
                                const TransitionParams& tp,
                                const PoseState& x_prev) {
  GaussianProduct gp =
      gaussian_product(prior_component, x_prev.values, tp.q());
  return Gaussian(gp.mean, gp.cov);
}

double observation_logpdf(const ObservationParams& op, const PoseState& x,
                          const MeasurementFrame& z) {
  auto vs = op.visible_system(x.layout, z);
  if (vs.z.size() == 0) {
    throw NoVisibleJoints("observation_logpdf: no visible measurable joints");
  }
  Eigen::VectorXd diff = vs.z - vs.h * x.values;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < diff.size(); ++i) {
    ll += -0.5 * (kLog2Pi + std::log(vs.r_diag(i))) -
          0.5 * diff(i) * diff(i) / vs.r_diag(i);
  }
  return ll;
}

std::vector<PoseState> generate_training_set(const SkeletonRecording& rec,
                                             const CameraIntrinsics& intr,
                                             int n_views,
                                             const ViewpointLimits& limits,
                                             std::uint64_t rng_seed, Side side) {
  if (rec.frames.empty()) {
    throw InsufficientData("generate_training_set: empty recording");
  }
  StateLayout layout;
  layout.side = side;
  std::vector<PoseState> out;
  out.reserve(rec.frames.size() * static_cast<std::size_t>(n_views));
  for (int v = 0; v < n_views; ++v) {
    CameraPose pose = sample_viewpoint(splitmix64(rng_seed) ^ static_cast<std::uint64_t>(v),
                                       limits);
    ProjectionMatrix pm = build_projection(intr, pose);
    for (std::size_t f = 0; f < rec.frames.size(); ++f) {
      PoseState st;
      st.layout = layout;
      st.values.resize(layout.dim());
      for (std::size_t slot = 0; slot < layout.joints.size(); ++slot) {
        BodyJoint bj = layout.body_joint(static_cast<int>(slot));
        JointImage ji;
        try {
          ji = project(pm, rec.frames[f].joints[static_cast<std::size_t>(bj)]);
        } catch (const DegenerateProjection&) {
          throw DegenerateProjection("generate_training_set: degenerate projection at frame " +
                                     std::to_string(f) + ", view " + std::to_string(v));
        }
        st.values(static_cast<Eigen::Index>(3 * slot)) = ji.u_over_lambda;
        st.values(static_cast<Eigen::Index>(3 * slot + 1)) = ji.v_over_lambda;
        st.values(static_cast<Eigen::Index>(3 * slot + 2)) = ji.lambda;
      }
      out.push_back(std::move(st));
    }
  }
  return out;
}

FullBodyEstimate merge_arm_estimates(const PoseState& left, const PoseState& right) {
  FullBodyEstimate est;
  for (auto& j : est.joints) j.setZero();
  auto put = [&est](const PoseState& st) {
    for (std::size_t slot = 0; slot < st.layout.joints.size(); ++slot) {
      BodyJoint bj = st.layout.body_joint(static_cast<int>(slot));
      Eigen::Vector3d v = st.values.segment<3>(static_cast<Eigen::Index>(3 * slot));
      est.joints[static_cast<std::size_t>(bj)] = v;
    }
  };
  put(left);
  put(right);
  // Shared trunk joints: average the two chains.
  for (const char* name : {"head", "neck"}) {
    int ls = left.layout.joint_slot(name);
    int rs = right.layout.joint_slot(name);
    if (ls < 0 || rs < 0) continue;
    Eigen::Vector3d lv = left.values.segment<3>(3 * ls);
    Eigen::Vector3d rv = right.values.segment<3>(3 * rs);
    est.joints[static_cast<std::size_t>(
        left.layout.body_joint(ls))] = 0.5 * (lv + rv);
  }
  return est;
}

}  // namespace ubtrack
