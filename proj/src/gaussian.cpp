#include "ubtrack/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ubtrack/rng.hpp"

namespace ubtrack {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

Gaussian::Gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (cov_.rows() != cov_.cols() || cov_.rows() != mean_.size()) {
    throw DimensionMismatch("Gaussian: mean/covariance dimensions disagree");
  }
  const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
  if (((cov_ - cov_.transpose()).cwiseAbs().maxCoeff()) > 1e-10 * scale) {
    throw SingularCovariance("Gaussian: covariance not symmetric");
  }
  llt_.compute(cov_);
  if (llt_.info() != Eigen::Success) {
    throw SingularCovariance("Gaussian: covariance not positive definite");
  }
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < cov_.rows(); ++i) {
    log_det += 2.0 * std::log(llt_.matrixL()(i, i));
  }
  log_norm_ = -0.5 * (static_cast<double>(cov_.rows()) * kLog2Pi + log_det);
}

double Gaussian::logpdf(const Eigen::VectorXd& x) const {
  if (x.size() != mean_.size()) {
    throw DimensionMismatch("Gaussian::logpdf: point dimension mismatch");
  }
  Eigen::VectorXd w = llt_.matrixL().solve(x - mean_);
  return log_norm_ - 0.5 * w.squaredNorm();
}

Eigen::VectorXd Gaussian::sample(std::mt19937_64& rng) const {
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::VectorXd z(mean_.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = n01(rng);
  return mean_ + llt_.matrixL() * z;
}

GaussianMixture::GaussianMixture(Eigen::VectorXd weights,
                                 std::vector<Gaussian> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  if (weights_.size() != static_cast<Eigen::Index>(components_.size()) ||
      components_.empty()) {
    throw DimensionMismatch("GaussianMixture: weight/component count mismatch");
  }
  if (weights_.minCoeff() < 0.0) {
    throw DataError("GaussianMixture: negative weight");
  }
  if (std::abs(weights_.sum() - 1.0) > 1e-12) {
    throw DataError("GaussianMixture: weights do not sum to 1");
  }
  const Eigen::Index d = components_.front().dim();
  for (const auto& g : components_) {
    if (g.dim() != d) {
      throw DimensionMismatch("GaussianMixture: components differ in dimension");
    }
  }
}

double GaussianMixture::logpdf(const Eigen::VectorXd& x) const {
  Eigen::VectorXd terms(size());
  for (Eigen::Index i = 0; i < size(); ++i) {
    terms(i) = (weights_(i) > 0.0)
                   ? std::log(weights_(i)) + components_[i].logpdf(x)
                   : -std::numeric_limits<double>::infinity();
  }
  return logsumexp(terms);
}

double GaussianMixture::pdf(const Eigen::VectorXd& x) const {
  return std::exp(logpdf(x));
}

std::vector<Eigen::VectorXd> GaussianMixture::sample(std::size_t n,
                                                     std::uint64_t rng_seed) const {
  auto rng = substream(rng_seed, 0x676d6dULL);
  std::discrete_distribution<int> pick(weights_.data(), weights_.data() + size());
  std::vector<Eigen::VectorXd> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(components_[pick(rng)].sample(rng));
  }
  return out;
}

double logsumexp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::exp(v(i) - m);
  return m + std::log(s);
}

GaussianProduct gaussian_product(const Gaussian& g_prior,
                                 const Eigen::VectorXd& x_prev,
                                 const Eigen::MatrixXd& q) {
  const Eigen::Index d = g_prior.dim();
  if (x_prev.size() != d || q.rows() != d || q.cols() != d) {
    throw DimensionMismatch("gaussian_product: dimension mismatch");
  }
  if (Eigen::LLT<Eigen::MatrixXd>(q).info() != Eigen::Success) {
    throw SingularCovariance("gaussian_product: Q not positive definite");
  }
  // Work through M = Q + Sigma: the conditional covariance
  // (Q^-1 + Sigma^-1)^-1 equals Q M^-1 Sigma and the blend matrices are
  // F = Sigma M^-1, B = Q M^-1, so a single factorisation of M suffices.
  Eigen::MatrixXd m = q + g_prior.cov();
  Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> m_llt(m);  // factorises in place
  if (m_llt.info() != Eigen::Success) {
    throw SingularCovariance("gaussian_product: combined covariance not SPD");
  }
  Eigen::MatrixXd b = q;  // becomes (M^-1 Q)^T = Q M^-1
  m_llt.solveInPlace(b);
  b.transposeInPlace();

  GaussianProduct out;
  out.cov.noalias() = b * g_prior.cov();
  // Symmetrise away solve round-off so downstream SPD checks hold.
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  out.mean = x_prev;
  out.mean.noalias() += b * (g_prior.mean() - x_prev);
  double log_det = 0.0;
  for (Eigen::Index r = 0; r < d; ++r) {
    log_det += 2.0 * std::log(m_llt.matrixL()(r, r));
  }
  Eigen::VectorXd w = x_prev - g_prior.mean();
  m_llt.matrixL().solveInPlace(w);
  out.log_scale =
      -0.5 * (static_cast<double>(d) * kLog2Pi + log_det + w.squaredNorm());
  return out;
}

namespace {

// k-means++ style seeding: spread the initial means across the data.
std::vector<Eigen::Index> seed_means(const std::vector<Eigen::VectorXd>& data,
                                     int k, std::mt19937_64& rng) {
  const std::size_t n = data.size();
  std::vector<Eigen::Index> chosen;
  std::uniform_int_distribution<std::size_t> uni(0, n - 1);
  chosen.push_back(static_cast<Eigen::Index>(uni(rng)));
  std::vector<double> d2(n, std::numeric_limits<double>::max());
  while (static_cast<int>(chosen.size()) < k) {
    for (std::size_t i = 0; i < n; ++i) {
      double dd = (data[i] - data[chosen.back()]).squaredNorm();
      d2[i] = std::min(d2[i], dd);
    }
    double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    if (total <= 0.0) {
      chosen.push_back(static_cast<Eigen::Index>(uni(rng)));
      continue;
    }
    std::uniform_real_distribution<double> u(0.0, total);
    double r = u(rng), acc = 0.0;
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      acc += d2[i];
      if (acc >= r) {
        pick = i;
        break;
      }
    }
    chosen.push_back(static_cast<Eigen::Index>(pick));
  }
  return chosen;
}

Eigen::MatrixXd regularised(const Eigen::MatrixXd& cov) {
  const Eigen::Index d = cov.rows();
  Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() == Eigen::Success && llt.matrixL()(0, 0) > 0) {
    // Still add a floor if the trace is tiny; keeps logpdf finite.
    if (sym.trace() > 0) return sym;
  }
  double ridge = 1e-8 * std::max(sym.trace(), 1e-12) / static_cast<double>(d);
  Eigen::MatrixXd fixed = sym + ridge * Eigen::MatrixXd::Identity(d, d);
  while (Eigen::LLT<Eigen::MatrixXd>(fixed).info() != Eigen::Success) {
    ridge *= 10.0;
    fixed = sym + ridge * Eigen::MatrixXd::Identity(d, d);
  }
  return fixed;
}

}  // namespace

GaussianMixture em_fit(const std::vector<Eigen::VectorXd>& data, int k,
                       const EmOptions& opts, EmReport* report) {
  if (k < 1) throw InsufficientData("em_fit: k must be >= 1");
  if (data.size() < static_cast<std::size_t>(k)) {
    throw InsufficientData("em_fit: fewer data points than components");
  }
  const Eigen::Index d = data.front().size();
  const std::size_t n = data.size();
  for (const auto& x : data) {
    if (x.size() != d) throw DimensionMismatch("em_fit: ragged data");
  }

  auto rng = substream(opts.init_seed, 0x656dULL);

  // Initial parameters: k-means++ seeds for means, pooled covariance.
  Eigen::VectorXd grand_mean = Eigen::VectorXd::Zero(d);
  for (const auto& x : data) grand_mean += x;
  grand_mean /= static_cast<double>(n);
  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(d, d);
  for (const auto& x : data) {
    Eigen::VectorXd c = x - grand_mean;
    pooled += c * c.transpose();
  }
  pooled /= static_cast<double>(n);
  pooled = regularised(pooled);

  auto seeds = seed_means(data, k, rng);
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covs(k, pooled);
  Eigen::VectorXd pis = Eigen::VectorXd::Constant(k, 1.0 / k);
  for (auto idx : seeds) means.push_back(data[idx]);

  std::vector<int> reset_count(k, 0);
  Eigen::MatrixXd log_resp(n, k);
  Eigen::VectorXd point_ll = Eigen::VectorXd::Zero(n);
  double prev_ll = -std::numeric_limits<double>::infinity();
  EmReport rep;

  int iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    std::vector<Gaussian> comps;
    comps.reserve(k);
    for (int j = 0; j < k; ++j) comps.emplace_back(means[j], covs[j]);

    // E-step: responsibilities in log space.
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::VectorXd terms(k);
      for (int j = 0; j < k; ++j) {
        terms(j) = (pis(j) > 0 ? std::log(pis(j))
                               : -std::numeric_limits<double>::infinity()) +
                   comps[j].logpdf(data[i]);
      }
      double norm = logsumexp(terms);
      ll += norm;
      point_ll(i) = norm;
      log_resp.row(i) = (terms.array() - norm).matrix().transpose();
    }
    rep.log_likelihoods.push_back(ll);

    if (std::isfinite(prev_ll) && ll - prev_ll < opts.tol && iter > 0) {
      prev_ll = ll;
      break;
    }
    prev_ll = ll;

    // M-step.
    for (int j = 0; j < k; ++j) {
      double nk = 0.0;
      for (std::size_t i = 0; i < n; ++i) nk += std::exp(log_resp(i, j));
      if (nk < 1e-6 * static_cast<double>(n)) {
        if (++reset_count[j] > 1) {
          throw EmptyCluster("em_fit: component " + std::to_string(j) +
                             " collapsed twice");
        }
        // Re-seat the component at the worst-explained point.
        std::size_t worst = 0;
        double worst_ll = std::numeric_limits<double>::max();
        for (std::size_t i = 0; i < n; ++i) {
          if (point_ll(i) < worst_ll) {
            worst_ll = point_ll(i);
            worst = i;
          }
        }
        means[j] = data[worst];
        covs[j] = pooled;
        pis(j) = 1.0 / static_cast<double>(n);
        pis /= pis.sum();
        ++rep.empty_cluster_resets;
        continue;
      }
      Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
      for (std::size_t i = 0; i < n; ++i) {
        mu += std::exp(log_resp(i, j)) * data[i];
      }
      mu /= nk;
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
      for (std::size_t i = 0; i < n; ++i) {
        Eigen::VectorXd c = data[i] - mu;
        cov += std::exp(log_resp(i, j)) * (c * c.transpose());
      }
      cov /= nk;
      means[j] = mu;
      covs[j] = regularised(cov);
      pis(j) = nk / static_cast<double>(n);
    }
    pis /= pis.sum();
  }

  std::vector<Gaussian> comps;
  comps.reserve(k);
  for (int j = 0; j < k; ++j) comps.emplace_back(means[j], covs[j]);
  rep.iterations = iter;
  rep.final_log_likelihood = prev_ll;
  if (report) *report = rep;
  return GaussianMixture(pis / pis.sum(), std::move(comps));
}

}  // namespace ubtrack
