#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "ubtrack/errors.hpp"

namespace ubtrack {

// Multivariate normal with an SPD covariance. Construction checks symmetry
// (to 1e-10) and positive definiteness via Cholesky.
class Gaussian {
 public:
  Gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  Eigen::Index dim() const { return mean_.size(); }
  const Eigen::LLT<Eigen::MatrixXd>& llt() const { return llt_; }

  double logpdf(const Eigen::VectorXd& x) const;
  Eigen::VectorXd sample(std::mt19937_64& rng) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_norm_;  // -1/2 log((2 pi)^d |cov|)
};

class GaussianMixture {
 public:
  GaussianMixture(Eigen::VectorXd weights, std::vector<Gaussian> components);

  const Eigen::VectorXd& weights() const { return weights_; }
  const std::vector<Gaussian>& components() const { return components_; }
  Eigen::Index size() const { return weights_.size(); }
  Eigen::Index dim() const { return components_.front().dim(); }

  double logpdf(const Eigen::VectorXd& x) const;
  double pdf(const Eigen::VectorXd& x) const;

  std::vector<Eigen::VectorXd> sample(std::size_t n, std::uint64_t rng_seed) const;

 private:
  Eigen::VectorXd weights_;
  std::vector<Gaussian> components_;
};

// Scaled-product form of N(x | x_prev, Q) * N(x | mu, Sigma).
struct GaussianProduct {
  double log_scale;  // log c = log N(x_prev | mu, Q + Sigma)
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  double scale() const { return std::exp(log_scale); }
};

GaussianProduct gaussian_product(const Gaussian& g_prior,
                                 const Eigen::VectorXd& x_prev,
                                 const Eigen::MatrixXd& q);

// log(sum(exp(v))) without overflow.
double logsumexp(const Eigen::VectorXd& v);

struct EmOptions {
  std::uint64_t init_seed = 0;
  int max_iters = 200;
  double tol = 1e-7;
};

struct EmReport {
  int iterations = 0;
  double final_log_likelihood = 0.0;
  std::vector<double> log_likelihoods;  // one per iteration, non-decreasing
  int empty_cluster_resets = 0;
};

GaussianMixture em_fit(const std::vector<Eigen::VectorXd>& data, int k,
                       const EmOptions& opts, EmReport* report = nullptr);

}  // namespace ubtrack
