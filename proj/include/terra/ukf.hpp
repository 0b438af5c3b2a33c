#pragma once

// Unscented Kalman filter in parameter-estimation form: the parameters follow
// a random walk w_k = w_{k-1} + n_k and are observed through a nonlinear map
// d_k = f(xi_k, w_k) + e_k.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

#include "terra/errors.hpp"

namespace terra::ukf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct UkfConfig {
  double alpha = 1.0;
  double kappa = 0.0;
  Matrix process_noise;       // R_n, L x L
  Matrix observation_noise;   // R_e, M x M
  Vector initial_mean;        // L
  Matrix initial_covariance;  // L x L

  Eigen::Index parameter_count() const { return initial_mean.size(); }

  void validate() const;
};

struct SigmaWeights {
  double lambda = 0.0;
  Vector mean;        // a^(m), 2L+1
  Vector covariance;  // a^(c), 2L+1
};

inline SigmaWeights sigma_weights(Eigen::Index L, double alpha, double kappa) {
  if (L < 1) throw std::invalid_argument("sigma_weights: need at least one parameter");
  if (!(alpha > 0.0)) throw std::invalid_argument("sigma_weights: alpha must be positive");
  const double n = static_cast<double>(L);
  const double lambda = alpha * alpha * (n + kappa) - n;
  const double spread = n + lambda;
  if (!(spread > 0.0)) throw std::invalid_argument("sigma_weights: L + lambda must be positive");
  SigmaWeights w;
  w.lambda = lambda;
  w.mean = Vector::Constant(2 * L + 1, 1.0 / (2.0 * spread));
  w.covariance = w.mean;
  w.mean(0) = lambda / spread;
  // beta = 2 folded into the constant: lambda/(L+lambda) + (1 - alpha^2 + beta)
  w.covariance(0) = lambda / spread - alpha * alpha + 3.0;
  return w;
}

namespace detail {

inline bool symmetric(const Matrix& m, double tol = 1e-12) {
  return m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * (1.0 + m.cwiseAbs().maxCoeff());
}

inline bool psd(const Matrix& m, double jitter = 1e-12) {
  if (m.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.info() == Eigen::Success && es.eigenvalues().minCoeff() >= -jitter;
}

}  // namespace detail

inline void UkfConfig::validate() const {
  const Eigen::Index L = initial_mean.size();
  auto fail = [](const std::string& what) { throw std::invalid_argument("UkfConfig: " + what); };
  if (L < 1) fail("initial mean is empty");
  if (!(alpha > 0.0)) fail("alpha must be positive");
  if (initial_covariance.rows() != L || initial_covariance.cols() != L) fail("P_w0 shape");
  if (process_noise.rows() != L || process_noise.cols() != L) fail("R_n shape");
  if (observation_noise.rows() < 1 || observation_noise.rows() != observation_noise.cols()) {
    fail("R_e shape");
  }
  for (const Matrix* m : {&initial_covariance, &process_noise, &observation_noise}) {
    if (!detail::symmetric(*m) || !detail::psd(*m)) fail("covariances must be symmetric PSD");
  }
  const double n = static_cast<double>(L);
  if (!(alpha * alpha * (n + kappa) > 0.0)) fail("L + lambda must be positive");
}

struct Moments {
  Vector mean;
  Matrix covariance;
};

/// Random-walk prediction: mean unchanged, covariance inflated by R_n.
inline Moments time_update(const Vector& mean, const Matrix& covariance, const Matrix& process_noise) {
  if (covariance.rows() != mean.size() || process_noise.rows() != mean.size()) {
    throw std::invalid_argument("time_update: shape mismatch");
  }
  return Moments{mean, covariance + process_noise};
}

/// Symmetric square root of a PSD matrix; eigenvalues down to -1e-12 are
/// treated as zero.
inline Matrix symmetric_sqrt(const Matrix& m) {
  if (m.rows() == 1) {
    const double v = m(0, 0);
    if (v < -1e-12) throw NumericalError("sigma_points: covariance not PSD");
    return Matrix::Constant(1, 1, std::sqrt(std::max(v, 0.0)));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() < -1e-12) {
    throw NumericalError("sigma_points: covariance not PSD");
  }
  const Vector roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
}

/// Columns [w, w + S_1..S_L, w - S_1..S_L] with S = sqrt((L + lambda) P).
inline Matrix sigma_points(const Vector& mean, const Matrix& covariance, double lambda) {
  const Eigen::Index L = mean.size();
  const Matrix root = symmetric_sqrt((static_cast<double>(L) + lambda) * covariance);
  Matrix pts(L, 2 * L + 1);
  pts.col(0) = mean;
  for (Eigen::Index i = 0; i < L; ++i) {
    pts.col(1 + i) = mean + root.col(i);
    pts.col(1 + L + i) = mean - root.col(i);
  }
  return pts;
}

struct UpdateResult {
  Vector mean;
  Matrix covariance;
  Vector predicted;         // d_hat^-
  Vector innovation;        // d - d_hat^-
  Matrix gain;              // K
  Matrix innovation_covariance;  // P_d
  Matrix cross_covariance;       // P_wd
  bool singular = false;
};

/// Measurement update from per-sigma-point predictions (`predictions` is M x (2L+1),
/// `points` is L x (2L+1)). Uses K = P_wd P_d^-1. If P_d cannot be factorized the
/// prior is returned unchanged with `singular` set.
inline UpdateResult measurement_update(const Matrix& predictions, const SigmaWeights& weights,
                                       const Vector& observation, const Matrix& observation_noise,
                                       const Vector& prior_mean, const Matrix& prior_covariance,
                                       const Matrix& points) {
  const Eigen::Index count = weights.mean.size();
  if (predictions.cols() != count || points.cols() != count) {
    throw std::invalid_argument("measurement_update: one prediction per sigma point required");
  }
  if (predictions.rows() != observation.size() || observation_noise.rows() != observation.size()) {
    throw std::invalid_argument("measurement_update: observation shape mismatch");
  }
  UpdateResult r;
  // Summed about the centre point: with small alpha the centre weight is
  // large and negative and the plain weighted sum cancels.
  const Vector centre = predictions.col(0);
  r.predicted = centre + (predictions.colwise() - centre) * weights.mean;
  r.innovation = observation - r.predicted;

  const Matrix dev_d = predictions.colwise() - r.predicted;
  const Matrix dev_w = points.colwise() - prior_mean;
  r.innovation_covariance =
      observation_noise + dev_d * weights.covariance.asDiagonal() * dev_d.transpose();
  r.cross_covariance = dev_w * weights.covariance.asDiagonal() * dev_d.transpose();

  Eigen::LLT<Matrix> llt(r.innovation_covariance);
  if (llt.info() != Eigen::Success || !r.innovation_covariance.allFinite()) {
    r.singular = true;
    r.mean = prior_mean;
    r.covariance = prior_covariance;
    r.gain = Matrix::Zero(prior_mean.size(), observation.size());
    return r;
  }
  // K = P_wd P_d^-1  <=>  P_d K^T = P_wd^T
  r.gain = llt.solve(r.cross_covariance.transpose()).transpose();
  r.mean = prior_mean + r.gain * r.innovation;
  const Matrix cov = prior_covariance - r.gain * r.innovation_covariance * r.gain.transpose();
  r.covariance = 0.5 * (cov + cov.transpose());
  return r;
}

}  // namespace terra::ukf
