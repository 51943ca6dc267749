#pragma once

// Cylinder distance on the 8x25 cabinet grid, power-exponential correlation
// families, and the Kronecker covariance Sigma_w = Sigma_f (x) Omega of the
// stacked mode-major random effects w = (w_1', w_2')'.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>
#include <vector>

#include "scr/common.hpp"
#include "scr/data.hpp"

namespace scr {

// Rows are physical, columns wrap (col 24 is adjacent to col 0); both axes
// normalized to [0,1] so the largest possible distance is sqrt(2).
inline double cylinder_distance(const GridPoint& a, const GridPoint& b) {
  auto check = [](const GridPoint& g) {
    if (g.row < 0 || g.row >= kNumRows || g.col < 0 || g.col >= kNumCols)
      throw ValidationError("grid point (" + std::to_string(g.row) + "," +
                            std::to_string(g.col) + ") outside the 8x25 grid");
  };
  check(a);
  check(b);
  double dr = static_cast<double>(a.row - b.row) / 7.0;
  int dc_abs = std::abs(a.col - b.col);
  double dc = static_cast<double>(std::min(dc_abs, kNumCols - dc_abs)) / 12.0;
  return std::sqrt(dr * dr + dc * dc);
}

enum class CorrKind { PEXP, EXP, GAU };

inline std::string corr_kind_name(CorrKind k) {
  switch (k) {
    case CorrKind::PEXP: return "pexp";
    case CorrKind::EXP: return "exp";
    case CorrKind::GAU: return "gau";
  }
  return "?";
}

// exp(-(d/nu)^kappa); EXP pins kappa=1, GAU pins kappa=2.
struct CorrelationFamily {
  CorrKind kind = CorrKind::PEXP;
  double nu = 0.25;
  double kappa = 1.0;

  CorrelationFamily() = default;
  CorrelationFamily(CorrKind k, double nu_, double kappa_ = 1.0) : kind(k), nu(nu_) {
    switch (k) {
      case CorrKind::EXP: kappa = 1.0; break;
      case CorrKind::GAU: kappa = 2.0; break;
      case CorrKind::PEXP: kappa = kappa_; break;
    }
    if (!(nu > 0.0)) throw ValidationError("correlation range nu must be positive");
    if (!(kappa > 0.0 && kappa <= 2.0))
      throw ValidationError("correlation power kappa must lie in (0,2]");
  }
};

inline double correlation(const CorrelationFamily& family, double d) {
  if (d < 0.0) throw ValidationError("distance must be nonnegative");
  if (d == 0.0) return 1.0;
  return std::exp(-std::pow(d / family.nu, family.kappa));
}

inline Eigen::MatrixXd distance_matrix(const std::vector<GridPoint>& locations) {
  const Eigen::Index n = static_cast<Eigen::Index>(locations.size());
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index s = 0; s < n; ++s) {
    d(s, s) = 0.0;
    for (Eigen::Index l = s + 1; l < n; ++l) {
      double v = cylinder_distance(locations[static_cast<std::size_t>(s)],
                                   locations[static_cast<std::size_t>(l)]);
      d(s, l) = v;
      d(l, s) = v;
    }
  }
  return d;
}

inline Eigen::MatrixXd correlation_matrix(const CorrelationFamily& family,
                                          const Eigen::MatrixXd& dist) {
  const Eigen::Index n = dist.rows();
  Eigen::MatrixXd omega(n, n);
  for (Eigen::Index s = 0; s < n; ++s) {
    omega(s, s) = 1.0;
    for (Eigen::Index l = s + 1; l < n; ++l) {
      double v = correlation(family, dist(s, l));
      omega(s, l) = v;
      omega(l, s) = v;
    }
  }
  return omega;
}

inline Eigen::Matrix2d cross_mode_covariance(double sigma1, double sigma2, double rho12) {
  if (!(sigma1 > 0.0 && sigma2 > 0.0))
    throw ValidationError("random-effect scales must be positive");
  if (std::abs(rho12) > 0.95)
    throw ValidationError("cross-mode correlation must lie in [-0.95, 0.95]");
  Eigen::Matrix2d s;
  s << sigma1 * sigma1, rho12 * sigma1 * sigma2, rho12 * sigma1 * sigma2,
      sigma2 * sigma2;
  return s;
}

// Assembled spatial structure for a fixed set of locations and parameters.
// chol(Sigma_f) (x) chol(Omega) is a valid Cholesky factor of
// Sigma_f (x) Omega, so the dense 2n x 2n matrix is never formed for solves
// or determinants.
class SpatialStructure {
 public:
  SpatialStructure(std::vector<GridPoint> locations, const CorrelationFamily& family,
                   double sigma1, double sigma2, double rho12)
      : SpatialStructure(distance_matrix(locations), family, sigma1, sigma2, rho12) {
    locations_ = std::move(locations);
  }

  // Distance matrix reused across proposals; Omega rebuilt per (nu, kappa).
  SpatialStructure(const Eigen::MatrixXd& dist, const CorrelationFamily& family,
                   double sigma1, double sigma2, double rho12)
      : family_(family),
        sigma_f_(cross_mode_covariance(sigma1, sigma2, rho12)),
        omega_(correlation_matrix(family, dist)) {
    n_ = omega_.rows();
    factorize();
  }

  const Eigen::MatrixXd& omega() const { return omega_; }
  const Eigen::Matrix2d& sigma_f() const { return sigma_f_; }
  const std::vector<GridPoint>& locations() const { return locations_; }
  Eigen::Index n() const { return n_; }

  const Eigen::LLT<Eigen::MatrixXd>& chol_omega() const { return chol_omega_; }
  const Eigen::LLT<Eigen::Matrix2d>& chol_f() const { return chol_f_; }

  double log_det_omega() const { return log_det_omega_; }
  double log_det_sigma_f() const { return log_det_sigma_f_; }

  // log det(Sigma_f (x) Omega)
  double log_det_sigma_w() const {
    return static_cast<double>(n_) * log_det_sigma_f_ + 2.0 * log_det_omega_;
  }

  // Quadratic form w' Sigma_w^{-1} w with W = [w_1 w_2] (n x 2, mode-major
  // stacking): equals tr(Sigma_f^{-1} W' Omega^{-1} W).
  double quad_form(const Eigen::MatrixXd& w_cols) const {
    Eigen::MatrixXd oi_w = chol_omega_.solve(w_cols);      // Omega^{-1} W
    Eigen::Matrix2d g = w_cols.transpose() * oi_w;         // W' Omega^{-1} W
    return (sigma_f_inv() * g).trace();
  }

  Eigen::Matrix2d sigma_f_inv() const {
    return chol_f_.solve(Eigen::Matrix2d::Identity());
  }

  // Dense 2n x 2n covariance; for tests and small-n tooling only.
  Eigen::MatrixXd dense_sigma_w() const {
    Eigen::MatrixXd s(2 * n_, 2 * n_);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        s.block(a * n_, b * n_, n_, n_) = sigma_f_(a, b) * omega_;
    return s;
  }

  // Sample W (n x 2) with vec(W) ~ MVN(0, Sigma_f (x) Omega).
  Eigen::MatrixXd sample_effects(Rng& rng) const {
    Eigen::MatrixXd z(n_, 2);
    for (Eigen::Index i = 0; i < n_; ++i)
      for (int k = 0; k < 2; ++k) z(i, k) = rng.normal();
    return chol_omega_.matrixL() * z * chol_f_.matrixL().transpose();
  }

 private:
  void factorize() {
    chol_f_.compute(sigma_f_);
    if (chol_f_.info() != Eigen::Success)
      throw NonPositiveDefiniteError("cross-mode covariance is not positive definite",
                                     smallest_eigenvalue(sigma_f_));
    chol_omega_.compute(omega_);
    if (chol_omega_.info() != Eigen::Success) {
      // One shot of diagonal jitter before giving up.
      Eigen::MatrixXd jittered = omega_;
      jittered.diagonal().array() += 1e-10;
      chol_omega_.compute(jittered);
      if (chol_omega_.info() != Eigen::Success)
        throw NonPositiveDefiniteError("spatial correlation matrix is not positive definite",
                                       smallest_eigenvalue(omega_));
      omega_ = jittered;
    }
    log_det_sigma_f_ = 2.0 * std::log(chol_f_.matrixLLT()(0, 0)) +
                       2.0 * std::log(chol_f_.matrixLLT()(1, 1));
    log_det_omega_ = 0.0;
    for (Eigen::Index i = 0; i < n_; ++i)
      log_det_omega_ += 2.0 * std::log(chol_omega_.matrixLLT()(i, i));
  }

  static double smallest_eigenvalue(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  std::vector<GridPoint> locations_;
  CorrelationFamily family_;
  Eigen::Matrix2d sigma_f_;
  Eigen::MatrixXd omega_;
  Eigen::Index n_ = 0;
  Eigen::LLT<Eigen::Matrix2d> chol_f_;
  Eigen::LLT<Eigen::MatrixXd> chol_omega_;
  double log_det_omega_ = 0.0;
  double log_det_sigma_f_ = 0.0;
};

inline double smallest_omega_eigenvalue(const CorrelationFamily& family,
                                        const Eigen::MatrixXd& dist) {
  Eigen::MatrixXd omega = correlation_matrix(family, dist);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(omega, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Smallest eigenvalue of Omega over a (nu, kappa) grid; rendered downstream
// as the positive-definiteness heatmap.
struct EigenvalueMapEntry {
  double nu = 0.0;
  double kappa = 0.0;
  double min_eig = 0.0;
};

inline std::vector<EigenvalueMapEntry> min_eigenvalue_map(
    const std::vector<double>& nu_grid, const std::vector<double>& kappa_grid,
    const std::vector<GridPoint>& locations) {
  if (nu_grid.empty() || kappa_grid.empty())
    throw ValidationError("eigenvalue map grids must be nonempty");
  Eigen::MatrixXd dist = distance_matrix(locations);
  std::vector<EigenvalueMapEntry> out;
  out.reserve(nu_grid.size() * kappa_grid.size());
  for (double nu : nu_grid)
    for (double kappa : kappa_grid) {
      CorrelationFamily fam(CorrKind::PEXP, nu, kappa);
      out.push_back({nu, kappa, smallest_omega_eigenvalue(fam, dist)});
    }
  return out;
}

}  // namespace scr
