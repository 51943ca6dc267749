#pragma once

// Log-location-scale densities and survival functions on the log-time scale,
// the two-component mode-2 mixture, and the regression location structure.
// Everything is computed in log space; survival comes from the survival form
// directly (SEV: -exp(z)), never via log(1 - Phi).

#include <Eigen/Dense>
#include <cmath>

#include "scr/common.hpp"
#include "scr/data.hpp"

namespace scr {

// Standardized location-scale member on log time: SEV for Weibull, standard
// normal for lognormal.
inline double std_log_pdf(Family f, double z) {
  if (f == Family::Weibull) return z - std::exp(z);
  return norm_log_pdf(z);
}

inline double std_log_pdf_dz(Family f, double z) {
  if (f == Family::Weibull) return 1.0 - std::exp(z);
  return -z;
}

inline double std_log_sf(Family f, double z) {
  if (f == Family::Weibull) return -std::exp(z);
  return norm_log_sf(z);
}

inline double std_log_sf_dz(Family f, double z) {
  if (f == Family::Weibull) return -std::exp(z);
  return -norm_hazard(z);
}

inline void check_time_scale(double t, double xi) {
  if (!(t > 0.0)) throw std::domain_error("time must be positive");
  if (!(xi > 0.0)) throw std::domain_error("scale must be positive");
}

// log f of Eq-style single log-location-scale density, z = (log t - mu)/xi.
inline double log_pdf_mode1(double t, double mu, double xi, Family family) {
  check_time_scale(t, xi);
  double z = (std::log(t) - mu) / xi;
  return -std::log(xi) - std::log(t) + std_log_pdf(family, z);
}

inline double log_survival_mode1(double t, double mu, double xi, Family family) {
  check_time_scale(t, xi);
  double z = (std::log(t) - mu) / xi;
  return std_log_sf(family, z);
}

// lambda-weighted two-component mixture via log-sum-exp. lambda = 1 or 0
// degenerates exactly to the corresponding single component.
inline double log_pdf_mode2(double t, double mu21, double mu22, double xi21,
                            double xi22, double lambda, Family family) {
  check_time_scale(t, xi21);
  check_time_scale(t, xi22);
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::domain_error("mixture proportion must lie in [0,1]");
  if (lambda == 1.0) return log_pdf_mode1(t, mu21, xi21, family);
  if (lambda == 0.0) return log_pdf_mode1(t, mu22, xi22, family);
  double la = std::log(lambda) + log_pdf_mode1(t, mu21, xi21, family);
  double lb = std::log1p(-lambda) + log_pdf_mode1(t, mu22, xi22, family);
  return log_sum_exp(la, lb);
}

inline double log_survival_mode2(double t, double mu21, double mu22, double xi21,
                                 double xi22, double lambda, Family family) {
  check_time_scale(t, xi21);
  check_time_scale(t, xi22);
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::domain_error("mixture proportion must lie in [0,1]");
  if (lambda == 1.0) return log_survival_mode1(t, mu21, xi21, family);
  if (lambda == 0.0) return log_survival_mode1(t, mu22, xi22, family);
  double la = std::log(lambda) + log_survival_mode1(t, mu21, xi21, family);
  double lb = std::log1p(-lambda) + log_survival_mode1(t, mu22, xi22, family);
  return log_sum_exp(la, lb);
}

// Event-time parameters theta_t. eta > 0 encodes mu_ijk1 < mu_ijk2 and pins
// the mixture labels; mixture=false pins lambda=1 and reduces mode 2 to a
// single component with scale xi21.
struct ThetaT {
  double mu1 = 0.0;
  double mu2 = 0.0;
  Eigen::VectorXd beta1;
  Eigen::VectorXd beta2;
  double xi1 = 1.0;
  double xi21 = 1.0;
  double xi22 = 1.0;
  double lambda = 0.5;
  double eta = 1.0;

  void validate() const {
    if (!(xi1 > 0.0 && xi21 > 0.0 && xi22 > 0.0))
      throw std::domain_error("scales must be positive");
    if (!(lambda >= 0.0 && lambda <= 1.0))
      throw std::domain_error("lambda must lie in [0,1]");
    if (!(eta > 0.0)) throw std::domain_error("eta must be positive");
  }
};

struct LocationParams {
  double mu_k1 = 0.0;  // mode-1 location, or first mixture component location
  double mu_k2 = 0.0;  // second mixture component location (mode 2 only)
};

inline LocationParams location_params(const ThetaT& theta, const Eigen::VectorXd& x,
                                      double w_ik, int mode) {
  LocationParams out;
  if (mode == 1) {
    out.mu_k1 = theta.mu1 + theta.beta1.dot(x) + w_ik;
    out.mu_k2 = out.mu_k1;
  } else {
    double base = theta.mu2 + theta.beta2.dot(x) + w_ik;
    out.mu_k1 = base;
    out.mu_k2 = base + theta.eta;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fused per-unit likelihood contribution and its partial derivatives on the
// constrained scale, shared by the posterior gradient and the MCEM M step.
// Mode-1 location is mu1loc; mode-2 component locations are mu2loc and
// mu2loc + eta.

struct UnitGrad {
  double loglik = 0.0;
  double d_mu1loc = 0.0;   // d/d(mu_ij1)
  double d_mu2loc = 0.0;   // d/d(mu_ij2 base), both components shift
  double d_eta = 0.0;      // d/d(eta), second component only
  double d_lxi1 = 0.0;     // d/d(log xi1)
  double d_lxi21 = 0.0;    // d/d(log xi21)
  double d_lxi22 = 0.0;    // d/d(log xi22)
  double d_lambda = 0.0;   // d/d(lambda), constrained scale
};

struct UnitParams {
  double xi1, xi21, xi22, lambda, eta;
  Family family;
  bool mixture;
};

inline UnitGrad unit_loglik_grad(const UnitParams& p, double t, Event event,
                                 double mu1loc, double mu2loc) {
  UnitGrad g;
  const double logt = std::log(t);
  const Family f = p.family;

  // mode 1 term
  {
    double z = (logt - mu1loc) / p.xi1;
    if (event == Event::Mode1) {
      g.loglik += -std::log(p.xi1) - logt + std_log_pdf(f, z);
      double dz = std_log_pdf_dz(f, z);
      g.d_mu1loc += -dz / p.xi1;
      g.d_lxi1 += -1.0 - z * dz;
    } else {
      g.loglik += std_log_sf(f, z);
      double dz = std_log_sf_dz(f, z);
      g.d_mu1loc += -dz / p.xi1;
      g.d_lxi1 += -z * dz;
    }
  }

  // mode 2 term
  if (!p.mixture || p.lambda >= 1.0) {
    double z = (logt - mu2loc) / p.xi21;
    if (event == Event::Mode2) {
      g.loglik += -std::log(p.xi21) - logt + std_log_pdf(f, z);
      double dz = std_log_pdf_dz(f, z);
      g.d_mu2loc += -dz / p.xi21;
      g.d_lxi21 += -1.0 - z * dz;
    } else {
      g.loglik += std_log_sf(f, z);
      double dz = std_log_sf_dz(f, z);
      g.d_mu2loc += -dz / p.xi21;
      g.d_lxi21 += -z * dz;
    }
    return g;
  }

  const double za = (logt - mu2loc) / p.xi21;
  const double zb = (logt - mu2loc - p.eta) / p.xi22;
  const double llam = std::log(p.lambda);
  const double l1mlam = std::log1p(-p.lambda);
  if (event == Event::Mode2) {
    double la = -std::log(p.xi21) - logt + std_log_pdf(f, za);
    double lb = -std::log(p.xi22) - logt + std_log_pdf(f, zb);
    double lf = log_sum_exp(llam + la, l1mlam + lb);
    double pa = std::exp(llam + la - lf);
    double pb = std::exp(l1mlam + lb - lf);
    double dza = std_log_pdf_dz(f, za);
    double dzb = std_log_pdf_dz(f, zb);
    g.loglik += lf;
    g.d_mu2loc += pa * (-dza / p.xi21) + pb * (-dzb / p.xi22);
    g.d_eta += pb * (-dzb / p.xi22);
    g.d_lxi21 += pa * (-1.0 - za * dza);
    g.d_lxi22 += pb * (-1.0 - zb * dzb);
    g.d_lambda += std::exp(la - lf) - std::exp(lb - lf);
  } else {
    double lsa = std_log_sf(f, za);
    double lsb = std_log_sf(f, zb);
    double ls = log_sum_exp(llam + lsa, l1mlam + lsb);
    double qa = std::exp(llam + lsa - ls);
    double qb = std::exp(l1mlam + lsb - ls);
    double dza = std_log_sf_dz(f, za);
    double dzb = std_log_sf_dz(f, zb);
    g.loglik += ls;
    g.d_mu2loc += qa * (-dza / p.xi21) + qb * (-dzb / p.xi22);
    g.d_eta += qb * (-dzb / p.xi22);
    g.d_lxi21 += qa * (-za * dza);
    g.d_lxi22 += qb * (-zb * dzb);
    g.d_lambda += std::exp(lsa - ls) - std::exp(lsb - ls);
  }
  return g;
}

}  // namespace scr
