#pragma once

// Joint log posterior over the unconstrained state: conditional likelihood,
// MVN random-effect density under the Kronecker covariance, priors, and the
// change-of-variables terms, with analytic gradients for every coordinate
// (nu and kappa flow through Omega elementwise).

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <vector>

#include "scr/common.hpp"
#include "scr/data.hpp"
#include "scr/distributions.hpp"
#include "scr/model.hpp"
#include "scr/spatial.hpp"
#include "scr/target.hpp"

namespace scr {

inline double unit_loglik(const UnitParams& p, double t, Event event,
                          double mu1loc, double mu2loc) {
  double ll = 0.0;
  const double logt = std::log(t);
  double z1 = (logt - mu1loc) / p.xi1;
  ll += event == Event::Mode1
            ? -std::log(p.xi1) - logt + std_log_pdf(p.family, z1)
            : std_log_sf(p.family, z1);
  if (!p.mixture || p.lambda >= 1.0) {
    double z = (logt - mu2loc) / p.xi21;
    ll += event == Event::Mode2
              ? -std::log(p.xi21) - logt + std_log_pdf(p.family, z)
              : std_log_sf(p.family, z);
    return ll;
  }
  if (event == Event::Mode2)
    ll += log_pdf_mode2(t, mu2loc, mu2loc + p.eta, p.xi21, p.xi22, p.lambda, p.family);
  else
    ll += log_survival_mode2(t, mu2loc, mu2loc + p.eta, p.xi21, p.xi22, p.lambda,
                             p.family);
  return ll;
}

// Eq.-(7) likelihood: failures contribute the mode density, the competing
// mode always contributes its survival term; censored units contribute both
// survival terms.
inline double log_likelihood(const ThetaT& theta, const Eigen::MatrixXd& effects,
                             const Dataset& data, Family family, bool mixture = true) {
  UnitParams up{theta.xi1, theta.xi21, theta.xi22, theta.lambda, theta.eta,
                family, mixture};
  double ll = 0.0;
  const auto& records = data.records();
  const auto& loc = data.location_index();
  const bool have_w = effects.rows() == data.n_locations() && effects.cols() == 2;
  for (std::size_t j = 0; j < records.size(); ++j) {
    Eigen::VectorXd x = data.design().row(static_cast<Eigen::Index>(j));
    double w1 = have_w ? effects(loc[j], 0) : 0.0;
    double w2 = have_w ? effects(loc[j], 1) : 0.0;
    double mu1loc = theta.mu1 + theta.beta1.dot(x) + w1;
    double mu2loc = theta.mu2 + theta.beta2.dot(x) + w2;
    ll += unit_loglik(up, records[j].time, records[j].event, mu1loc, mu2loc);
  }
  return ll;
}

// Constrained-scale log prior; out-of-support states return -inf rather than
// throwing. Flat improper priors contribute exact zeros.
inline double log_prior(const ThetaT& theta_t, const ThetaW& theta_w,
                        const PriorConfig& prior, const ModelConfig& cfg) {
  if (!(theta_t.xi1 > 0.0 && theta_t.xi21 > 0.0)) return -kInf;
  double lp = -std::log(theta_t.xi1) - std::log(theta_t.xi21);
  if (cfg.mixture) {
    if (!(theta_t.xi22 > 0.0 && theta_t.eta > 0.0)) return -kInf;
    if (!(theta_t.lambda >= 0.0 && theta_t.lambda <= 1.0)) return -kInf;
    lp += -std::log(theta_t.xi22);
  }
  if (has_effects(cfg.corr)) {
    if (!(theta_w.sigma1 > 0.0 && theta_w.sigma2 > 0.0)) return -kInf;
    if (std::abs(theta_w.rho12) > cfg.rho_bound) return -kInf;
    lp += -std::log(theta_w.sigma1) - std::log(theta_w.sigma2);
    if (has_spatial_corr(cfg.corr)) {
      if (!(theta_w.nu > 0.0)) return -kInf;
      lp += prior.a * std::log(prior.b) - std::lgamma(prior.a) -
            (prior.a + 1.0) * std::log(theta_w.nu) - prior.b / theta_w.nu;
    }
    if (has_free_kappa(cfg.corr)) {
      double h = theta_w.kappa / 2.0;
      if (!(h > 0.0 && h <= 1.0)) return -kInf;
      lp += (prior.c - 1.0) * std::log(h) + (prior.d - 1.0) * std::log1p(-h) -
            (std::lgamma(prior.c) + std::lgamma(prior.d) - std::lgamma(prior.c + prior.d)) -
            std::log(2.0);
    }
  }
  return lp;
}

class Posterior final : public SampleTarget {
 public:
  Posterior(const Dataset& data, ModelConfig cfg)
      : data_(data),
        cfg_(cfg),
        layout_(cfg, data.p(), data.n_locations(), data.covariate_names()) {
    if (has_spatial_corr(cfg_.corr)) dist_ = distance_matrix(data.locations());
  }

  const ParamLayout& layout() const { return layout_; }
  const ModelConfig& config() const { return cfg_; }
  const Dataset& data() const { return data_; }

  int dim() const override { return layout_.dim(); }

  double logp(const Eigen::VectorXd& state) const override {
    return eval(state, nullptr);
  }

  double logp_grad(const Eigen::VectorXd& state, Eigen::VectorXd& grad) const override {
    grad.setZero(layout_.dim());
    return eval(state, &grad);
  }

  Eigen::VectorXd values(const Eigen::VectorXd& state) const override {
    return layout_.constrained_vector(layout_.constrain(state));
  }

  std::vector<std::string> value_names() const override {
    return layout_.constrained_names();
  }

  int pointwise_dim() const override { return static_cast<int>(data_.size()); }

  void pointwise_loglik(const Eigen::VectorXd& state,
                        Eigen::VectorXf& out) const override {
    Parameters params = layout_.constrain(state);
    UnitParams up = unit_params(params.theta_t);
    out.resize(static_cast<Eigen::Index>(data_.size()));
    const auto& records = data_.records();
    const auto& loc = data_.location_index();
    const bool have_w = has_effects(cfg_.corr);
    for (std::size_t j = 0; j < records.size(); ++j) {
      Eigen::VectorXd x = data_.design().row(static_cast<Eigen::Index>(j));
      double w1 = have_w ? params.effects(loc[j], 0) : 0.0;
      double w2 = have_w ? params.effects(loc[j], 1) : 0.0;
      double mu1loc = params.theta_t.mu1 + params.theta_t.beta1.dot(x) + w1;
      double mu2loc = params.theta_t.mu2 + params.theta_t.beta2.dot(x) + w2;
      out[static_cast<Eigen::Index>(j)] = static_cast<float>(
          unit_loglik(up, records[j].time, records[j].event, mu1loc, mu2loc));
    }
  }

  // Count of in-support states rejected because Omega failed to factor.
  long long nonpd_count() const { return nonpd_.load(); }

  // Log posterior (and gradient when grad != nullptr) over the unconstrained
  // state. Returns -inf for out-of-support or numerically failed states.
  double eval(const Eigen::VectorXd& state, Eigen::VectorXd* grad) const {
    if (!state.allFinite()) return -kInf;
    const auto& specs = layout_.specs();
    Parameters params = layout_.constrain(state);
    const ThetaT& th = params.theta_t;
    const int n = layout_.n();

    double lp = 0.0;

    // change-of-variables terms for every transformed scalar
    for (int i = 0; i < layout_.theta_dim(); ++i) {
      lp += log_jacobian_scalar(specs[static_cast<std::size_t>(i)], state[i]);
      if (grad)
        (*grad)[i] += log_jacobian_scalar_du(specs[static_cast<std::size_t>(i)], state[i]);
    }

    // priors on the constrained scale, chained into the sampled scale
    lp += log_prior(th, params.theta_w, cfg_.prior, cfg_);
    if (!std::isfinite(lp)) return -kInf;
    if (grad) {
      (*grad)[layout_.lxi1] += -1.0;
      (*grad)[layout_.lxi21] += -1.0;
      if (cfg_.mixture) (*grad)[layout_.lxi22] += -1.0;
      if (has_effects(cfg_.corr)) {
        (*grad)[layout_.lsigma1] += -1.0;
        (*grad)[layout_.lsigma2] += -1.0;
        if (layout_.lnu >= 0)
          (*grad)[layout_.lnu] +=
              -(cfg_.prior.a + 1.0) + cfg_.prior.b / params.theta_w.nu;
        if (layout_.ukappa >= 0) {
          double h = params.theta_w.kappa / 2.0;
          double dlp_dkappa =
              ((cfg_.prior.c - 1.0) / h - (cfg_.prior.d - 1.0) / (1.0 - h)) * 0.5;
          (*grad)[layout_.ukappa] +=
              dlp_dkappa *
              constrain_scalar_du(specs[static_cast<std::size_t>(layout_.ukappa)],
                                  state[layout_.ukappa]);
        }
      }
    }

    // likelihood
    UnitParams up = unit_params(th);
    double gmu1 = 0.0, gmu2 = 0.0, geta = 0.0, glxi1 = 0.0, glxi21 = 0.0,
           glxi22 = 0.0, glambda = 0.0;
    Eigen::VectorXd gbeta1 = Eigen::VectorXd::Zero(layout_.p());
    Eigen::VectorXd gbeta2 = Eigen::VectorXd::Zero(layout_.p());
    Eigen::MatrixXd gw = Eigen::MatrixXd::Zero(n, 2);

    const auto& records = data_.records();
    const auto& loc = data_.location_index();
    const bool have_w = has_effects(cfg_.corr);
    for (std::size_t j = 0; j < records.size(); ++j) {
      auto x = data_.design().row(static_cast<Eigen::Index>(j));
      int i = loc[j];
      double w1 = have_w ? params.effects(i, 0) : 0.0;
      double w2 = have_w ? params.effects(i, 1) : 0.0;
      double mu1loc = th.mu1 + x.dot(th.beta1) + w1;
      double mu2loc = th.mu2 + x.dot(th.beta2) + w2;
      if (grad) {
        UnitGrad g = unit_loglik_grad(up, records[j].time, records[j].event,
                                      mu1loc, mu2loc);
        lp += g.loglik;
        gmu1 += g.d_mu1loc;
        gmu2 += g.d_mu2loc;
        geta += g.d_eta;
        glxi1 += g.d_lxi1;
        glxi21 += g.d_lxi21;
        glxi22 += g.d_lxi22;
        glambda += g.d_lambda;
        gbeta1 += g.d_mu1loc * x.transpose();
        gbeta2 += g.d_mu2loc * x.transpose();
        if (have_w) {
          gw(i, 0) += g.d_mu1loc;
          gw(i, 1) += g.d_mu2loc;
        }
      } else {
        lp += unit_loglik(up, records[j].time, records[j].event, mu1loc, mu2loc);
      }
    }
    if (!std::isfinite(lp)) return -kInf;

    // MVN density of the reconstructed effects under Sigma_f (x) Omega
    if (have_w) {
      Eigen::Matrix2d sigma_f = cross_mode_covariance(
          params.theta_w.sigma1, params.theta_w.sigma2, params.theta_w.rho12);
      Eigen::LLT<Eigen::Matrix2d> chol_f(sigma_f);
      if (chol_f.info() != Eigen::Success) return -kInf;

      Eigen::MatrixXd omega;
      if (has_spatial_corr(cfg_.corr)) {
        CorrelationFamily fam(to_corr_kind(cfg_.corr), params.theta_w.nu,
                              params.theta_w.kappa);
        omega = correlation_matrix(fam, dist_);
      } else {
        omega = Eigen::MatrixXd::Identity(n, n);
      }
      Eigen::LLT<Eigen::MatrixXd> chol_omega(omega);
      if (chol_omega.info() != Eigen::Success) {
        Eigen::MatrixXd jittered = omega;
        jittered.diagonal().array() += 1e-10;
        chol_omega.compute(jittered);
        if (chol_omega.info() != Eigen::Success) {
          nonpd_.fetch_add(1, std::memory_order_relaxed);
          return -kInf;
        }
      }

      double log_det_f = 2.0 * std::log(chol_f.matrixLLT()(0, 0)) +
                         2.0 * std::log(chol_f.matrixLLT()(1, 1));
      double log_det_omega = 0.0;
      for (int i = 0; i < n; ++i)
        log_det_omega += 2.0 * std::log(chol_omega.matrixLLT()(i, i));

      const Eigen::MatrixXd& w = params.effects;  // n x 2
      Eigen::Matrix2d sigma_f_inv = chol_f.solve(Eigen::Matrix2d::Identity());
      Eigen::MatrixXd oi_w = chol_omega.solve(w);  // Omega^{-1} W
      Eigen::Matrix2d gram = w.transpose() * oi_w;
      double quad = (sigma_f_inv * gram).trace();
      lp += -0.5 * (2.0 * n * kLog2Pi + n * log_det_f + 2.0 * log_det_omega + quad);
      if (!std::isfinite(lp)) return -kInf;

      if (grad) {
        // effects: d/dW = -Omega^{-1} W Sigma_f^{-1}
        gw -= oi_w * sigma_f_inv;

        // Sigma_f block chained through (sigma1, sigma2, rho12)
        Eigen::Matrix2d dmat =
            -0.5 * (static_cast<double>(n) * sigma_f_inv -
                    sigma_f_inv * gram * sigma_f_inv);
        double s1 = params.theta_w.sigma1, s2 = params.theta_w.sigma2,
               r = params.theta_w.rho12;
        Eigen::Matrix2d dS1, dS2, dR;
        dS1 << 2.0 * s1, r * s2, r * s2, 0.0;
        dS2 << 0.0, r * s1, r * s1, 2.0 * s2;
        dR << 0.0, s1 * s2, s1 * s2, 0.0;
        (*grad)[layout_.lsigma1] += dmat.cwiseProduct(dS1).sum() * s1;
        (*grad)[layout_.lsigma2] += dmat.cwiseProduct(dS2).sum() * s2;
        (*grad)[layout_.urho] +=
            dmat.cwiseProduct(dR).sum() *
            constrain_scalar_du(specs[static_cast<std::size_t>(layout_.urho)],
                                state[layout_.urho]);

        // (nu, kappa) flow elementwise through Omega
        if (has_spatial_corr(cfg_.corr)) {
          Eigen::MatrixXd omega_inv =
              chol_omega.solve(Eigen::MatrixXd::Identity(n, n));
          Eigen::MatrixXd emat = -omega_inv + 0.5 * (oi_w * sigma_f_inv * oi_w.transpose());
          double nu = params.theta_w.nu, kappa = params.theta_w.kappa;
          double dlp_dnu = 0.0, dlp_dkappa = 0.0;
          for (int s = 0; s < n; ++s)
            for (int l = 0; l < n; ++l) {
              if (s == l) continue;
              double d = dist_(s, l);
              double q = std::pow(d / nu, kappa);
              double om = std::exp(-q);
              dlp_dnu += emat(s, l) * om * q * kappa / nu;
              dlp_dkappa += emat(s, l) * om * (-q) * std::log(d / nu);
            }
          (*grad)[layout_.lnu] += dlp_dnu * nu;
          if (layout_.ukappa >= 0)
            (*grad)[layout_.ukappa] +=
                dlp_dkappa *
                constrain_scalar_du(specs[static_cast<std::size_t>(layout_.ukappa)],
                                    state[layout_.ukappa]);
        }
      }
    }

    if (grad) {
      (*grad)[layout_.mu1] += gmu1;
      (*grad)[layout_.mu2] += gmu2;
      for (int j = 0; j < layout_.p(); ++j) {
        (*grad)[layout_.beta1_at(j)] += gbeta1[j];
        (*grad)[layout_.beta2_at(j)] += gbeta2[j];
      }
      (*grad)[layout_.lxi1] += glxi1;
      (*grad)[layout_.lxi21] += glxi21;
      if (cfg_.mixture) {
        (*grad)[layout_.lxi22] += glxi22;
        (*grad)[layout_.leta] += geta * th.eta;
        (*grad)[layout_.llambda] +=
            glambda *
            constrain_scalar_du(specs[static_cast<std::size_t>(layout_.llambda)],
                                state[layout_.llambda]);
      }
      if (have_w) {
        // chain through the hard sum-to-zero reconstruction
        for (int k = 0; k < 2; ++k)
          for (int i = 0; i < n - 1; ++i)
            (*grad)[layout_.effect_at(k, i)] += gw(i, k) - gw(n - 1, k);
      }
    }
    return lp;
  }

 private:
  static CorrKind to_corr_kind(CorrModel m) {
    switch (m) {
      case CorrModel::PEXP: return CorrKind::PEXP;
      case CorrModel::EXP: return CorrKind::EXP;
      case CorrModel::GAU: return CorrKind::GAU;
      default: throw NumericalError("model has no spatial correlation family");
    }
  }

  UnitParams unit_params(const ThetaT& th) const {
    return UnitParams{th.xi1,    th.xi21, th.xi22,     th.lambda,
                      th.eta,    cfg_.family, cfg_.mixture};
  }

  const Dataset& data_;
  ModelConfig cfg_;
  ParamLayout layout_;
  Eigen::MatrixXd dist_;
  mutable std::atomic<long long> nonpd_{0};
};

}  // namespace scr
