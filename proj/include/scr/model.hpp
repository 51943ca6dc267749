#pragma once

// Model configuration, the unconstrained reparameterization, and packing
// between the sampled vector and constrained parameters. Parameters that a
// variant pins (kappa under EXP/GAU, the whole spatial block under NONE) are
// removed from the sampled vector rather than held fixed.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "scr/common.hpp"
#include "scr/data.hpp"
#include "scr/spatial.hpp"

namespace scr {

// Table-3 model grid: three correlated-effects variants, uncorrelated
// effects (Omega = I), and no random effects at all.
enum class CorrModel { PEXP, EXP, GAU, INDEP, NONE };

inline std::string corr_model_name(CorrModel m) {
  switch (m) {
    case CorrModel::PEXP: return "pexp";
    case CorrModel::EXP: return "exp";
    case CorrModel::GAU: return "gau";
    case CorrModel::INDEP: return "indep";
    case CorrModel::NONE: return "none";
  }
  return "?";
}

inline bool has_effects(CorrModel m) { return m != CorrModel::NONE; }
inline bool has_spatial_corr(CorrModel m) {
  return m == CorrModel::PEXP || m == CorrModel::EXP || m == CorrModel::GAU;
}
inline bool has_free_kappa(CorrModel m) { return m == CorrModel::PEXP; }

// nu ~ IG(a,b), kappa/2 ~ Beta(c,d); defaults penalize large nu so that the
// correlation matrix stays positive definite with high prior probability.
struct PriorConfig {
  double a = 5.0;
  double b = 1.0;
  double c = 1.0;
  double d = 1.0;

  void validate() const {
    if (!(a > 0.0 && b > 0.0 && c > 0.0 && d > 0.0))
      throw ValidationError("prior hyperparameters must be positive");
  }
};

struct ModelConfig {
  Family family = Family::Weibull;
  CorrModel corr = CorrModel::PEXP;
  bool mixture = true;  // two-component mode-2 mixture; false pins lambda = 1
  PriorConfig prior;
  double rho_bound = 0.95;
};

// Spatial parameters theta_w on the constrained scale.
struct ThetaW {
  double sigma1 = 0.1;
  double sigma2 = 0.1;
  double rho12 = 0.0;
  double nu = 0.25;
  double kappa = 1.0;
};

// Full constrained parameter state. effects holds the reconstructed w as an
// n x 2 matrix (columns are modes; mode-major stacking when flattened).
struct Parameters {
  ThetaT theta_t;
  ThetaW theta_w;
  Eigen::MatrixXd effects;
};

enum class Transform { Identity, Log, Logit };

struct ParamSpec {
  std::string name;
  Transform transform = Transform::Identity;
  double lo = 0.0;  // Logit bounds
  double hi = 1.0;
};

inline double sigmoid(double u) {
  return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
}

inline double constrain_scalar(const ParamSpec& s, double u) {
  switch (s.transform) {
    case Transform::Identity: return u;
    case Transform::Log: return std::exp(u);
    case Transform::Logit: return s.lo + (s.hi - s.lo) * sigmoid(u);
  }
  return u;
}

inline double unconstrain_scalar(const ParamSpec& s, double x) {
  switch (s.transform) {
    case Transform::Identity: return x;
    case Transform::Log: return std::log(x);
    case Transform::Logit: {
      double p = (x - s.lo) / (s.hi - s.lo);
      return std::log(p) - std::log1p(-p);
    }
  }
  return x;
}

// log |dx/du| for the change of variables, and its derivative in u.
inline double log_jacobian_scalar(const ParamSpec& s, double u) {
  switch (s.transform) {
    case Transform::Identity: return 0.0;
    case Transform::Log: return u;
    case Transform::Logit: {
      double lsig = -std::log1p(std::exp(-u));   // log sigmoid(u)
      double lsigm = -std::log1p(std::exp(u));   // log sigmoid(-u)
      return std::log(s.hi - s.lo) + lsig + lsigm;
    }
  }
  return 0.0;
}

inline double log_jacobian_scalar_du(const ParamSpec& s, double u) {
  switch (s.transform) {
    case Transform::Identity: return 0.0;
    case Transform::Log: return 1.0;
    case Transform::Logit: return 1.0 - 2.0 * sigmoid(u);
  }
  return 0.0;
}

// dx/du, used to chain constrained-scale gradients onto the sampled scale.
inline double constrain_scalar_du(const ParamSpec& s, double u) {
  switch (s.transform) {
    case Transform::Identity: return 1.0;
    case Transform::Log: return std::exp(u);
    case Transform::Logit: {
      double sig = sigmoid(u);
      return (s.hi - s.lo) * sig * (1.0 - sig);
    }
  }
  return 1.0;
}

// Index map of the sampled vector. Effects coordinates (2(n-1) free values,
// hard sum-to-zero per mode) sit after the theta block.
class ParamLayout {
 public:
  ParamLayout(const ModelConfig& cfg, int p, int n,
              const std::vector<std::string>& covariate_names)
      : cfg_(cfg), p_(p), n_(n) {
    auto push = [&](const std::string& name, Transform t, double lo = 0.0,
                    double hi = 1.0) {
      int idx = static_cast<int>(specs_.size());
      specs_.push_back({name, t, lo, hi});
      return idx;
    };
    for (int j = 0; j < p; ++j) {
      std::string suffix = j < static_cast<int>(covariate_names.size())
                               ? covariate_names[static_cast<std::size_t>(j)]
                               : std::to_string(j + 1);
      push("beta1[" + suffix + "]", Transform::Identity);
    }
    for (int j = 0; j < p; ++j) {
      std::string suffix = j < static_cast<int>(covariate_names.size())
                               ? covariate_names[static_cast<std::size_t>(j)]
                               : std::to_string(j + 1);
      push("beta2[" + suffix + "]", Transform::Identity);
    }
    mu1 = push("mu1", Transform::Identity);
    mu2 = push("mu2", Transform::Identity);
    lxi1 = push("xi1", Transform::Log);
    if (cfg.mixture) {
      lxi21 = push("xi21", Transform::Log);
      lxi22 = push("xi22", Transform::Log);
      leta = push("eta", Transform::Log);
      llambda = push("lambda", Transform::Logit, 0.0, 1.0);
    } else {
      lxi21 = push("xi2", Transform::Log);
    }
    if (has_effects(cfg.corr)) {
      lsigma1 = push("sigma1", Transform::Log);
      lsigma2 = push("sigma2", Transform::Log);
      urho = push("rho12", Transform::Logit, -cfg.rho_bound, cfg.rho_bound);
      if (has_spatial_corr(cfg.corr)) lnu = push("nu", Transform::Log);
      if (has_free_kappa(cfg.corr)) ukappa = push("kappa", Transform::Logit, 0.0, 2.0);
    }
  }

  int p() const { return p_; }
  int n() const { return n_; }
  int theta_dim() const { return static_cast<int>(specs_.size()); }
  int effects_dim() const { return has_effects(cfg_.corr) ? 2 * (n_ - 1) : 0; }
  int dim() const { return theta_dim() + effects_dim(); }
  const std::vector<ParamSpec>& specs() const { return specs_; }
  const ModelConfig& config() const { return cfg_; }

  int beta1_at(int j) const { return j; }
  int beta2_at(int j) const { return p_ + j; }
  // free effect coordinate for mode k (0-based) and location i in [0, n-1)
  int effect_at(int k, int i) const { return theta_dim() + k * (n_ - 1) + i; }

  int mu1 = -1, mu2 = -1, lxi1 = -1, lxi21 = -1, lxi22 = -1, leta = -1,
      llambda = -1, lsigma1 = -1, lsigma2 = -1, urho = -1, lnu = -1, ukappa = -1;

  // Names of the constrained draw vector: theta block then reconstructed
  // effects w1[1..n], w2[1..n].
  std::vector<std::string> constrained_names() const {
    std::vector<std::string> names;
    for (const auto& s : specs_) names.push_back(s.name);
    if (has_effects(cfg_.corr)) {
      for (int k = 1; k <= 2; ++k)
        for (int i = 1; i <= n_; ++i)
          names.push_back("w" + std::to_string(k) + "[" + std::to_string(i) + "]");
    }
    return names;
  }
  int constrained_dim() const {
    return theta_dim() + (has_effects(cfg_.corr) ? 2 * n_ : 0);
  }

  // Hard sum-to-zero reconstruction: per mode the n-th effect is the negative
  // sum of the n-1 free coordinates.
  Eigen::MatrixXd reconstruct_effects(const Eigen::VectorXd& state) const {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n_, 2);
    if (!has_effects(cfg_.corr)) return w;
    for (int k = 0; k < 2; ++k) {
      double sum = 0.0;
      for (int i = 0; i < n_ - 1; ++i) {
        double v = state[effect_at(k, i)];
        w(i, k) = v;
        sum += v;
      }
      w(n_ - 1, k) = -sum;
    }
    return w;
  }

  Parameters constrain(const Eigen::VectorXd& state) const {
    Parameters out;
    out.theta_t.beta1.resize(p_);
    out.theta_t.beta2.resize(p_);
    for (int j = 0; j < p_; ++j) {
      out.theta_t.beta1[j] = state[beta1_at(j)];
      out.theta_t.beta2[j] = state[beta2_at(j)];
    }
    out.theta_t.mu1 = state[mu1];
    out.theta_t.mu2 = state[mu2];
    out.theta_t.xi1 = std::exp(state[lxi1]);
    out.theta_t.xi21 = std::exp(state[lxi21]);
    if (cfg_.mixture) {
      out.theta_t.xi22 = std::exp(state[lxi22]);
      out.theta_t.eta = std::exp(state[leta]);
      out.theta_t.lambda = constrain_scalar(specs_[static_cast<std::size_t>(llambda)],
                                            state[llambda]);
    } else {
      out.theta_t.xi22 = out.theta_t.xi21;
      out.theta_t.eta = 1.0;
      out.theta_t.lambda = 1.0;
    }
    if (has_effects(cfg_.corr)) {
      out.theta_w.sigma1 = std::exp(state[lsigma1]);
      out.theta_w.sigma2 = std::exp(state[lsigma2]);
      out.theta_w.rho12 =
          constrain_scalar(specs_[static_cast<std::size_t>(urho)], state[urho]);
      if (lnu >= 0) out.theta_w.nu = std::exp(state[lnu]);
      if (cfg_.corr == CorrModel::EXP) out.theta_w.kappa = 1.0;
      else if (cfg_.corr == CorrModel::GAU) out.theta_w.kappa = 2.0;
      else if (ukappa >= 0)
        out.theta_w.kappa =
            constrain_scalar(specs_[static_cast<std::size_t>(ukappa)], state[ukappa]);
      out.effects = reconstruct_effects(state);
    }
    return out;
  }

  Eigen::VectorXd unconstrain(const Parameters& params) const {
    Eigen::VectorXd state = Eigen::VectorXd::Zero(dim());
    for (int j = 0; j < p_; ++j) {
      state[beta1_at(j)] = params.theta_t.beta1[j];
      state[beta2_at(j)] = params.theta_t.beta2[j];
    }
    state[mu1] = params.theta_t.mu1;
    state[mu2] = params.theta_t.mu2;
    state[lxi1] = std::log(params.theta_t.xi1);
    state[lxi21] = std::log(params.theta_t.xi21);
    if (cfg_.mixture) {
      state[lxi22] = std::log(params.theta_t.xi22);
      state[leta] = std::log(params.theta_t.eta);
      state[llambda] = unconstrain_scalar(specs_[static_cast<std::size_t>(llambda)],
                                          params.theta_t.lambda);
    }
    if (has_effects(cfg_.corr)) {
      state[lsigma1] = std::log(params.theta_w.sigma1);
      state[lsigma2] = std::log(params.theta_w.sigma2);
      state[urho] =
          unconstrain_scalar(specs_[static_cast<std::size_t>(urho)], params.theta_w.rho12);
      if (lnu >= 0) state[lnu] = std::log(params.theta_w.nu);
      if (ukappa >= 0)
        state[ukappa] = unconstrain_scalar(specs_[static_cast<std::size_t>(ukappa)],
                                           params.theta_w.kappa);
      if (params.effects.rows() == n_ && params.effects.cols() == 2)
        for (int k = 0; k < 2; ++k)
          for (int i = 0; i < n_ - 1; ++i)
            state[effect_at(k, i)] = params.effects(i, k);
    }
    return state;
  }

  // Constrained draw vector (theta block + reconstructed effects).
  Eigen::VectorXd constrained_vector(const Parameters& params) const {
    Eigen::VectorXd out(constrained_dim());
    int at = 0;
    for (int j = 0; j < p_; ++j) out[at++] = params.theta_t.beta1[j];
    for (int j = 0; j < p_; ++j) out[at++] = params.theta_t.beta2[j];
    out[at++] = params.theta_t.mu1;
    out[at++] = params.theta_t.mu2;
    out[at++] = params.theta_t.xi1;
    out[at++] = params.theta_t.xi21;
    if (cfg_.mixture) {
      out[at++] = params.theta_t.xi22;
      out[at++] = params.theta_t.eta;
      out[at++] = params.theta_t.lambda;
    }
    if (has_effects(cfg_.corr)) {
      out[at++] = params.theta_w.sigma1;
      out[at++] = params.theta_w.sigma2;
      out[at++] = params.theta_w.rho12;
      if (lnu >= 0) out[at++] = params.theta_w.nu;
      if (ukappa >= 0) out[at++] = params.theta_w.kappa;
      for (int k = 0; k < 2; ++k)
        for (int i = 0; i < n_; ++i) out[at++] = params.effects(i, k);
    }
    return out;
  }

 private:
  ModelConfig cfg_;
  int p_ = 0;
  int n_ = 0;
  std::vector<ParamSpec> specs_;
};

}  // namespace scr
