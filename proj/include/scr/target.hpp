#pragma once

// Sampling target interface. The HMC sampler only needs a differentiable
// unnormalized log density; the hooks below let a target define how draws
// are stored (constrained values, names, pointwise log-likelihoods).

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace scr {

class SampleTarget {
 public:
  virtual ~SampleTarget() = default;

  virtual int dim() const = 0;

  // Returns log density and fills grad (same length as x). Non-finite
  // returns signal out-of-support states; grad content is then ignored.
  virtual double logp_grad(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const = 0;

  virtual double logp(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g(dim());
    return logp_grad(x, g);
  }

  // Values stored per draw (constrained scale); defaults to the sampled
  // coordinates themselves.
  virtual Eigen::VectorXd values(const Eigen::VectorXd& x) const { return x; }

  virtual std::vector<std::string> value_names() const {
    std::vector<std::string> names;
    for (int i = 1; i <= dim(); ++i) names.push_back("x" + std::to_string(i));
    return names;
  }

  // Per-observation log-likelihood storage (0 = none).
  virtual int pointwise_dim() const { return 0; }
  virtual void pointwise_loglik(const Eigen::VectorXd& /*x*/,
                                Eigen::VectorXf& /*out*/) const {}
};

}  // namespace scr
