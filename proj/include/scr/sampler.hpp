#pragma once

// Multi-chain Hamiltonian Monte Carlo over an unconstrained target: jittered
// static trajectories with multinomial state selection, dual-averaging step
// size adaptation, and a diagonal metric estimated over warmup windows.
// Chains own independent RNG streams split from the master seed, so results
// do not depend on the degree of parallelism.

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "scr/common.hpp"
#include "scr/csv.hpp"
#include "scr/diagnostics.hpp"
#include "scr/target.hpp"

namespace scr {

struct SamplerConfig {
  int chains = 4;
  int warmup_iters = 6000;
  int sampling_iters = 2000;
  std::uint64_t seed = 2012;
  int max_leapfrog = 32;       // trajectory length cap
  double target_accept = 0.8;
  int threads = 0;             // 0 = as many as chains
  bool store_pointwise = false;
  double divergence_threshold = 1000.0;

  void validate() const {
    if (chains < 1 || warmup_iters < 0 || sampling_iters < 1 || max_leapfrog < 1)
      throw ValidationError("sampler configuration out of range");
    if (!(target_accept > 0.0 && target_accept < 1.0))
      throw ValidationError("target_accept must lie in (0,1)");
  }
};

struct ChainResult {
  Eigen::MatrixXd values;      // sampling_iters x value_dim (constrained)
  Eigen::VectorXd lp;          // sampling_iters
  Eigen::MatrixXf pointwise;   // sampling_iters x pointwise_dim (optional)
  int divergences = 0;
  double mean_accept = 0.0;
  double step_size = 0.0;
};

struct PosteriorDraws {
  std::vector<std::string> names;
  std::vector<ChainResult> chains;

  int n_chains() const { return static_cast<int>(chains.size()); }
  int iters_per_chain() const {
    return chains.empty() ? 0 : static_cast<int>(chains[0].values.rows());
  }
  int n_params() const { return static_cast<int>(names.size()); }

  int param_index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    return -1;
  }

  diag::ChainDraws param_chains(int j) const {
    diag::ChainDraws out;
    for (const auto& c : chains) {
      std::vector<double> v(static_cast<std::size_t>(c.values.rows()));
      for (Eigen::Index i = 0; i < c.values.rows(); ++i)
        v[static_cast<std::size_t>(i)] = c.values(i, j);
      out.push_back(std::move(v));
    }
    return out;
  }

  diag::ChainDraws lp_chains() const {
    diag::ChainDraws out;
    for (const auto& c : chains) {
      std::vector<double> v(static_cast<std::size_t>(c.lp.size()));
      for (Eigen::Index i = 0; i < c.lp.size(); ++i)
        v[static_cast<std::size_t>(i)] = c.lp[i];
      out.push_back(std::move(v));
    }
    return out;
  }

  std::vector<double> pooled(int j) const {
    std::vector<double> out;
    for (const auto& c : chains)
      for (Eigen::Index i = 0; i < c.values.rows(); ++i) out.push_back(c.values(i, j));
    return out;
  }

  Eigen::VectorXd posterior_mean() const {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(n_params());
    long total = 0;
    for (const auto& c : chains) {
      for (Eigen::Index i = 0; i < c.values.rows(); ++i) m += c.values.row(i).transpose();
      total += c.values.rows();
    }
    return m / static_cast<double>(total);
  }

  double divergence_rate() const {
    long div = 0, total = 0;
    for (const auto& c : chains) {
      div += c.divergences;
      total += c.values.rows();
    }
    return total ? static_cast<double>(div) / static_cast<double>(total) : 0.0;
  }

  std::vector<std::string> warnings;
};

// Uniform(-2,2) coordinates, retried until the log density is finite.
inline Eigen::VectorXd initialize_state(const SampleTarget& target, Rng& rng,
                                        int max_tries = 100) {
  Eigen::VectorXd q(target.dim());
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    for (int i = 0; i < q.size(); ++i) q[i] = rng.uniform(-2.0, 2.0);
    if (std::isfinite(target.logp(q))) return q;
  }
  throw InitializationError(
      "log posterior not finite after " + std::to_string(max_tries) +
      " uniform(-2,2) initial draws");
}

namespace hmc {

// Nesterov dual averaging toward the target acceptance statistic.
struct DualAveraging {
  double mu = 0.0;
  double log_eps = 0.0;
  double log_eps_bar = 0.0;
  double h_bar = 0.0;
  double counter = 0.0;
  static constexpr double gamma = 0.05, t0 = 10.0, kappa = 0.75;

  void restart(double eps) {
    mu = std::log(10.0 * eps);
    log_eps = std::log(eps);
    log_eps_bar = std::log(eps);
    h_bar = 0.0;
    counter = 0.0;
  }

  double update(double accept_stat, double target) {
    counter += 1.0;
    double eta = 1.0 / (counter + t0);
    h_bar = (1.0 - eta) * h_bar + eta * (target - accept_stat);
    log_eps = mu - std::sqrt(counter) / gamma * h_bar;
    double w = std::pow(counter, -kappa);
    log_eps_bar = w * log_eps + (1.0 - w) * log_eps_bar;
    return std::exp(log_eps);
  }

  double adapted() const { return std::exp(log_eps_bar); }
};

struct ChainState {
  Eigen::VectorXd q;
  Eigen::VectorXd grad;
  double logp = 0.0;
};

struct TransitionStats {
  double accept_stat = 0.0;
  bool divergent = false;
};

// One HMC transition: total length L ~ U{1..max_leapfrog}, the current state
// placed uniformly inside the trajectory, next state drawn multinomially by
// Boltzmann weight. A divergent trajectory keeps the current state.
inline TransitionStats transition(const SampleTarget& target, ChainState& state,
                                  Rng& rng, double eps,
                                  const Eigen::VectorXd& metric, int max_leapfrog,
                                  double divergence_threshold) {
  const int dim = target.dim();
  Eigen::VectorXd p(dim);
  for (int i = 0; i < dim; ++i) p[i] = rng.normal() / std::sqrt(metric[i]);

  auto hamiltonian = [&](double logp, const Eigen::VectorXd& mom) {
    double k = 0.0;
    for (int i = 0; i < dim; ++i) k += mom[i] * mom[i] * metric[i];
    return -logp + 0.5 * k;
  };
  const double h0 = hamiltonian(state.logp, p);

  const int total = 1 + static_cast<int>(rng.uniform_int(
                            static_cast<std::uint64_t>(max_leapfrog)));
  const int n_back = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(total) + 1));
  const int n_fwd = total - n_back;

  std::vector<ChainState> states;
  states.reserve(static_cast<std::size_t>(total) + 1);
  states.push_back(state);
  std::vector<double> hs = {h0};

  TransitionStats stats;
  double sum_accept = 0.0;
  int proposals = 0;

  auto extend = [&](double step, int n_steps) {
    ChainState cur = state;
    Eigen::VectorXd mom = p;
    if (step < 0.0) mom = -p;
    for (int s = 0; s < n_steps; ++s) {
      double e = std::abs(step);
      mom += 0.5 * e * cur.grad;
      cur.q += e * metric.cwiseProduct(mom);
      cur.logp = target.logp_grad(cur.q, cur.grad);
      mom += 0.5 * e * cur.grad;
      // kinetic energy is even in the momentum, so the reversed-time sign
      // does not matter here
      double h = std::isfinite(cur.logp) ? hamiltonian(cur.logp, mom) : kInf;
      ++proposals;
      if (!std::isfinite(h) || h - h0 > divergence_threshold) {
        stats.divergent = true;
        return;
      }
      sum_accept += std::min(1.0, std::exp(h0 - h));
      states.push_back(cur);
      hs.push_back(h);
    }
  };

  extend(-eps, n_back);
  if (!stats.divergent) extend(eps, n_fwd);

  stats.accept_stat = proposals ? sum_accept / static_cast<double>(proposals) : 0.0;
  if (stats.divergent) return stats;  // stay at current state

  // multinomial selection over the trajectory
  double lse = -kInf;
  for (double h : hs) lse = log_sum_exp(lse, h0 - h);
  double u = rng.uniform();
  double cum = 0.0;
  std::size_t pick = hs.size() - 1;
  for (std::size_t j = 0; j < hs.size(); ++j) {
    cum += std::exp(h0 - hs[j] - lse);
    if (u <= cum) {
      pick = j;
      break;
    }
  }
  state = states[pick];
  return stats;
}

// Crude bracketing of a sane initial step size: double/halve until the
// one-step acceptance crosses 1/2.
inline double find_initial_step(const SampleTarget& target, const ChainState& state,
                                Rng& rng, const Eigen::VectorXd& metric) {
  const int dim = target.dim();
  double eps = 0.1;
  Eigen::VectorXd p(dim);
  for (int i = 0; i < dim; ++i) p[i] = rng.normal() / std::sqrt(metric[i]);
  auto accept_of = [&](double e) {
    Eigen::VectorXd mom = p;
    ChainState cur = state;
    mom += 0.5 * e * cur.grad;
    cur.q += e * metric.cwiseProduct(mom);
    cur.logp = target.logp_grad(cur.q, cur.grad);
    mom += 0.5 * e * cur.grad;
    if (!std::isfinite(cur.logp)) return -kInf;
    double k0 = 0.0, k1 = 0.0;
    for (int i = 0; i < dim; ++i) {
      k0 += p[i] * p[i] * metric[i];
      k1 += mom[i] * mom[i] * metric[i];
    }
    return (cur.logp - 0.5 * k1) - (state.logp - 0.5 * k0);
  };
  double a = accept_of(eps);
  bool grow = a > std::log(0.5);
  for (int it = 0; it < 50; ++it) {
    eps *= grow ? 2.0 : 0.5;
    a = accept_of(eps);
    if (grow ? a <= std::log(0.5) : a >= std::log(0.5)) break;
    if (eps > 1e7 || eps < 1e-10) break;
  }
  return std::max(1e-10, std::min(eps, 1e7));
}

}  // namespace hmc

// Runs one chain: three warmup phases (step-size burn-in / expanding metric
// windows / step-size freeze, 15/75/10) then fixed-kernel sampling.
inline ChainResult run_single_chain(const SampleTarget& target,
                                    const SamplerConfig& cfg, int chain_id) {
  Rng rng(cfg.seed, static_cast<std::uint64_t>(chain_id));
  const int dim = target.dim();

  hmc::ChainState state;
  state.q = initialize_state(target, rng);
  state.grad.resize(dim);
  state.logp = target.logp_grad(state.q, state.grad);

  Eigen::VectorXd metric = Eigen::VectorXd::Ones(dim);
  double eps = hmc::find_initial_step(target, state, rng, metric);
  hmc::DualAveraging da;
  da.restart(eps);

  const int w = cfg.warmup_iters;
  const int phase1_end = static_cast<int>(0.15 * w);
  const int phase3_start = w - static_cast<int>(0.10 * w);
  const bool adapt_metric = (phase3_start - phase1_end) >= 50;

  int window_size = 25;
  int window_end = std::min(phase1_end + window_size, phase3_start);
  Eigen::VectorXd acc_mean = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd acc_sq = Eigen::VectorXd::Zero(dim);
  long acc_n = 0;

  auto window_push = [&](const Eigen::VectorXd& q) {
    ++acc_n;
    Eigen::VectorXd delta = q - acc_mean;
    acc_mean += delta / static_cast<double>(acc_n);
    acc_sq += delta.cwiseProduct(q - acc_mean);
  };
  auto window_reset = [&]() {
    acc_mean.setZero();
    acc_sq.setZero();
    acc_n = 0;
  };

  for (int it = 0; it < w; ++it) {
    auto stats = hmc::transition(target, state, rng, eps, metric, cfg.max_leapfrog,
                                 cfg.divergence_threshold);
    eps = da.update(stats.accept_stat, cfg.target_accept);

    if (adapt_metric && it >= phase1_end && it < phase3_start) {
      window_push(state.q);
      if (it + 1 == window_end) {
        if (acc_n >= 10) {
          double nn = static_cast<double>(acc_n);
          for (int i = 0; i < dim; ++i) {
            double var = acc_sq[i] / (nn - 1.0);
            metric[i] = nn / (nn + 5.0) * var + 1e-3 * (5.0 / (nn + 5.0));
          }
        }
        window_reset();
        window_size *= 2;
        window_end = std::min(it + 1 + window_size, phase3_start);
        // next window is terminal if a further doubling would not fit
        if (phase3_start - window_end < 2 * window_size) window_end = phase3_start;
        eps = hmc::find_initial_step(target, state, rng, metric);
        da.restart(eps);
      }
    }
  }
  if (w > 0) eps = da.adapted();

  ChainResult result;
  Eigen::VectorXd v0 = target.values(state.q);
  result.values.resize(cfg.sampling_iters, v0.size());
  result.lp.resize(cfg.sampling_iters);
  const int pw_dim = cfg.store_pointwise ? target.pointwise_dim() : 0;
  if (pw_dim > 0) result.pointwise.resize(cfg.sampling_iters, pw_dim);
  result.step_size = eps;

  double accept_sum = 0.0;
  Eigen::VectorXf pw(pw_dim);
  for (int it = 0; it < cfg.sampling_iters; ++it) {
    auto stats = hmc::transition(target, state, rng, eps, metric, cfg.max_leapfrog,
                                 cfg.divergence_threshold);
    if (stats.divergent) ++result.divergences;
    accept_sum += stats.accept_stat;
    result.values.row(it) = target.values(state.q).transpose();
    result.lp[it] = state.logp;
    if (pw_dim > 0) {
      target.pointwise_loglik(state.q, pw);
      result.pointwise.row(it) = pw.transpose();
    }
  }
  result.mean_accept = accept_sum / std::max(1, cfg.sampling_iters);
  return result;
}

inline PosteriorDraws run_chains(const SampleTarget& target, const SamplerConfig& cfg) {
  cfg.validate();
  PosteriorDraws draws;
  draws.names = target.value_names();
  draws.chains.resize(static_cast<std::size_t>(cfg.chains));

  int workers = cfg.threads > 0 ? std::min(cfg.threads, cfg.chains) : cfg.chains;
  workers = std::max(1, workers);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.chains));
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  auto work = [&]() {
    for (;;) {
      int c = next.fetch_add(1);
      if (c >= cfg.chains) return;
      try {
        draws.chains[static_cast<std::size_t>(c)] = run_single_chain(target, cfg, c);
      } catch (...) {
        errors[static_cast<std::size_t>(c)] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  double div_rate = draws.divergence_rate();
  if (div_rate > 0.10)
    draws.warnings.push_back("post-warmup divergence rate " +
                             std::to_string(div_rate) + " exceeds 10%");
  return draws;
}

// ---------------------------------------------------------------------------
// Summaries: posterior mean/sd, central 95% interval, and the convergence
// diagnostics joined per parameter.

struct SummaryRow {
  std::string name;
  double mean = kNaN, sd = kNaN, q025 = kNaN, q975 = kNaN;
  double rhat = kNaN, ess_bulk = kNaN, ess_tail = kNaN;
};

struct SummaryTable {
  std::vector<SummaryRow> rows;

  const SummaryRow* find(const std::string& name) const {
    for (const auto& r : rows)
      if (r.name == name) return &r;
    return nullptr;
  }
};

inline SummaryRow summarize_scalar(const std::string& name,
                                   const diag::ChainDraws& chains) {
  SummaryRow row;
  row.name = name;
  std::vector<double> pooled = diag::pool(chains);
  row.mean = mean_of(pooled);
  row.sd = sd_of(pooled);
  row.q025 = quantile_type7(pooled, 0.025);
  row.q975 = quantile_type7(pooled, 0.975);
  if (chains.size() >= 2 && chains[0].size() >= 4) {
    ParameterDiagnostics d = diagnose_parameter(name, chains);
    row.rhat = d.rhat;
    row.ess_bulk = d.ess_bulk;
    row.ess_tail = d.ess_tail;
  }
  return row;
}

inline SummaryTable summarize(const PosteriorDraws& draws) {
  if (draws.chains.empty() || draws.iters_per_chain() == 0)
    throw ValidationError("cannot summarize empty draws");
  SummaryTable table;
  for (int j = 0; j < draws.n_params(); ++j)
    table.rows.push_back(summarize_scalar(draws.names[static_cast<std::size_t>(j)],
                                          draws.param_chains(j)));
  table.rows.push_back(summarize_scalar("lp__", draws.lp_chains()));
  return table;
}

inline ConvergenceReport convergence_report(const PosteriorDraws& draws) {
  ConvergenceReport rep;
  for (int j = 0; j < draws.n_params(); ++j)
    rep.params.push_back(diagnose_parameter(draws.names[static_cast<std::size_t>(j)],
                                            draws.param_chains(j)));
  return rep;
}

// ---------------------------------------------------------------------------
// Draws file: chain,iter,<param names...>,lp__ on the constrained scale.

inline void write_draws_csv(const PosteriorDraws& draws, const std::string& path) {
  csv::Writer w(path);
  std::vector<std::string> header = {"chain", "iter"};
  header.insert(header.end(), draws.names.begin(), draws.names.end());
  header.push_back("lp__");
  w.row(header);
  for (int c = 0; c < draws.n_chains(); ++c) {
    const auto& chain = draws.chains[static_cast<std::size_t>(c)];
    for (Eigen::Index i = 0; i < chain.values.rows(); ++i) {
      std::vector<std::string> row;
      row.reserve(static_cast<std::size_t>(chain.values.cols()) + 3);
      row.push_back(std::to_string(c + 1));
      row.push_back(std::to_string(i + 1));
      for (Eigen::Index j = 0; j < chain.values.cols(); ++j)
        row.push_back(csv::format_double(chain.values(i, j)));
      row.push_back(csv::format_double(chain.lp[i]));
      w.row(row);
    }
  }
}

inline PosteriorDraws read_draws_csv(const std::string& path) {
  csv::Table t = csv::read_file(path);
  if (t.header.size() < 3 || t.header[0] != "chain" || t.header[1] != "iter" ||
      t.header.back() != "lp__")
    throw ValidationError("not a draws file: " + path);
  PosteriorDraws draws;
  draws.names.assign(t.header.begin() + 2, t.header.end() - 1);
  const std::size_t n_params = draws.names.size();

  std::vector<std::vector<std::vector<double>>> by_chain;  // chain -> rows
  std::vector<std::vector<double>> lp_by_chain;
  std::size_t lineno = 1;
  for (const auto& row : t.rows) {
    ++lineno;
    std::size_t chain = static_cast<std::size_t>(csv::parse_int(row[0], lineno));
    if (chain == 0) throw CsvParseError("chain index must be >= 1", lineno);
    if (by_chain.size() < chain) {
      by_chain.resize(chain);
      lp_by_chain.resize(chain);
    }
    std::vector<double> vals(n_params);
    for (std::size_t j = 0; j < n_params; ++j)
      vals[j] = csv::parse_double(row[j + 2], lineno);
    by_chain[chain - 1].push_back(std::move(vals));
    lp_by_chain[chain - 1].push_back(csv::parse_double(row.back(), lineno));
  }
  for (std::size_t c = 0; c < by_chain.size(); ++c) {
    ChainResult cr;
    cr.values.resize(static_cast<Eigen::Index>(by_chain[c].size()),
                     static_cast<Eigen::Index>(n_params));
    cr.lp.resize(static_cast<Eigen::Index>(by_chain[c].size()));
    for (std::size_t i = 0; i < by_chain[c].size(); ++i) {
      for (std::size_t j = 0; j < n_params; ++j)
        cr.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            by_chain[c][i][j];
      cr.lp[static_cast<Eigen::Index>(i)] = lp_by_chain[c][i];
    }
    draws.chains.push_back(std::move(cr));
  }
  return draws;
}

inline void write_summary_csv(const SummaryTable& table, const std::string& path) {
  csv::Writer w(path);
  w.row({"param", "mean", "sd", "q025", "q975", "rhat", "ess_bulk", "ess_tail"});
  for (const auto& r : table.rows)
    w.row({r.name, csv::format_double(r.mean), csv::format_double(r.sd),
           csv::format_double(r.q025), csv::format_double(r.q975),
           csv::format_double(r.rhat), csv::format_double(r.ess_bulk),
           csv::format_double(r.ess_tail)});
}

}  // namespace scr
