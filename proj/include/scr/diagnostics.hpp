#pragma once

// Rank-normalized split R-hat and bulk/tail effective sample size, with the
// convergence cutoffs R-hat <= 1.1 and ESS >= 400 applied in the report.
// Autocorrelations are computed by direct summation with Geyer's initial
// monotone sequence truncation.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "scr/common.hpp"

namespace scr {
namespace diag {

using ChainDraws = std::vector<std::vector<double>>;  // per chain

// Each chain is split in half; an odd middle element is dropped.
inline ChainDraws split_chains(const ChainDraws& chains) {
  ChainDraws out;
  for (const auto& c : chains) {
    std::size_t half = c.size() / 2;
    if (half == 0) continue;
    out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  return out;
}

inline bool is_constant(const ChainDraws& chains) {
  double first = kNaN;
  for (const auto& c : chains)
    for (double x : c) {
      if (std::isnan(first)) first = x;
      if (x != first) return false;
    }
  return true;
}

// Fractional ranks (r - 3/8)/(S + 1/4) of the pooled draws through the
// inverse normal cdf; ties get average ranks.
inline ChainDraws rank_normalize(const ChainDraws& chains) {
  struct Entry {
    double value;
    std::size_t chain, idx;
  };
  std::vector<Entry> pooled;
  for (std::size_t m = 0; m < chains.size(); ++m)
    for (std::size_t i = 0; i < chains[m].size(); ++i)
      pooled.push_back({chains[m][i], m, i});
  std::stable_sort(pooled.begin(), pooled.end(),
                   [](const Entry& a, const Entry& b) { return a.value < b.value; });

  const double S = static_cast<double>(pooled.size());
  ChainDraws out(chains.size());
  for (std::size_t m = 0; m < chains.size(); ++m) out[m].resize(chains[m].size());
  std::size_t i = 0;
  while (i < pooled.size()) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].value == pooled[i].value) ++j;
    double avg_rank = (static_cast<double>(i + j - 1) / 2.0) + 1.0;
    double z = probit((avg_rank - 0.375) / (S + 0.25));
    for (std::size_t k = i; k < j; ++k) out[pooled[k].chain][pooled[k].idx] = z;
    i = j;
  }
  return out;
}

inline std::vector<double> pool(const ChainDraws& chains) {
  std::vector<double> all;
  for (const auto& c : chains) all.insert(all.end(), c.begin(), c.end());
  return all;
}

// Classic potential scale reduction on already-transformed split chains:
// sqrt((N-1)/N + B/(N W)).
inline double rhat_basic(const ChainDraws& chains) {
  const std::size_t m = chains.size();
  if (m < 2) return kNaN;
  const std::size_t n = chains[0].size();
  if (n < 2) return kNaN;
  std::vector<double> means(m), vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = mean_of(chains[c]);
    vars[c] = variance_of(chains[c]);
  }
  double w = mean_of(vars);
  double b_over_n = variance_of(means);  // B/N
  if (!(w > 0.0)) return kNaN;
  double nn = static_cast<double>(n);
  return std::sqrt((nn - 1.0) / nn + b_over_n / w);
}

// Rank-normalized split R-hat: max of the bulk variant and the variant
// folded around the pooled median.
inline double rhat(const ChainDraws& chains) {
  if (chains.size() < 2) throw ValidationError("rhat requires at least 2 chains");
  for (const auto& c : chains)
    if (c.size() < 4) throw ValidationError("rhat requires at least 4 draws per chain");
  if (is_constant(chains)) return kNaN;

  ChainDraws halves = split_chains(chains);
  double bulk = rhat_basic(rank_normalize(halves));

  std::vector<double> pooled = pool(halves);
  double med = quantile_type7(pooled, 0.5);
  ChainDraws folded = halves;
  for (auto& c : folded)
    for (double& x : c) x = std::abs(x - med);
  double tail = rhat_basic(rank_normalize(folded));
  if (std::isnan(bulk) || std::isnan(tail)) return kNaN;
  return std::max(bulk, tail);
}

// ESS of already-transformed split chains via combined autocorrelations.
inline double ess_basic(const ChainDraws& chains) {
  const std::size_t m = chains.size();
  const std::size_t n = chains.empty() ? 0 : chains[0].size();
  if (m < 2 || n < 4) return kNaN;

  std::vector<double> means(m);
  std::vector<std::vector<double>> acov(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = mean_of(chains[c]);
    acov[c].resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      double s = 0.0;
      for (std::size_t i = 0; i + t < n; ++i)
        s += (chains[c][i] - means[c]) * (chains[c][i + t] - means[c]);
      acov[c][t] = s / static_cast<double>(n);
    }
  }
  double mean_acov0 = 0.0;
  for (std::size_t c = 0; c < m; ++c) mean_acov0 += acov[c][0];
  mean_acov0 /= static_cast<double>(m);
  double nn = static_cast<double>(n);
  double mean_var = mean_acov0 * nn / (nn - 1.0);  // W
  double var_plus = mean_var * (nn - 1.0) / nn + variance_of(means);
  if (!(var_plus > 0.0)) return kNaN;

  auto mean_acov = [&](std::size_t t) {
    double s = 0.0;
    for (std::size_t c = 0; c < m; ++c) s += acov[c][t];
    return s / static_cast<double>(m);
  };

  // Geyer initial positive + monotone sequence on paired autocorrelations
  std::vector<double> rho(n, 0.0);
  rho[0] = 1.0;
  std::size_t max_t = 1;
  double prev_pair = kInf;
  double tau = 0.0;
  for (std::size_t t = 1; t + 1 < n; t += 2) {
    double r_even = 1.0 - (mean_var - mean_acov(t)) / var_plus;
    double r_odd = 1.0 - (mean_var - mean_acov(t + 1)) / var_plus;
    double pair = r_even + r_odd;
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);  // enforce monotone nonincreasing
    prev_pair = pair;
    tau += 2.0 * pair;
    max_t = t + 1;
  }
  (void)max_t;
  double tau_hat = -1.0 + 2.0 * rho[0] + tau;  // = 1 + 2 sum of correlations
  double total = static_cast<double>(m) * nn;
  tau_hat = std::max(tau_hat, 1.0 / std::log10(total));
  double ess = total / tau_hat;
  return std::min(ess, total * std::log10(total));
}

enum class EssKind { Bulk, Tail };

inline double ess(const ChainDraws& chains, EssKind kind) {
  if (chains.size() < 2) throw ValidationError("ess requires at least 2 chains");
  for (const auto& c : chains)
    if (c.size() < 4) throw ValidationError("ess requires at least 4 draws per chain");
  if (is_constant(chains)) return kNaN;

  ChainDraws halves = split_chains(chains);
  if (kind == EssKind::Bulk) return ess_basic(rank_normalize(halves));

  // tail: min ESS of the 5% / 95% quantile exceedance indicators
  std::vector<double> pooled = pool(halves);
  double out = kInf;
  for (double q : {0.05, 0.95}) {
    double cut = quantile_type7(pooled, q);
    ChainDraws ind = halves;
    for (auto& c : ind)
      for (double& x : c) x = (x <= cut) ? 1.0 : 0.0;
    if (is_constant(ind)) return kNaN;
    out = std::min(out, ess_basic(ind));
  }
  return out;
}

}  // namespace diag

struct ParameterDiagnostics {
  std::string name;
  double rhat = kNaN;
  double ess_bulk = kNaN;
  double ess_tail = kNaN;
  bool constant = false;
  bool rhat_flag = false;  // rhat > 1.1
  bool ess_flag = false;   // bulk or tail ESS < 400
};

struct ConvergenceReport {
  std::vector<ParameterDiagnostics> params;
  double rhat_cutoff = 1.1;
  double ess_cutoff = 400.0;

  bool converged() const {
    for (const auto& p : params)
      if (p.rhat_flag || p.constant) return false;
    return true;
  }
};

inline ParameterDiagnostics diagnose_parameter(const std::string& name,
                                               const diag::ChainDraws& chains) {
  ParameterDiagnostics d;
  d.name = name;
  d.constant = diag::is_constant(chains);
  if (d.constant) return d;
  d.rhat = diag::rhat(chains);
  d.ess_bulk = diag::ess(chains, diag::EssKind::Bulk);
  d.ess_tail = diag::ess(chains, diag::EssKind::Tail);
  d.rhat_flag = !(d.rhat <= 1.1);
  d.ess_flag = !(d.ess_bulk >= 400.0) || !(d.ess_tail >= 400.0);
  return d;
}

}  // namespace scr
