#include "kancim/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "kancim/errors.hpp"
#include "kancim/mac_sim.hpp"
#include "kancim/rng.hpp"

namespace kancim {

BasisStats profile_stats(const Eigen::VectorXd& inputs,
                         const BSplineSpec& spec, double active_threshold) {
  if (inputs.size() == 0)
    throw ConfigError("profile_stats needs at least one sample");
  if (active_threshold < 0.0)
    throw ConfigError("active_threshold must be >= 0");

  const int n = spec.basis_count();
  std::vector<std::vector<double>> active(static_cast<std::size_t>(n));
  std::vector<double> buf(static_cast<std::size_t>(spec.order) + 1);
  for (Eigen::Index s = 0; s < inputs.size(); ++s) {
    const double x = spec.clamp(inputs[s]);
    int first = 0;
    basis_eval_active(spec, x, &first, buf.data());
    for (int j = 0; j <= spec.order; ++j) {
      if (buf[static_cast<std::size_t>(j)] > active_threshold)
        active[static_cast<std::size_t>(first + j)].push_back(
            buf[static_cast<std::size_t>(j)]);
    }
  }

  BasisStats stats;
  stats.samples = inputs.size();
  stats.cnt = Eigen::VectorXi::Zero(n);
  stats.p = Eigen::VectorXd::Zero(n);
  stats.mu = Eigen::VectorXd::Zero(n);
  stats.var = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    auto& vals = active[static_cast<std::size_t>(i)];
    stats.cnt[i] = static_cast<int>(vals.size());
    stats.p[i] = static_cast<double>(vals.size()) /
                 static_cast<double>(stats.samples);
    // Sorted accumulation: the sums depend only on the multiset of
    // values, not on dataset order or shard boundaries.
    std::sort(vals.begin(), vals.end());
    double s1 = 0.0, s2 = 0.0;
    for (double b : vals) {
      s1 += b;
      s2 += b * b;
    }
    const double denom = std::max<double>(stats.cnt[i], 1.0);
    stats.mu[i] = s1 / denom;
    stats.var[i] = std::max(0.0, s2 / denom - (s1 / denom) * (s1 / denom));
  }
  return stats;
}

void ScoreParams::validate() const {
  if (alpha < 0.0 || alpha > 1.0 || beta < 0.0 || beta > 1.0)
    throw ConfigError("alpha and beta must lie in [0, 1]");
  if (std::abs(alpha + beta - 1.0) > 1e-12)
    throw ConfigError("alpha + beta must equal 1");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  if (active_threshold < 0.0)
    throw ConfigError("active_threshold must be >= 0");
}

CriticalityScore score_coefficients(const BasisStats& stats,
                                    const Eigen::VectorXd& quant_magnitude,
                                    const ScoreParams& params) {
  params.validate();
  const Eigen::Index n = stats.p.size();
  if (quant_magnitude.size() != n)
    throw ConfigError("score_coefficients: stats cover " + std::to_string(n) +
                      " bases but " + std::to_string(quant_magnitude.size()) +
                      " magnitudes were given");
  if ((quant_magnitude.array() < 0.0).any())
    throw ConfigError("quantized magnitudes must be >= 0");

  CriticalityScore cs;
  cs.stability.resize(n);
  cs.contribution.resize(n);
  cs.criticality.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sigma = std::sqrt(stats.var[i]);
    const double cv = sigma / (stats.mu[i] + params.epsilon);
    cs.stability[i] = 1.0 / (1.0 + cv);
    cs.contribution[i] = stats.p[i] * stats.mu[i] * quant_magnitude[i];
    cs.criticality[i] = params.alpha * cs.contribution[i] +
                        params.beta * cs.stability[i] * cs.contribution[i];
  }
  return cs;
}

void MappingPlan::validate(int rows) const {
  if (basis_to_row.empty()) throw ConfigError("mapping plan is empty");
  if (scores.size() != static_cast<Eigen::Index>(basis_to_row.size()))
    throw ConfigError("mapping plan scores disagree with its entries");
  std::vector<char> taken(static_cast<std::size_t>(rows), 0);
  for (int r : basis_to_row) {
    if (r < 0 || r >= rows)
      throw ConfigError("mapping plan row " + std::to_string(r) +
                        " outside [0, " + std::to_string(rows) + ")");
    if (taken[static_cast<std::size_t>(r)])
      throw ConfigError("mapping plan assigns row " + std::to_string(r) +
                        " twice");
    taken[static_cast<std::size_t>(r)] = 1;
  }
}

std::vector<int> nearest_first_rows(int rows) {
  if (rows < 1) throw ConfigError("row order needs at least one row");
  std::vector<int> order(static_cast<std::size_t>(rows));
  std::iota(order.begin(), order.end(), 0);
  return order;
}

namespace {

std::vector<int> ranked_indices(const Eigen::VectorXd& criticality) {
  if (!criticality.allFinite())
    throw ConfigError("criticality scores must be finite");
  std::vector<int> idx(static_cast<std::size_t>(criticality.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (criticality[a] != criticality[b])
      return criticality[a] > criticality[b];
    return a < b;
  });
  return idx;
}

void check_capacity(Eigen::Index n, std::size_t rows) {
  if (static_cast<std::size_t>(n) > rows)
    throw ConfigError("cannot map " + std::to_string(n) +
                      " coefficients onto " + std::to_string(rows) + " rows");
  if (n == 0) throw ConfigError("no coefficients to map");
}

}  // namespace

MappingPlan assign_rows(const Eigen::VectorXd& criticality,
                        const std::vector<int>& row_order) {
  check_capacity(criticality.size(), row_order.size());
  const std::vector<int> ranked = ranked_indices(criticality);
  MappingPlan plan;
  plan.basis_to_row.resize(ranked.size());
  plan.scores = criticality;
  for (std::size_t k = 0; k < ranked.size(); ++k)
    plan.basis_to_row[static_cast<std::size_t>(ranked[k])] = row_order[k];
  return plan;
}

MappingPlan uniform_plan(int n_basis, int rows) {
  check_capacity(n_basis, static_cast<std::size_t>(std::max(rows, 0)));
  MappingPlan plan;
  plan.basis_to_row.resize(static_cast<std::size_t>(n_basis));
  plan.scores = Eigen::VectorXd::Zero(n_basis);
  for (int i = 0; i < n_basis; ++i)
    plan.basis_to_row[static_cast<std::size_t>(i)] = static_cast<int>(
        std::floor((i + 0.5) * static_cast<double>(rows) / n_basis));
  return plan;
}

MappingPlan reversed_plan(const Eigen::VectorXd& criticality,
                          const std::vector<int>& row_order) {
  check_capacity(criticality.size(), row_order.size());
  const std::vector<int> ranked = ranked_indices(criticality);
  MappingPlan plan;
  plan.basis_to_row.resize(ranked.size());
  plan.scores = criticality;
  for (std::size_t k = 0; k < ranked.size(); ++k)
    plan.basis_to_row[static_cast<std::size_t>(ranked[k])] =
        row_order[row_order.size() - 1 - k];
  return plan;
}

void save_mapping_plan(const MappingPlan& plan, const std::string& path) {
  if (plan.basis_to_row.empty()) throw ConfigError("mapping plan is empty");
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write mapping plan to " + path);
  out << "kancim-mapping v1\n";
  out << "entries " << plan.basis_to_row.size() << "\n";
  char buf[64];
  for (std::size_t i = 0; i < plan.basis_to_row.size(); ++i) {
    const double s =
        plan.scores.size() ? plan.scores[static_cast<Eigen::Index>(i)] : 0.0;
    std::snprintf(buf, sizeof buf, "%.17g", s);
    out << i << " " << plan.basis_to_row[i] << " " << buf << "\n";
  }
  if (!out) throw ConfigError("failed writing mapping plan to " + path);
}

MappingPlan load_mapping_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mapping plan " + path);
  std::string line;
  if (!std::getline(in, line) || line != "kancim-mapping v1")
    throw ConfigError(path + ": not a mapping plan file");
  std::size_t entries = 0;
  {
    std::string tag;
    if (!std::getline(in, line)) throw ConfigError(path + ": truncated");
    std::istringstream ss(line);
    if (!(ss >> tag >> entries) || tag != "entries" || entries == 0)
      throw ConfigError(path + ": bad entries header");
  }
  MappingPlan plan;
  plan.basis_to_row.assign(entries, -1);
  plan.scores = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(entries));
  for (std::size_t i = 0; i < entries; ++i) {
    if (!std::getline(in, line)) throw ConfigError(path + ": truncated");
    std::istringstream ss(line);
    std::size_t basis = 0;
    int row = -1;
    double s = 0.0;
    if (!(ss >> basis >> row >> s) || basis >= entries)
      throw ConfigError(path + ": bad plan entry '" + line + "'");
    if (plan.basis_to_row[basis] != -1)
      throw ConfigError(path + ": basis " + std::to_string(basis) +
                        " listed twice");
    plan.basis_to_row[basis] = row;
    plan.scores[static_cast<Eigen::Index>(basis)] = s;
  }
  plan.validate(1 + *std::max_element(plan.basis_to_row.begin(),
                                      plan.basis_to_row.end()));
  return plan;
}

namespace {

PlanMetrics eval_plan(const KanLayer& layer, int channel,
                      const QuantizedCoeffs& coeffs,
                      const Eigen::VectorXd& eval_inputs,
                      const MappingEvalConfig& cfg, const MappingPlan& plan) {
  const int n_basis = layer.basis_count();
  const int top = (1 << cfg.value_bits) - 1;
  const double value_scale = coeffs.scale / top;

  PlanMetrics metrics;
  Eigen::VectorXi codes(n_basis);
  Eigen::VectorXi mag_pos(n_basis), mag_neg(n_basis);
  for (Eigen::Index s = 0; s < eval_inputs.size(); ++s) {
    const double x = layer.spec.clamp(eval_inputs[s]);
    const Eigen::VectorXd basis = basis_eval(layer.spec, x);
    for (int i = 0; i < n_basis; ++i)
      codes[i] = static_cast<int>(round_half_even(basis[i] * top));

    for (int o = 0; o < layer.out_dim; ++o) {
      double ref = 0.0;
      for (int i = 0; i < n_basis; ++i) {
        const int c = coeffs.codes(o, channel * n_basis + i);
        mag_pos[i] = std::max(c, 0);
        mag_neg[i] = std::max(-c, 0);
        ref += layer.coeff(o, channel, i) * basis[i];
      }
      const std::uint64_t trial =
          derive_seed(cfg.crossbar.seed, 0xE7A1,
                      static_cast<std::uint64_t>(s),
                      static_cast<std::uint64_t>(o));
      MacResult pos = simulate_mac(cfg.crossbar, cfg.encoder, mag_pos, codes,
                                   plan.basis_to_row, trial);
      MacResult neg = simulate_mac(cfg.crossbar, cfg.encoder, mag_neg, codes,
                                   plan.basis_to_row, trial);
      const long long decoded = pos.decoded_sum - neg.decoded_sum;
      const long long ideal = pos.ideal_sum - neg.ideal_sum;
      metrics.mean_decoded_error +=
          std::abs(static_cast<double>(decoded - ideal));
      metrics.mean_float_error +=
          std::abs(static_cast<double>(decoded) * value_scale - ref);
    }
  }
  const double units = static_cast<double>(eval_inputs.size()) * layer.out_dim;
  metrics.mean_decoded_error /= units;
  metrics.mean_float_error /= units;
  return metrics;
}

}  // namespace

MappingComparison evaluate_mapping(const KanLayer& layer, int channel,
                                   const QuantizedCoeffs& coeffs,
                                   const Eigen::VectorXd& train_inputs,
                                   const Eigen::VectorXd& eval_inputs,
                                   const MappingEvalConfig& cfg) {
  layer.validate();
  cfg.crossbar.validate();
  cfg.score.validate();
  if (channel < 0 || channel >= layer.in_dim)
    throw ConfigError("channel " + std::to_string(channel) +
                      " outside [0, " + std::to_string(layer.in_dim) + ")");
  if (coeffs.codes.rows() != layer.out_dim ||
      coeffs.codes.cols() != layer.coeff_cols())
    throw ConfigError("quantized coefficients do not match the layer");
  if (cfg.value_bits < 4 || cfg.value_bits > 8)
    throw ConfigError("value_bits must be in [4, 8]");
  if (2 * cfg.encoder.half_bits < cfg.value_bits)
    throw ConfigError("encoder codes are narrower than the basis values");
  if (eval_inputs.size() == 0)
    throw ConfigError("evaluate_mapping needs evaluation samples");

  const int n_basis = layer.basis_count();
  BasisStats stats =
      profile_stats(train_inputs, layer.spec, cfg.score.active_threshold);

  // Rows are shared by every output column group, so the magnitude term
  // averages |c'|_Q across outputs.
  Eigen::VectorXd mags = Eigen::VectorXd::Zero(n_basis);
  for (int i = 0; i < n_basis; ++i) {
    double acc = 0.0;
    for (int o = 0; o < layer.out_dim; ++o)
      acc += std::abs(
          static_cast<double>(coeffs.codes(o, channel * n_basis + i)));
    mags[i] = acc / layer.out_dim;
  }
  CriticalityScore cs = score_coefficients(stats, mags, cfg.score);

  const std::vector<int> order = nearest_first_rows(cfg.crossbar.rows);
  MappingComparison cmp;
  cmp.sam_plan = assign_rows(cs.criticality, order);
  cmp.sam = eval_plan(layer, channel, coeffs, eval_inputs, cfg, cmp.sam_plan);
  cmp.uniform = eval_plan(layer, channel, coeffs, eval_inputs, cfg,
                          uniform_plan(n_basis, cfg.crossbar.rows));
  cmp.reversed = eval_plan(layer, channel, coeffs, eval_inputs, cfg,
                           reversed_plan(cs.criticality, order));
  // Degradation is measured against the float reference; the decoded
  // error saturates to exact zero on small arrays and would divide away.
  if (cmp.sam.mean_float_error == 0.0) {
    cmp.improvement_factor =
        cmp.uniform.mean_float_error == 0.0
            ? 1.0
            : std::numeric_limits<double>::infinity();
  } else {
    cmp.improvement_factor =
        cmp.uniform.mean_float_error / cmp.sam.mean_float_error;
  }
  return cmp;
}

}  // namespace kancim
