#include "kancim/mac_sim.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "kancim/errors.hpp"
#include "kancim/quant.hpp"
#include "kancim/rng.hpp"

namespace kancim {

double variation_factor(double sigma, std::uint64_t root, int column,
                        int physical_row) {
  if (sigma <= 0.0) return 1.0;
  double z = unit_normal(derive_seed(root, kVariationTag,
                                     static_cast<std::uint64_t>(column),
                                     static_cast<std::uint64_t>(physical_row)));
  double dev = std::clamp(sigma * z, -3.0 * sigma, 3.0 * sigma);
  return 1.0 + dev;
}

namespace {

struct TimeSlice {
  long long start = 0;
  long long width = 0;
};

// Cut the cycle at every segment boundary of every train; within one
// slice each word line holds a constant voltage.
std::vector<TimeSlice> build_slices(const std::vector<PulseTrain>& trains,
                                    long long cycle_units) {
  std::vector<long long> cuts{0, cycle_units};
  for (const auto& train : trains) {
    long long t = 0;
    for (const auto& seg : train.segments) {
      t += seg.width_units;
      if (t < cycle_units) cuts.push_back(t);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<TimeSlice> slices;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    slices.push_back({cuts[i], cuts[i + 1] - cuts[i]});
  return slices;
}

// Voltage held by a train at time t; parked at the zero-current level
// once the train has finished (or never started, for an empty train).
double voltage_at(const PulseTrain& train, long long t, double off_voltage) {
  long long start = 0;
  for (const auto& seg : train.segments) {
    if (t < start + seg.width_units) return seg.voltage;
    start += seg.width_units;
  }
  return off_voltage;
}

}  // namespace

MacResult simulate_mac(const CrossbarConfig& cfg, const EncoderConfig& enc,
                       const Eigen::VectorXi& weight_mags,
                       const Eigen::VectorXi& input_codes,
                       const std::vector<int>& row_to_physical,
                       std::uint64_t trial_seed) {
  cfg.validate();
  enc.validate();
  if (enc.dac_levels.empty())
    throw ConfigError("simulate_mac: encoder is not calibrated");
  if (cfg.cols < kWeightSliceBits)
    throw ConfigError("simulate_mac: config has " + std::to_string(cfg.cols) +
                      " columns, a column group needs " +
                      std::to_string(kWeightSliceBits));
  const int logical = static_cast<int>(weight_mags.size());
  if (logical < 1) throw ConfigError("simulate_mac: no rows to drive");
  if (input_codes.size() != logical)
    throw ConfigError("simulate_mac: " + std::to_string(logical) +
                      " weights vs " + std::to_string(input_codes.size()) +
                      " input codes");
  if (logical > cfg.rows)
    throw ConfigError("simulate_mac: " + std::to_string(logical) +
                      " logical rows exceed " + std::to_string(cfg.rows) +
                      " physical rows");
  const int max_mag = (1 << kWeightSliceBits) - 1;
  for (int i = 0; i < logical; ++i) {
    if (weight_mags[i] < 0 || weight_mags[i] > max_mag)
      throw ConfigError("simulate_mac: weight magnitude " +
                        std::to_string(weight_mags[i]) + " at row " +
                        std::to_string(i) + " outside [0, " +
                        std::to_string(max_mag) + "]");
  }

  std::vector<int> mapping = row_to_physical;
  if (mapping.empty()) {
    mapping.resize(logical);
    for (int i = 0; i < logical; ++i) mapping[i] = i;
  }
  if (static_cast<int>(mapping.size()) != logical)
    throw ConfigError("simulate_mac: mapping covers " +
                      std::to_string(mapping.size()) + " rows, expected " +
                      std::to_string(logical));
  std::vector<char> taken(static_cast<std::size_t>(cfg.rows), 0);
  for (int p : mapping) {
    if (p < 0 || p >= cfg.rows)
      throw ConfigError("simulate_mac: mapped physical row " +
                        std::to_string(p) + " outside [0, " +
                        std::to_string(cfg.rows) + ")");
    if (taken[static_cast<std::size_t>(p)])
      throw ConfigError("simulate_mac: physical row " + std::to_string(p) +
                        " mapped twice");
    taken[static_cast<std::size_t>(p)] = 1;
  }

  std::vector<PulseTrain> trains;
  trains.reserve(static_cast<std::size_t>(logical));
  for (int i = 0; i < logical; ++i)
    trains.push_back(encode_input(input_codes[i], enc));

  const long long cycle = enc.latency_units();
  const std::vector<TimeSlice> slices = build_slices(trains, cycle);
  const int n_slices = static_cast<int>(slices.size());
  const double off_voltage = enc.dac_levels.front();
  const double sigma = enc.voltage_noise_sigma;
  const double unit_i = enc.unit_current();

  // Word-line drive per (physical row, slice), expressed as the voltage a
  // zero-wire on-cell would need at its far side to inject the transfer
  // current: v_clamp + f(v)/g_on. Unmapped rows park at the clamp and
  // only load the ladder.
  Eigen::MatrixXd drive =
      Eigen::MatrixXd::Constant(cfg.rows, n_slices, cfg.v_clamp);
  for (int i = 0; i < logical; ++i) {
    const int p = mapping[i];
    for (int s = 0; s < n_slices; ++s) {
      double v = voltage_at(trains[static_cast<std::size_t>(i)],
                            slices[static_cast<std::size_t>(s)].start,
                            off_voltage);
      if (sigma > 0.0)
        v += sigma * unit_normal(derive_seed(
                 trial_seed, kNoiseTag, static_cast<std::uint64_t>(p),
                 static_cast<std::uint64_t>(s)));
      drive(p, s) = cfg.v_clamp + enc.transfer(v) / cfg.g_on;
    }
  }

  MacResult result;
  result.columns.resize(kWeightSliceBits);
  long long max_ideal = 0;
  for (int c = 0; c < kWeightSliceBits; ++c) {
    const int bit = kWeightSliceBits - 1 - c;
    ColumnReadout& col = result.columns[static_cast<std::size_t>(c)];

    Eigen::VectorXd g = Eigen::VectorXd::Constant(cfg.rows, cfg.g_off);
    for (int i = 0; i < logical; ++i) {
      if ((weight_mags[i] >> bit) & 1) g[mapping[i]] = cfg.g_on;
      col.ideal_units +=
          static_cast<long long>((weight_mags[i] >> bit) & 1) * input_codes[i];
    }
    if (cfg.variation_sigma > 0.0) {
      for (int p = 0; p < cfg.rows; ++p)
        g[p] *= variation_factor(cfg.variation_sigma, cfg.seed, c, p);
    }
    max_ideal = std::max(max_ideal, col.ideal_units);

    if ((g.array() != 0.0).any()) {
      for (int s = 0; s < n_slices; ++s) {
        IrDropSolution sol = solve_ir_drop(g, drive.col(s), cfg);
        col.measured_units += sol.clamp_current *
                              static_cast<double>(
                                  slices[static_cast<std::size_t>(s)].width) /
                              unit_i;
      }
    }
    col.charge_coulombs = col.measured_units * unit_i * enc.unit_pulse_s;
  }

  // ADC step: smallest power of two putting the largest ideal column
  // charge inside the code range, so an ideal analog path decodes back
  // to the digital value whenever the range suffices.
  const long long top_code = (1LL << cfg.adc_bits) - 1;
  long long step = 1;
  while (max_ideal > step * top_code) step <<= 1;
  result.adc_step_units = step;

  for (int c = 0; c < kWeightSliceBits; ++c) {
    ColumnReadout& col = result.columns[static_cast<std::size_t>(c)];
    long long code = round_half_even(col.measured_units /
                                     static_cast<double>(step));
    if (code < 0 || code > top_code) {
      col.saturated = true;
      result.saturated = true;
      code = std::clamp(code, 0LL, top_code);
    }
    col.decoded_units = code * step;
    const long long weight = 1LL << (kWeightSliceBits - 1 - c);
    result.ideal_sum += weight * col.ideal_units;
    result.decoded_sum += weight * col.decoded_units;
    result.charge_coulombs += col.charge_coulombs;
  }
  return result;
}

}  // namespace kancim
