#include "kancim/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kancim/errors.hpp"
#include "kancim/quant.hpp"
#include "kancim/rng.hpp"

namespace kancim {

double TransferFn::operator()(double v) const {
  const double over = v - v_threshold;
  if (over <= 0.0) return 0.0;
  return kind == Kind::LinearAboveThreshold ? gain * over : gain * over * over;
}

TransferFn TransferFn::linear(double v_threshold, double gain) {
  return TransferFn{Kind::LinearAboveThreshold, v_threshold, gain};
}

TransferFn TransferFn::square_law(double v_threshold, double gain) {
  return TransferFn{Kind::SquareLaw, v_threshold, gain};
}

std::vector<double> calibrate_dac(const TransferFn& f, int n_levels,
                                  double v_max, double base_current) {
  if (n_levels < 2) throw ConfigError("dac needs at least 2 levels");
  if (!(v_max > f.v_threshold))
    throw ConfigError("v_max must exceed the transfer threshold");
  if (!(f.gain > 0.0)) throw ConfigError("transfer gain must be > 0");

  const double i_top = f(v_max);
  const double unit =
      base_current > 0.0 ? base_current : i_top / (n_levels - 1);

  std::vector<double> levels(n_levels);
  levels[0] = f.v_threshold;
  for (int k = 1; k < n_levels; ++k) {
    const double target = k * unit;
    if (target > i_top * (1.0 + 1e-12))
      throw CalibrationError(
          "dac level " + std::to_string(k) + " needs current " +
          std::to_string(target) + " but the transfer tops out at " +
          std::to_string(i_top) + " at v_max");
    double lo = f.v_threshold, hi = v_max;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (f(mid) < target)
        lo = mid;
      else
        hi = mid;
      if (hi - lo <= 1e-15 * std::max(1.0, std::abs(v_max))) break;
    }
    levels[k] = 0.5 * (lo + hi);
  }
  return levels;
}

EncoderConfig EncoderConfig::make(EncodeScheme scheme, int half_bits,
                                  const TransferFn& transfer, double v_max,
                                  double unit_pulse_s) {
  EncoderConfig cfg;
  cfg.scheme = scheme;
  cfg.half_bits = half_bits;
  cfg.transfer = transfer;
  cfg.v_max = v_max;
  cfg.unit_pulse_s = unit_pulse_s;
  cfg.validate();
  cfg.calibrate();
  return cfg;
}

void EncoderConfig::validate() const {
  if (half_bits < 1 || half_bits > 4)
    throw ConfigError("encoder half_bits must be in [1, 4]");
  if (!(unit_pulse_s > 0.0)) throw ConfigError("unit pulse width must be > 0");
  if (!(v_max > transfer.v_threshold))
    throw ConfigError("v_max must exceed the transfer threshold");
  if (voltage_noise_sigma < 0.0)
    throw ConfigError("voltage noise sigma must be >= 0");
}

int EncoderConfig::dac_level_count() const {
  switch (scheme) {
    case EncodeScheme::PureVoltage:
      return 1 << (2 * half_bits);
    case EncodeScheme::Tmdv:
      return 1 << half_bits;
    case EncodeScheme::PurePwm:
      return 2;
  }
  return 0;
}

long long EncoderConfig::latency_units() const {
  switch (scheme) {
    case EncodeScheme::PureVoltage:
      return 1;
    case EncodeScheme::PurePwm:
      return 1LL << (2 * half_bits);
    case EncodeScheme::Tmdv:
      return 1LL + (1LL << half_bits);
  }
  return 0;
}

long long EncoderConfig::delay_chain_stages() const {
  switch (scheme) {
    case EncodeScheme::PureVoltage:
      return 1;
    case EncodeScheme::PurePwm:
      return 1LL << (2 * half_bits);
    case EncodeScheme::Tmdv:
      return 1LL << (half_bits + 1);
  }
  return 0;
}

double EncoderConfig::unit_current() const {
  const double i_top = transfer(v_max);
  switch (scheme) {
    case EncodeScheme::PureVoltage:
      return i_top / (input_code_count() - 1);
    case EncodeScheme::Tmdv:
      return i_top / ((1 << half_bits) - 1);
    case EncodeScheme::PurePwm:
      return i_top;
  }
  return 0.0;
}

void EncoderConfig::calibrate(double base_current) {
  validate();
  dac_levels = calibrate_dac(transfer, dac_level_count(), v_max, base_current);
}

PulseTrain encode_input(int code, const EncoderConfig& cfg) {
  if (code < 0 || code >= cfg.input_code_count())
    throw std::out_of_range("input code " + std::to_string(code) +
                            " outside [0, " +
                            std::to_string(cfg.input_code_count() - 1) + "]");
  if (cfg.dac_levels.empty())
    throw ConfigError("encoder is not calibrated");

  PulseTrain train;
  switch (cfg.scheme) {
    case EncodeScheme::PureVoltage:
      train.segments.push_back({code, cfg.dac_levels[code], 1});
      break;
    case EncodeScheme::PurePwm:
      if (code > 0)
        train.segments.push_back({1, cfg.dac_levels[1], code});
      break;
    case EncodeScheme::Tmdv: {
      const int mask = (1 << cfg.half_bits) - 1;
      const int lo = code & mask;
      const int hi = code >> cfg.half_bits;
      train.segments.push_back({lo, cfg.dac_levels[lo], 1});
      train.segments.push_back(
          {hi, cfg.dac_levels[hi], 1LL << cfg.half_bits});
      break;
    }
  }
  return train;
}

double ideal_charge_units(const PulseTrain& train) {
  double units = 0.0;
  for (const auto& s : train.segments)
    units += static_cast<double>(s.level) * s.width_units;
  return units;
}

EncoderStats measure_encoder(const EncoderConfig& cfg, double noise_sigma,
                             int trials_per_code, uint64_t seed) {
  if (trials_per_code < 1) throw ConfigError("trials_per_code must be >= 1");
  if (noise_sigma < 0.0) throw ConfigError("noise sigma must be >= 0");
  if (cfg.dac_levels.empty()) throw ConfigError("encoder is not calibrated");

  EncoderStats stats;
  stats.latency_units = cfg.latency_units();
  stats.dac_levels = cfg.dac_level_count();
  stats.delay_chain = cfg.delay_chain_stages();

  const double unit = cfg.unit_current();
  const int codes = cfg.input_code_count();
  std::normal_distribution<double> gauss(0.0, 1.0);
  double err_sum = 0.0;
  for (int code = 0; code < codes; ++code) {
    PulseTrain train = encode_input(code, cfg);
    for (int trial = 0; trial < trials_per_code; ++trial) {
      auto rng = make_rng(derive_seed(seed, code, trial));
      double units = 0.0;
      for (const auto& seg : train.segments) {
        const double v = seg.voltage + noise_sigma * gauss(rng);
        units += cfg.transfer(v) * seg.width_units / unit;
      }
      long long decoded = round_half_even(units);
      decoded = std::clamp(decoded, 0LL, static_cast<long long>(codes - 1));
      const double err = std::abs(static_cast<double>(decoded) - code);
      stats.max_abs_error = std::max(stats.max_abs_error, err);
      err_sum += err;
    }
  }
  stats.mean_abs_error = err_sum / (static_cast<double>(codes) * trials_per_code);
  return stats;
}

}  // namespace kancim
