#include "kancim/mac_sim.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "kancim/errors.hpp"
#include "kancim/quant.hpp"
#include "kancim/rng.hpp"
#include "oracles.hpp"

using namespace kancim;

namespace {

CrossbarConfig ideal_cfg(int rows) {
  CrossbarConfig cfg;
  cfg.rows = rows;
  cfg.cols = 8;
  cfg.wire_r = 0.0;
  cfg.g_on = 1e-4;
  cfg.g_off = 0.0;
  cfg.adc_bits = 20;
  return cfg;
}

EncoderConfig enc_for(EncodeScheme s, int n) {
  return EncoderConfig::make(s, n, TransferFn::linear(0.3, 1e-4), 1.0);
}

// Same simulation contract, but every bit-line solve goes through the
// dense full-pivot oracle instead of the tridiagonal sweep. Draw keys
// are shared with the library, so the noise streams are identical.
MacResult oracle_mac(const CrossbarConfig& cfg, const EncoderConfig& enc,
                     const Eigen::VectorXi& mags, const Eigen::VectorXi& codes,
                     const std::vector<int>& map, uint64_t trial_seed) {
  const int logical = static_cast<int>(mags.size());
  std::vector<PulseTrain> trains;
  for (int i = 0; i < logical; ++i) trains.push_back(encode_input(codes[i], enc));

  const long long cycle = enc.latency_units();
  std::vector<long long> cuts{0, cycle};
  for (const auto& train : trains) {
    long long t = 0;
    for (const auto& seg : train.segments) {
      t += seg.width_units;
      if (t < cycle) cuts.push_back(t);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  const int n_slices = static_cast<int>(cuts.size()) - 1;

  Eigen::MatrixXd drive =
      Eigen::MatrixXd::Constant(cfg.rows, n_slices, cfg.v_clamp);
  for (int i = 0; i < logical; ++i) {
    const int p = map[static_cast<std::size_t>(i)];
    for (int s = 0; s < n_slices; ++s) {
      double v = enc.dac_levels[0];
      long long start = 0;
      for (const auto& seg : trains[static_cast<std::size_t>(i)].segments) {
        if (cuts[static_cast<std::size_t>(s)] < start + seg.width_units) {
          v = seg.voltage;
          break;
        }
        start += seg.width_units;
      }
      if (enc.voltage_noise_sigma > 0.0)
        v += enc.voltage_noise_sigma *
             unit_normal(derive_seed(trial_seed, kNoiseTag, uint64_t(p),
                                     uint64_t(s)));
      drive(p, s) = cfg.v_clamp + enc.transfer(v) / cfg.g_on;
    }
  }

  MacResult res;
  res.columns.resize(kWeightSliceBits);
  long long max_ideal = 0;
  const double w = 1.0 / cfg.wire_r;
  for (int c = 0; c < kWeightSliceBits; ++c) {
    const int bit = kWeightSliceBits - 1 - c;
    auto& col = res.columns[static_cast<std::size_t>(c)];
    Eigen::VectorXd g = Eigen::VectorXd::Constant(cfg.rows, cfg.g_off);
    for (int i = 0; i < logical; ++i) {
      if ((mags[i] >> bit) & 1) g[map[static_cast<std::size_t>(i)]] = cfg.g_on;
      col.ideal_units += ((mags[i] >> bit) & 1) * codes[i];
    }
    for (int p = 0; p < cfg.rows; ++p)
      g[p] *= variation_factor(cfg.variation_sigma, cfg.seed, c, p);
    max_ideal = std::max(max_ideal, col.ideal_units);
    for (int s = 0; s < n_slices; ++s) {
      Eigen::VectorXd v =
          oracles::dense_ladder_voltages(g, drive.col(s), cfg.wire_r,
                                         cfg.v_clamp);
      const double clamp_i = w * (v[0] - cfg.v_clamp);
      col.measured_units +=
          clamp_i * double(cuts[size_t(s) + 1] - cuts[size_t(s)]) /
          enc.unit_current();
    }
  }

  const long long top = (1LL << cfg.adc_bits) - 1;
  long long step = 1;
  while (max_ideal > step * top) step <<= 1;
  res.adc_step_units = step;
  for (int c = 0; c < kWeightSliceBits; ++c) {
    auto& col = res.columns[static_cast<std::size_t>(c)];
    long long code = round_half_even(col.measured_units / double(step));
    if (code < 0 || code > top) {
      col.saturated = true;
      res.saturated = true;
      code = std::clamp(code, 0LL, top);
    }
    col.decoded_units = code * step;
    res.ideal_sum += (1LL << (kWeightSliceBits - 1 - c)) * col.ideal_units;
    res.decoded_sum += (1LL << (kWeightSliceBits - 1 - c)) * col.decoded_units;
  }
  return res;
}

}  // namespace

TEST_CASE("ideal limit decodes the exact digital sum for every scheme") {
  auto rng = make_rng(derive_seed(91, 0x3AC, 1));
  for (EncodeScheme s : {EncodeScheme::PureVoltage, EncodeScheme::PurePwm,
                         EncodeScheme::Tmdv}) {
    for (int n : {1, 3}) {
      auto enc = enc_for(s, n);
      const int rows = 16;
      Eigen::VectorXi mags(rows), codes(rows);
      std::uniform_int_distribution<int> um(0, 255);
      std::uniform_int_distribution<int> uc(0, enc.input_code_count() - 1);
      for (int i = 0; i < rows; ++i) {
        mags[i] = um(rng);
        codes[i] = uc(rng);
      }
      MacResult res = simulate_mac(ideal_cfg(rows), enc, mags, codes, {}, 7);

      long long dot = 0;
      for (int i = 0; i < rows; ++i) dot += 1LL * mags[i] * codes[i];
      CHECK(res.ideal_sum == dot);
      CHECK(res.decoded_sum == res.ideal_sum);
      CHECK(res.adc_step_units == 1);
      CHECK_FALSE(res.saturated);
      for (const auto& col : res.columns) {
        CHECK(col.decoded_units == col.ideal_units);
        CHECK(col.measured_units ==
              doctest::Approx(double(col.ideal_units)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("all-zero weights read back zero") {
  auto enc = enc_for(EncodeScheme::Tmdv, 2);
  Eigen::VectorXi mags = Eigen::VectorXi::Zero(4);
  Eigen::VectorXi codes = Eigen::VectorXi::Constant(4, 9);
  MacResult res = simulate_mac(ideal_cfg(4), enc, mags, codes, {}, 3);
  CHECK(res.ideal_sum == 0);
  CHECK(res.decoded_sum == 0);
  CHECK(res.charge_coulombs == 0.0);
}

TEST_CASE("single cell attenuates by the wire divider") {
  auto enc = enc_for(EncodeScheme::Tmdv, 3);
  CrossbarConfig cfg = ideal_cfg(1);
  cfg.wire_r = 400.0;
  Eigen::VectorXi mags(1), codes(1);
  mags << 128;  // only the top bit slice holds a cell
  codes << 45;
  MacResult res = simulate_mac(cfg, enc, mags, codes, {}, 0);
  // Ladder with one cell: delivered current is f(V)/(1 + g_on wire_r).
  const double expected = 45.0 / (1.0 + cfg.g_on * cfg.wire_r);
  CHECK(res.columns[0].measured_units ==
        doctest::Approx(expected).epsilon(1e-9));
  CHECK(res.columns[0].ideal_units == 45);
  for (int c = 1; c < 8; ++c) CHECK(res.columns[c].measured_units == 0.0);
}

TEST_CASE("matches the dense oracle under every non-ideality at once") {
  for (EncodeScheme s : {EncodeScheme::PureVoltage, EncodeScheme::Tmdv,
                         EncodeScheme::PurePwm}) {
    auto enc = enc_for(s, 2);
    enc.voltage_noise_sigma = 3e-3;
    CrossbarConfig cfg;
    cfg.rows = 20;
    cfg.cols = 8;
    cfg.wire_r = 150.0;
    cfg.g_on = 1e-4;
    cfg.g_off = 2e-6;
    cfg.adc_bits = 12;
    cfg.variation_sigma = 0.08;
    cfg.seed = 2718;

    auto rng = make_rng(derive_seed(91, 0x3AC, 2));
    const int logical = 16;
    Eigen::VectorXi mags(logical), codes(logical);
    std::uniform_int_distribution<int> um(0, 255);
    std::uniform_int_distribution<int> uc(0, enc.input_code_count() - 1);
    std::vector<int> map(logical);
    for (int i = 0; i < logical; ++i) {
      mags[i] = um(rng);
      codes[i] = uc(rng);
      map[static_cast<std::size_t>(i)] = i;
    }
    std::shuffle(map.begin(), map.end(), rng);

    MacResult lib = simulate_mac(cfg, enc, mags, codes, map, 555);
    MacResult ref = oracle_mac(cfg, enc, mags, codes, map, 555);
    CHECK(lib.ideal_sum == ref.ideal_sum);
    CHECK(lib.decoded_sum == ref.decoded_sum);
    CHECK(lib.adc_step_units == ref.adc_step_units);
    for (int c = 0; c < 8; ++c) {
      const double scale =
          std::max(1.0, std::abs(ref.columns[size_t(c)].measured_units));
      CHECK(std::abs(lib.columns[size_t(c)].measured_units -
                     ref.columns[size_t(c)].measured_units) /
                scale <=
            1e-10);
      CHECK(lib.columns[size_t(c)].decoded_units ==
            ref.columns[size_t(c)].decoded_units);
    }
  }
}

TEST_CASE("word-line noise is shared across bit-slice columns") {
  // 192 = bits 7 and 6: two columns with identical cell patterns must
  // integrate identical charge because they see the same word lines.
  auto enc = enc_for(EncodeScheme::Tmdv, 2);
  enc.voltage_noise_sigma = 5e-3;
  CrossbarConfig cfg = ideal_cfg(6);
  cfg.wire_r = 80.0;
  Eigen::VectorXi mags = Eigen::VectorXi::Constant(6, 192);
  Eigen::VectorXi codes(6);
  codes << 3, 15, 8, 0, 11, 5;
  MacResult res = simulate_mac(cfg, enc, mags, codes, {}, 424242);
  CHECK(res.columns[0].measured_units == res.columns[1].measured_units);
  CHECK(res.columns[0].measured_units > 0.0);
  for (int c = 2; c < 8; ++c) CHECK(res.columns[size_t(c)].measured_units == 0.0);
}

TEST_CASE("identical seeds reproduce identical results") {
  auto enc = enc_for(EncodeScheme::Tmdv, 3);
  enc.voltage_noise_sigma = 4e-3;
  CrossbarConfig cfg = ideal_cfg(8);
  cfg.wire_r = 60.0;
  cfg.variation_sigma = 0.05;
  cfg.seed = 99;
  Eigen::VectorXi mags(8), codes(8);
  for (int i = 0; i < 8; ++i) {
    mags[i] = 17 * i + 3;
    codes[i] = 7 * i + 1;
  }
  MacResult a = simulate_mac(cfg, enc, mags, codes, {}, 31);
  MacResult b = simulate_mac(cfg, enc, mags, codes, {}, 31);
  CHECK(a.decoded_sum == b.decoded_sum);
  for (int c = 0; c < 8; ++c)
    CHECK(a.columns[size_t(c)].measured_units ==
          b.columns[size_t(c)].measured_units);
  MacResult d = simulate_mac(cfg, enc, mags, codes, {}, 32);
  bool any_differs = false;
  for (int c = 0; c < 8; ++c)
    any_differs |= d.columns[size_t(c)].measured_units !=
                   a.columns[size_t(c)].measured_units;
  CHECK(any_differs);
}

TEST_CASE("rows mapped nearer the clamp lose less current") {
  auto enc = enc_for(EncodeScheme::Tmdv, 3);
  CrossbarConfig cfg = ideal_cfg(64);
  cfg.wire_r = 100.0;
  cfg.g_on = 1e-3;
  Eigen::VectorXi mags(1), codes(1);
  mags << 255;
  codes << 63;
  MacResult near = simulate_mac(cfg, enc, mags, codes, std::vector<int>{0}, 0);
  MacResult far = simulate_mac(cfg, enc, mags, codes, std::vector<int>{63}, 0);
  CHECK(near.columns[0].measured_units > far.columns[0].measured_units);
  CHECK(near.ideal_sum == far.ideal_sum);
}

TEST_CASE("adc step scales as a power of two and quantizes the readout") {
  auto enc = enc_for(EncodeScheme::Tmdv, 3);
  CrossbarConfig cfg = ideal_cfg(64);
  cfg.adc_bits = 8;
  Eigen::VectorXi mags = Eigen::VectorXi::Constant(64, 255);
  Eigen::VectorXi codes = Eigen::VectorXi::Constant(64, 63);
  MacResult res = simulate_mac(cfg, enc, mags, codes, {}, 5);
  // Largest column charge is 64*63 = 4032 units against a 255-code adc:
  // the step lands on 16.
  CHECK(res.adc_step_units == 16);
  CHECK_FALSE(res.saturated);
  for (const auto& col : res.columns) {
    CHECK(col.decoded_units % 16 == 0);
    CHECK(std::abs(col.error_units()) <= 8);
  }
}

TEST_CASE("off-cell leakage can pin the flag without any randomness") {
  auto enc = enc_for(EncodeScheme::Tmdv, 3);
  CrossbarConfig cfg = ideal_cfg(2);
  cfg.adc_bits = 6;  // top code 63, step stays 1
  cfg.g_off = 0.5e-4;  // half of g_on: a zero bit leaks half its input
  Eigen::VectorXi mags(2), codes(2);
  mags << 255, 0;
  codes << 63, 62;
  MacResult res = simulate_mac(cfg, enc, mags, codes, {}, 1);
  // Every slice column reads 63 + 31 = 94 units against a 63-code range.
  CHECK(res.saturated);
  for (const auto& col : res.columns) {
    CHECK(col.saturated);
    CHECK(col.decoded_units == 63);
    CHECK(col.measured_units == doctest::Approx(94.0).epsilon(1e-9));
  }
  CHECK(res.decoded_sum == 63 * 255);
}

TEST_CASE("input validation") {
  auto enc = enc_for(EncodeScheme::Tmdv, 2);
  CrossbarConfig cfg = ideal_cfg(4);
  Eigen::VectorXi mags = Eigen::VectorXi::Constant(4, 10);
  Eigen::VectorXi codes = Eigen::VectorXi::Constant(4, 3);

  Eigen::VectorXi codes3 = codes.head(3);
  CHECK_THROWS_AS(simulate_mac(cfg, enc, mags, codes3, {}, 0), ConfigError);

  Eigen::VectorXi bad_mag = mags;
  bad_mag[1] = 256;
  CHECK_THROWS_AS(simulate_mac(cfg, enc, bad_mag, codes, {}, 0), ConfigError);

  Eigen::VectorXi bad_code = codes;
  bad_code[2] = 16;
  CHECK_THROWS_AS(simulate_mac(cfg, enc, mags, bad_code, {}, 0),
                  std::out_of_range);

  CHECK_THROWS_AS(simulate_mac(cfg, enc, mags, codes, {0, 1, 2}, 0),
                  ConfigError);
  CHECK_THROWS_AS(simulate_mac(cfg, enc, mags, codes, {0, 1, 2, 2}, 0),
                  ConfigError);
  CHECK_THROWS_AS(simulate_mac(cfg, enc, mags, codes, {0, 1, 2, 4}, 0),
                  ConfigError);

  CrossbarConfig narrow = cfg;
  narrow.cols = 4;
  CHECK_THROWS_AS(simulate_mac(narrow, enc, mags, codes, {}, 0), ConfigError);

  CrossbarConfig tiny = cfg;
  tiny.rows = 2;
  CHECK_THROWS_AS(simulate_mac(tiny, enc, mags, codes, {}, 0), ConfigError);

  EncoderConfig raw;
  raw.transfer = TransferFn::linear(0.3, 1e-4);
  CHECK_THROWS_AS(simulate_mac(cfg, raw, mags, codes, {}, 0), ConfigError);
}
