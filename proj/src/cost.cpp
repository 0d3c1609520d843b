#include "kancim/cost.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "kancim/errors.hpp"
#include "kancim/mac_sim.hpp"

namespace kancim {

namespace {

struct TechField {
  const char* key;
  double TechParams::*member;
};

constexpr TechField kTechFields[] = {
    {"area_per_lut_bit", &TechParams::area_per_lut_bit},
    {"energy_per_lut_bit", &TechParams::energy_per_lut_bit},
    {"area_per_mux_way", &TechParams::area_per_mux_way},
    {"energy_per_mux_way", &TechParams::energy_per_mux_way},
    {"area_per_decoder_line", &TechParams::area_per_decoder_line},
    {"energy_per_decoder_line", &TechParams::energy_per_decoder_line},
    {"area_per_dac_level", &TechParams::area_per_dac_level},
    {"energy_per_dac_level", &TechParams::energy_per_dac_level},
    {"area_per_delay_stage", &TechParams::area_per_delay_stage},
    {"energy_per_delay_stage", &TechParams::energy_per_delay_stage},
    {"area_per_cell", &TechParams::area_per_cell},
    {"energy_per_cell", &TechParams::energy_per_cell},
    {"area_per_adc_level", &TechParams::area_per_adc_level},
    {"energy_per_adc_bit", &TechParams::energy_per_adc_bit},
    {"clock_period_s", &TechParams::clock_period_s},
};

constexpr char kTechHeader[] = "kancim-tech v1";

}  // namespace

void TechParams::validate() const {
  for (const auto& f : kTechFields) {
    const double v = this->*(f.member);
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ConfigError(std::string("tech parameter '") + f.key +
                        "' must be finite and >= 0");
  }
  if (!(clock_period_s > 0.0))
    throw ConfigError("tech parameter 'clock_period_s' must be > 0");
}

TechParams load_tech_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open tech file: " + path);

  std::string line;
  bool have_header = false;
  std::map<std::string, double> seen;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (!have_header) {
      std::string version;
      ls >> version;
      if (key + " " + version != kTechHeader)
        throw ConfigError(path + ": expected header '" + kTechHeader + "'");
      have_header = true;
      continue;
    }
    double value = 0.0;
    if (!(ls >> value))
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected 'key value', got '" + line + "'");
    if (!seen.emplace(key, value).second)
      throw ConfigError(path + ": duplicate tech parameter '" + key + "'");
  }
  if (!have_header)
    throw ConfigError(path + ": expected header '" + kTechHeader + "'");

  TechParams tech;
  for (const auto& f : kTechFields) {
    auto it = seen.find(f.key);
    if (it == seen.end())
      throw ConfigError(path + ": missing tech parameter '" +
                        std::string(f.key) + "'");
    tech.*(f.member) = it->second;
    seen.erase(it);
  }
  if (!seen.empty())
    throw ConfigError(path + ": unknown tech parameter '" +
                      seen.begin()->first + "'");
  tech.validate();
  return tech;
}

void save_tech_params(const TechParams& tech, const std::string& path) {
  tech.validate();
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write tech file: " + path);
  out << kTechHeader << "\n";
  char buf[64];
  for (const auto& f : kTechFields) {
    std::snprintf(buf, sizeof buf, "%.17g", tech.*(f.member));
    out << f.key << " " << buf << "\n";
  }
  if (!out) throw ConfigError("write failed: " + path);
}

std::vector<std::pair<std::string, const BlockCost*>> CostReport::blocks()
    const {
  return {{"lut", &lut},           {"mux", &mux},     {"decoder", &decoder},
          {"input_gen", &input_gen}, {"array", &array}, {"adc", &adc},
          {"other", &other}};
}

void CostReport::finalize() {
  area = energy = latency = 0.0;
  for (const auto& [name, b] : blocks()) {
    area += b->area;
    energy += b->energy;
    latency += b->latency;
  }
  power = latency > 0.0 ? energy / latency : 0.0;
}

double mean_activity(const BasisStats& stats) {
  return stats.p.size() > 0 ? stats.p.mean() : 0.0;
}

long long decoder_lines(const std::vector<int>& decoder_bits) {
  long long lines = 0;
  for (int b : decoder_bits) {
    if (b < 0 || b > 62) throw ConfigError("decoder width out of range");
    lines += 1LL << b;
  }
  return lines;
}

long long switch_ways_total(const std::vector<SwitchSpec>& switches) {
  long long ways = 0;
  for (const auto& s : switches)
    ways += static_cast<long long>(s.ways) * s.count;
  return ways;
}

CostReport estimate(const KanModel& model, const QuantScheme& scheme,
                    const CrossbarConfig& crossbar, const EncoderConfig& enc,
                    const TechParams& tech, double wl_activity) {
  CostReport r;
  if (model.layers.empty()) {
    r.finalize();
    return r;
  }
  model.validate();
  crossbar.validate();
  enc.validate();
  tech.validate();
  if (wl_activity > 1.0)
    throw ConfigError("workload activity must be in [0, 1]");

  const double value_bits = 2.0 * enc.half_bits;
  const double dac_levels = enc.dac_level_count();
  const double delay_stages = static_cast<double>(enc.delay_chain_stages());
  const double encode_s = enc.latency_units() * enc.unit_pulse_s;
  const double adc_levels = std::ldexp(1.0, crossbar.adc_bits);
  const bool conventional = scheme.mode == QuantMode::Conventional;

  for (const auto& layer : model.layers) {
    const int order = layer.spec.order;
    const int basis = layer.basis_count();
    const double in = layer.in_dim;
    const double out = layer.out_dim;

    // Alignment re-solved for this layer's grid; the conventional mode
    // prices the baseline side of the same inventory.
    QuantScheme ls = QuantScheme::make(
        conventional ? QuantMode::AlignedPow2 : scheme.mode, layer.spec.grid,
        scheme.input_bits, scheme.coeff_bits);
    const ResourcePair pair = count_resources(ls, order);
    const ResourceCount& inv = conventional ? pair.baseline : pair.optimized;

    const double lut_bits = static_cast<double>(inv.lut_entries) * value_bits;
    const double ways = static_cast<double>(switch_ways_total(inv.switches));
    const double lines = static_cast<double>(decoder_lines(inv.decoder_bits));
    // Aligned layouts route order+1 shared values through the demux; the
    // conventional layout provisions a generator per basis row.
    const double gens = conventional ? basis : order + 1;
    const double cells = out * in * basis * kWeightSliceBits;
    const double converters = out * kWeightSliceBits;
    const double activity =
        wl_activity >= 0.0 ? wl_activity
                           : static_cast<double>(order + 1) / basis;

    r.lut.area += in * lut_bits * tech.area_per_lut_bit;
    r.lut.energy += in * (order + 1) * value_bits * tech.energy_per_lut_bit;
    r.lut.latency += tech.clock_period_s;

    r.mux.area += in * ways * tech.area_per_mux_way;
    r.mux.energy += in * ways * tech.energy_per_mux_way;

    r.decoder.area += in * lines * tech.area_per_decoder_line;
    r.decoder.energy += in * lines * tech.energy_per_decoder_line;

    r.input_gen.area += in * gens *
                        (dac_levels * tech.area_per_dac_level +
                         delay_stages * tech.area_per_delay_stage);
    r.input_gen.energy += in * gens *
                          (dac_levels * tech.energy_per_dac_level +
                           delay_stages * tech.energy_per_delay_stage);
    r.input_gen.latency += encode_s;

    r.array.area += cells * tech.area_per_cell;
    r.array.energy += cells * activity * tech.energy_per_cell;

    r.adc.area += converters * adc_levels * tech.area_per_adc_level;
    r.adc.energy += converters * crossbar.adc_bits * tech.energy_per_adc_bit;
    r.adc.latency += crossbar.adc_bits * tech.clock_period_s;
  }

  r.finalize();
  return r;
}

void CostBudget::validate() const {
  auto check = [](const char* name, const std::optional<double>& v) {
    if (v && !(*v > 0.0))
      throw ConfigError(std::string("budget ") + name + " must be positive");
  };
  check("area", area);
  check("energy", energy);
  check("latency", latency);
}

ConstraintResult check_constraints(const CostReport& report,
                                   const CostBudget& budget) {
  budget.validate();
  ConstraintResult res;
  if (budget.area && report.area > *budget.area)
    res.violations.push_back("area");
  if (budget.energy && report.energy > *budget.energy)
    res.violations.push_back("energy");
  if (budget.latency && report.latency > *budget.latency)
    res.violations.push_back("latency");
  res.pass = res.violations.empty();
  return res;
}

}  // namespace kancim
