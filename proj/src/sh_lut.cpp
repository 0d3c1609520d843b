#include "kancim/sh_lut.hpp"

#include <fstream>

#include "kancim/errors.hpp"

namespace kancim {

ShLut build_sh_lut(const BSplineSpec& spec, const QuantScheme& scheme,
                   int value_bits) {
  if (scheme.mode == QuantMode::Conventional)
    throw ConfigError("shared LUT requires an aligned quantization mode");
  if (scheme.grid != spec.grid)
    throw ConfigError("quantization grid " + std::to_string(scheme.grid) +
                      " does not match spline grid " +
                      std::to_string(spec.grid));
  if (value_bits == -1) value_bits = scheme.input_bits;
  if (value_bits < 4 || value_bits > 8)
    throw ConfigError("value_bits must be in [4, 8]");

  ShLut lut;
  lut.order = spec.order;
  lut.grid = spec.grid;
  lut.codes_per_interval = scheme.codes_per_interval;
  lut.pow2_decode = scheme.mode == QuantMode::AlignedPow2;
  lut.gap_bits = scheme.gap_bits;
  lut.value_bits = value_bits;
  const int q = lut.codes_per_interval;
  lut.center_code = (q % 2 == 1) ? q / 2 : -1;

  const int k = spec.order;
  const int total = (k + 1) * q;
  lut.index_of.assign(total, -1);
  lut.stored.reserve((total + 1) / 2);
  const double scale = lut.value_scale();
  for (int j = 0; j <= k; ++j) {
    for (int u = 0; u < q; ++u) {
      const int flat = j * q + u;
      const int mirror = (k - j) * q + (q - 1 - u);
      if (mirror < flat) {
        // Mirror partner was built first; share its slot.
        lut.index_of[flat] = lut.index_of[mirror];
        continue;
      }
      const double s = (u + 0.5) / q;
      const double value = cardinal_bspline(k, k - j + s);
      lut.index_of[flat] = static_cast<int32_t>(lut.stored.size());
      lut.stored.push_back(static_cast<int>(round_half_even(value * scale)));
    }
  }
  return lut;
}

LutValues lut_lookup(const ShLut& lut, int code) {
  if (code < 0 || code >= lut.code_count())
    throw std::out_of_range("input code " + std::to_string(code) +
                            " outside [0, " +
                            std::to_string(lut.code_count() - 1) + "]");
  const int q = lut.codes_per_interval;
  LutValues out;
  int u;
  if (lut.pow2_decode) {
    out.interval = code >> lut.gap_bits;
    u = code & (q - 1);
  } else {
    out.interval = code / q;
    u = code % q;
  }
  out.first_basis = out.interval;
  out.values.resize(lut.order + 1);
  for (int j = 0; j <= lut.order; ++j)
    out.values[j] = lut.stored[lut.index_of[j * q + u]];
  return out;
}

void save_sh_lut(const std::string& path, const ShLut& lut) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write LUT file " + path);
  out << "kancim-shlut v1\n";
  out << "order " << lut.order << "\n";
  out << "grid " << lut.grid << "\n";
  out << "codes_per_interval " << lut.codes_per_interval << "\n";
  out << "pow2_decode " << (lut.pow2_decode ? 1 : 0) << "\n";
  out << "gap_bits " << lut.gap_bits << "\n";
  out << "value_bits " << lut.value_bits << "\n";
  out << "center_code " << lut.center_code << "\n";
  out << "stored " << lut.stored.size() << "\n";
  for (size_t i = 0; i < lut.stored.size(); ++i)
    out << lut.stored[i] << (i + 1 == lut.stored.size() ? "\n" : " ");
  out << "index_of " << lut.index_of.size() << "\n";
  for (size_t i = 0; i < lut.index_of.size(); ++i)
    out << lut.index_of[i] << (i + 1 == lut.index_of.size() ? "\n" : " ");
  if (!out) throw NumericError("failed writing LUT file " + path);
}

namespace {

template <typename T>
T expect_field(std::ifstream& in, const std::string& path,
               const std::string& name) {
  std::string key;
  T value;
  if (!(in >> key >> value) || key != name)
    throw ConfigError(path + ": malformed LUT file, expected field '" + name +
                      "'");
  return value;
}

}  // namespace

ShLut load_sh_lut(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open LUT file " + path);
  std::string magic, version;
  if (!(in >> magic >> version) || magic != "kancim-shlut" || version != "v1")
    throw ConfigError(path + ": not a kancim-shlut v1 file");

  ShLut lut;
  lut.order = expect_field<int>(in, path, "order");
  lut.grid = expect_field<int>(in, path, "grid");
  lut.codes_per_interval = expect_field<int>(in, path, "codes_per_interval");
  lut.pow2_decode = expect_field<int>(in, path, "pow2_decode") != 0;
  lut.gap_bits = expect_field<int>(in, path, "gap_bits");
  lut.value_bits = expect_field<int>(in, path, "value_bits");
  lut.center_code = expect_field<int>(in, path, "center_code");

  const int n_stored = expect_field<int>(in, path, "stored");
  if (n_stored < 0) throw ConfigError(path + ": negative entry count");
  lut.stored.resize(n_stored);
  for (int i = 0; i < n_stored; ++i)
    if (!(in >> lut.stored[i]))
      throw ConfigError(path + ": truncated stored values");

  const int n_index = expect_field<int>(in, path, "index_of");
  if (n_index != (lut.order + 1) * lut.codes_per_interval)
    throw ConfigError(path + ": index table size mismatch");
  lut.index_of.resize(n_index);
  for (int i = 0; i < n_index; ++i) {
    if (!(in >> lut.index_of[i]))
      throw ConfigError(path + ": truncated index table");
    if (lut.index_of[i] < 0 || lut.index_of[i] >= n_stored)
      throw ConfigError(path + ": index entry out of range");
  }
  return lut;
}

}  // namespace kancim
