#include "kancim/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <vector>

#include "kancim/errors.hpp"
#include "kancim/rng.hpp"

namespace kancim {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string trimmed(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& raw, const std::string& path, int line) {
  const std::string tok = trimmed(raw);
  double value = 0.0;
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw ConfigError(path + ":" + std::to_string(line) +
                      ": cannot parse numeric field '" + tok + "'");
  if (!std::isfinite(value))
    throw ConfigError(path + ":" + std::to_string(line) +
                      ": non-finite value '" + tok + "'");
  return value;
}

}  // namespace

Dataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file " + path);

  std::string line;
  if (!std::getline(in, line))
    throw ConfigError(path + ":1: empty dataset file");
  auto header = split_fields(line);
  int n_features = 0;
  size_t col = 0;
  while (col < header.size() &&
         trimmed(header[col]) == "f" + std::to_string(col)) {
    ++col;
    ++n_features;
  }
  int n_targets = 0;
  while (col < header.size() &&
         trimmed(header[col]) == "t" + std::to_string(n_targets)) {
    ++col;
    ++n_targets;
  }
  if (n_features == 0 || n_targets == 0 || col != header.size())
    throw ConfigError(path + ":1: header must be f0..f{n-1},t0..t{m-1}, got '" +
                      line + "'");

  std::vector<double> values;
  int rows = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trimmed(line).empty()) continue;
    auto fields = split_fields(line);
    if (static_cast<int>(fields.size()) != n_features + n_targets)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(n_features + n_targets) +
                        " fields, got " + std::to_string(fields.size()));
    for (const auto& f : fields) values.push_back(parse_double(f, path, line_no));
    ++rows;
  }
  if (rows == 0) throw ConfigError(path + ": dataset has no data rows");

  Dataset ds;
  ds.features.resize(rows, n_features);
  ds.targets.resize(rows, n_targets);
  const int stride = n_features + n_targets;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < n_features; ++c) ds.features(r, c) = values[r * stride + c];
    for (int c = 0; c < n_targets; ++c)
      ds.targets(r, c) = values[r * stride + n_features + c];
  }
  return ds;
}

void save_dataset_csv(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write dataset file " + path);
  for (Eigen::Index c = 0; c < ds.feature_dim(); ++c)
    out << (c ? ",f" : "f") << c;
  for (Eigen::Index c = 0; c < ds.target_dim(); ++c) out << ",t" << c;
  out << "\n";
  char buf[64];
  for (Eigen::Index r = 0; r < ds.rows(); ++r) {
    for (Eigen::Index c = 0; c < ds.feature_dim(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", ds.features(r, c));
      out << (c ? "," : "") << buf;
    }
    for (Eigen::Index c = 0; c < ds.target_dim(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", ds.targets(r, c));
      out << ',' << buf;
    }
    out << "\n";
  }
}

SplitDataset split_dataset(const Dataset& ds, double val_fraction,
                           uint64_t seed) {
  if (val_fraction < 0.0 || val_fraction >= 1.0)
    throw ConfigError("val_fraction must be in [0, 1)");
  const Eigen::Index n = ds.rows();
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  auto rng = make_rng(derive_seed(seed, 0x5B117));
  std::shuffle(idx.begin(), idx.end(), rng);
  const Eigen::Index n_val =
      static_cast<Eigen::Index>(std::llround(val_fraction * n));

  SplitDataset out;
  out.val.features.resize(n_val, ds.feature_dim());
  out.val.targets.resize(n_val, ds.target_dim());
  out.train.features.resize(n - n_val, ds.feature_dim());
  out.train.targets.resize(n - n_val, ds.target_dim());
  for (Eigen::Index i = 0; i < n_val; ++i) {
    out.val.features.row(i) = ds.features.row(idx[i]);
    out.val.targets.row(i) = ds.targets.row(idx[i]);
  }
  for (Eigen::Index i = n_val; i < n; ++i) {
    out.train.features.row(i - n_val) = ds.features.row(idx[i]);
    out.train.targets.row(i - n_val) = ds.targets.row(idx[i]);
  }
  return out;
}

Dataset make_synthetic(SyntheticTask task, int rows, int in_dim, int out_dim,
                       double noise_sigma, uint64_t seed, double domain_lo,
                       double domain_hi) {
  if (rows < 1 || in_dim < 1 || out_dim < 1)
    throw ConfigError("synthetic dataset dims must be >= 1");
  if (!(domain_lo < domain_hi))
    throw ConfigError("synthetic dataset domain must satisfy lo < hi");
  const double span = domain_hi - domain_lo;
  const double mid = 0.5 * (domain_lo + domain_hi);

  Dataset ds;
  ds.features.resize(rows, in_dim);
  ds.targets.resize(rows, out_dim);
  auto rng = make_rng(derive_seed(seed, 0xDA7A));
  std::uniform_real_distribution<double> uni(domain_lo, domain_hi);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (int r = 0; r < rows; ++r) {
    for (int j = 0; j < in_dim; ++j) {
      double x;
      if (task == SyntheticTask::Smooth1d) {
        x = uni(rng);
      } else {
        x = mid + gauss(rng) * span / 6.0;
        x = std::min(std::max(x, domain_lo), domain_hi);
      }
      ds.features(r, j) = x;
    }
    for (int k = 0; k < out_dim; ++k) {
      double y = 0.0;
      for (int j = 0; j < in_dim; ++j) {
        const double u = (ds.features(r, j) - domain_lo) / span;
        y += std::sin(2.0 * M_PI * (k + 1) * u + 0.7 * j + 1.3 * k) +
             0.3 * u;
      }
      y /= in_dim;
      if (noise_sigma > 0.0) y += noise_sigma * gauss(rng);
      ds.targets(r, k) = y;
    }
  }
  return ds;
}

}  // namespace kancim
