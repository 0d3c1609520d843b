#ifndef KANCIM_DATASET_HPP_
#define KANCIM_DATASET_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <string>

namespace kancim {

struct Dataset {
  Eigen::MatrixXd features;  // rows x n_features
  Eigen::MatrixXd targets;   // rows x n_targets

  Eigen::Index rows() const { return features.rows(); }
  Eigen::Index feature_dim() const { return features.cols(); }
  Eigen::Index target_dim() const { return targets.cols(); }
};

// CSV with a header row naming columns f0..f{n-1},t0..t{m-1}. Parse
// problems raise ConfigError with file and line location.
Dataset load_dataset_csv(const std::string& path);
void save_dataset_csv(const std::string& path, const Dataset& ds);

struct SplitDataset {
  Dataset train;
  Dataset val;
};

// Seeded shuffle split; row order within each part follows the shuffle.
SplitDataset split_dataset(const Dataset& ds, double val_fraction,
                           uint64_t seed);

enum class SyntheticTask {
  Smooth1d,    // uniform inputs, smooth sinusoid targets
  GaussianNd,  // gaussian inputs clamped to the domain, same target family
};

Dataset make_synthetic(SyntheticTask task, int rows, int in_dim, int out_dim,
                       double noise_sigma, uint64_t seed, double domain_lo,
                       double domain_hi);

}  // namespace kancim

#endif
