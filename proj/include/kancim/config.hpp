#ifndef KANCIM_CONFIG_HPP_
#define KANCIM_CONFIG_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kancim/cost.hpp"
#include "kancim/crossbar.hpp"
#include "kancim/dataset.hpp"
#include "kancim/encoder.hpp"
#include "kancim/mapping.hpp"
#include "kancim/quant.hpp"
#include "kancim/train.hpp"
#include "kancim/tune.hpp"

namespace kancim {

struct DatasetSpec {
  enum class Source { Synthetic, Csv };
  Source source = Source::Synthetic;
  std::string path;  // csv source only
  SyntheticTask task = SyntheticTask::Smooth1d;
  int train_rows = 256;
  int val_rows = 64;
  double noise_sigma = 0.0;
  double val_fraction = 0.2;  // csv rows are split, synthetic ones generated
};

struct ModelSpec {
  std::vector<int> widths{1, 1};  // layer dims, input first
  int order = 3;
  int grid = 5;
  double domain_lo = 0.0;
  double domain_hi = 1.0;
  Activation activation = Activation::Relu;

  // Chain of KanLayers with seeded small-random parameters.
  KanModel build(std::uint64_t init_seed) const;
};

struct TrainSpec {
  TrainConfig cfg;            // cfg.seed is overwritten from the global seed
  double target_loss = -1.0;  // smoke threshold on final val loss; <0 = unset
};

struct QuantSpec {
  QuantMode mode = QuantMode::AlignedPow2;
  int input_bits = 8;
  int coeff_bits = 8;
  int value_bits = -1;  // lut entry width; -1 follows input_bits
  std::vector<int> grid_sweep{8, 16, 32, 64};

  QuantScheme scheme_at(int grid) const {
    return QuantScheme::make(mode, grid, input_bits, coeff_bits);
  }
};

struct EncoderSpec {
  EncodeScheme scheme = EncodeScheme::Tmdv;
  int half_bits = 3;
  double unit_pulse_s = 1e-9;
  double v_max = 1.0;
  double noise_sigma = 0.0;
  TransferFn transfer;  // defaults to linear(0.3, 1e-4)
  std::vector<double> noise_grid{0.0, 0.005, 0.01, 0.02};  // comparison sweep
  int trials_per_code = 64;

  EncoderConfig build() const;  // calibrated, noise applied
};

struct MappingSpec {
  std::vector<int> array_rows{128, 256, 512, 1024};
  std::vector<int> grids{7, 15, 30, 60};  // same length as array_rows
  ScoreParams score;
  int channel = 0;     // input channel of the mapped layer
  int layer = 0;       // checkpoint layer to map
  int train_rows = 512;
  int eval_rows = 128;
};

struct TuneSpec {
  int warmup_epochs = 10;
  int window_epochs = 5;
  int increment = 5;
  int max_grid = 20;
  double min_rel_improvement = 1e-4;
  int max_windows = 0;
  CostBudget budget;
  std::optional<GridTemplates> templates;
  EncoderMode high_mode = EncoderMode::Accuracy;
  EncoderMode other_mode = EncoderMode::Performance;
  double wl_activity = -1.0;
};

/// One experiment document. Every key has a default, so "{}" is a valid
/// config; unknown keys anywhere are rejected with their JSON location.
/// The same document drives every subcommand; each reads the sections it
/// needs.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::string tech_params_path;  // empty: illustrative defaults
  std::string checkpoint_path;   // commands that need one require it
  DatasetSpec dataset;
  ModelSpec model;
  TrainSpec train;
  QuantSpec quant;
  CrossbarConfig crossbar;  // crossbar.seed is overwritten from the global seed
  EncoderSpec encoder;
  MappingSpec mapping;
  TuneSpec tune;

  void validate() const;
  TechParams tech() const;  // loads the file or returns the defaults
};

ExperimentConfig parse_experiment_config(const nlohmann::json& doc,
                                         const std::string& source_name);
ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace kancim

#endif
