#ifndef KANCIM_TUNE_HPP_
#define KANCIM_TUNE_HPP_

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kancim/cost.hpp"
#include "kancim/dataset.hpp"
#include "kancim/train.hpp"

namespace kancim {

enum class SensitivityClass { High, Medium, Low };

const char* sensitivity_class_name(SensitivityClass c);

struct SensitivityProfile {
  Eigen::VectorXd scores;  // per layer, >= 0
  // Filled by assign_grids.
  double tau_high = 0.0;
  double tau_low = 0.0;
  std::vector<SensitivityClass> classes;
};

// Per-sample squared loss gradient w.r.t. the spline coefficients,
// averaged per coefficient within a layer and then over the validation
// set. Uses the same analytic backward pass as training.
SensitivityProfile profile_sensitivity(const KanModel& model,
                                       const Dataset& val, LossKind loss,
                                       DomainPolicy policy =
                                           DomainPolicy::Clamp);

struct GridTemplates {
  int high = 20;
  int med = 10;
  int low = 5;
  void validate() const;  // high > med > low >= 1
};

// Tier thresholds by nearest rank on the descending score list: the high
// threshold is the inclusive 67th percentile, the low threshold sits one
// rank above the inclusive 33rd so the bottom tier is nonempty on
// distinct scores. Classification then follows the >= comparisons (all
// equal scores land in the top tier). Fills the profile's thresholds and
// classes, returns the per-layer grid choice.
std::vector<int> assign_grids(SensitivityProfile& profile,
                              const GridTemplates& templates);

struct TuneConfig {
  TrainConfig train;        // train.epochs is ignored; windows below rule
  int warmup_epochs = 10;
  int window_epochs = 5;    // N: epochs between extension decisions
  int increment = 5;        // E: grid growth per accepted extension
  int max_grid = 20;        // cap on any layer's grid
  CostBudget budget;
  double min_rel_improvement = 1e-4;
  int max_windows = 0;      // 0 = run to a terminal decision
  std::optional<GridTemplates> templates;  // sensitivity assignment phase
  EncoderMode high_mode = EncoderMode::Accuracy;
  EncoderMode other_mode = EncoderMode::Performance;
  QuantScheme quant;          // mode/input_bits/coeff_bits for costing
  double wl_activity = -1.0;  // forwarded to estimate

  void validate() const;
};

struct TuneRecord {
  int window = 0;     // 0 covers pre-loop events (shrink, assignment)
  int epoch_end = 0;  // cumulative training epochs when recorded
  double val_start = 0.0;
  double val_end = 0.0;
  std::vector<int> grids;
  CostReport cost;
  std::string decision;
};

// One JSON object per record, keys sorted, doubles in shortest
// round-trip form; byte-stable across runs with equal inputs.
std::string to_json_line(const TuneRecord& record);

// Mid-run state, enough to resume at the next window boundary and to
// undo the most recent extension.
struct TuneState {
  KanModel model;
  KanModel rollback_model;  // valid only when has_rollback
  bool has_rollback = false;
  bool warmed_up = false;
  bool finished = false;
  int window = 0;       // next window index, 1-based once the loop runs
  int epochs_done = 0;
  bool infeasible = false;
  std::vector<SensitivityClass> classes;  // from the assignment phase
};

void save_tune_state(const TuneState& state, const std::string& path);
TuneState load_tune_state(const std::string& path);

struct TuneResult {
  KanModel model;
  std::vector<TuneRecord> trace;
  bool infeasible = false;
  bool finished = false;
  CostReport final_cost;
  std::vector<SensitivityClass> classes;   // empty without templates
  std::vector<EncoderMode> layer_modes;    // per layer, from the classes
  std::vector<int> grids() const;
};

// Budget-gated training loop. If the starting configuration violates the
// budget, grids shrink uniformly until it complies (an infeasible result
// carries the minimal-cost report). After warmup (and the optional
// sensitivity assignment), every window trains `window_epochs` and then
// either extends every eligible layer's grid by `increment` (validation
// loss improved and the extended cost stays within budget), stops at the
// cap or the budget, or rolls back the one unvalidated extension when
// the loss plateaus. Every accepted configuration passes
// check_constraints.
TuneResult tune(const KanModel& initial, const Dataset& train_data,
                const Dataset& val_data, const TuneConfig& cfg,
                const TechParams& tech, const CrossbarConfig& crossbar,
                const EncoderConfig& enc);

// Continue from a saved state; `state` is advanced in place. The trace
// holds only the records produced by this call, so a resumed run's
// concatenated trace matches the uninterrupted one byte for byte.
TuneResult tune_resume(TuneState& state, const Dataset& train_data,
                       const Dataset& val_data, const TuneConfig& cfg,
                       const TechParams& tech, const CrossbarConfig& crossbar,
                       const EncoderConfig& enc);

}  // namespace kancim

#endif
