#ifndef KANCIM_TRAIN_HPP_
#define KANCIM_TRAIN_HPP_

#include <cstdint>
#include <vector>

#include "kancim/dataset.hpp"
#include "kancim/errors.hpp"
#include "kancim/spline.hpp"

namespace kancim {

enum class LossKind { Mse, CrossEntropy };

struct TrainConfig {
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 1e-2;
  double momentum = 0.9;
  LossKind loss = LossKind::Mse;
  DomainPolicy policy = DomainPolicy::Clamp;
  uint64_t seed = 1;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  KanModel model;
  std::vector<EpochStats> history;
};

// Thrown when the loss goes non-finite; carries the state from the end of
// the last finite epoch so callers can keep something usable.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& msg, KanModel last_good,
                  std::vector<EpochStats> history)
      : NumericError(msg),
        last_good_model(std::move(last_good)),
        history(std::move(history)) {}
  KanModel last_good_model;
  std::vector<EpochStats> history;
};

struct ModelGrads {
  std::vector<Eigen::MatrixXd> d_base;    // per layer, out_dim x in_dim
  std::vector<Eigen::MatrixXd> d_coeffs;  // per layer, out_dim x coeff_cols
};

// Mean loss over the batch; CrossEntropy applies row-wise softmax to the
// model output and expects one-hot (or probability) target rows. When
// `grads` is non-null, fills analytic gradients of the mean batch loss.
double model_loss_and_grads(const KanModel& model, const Eigen::MatrixXd& X,
                            const Eigen::MatrixXd& Y, LossKind loss,
                            DomainPolicy policy, ModelGrads* grads);

double model_loss(const KanModel& model, const Eigen::MatrixXd& X,
                  const Eigen::MatrixXd& Y, LossKind loss,
                  DomainPolicy policy = DomainPolicy::Clamp);

// Seeded small-random init: base weights at 1/sqrt(in_dim) scale, spline
// coefficients an order of magnitude below.
void init_model_params(KanModel& model, uint64_t seed);

// Mini-batch SGD with momentum. Per-epoch shuffling derives from
// (cfg.seed, epoch), so a run is reproducible and resumable. Empty val
// data reuses the train loss in the val column.
TrainResult train_model(const KanModel& init, const Dataset& train_data,
                        const Dataset& val_data, const TrainConfig& cfg);

}  // namespace kancim

#endif
