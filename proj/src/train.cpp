#include "kancim/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kancim/rng.hpp"

namespace kancim {

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (momentum < 0.0 || momentum >= 1.0)
    throw ConfigError("momentum must be in [0, 1)");
}

namespace {

struct LayerCache {
  Eigen::MatrixXd A;         // act(X), B x in
  Eigen::MatrixXd A_prime;   // act'(X)
  Eigen::MatrixXd Phi;       // basis features, B x in*b
  Eigen::MatrixXd Phi_prime; // feature derivatives, zero where input clamps
};

void fill_cache(const KanLayer& layer, const Eigen::MatrixXd& X,
                DomainPolicy policy, bool need_derivs, LayerCache* cache) {
  const auto& spec = layer.spec;
  const int b = spec.basis_count();
  const Eigen::Index rows = X.rows();
  cache->A.resize(rows, layer.in_dim);
  cache->Phi = Eigen::MatrixXd::Zero(rows, layer.in_dim * b);
  if (need_derivs) {
    cache->A_prime.resize(rows, layer.in_dim);
    cache->Phi_prime = Eigen::MatrixXd::Zero(rows, layer.in_dim * b);
  }
  const int k = spec.order;
  const double inv_h = spec.grid / (spec.domain_hi - spec.domain_lo);
  double vals[16];
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (int j = 0; j < layer.in_dim; ++j) {
      const double raw = X(r, j);
      cache->A(r, j) = apply_activation(layer.activation, raw);
      if (need_derivs)
        cache->A_prime(r, j) = activation_derivative(layer.activation, raw);
      double x = raw;
      bool clamped = false;
      if (!spec.contains(x)) {
        if (policy == DomainPolicy::Reject)
          throw NumericError("input " + std::to_string(x) +
                             " outside spline domain and policy is reject");
        x = spec.clamp(x);
        clamped = true;
      }
      int first;
      basis_eval_active(spec, x, &first, vals);
      for (int i = 0; i <= k; ++i)
        cache->Phi(r, j * b + first + i) = vals[i];
      if (need_derivs && !clamped) {
        int g;
        double s;
        g = spec.interval_of(x);
        s = (x - spec.domain_lo) * inv_h - g;
        for (int i = 0; i <= k; ++i)
          cache->Phi_prime(r, j * b + g + i) =
              cardinal_bspline_derivative(k, k - i + s) * inv_h;
      }
    }
  }
}

double loss_and_output_grad(const Eigen::MatrixXd& out,
                            const Eigen::MatrixXd& Y, LossKind loss,
                            Eigen::MatrixXd* d_out) {
  const double b = static_cast<double>(out.rows());
  if (loss == LossKind::Mse) {
    Eigen::MatrixXd diff = out - Y;
    const double denom = b * out.cols();
    if (d_out) *d_out = (2.0 / denom) * diff;
    return diff.squaredNorm() / denom;
  }
  // Softmax cross entropy over output rows.
  Eigen::MatrixXd p = out;
  double total = 0.0;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    const double m = p.row(r).maxCoeff();
    Eigen::ArrayXd e = (p.row(r).array() - m).exp();
    const double z = e.sum();
    p.row(r) = (e / z).matrix();
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      if (Y(r, c) > 0.0)
        total -= Y(r, c) * (out(r, c) - m - std::log(z));
    }
  }
  if (d_out) *d_out = (p - Y) / b;
  return total / b;
}

}  // namespace

double model_loss_and_grads(const KanModel& model, const Eigen::MatrixXd& X,
                            const Eigen::MatrixXd& Y, LossKind loss,
                            DomainPolicy policy, ModelGrads* grads) {
  const size_t n_layers = model.layers.size();
  const bool need_grads = grads != nullptr;
  std::vector<LayerCache> caches(n_layers);
  std::vector<Eigen::MatrixXd> inputs(n_layers);

  Eigen::MatrixXd cur = X;
  for (size_t l = 0; l < n_layers; ++l) {
    const KanLayer& layer = model.layers[l];
    if (cur.cols() != layer.in_dim)
      throw ConfigError("layer input size mismatch in forward pass");
    inputs[l] = cur;
    fill_cache(layer, cur, policy, need_grads && l > 0, &caches[l]);
    cur = caches[l].A * layer.base_weights.transpose() +
          caches[l].Phi * layer.spline_coeffs.transpose();
  }
  if (cur.cols() != Y.cols() || cur.rows() != Y.rows())
    throw ConfigError("target shape does not match model output");

  Eigen::MatrixXd grad_out;
  const double value =
      loss_and_output_grad(cur, Y, loss, need_grads ? &grad_out : nullptr);
  if (!need_grads) return value;

  grads->d_base.resize(n_layers);
  grads->d_coeffs.resize(n_layers);
  for (size_t li = n_layers; li-- > 0;) {
    const KanLayer& layer = model.layers[li];
    const LayerCache& cache = caches[li];
    grads->d_base[li] = grad_out.transpose() * cache.A;
    grads->d_coeffs[li] = grad_out.transpose() * cache.Phi;
    if (li == 0) break;
    // Pass gradient to the layer input: base path plus spline path.
    Eigen::MatrixXd d_in =
        (grad_out * layer.base_weights).cwiseProduct(cache.A_prime);
    Eigen::MatrixXd m =
        (grad_out * layer.spline_coeffs).cwiseProduct(cache.Phi_prime);
    const int b = layer.spec.basis_count();
    for (int j = 0; j < layer.in_dim; ++j)
      d_in.col(j) += m.middleCols(j * b, b).rowwise().sum();
    grad_out = std::move(d_in);
  }
  return value;
}

double model_loss(const KanModel& model, const Eigen::MatrixXd& X,
                  const Eigen::MatrixXd& Y, LossKind loss,
                  DomainPolicy policy) {
  return model_loss_and_grads(model, X, Y, loss, policy, nullptr);
}

void init_model_params(KanModel& model, uint64_t seed) {
  for (size_t l = 0; l < model.layers.size(); ++l) {
    KanLayer& layer = model.layers[l];
    auto rng = make_rng(derive_seed(seed, 0x1217, l));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double base_scale = 1.0 / std::sqrt(static_cast<double>(layer.in_dim));
    const double coeff_scale = 0.1 * base_scale;
    for (Eigen::Index o = 0; o < layer.base_weights.rows(); ++o)
      for (Eigen::Index j = 0; j < layer.base_weights.cols(); ++j)
        layer.base_weights(o, j) = base_scale * gauss(rng);
    for (Eigen::Index o = 0; o < layer.spline_coeffs.rows(); ++o)
      for (Eigen::Index c = 0; c < layer.spline_coeffs.cols(); ++c)
        layer.spline_coeffs(o, c) = coeff_scale * gauss(rng);
  }
}

TrainResult train_model(const KanModel& init, const Dataset& train_data,
                        const Dataset& val_data, const TrainConfig& cfg) {
  cfg.validate();
  init.validate();
  if (train_data.rows() == 0) throw ConfigError("training dataset is empty");

  TrainResult result;
  result.model = init;
  KanModel& model = result.model;
  KanModel last_good = model;

  std::vector<Eigen::MatrixXd> vel_base, vel_coeffs;
  for (const auto& layer : model.layers) {
    vel_base.emplace_back(Eigen::MatrixXd::Zero(layer.out_dim, layer.in_dim));
    vel_coeffs.emplace_back(
        Eigen::MatrixXd::Zero(layer.out_dim, layer.coeff_cols()));
  }

  const Eigen::Index n = train_data.rows();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  const Eigen::Index bs = std::min<Eigen::Index>(cfg.batch_size, n);

  ModelGrads grads;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto rng = make_rng(derive_seed(cfg.seed, 0x7A19, epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_loss = 0.0;
    for (Eigen::Index start = 0; start < n; start += bs) {
      const Eigen::Index count = std::min(bs, n - start);
      Eigen::MatrixXd bx(count, train_data.feature_dim());
      Eigen::MatrixXd by(count, train_data.target_dim());
      for (Eigen::Index i = 0; i < count; ++i) {
        bx.row(i) = train_data.features.row(order[start + i]);
        by.row(i) = train_data.targets.row(order[start + i]);
      }
      const double batch_loss =
          model_loss_and_grads(model, bx, by, cfg.loss, cfg.policy, &grads);
      epoch_loss += batch_loss * count;
      for (size_t l = 0; l < model.layers.size(); ++l) {
        vel_base[l] = cfg.momentum * vel_base[l] -
                      cfg.learning_rate * grads.d_base[l];
        vel_coeffs[l] = cfg.momentum * vel_coeffs[l] -
                        cfg.learning_rate * grads.d_coeffs[l];
        model.layers[l].base_weights += vel_base[l];
        model.layers[l].spline_coeffs += vel_coeffs[l];
      }
    }
    epoch_loss /= n;

    double val_loss = epoch_loss;
    bool finite = std::isfinite(epoch_loss);
    if (finite) {
      for (const auto& layer : model.layers)
        finite = finite && layer.base_weights.allFinite() &&
                 layer.spline_coeffs.allFinite();
    }
    if (finite && val_data.rows() > 0) {
      val_loss = model_loss(model, val_data.features, val_data.targets,
                            cfg.loss, cfg.policy);
      finite = std::isfinite(val_loss);
    }
    if (!finite)
      throw DivergenceError(
          "training diverged at epoch " + std::to_string(epoch),
          std::move(last_good), std::move(result.history));

    result.history.push_back({epoch, epoch_loss, val_loss});
    last_good = model;
  }
  return result;
}

}  // namespace kancim
