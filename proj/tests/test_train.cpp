#include "kancim/train.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "kancim/dataset.hpp"
#include "kancim/errors.hpp"
#include "kancim/rng.hpp"

using namespace kancim;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

KanModel small_model(Activation act, uint64_t seed) {
  auto spec = BSplineSpec::make(3, 5, -2.0, 2.0);
  KanModel model;
  model.layers.push_back(KanLayer::make(2, 3, spec, act));
  model.layers.push_back(KanLayer::make(3, 2, spec, act));
  init_model_params(model, seed);
  return model;
}

}  // namespace

TEST_CASE("csv round trip preserves doubles exactly") {
  Dataset ds;
  ds.features.resize(3, 2);
  ds.targets.resize(3, 1);
  ds.features << 0.1, -1.7e-12, M_PI, 2.0 / 3.0, 1e300, -0.125;
  ds.targets << 1.0, -2.5, 0.3333333333333333;
  const std::string path = temp_path("kancim_ds_rt.csv");
  save_dataset_csv(path, ds);
  Dataset back = load_dataset_csv(path);
  REQUIRE(back.rows() == 3);
  REQUIRE(back.feature_dim() == 2);
  REQUIRE(back.target_dim() == 1);
  CHECK(back.features == ds.features);
  CHECK(back.targets == ds.targets);
  std::filesystem::remove(path);
}

TEST_CASE("csv loader reports location on bad input") {
  const std::string path = temp_path("kancim_ds_bad.csv");
  {
    std::ofstream out(path);
    out << "f0,t0\n1.0,2.0\nnope,3.0\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset_csv(path),
                       doctest::Contains(":3:"), ConfigError);
  {
    std::ofstream out(path);
    out << "x,y\n1,2\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset_csv(path),
                       doctest::Contains(":1:"), ConfigError);
  {
    std::ofstream out(path);
    out << "f0,t0\n1.0\n";
  }
  CHECK_THROWS_AS(load_dataset_csv(path), ConfigError);
  std::filesystem::remove(path);
}

TEST_CASE("split is seeded, disjoint, and exhaustive") {
  Dataset ds = make_synthetic(SyntheticTask::Smooth1d, 100, 2, 1, 0.0, 5,
                              -1.0, 1.0);
  SplitDataset a = split_dataset(ds, 0.25, 42);
  SplitDataset b = split_dataset(ds, 0.25, 42);
  CHECK(a.val.rows() == 25);
  CHECK(a.train.rows() == 75);
  CHECK(a.val.features == b.val.features);
  CHECK(a.train.features == b.train.features);

  // Every original row appears exactly once across the two parts.
  std::vector<double> keys;
  for (Eigen::Index r = 0; r < a.train.rows(); ++r)
    keys.push_back(a.train.features(r, 0));
  for (Eigen::Index r = 0; r < a.val.rows(); ++r)
    keys.push_back(a.val.features(r, 0));
  std::sort(keys.begin(), keys.end());
  std::vector<double> orig(ds.features.col(0).data(),
                           ds.features.col(0).data() + ds.rows());
  std::sort(orig.begin(), orig.end());
  CHECK(keys == orig);

  SplitDataset c = split_dataset(ds, 0.25, 43);
  CHECK(c.val.features != a.val.features);
}

TEST_CASE("synthetic generators are deterministic and in-domain") {
  Dataset a = make_synthetic(SyntheticTask::GaussianNd, 200, 3, 2, 0.05, 9,
                             -1.5, 1.5);
  Dataset b = make_synthetic(SyntheticTask::GaussianNd, 200, 3, 2, 0.05, 9,
                             -1.5, 1.5);
  CHECK(a.features == b.features);
  CHECK(a.targets == b.targets);
  CHECK(a.features.minCoeff() >= -1.5);
  CHECK(a.features.maxCoeff() <= 1.5);
  CHECK(a.features.allFinite());
  CHECK(a.targets.allFinite());
}

TEST_CASE("analytic gradients match central finite differences") {
  KanModel model = small_model(Activation::Silu, 3);
  Dataset ds = make_synthetic(SyntheticTask::Smooth1d, 6, 2, 2, 0.0, 7,
                              -1.5, 1.5);
  ModelGrads grads;
  model_loss_and_grads(model, ds.features, ds.targets, LossKind::Mse,
                       DomainPolicy::Clamp, &grads);

  const double h = 1e-5;
  auto rng = make_rng(17);
  for (size_t l = 0; l < model.layers.size(); ++l) {
    auto& coeffs = model.layers[l].spline_coeffs;
    for (int rep = 0; rep < 10; ++rep) {
      const Eigen::Index o = rng() % coeffs.rows();
      const Eigen::Index c = rng() % coeffs.cols();
      const double keep = coeffs(o, c);
      coeffs(o, c) = keep + h;
      const double up = model_loss(model, ds.features, ds.targets, LossKind::Mse);
      coeffs(o, c) = keep - h;
      const double dn = model_loss(model, ds.features, ds.targets, LossKind::Mse);
      coeffs(o, c) = keep;
      const double fd = (up - dn) / (2 * h);
      const double an = grads.d_coeffs[l](o, c);
      CHECK(std::abs(fd - an) <=
            1e-4 * std::max({std::abs(fd), std::abs(an), 1e-8}));
    }
    auto& base = model.layers[l].base_weights;
    for (int rep = 0; rep < 5; ++rep) {
      const Eigen::Index o = rng() % base.rows();
      const Eigen::Index j = rng() % base.cols();
      const double keep = base(o, j);
      base(o, j) = keep + h;
      const double up = model_loss(model, ds.features, ds.targets, LossKind::Mse);
      base(o, j) = keep - h;
      const double dn = model_loss(model, ds.features, ds.targets, LossKind::Mse);
      base(o, j) = keep;
      const double fd = (up - dn) / (2 * h);
      const double an = grads.d_base[l](o, j);
      CHECK(std::abs(fd - an) <=
            1e-4 * std::max({std::abs(fd), std::abs(an), 1e-8}));
    }
  }
}

TEST_CASE("cross entropy gradients match finite differences on final layer") {
  KanModel model = small_model(Activation::Relu, 5);
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(8, 2);
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(8, 2);
  for (int r = 0; r < 8; ++r) Y(r, r % 2) = 1.0;

  ModelGrads grads;
  const double base = model_loss_and_grads(model, X, Y, LossKind::CrossEntropy,
                                           DomainPolicy::Clamp, &grads);
  CHECK(base > 0.0);
  auto& coeffs = model.layers[1].spline_coeffs;
  const double h = 1e-5;
  auto rng = make_rng(23);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::Index o = rng() % coeffs.rows();
    const Eigen::Index c = rng() % coeffs.cols();
    const double keep = coeffs(o, c);
    coeffs(o, c) = keep + h;
    const double up = model_loss(model, X, Y, LossKind::CrossEntropy);
    coeffs(o, c) = keep - h;
    const double dn = model_loss(model, X, Y, LossKind::CrossEntropy);
    coeffs(o, c) = keep;
    const double fd = (up - dn) / (2 * h);
    const double an = grads.d_coeffs[1](o, c);
    CHECK(std::abs(fd - an) <=
          1e-4 * std::max({std::abs(fd), std::abs(an), 1e-8}));
  }
}

TEST_CASE("training fits a target inside the hypothesis class") {
  auto spec = BSplineSpec::make(3, 5, 0.0, 1.0);
  const int n = 512;
  Dataset ds;
  ds.features.resize(n, 1);
  ds.targets.resize(n, 1);
  auto rng = make_rng(31);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int r = 0; r < n; ++r) {
    const double x = uni(rng);
    ds.features(r, 0) = x;
    ds.targets(r, 0) = basis_eval(spec, x)[2];
  }
  SplitDataset split = split_dataset(ds, 0.2, 7);

  KanModel model;
  model.layers.push_back(KanLayer::make(1, 1, spec));
  init_model_params(model, 11);
  TrainConfig cfg;
  cfg.epochs = 400;
  cfg.batch_size = 64;
  cfg.learning_rate = 0.3;
  cfg.momentum = 0.9;
  cfg.seed = 13;
  TrainResult res = train_model(model, split.train, split.val, cfg);
  REQUIRE(res.history.size() == 400);
  CHECK(res.history.back().val_loss < 1e-4);
}

TEST_CASE("constant target converges to the noise floor") {
  const int n = 400;
  Dataset ds;
  ds.features.resize(n, 1);
  ds.targets.resize(n, 1);
  auto rng = make_rng(37);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 0.1);
  for (int r = 0; r < n; ++r) {
    ds.features(r, 0) = uni(rng);
    ds.targets(r, 0) = 0.7 + gauss(rng);
  }
  const double mean = ds.targets.col(0).mean();
  const double noise_var =
      (ds.targets.col(0).array() - mean).square().sum() / n;

  KanModel model;
  model.layers.push_back(KanLayer::make(1, 1, BSplineSpec::make(3, 5, -1, 1)));
  init_model_params(model, 41);
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.batch_size = 64;
  cfg.learning_rate = 0.2;
  cfg.seed = 43;
  TrainResult res = train_model(model, ds, Dataset{}, cfg);
  const double final_loss = res.history.back().train_loss;
  CHECK(final_loss < 1.4 * noise_var);
  CHECK(final_loss > 0.6 * noise_var);
}

TEST_CASE("divergence raises with the last good model attached") {
  Dataset ds = make_synthetic(SyntheticTask::Smooth1d, 64, 1, 1, 0.0, 3,
                              -1.0, 1.0);
  KanModel model;
  model.layers.push_back(KanLayer::make(1, 1, BSplineSpec::make(3, 5, -1, 1)));
  init_model_params(model, 2);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.learning_rate = 1e9;
  cfg.seed = 3;
  try {
    train_model(model, ds, Dataset{}, cfg);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.last_good_model.layers.size() == 1);
    e.last_good_model.validate();
    CHECK(static_cast<int>(e.history.size()) < 50);
  }
}

TEST_CASE("training is bit-deterministic per seed") {
  Dataset ds = make_synthetic(SyntheticTask::Smooth1d, 128, 2, 1, 0.02, 19,
                              -1.0, 1.0);
  SplitDataset split = split_dataset(ds, 0.25, 19);
  auto run = [&] {
    KanModel model;
    auto spec = BSplineSpec::make(3, 5, -1.0, 1.0);
    model.layers.push_back(KanLayer::make(2, 3, spec));
    model.layers.push_back(KanLayer::make(3, 1, spec));
    init_model_params(model, 23);
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.seed = 29;
    return train_model(model, split.train, split.val, cfg);
  };
  TrainResult a = run();
  TrainResult b = run();
  REQUIRE(a.history.size() == b.history.size());
  for (size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_loss == b.history[i].train_loss);
    CHECK(a.history[i].val_loss == b.history[i].val_loss);
  }
  for (size_t l = 0; l < a.model.layers.size(); ++l) {
    CHECK(a.model.layers[l].spline_coeffs == b.model.layers[l].spline_coeffs);
    CHECK(a.model.layers[l].base_weights == b.model.layers[l].base_weights);
  }
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.momentum = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
