#include "kancim/tune.hpp"

#include <cstdio>
#include <string>
#include <vector>

#include "doctest.h"
#include "kancim/checkpoint.hpp"
#include "kancim/errors.hpp"
#include "kancim/rng.hpp"

using namespace kancim;

namespace {

EncoderConfig tune_encoder() {
  return EncoderConfig::make(EncodeScheme::Tmdv, 4,
                             TransferFn::linear(0.3, 1e-4), 1.0);
}

KanModel chain_model(const std::vector<int>& dims, int grid, int order,
                     uint64_t seed) {
  KanModel m;
  for (size_t l = 0; l + 1 < dims.size(); ++l)
    m.layers.push_back(KanLayer::make(
        dims[l], dims[l + 1], BSplineSpec::make(order, grid, 0.0, 1.0)));
  init_model_params(m, seed);
  return m;
}

double area_at_grid(const KanModel& proto, int grid, const TuneConfig& cfg,
                    const TechParams& tech, const CrossbarConfig& cb,
                    const EncoderConfig& enc) {
  KanModel m;
  for (const auto& layer : proto.layers)
    m.layers.push_back(KanLayer::make(
        layer.in_dim, layer.out_dim,
        BSplineSpec::make(layer.spec.order, grid, layer.spec.domain_lo,
                          layer.spec.domain_hi)));
  return estimate(m, cfg.quant, cb, enc, tech, cfg.wl_activity).area;
}

std::string trace_text(const std::vector<TuneRecord>& trace) {
  std::string out;
  for (const auto& rec : trace) {
    out += to_json_line(rec);
    out += '\n';
  }
  return out;
}

}  // namespace

TEST_CASE("descending scores split into the three tiers") {
  SensitivityProfile p;
  p.scores = Eigen::Vector3d(3.0, 2.0, 1.0);
  GridTemplates t{20, 10, 5};
  auto grids = assign_grids(p, t);
  CHECK(grids == std::vector<int>{20, 10, 5});
  CHECK(p.classes == std::vector<SensitivityClass>{SensitivityClass::High,
                                                   SensitivityClass::Medium,
                                                   SensitivityClass::Low});
  CHECK(p.tau_high == 3.0);
  CHECK(p.tau_low == 2.0);

  SUBCASE("positive rescaling leaves the assignment unchanged") {
    for (double scale : {1e-9, 0.5, 3.0, 1e9}) {
      SensitivityProfile q;
      q.scores = p.scores * scale;
      auto scaled = assign_grids(q, t);
      CHECK(scaled == grids);
      CHECK(q.classes == p.classes);
    }
  }
}

TEST_CASE("equal scores all land in the top tier") {
  SensitivityProfile p;
  p.scores = Eigen::VectorXd::Constant(4, 7.5);
  auto grids = assign_grids(p, GridTemplates{20, 10, 5});
  CHECK(grids == std::vector<int>(4, 20));
  for (auto c : p.classes) CHECK(c == SensitivityClass::High);
}

TEST_CASE("a single layer is top-tier") {
  SensitivityProfile p;
  p.scores = Eigen::VectorXd::Constant(1, 0.001);
  auto grids = assign_grids(p, GridTemplates{20, 10, 5});
  CHECK(grids == std::vector<int>{20});
  CHECK(p.classes[0] == SensitivityClass::High);
}

TEST_CASE("six distinct scores give a 2-2-2 split") {
  SensitivityProfile p;
  p.scores = Eigen::VectorXd(6);
  p.scores << 6, 5, 4, 3, 2, 1;
  auto grids = assign_grids(p, GridTemplates{20, 10, 5});
  CHECK(grids == std::vector<int>{20, 20, 10, 10, 5, 5});
}

TEST_CASE("assignment input validation") {
  SensitivityProfile p;
  CHECK_THROWS_AS(assign_grids(p, GridTemplates{20, 10, 5}), ConfigError);
  p.scores = Eigen::Vector2d(1.0, -0.5);
  CHECK_THROWS_AS(assign_grids(p, GridTemplates{20, 10, 5}), ConfigError);
  p.scores = Eigen::Vector2d(1.0, 0.5);
  CHECK_THROWS_AS(assign_grids(p, GridTemplates{10, 10, 5}), ConfigError);
  CHECK_THROWS_AS(assign_grids(p, GridTemplates{10, 5, 0}), ConfigError);
}

TEST_CASE("sensitivity matches a finite-difference recomputation") {
  KanModel model = chain_model({2, 3, 2, 1}, 3, 2, 9);
  Dataset val = make_synthetic(SyntheticTask::GaussianNd, 6, 2, 1, 0.0, 21,
                               0.0, 1.0);

  // Move off the init point so gradients are not degenerate.
  Dataset train = make_synthetic(SyntheticTask::GaussianNd, 64, 2, 1, 0.0, 22,
                                 0.0, 1.0);
  TrainConfig tc;
  tc.epochs = 5;
  tc.seed = 4;
  model = train_model(model, train, val, tc).model;

  SensitivityProfile prof =
      profile_sensitivity(model, val, LossKind::Mse, DomainPolicy::Clamp);

  const double h = 1e-5;
  for (size_t l = 0; l < model.layers.size(); ++l) {
    double fd_score = 0.0;
    for (Eigen::Index s = 0; s < val.rows(); ++s) {
      const Eigen::MatrixXd X = val.features.row(s);
      const Eigen::MatrixXd Y = val.targets.row(s);
      double sum_sq = 0.0;
      auto& coeffs = model.layers[l].spline_coeffs;
      for (Eigen::Index o = 0; o < coeffs.rows(); ++o)
        for (Eigen::Index c = 0; c < coeffs.cols(); ++c) {
          const double keep = coeffs(o, c);
          coeffs(o, c) = keep + h;
          const double up = model_loss(model, X, Y, LossKind::Mse);
          coeffs(o, c) = keep - h;
          const double dn = model_loss(model, X, Y, LossKind::Mse);
          coeffs(o, c) = keep;
          const double g = (up - dn) / (2.0 * h);
          sum_sq += g * g;
        }
      fd_score += sum_sq / static_cast<double>(coeffs.size());
    }
    fd_score /= static_cast<double>(val.rows());
    REQUIRE(prof.scores[l] > 0.0);
    CHECK(std::abs(prof.scores[l] - fd_score) / fd_score < 1e-3);
  }
}

TEST_CASE("a layer cut off from the loss scores zero") {
  KanModel model = chain_model({1, 2, 1}, 4, 3, 5);
  model.layers[1].base_weights.setZero();
  model.layers[1].spline_coeffs.setZero();
  Dataset val = make_synthetic(SyntheticTask::Smooth1d, 16, 1, 1, 0.0, 31,
                               0.0, 1.0);
  SensitivityProfile prof =
      profile_sensitivity(model, val, LossKind::Mse, DomainPolicy::Clamp);
  CHECK(prof.scores[0] == 0.0);
  CHECK(prof.scores[1] > 0.0);
}

TEST_CASE("channel-mirrored twins score identically") {
  // Two parallel branches realized as swapped channel blocks: permuting
  // both layers and the data the same way must not change any layer's
  // score.
  KanModel m = chain_model({2, 2, 2}, 4, 3, 17);
  KanModel swapped = m;
  const int basis = m.layers[0].basis_count();
  for (auto& layer : swapped.layers) {
    layer.base_weights = Eigen::MatrixXd(layer.base_weights.colwise().reverse()
                                             .rowwise().reverse());
    Eigen::MatrixXd c = layer.spline_coeffs;
    for (int o = 0; o < 2; ++o)
      for (int i = 0; i < 2; ++i)
        c.block(o, i * basis, 1, basis) =
            layer.spline_coeffs.block(1 - o, (1 - i) * basis, 1, basis);
    layer.spline_coeffs = c;
  }

  Dataset ds = make_synthetic(SyntheticTask::GaussianNd, 24, 2, 2, 0.0, 33,
                              0.0, 1.0);
  Dataset mirrored = ds;
  mirrored.features.col(0).swap(mirrored.features.col(1));
  mirrored.targets.col(0).swap(mirrored.targets.col(1));

  auto a = profile_sensitivity(m, ds, LossKind::Mse, DomainPolicy::Clamp);
  auto b =
      profile_sensitivity(swapped, mirrored, LossKind::Mse, DomainPolicy::Clamp);
  for (int l = 0; l < 2; ++l)
    CHECK(a.scores[l] == doctest::Approx(b.scores[l]).epsilon(1e-10));
}

TEST_CASE("trace records serialize with stable key order") {
  TuneRecord rec;
  rec.window = 3;
  rec.epoch_end = 25;
  rec.val_start = 0.5;
  rec.val_end = 0.25;
  rec.grids = {5, 10};
  rec.cost.area = 1.0;
  rec.cost.energy = 2.0;
  rec.cost.latency = 4.0;
  rec.cost.power = 0.5;
  rec.decision = "extend";
  CHECK(to_json_line(rec) ==
        "{\"cost\":{\"area\":1.0,\"energy\":2.0,\"latency\":4.0,"
        "\"power\":0.5},\"decision\":\"extend\",\"epoch_end\":25,"
        "\"grids\":[5,10],\"val_end\":0.25,\"val_start\":0.5,\"window\":3}");
}

namespace {

struct LoopFixture {
  Dataset train = make_synthetic(SyntheticTask::Smooth1d, 192, 1, 1, 0.0, 51,
                                 0.0, 1.0);
  Dataset val = make_synthetic(SyntheticTask::Smooth1d, 96, 1, 1, 0.0, 52,
                               0.0, 1.0);
  KanModel model = chain_model({1, 1}, 5, 3, 7);
  TechParams tech = TechParams::illustrative();
  CrossbarConfig cb;
  EncoderConfig enc = tune_encoder();

  TuneConfig base_cfg() const {
    TuneConfig cfg;
    cfg.train.learning_rate = 0.05;
    cfg.train.seed = 40;
    cfg.warmup_epochs = 10;
    cfg.window_epochs = 5;
    cfg.increment = 5;
    cfg.max_grid = 20;
    cfg.min_rel_improvement = 1e-6;
    return cfg;
  }

  TuneResult run(const TuneConfig& cfg) {
    return tune(model, train, val, cfg, tech, cb, enc);
  }
};

}  // namespace

TEST_CASE_FIXTURE(LoopFixture, "generous budget extends to the cap") {
  TuneConfig cfg = base_cfg();
  TuneResult res = run(cfg);

  REQUIRE(res.trace.size() == 4);
  CHECK(res.trace[0].decision == "extend");
  CHECK(res.trace[0].grids == std::vector<int>{10});
  CHECK(res.trace[1].decision == "extend");
  CHECK(res.trace[1].grids == std::vector<int>{15});
  CHECK(res.trace[2].decision == "extend");
  CHECK(res.trace[2].grids == std::vector<int>{20});
  CHECK(res.trace[3].decision == "cap");
  CHECK(res.trace[3].grids == std::vector<int>{20});
  CHECK(res.grids() == std::vector<int>{20});
  CHECK(res.finished);
  CHECK_FALSE(res.infeasible);

  // Grid vector never decreases along this trace.
  for (size_t i = 1; i < res.trace.size(); ++i)
    CHECK(res.trace[i].grids[0] >= res.trace[i - 1].grids[0]);

  SUBCASE("same seed, byte-identical trace") {
    TuneResult again = run(cfg);
    CHECK(trace_text(res.trace) == trace_text(again.trace));
  }
}

// Budget scenarios run the conventional scheme: per-interval tables make
// area strictly increasing in grid, so thresholds between two grid sizes
// separate them cleanly. (Aligned-mode area is not monotone; the shared
// table shrinks whenever a larger grid re-solves to a narrower gap.)
TEST_CASE_FIXTURE(LoopFixture, "budget below the next extension blocks it") {
  TuneConfig cfg = base_cfg();
  cfg.quant.mode = QuantMode::Conventional;
  cfg.budget.area = 0.5 * (area_at_grid(model, 5, cfg, tech, cb, enc) +
                           area_at_grid(model, 10, cfg, tech, cb, enc));
  TuneResult res = run(cfg);

  REQUIRE(res.trace.size() == 1);
  CHECK(res.trace[0].decision == "budget");
  CHECK(res.grids() == std::vector<int>{5});
  for (const auto& rec : res.trace) CHECK(rec.cost.area <= *cfg.budget.area);
  CHECK(check_constraints(res.final_cost, cfg.budget).pass);
}

TEST_CASE_FIXTURE(LoopFixture, "oversized start shrinks into the budget") {
  TuneConfig cfg = base_cfg();
  cfg.quant.mode = QuantMode::Conventional;
  KanModel big = chain_model({1, 1}, 8, 3, 7);
  cfg.budget.area = 0.5 * (area_at_grid(model, 6, cfg, tech, cb, enc) +
                           area_at_grid(model, 7, cfg, tech, cb, enc));
  TuneResult res = tune(big, train, val, cfg, tech, cb, enc);

  REQUIRE(!res.trace.empty());
  CHECK(res.trace[0].decision == "shrink");
  CHECK(res.trace[0].grids == std::vector<int>{6});
  CHECK(res.trace[0].epoch_end == 0);
  CHECK_FALSE(res.infeasible);
  CHECK(check_constraints(res.final_cost, cfg.budget).pass);
  for (const auto& rec : res.trace) CHECK(rec.cost.area <= *cfg.budget.area);
}

TEST_CASE_FIXTURE(LoopFixture, "impossible budget reports infeasibility") {
  TuneConfig cfg = base_cfg();
  cfg.quant.mode = QuantMode::Conventional;
  cfg.budget.area = 0.5 * area_at_grid(model, 1, cfg, tech, cb, enc);
  TuneResult res = run(cfg);

  CHECK(res.infeasible);
  CHECK(res.finished);
  REQUIRE(res.trace.size() == 1);
  CHECK(res.trace[0].decision == "infeasible");
  CHECK(res.trace[0].grids == std::vector<int>{1});
  CHECK(res.trace[0].cost.area > *cfg.budget.area);
  CHECK(res.grids() == std::vector<int>{1});
}

TEST_CASE("plateau rolls back the one unvalidated extension") {
  // Noise-dominated targets: the loss floor is the noise variance, so
  // early windows improve and later ones cannot. The short warmup leaves
  // window 1 enough slope to clear the gate once before the floor bites.
  Dataset train = make_synthetic(SyntheticTask::Smooth1d, 192, 1, 1, 0.3, 61,
                                 0.0, 1.0);
  Dataset val = make_synthetic(SyntheticTask::Smooth1d, 96, 1, 1, 0.3, 62,
                               0.0, 1.0);
  KanModel model = chain_model({1, 1}, 5, 3, 7);

  TuneConfig cfg;
  cfg.train.learning_rate = 0.05;
  cfg.train.seed = 40;
  cfg.warmup_epochs = 4;
  cfg.window_epochs = 5;
  cfg.increment = 5;
  cfg.max_grid = 40;
  cfg.min_rel_improvement = 0.02;

  TuneResult res = tune(model, train, val, cfg, TechParams::illustrative(),
                        CrossbarConfig{}, tune_encoder());

  REQUIRE(!res.trace.empty());
  int rollbacks = 0;
  for (const auto& rec : res.trace) rollbacks += rec.decision == "rollback";
  CHECK(rollbacks == 1);
  CHECK(res.trace.back().decision == "rollback");
  // The rollback undoes exactly the last extension.
  const auto& last = res.trace.back();
  if (res.trace.size() >= 2) {
    const auto& prev = res.trace[res.trace.size() - 2];
    CHECK(prev.decision == "extend");
    CHECK(last.grids[0] == prev.grids[0] - cfg.increment);
  }
  CHECK(res.grids() == last.grids);
  // Grids never decrease until the terminal rollback.
  for (size_t i = 1; i + 1 < res.trace.size(); ++i)
    CHECK(res.trace[i].grids[0] >= res.trace[i - 1].grids[0]);
}

TEST_CASE_FIXTURE(LoopFixture, "resume reproduces the uninterrupted trace") {
  TuneConfig cfg = base_cfg();
  TuneResult full = run(cfg);

  TuneConfig partial_cfg = cfg;
  partial_cfg.max_windows = 2;
  TuneState state;
  state.model = model;
  TuneResult part1 =
      tune_resume(state, train, val, partial_cfg, tech, cb, enc);
  CHECK_FALSE(part1.finished);
  CHECK(state.has_rollback);

  const char* path = "tune_state_roundtrip.txt";
  save_tune_state(state, path);
  TuneState restored = load_tune_state(path);
  std::remove(path);
  CHECK(restored.window == state.window);
  CHECK(restored.epochs_done == state.epochs_done);

  TuneResult part2 = tune_resume(restored, train, val, cfg, tech, cb, enc);
  CHECK(part2.finished);
  CHECK(trace_text(part1.trace) + trace_text(part2.trace) ==
        trace_text(full.trace));
}

TEST_CASE("sensitivity templates assign per-layer grids and modes") {
  Dataset train = make_synthetic(SyntheticTask::GaussianNd, 128, 1, 1, 0.0, 71,
                                 0.0, 1.0);
  Dataset val = make_synthetic(SyntheticTask::GaussianNd, 64, 1, 1, 0.0, 72,
                               0.0, 1.0);
  KanModel model = chain_model({1, 2, 2, 1}, 5, 3, 13);

  TuneConfig cfg;
  cfg.train.seed = 19;
  cfg.warmup_epochs = 8;
  cfg.window_epochs = 2;
  cfg.increment = 1;
  cfg.max_grid = 30;
  cfg.min_rel_improvement = 10.0;  // force an immediate terminal window
  cfg.templates = GridTemplates{12, 8, 6};

  TuneResult res = tune(model, train, val, cfg, TechParams::illustrative(),
                        CrossbarConfig{}, tune_encoder());

  REQUIRE(res.classes.size() == 3);
  REQUIRE(res.trace.size() >= 2);
  CHECK(res.trace[0].decision == "assign");
  CHECK(res.trace.back().decision == "plateau");

  const auto grids = res.grids();
  int high_count = 0;
  for (size_t l = 0; l < 3; ++l) {
    switch (res.classes[l]) {
      case SensitivityClass::High:
        CHECK(grids[l] == 12);
        CHECK(res.layer_modes[l] == EncoderMode::Accuracy);
        ++high_count;
        break;
      case SensitivityClass::Medium:
        CHECK(grids[l] == 8);
        CHECK(res.layer_modes[l] == EncoderMode::Performance);
        break;
      case SensitivityClass::Low:
        CHECK(grids[l] == 6);
        CHECK(res.layer_modes[l] == EncoderMode::Performance);
        break;
    }
  }
  CHECK(high_count >= 1);
}

TEST_CASE("tune config validation") {
  TuneConfig cfg;
  cfg.window_epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TuneConfig{};
  cfg.increment = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TuneConfig{};
  cfg.budget.energy = -3.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TuneConfig{};
  CHECK_NOTHROW(cfg.validate());
}
