#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "kancim/checkpoint.hpp"
#include "kancim/config.hpp"
#include "kancim/cost.hpp"
#include "kancim/errors.hpp"
#include "kancim/mapping.hpp"
#include "kancim/report.hpp"
#include "kancim/resources.hpp"
#include "kancim/rng.hpp"
#include "kancim/sh_lut.hpp"
#include "kancim/train.hpp"
#include "kancim/tune.hpp"

namespace fs = std::filesystem;
using namespace kancim;

namespace {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel g_log_level = LogLevel::Info;

void log_at(LogLevel level, const std::string& msg) {
  static const char* names[] = {"error", "warn", "info", "debug"};
  if (level <= g_log_level)
    std::cerr << '[' << names[static_cast<int>(level)] << "] " << msg << '\n';
}

LogLevel parse_log_level(const std::string& name) {
  if (name == "error") return LogLevel::Error;
  if (name == "warn") return LogLevel::Warn;
  if (name == "info") return LogLevel::Info;
  if (name == "debug") return LogLevel::Debug;
  throw ConfigError("log level must be error|warn|info|debug, got '" + name +
                    "'");
}

// Sub-stream tags so every command draws from independent streams of the
// one user-facing seed.
constexpr std::uint64_t kInitTag = 0x21;
constexpr std::uint64_t kTrainTag = 0x22;
constexpr std::uint64_t kDataTrainTag = 0x23;
constexpr std::uint64_t kDataValTag = 0x24;
constexpr std::uint64_t kSplitTag = 0x25;
constexpr std::uint64_t kEncoderTag = 0x26;
constexpr std::uint64_t kMapInputsTag = 0x27;
constexpr std::uint64_t kCrossbarTag = 0x28;

// Runs fn(0..n-1) on up to `threads` workers. Each index writes only its
// own output slot and draws only from seeds derived from it, so results
// do not depend on the thread count. The first worker exception is
// rethrown on the caller's thread.
template <typename Fn>
void parallel_for(int n, int threads, const Fn& fn) {
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

SplitDataset make_data(const ExperimentConfig& cfg) {
  const DatasetSpec& ds = cfg.dataset;
  if (ds.source == DatasetSpec::Source::Csv) {
    const Dataset all = load_dataset_csv(ds.path);
    SplitDataset split =
        split_dataset(all, ds.val_fraction, derive_seed(cfg.seed, kSplitTag));
    if (split.train.feature_dim() !=
            static_cast<Eigen::Index>(cfg.model.widths.front()) ||
        split.train.target_dim() !=
            static_cast<Eigen::Index>(cfg.model.widths.back()))
      throw ConfigError("dataset '" + ds.path + "' has " +
                        std::to_string(split.train.feature_dim()) + "x" +
                        std::to_string(split.train.target_dim()) +
                        " columns but the model wants " +
                        std::to_string(cfg.model.widths.front()) + "x" +
                        std::to_string(cfg.model.widths.back()));
    return split;
  }
  const int in_dim = cfg.model.widths.front();
  const int out_dim = cfg.model.widths.back();
  SplitDataset split;
  split.train = make_synthetic(ds.task, ds.train_rows, in_dim, out_dim,
                               ds.noise_sigma, derive_seed(cfg.seed, kDataTrainTag),
                               cfg.model.domain_lo, cfg.model.domain_hi);
  if (ds.val_rows > 0)
    split.val = make_synthetic(ds.task, ds.val_rows, in_dim, out_dim,
                               ds.noise_sigma, derive_seed(cfg.seed, kDataValTag),
                               cfg.model.domain_lo, cfg.model.domain_hi);
  return split;
}

std::string out_path(const ExperimentConfig& cfg, const char* name) {
  return (fs::path(cfg.output_dir) / name).string();
}

void add_metric_if_finite(RunReport& rep, const std::string& key, double v) {
  if (std::isfinite(v)) rep.metrics[key] = v;
}

int finish(const ExperimentConfig& cfg, RunReport rep, int code = 0) {
  const std::string path = out_path(cfg, "report.json");
  write_report(path, rep);
  log_at(LogLevel::Info, "wrote " + path);
  return code;
}

int cmd_train(const ExperimentConfig& cfg) {
  const SplitDataset data = make_data(cfg);
  const KanModel init = cfg.model.build(derive_seed(cfg.seed, kInitTag));
  TrainConfig tc = cfg.train.cfg;
  tc.seed = derive_seed(cfg.seed, kTrainTag);
  const TrainResult res = train_model(init, data.train, data.val, tc);

  const std::string ckpt = out_path(cfg, "model.txt");
  save_model(res.model, ckpt);

  CsvTable loss;
  loss.header = {"epoch", "train_loss", "val_loss"};
  for (const EpochStats& s : res.history)
    loss.rows.push_back({std::to_string(s.epoch), format_double(s.train_loss),
                         format_double(s.val_loss)});
  const std::string loss_csv = out_path(cfg, "loss.csv");
  write_csv(loss_csv, loss);

  RunReport rep;
  rep.command = "train";
  rep.seed = cfg.seed;
  rep.outputs["checkpoint"] = ckpt;
  rep.outputs["loss_csv"] = loss_csv;
  rep.metrics["epochs"] = static_cast<double>(res.history.size());
  const double final_train =
      res.history.empty() ? 0.0 : res.history.back().train_loss;
  const double final_val =
      res.history.empty() ? 0.0 : res.history.back().val_loss;
  rep.metrics["final_train_loss"] = final_train;
  rep.metrics["final_val_loss"] = final_val;
  if (cfg.train.target_loss >= 0) {
    rep.metrics["target_loss"] = cfg.train.target_loss;
    rep.metrics["target_met"] = final_val <= cfg.train.target_loss ? 1.0 : 0.0;
    if (final_val > cfg.train.target_loss)
      log_at(LogLevel::Warn,
             "final val loss " + format_double(final_val) +
                 " missed the target " + format_double(cfg.train.target_loss));
  }
  log_at(LogLevel::Info, "trained " + std::to_string(res.history.size()) +
                             " epochs, final val loss " +
                             format_double(final_val));
  return finish(cfg, std::move(rep));
}

int cmd_quantize(const ExperimentConfig& cfg) {
  if (cfg.checkpoint_path.empty())
    throw ConfigError(
        "quantize needs a checkpoint (config key 'checkpoint' or "
        "--checkpoint)");
  const KanModel model = load_model(cfg.checkpoint_path);
  const KanLayer& layer = model.layers.front();
  const int order = layer.spec.order;

  // The dump documents the shared hemi table, so a conventional-mode
  // config still exports the aligned layout it is being compared against.
  const QuantMode lut_mode = cfg.quant.mode == QuantMode::Conventional
                                 ? QuantMode::AlignedPow2
                                 : cfg.quant.mode;
  const QuantScheme lut_scheme = QuantScheme::make(
      lut_mode, layer.spec.grid, cfg.quant.input_bits, cfg.quant.coeff_bits);
  const ShLut lut = build_sh_lut(layer.spec, lut_scheme, cfg.quant.value_bits);
  const std::string lut_path = out_path(cfg, "lut.txt");
  save_sh_lut(lut_path, lut);

  CsvTable table;
  table.header = {"grid",
                  "mode",
                  "status",
                  "baseline_lut_entries",
                  "optimized_lut_entries",
                  "lut_ratio",
                  "baseline_switch_ways",
                  "optimized_switch_ways",
                  "baseline_decoder_lines",
                  "optimized_decoder_lines"};
  const bool conventional = cfg.quant.mode == QuantMode::Conventional;
  const char* mode_name = conventional ? "conventional"
                          : cfg.quant.mode == QuantMode::Aligned
                              ? "aligned"
                              : "aligned_pow2";
  double min_ratio = 0.0;
  bool have_ratio = false;
  for (int g : cfg.quant.grid_sweep) {
    try {
      const QuantScheme s =
          QuantScheme::make(conventional ? QuantMode::AlignedPow2 : cfg.quant.mode,
                            g, cfg.quant.input_bits, cfg.quant.coeff_bits);
      ResourcePair pair = count_resources(s, order);
      if (conventional) pair.optimized = pair.baseline;  // self-comparison
      const double ratio = pair.lut_reduction_ratio();
      min_ratio = have_ratio ? std::min(min_ratio, ratio) : ratio;
      have_ratio = true;
      table.rows.push_back(
          {std::to_string(g), mode_name, "ok",
           std::to_string(pair.baseline.lut_entries),
           std::to_string(pair.optimized.lut_entries), format_double(ratio),
           std::to_string(switch_ways_total(pair.baseline.switches)),
           std::to_string(switch_ways_total(pair.optimized.switches)),
           std::to_string(decoder_lines(pair.baseline.decoder_bits)),
           std::to_string(decoder_lines(pair.optimized.decoder_bits))});
    } catch (const InfeasibleError&) {
      table.rows.push_back({std::to_string(g), mode_name, "infeasible", "0",
                            "0", "0", "0", "0", "0", "0"});
    }
  }
  const std::string csv_path = out_path(cfg, "resources.csv");
  write_csv(csv_path, table);

  RunReport rep;
  rep.command = "quantize";
  rep.seed = cfg.seed;
  rep.outputs["lut"] = lut_path;
  rep.outputs["resources_csv"] = csv_path;
  rep.metrics["lut_stored_entries"] = lut.stored_entries();
  rep.metrics["lut_full_entries"] = lut.full_entries();
  if (have_ratio) rep.metrics["min_lut_ratio"] = min_ratio;
  log_at(LogLevel::Info, "swept " + std::to_string(cfg.quant.grid_sweep.size()) +
                             " grid sizes");
  return finish(cfg, std::move(rep));
}

int cmd_compare_encoders(const ExperimentConfig& cfg, int threads) {
  struct Combo {
    EncodeScheme scheme;
    const char* name;
    int half_bits;
  };
  std::vector<Combo> combos;
  const std::pair<EncodeScheme, const char*> schemes[] = {
      {EncodeScheme::PureVoltage, "voltage"},
      {EncodeScheme::PurePwm, "pwm"},
      {EncodeScheme::Tmdv, "tmdv"}};
  for (const auto& [scheme, name] : schemes)
    for (int n = 1; n <= 4; ++n) combos.push_back({scheme, name, n});

  const size_t sigmas = cfg.encoder.noise_grid.size();
  std::vector<EncoderStats> stats(combos.size() * sigmas);
  parallel_for(static_cast<int>(combos.size()), threads, [&](int i) {
    const Combo& c = combos[i];
    EncoderConfig enc =
        EncoderConfig::make(c.scheme, c.half_bits, cfg.encoder.transfer,
                            cfg.encoder.v_max, cfg.encoder.unit_pulse_s);
    // One stream per (scheme, N); the sigma sweep reuses its draws so
    // noise growth is monotone by construction.
    const std::uint64_t seed = derive_seed(
        cfg.seed, kEncoderTag, static_cast<std::uint64_t>(c.scheme),
        static_cast<std::uint64_t>(c.half_bits));
    for (size_t s = 0; s < sigmas; ++s)
      stats[i * sigmas + s] = measure_encoder(
          enc, cfg.encoder.noise_grid[s], cfg.encoder.trials_per_code, seed);
  });

  CsvTable table;
  table.header = {"scheme",        "half_bits",  "noise_sigma",
                  "max_abs_error", "mean_abs_error", "latency_units",
                  "dac_levels",    "delay_chain"};
  for (size_t i = 0; i < combos.size(); ++i)
    for (size_t s = 0; s < sigmas; ++s) {
      const EncoderStats& st = stats[i * sigmas + s];
      table.rows.push_back({combos[i].name, std::to_string(combos[i].half_bits),
                            format_double(cfg.encoder.noise_grid[s]),
                            format_double(st.max_abs_error),
                            format_double(st.mean_abs_error),
                            std::to_string(st.latency_units),
                            std::to_string(st.dac_levels),
                            std::to_string(st.delay_chain)});
    }
  const std::string csv_path = out_path(cfg, "encoders.csv");
  write_csv(csv_path, table);

  RunReport rep;
  rep.command = "compare-encoders";
  rep.seed = cfg.seed;
  rep.outputs["encoders_csv"] = csv_path;
  rep.metrics["rows"] = static_cast<double>(table.rows.size());
  double worst = 0.0;
  for (const EncoderStats& st : stats)
    worst = std::max(worst, st.max_abs_error);
  rep.metrics["max_abs_error"] = worst;
  log_at(LogLevel::Info, "measured " + std::to_string(table.rows.size()) +
                             " encoder settings");
  return finish(cfg, std::move(rep));
}

int cmd_map_and_simulate(const ExperimentConfig& cfg, int threads) {
  if (cfg.checkpoint_path.empty())
    throw ConfigError(
        "map-and-simulate needs a checkpoint (config key 'checkpoint' or "
        "--checkpoint)");
  const KanModel model = load_model(cfg.checkpoint_path);
  const MappingSpec& ms = cfg.mapping;
  if (ms.layer >= static_cast<int>(model.layers.size()))
    throw ConfigError("mapping: layer " + std::to_string(ms.layer) +
                      " out of range, checkpoint has " +
                      std::to_string(model.layers.size()));
  const KanLayer& layer = model.layers[ms.layer];
  if (ms.channel >= layer.in_dim)
    throw ConfigError("mapping: channel " + std::to_string(ms.channel) +
                      " out of range, layer has " +
                      std::to_string(layer.in_dim) + " inputs");

  const int pairs = static_cast<int>(ms.array_rows.size());
  std::vector<MappingComparison> results(pairs);
  parallel_for(pairs, threads, [&](int i) {
    const int rows = ms.array_rows[i];
    const int grid = ms.grids[i];
    if (grid < layer.spec.grid)
      throw ConfigError("mapping: sweep grid " + std::to_string(grid) +
                        " is below the checkpoint grid " +
                        std::to_string(layer.spec.grid));
    const KanLayer refined = grid_extend(layer, grid);
    if (refined.basis_count() > rows)
      throw ConfigError("mapping: " + std::to_string(refined.basis_count()) +
                        " basis rows exceed the " + std::to_string(rows) +
                        "-row array");
    const QuantizedCoeffs coeffs =
        quantize_coeffs(refined, cfg.quant.coeff_bits);

    auto draw_inputs = [&](int count, std::uint64_t stream) {
      auto rng = make_rng(derive_seed(cfg.seed, kMapInputsTag,
                                      static_cast<std::uint64_t>(i), stream));
      std::uniform_real_distribution<double> uni(layer.spec.domain_lo,
                                                 layer.spec.domain_hi);
      Eigen::VectorXd x(count);
      for (int r = 0; r < count; ++r) x[r] = uni(rng);
      return x;
    };
    const Eigen::VectorXd train_inputs = draw_inputs(ms.train_rows, 0);
    const Eigen::VectorXd eval_inputs = draw_inputs(ms.eval_rows, 1);

    MappingEvalConfig mec;
    mec.crossbar = cfg.crossbar;
    mec.crossbar.rows = rows;
    mec.crossbar.seed = derive_seed(cfg.seed, kCrossbarTag,
                                    static_cast<std::uint64_t>(rows),
                                    static_cast<std::uint64_t>(grid));
    mec.encoder = cfg.encoder.build();
    // Unset value_bits follows the finest resolution the configured
    // encoder's 2N-bit codes can carry.
    mec.value_bits = cfg.quant.value_bits < 0
                         ? std::min(cfg.quant.input_bits,
                                    2 * cfg.encoder.half_bits)
                         : cfg.quant.value_bits;
    mec.score = ms.score;
    results[i] = evaluate_mapping(refined, ms.channel, coeffs, train_inputs,
                                  eval_inputs, mec);
  });

  CsvTable table;
  table.header = {"array_rows",        "grid",
                  "plan",              "mean_decoded_error",
                  "mean_float_error",  "improvement_factor"};
  for (int i = 0; i < pairs; ++i) {
    const MappingComparison& mc = results[i];
    const std::pair<const char*, const PlanMetrics*> plan_rows[] = {
        {"sam", &mc.sam}, {"uniform", &mc.uniform}, {"reversed", &mc.reversed}};
    for (const auto& [plan, metrics] : plan_rows)
      table.rows.push_back({std::to_string(ms.array_rows[i]),
                            std::to_string(ms.grids[i]), plan,
                            format_double(metrics->mean_decoded_error),
                            format_double(metrics->mean_float_error),
                            format_double(mc.improvement_factor)});
  }
  const std::string csv_path = out_path(cfg, "mapping.csv");
  write_csv(csv_path, table);

  RunReport rep;
  rep.command = "map-and-simulate";
  rep.seed = cfg.seed;
  rep.outputs["mapping_csv"] = csv_path;
  double lo = results.front().improvement_factor;
  double hi = lo;
  for (const MappingComparison& mc : results) {
    lo = std::min(lo, mc.improvement_factor);
    hi = std::max(hi, mc.improvement_factor);
  }
  add_metric_if_finite(rep, "min_improvement", lo);
  add_metric_if_finite(rep, "max_improvement", hi);
  log_at(LogLevel::Info,
         "evaluated " + std::to_string(pairs) + " array/grid pairs");
  return finish(cfg, std::move(rep));
}

int cmd_tune(const ExperimentConfig& cfg, const std::string& resume_path) {
  const SplitDataset data = make_data(cfg);

  TuneConfig tc;
  tc.train = cfg.train.cfg;
  tc.train.seed = derive_seed(cfg.seed, kTrainTag);
  tc.warmup_epochs = cfg.tune.warmup_epochs;
  tc.window_epochs = cfg.tune.window_epochs;
  tc.increment = cfg.tune.increment;
  tc.max_grid = cfg.tune.max_grid;
  tc.budget = cfg.tune.budget;
  tc.min_rel_improvement = cfg.tune.min_rel_improvement;
  tc.max_windows = cfg.tune.max_windows;
  tc.templates = cfg.tune.templates;
  tc.high_mode = cfg.tune.high_mode;
  tc.other_mode = cfg.tune.other_mode;
  tc.quant = cfg.quant.scheme_at(cfg.model.grid);
  tc.wl_activity = cfg.tune.wl_activity;
  tc.validate();

  TuneState state;
  const bool resumed = !resume_path.empty();
  if (resumed) {
    state = load_tune_state(resume_path);
    log_at(LogLevel::Info, "resuming from " + resume_path + " at window " +
                               std::to_string(state.window));
  } else {
    state.model = cfg.model.build(derive_seed(cfg.seed, kInitTag));
  }
  const TuneResult res = tune_resume(state, data.train, data.val, tc,
                                     cfg.tech(), cfg.crossbar,
                                     cfg.encoder.build());

  // A resumed run appends, so the stitched trace file matches the one an
  // uninterrupted run would have written.
  const std::string trace_path = out_path(cfg, "trace.jsonl");
  {
    std::ofstream trace(trace_path, resumed ? std::ios::binary | std::ios::app
                                            : std::ios::binary);
    if (!trace) throw ConfigError("cannot open '" + trace_path + "'");
    for (const TuneRecord& rec : res.trace) trace << to_json_line(rec) << '\n';
  }
  const std::string state_path = out_path(cfg, "tune_state.txt");
  save_tune_state(state, state_path);
  const std::string ckpt = out_path(cfg, "model.txt");
  save_model(res.model, ckpt);

  RunReport rep;
  rep.command = "tune";
  rep.seed = cfg.seed;
  rep.outputs["trace"] = trace_path;
  rep.outputs["state"] = state_path;
  rep.outputs["checkpoint"] = ckpt;
  const std::vector<int> grids = res.grids();
  for (size_t l = 0; l < grids.size(); ++l)
    rep.metrics["grid_l" + std::to_string(l)] = grids[l];
  rep.metrics["windows_done"] = state.window - 1;
  rep.metrics["epochs_done"] = state.epochs_done;
  rep.metrics["finished"] = res.finished ? 1.0 : 0.0;
  rep.metrics["infeasible"] = res.infeasible ? 1.0 : 0.0;
  rep.metrics["area"] = res.final_cost.area;
  rep.metrics["energy"] = res.final_cost.energy;
  rep.metrics["latency"] = res.final_cost.latency;
  rep.metrics["power"] = res.final_cost.power;
  if (res.infeasible) {
    log_at(LogLevel::Error, "budget infeasible even at the minimum grid");
    return finish(cfg, std::move(rep), 3);
  }
  log_at(LogLevel::Info, "tuning " +
                             std::string(res.finished ? "finished" : "paused") +
                             " after " + std::to_string(res.trace.size()) +
                             " decisions");
  return finish(cfg, std::move(rep));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KAN-on-crossbar co-design toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed_flag = 0;
  bool seed_set = false;
  int threads = 1;
  std::string out_flag;
  std::string log_flag;
  std::string checkpoint_flag;
  std::string resume_path;
  int epochs_flag = 0;
  int max_windows_flag = -1;

  app.add_option("--config", config_path, "experiment config (JSON)");
  app.add_option("--seed", seed_flag, "override the config seed")
      ->each([&seed_set](const std::string&) { seed_set = true; });
  app.add_option("--threads", threads, "worker cap, results unchanged")
      ->check(CLI::Range(1, 256));
  app.add_option("--out", out_flag, "output directory override");
  app.add_option("--log-level", log_flag, "error|warn|info|debug");

  CLI::App* c_train = app.add_subcommand("train", "fit a model, emit checkpoint + loss CSV");
  c_train->add_option("--epochs", epochs_flag, "override train.epochs");
  CLI::App* c_quant = app.add_subcommand("quantize", "export the shared LUT + resource sweep CSV");
  c_quant->add_option("--checkpoint", checkpoint_flag, "model checkpoint to quantize");
  CLI::App* c_enc = app.add_subcommand("compare-encoders", "sweep input encoders over noise, emit CSV");
  CLI::App* c_map = app.add_subcommand("map-and-simulate", "row mapping vs baselines across array sizes");
  c_map->add_option("--checkpoint", checkpoint_flag, "model checkpoint to map");
  CLI::App* c_tune = app.add_subcommand("tune", "budget-gated grid tuning, emit trace + summary");
  c_tune->add_option("--resume", resume_path, "tune state file to continue from");
  c_tune->add_option("--max-windows", max_windows_flag, "override tune.max_windows");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }

  try {
    if (const char* env = std::getenv("KANCIM_LOG_LEVEL"))
      g_log_level = parse_log_level(env);
    if (!log_flag.empty()) g_log_level = parse_log_level(log_flag);

    if (config_path.empty()) throw ConfigError("--config is required");
    ExperimentConfig cfg = load_experiment_config(config_path);
    if (seed_set) cfg.seed = seed_flag;
    if (const char* env = std::getenv("KANCIM_OUT")) cfg.output_dir = env;
    if (!out_flag.empty()) cfg.output_dir = out_flag;
    if (!checkpoint_flag.empty()) cfg.checkpoint_path = checkpoint_flag;
    if (epochs_flag > 0) cfg.train.cfg.epochs = epochs_flag;
    if (max_windows_flag >= 0) cfg.tune.max_windows = max_windows_flag;
    cfg.validate();
    fs::create_directories(cfg.output_dir);

    if (c_train->parsed()) return cmd_train(cfg);
    if (c_quant->parsed()) return cmd_quantize(cfg);
    if (c_enc->parsed()) return cmd_compare_encoders(cfg, threads);
    if (c_map->parsed()) return cmd_map_and_simulate(cfg, threads);
    if (c_tune->parsed()) return cmd_tune(cfg, resume_path);
    throw ConfigError("no subcommand given");
  } catch (const ConfigError& e) {
    log_at(LogLevel::Error, e.what());
    return 2;
  } catch (const InfeasibleError& e) {
    log_at(LogLevel::Error, e.what());
    return 3;
  } catch (const std::exception& e) {
    log_at(LogLevel::Error, e.what());
    return 4;
  }
}
