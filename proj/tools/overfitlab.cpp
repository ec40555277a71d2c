#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "overfitlab/bounds.hpp"
#include "overfitlab/gmm.hpp"
#include "overfitlab/linear_model.hpp"
#include "overfitlab/max_margin.hpp"
#include "overfitlab/risk.hpp"
#include "overfitlab/sweep.hpp"
#include "overfitlab/trainer.hpp"
#include "overfitlab/util.hpp"
#include "overfitlab/verify.hpp"

namespace {

using namespace overfitlab;

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  std::uint64_t value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw std::invalid_argument(what + " must be an unsigned integer, got '" +
                                text + "'");
  }
  return value;
}

// --seed fallback chain: explicit flag, then OVERFITLAB_SEED, then 1.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag.has_value()) return *flag;
  if (const char* env = std::getenv("OVERFITLAB_SEED")) {
    return parse_u64(env, "OVERFITLAB_SEED");
  }
  return 1;
}

std::string json_number_or_null(double v) {
  if (!std::isfinite(v)) return "null";
  return format_double(v);
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

struct SampleArgs {
  std::size_t p = 16;
  std::size_t n = 16;
  double mu_norm = 40.0;
  double sigma = 1.0;
  double rho = 0.0;
  std::optional<std::uint64_t> seed;
  std::string out = "dataset.csv";
};

int run_sample(const SampleArgs& args) {
  GmmConfig config;
  config.p = args.p;
  config.mu = make_signal(args.p, args.mu_norm, SignalMode::axis);
  config.sigma = args.sigma;
  Rng rng(resolve_seed(args.seed));
  const Dataset clean = sample_noiseless(config, args.n, rng);
  const Dataset data = corrupt_labels(clean, args.rho, rng);
  write_dataset_csv(data, args.out);
  std::cout << "n=" << args.n << " p=" << args.p
            << " flips=" << data.flip_count() << " out=" << args.out << '\n';
  return 0;
}

struct TrainArgs {
  std::optional<std::string> data;
  std::size_t n = 64;
  std::size_t p = 128;
  double mu_norm = 40.0;
  double sigma = 1.0;
  double rho = 0.0;
  double eta = 1e-5;
  double threshold = 0.05;
  std::size_t max_epochs = 200;
  std::size_t record_every = 0;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool dump_weights = false;
};

int run_train(const TrainArgs& args) {
  Rng rng(resolve_seed(args.seed));
  Dataset data;
  if (args.data.has_value()) {
    data = read_dataset_csv(*args.data, args.mu_norm, args.sigma);
  } else {
    GmmConfig config;
    config.p = args.p;
    config.mu = make_signal(args.p, args.mu_norm, SignalMode::axis);
    config.sigma = args.sigma;
    data = corrupt_labels(sample_noiseless(config, args.n, rng), args.rho, rng);
  }

  TrainParams params;
  params.eta = args.eta;
  params.max_epochs = args.max_epochs;
  params.loss_threshold = args.threshold;
  params.record_every = args.record_every;
  const Trajectory traj = multipass_sgd(data, params, rng);

  const std::filesystem::path out_dir(args.out_dir);
  std::filesystem::create_directories(out_dir);

  std::string trajectory_csv = "t,train_loss,risk,norm_w\n";
  for (const TrajectoryPoint& point : traj.iterates) {
    const double risk =
        point.w.is_zero()
            ? std::numeric_limits<double>::quiet_NaN()
            : closed_form_risk(point.w, data.config.mu, data.config.sigma);
    trajectory_csv += std::to_string(point.t) + ',' +
                      format_double(point.train_loss) + ',' +
                      format_double(risk) + ',' +
                      format_double(point.w.norm()) + '\n';
  }
  write_text_file(out_dir / "trajectory.csv", trajectory_csv);

  if (args.dump_weights) {
    std::string weights_csv;
    for (const TrajectoryPoint& point : traj.iterates) {
      weights_csv += std::to_string(point.t) + ',' +
                     weights_csv_row(point.w) + '\n';
    }
    write_text_file(out_dir / "weights.csv", weights_csv);
  }

  const char* stop = traj.terminated_by == StopReason::threshold
                         ? "threshold"
                         : "max_epochs";
  double last_excess = std::numeric_limits<double>::quiet_NaN();
  std::string report_json = "null";
  const Weights& final_w = traj.iterates.back().w;
  if (!final_w.is_zero()) {
    const RiskReport report = closed_form_report(final_w, data.config, data.rho);
    last_excess = report.excess_risk;
    report_json = risk_report_json(report);
  }
  double best_excess = std::numeric_limits<double>::quiet_NaN();
  std::size_t best_t = 0;
  try {
    const auto [t, value] = early_stop_select(traj, [&](const Weights& w) {
      return excess_risk(w, data.config);
    });
    best_t = t;
    best_excess = value;
  } catch (const std::runtime_error&) {
    // every iterate zero (eta = 0); reported as null below
  }

  std::string risk_json = "{\"best_excess\":" + json_number_or_null(best_excess);
  risk_json += ",\"best_t\":" + std::to_string(best_t);
  risk_json += ",\"epochs\":" + std::to_string(traj.epochs_completed);
  risk_json += ",\"last_excess\":" + json_number_or_null(last_excess);
  risk_json += ",\"report\":" + report_json;
  risk_json += ",\"terminated_by\":\"";
  risk_json += stop;
  risk_json += "\"}\n";
  write_text_file(out_dir / "risk.json", risk_json);

  std::cout << "epochs=" << traj.epochs_completed << " terminated_by=" << stop
            << " last_excess=" << format_double(last_excess)
            << " best_excess=" << format_double(best_excess)
            << " best_t=" << best_t << '\n';
  return 0;
}

struct SweepArgs {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> base_seed;
  std::optional<std::size_t> reps;
  std::optional<std::size_t> max_epochs;
  std::optional<std::string> mode;
};

InterpolatorMode parse_mode(const std::string& text) {
  if (text == "sgd_long") return InterpolatorMode::sgd_long;
  if (text == "exact_qp") return InterpolatorMode::exact_qp;
  throw std::invalid_argument(
      "interpolator_mode must be 'sgd_long' or 'exact_qp', got '" + text + "'");
}

struct SweepFile {
  SweepConfig config;
  std::string out_dir = ".";
  unsigned threads = 1;
};

SweepFile load_sweep_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config " + path + ": " + e.what());
  }
  if (!doc.is_object()) {
    throw std::invalid_argument("config " + path + ": expected a JSON object");
  }

  SweepFile file;
  SweepConfig& cfg = file.config;
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "n_grid") {
        cfg.n_grid = value.get<std::vector<std::size_t>>();
      } else if (key == "p_grid") {
        cfg.p_grid = value.get<std::vector<std::size_t>>();
      } else if (key == "rho_list") {
        cfg.rho_list = value.get<std::vector<double>>();
      } else if (key == "mu_norm") {
        cfg.mu_norm = value.get<double>();
      } else if (key == "sigma") {
        cfg.sigma = value.get<double>();
      } else if (key == "eta") {
        cfg.eta = value.get<double>();
      } else if (key == "loss_threshold") {
        cfg.loss_threshold = value.get<double>();
      } else if (key == "max_epochs") {
        cfg.max_epochs = value.get<std::size_t>();
      } else if (key == "reps") {
        cfg.reps = value.get<std::size_t>();
      } else if (key == "base_seed") {
        cfg.base_seed = value.get<std::uint64_t>();
      } else if (key == "interpolator_mode") {
        cfg.interpolator_mode = parse_mode(value.get<std::string>());
      } else if (key == "out_dir") {
        file.out_dir = value.get<std::string>();
      } else if (key == "threads") {
        file.threads = value.get<unsigned>();
      } else {
        throw std::invalid_argument("config " + path + ": unknown key '" +
                                    key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("config " + path + ": bad value for '" +
                                  key + "': " + e.what());
    }
  }
  return file;
}

int run_sweep_cmd(const SweepArgs& args) {
  SweepFile file = load_sweep_config(args.config_path);
  if (args.base_seed.has_value()) file.config.base_seed = *args.base_seed;
  if (args.reps.has_value()) file.config.reps = *args.reps;
  if (args.max_epochs.has_value()) file.config.max_epochs = *args.max_epochs;
  if (args.mode.has_value()) file.config.interpolator_mode = parse_mode(*args.mode);
  if (args.out_dir.has_value()) file.out_dir = *args.out_dir;
  if (args.threads.has_value()) file.threads = *args.threads;
  if (file.threads == 0) {
    throw std::invalid_argument("threads must be >= 1");
  }

  const SweepResult result = run_sweep(file.config, file.threads);

  const std::filesystem::path out_dir(file.out_dir);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path csv_path = out_dir / "sweep.csv";
  emit_csv(result, csv_path.string());
  std::cout << "cells=" << result.cells.size() << " wrote " << csv_path.string()
            << '\n';

  if (!result.cells.empty()) {
    for (const CellField field : {CellField::last_excess, CellField::best_excess}) {
      const char* field_name =
          field == CellField::last_excess ? "last_excess" : "best_excess";
      for (const double rho : result.config.rho_list) {
        const std::filesystem::path pgm =
            out_dir / ("heatmap_" + std::string(field_name) + "_rho" +
                       format_double(rho) + ".pgm");
        emit_heatmap(result, field, rho, pgm.string());
        std::cout << "wrote " << pgm.string() << '\n';
      }
    }
  }
  return 0;
}

struct VerifyArgs {
  std::size_t trials = 2000;
  double delta = 0.05;
  std::optional<std::uint64_t> seed;
  std::size_t mc_samples = 100000;
  std::size_t sgd_instances = 8;
  std::optional<std::string> out;
};

int run_verify_cmd(const VerifyArgs& args) {
  VerifyParams params;
  params.trials = args.trials;
  params.delta = args.delta;
  params.seed = resolve_seed(args.seed);
  params.mc_samples = args.mc_samples;
  params.sgd_instances = args.sgd_instances;
  const VerificationReport report = run_verification(params);

  if (report.slack_warning) {
    std::cout << "warning: sampling slack " << format_double(report.slack)
              << " >= delta " << format_double(report.delta)
              << "; frequencies at trials=" << report.trials
              << " are weak evidence\n";
  }
  std::cout << std::left << std::setw(28) << "check" << std::setw(24)
            << "frequency" << std::setw(24) << "bound" << "result\n";
  for (const CheckOutcome& check : report.checks) {
    std::cout << std::left << std::setw(28) << check.claim << std::setw(24)
              << format_double(check.frequency) << std::setw(24)
              << format_double(check.bound) << (check.pass ? "PASS" : "FAIL")
              << '\n';
  }
  std::cout << (report.all_pass ? "all checks passed"
                                : "at least one check failed")
            << '\n';
  if (args.out.has_value()) {
    write_text_file(*args.out, verification_json(report) + "\n");
  }
  return report.all_pass ? 0 : 3;
}

struct BoundsArgs {
  double rho = 0.4;
  double r = 2.0;
  double mu_norm = 40.0;
  double sigma = 1.0;
  std::size_t p = 128;
  std::size_t n = 64;
  BoundConstants constants;
};

int run_bounds_cmd(const BoundsArgs& args) {
  const double lower = lower_bound_noisy(args.rho, args.r, args.constants);
  const double early =
      upper_bound_earlystop(args.mu_norm, args.sigma, args.p, args.n,
                            args.constants);
  const double noiseless = upper_bound_noiseless(args.n, args.constants);

  std::string out = "{\"constants\":{";
  out += "\"c\":" + format_double(args.constants.c);
  out += ",\"c14\":" + format_double(args.constants.c14);
  out += ",\"c2\":" + format_double(args.constants.c2);
  out += ",\"c3\":" + format_double(args.constants.c3);
  out += ",\"c4\":" + format_double(args.constants.c4);
  out += ",\"c5\":" + format_double(args.constants.c5);
  out += "},\"lower_bound_noisy\":" + format_double(lower);
  out += ",\"params\":{";
  out += "\"mu_norm\":" + format_double(args.mu_norm);
  out += ",\"n\":" + std::to_string(args.n);
  out += ",\"p\":" + std::to_string(args.p);
  out += ",\"r\":" + format_double(args.r);
  out += ",\"rho\":" + format_double(args.rho);
  out += ",\"sigma\":" + format_double(args.sigma);
  out += "},\"upper_bound_earlystop\":" + format_double(early);
  out += ",\"upper_bound_noiseless\":" + format_double(noiseless);
  out += "}";
  std::cout << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear classifiers on two-cluster Gaussian data: training, "
               "max-margin solving, risk evaluation, phase-diagram sweeps",
               "overfitlab"};
  app.require_subcommand(1);

  SampleArgs sample_args;
  CLI::App* sample = app.add_subcommand(
      "sample", "Generate a labeled dataset and write it as CSV");
  sample->add_option("--p", sample_args.p, "feature dimension")
      ->capture_default_str();
  sample->add_option("--n", sample_args.n, "sample count")
      ->capture_default_str();
  sample->add_option("--mu-norm", sample_args.mu_norm, "mean vector norm")
      ->capture_default_str();
  sample->add_option("--sigma", sample_args.sigma, "noise scale")
      ->capture_default_str();
  sample->add_option("--rho", sample_args.rho, "label flip probability")
      ->capture_default_str();
  sample->add_option("--seed", sample_args.seed,
                     "RNG seed (default: $OVERFITLAB_SEED or 1)");
  sample->add_option("--out", sample_args.out, "output CSV path")
      ->capture_default_str();

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand(
      "train", "Run multi-pass SGD on logistic loss and report risks");
  train->add_option("--data", train_args.data,
                    "dataset CSV path (generates a dataset when absent)");
  train->add_option("--n", train_args.n, "sample count (generation)")
      ->capture_default_str();
  train->add_option("--p", train_args.p, "feature dimension (generation)")
      ->capture_default_str();
  train->add_option("--mu-norm", train_args.mu_norm, "mean vector norm")
      ->capture_default_str();
  train->add_option("--sigma", train_args.sigma, "noise scale")
      ->capture_default_str();
  train->add_option("--rho", train_args.rho,
                    "label flip probability (generation)")
      ->capture_default_str();
  train->add_option("--eta", train_args.eta, "SGD step size")
      ->capture_default_str();
  train->add_option("--threshold", train_args.threshold,
                    "stop when mean train loss falls below this")
      ->capture_default_str();
  train->add_option("--max-epochs", train_args.max_epochs, "epoch budget")
      ->capture_default_str();
  train->add_option("--record-every", train_args.record_every,
                    "iterate recording stride in updates (0 = once per epoch)")
      ->capture_default_str();
  train->add_option("--seed", train_args.seed,
                    "RNG seed (default: $OVERFITLAB_SEED or 1)");
  train->add_option("--out-dir", train_args.out_dir, "output directory")
      ->capture_default_str();
  train->add_flag("--dump-weights", train_args.dump_weights,
                  "also write every recorded iterate to weights.csv");

  SweepArgs sweep_args;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Run a (n, p, rho) grid sweep and emit CSV plus PGM heatmaps");
  sweep->add_option("--config", sweep_args.config_path, "JSON config path")
      ->required();
  sweep->add_option("--out-dir", sweep_args.out_dir,
                    "output directory (overrides config out_dir, default .)");
  sweep->add_option("--threads", sweep_args.threads,
                    "worker thread count (overrides config threads, default 1)");
  sweep->add_option("--base-seed", sweep_args.base_seed,
                    "override config base_seed");
  sweep->add_option("--reps", sweep_args.reps, "override config reps");
  sweep->add_option("--max-epochs", sweep_args.max_epochs,
                    "override config max_epochs");
  sweep->add_option("--mode", sweep_args.mode,
                    "override interpolator mode: sgd_long or exact_qp");

  VerifyArgs verify_args;
  CLI::App* verify = app.add_subcommand(
      "verify", "Run the concentration and oracle check battery");
  verify->add_option("--trials", verify_args.trials,
                     "Monte Carlo trials per claim checker")
      ->capture_default_str();
  verify->add_option("--delta", verify_args.delta,
                     "claimed failure probability under test")
      ->capture_default_str();
  verify->add_option("--seed", verify_args.seed,
                     "RNG seed (default: $OVERFITLAB_SEED or 1)");
  verify->add_option("--mc-samples", verify_args.mc_samples,
                     "draws for the risk transform test")
      ->capture_default_str();
  verify->add_option("--sgd-instances", verify_args.sgd_instances,
                     "instances in the SGD-vs-QP battery")
      ->capture_default_str();
  verify->add_option("--out", verify_args.out, "also write the report JSON here");

  BoundsArgs bounds_args;
  CLI::App* bounds = app.add_subcommand(
      "bounds", "Evaluate the risk bound formulas for given parameters");
  bounds->add_option("--rho", bounds_args.rho, "label flip probability")
      ->capture_default_str();
  bounds->add_option("--r", bounds_args.r, "overparameterization ratio p/n")
      ->capture_default_str();
  bounds->add_option("--mu-norm", bounds_args.mu_norm, "mean vector norm")
      ->capture_default_str();
  bounds->add_option("--sigma", bounds_args.sigma, "noise scale")
      ->capture_default_str();
  bounds->add_option("--p", bounds_args.p, "feature dimension")
      ->capture_default_str();
  bounds->add_option("--n", bounds_args.n, "sample count")
      ->capture_default_str();
  bounds->add_option("--c2", bounds_args.constants.c2, "noiseless rate exponent")
      ->capture_default_str();
  bounds->add_option("--c3", bounds_args.constants.c3, "noisy lower bound scale")
      ->capture_default_str();
  bounds->add_option("--c4", bounds_args.constants.c4,
                     "overparameterization window constant")
      ->capture_default_str();
  bounds->add_option("--c5", bounds_args.constants.c5,
                     "step-size safety factor (>= 2)")
      ->capture_default_str();
  bounds->add_option("--c14", bounds_args.constants.c14,
                     "early-stopping exponent scale")
      ->capture_default_str();
  bounds->add_option("--c", bounds_args.constants.c, "generic slack constant")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(sample)) return run_sample(sample_args);
    if (app.got_subcommand(train)) return run_train(train_args);
    if (app.got_subcommand(sweep)) return run_sweep_cmd(sweep_args);
    if (app.got_subcommand(verify)) return run_verify_cmd(verify_args);
    if (app.got_subcommand(bounds)) return run_bounds_cmd(bounds_args);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
