#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

// OVERFITLAB_BIN_PATH and OVERFITLAB_GOLDEN_DIR come from the build.

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) return {};
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path io_dir() {
  const fs::path dir = fs::temp_directory_path() / "overfitlab_test_cli";
  fs::create_directories(dir);
  return dir;
}

// Runs the binary with a scrubbed OVERFITLAB_SEED; extra_env can put it back.
RunResult run_cli(const std::string& args, const std::string& extra_env = "") {
  static int counter = 0;
  const fs::path out_path = io_dir() / ("stdout" + std::to_string(counter));
  const fs::path err_path = io_dir() / ("stderr" + std::to_string(counter));
  ++counter;

  std::string cmd = "env -u OVERFITLAB_SEED ";
  if (!extra_env.empty()) cmd += extra_env + " ";
  cmd += std::string(OVERFITLAB_BIN_PATH) + " " + args;
  cmd += " > " + out_path.string() + " 2> " + err_path.string();

  const int status = std::system(cmd.c_str());
  RunResult r;
  if (status != -1 && WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

fs::path fresh_dir(const std::string& leaf) {
  const fs::path dir = io_dir() / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

std::string tiny_sweep_config(const std::string& out_dir) {
  return std::string("{\n") + "  \"n_grid\": [4, 8],\n" +
         "  \"p_grid\": [4, 8],\n" + "  \"rho_list\": [0, 0.25],\n" +
         "  \"mu_norm\": 3,\n" + "  \"eta\": 0.05,\n" +
         "  \"loss_threshold\": 0.01,\n" + "  \"max_epochs\": 40,\n" +
         "  \"reps\": 2,\n" + "  \"base_seed\": 9,\n" + "  \"out_dir\": \"" +
         out_dir + "\"\n}\n";
}

}  // namespace

TEST_CASE("sample writes a dataset and reports the shape") {
  const fs::path dir = fresh_dir("sample_ok");
  const std::string out = (dir / "data.csv").string();
  const RunResult r =
      run_cli("sample --n 4 --p 2 --mu-norm 3 --seed 1 --out " + out);
  CHECK(r.exit_code == 0);
  CHECK(r.out == "n=4 p=2 flips=0 out=" + out + "\n");

  const auto lines = lines_of(slurp(out));
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "index,y_clean,y_obs,flipped,x_0,x_1");
}

TEST_CASE("sample rejects an out of range flip rate") {
  const fs::path dir = fresh_dir("sample_badrho");
  const RunResult r =
      run_cli("sample --rho 0.6 --out " + (dir / "d.csv").string());
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("sample flip count lands in the binomial window") {
  const fs::path dir = fresh_dir("sample_flips");
  const RunResult r = run_cli("sample --n 1000 --p 2 --rho 0.4 --seed 5 --out " +
                              (dir / "d.csv").string());
  REQUIRE(r.exit_code == 0);
  const auto pos = r.out.find("flips=");
  REQUIRE(pos != std::string::npos);
  const long flips = std::strtol(r.out.c_str() + pos + 6, nullptr, 10);
  CHECK(flips >= 253);  // 400 +/- 147 covers many standard deviations
  CHECK(flips <= 547);
}

TEST_CASE("the seed environment variable matches the flag") {
  const fs::path dir = fresh_dir("sample_env");
  const std::string a = (dir / "a.csv").string();
  const std::string b = (dir / "b.csv").string();
  const RunResult ra = run_cli("sample --n 64 --p 4 --rho 0.3 --seed 5 --out " + a);
  const RunResult rb = run_cli("sample --n 64 --p 4 --rho 0.3 --out " + b,
                               "OVERFITLAB_SEED=5");
  REQUIRE(ra.exit_code == 0);
  REQUIRE(rb.exit_code == 0);
  CHECK(slurp(a) == slurp(b));

  const RunResult bad = run_cli("sample --out " + (dir / "c.csv").string(),
                                "OVERFITLAB_SEED=abc");
  CHECK(bad.exit_code == 2);
}

TEST_CASE("train reports a missing dataset as an io error") {
  const RunResult r = run_cli("train --data /nonexistent/nowhere.csv");
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("train runs to the loss threshold and writes reports") {
  const fs::path dir = fresh_dir("train_ok");
  const RunResult r = run_cli(
      "train --n 16 --p 24 --mu-norm 3 --eta 0.01 --threshold 0.2 "
      "--max-epochs 400 --seed 3 --out-dir " +
      dir.string() + " --dump-weights");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("terminated_by=threshold") != std::string::npos);

  const auto doc = nlohmann::json::parse(slurp(dir / "risk.json"));
  CHECK(doc.at("terminated_by") == "threshold");
  CHECK(doc.at("epochs").get<std::size_t>() >= 1);
  CHECK(doc.at("last_excess").is_number());
  CHECK(doc.at("best_excess").is_number());
  CHECK(doc.at("best_excess").get<double>() >= -1e-12);
  CHECK(doc.at("report").is_object());
  CHECK(doc.at("report").at("method") == "closed_form");

  const auto traj_lines = lines_of(slurp(dir / "trajectory.csv"));
  REQUIRE(traj_lines.size() >= 3);
  CHECK(traj_lines[0] == "t,train_loss,risk,norm_w");
  CHECK(traj_lines[1] == "0,0.6931471805599453,nan,0");

  const auto weight_lines = lines_of(slurp(dir / "weights.csv"));
  CHECK(weight_lines.size() == traj_lines.size() - 1);
  CHECK(weight_lines[0].substr(0, 2) == "0,");
}

TEST_CASE("train with a zero step size reports a flat run") {
  const fs::path dir = fresh_dir("train_flat");
  const RunResult r = run_cli(
      "train --n 8 --p 4 --mu-norm 2 --eta 0 --max-epochs 3 --seed 2 "
      "--out-dir " +
      dir.string());
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("epochs=3") != std::string::npos);
  CHECK(r.out.find("terminated_by=max_epochs") != std::string::npos);
  CHECK(r.out.find("last_excess=nan") != std::string::npos);
  CHECK(r.out.find("best_excess=nan") != std::string::npos);

  const auto doc = nlohmann::json::parse(slurp(dir / "risk.json"));
  CHECK(doc.at("last_excess").is_null());
  CHECK(doc.at("best_excess").is_null());
  CHECK(doc.at("report").is_null());
  CHECK(doc.at("terminated_by") == "max_epochs");

  for (const auto& line : lines_of(slurp(dir / "trajectory.csv"))) {
    if (line.empty() || line[0] == 't') continue;
    CHECK(line.find(",0.6931471805599453,nan,0") != std::string::npos);
  }
}

TEST_CASE("train consumes a dataset written by sample") {
  const fs::path dir = fresh_dir("train_data");
  const std::string data = (dir / "data.csv").string();
  REQUIRE(run_cli("sample --n 12 --p 20 --mu-norm 3 --rho 0.25 --seed 7 --out " +
                  data)
              .exit_code == 0);
  const RunResult r = run_cli(
      "train --data " + data + " --mu-norm 3 --eta 0.01 --threshold 0.1 "
      "--max-epochs 200 --seed 7 --out-dir " + dir.string());
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("epochs=") != std::string::npos);
  CHECK(fs::exists(dir / "risk.json"));
  CHECK(fs::exists(dir / "trajectory.csv"));
}

TEST_CASE("sweep runs a tiny grid and emits csv plus heatmaps") {
  const fs::path dir = fresh_dir("sweep_ok");
  const fs::path cfg = dir / "config.json";
  write_file(cfg, tiny_sweep_config((dir / "out").string()));

  const RunResult r = run_cli("sweep --config " + cfg.string());
  REQUIRE(r.exit_code == 0);
  const auto out_lines = lines_of(r.out);
  REQUIRE(!out_lines.empty());
  CHECK(out_lines[0] ==
        "cells=12 wrote " + (dir / "out" / "sweep.csv").string());
  CHECK(out_lines.size() == 5);  // csv line + 2 fields x 2 rhos

  for (const char* name :
       {"heatmap_last_excess_rho0.pgm", "heatmap_last_excess_rho0.25.pgm",
        "heatmap_best_excess_rho0.pgm", "heatmap_best_excess_rho0.25.pgm"}) {
    CHECK(fs::exists(dir / "out" / name));
    CHECK(fs::exists(dir / "out" / (std::string(name) + ".json")));
  }

  const auto csv_lines = lines_of(slurp(dir / "out" / "sweep.csv"));
  REQUIRE(csv_lines.size() == 13);
  CHECK(csv_lines[0] ==
        "n,p,rho,rep,r,separable,epochs,last_excess,best_excess,best_t,"
        "final_margin,seed");
}

TEST_CASE("sweep output is independent of the thread count") {
  const fs::path dir = fresh_dir("sweep_threads");
  const fs::path cfg1 = dir / "one.json";
  const fs::path cfg2 = dir / "two.json";
  write_file(cfg1, tiny_sweep_config((dir / "out1").string()));
  write_file(cfg2, tiny_sweep_config((dir / "out2").string()));

  REQUIRE(run_cli("sweep --config " + cfg1.string() + " --threads 1")
              .exit_code == 0);
  REQUIRE(run_cli("sweep --config " + cfg2.string() + " --threads 2")
              .exit_code == 0);

  CHECK(slurp(dir / "out1" / "sweep.csv") == slurp(dir / "out2" / "sweep.csv"));
  for (const char* name :
       {"heatmap_last_excess_rho0.pgm", "heatmap_last_excess_rho0.25.pgm",
        "heatmap_best_excess_rho0.pgm", "heatmap_best_excess_rho0.25.pgm"}) {
    CHECK(slurp(dir / "out1" / name) == slurp(dir / "out2" / name));
  }
}

TEST_CASE("sweep over an empty effective grid writes only the header") {
  const fs::path dir = fresh_dir("sweep_empty");
  const fs::path cfg = dir / "config.json";
  write_file(cfg, std::string("{\"n_grid\": [32], \"p_grid\": [16], ") +
                      "\"rho_list\": [0], \"mu_norm\": 3, \"out_dir\": \"" +
                      (dir / "out").string() + "\"}");
  const RunResult r = run_cli("sweep --config " + cfg.string());
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.substr(0, 14) == "cells=0 wrote ");
  CHECK(lines_of(r.out).size() == 1);
  CHECK(slurp(dir / "out" / "sweep.csv") ==
        "n,p,rho,rep,r,separable,epochs,last_excess,best_excess,best_t,"
        "final_margin,seed\n");
  for (const auto& entry : fs::directory_iterator(dir / "out")) {
    CHECK(entry.path().extension() != ".pgm");
  }
}

TEST_CASE("sweep config errors map to distinct exit codes") {
  const fs::path dir = fresh_dir("sweep_bad");

  CHECK(run_cli("sweep --config " + (dir / "missing.json").string())
            .exit_code == 1);

  const fs::path malformed = dir / "malformed.json";
  write_file(malformed, "{nope");
  CHECK(run_cli("sweep --config " + malformed.string()).exit_code == 2);

  const fs::path unknown = dir / "unknown.json";
  write_file(unknown, "{\"zzz\": 1}");
  const RunResult r = run_cli("sweep --config " + unknown.string());
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("unknown key") != std::string::npos);
}

TEST_CASE("verify prints the battery table and passes at moderate size") {
  const RunResult r = run_cli(
      "verify --trials 300 --mc-samples 20000 --sgd-instances 2 --seed 1");
  CHECK(r.exit_code == 0);
  const auto lines = lines_of(r.out);
  REQUIRE(lines.size() == 7);
  CHECK(lines[0].substr(0, 5) == "check");
  CHECK(lines[0].find("frequency") != std::string::npos);
  CHECK(lines[0].find("bound") != std::string::npos);
  CHECK(lines[0].find("result") != std::string::npos);
  const char* claims[] = {"max_abs_subgaussian", "noise_mean_norm",
                          "flip_count_window", "noisy_risk_transform",
                          "sgd_direction_matches_qp"};
  for (int i = 0; i < 5; ++i) {
    CHECK(lines[i + 1].find(claims[i]) == 0);
    CHECK(lines[i + 1].find("PASS") != std::string::npos);
  }
  CHECK(lines[6] == "all checks passed");
}

TEST_CASE("verify warns when the trial count is too small for delta") {
  const RunResult r = run_cli(
      "verify --trials 50 --mc-samples 20000 --sgd-instances 2 --seed 1");
  const auto lines = lines_of(r.out);
  REQUIRE(!lines.empty());
  CHECK(lines[0].substr(0, 8) == "warning:");
  CHECK(lines[0].find("weak evidence") != std::string::npos);
  CHECK(r.exit_code == 0);
}

TEST_CASE("verify evaluates even a statistically meaningless delta") {
  const RunResult r = run_cli(
      "verify --trials 100 --delta 1e-9 --mc-samples 20000 "
      "--sgd-instances 2 --seed 1");
  const auto lines = lines_of(r.out);
  REQUIRE(lines.size() == 8);  // warning + header + 5 rows + summary
  CHECK(lines[0].substr(0, 8) == "warning:");
  CHECK(r.exit_code == 0);
}

TEST_CASE("verify writes the report json when asked") {
  const fs::path dir = fresh_dir("verify_json");
  const std::string out = (dir / "report.json").string();
  const RunResult r = run_cli(
      "verify --trials 200 --mc-samples 20000 --sgd-instances 1 --seed 1 "
      "--out " + out);
  REQUIRE(r.exit_code == 0);
  const auto doc = nlohmann::json::parse(slurp(out));
  CHECK(doc.at("all_pass").get<bool>());
  CHECK(doc.at("checks").size() == 5);
}

TEST_CASE("bounds prints the formula values as json") {
  const RunResult r = run_cli("bounds");
  REQUIRE(r.exit_code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc.at("lower_bound_noisy").get<double>() ==
        doctest::Approx(0.0013475893998170934).epsilon(1e-12));
  CHECK(doc.at("upper_bound_earlystop").get<double>() == 0.0);
  CHECK(doc.at("upper_bound_noiseless").get<double>() ==
        doctest::Approx(1.0 / 64.0).epsilon(1e-15));
  CHECK(doc.at("constants").at("c5").get<double>() == 2.0);
  CHECK(doc.at("constants").at("c3").get<double>() == 1.0);
  CHECK(doc.at("params").at("rho").get<double>() == 0.4);
  CHECK(doc.at("params").at("r").get<double>() == 2.0);
  CHECK(doc.at("params").at("n").get<std::size_t>() == 64);
}

TEST_CASE("bounds rejects a zero flip rate") {
  const RunResult r = run_cli("bounds --rho 0");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("bad invocations exit with the parse error code") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("--definitely-not-a-flag").exit_code == 2);
  CHECK(run_cli("sample --definitely-not-a-flag").exit_code == 2);
  CHECK(run_cli("sweep").exit_code == 2);  // --config is required
}

TEST_CASE("help output matches the recorded goldens") {
  const fs::path golden_dir(OVERFITLAB_GOLDEN_DIR);
  const struct {
    const char* args;
    const char* file;
  } cases[] = {
      {"--help", "help_main.txt"},          {"sample --help", "help_sample.txt"},
      {"train --help", "help_train.txt"},   {"sweep --help", "help_sweep.txt"},
      {"verify --help", "help_verify.txt"}, {"bounds --help", "help_bounds.txt"},
  };
  for (const auto& c : cases) {
    CAPTURE(c.args);
    const RunResult r = run_cli(c.args);
    CHECK(r.exit_code == 0);
    const std::string golden = slurp(golden_dir / c.file);
    REQUIRE(!golden.empty());
    CHECK(r.out == golden);
  }
}

TEST_CASE("help text names every documented flag") {
  const RunResult train_help = run_cli("train --help");
  for (const char* flag : {"--data", "--eta", "--threshold", "--max-epochs",
                           "--record-every", "--out-dir", "--dump-weights"}) {
    CHECK(train_help.out.find(flag) != std::string::npos);
  }
  const RunResult sweep_help = run_cli("sweep --help");
  for (const char* flag :
       {"--config", "--out-dir", "--threads", "--base-seed", "--mode"}) {
    CHECK(sweep_help.out.find(flag) != std::string::npos);
  }
}
