#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "overfitlab/rng.hpp"
#include "overfitlab/sweep.hpp"

using namespace overfitlab;

namespace {

SweepConfig tiny_config() {
  SweepConfig cfg;
  cfg.n_grid = {4, 8};
  cfg.p_grid = {4, 8};
  cfg.rho_list = {0.0, 0.25};
  cfg.mu_norm = 3.0;
  cfg.sigma = 1.0;
  cfg.eta = 0.05;
  cfg.loss_threshold = 0.01;
  cfg.max_epochs = 60;
  cfg.reps = 2;
  cfg.base_seed = 9;
  return cfg;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::filesystem::path fresh_dir(const std::string& leaf) {
  const auto dir = std::filesystem::temp_directory_path() / leaf;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Hand-built result on a 2x2 grid with one rho and one rep per cell; the
// n > p corner never gets a cell.
SweepResult synthetic_result(double v16_16, double v16_32, double v32_32) {
  SweepResult res;
  res.config.n_grid = {16, 32};
  res.config.p_grid = {16, 32};
  res.config.rho_list = {0.0};
  res.config.reps = 1;
  auto cell = [](std::size_t n, std::size_t p, double value) {
    CellResult c;
    c.n = n;
    c.p = p;
    c.rho = 0.0;
    c.rep = 0;
    c.r = static_cast<double>(p) / static_cast<double>(n);
    c.separable = true;
    c.last_excess = value;
    c.best_excess = value;
    return c;
  };
  res.cells = {cell(16, 16, v16_16), cell(16, 32, v16_32),
               cell(32, 32, v32_32)};
  return res;
}

}  // namespace

TEST_CASE("sweep config validation") {
  CHECK_NOTHROW(tiny_config().validate());

  SweepConfig c = tiny_config();
  c.n_grid.clear();
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = tiny_config();
  c.p_grid = {8, 4};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = tiny_config();
  c.n_grid = {4, 4};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = tiny_config();
  c.rho_list = {0.6};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = tiny_config();
  c.rho_list.clear();
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = tiny_config();
  c.eta = -1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = tiny_config();
  c.mu_norm = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = tiny_config();
  c.sigma = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = tiny_config();
  c.reps = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = tiny_config();
  c.max_epochs = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = tiny_config();
  c.loss_threshold = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("cells are addressed positionally") {
  const SweepConfig cfg = tiny_config();
  const CellResult a = run_cell(cfg, 0, 1, 1, 1);
  const CellResult b = run_cell(cfg, 0, 1, 1, 1);
  CHECK(a.seed == b.seed);
  CHECK(a.last_excess == b.last_excess);
  CHECK(a.best_excess == b.best_excess);
  CHECK(a.final_margin == b.final_margin);
  CHECK(a.epochs == b.epochs);

  CHECK_THROWS_AS(static_cast<void>(run_cell(cfg, 2, 0, 0, 0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(static_cast<void>(run_cell(cfg, 0, 2, 0, 0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(static_cast<void>(run_cell(cfg, 0, 0, 2, 0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(static_cast<void>(run_cell(cfg, 0, 0, 0, 2)),
                  std::invalid_argument);
}

TEST_CASE("small sweep fills the upper triangle in order") {
  const SweepConfig cfg = tiny_config();
  const SweepResult res = run_sweep(cfg);

  // Grid cells with n <= p: (4,4), (4,8), (8,8) x 2 rhos x 2 reps.
  REQUIRE(res.cells.size() == 12);

  std::size_t idx = 0;
  for (std::size_t i_n = 0; i_n < 2; ++i_n) {
    for (std::size_t i_p = 0; i_p < 2; ++i_p) {
      if (cfg.n_grid[i_n] > cfg.p_grid[i_p]) continue;
      for (std::size_t i_rho = 0; i_rho < 2; ++i_rho) {
        for (std::size_t rep = 0; rep < 2; ++rep) {
          const CellResult& c = res.cells[idx++];
          CHECK(c.n == cfg.n_grid[i_n]);
          CHECK(c.p == cfg.p_grid[i_p]);
          CHECK(c.rho == cfg.rho_list[i_rho]);
          CHECK(c.rep == rep);
          CHECK(c.r == static_cast<double>(c.p) / static_cast<double>(c.n));
          CHECK(c.seed == cell_seed(cfg.base_seed, i_n, i_p, i_rho, rep));
          CHECK(c.separable == (c.final_margin > 0.0));
          if (std::isfinite(c.last_excess) && std::isfinite(c.best_excess)) {
            CHECK(c.best_excess <= c.last_excess + 1e-12);
            CHECK(c.best_excess >= -1e-12);
          }
          CHECK(c.epochs >= 1);
          CHECK(c.epochs <= cfg.max_epochs);
        }
      }
    }
  }
}

TEST_CASE("sweep cells equal isolated recomputation") {
  const SweepConfig cfg = tiny_config();
  const SweepResult res = run_sweep(cfg);
  std::size_t idx = 0;
  for (std::size_t i_n = 0; i_n < 2; ++i_n) {
    for (std::size_t i_p = 0; i_p < 2; ++i_p) {
      if (cfg.n_grid[i_n] > cfg.p_grid[i_p]) continue;
      for (std::size_t i_rho = 0; i_rho < 2; ++i_rho) {
        for (std::size_t rep = 0; rep < 2; ++rep) {
          const CellResult lone = run_cell(cfg, i_n, i_p, i_rho, rep);
          const CellResult& swept = res.cells[idx++];
          CHECK(lone.seed == swept.seed);
          CHECK(lone.last_excess == swept.last_excess);
          CHECK(lone.best_excess == swept.best_excess);
          CHECK(lone.best_t == swept.best_t);
          CHECK(lone.final_margin == swept.final_margin);
          CHECK(lone.epochs == swept.epochs);
        }
      }
    }
  }
}

TEST_CASE("thread count never changes the output bytes") {
  const SweepConfig cfg = tiny_config();
  const auto dir = fresh_dir("overfitlab_test_sweep_threads");

  const SweepResult one = run_sweep(cfg, 1);
  const SweepResult three = run_sweep(cfg, 3);
  emit_csv(one, (dir / "one.csv").string());
  emit_csv(three, (dir / "three.csv").string());
  CHECK(slurp(dir / "one.csv") == slurp(dir / "three.csv"));

  std::filesystem::remove_all(dir);
}

TEST_CASE("csv header and shape") {
  const auto dir = fresh_dir("overfitlab_test_sweep_csv");
  const SweepConfig cfg = tiny_config();
  const SweepResult res = run_sweep(cfg);
  emit_csv(res, (dir / "sweep.csv").string());

  const std::string text = slurp(dir / "sweep.csv");
  std::istringstream lines(text);
  std::string header;
  REQUIRE(std::getline(lines, header));
  CHECK(header ==
        "n,p,rho,rep,r,separable,epochs,last_excess,best_excess,best_t,"
        "final_margin,seed");
  std::size_t rows = 0;
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == res.cells.size());
  CHECK(text.back() == '\n');
  CHECK(text.find('\r') == std::string::npos);
}

TEST_CASE("a grid whose cells all have n > p yields just the header") {
  SweepConfig cfg = tiny_config();
  cfg.n_grid = {32};
  cfg.p_grid = {16};
  const SweepResult res = run_sweep(cfg);
  CHECK(res.cells.empty());

  const auto dir = fresh_dir("overfitlab_test_sweep_empty");
  emit_csv(res, (dir / "sweep.csv").string());
  CHECK(slurp(dir / "sweep.csv") ==
        "n,p,rho,rep,r,separable,epochs,last_excess,best_excess,best_t,"
        "final_margin,seed\n");
  std::filesystem::remove_all(dir);
}

TEST_CASE("heatmap pixels follow the frozen colormap") {
  const auto dir = fresh_dir("overfitlab_test_sweep_pgm");
  const std::string path = (dir / "map.pgm").string();

  // All-zero excess: bright everywhere except the unpopulated n > p corner.
  emit_heatmap(synthetic_result(0.0, 0.0, 0.0), CellField::last_excess, 0.0,
               path);
  std::string bytes = slurp(path);
  REQUIRE(bytes.size() == std::string("P5\n2 2\n255\n").size() + 4);
  CHECK(bytes.substr(0, 10) == "P5\n2 2\n255");
  // Row order: p = 16 (top), then p = 32; columns n = 16, 32.
  CHECK(static_cast<unsigned char>(bytes[11]) == 255);  // (n16, p16)
  CHECK(static_cast<unsigned char>(bytes[12]) == 0);    // (n32, p16): n > p
  CHECK(static_cast<unsigned char>(bytes[13]) == 255);  // (n16, p32)
  CHECK(static_cast<unsigned char>(bytes[14]) == 255);  // (n32, p32)

  // Saturated excess maps to black.
  emit_heatmap(synthetic_result(0.5, 0.7, 0.5), CellField::last_excess, 0.0,
               path);
  bytes = slurp(path);
  CHECK(static_cast<unsigned char>(bytes[11]) == 0);
  CHECK(static_cast<unsigned char>(bytes[13]) == 0);
  CHECK(static_cast<unsigned char>(bytes[14]) == 0);

  // Midpoint: 255 - round(255 * 0.5) = 127.
  emit_heatmap(synthetic_result(0.25, 0.0, 0.0), CellField::last_excess, 0.0,
               path);
  bytes = slurp(path);
  CHECK(static_cast<unsigned char>(bytes[11]) == 127);

  // Non-finite medians render black.
  emit_heatmap(
      synthetic_result(std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0),
      CellField::last_excess, 0.0, path);
  bytes = slurp(path);
  CHECK(static_cast<unsigned char>(bytes[11]) == 0);

  std::filesystem::remove_all(dir);
}

TEST_CASE("heatmap aggregates reps by the median") {
  SweepResult res = synthetic_result(0.0, 0.0, 0.0);
  res.config.reps = 3;
  res.cells.clear();
  auto cell = [](std::size_t n, std::size_t p, std::size_t rep, double value) {
    CellResult c;
    c.n = n;
    c.p = p;
    c.rep = rep;
    c.r = static_cast<double>(p) / static_cast<double>(n);
    c.last_excess = value;
    c.best_excess = value;
    return c;
  };
  const double reps1616[] = {0.1, 0.5, 0.2};
  for (std::size_t rep = 0; rep < 3; ++rep) {
    res.cells.push_back(cell(16, 16, rep, reps1616[rep]));
  }
  for (std::size_t rep = 0; rep < 3; ++rep) {
    res.cells.push_back(cell(16, 32, rep, 0.0));
  }
  for (std::size_t rep = 0; rep < 3; ++rep) {
    res.cells.push_back(cell(32, 32, rep, 0.0));
  }

  const auto dir = fresh_dir("overfitlab_test_sweep_median");
  const std::string path = (dir / "map.pgm").string();
  emit_heatmap(res, CellField::last_excess, 0.0, path);
  const std::string bytes = slurp(path);
  // median 0.2: 255 - round(255 * 0.4) = 255 - 102 = 153.
  CHECK(static_cast<unsigned char>(bytes[11]) == 153);
  std::filesystem::remove_all(dir);
}

TEST_CASE("heatmap writes a sidecar description") {
  const auto dir = fresh_dir("overfitlab_test_sweep_sidecar");
  const std::string path = (dir / "map.pgm").string();
  emit_heatmap(synthetic_result(0.0, 0.0, 0.0), CellField::best_excess, 0.0,
               path);

  const auto doc = nlohmann::json::parse(slurp(path + ".json"));
  CHECK(doc.at("field") == "best_excess");
  CHECK(doc.at("rho").get<double>() == 0.0);
  CHECK(doc.at("scale_max").get<double>() == 0.5);
  CHECK(doc.at("grid").at("n") == nlohmann::json::array({16, 32}));
  CHECK(doc.at("grid").at("p") == nlohmann::json::array({16, 32}));
  CHECK(doc.at("colormap_formula") ==
        "pixel = 255 - round(255 * clamp(value / 0.5, 0, 1))");
  std::filesystem::remove_all(dir);
}

TEST_CASE("heatmap rejects a rho outside the sweep") {
  const auto dir = fresh_dir("overfitlab_test_sweep_badrho");
  const SweepResult res = synthetic_result(0.0, 0.0, 0.0);
  CHECK_THROWS_AS(emit_heatmap(res, CellField::last_excess, 0.25,
                               (dir / "map.pgm").string()),
                  std::invalid_argument);
  std::filesystem::remove_all(dir);
}

TEST_CASE("slope report walks the fixed ratio diagonal") {
  SweepResult res;
  res.config.n_grid = {4, 8, 16, 32};
  res.config.p_grid = {8, 16, 32, 64};
  res.config.rho_list = {0.0};
  res.config.reps = 1;
  auto cell = [](std::size_t n, std::size_t p, double value) {
    CellResult c;
    c.n = n;
    c.p = p;
    c.r = static_cast<double>(p) / static_cast<double>(n);
    c.last_excess = value;
    c.best_excess = value;
    return c;
  };
  // Only the r = 2 diagonal is populated.
  res.cells = {cell(4, 8, 0.40), cell(8, 16, 0.30), cell(16, 32, 0.25),
               cell(32, 64, 0.20)};

  const SlopeReport rep = slope_test(res, 0.0, 2.0);
  CHECK(rep.rho == 0.0);
  CHECK(rep.r == 2.0);
  CHECK(rep.ns == std::vector<std::size_t>{4, 8, 16, 32});
  REQUIRE(rep.medians.size() == 4);
  CHECK(rep.medians[0] == 0.40);
  CHECK(rep.medians[3] == 0.20);
  CHECK(rep.final_over_first == doctest::Approx(0.5).epsilon(1e-15));

  // Fewer than 3 diagonal points is not a trend.
  SweepResult thin = res;
  thin.config.n_grid = {4, 8};
  thin.config.p_grid = {8, 16};
  thin.cells = {cell(4, 8, 0.4), cell(8, 16, 0.3)};
  CHECK_THROWS_AS(static_cast<void>(slope_test(thin, 0.0, 2.0)),
                  std::invalid_argument);
}

TEST_CASE("exact qp mode runs end to end on a small grid") {
  SweepConfig cfg = tiny_config();
  cfg.interpolator_mode = InterpolatorMode::exact_qp;
  cfg.rho_list = {0.25};
  const SweepResult res = run_sweep(cfg);
  REQUIRE(res.cells.size() == 6);
  for (const CellResult& c : res.cells) {
    // Overparameterized cells separate; the margin certificate agrees.
    if (c.separable) {
      CHECK(c.final_margin > 0.0);
      CHECK(std::isfinite(c.last_excess));
    }
  }
}
