#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cvri/config.hpp"
#include "cvri/eval.hpp"
#include "cvri/ground_truth.hpp"
#include "cvri/letters.hpp"
#include "cvri/metrics.hpp"
#include "cvri/network.hpp"
#include "cvri/render.hpp"

using namespace cvri;
using C = std::complex<double>;
namespace fs = std::filesystem;

namespace {

ImagingGeometry small_geometry() {
  ImagingGeometry g = desk_geometry();
  g.num_freq = 24;
  g.num_angle = 18;
  g.pixels_x = 24;
  g.pixels_y = 24;
  g.region_x = 0.096;
  g.region_y = 0.072;
  return g;
}

TrainConfig small_config() {
  TrainConfig c;
  c.examples_total = 50;
  c.batch_size = 1;
  c.seed = 7;
  c.scatter_min = 5;
  c.scatter_max = 15;
  return c;
}

ImageReald image_of(std::initializer_list<double> vals, int rows, int cols) {
  ImageReald img;
  img.values.resize(rows, cols);
  int i = 0;
  for (double v : vals) img.values.data()[i++] = v;
  return img;
}

} // namespace

TEST_CASE("rmse: basic examples and the loss identity") {
  ImageReald ones, zeros;
  ones.values = RMatrix<double>::Constant(6, 4, 1.0);
  zeros.values = RMatrix<double>::Zero(6, 4);
  CHECK(rmse(ones, ones) == 0.0);
  CHECK(rmse(zeros, ones) == doctest::Approx(1.0));

  Rng rng(2);
  ImageReald a, b;
  a.values.resize(5, 7);
  b.values.resize(5, 7);
  for (Eigen::Index i = 0; i < a.values.size(); ++i) {
    a.values.data()[i] = std::abs(rng.normal());
    b.values.data()[i] = std::abs(rng.normal());
  }
  // rmse = sqrt(2 * loss / P)
  const double via_loss = std::sqrt(2.0 * loss(a, b) / static_cast<double>(a.values.size()));
  CHECK(rmse(a, b) == doctest::Approx(via_loss).epsilon(1e-12));
}

TEST_CASE("rmse: symmetry and triangle inequality") {
  Rng rng(3);
  ImageReald a, b, c;
  for (auto* img : {&a, &b, &c}) {
    img->values.resize(6, 6);
    for (Eigen::Index i = 0; i < img->values.size(); ++i)
      img->values.data()[i] = std::abs(rng.normal());
  }
  CHECK(rmse(a, b) == doctest::Approx(rmse(b, a)).epsilon(1e-15));
  CHECK(rmse(a, a) == 0.0);
  CHECK(rmse(a, c) <= rmse(a, b) + rmse(b, c) + 1e-12);
}

TEST_CASE("sweep: a perfect oracle stub scores zero everywhere") {
  const auto geom = small_geometry();
  const auto cfg = small_config();
  // regenerate the example the sweep is about to score (single thread keeps
  // evaluation in index order)
  std::vector<double> snrs = {0.0, 5.0};
  std::size_t snr_idx = 0;
  long idx = 0;
  Method<double> oracle{"oracle", [&](const EchoMatrixd&) {
                          TrainConfig ecfg = cfg;
                          ecfg.snr_min_db = snrs[snr_idx];
                          ecfg.snr_max_db = snrs[snr_idx];
                          ecfg.examples_total = 3;
                          ecfg.batch_size = 1;
                          const auto d = heldout_dataset<double>(geom, ecfg, 1ull << 33);
                          const auto t = d.example(idx, 0).target;
                          if (++idx == 3) { idx = 0; ++snr_idx; }
                          return t;
                        }};
  const auto report = sweep<double>(geom, cfg, {oracle}, snrs, 3, 1);
  for (const auto& row : report.cells)
    for (const auto& cell : row) {
      CHECK(cell.mean_rmse == 0.0);
      CHECK(cell.trials == 3);
    }
}

TEST_CASE("sweep results are reproducible") {
  const auto geom = small_geometry();
  const auto cfg = small_config();
  const auto plan = make_plan<double>(geom);
  Method<double> mf{"matched-filter", [&](const EchoMatrixd& echo) {
                      ImageReald img;
                      img.geometry_id = echo.geometry_id;
                      img.values = adjoint_image(echo, plan).values.cwiseAbs();
                      return img;
                    }};
  const auto r1 = sweep<double>(geom, cfg, {mf}, {-5.0, 5.0}, 4, 2);
  const auto r2 = sweep<double>(geom, cfg, {mf}, {-5.0, 5.0}, 4, 2);
  CHECK(format_report_csv(r1) == format_report_csv(r2));
  CHECK(format_report_csv(r1).find("matched-filter,-5,") != std::string::npos);
}

TEST_CASE("render intensity mapping") {
  CHECK(render_intensity(1.0, 1.0, 35.0) == 255);
  CHECK(render_intensity(std::pow(10.0, -35.0 / 20.0), 1.0, 35.0) == 0);
  CHECK(render_intensity(0.0, 1.0, 35.0) == 0);
  // v_max/10 -> -20 dB -> round(255 * 15/35) = 109
  CHECK(render_intensity(0.1, 1.0, 35.0) == 109);
  // monotone in v
  int prev = -1;
  for (double v = 0.0; v <= 1.0; v += 0.001) {
    const int cur = render_intensity(v, 1.0, 35.0);
    CHECK(cur >= prev);
    prev = cur;
  }
}

TEST_CASE("write_pgm emits a valid grayscale file") {
  const auto dir = fs::temp_directory_path() / "cvri_render_test";
  fs::create_directories(dir);
  const std::string path = (dir / "img.pgm").string();

  ImageReald img = image_of({0.0, 0.25, 0.5, 1.0}, 2, 2);
  img.geometry_id = 1;
  write_pgm(path, img, 35.0);

  std::ifstream in(path, std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  CHECK(magic == "P5");
  CHECK(w == 2);
  CHECK(h == 2);
  CHECK(maxval == 255);
  in.get();
  unsigned char px[4];
  in.read(reinterpret_cast<char*>(px), 4);
  // column-major fill: image row 1 = {0.25, 1.0}; +y up puts it first in the file
  CHECK(static_cast<int>(px[0]) == render_intensity(0.25, 1.0, 35.0));
  CHECK(static_cast<int>(px[1]) == 255);
  CHECK(static_cast<int>(px[2]) == 0);
  CHECK(static_cast<int>(px[3]) == render_intensity(0.5, 1.0, 35.0));

  // all-zero image: uniform floor, still written
  ImageReald zero = image_of({0.0, 0.0, 0.0, 0.0}, 2, 2);
  const std::string zpath = (dir / "zero.pgm").string();
  write_pgm(zpath, zero, 35.0);
  CHECK(fs::exists(zpath));
  fs::remove_all(dir);
}

TEST_CASE("letter_scene: deterministic unit-amplitude layouts") {
  const auto geom = desk_geometry();
  const auto a = letter_scene("NUDT", geom);
  const auto b = letter_scene("NUDT", geom);
  REQUIRE(a.scatterers.size() == b.scatterers.size());
  for (std::size_t i = 0; i < a.scatterers.size(); ++i) {
    CHECK(a.scatterers[i].x == b.scatterers[i].x);
    CHECK(a.scatterers[i].y == b.scatterers[i].y);
    CHECK(std::abs(a.scatterers[i].amp) == 1.0);
  }
  CHECK_THROWS_AS(letter_scene("NUDZ", geom), std::invalid_argument);
  CHECK_THROWS_AS(letter_scene("", geom), std::invalid_argument);

  // no scatterer sits on a pixel center
  for (const auto& s : a.scatterers) {
    const double fx = (s.x + 0.5 * geom.region_x) / pixel_pitch_x(geom) - 0.5;
    CHECK(std::abs(fx - std::round(fx)) > 1e-6);
  }
}

TEST_CASE("letter_scene ground truth has one local maximum per scatterer") {
  const auto geom = desk_geometry();
  const auto scene = letter_scene("NUDT", geom);
  const auto img = render_ground_truth(scene, geom);
  int maxima = 0;
  for (int q = 1; q < geom.pixels_y - 1; ++q)
    for (int p = 1; p < geom.pixels_x - 1; ++p) {
      const double v = img.values(q, p);
      bool is_max = v > 0;
      for (int dq = -1; dq <= 1 && is_max; ++dq)
        for (int dp = -1; dp <= 1; ++dp) {
          if (dq == 0 && dp == 0) continue;
          if (img.values(q + dq, p + dp) >= v) { is_max = false; break; }
        }
      if (is_max) ++maxima;
    }
  CHECK(maxima == static_cast<int>(scene.scatterers.size()));
}

TEST_CASE("timing helpers: warm-up excluded, split stages sum to the total") {
  const auto geom = small_geometry();
  const auto plan = make_plan<double>(geom);
  Rng rng(4);
  const auto echo = simulate_echo(generate_scene(geom, 5, rng), geom);

  const auto t_mf = time_method(
      "matched-filter", echo, [&](const EchoMatrixd& e) { return adjoint_image(e, plan); }, 5);
  CHECK(t_mf.trials == 5);
  CHECK(t_mf.mean_total_ms > 0.0);
  CHECK(t_mf.std_total_ms >= 0.0);
  CHECK_FALSE(t_mf.split);

  const auto net = make_identity_network<double>(2, 3);
  const auto t_net = time_split_method(
      "cv-cnn", echo, [&](const EchoMatrixd& e) { return adjoint_image(e, plan); },
      [&](const ImageComplexd& adj) {
        ComplexTensor<double> in(1, static_cast<int>(adj.values.rows()),
                                 static_cast<int>(adj.values.cols()));
        in.maps[0] = adj.values;
        return forward_net(in, net).output;
      },
      5);
  CHECK(t_net.split);
  CHECK(t_net.mean_operator_ms + t_net.mean_network_ms ==
        doctest::Approx(t_net.mean_total_ms).epsilon(0.05));
  // the network method does strictly more work than the bare operator
  CHECK(t_net.mean_total_ms >= t_net.mean_operator_ms);

  const auto table = format_timing_table({t_mf, t_net});
  CHECK(table.find("cv-cnn") != std::string::npos);
  CHECK(table.find("std_ms") != std::string::npos);
}

TEST_CASE("report formatting") {
  EvalReport r;
  r.methods = {"a", "b"};
  r.snrs_db = {-10.0, 0.0};
  r.cells = {{{0.5, 2}, {0.25, 2}}, {{0.4, 2}, {0.2, 2}}};
  const auto csv = format_report_csv(r);
  CHECK(csv.find("method,snr_db,trials,mean_rmse\n") == 0);
  CHECK(csv.find("a,-10,2,0.5") != std::string::npos);
  CHECK(csv.find("b,0,2,0.2") != std::string::npos);
  const auto table = format_report_table(r);
  CHECK(table.find("rmse@-10dB") != std::string::npos);
}
