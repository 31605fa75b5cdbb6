// cvri: turntable radar imaging with a complex-valued convolutional
// enhancement network. Subcommands: generate, train, infer, evaluate,
// render, demo.

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cvri/checkpoint.hpp"
#include "cvri/config.hpp"
#include "cvri/dataset.hpp"
#include "cvri/eval.hpp"
#include "cvri/io.hpp"
#include "cvri/ista.hpp"
#include "cvri/letters.hpp"
#include "cvri/metrics.hpp"
#include "cvri/network.hpp"
#include "cvri/render.hpp"
#include "cvri/rvnet.hpp"
#include "cvri/trainer.hpp"

namespace fs = std::filesystem;
using namespace cvri;

namespace {

struct CommonOpts {
  std::string preset = "desk";
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--preset", o.preset, "base preset: paper or desk")->check(CLI::IsMember({"paper", "desk"}));
  cmd->add_option("--config", o.config_path, "key=value config file applied on top of the preset");
  cmd->add_option("--seed", o.seed, "override the training/data seed");
  cmd->add_option("--threads", o.threads, "worker threads (0 = all hardware threads)");
}

FullConfig resolve_config(const CommonOpts& o) {
  FullConfig cfg = preset_config(o.preset);
  if (!o.config_path.empty()) cfg = load_config(o.config_path, cfg);
  if (o.seed) cfg.train.seed = *o.seed;
  return cfg;
}

std::vector<double> parse_snr_list(const std::string& csv) {
  std::vector<double> out;
  std::istringstream in(csv);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  if (out.empty()) throw std::runtime_error("--snr list is empty");
  return out;
}

ImageReald magnitude_image(const ImageComplexd& img) {
  ImageReald out;
  out.geometry_id = img.geometry_id;
  out.values = img.values.cwiseAbs();
  return out;
}

void require_geometry_match(std::uint64_t ckpt_id, const OperatorPlan<double>& plan,
                            const std::string& what) {
  if (ckpt_id != 0 && ckpt_id != plan.geometry_id)
    throw std::runtime_error(what + ": checkpoint geometry does not match the configured geometry "
                                    "(wrong --preset/--config?)");
}

int cmd_generate(const CommonOpts& common, int count, const std::string& out_dir, double snr_db,
                 bool no_noise, const std::string& letter) {
  const auto cfg = resolve_config(common);
  fs::create_directories(out_dir);
  Dataset<double> data(cfg.geometry, cfg.train);

  if (!letter.empty()) {
    const auto scene = letter_scene(letter, cfg.geometry);
    const auto echo = simulate_echo(scene, cfg.geometry);
    save_scene(out_dir + "/scene_letter.txt", scene);
    save_echo(out_dir + "/echo_letter.cvrb", echo);
    save_image(out_dir + "/target_letter.cvrb", render_ground_truth(scene, cfg.geometry));
    std::cout << "wrote letter scene '" << letter << "' to " << out_dir << "\n";
    return 0;
  }

  for (int i = 0; i < count; ++i) {
    const auto ex = data.example(i, 0);
    char name[64];
    std::snprintf(name, sizeof name, "%s/scene_%04d.txt", out_dir.c_str(), i);
    save_scene(name, ex.scene);
    std::snprintf(name, sizeof name, "%s/echo_clean_%04d.cvrb", out_dir.c_str(), i);
    save_echo(name, ex.clean_echo);
    if (!no_noise) {
      std::snprintf(name, sizeof name, "%s/echo_%04d.cvrb", out_dir.c_str(), i);
      Rng rng(stream_seed(cfg.train.seed, {kStreamNoise, static_cast<std::uint64_t>(i), 0}));
      save_echo(name, add_noise(ex.clean_echo, snr_db, rng));
    }
    std::snprintf(name, sizeof name, "%s/target_%04d.cvrb", out_dir.c_str(), i);
    save_image(name, ex.target);
  }
  std::cout << "wrote " << count << " example(s) to " << out_dir << "\n";
  return 0;
}

int cmd_train(const CommonOpts& common, const std::string& network, const std::string& out_dir,
              const std::string& resume, int eval_n) {
  const auto cfg = resolve_config(common);
  fs::create_directories(out_dir);
  Dataset<double> data(cfg.geometry, cfg.train);
  const auto plan = make_plan<double>(cfg.geometry);

  TrainOptions opt;
  opt.checkpoint_dir = out_dir;
  opt.n_threads = common.threads;
  std::ofstream log(out_dir + "/training.log", resume.empty() ? std::ios::trunc : std::ios::app);
  opt.log = &log;

  std::string final_path;
  if (network == "cv") {
    opt.checkpoint_prefix = "cv";
    NetworkState<double> net;
    if (resume.empty()) {
      net = init_network<double>(default_cv_spec(cfg.train.cv_hidden_channels,
                                                 cfg.train.hidden_layers, cfg.train.kernel_size),
                                 cfg.train.seed);
    } else {
      std::uint64_t step = 0, epoch = 0;
      net = load_checkpoint(resume, &step, &epoch);
      require_geometry_match(net.geometry_id, plan, "train --resume");
      opt.start_step = step;
      opt.start_epoch = static_cast<long>(epoch);
      std::cout << "resuming from epoch " << epoch << " (step " << step << ")\n";
    }
    const auto run = train_cv(net, data, opt);
    final_path = run.checkpoint_paths.empty() ? "" : run.checkpoint_paths.back();
    if (eval_n > 0) {
      const double r = heldout_rmse_cv(net, cfg.geometry, cfg.train, 0.0, eval_n, common.threads);
      std::cout << "held-out RMSE at 0 dB over " << eval_n << " scenes: " << r << "\n";
    }
  } else {
    opt.checkpoint_prefix = "rv";
    RvNetworkState<double> net;
    if (resume.empty()) {
      net = init_rv_network<double>(default_rv_spec(cfg.train.rv_hidden_channels,
                                                    cfg.train.hidden_layers, cfg.train.kernel_size),
                                    cfg.train.seed);
    } else {
      std::uint64_t step = 0, epoch = 0;
      net = load_rv_checkpoint(resume, &step, &epoch);
      require_geometry_match(net.geometry_id, plan, "train --resume");
      opt.start_step = step;
      opt.start_epoch = static_cast<long>(epoch);
      std::cout << "resuming from epoch " << epoch << " (step " << step << ")\n";
    }
    const auto run = train_rv(net, data, opt);
    final_path = run.checkpoint_paths.empty() ? "" : run.checkpoint_paths.back();
    if (eval_n > 0) {
      const double r = heldout_rmse<double>(
          cfg.geometry, cfg.train, 0.0, eval_n,
          [&](const EchoMatrixd& echo) { return rv_forward(echo, plan, net).output; },
          common.threads);
      std::cout << "held-out RMSE at 0 dB over " << eval_n << " scenes: " << r << "\n";
    }
  }
  std::cout << "final checkpoint: " << final_path << "\n";
  return 0;
}

int cmd_infer(const CommonOpts& common, const std::string& echo_path, const std::string& ckpt_path,
              const std::string& out_path, const std::string& render_path, double dynamic_range) {
  const auto cfg = resolve_config(common);
  const auto plan = make_plan<double>(cfg.geometry);
  const auto echo = load_echo(echo_path);
  require(echo.geometry_id == plan.geometry_id,
          "infer: echo file geometry does not match the configured geometry");

  ImageReald out;
  if (peek_checkpoint(ckpt_path).kind == 0) {
    const auto net = load_checkpoint(ckpt_path);
    require_geometry_match(net.geometry_id, plan, "infer");
    out = forward(echo, plan, net).output;
  } else {
    const auto net = load_rv_checkpoint(ckpt_path);
    require_geometry_match(net.geometry_id, plan, "infer");
    out = rv_forward(echo, plan, net).output;
  }
  save_image(out_path, out);
  std::cout << "wrote " << out_path << "\n";
  if (!render_path.empty()) {
    write_pgm(render_path, out, dynamic_range);
    std::cout << "wrote " << render_path << "\n";
  }
  return 0;
}

int cmd_evaluate(const CommonOpts& common, const std::string& cv_ckpt, const std::string& rv_ckpt,
                 int ista_iters, const std::string& snr_csv, int trials,
                 const std::string& out_path, bool with_timing) {
  const auto cfg = resolve_config(common);
  const auto plan = make_plan<double>(cfg.geometry);
  const auto snrs = parse_snr_list(snr_csv);

  std::vector<Method<double>> methods;
  methods.push_back({"matched-filter", [&](const EchoMatrixd& echo) {
                       return magnitude_image(adjoint_image(echo, plan));
                     }});
  if (ista_iters > 0)
    methods.push_back({"ista", [&, ista_iters](const EchoMatrixd& echo) {
                         const double lambda = default_ista_lambda(echo, plan);
                         return magnitude_image(ista_reconstruct(echo, plan, lambda, ista_iters));
                       }});
  std::optional<RvNetworkState<double>> rv_net;
  if (!rv_ckpt.empty()) {
    rv_net = load_rv_checkpoint(rv_ckpt);
    require_geometry_match(rv_net->geometry_id, plan, "evaluate");
    methods.push_back({"rv-cnn", [&](const EchoMatrixd& echo) {
                         return rv_forward(echo, plan, *rv_net).output;
                       }});
  }
  std::optional<NetworkState<double>> cv_net;
  if (!cv_ckpt.empty()) {
    cv_net = load_checkpoint(cv_ckpt);
    require_geometry_match(cv_net->geometry_id, plan, "evaluate");
    methods.push_back({"cv-cnn", [&](const EchoMatrixd& echo) {
                         return forward(echo, plan, *cv_net).output;
                       }});
  }

  const auto report = sweep<double>(cfg.geometry, cfg.train, methods, snrs, trials, common.threads);
  std::cout << format_report_table(report);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open '" + out_path + "' for writing");
    out << format_report_csv(report);
    std::cout << "wrote " << out_path << "\n";
  }

  if (with_timing) {
    Rng rng(stream_seed(cfg.train.seed, {kStreamEval, 0x74696d65ull}));
    const auto scene = generate_scene(cfg.geometry, (cfg.train.scatter_min + cfg.train.scatter_max) / 2, rng);
    auto echo = simulate_echo(scene, cfg.geometry);
    echo = add_noise(echo, 0.0, rng);

    std::vector<TimingResult> rows;
    rows.push_back(time_method("matched-filter", echo,
                               [&](const EchoMatrixd& e) { return adjoint_image(e, plan); }, trials));
    if (ista_iters > 0)
      rows.push_back(time_method("ista", echo,
                                 [&](const EchoMatrixd& e) {
                                   return ista_reconstruct(e, plan, default_ista_lambda(e, plan),
                                                           ista_iters);
                                 },
                                 std::min(trials, 5)));
    if (rv_net)
      rows.push_back(time_split_method("rv-cnn", echo,
                                       [&](const EchoMatrixd& e) { return adjoint_image(e, plan); },
                                       [&](const ImageComplexd& adj) {
                                         RealTensor<double> in(2, cfg.geometry.pixels_y, cfg.geometry.pixels_x);
                                         in.maps[0] = adj.values.real() / rv_net->input_norm;
                                         in.maps[1] = adj.values.imag() / rv_net->input_norm;
                                         return rv_forward_net(in, *rv_net).output;
                                       },
                                       trials));
    if (cv_net)
      rows.push_back(time_split_method("cv-cnn", echo,
                                       [&](const EchoMatrixd& e) { return adjoint_image(e, plan); },
                                       [&](const ImageComplexd& adj) {
                                         ComplexTensor<double> in(1, cfg.geometry.pixels_y, cfg.geometry.pixels_x);
                                         in.maps[0] = adj.values / cv_net->input_norm;
                                         return forward_net(in, *cv_net).output;
                                       },
                                       trials));
    std::cout << "\ntiming (sequential, first 3 runs discarded):\n" << format_timing_table(rows);
  }
  return 0;
}

int cmd_render(const std::string& in_path, const std::string& out_path, double dynamic_range) {
  const auto img = load_image_real(in_path);
  write_pgm(out_path, img, dynamic_range);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_demo(const CommonOpts& common, const std::string& name, const std::string& cv_ckpt,
             const std::string& rv_ckpt, int ista_iters, double snr_db, const std::string& out_dir,
             double dynamic_range) {
  const auto cfg = resolve_config(common);
  const auto plan = make_plan<double>(cfg.geometry);
  fs::create_directories(out_dir);

  const auto scene = letter_scene(name, cfg.geometry);
  auto echo = simulate_echo(scene, cfg.geometry);
  Rng rng(stream_seed(cfg.train.seed, {kStreamEval, 0x64656d6full}));
  echo = add_noise(echo, snr_db, rng);
  const auto truth = render_ground_truth(scene, cfg.geometry);

  const auto cv_net = load_checkpoint(cv_ckpt);
  require_geometry_match(cv_net.geometry_id, plan, "demo");
  const auto rv_net = load_rv_checkpoint(rv_ckpt);
  require_geometry_match(rv_net.geometry_id, plan, "demo");

  struct Panel {
    std::string name;
    ImageReald image;
  };
  std::vector<Panel> panels;
  panels.push_back({"matched-filter", magnitude_image(adjoint_image(echo, plan))});
  panels.push_back({"ista", magnitude_image(ista_reconstruct(
                                echo, plan, default_ista_lambda(echo, plan), ista_iters))});
  panels.push_back({"rv-cnn", rv_forward(echo, plan, rv_net).output});
  panels.push_back({"cv-cnn", forward(echo, plan, cv_net).output});
  panels.push_back({"ground-truth", truth});

  std::cout << "letter scene '" << name << "' (" << scene.scatterers.size() << " scatterers) at "
            << snr_db << " dB SNR\n";
  for (const auto& p : panels) {
    const std::string path = out_dir + "/" + p.name + ".pgm";
    write_pgm(path, p.image, dynamic_range);
    std::cout << p.name << ": rmse " << rmse(p.image, truth) << "  -> " << path << "\n";
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"turntable radar imaging with a complex-valued convolutional enhancement network"};
  app.require_subcommand(1);

  CommonOpts common;

  auto* generate = app.add_subcommand("generate", "write scenes, echoes and targets to files");
  CommonOpts gen_common;
  add_common(generate, gen_common);
  int gen_count = 4;
  std::string gen_out = "generated";
  double gen_snr = 0.0;
  bool gen_no_noise = false;
  std::string gen_letter;
  generate->add_option("--count", gen_count, "number of examples");
  generate->add_option("--out", gen_out, "output directory");
  generate->add_option("--snr", gen_snr, "noise level in dB for the noisy echo files");
  generate->add_flag("--no-noise", gen_no_noise, "write clean echoes only");
  generate->add_option("--letter", gen_letter, "write a letter scene (e.g. NUDT) instead");

  auto* train = app.add_subcommand("train", "train a network and write checkpoints");
  CommonOpts train_common;
  add_common(train, train_common);
  std::string train_network = "cv";
  std::string train_out = "run";
  std::string train_resume;
  int train_eval = 0;
  train->add_option("--network", train_network, "cv or rv")->check(CLI::IsMember({"cv", "rv"}));
  train->add_option("--out", train_out, "output directory for checkpoints and the log");
  train->add_option("--resume", train_resume, "checkpoint to resume from");
  train->add_option("--eval-heldout", train_eval, "held-out scenes to score after training");

  auto* infer = app.add_subcommand("infer", "echo file + checkpoint -> image file");
  CommonOpts infer_common;
  add_common(infer, infer_common);
  std::string infer_echo, infer_ckpt, infer_out = "image.cvrb", infer_render;
  double infer_dr = 35.0;
  infer->add_option("--echo", infer_echo, "input echo file")->required();
  infer->add_option("--checkpoint", infer_ckpt, "network checkpoint")->required();
  infer->add_option("--out", infer_out, "output image file");
  infer->add_option("--render", infer_render, "also write a PGM rendering here");
  infer->add_option("--dynamic-range", infer_dr, "rendering dynamic range in dB");

  auto* evaluate = app.add_subcommand("evaluate", "RMSE-vs-SNR sweep across methods");
  CommonOpts eval_common;
  add_common(evaluate, eval_common);
  std::string eval_cv, eval_rv, eval_snrs = "-10,-5,0,5,10", eval_out;
  int eval_ista_iters = 100, eval_trials = 25;
  bool eval_time = false;
  evaluate->add_option("--checkpoint", eval_cv, "complex-network checkpoint");
  evaluate->add_option("--rv-checkpoint", eval_rv, "real-network checkpoint");
  evaluate->add_option("--ista-iters", eval_ista_iters, "ISTA iterations (0 disables the baseline)");
  evaluate->add_option("--snr", eval_snrs, "comma-separated SNR list in dB");
  evaluate->add_option("--trials", eval_trials, "trials per (method, SNR) cell");
  evaluate->add_option("--out", eval_out, "write machine-readable rows here");
  evaluate->add_flag("--time", eval_time, "also measure per-method wall-clock");

  auto* render = app.add_subcommand("render", "image file -> 8-bit PGM");
  std::string render_in, render_out = "image.pgm";
  double render_dr = 35.0;
  render->add_option("--in", render_in, "input real-image file")->required();
  render->add_option("--out", render_out, "output PGM path");
  render->add_option("--dynamic-range", render_dr, "dynamic range in dB");

  auto* demo = app.add_subcommand("demo", "letter-scene panel set across all methods");
  CommonOpts demo_common;
  add_common(demo, demo_common);
  std::string demo_name = "NUDT", demo_cv, demo_rv, demo_out = "demo";
  int demo_ista_iters = 200;
  double demo_snr = 0.0, demo_dr = 35.0;
  demo->add_option("--name", demo_name, "letters to lay out");
  demo->add_option("--checkpoint", demo_cv, "complex-network checkpoint")->required();
  demo->add_option("--rv-checkpoint", demo_rv, "real-network checkpoint")->required();
  demo->add_option("--ista-iters", demo_ista_iters, "ISTA iterations");
  demo->add_option("--snr", demo_snr, "noise level in dB");
  demo->add_option("--out", demo_out, "output directory");
  demo->add_option("--dynamic-range", demo_dr, "rendering dynamic range in dB");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed())
      return cmd_generate(gen_common, gen_count, gen_out, gen_snr, gen_no_noise, gen_letter);
    if (train->parsed())
      return cmd_train(train_common, train_network, train_out, train_resume, train_eval);
    if (infer->parsed())
      return cmd_infer(infer_common, infer_echo, infer_ckpt, infer_out, infer_render, infer_dr);
    if (evaluate->parsed())
      return cmd_evaluate(eval_common, eval_cv, eval_rv, eval_ista_iters, eval_snrs, eval_trials,
                          eval_out, eval_time);
    if (render->parsed()) return cmd_render(render_in, render_out, render_dr);
    if (demo->parsed())
      return cmd_demo(demo_common, demo_name, demo_cv, demo_rv, demo_ista_iters, demo_snr,
                      demo_out, demo_dr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
