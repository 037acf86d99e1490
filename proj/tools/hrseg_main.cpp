#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "hrseg/analysis/complexity.hpp"
#include "hrseg/app_config.hpp"
#include "hrseg/data/synthetic.hpp"
#include "hrseg/model/checkpoint.hpp"
#include "hrseg/train/eval.hpp"
#include "hrseg/train/trainer.hpp"

namespace {

int cmd_gen_data(const std::string& out, int64_t count, int64_t size, uint64_t seed) {
  hrseg::gen_synthetic(count, size, seed, out);
  std::printf("wrote %lld image/mask pairs (size %lld, seed %llu) to %s\n",
              static_cast<long long>(count), static_cast<long long>(size),
              static_cast<unsigned long long>(seed), out.c_str());
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir, const std::string& resume) {
  hrseg::AppConfig cfg = hrseg::load_app_config(config_path);
  std::filesystem::create_directories(out_dir);

  hrseg::Model<float> model;
  int64_t start_iter = 0;
  std::map<std::string, std::vector<float>> velocities;
  if (!resume.empty()) {
    hrseg::LoadedCheckpoint loaded = hrseg::load_checkpoint(resume);
    if (hrseg::model_config_to_map(loaded.model.config()) !=
        hrseg::model_config_to_map(cfg.model)) {
      throw hrseg::ConfigError("[model] in '" + config_path +
                               "' differs from the checkpoint's configuration");
    }
    model = std::move(loaded.model);
    if (loaded.extras.iter > 0) start_iter = loaded.extras.iter;
    velocities = std::move(loaded.extras.velocities);
  } else {
    model = hrseg::Model<float>::build(cfg.model, cfg.train.seed);
  }

  hrseg::Dataset dataset(data_dir);
  hrseg::Trainer trainer(model, cfg.train, cfg.data);
  trainer.start_iter = start_iter;
  for (auto& [name, vel] : velocities) {
    auto it = trainer.velocities().find(name);
    if (it != trainer.velocities().end() && it->second.size() == vel.size()) {
      it->second = std::move(vel);
    }
  }

  const std::string csv_path = out_dir + "/loss.csv";
  std::ofstream csv(csv_path, start_iter > 0 ? std::ios::app : std::ios::trunc);
  if (!csv) throw hrseg::IoError("cannot open '" + csv_path + "' for writing");
  if (start_iter == 0) {
    csv << "iter,lr,total_loss,primary_loss";
    for (size_t i = 0; i < cfg.model.aux_heads.size(); ++i) csv << ",aux" << (i + 1);
    csv << "\n";
  }
  hrseg::ProgressSink sink = [&](const hrseg::IterationRecord& r) {
    csv << r.iter << "," << r.lr << "," << r.total << "," << r.primary;
    for (double a : r.aux) csv << "," << a;
    csv << "\n";
    if ((r.iter + 1) % 100 == 0 || r.iter == 0) {
      std::printf("iter %lld lr %.6f loss %.4f\n", static_cast<long long>(r.iter), r.lr,
                  r.total);
      std::fflush(stdout);
    }
  };

  hrseg::TrainResult result = trainer.run(dataset, out_dir, sink);
  std::string last = result.last_checkpoint;
  if (last.empty()) {
    // max_iters == start_iter: still snapshot the model so eval can follow.
    last = out_dir + "/ckpt_final.hrseg";
    hrseg::CheckpointExtras extras;
    extras.velocities = trainer.velocities();
    extras.iter = start_iter;
    extras.norm_mean = cfg.data.mean;
    extras.norm_std = cfg.data.std_dev;
    hrseg::save_checkpoint(model, last, &extras);
  }
  std::printf("%s\n", last.c_str());
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_dir) {
  hrseg::LoadedCheckpoint loaded = hrseg::load_checkpoint(checkpoint);
  hrseg::Dataset dataset(data_dir);
  const hrseg::MetricsReport r = hrseg::evaluate(loaded.model, dataset,
                                                 loaded.extras.norm_mean,
                                                 loaded.extras.norm_std);
  std::printf("images:    %lld\n", static_cast<long long>(dataset.size()));
  std::printf("iou_crack: %.6f\niou_bg:    %.6f\nmiou:      %.6f\n", r.iou_crack, r.iou_bg,
              r.miou);
  std::printf("precision: %.6f\nrecall:    %.6f\nf1:        %.6f\n", r.precision, r.recall,
              r.f1);
  std::printf("%.6f,%.6f,%.6f,%.6f\n", r.miou, r.precision, r.recall, r.f1);
  return 0;
}

int cmd_predict(const std::string& checkpoint, const std::string& image_path,
                const std::string& out_path) {
  hrseg::LoadedCheckpoint loaded = hrseg::load_checkpoint(checkpoint);
  const hrseg::Tensor<float> image = hrseg::read_image(image_path);
  const hrseg::Tensor<float> input =
      hrseg::normalize_image(image, loaded.extras.norm_mean, loaded.extras.norm_std);
  auto out = loaded.model.forward(input, hrseg::RunMode::infer);
  const hrseg::Tensor<float> classes = hrseg::argmax_classes(out.primary);
  hrseg::write_mask(out_path, classes);

  hrseg::Tensor<float> overlay = image;
  for (int64_t y = 0; y < classes.h(); ++y) {
    for (int64_t x = 0; x < classes.w(); ++x) {
      if (classes(0, 0, y, x) == 1.0f) {
        overlay(0, 0, y, x) = 0.5f * overlay(0, 0, y, x) + 0.5f;
        overlay(0, 1, y, x) *= 0.5f;
        overlay(0, 2, y, x) *= 0.5f;
      }
    }
  }
  std::string overlay_path = out_path;
  const auto dot = overlay_path.rfind('.');
  if (dot == std::string::npos) {
    overlay_path += "_overlay.png";
  } else {
    overlay_path.insert(dot, "_overlay");
  }
  hrseg::write_png(overlay_path, hrseg::tensor_to_image(overlay));
  std::printf("%s\n%s\n", out_path.c_str(), overlay_path.c_str());
  return 0;
}

int cmd_analyze(const std::string& config_path, int64_t input_size) {
  const hrseg::AppConfig cfg = hrseg::load_app_config(config_path);
  const hrseg::ComplexityReport report =
      hrseg::model_complexity(cfg.model, input_size, input_size);
  std::fputs(hrseg::complexity_table(report).c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HrSegNet crack-segmentation engine"};
  app.require_subcommand(1);

  std::string out_dir, config_path, data_dir, checkpoint, image_path, resume;
  int64_t count = 20, size = 400, input_size = 400;
  uint64_t seed = 0;

  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic crack dataset");
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_option("--count", count, "number of image/mask pairs")->required();
  gen->add_option("--size", size, "square image size in pixels");
  gen->add_option("--seed", seed, "generator seed");

  CLI::App* train = app.add_subcommand("train", "train a model from a config file");
  train->add_option("--config", config_path, "config file")->required();
  train->add_option("--data", data_dir, "dataset directory")->required();
  train->add_option("--out", out_dir, "output directory for checkpoints and logs")->required();
  train->add_option("--resume", resume, "checkpoint to resume from");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--data", data_dir, "dataset directory")->required();

  CLI::App* predict = app.add_subcommand("predict", "segment one image");
  predict->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  predict->add_option("--image", image_path, "input PNG")->required();
  predict->add_option("--out", out_dir, "output mask PNG")->required();

  CLI::App* analyze = app.add_subcommand("analyze", "analytic parameters and FLOPs");
  analyze->add_option("--config", config_path, "config file")->required();
  analyze->add_option("--input-size", input_size, "square input size");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(out_dir, count, size, seed);
    if (train->parsed()) return cmd_train(config_path, data_dir, out_dir, resume);
    if (eval->parsed()) return cmd_eval(checkpoint, data_dir);
    if (predict->parsed()) return cmd_predict(checkpoint, image_path, out_dir);
    if (analyze->parsed()) return cmd_analyze(config_path, input_size);
  } catch (const hrseg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
