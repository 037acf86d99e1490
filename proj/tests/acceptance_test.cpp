// Acceptance suite: every criterion runs at its stated tolerance and prints
// one "[ACCEPTANCE] criterion N ...: PASS|FAIL" line.
#include <gtest/gtest.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hrseg/analysis/complexity.hpp"
#include "hrseg/data/synthetic.hpp"
#include "hrseg/model/checkpoint.hpp"
#include "hrseg/nn/grad_check.hpp"
#include "hrseg/train/eval.hpp"
#include "hrseg/train/trainer.hpp"

using namespace hrseg;

namespace {

struct CriterionLine {
  int number;
  const char* title;
  ~CriterionLine() {
    std::printf("[ACCEPTANCE] criterion %d (%s): %s\n", number, title,
                ::testing::Test::HasFailure() ? "FAIL" : "PASS");
    std::fflush(stdout);
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct CmdResult {
  int exit_code = -1;
  std::string output;
};

CmdResult run_tool(const std::string& args) {
  const std::string cmd = std::string(HRSEG_TOOL_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  CmdResult r;
  if (!pipe) return r;
  char buf[512];
  while (fgets(buf, sizeof(buf), pipe)) r.output += buf;
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string fresh_dir(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

std::string last_line(const std::string& text) {
  std::istringstream in(text);
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  return last;
}

ModelConfig hr_only_b32(int hr_down) {
  ModelConfig cfg;
  cfg.base = 32;
  cfg.hr_down = hr_down;
  cfg.guidance = Guidance::none;
  cfg.head = HeadMode::single_step;
  cfg.aux_heads = {};
  return cfg;
}

std::vector<double> flat_of(const Tensor<double>& t) {
  return std::vector<double>(t.data(), t.data() + t.size());
}

}  // namespace

TEST(Acceptance, Criterion1ComplexityReproduction) {
  CriterionLine line{1, "Table 5 complexity via analyze, B16/B32/B48 at 400x400"};
  const std::string dir = fresh_dir("hrseg_acc1");
  const struct {
    int base;
    double gflops, params_m;
  } rows[] = {{16, 0.66, 0.61}, {32, 2.50, 2.49}, {48, 5.60, 5.43}};
  for (const auto& row : rows) {
    const std::string cfg_path = dir + "/b" + std::to_string(row.base) + ".ini";
    std::ofstream(cfg_path) << "[model]\nbase = " << row.base << "\n";
    const auto t0 = std::chrono::steady_clock::now();
    const CmdResult r = run_tool("analyze --config " + cfg_path + " --input-size 400");
    const double elapsed = seconds_since(t0);
    EXPECT_EQ(r.exit_code, 0) << r.output;
    EXPECT_LT(elapsed, 1.0) << "B" << row.base;
    double params = 0, flops = 0;
    ASSERT_EQ(std::sscanf(last_line(r.output).c_str(), "params=%lfM flops=%lfGFLOPs",
                          &params, &flops),
              2)
        << r.output;
    EXPECT_NEAR(flops, row.gflops, 0.10 * row.gflops) << "B" << row.base;
    EXPECT_NEAR(params, row.params_m, 0.20 * row.params_m) << "B" << row.base;
  }
  std::filesystem::remove_all(dir);
}

TEST(Acceptance, Criterion2AblationComplexity) {
  CriterionLine line{2, "Table 2 ablation complexity at base 32"};
  const auto t0 = std::chrono::steady_clock::now();

  const ComplexityReport quarter = model_complexity(hr_only_b32(4), 400, 400);
  EXPECT_NEAR(quarter.gflops(), 1.28, 0.15 * 1.28);
  EXPECT_NEAR(quarter.params_millions(), 0.099, 0.15 * 0.099);

  const ComplexityReport half = model_complexity(hr_only_b32(2), 400, 400);
  const double ratio = half.flops / quarter.flops;
  EXPECT_GE(ratio, 3.7);
  EXPECT_LE(ratio, 4.1);

  ModelConfig guided;
  guided.base = 32;
  guided.head = HeadMode::single_step;
  guided.aux_heads = {};
  const ComplexityReport full = model_complexity(guided, 400, 400);
  EXPECT_NEAR(full.gflops(), 2.31, 0.15 * 2.31);

  EXPECT_LT(seconds_since(t0), 1.0);
}

TEST(Acceptance, Criterion3ScalingProperties) {
  CriterionLine line{3, "base doubling ratios and exact x4 under input doubling"};
  ModelConfig b16, b32;
  b16.base = 16;
  b32.base = 32;
  const ComplexityReport r16 = model_complexity(b16, 400, 400);
  const ComplexityReport r32 = model_complexity(b32, 400, 400);
  const double flops_ratio = r32.flops / r16.flops;
  const double params_ratio = static_cast<double>(r32.params) / static_cast<double>(r16.params);
  EXPECT_GE(flops_ratio, 3.5);
  EXPECT_LE(flops_ratio, 4.0);
  EXPECT_GE(params_ratio, 3.5);
  EXPECT_LE(params_ratio, 4.2);

  for (const ModelConfig& cfg : {b16, b32}) {
    const double f200 = model_complexity(cfg, 200, 200).flops;
    const double f400 = model_complexity(cfg, 400, 400).flops;
    EXPECT_EQ(f400, 4.0 * f200) << "base " << cfg.base;
  }
}

TEST(Acceptance, Criterion4AnalyticEqualsExecutorMacs) {
  CriterionLine line{4, "analytic calculator equals instrumented executor, base 2 at 16x16"};
  ModelConfig cfg;
  cfg.base = 2;
  Model<float> m = Model<float>::build(cfg, 5);
  Tensor<float> x(1, 3, 16, 16, 0.25f);
  MacCounter macs;
  m.forward(x, RunMode::infer, &macs);

  const ComplexityReport r = model_complexity(cfg, 16, 16);
  std::map<std::string, double> analytic;
  for (const LayerCost& l : r.layers) {
    if ((l.kind == OpKind::conv || l.kind == OpKind::tconv) && l.aux_index == 0) {
      analytic[l.name] += l.flops;
    }
  }
  ASSERT_EQ(analytic.size(), macs.per_layer.size());
  for (const auto& [name, count] : macs.per_layer) {
    EXPECT_EQ(analytic.at(name), static_cast<double>(count)) << name;
  }
  EXPECT_EQ(r.flops, static_cast<double>(macs.total));
}

TEST(Acceptance, Criterion5GradientSuite) {
  CriterionLine line{5, "finite-difference gradient checks, every layer kind + model"};
  const auto t0 = std::chrono::steady_clock::now();
  constexpr double kTol = 1e-4;
  double worst = 0.0;
  std::string worst_at;
  auto track = [&](const char* what, const GradCheckReport& report) {
    EXPECT_LT(report.max_rel_err, kTol) << what << " worst " << report.worst;
    if (report.max_rel_err > worst) {
      worst = report.max_rel_err;
      worst_at = what;
    }
  };

  {
    Tensor<double> input(1, 2, 5, 5);
    randomize(input, 201);
    ConvParams<double> p;
    p.weight = Tensor<double>(3, 2, 3, 3);
    randomize(p.weight, 202, 0.5);
    p.bias.assign(3, 0.1);
    p.padding = 1;
    track("conv2d", grad_check(
                        [&] { return conv2d_forward(input, p); },
                        [&](const Tensor<double>& up) {
                          auto g = conv2d_backward(input, p, up);
                          return std::vector<std::vector<double>>{flat_of(g.input),
                                                                  flat_of(g.weight), g.bias};
                        },
                        {{"input", input.data(), input.size()},
                         {"weight", p.weight.data(), p.weight.size()},
                         {"bias", p.bias.data(), static_cast<int64_t>(p.bias.size())}},
                        203));
  }
  {
    Tensor<double> input(1, 3, 4, 4);
    randomize(input, 211);
    ConvTransposeParams<double> p;
    p.weight = Tensor<double>(3, 2, 3, 3);
    randomize(p.weight, 212, 0.5);
    p.stride = 2;
    p.padding = 1;
    p.output_padding = 1;
    track("conv_transpose",
          grad_check(
              [&] { return conv_transpose_forward(input, p); },
              [&](const Tensor<double>& up) {
                auto g = conv_transpose_backward(input, p, up);
                return std::vector<std::vector<double>>{flat_of(g.input), flat_of(g.weight)};
              },
              {{"input", input.data(), input.size()},
               {"weight", p.weight.data(), p.weight.size()}},
              213));
  }
  {
    Tensor<double> input(2, 3, 4, 4);
    randomize(input, 221);
    BatchNormState<double> s(3);
    track("batchnorm",
          grad_check(
              [&] {
                BatchNormState<double> scratch = s;
                return batchnorm_forward(input, scratch, BnMode::train);
              },
              [&](const Tensor<double>& up) {
                BatchNormState<double> scratch = s;
                BnCache<double> cache;
                batchnorm_forward(input, scratch, BnMode::train, &cache);
                auto g = batchnorm_backward(input, s, cache, up);
                return std::vector<std::vector<double>>{flat_of(g.input), g.gamma, g.beta};
              },
              {{"input", input.data(), input.size()},
               {"gamma", s.gamma.data(), 3},
               {"beta", s.beta.data(), 3}},
              223));
  }
  {
    Tensor<double> input(1, 2, 4, 4);
    randomize(input, 231);
    for (int64_t i = 0; i < input.size(); ++i) {
      if (std::abs(input[i]) < 5e-2) input[i] = input[i] < 0 ? -5e-2 : 5e-2;
    }
    track("relu", grad_check(
                      [&] { return relu_forward(input); },
                      [&](const Tensor<double>& up) {
                        return std::vector<std::vector<double>>{
                            flat_of(relu_backward(input, up))};
                      },
                      {{"input", input.data(), input.size()}}, 232));
    track("sigmoid", grad_check(
                         [&] { return sigmoid_forward(input); },
                         [&](const Tensor<double>& up) {
                           return std::vector<std::vector<double>>{
                               flat_of(sigmoid_backward(sigmoid_forward(input), up))};
                         },
                         {{"input", input.data(), input.size()}}, 233));
  }
  {
    Tensor<double> input(1, 2, 4, 5);
    randomize(input, 241);
    track("bilinear_resize",
          grad_check(
              [&] { return bilinear_resize_forward(input, 7, 8); },
              [&](const Tensor<double>& up) {
                return std::vector<std::vector<double>>{
                    flat_of(bilinear_resize_backward(input.h(), input.w(), up))};
              },
              {{"input", input.data(), input.size()}}, 242));
  }
  for (Fusion mode : {Fusion::sum, Fusion::mul}) {
    Tensor<double> a(1, 2, 3, 3), b(1, 2, 3, 3);
    randomize(a, 251);
    randomize(b, 252);
    track(mode == Fusion::sum ? "fuse_sum" : "fuse_mul",
          grad_check(
              [&, mode] { return fuse_forward(a, b, mode); },
              [&, mode](const Tensor<double>& up) {
                auto [ga, gb] = fuse_backward(a, b, mode, up);
                return std::vector<std::vector<double>>{flat_of(ga), flat_of(gb)};
              },
              {{"a", a.data(), a.size()}, {"b", b.data(), b.size()}}, 253));
  }
  {
    Tensor<double> logits(1, 2, 4, 4);
    randomize(logits, 261);
    Tensor<double> labels(1, 1, 4, 4);
    Rng rng(262);
    for (int64_t i = 0; i < labels.size(); ++i) labels[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    track("softmax_ce",
          grad_check(
              [&] { return softmax_ce_per_pixel(logits, labels).per_pixel_loss; },
              [&](const Tensor<double>& up) {
                return std::vector<std::vector<double>>{
                    flat_of(softmax_ce_backward(logits, labels, up))};
              },
              {{"logits", logits.data(), logits.size()}}, 263));
  }
  {
    ModelConfig cfg;
    cfg.base = 2;
    cfg.num_blocks = 1;
    cfg.aux_heads = {1};
    Model<double> m = Model<double>::build(cfg, 271);
    Tensor<double> x(1, 3, 16, 16);
    randomize(x, 272, 0.5);
    std::vector<GradCheckVar> vars;
    for (auto& ref : m.learnables()) vars.push_back({ref.name, ref.data, ref.count});
    track("one_block_model",
          grad_check(
              [&] { return m.forward(x, RunMode::train).primary; },
              [&](const Tensor<double>& up) {
                m.forward(x, RunMode::train);
                Tensor<double> zero(up.n(), up.c(), up.h(), up.w());
                m.backward(up, {zero});
                std::vector<std::vector<double>> grads;
                for (auto& ref : m.learnables()) grads.push_back(*m.gradient(ref.name));
                return grads;
              },
              vars, 273));
  }

  const double elapsed = seconds_since(t0);
  EXPECT_LT(elapsed, 120.0);
  std::printf("  gradient suite: worst %.3e at %s, %.1fs\n", worst, worst_at.c_str(), elapsed);
}

TEST(Acceptance, Criterion6DeskScaleTraining) {
  CriterionLine line{6, "desk-scale overfit: base 8, 20 images, 2000 iters, mIoU >= 0.90"};
  const auto t0 = std::chrono::steady_clock::now();
  const std::string data_dir = fresh_dir("hrseg_acc6_data");
  gen_synthetic(20, 128, 7, data_dir);

  ModelConfig mc;
  mc.base = 8;
  mc.aux_heads = {1, 2};
  Model<float> model = Model<float>::build(mc, 7);

  TrainConfig cfg;
  cfg.max_iters = 2000;
  cfg.warmup_iters = 100;
  cfg.base_lr = 0.01;
  cfg.lr_power = 0.9;
  cfg.batch_size = 4;
  cfg.alpha = 0.5;
  cfg.seed = 7;
  cfg.ohem.enabled = true;
  cfg.ohem.prob_thresh = 0.7;
  cfg.ohem.min_kept = 2500;

  AugmentParams aug;
  aug.scale_min = aug.scale_max = 1.0;
  aug.crop_h = aug.crop_w = 128;
  aug.hflip_prob = 0.5;
  aug.brightness = aug.contrast = aug.saturation = 0.0;

  Trainer trainer(model, cfg, aug);
  Dataset dataset(data_dir);
  const TrainResult result = trainer.run(dataset, "", [](const IterationRecord& r) {
    if (r.iter % 500 == 0) {
      std::printf("  iter %lld loss %.4f\n", static_cast<long long>(r.iter), r.total);
      std::fflush(stdout);
    }
  });

  ASSERT_EQ(result.history.size(), 2000u);
  for (const auto& rec : result.history) {
    ASSERT_TRUE(std::isfinite(rec.total)) << "iteration " << rec.iter;
  }

  const MetricsReport r = evaluate(model, dataset, aug.mean, aug.std_dev);
  const double elapsed = seconds_since(t0);
  std::printf("  train mIoU %.4f (crack %.4f, bg %.4f) in %.1f min\n", r.miou, r.iou_crack,
              r.iou_bg, elapsed / 60.0);
  EXPECT_GE(r.miou, 0.90);
  EXPECT_LE(elapsed, 1800.0);
  std::filesystem::remove_all(data_dir);
}

TEST(Acceptance, Criterion7Determinism) {
  CriterionLine line{7, "seeded runs agree to 1e-12 over 10 iterations"};
  const std::string data_dir = fresh_dir("hrseg_acc7_data");
  gen_synthetic(8, 64, 11, data_dir);
  ModelConfig mc;
  mc.base = 4;
  TrainConfig cfg;
  cfg.max_iters = 10;
  cfg.warmup_iters = 2;
  cfg.batch_size = 2;
  cfg.seed = 21;
  AugmentParams aug;
  aug.crop_h = aug.crop_w = 64;

  std::vector<double> losses[2];
  for (int run = 0; run < 2; ++run) {
    Model<float> model = Model<float>::build(mc, cfg.seed);
    Trainer trainer(model, cfg, aug);
    for (const auto& rec : trainer.run(Dataset(data_dir), "").history) {
      losses[run].push_back(rec.total);
    }
  }
  ASSERT_EQ(losses[0].size(), 10u);
  for (size_t i = 0; i < 10; ++i) {
    EXPECT_NEAR(losses[0][i], losses[1][i], 1e-12) << "iteration " << i;
  }
  std::filesystem::remove_all(data_dir);
}

TEST(Acceptance, Criterion8ArchitecturalInvariants) {
  CriterionLine line{8, "aux-head invariance, constant HR resolution, checkpoint round trip"};

  // Inference logits bit-identical with aux heads present vs absent.
  {
    ModelConfig with_aux;
    with_aux.base = 4;
    ModelConfig without_aux = with_aux;
    without_aux.aux_heads = {};
    Model<float> a = Model<float>::build(with_aux, 99);
    Model<float> b = Model<float>::build(without_aux, 99);
    Tensor<float> x(2, 3, 64, 64);
    Rng rng(101);
    for (int64_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
    EXPECT_TRUE(a.forward(x, RunMode::infer).primary.bit_equal(
        b.forward(x, RunMode::infer).primary));
  }

  // Constant HR resolution across the whole config space.
  for (Guidance g : {Guidance::none, Guidance::single, Guidance::multi}) {
    for (HeadMode h : {HeadMode::single_step, HeadMode::double_step}) {
      for (int hr_down : {2, 4, 8}) {
        for (int64_t size : {64, 96}) {
          ModelConfig cfg;
          cfg.base = 4;
          cfg.guidance = g;
          cfg.head = h;
          cfg.hr_down = hr_down;
          if (g == Guidance::none) cfg.aux_heads = {};
          const LayerPlan plan = build_plan(cfg, size, size);
          for (const PlanStep& s : plan.steps) {
            if (s.role == Role::hr) {
              ASSERT_EQ(s.out_h, plan.hr_h);
              ASSERT_EQ(s.out_w, plan.hr_w);
            }
          }
        }
      }
    }
  }

  // Checkpoint round trip: bit-identical forward outputs.
  {
    ModelConfig cfg;
    cfg.base = 3;
    Model<float> m = Model<float>::build(cfg, 31);
    Tensor<float> warm(2, 3, 32, 32, 0.3f);
    m.forward(warm, RunMode::train);  // move BN running stats off their init
    const std::string path = fresh_dir("hrseg_acc8") + "/model.hrseg";
    save_checkpoint(m, path);
    LoadedCheckpoint loaded = load_checkpoint(path);
    Tensor<float> x(1, 3, 64, 64);
    Rng rng(102);
    for (int64_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
    EXPECT_TRUE(m.forward(x, RunMode::infer).primary.bit_equal(
        loaded.model.forward(x, RunMode::infer).primary));
    std::filesystem::remove_all(std::filesystem::path(path).parent_path());
  }
}

TEST(Acceptance, Criterion9Metrics) {
  CriterionLine line{9, "hand-derived confusion example and brute-force recount"};
  ConfusionMatrix cm;
  cm.tp = 50;
  cm.fp = 10;
  cm.fn = 40;
  cm.tn = 900;
  const MetricsReport r = compute(cm);
  EXPECT_NEAR(r.miou, 0.7237, 1e-4);

  for (uint64_t trial = 0; trial < 100; ++trial) {
    Tensor<float> pred(1, 1, 16, 16), label(1, 1, 16, 16);
    Rng rng(3000 + trial);
    for (int64_t i = 0; i < pred.size(); ++i) {
      pred[i] = rng.bernoulli(0.3) ? 1.0f : 0.0f;
      label[i] = rng.bernoulli(0.25) ? 1.0f : 0.0f;
    }
    ConfusionMatrix fast;
    update(fast, pred, label);
    uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (int64_t y = 0; y < 16; ++y) {
      for (int64_t x = 0; x < 16; ++x) {
        const bool p = pred(0, 0, y, x) == 1.0f, l = label(0, 0, y, x) == 1.0f;
        tp += p && l;
        fp += p && !l;
        fn += !p && l;
        tn += !p && !l;
      }
    }
    ASSERT_EQ(fast.tp, tp);
    ASSERT_EQ(fast.fp, fp);
    ASSERT_EQ(fast.fn, fn);
    ASSERT_EQ(fast.tn, tn);
    const MetricsReport a = compute(fast);
    ConfusionMatrix oracle{tp, fp, fn, tn};
    const MetricsReport b = compute(oracle);
    ASSERT_EQ(a.miou, b.miou);
    ASSERT_EQ(a.precision, b.precision);
    ASSERT_EQ(a.recall, b.recall);
    ASSERT_EQ(a.f1, b.f1);
  }
}
