#pragma once

#include <array>
#include <fstream>
#include <sstream>
#include <string>

#include "hrseg/core/ini.hpp"
#include "hrseg/data/augment.hpp"
#include "hrseg/model/config.hpp"
#include "hrseg/train/trainer.hpp"

namespace hrseg {

// Operator-facing configuration: [model], [train] and [data] sections of a
// flat key = value file. Unknown keys and sections are hard errors.
struct AppConfig {
  ModelConfig model;
  TrainConfig train;
  AugmentParams data;
};

namespace detail {

inline std::array<float, 3> parse_triple(const std::string& section, const std::string& key,
                                         const std::string& value) {
  std::array<float, 3> out{};
  std::stringstream ss(value);
  std::string item;
  std::vector<float> vals;
  while (std::getline(ss, item, ',')) {
    vals.push_back(static_cast<float>(ini_double(section, key, trim(item))));
  }
  if (vals.size() == 1) {
    out.fill(vals[0]);
  } else if (vals.size() == 3) {
    out = {vals[0], vals[1], vals[2]};
  } else {
    throw ConfigError("key '" + key + "' in [" + section + "] expects 1 or 3 values");
  }
  return out;
}

}  // namespace detail

inline AppConfig parse_app_config(const std::string& text) {
  const IniDoc doc = parse_ini(text);
  AppConfig cfg;
  for (const auto& [section, kv] : doc) {
    if (section == "model") {
      cfg.model = model_config_from_map(kv);
    } else if (section == "train") {
      for (const auto& [key, value] : kv) {
        if (key == "max_iters") cfg.train.max_iters = ini_int(section, key, value);
        else if (key == "warmup_iters") cfg.train.warmup_iters = ini_int(section, key, value);
        else if (key == "base_lr") cfg.train.base_lr = ini_double(section, key, value);
        else if (key == "lr_power") cfg.train.lr_power = ini_double(section, key, value);
        else if (key == "momentum") cfg.train.momentum = ini_double(section, key, value);
        else if (key == "weight_decay") cfg.train.weight_decay = ini_double(section, key, value);
        else if (key == "batch_size") cfg.train.batch_size = ini_int(section, key, value);
        else if (key == "alpha") cfg.train.alpha = ini_double(section, key, value);
        else if (key == "ohem") cfg.train.ohem.enabled = ini_bool(section, key, value);
        else if (key == "ohem_prob_thresh") cfg.train.ohem.prob_thresh = ini_double(section, key, value);
        else if (key == "ohem_min_kept") cfg.train.ohem.min_kept = ini_int(section, key, value);
        else if (key == "seed") cfg.train.seed = static_cast<uint64_t>(ini_int(section, key, value));
        else if (key == "checkpoint_interval") cfg.train.checkpoint_interval = ini_int(section, key, value);
        else throw ConfigError("unknown key '" + key + "' in [train]");
      }
    } else if (section == "data") {
      for (const auto& [key, value] : kv) {
        if (key == "crop") {
          cfg.data.crop_h = cfg.data.crop_w = ini_int(section, key, value);
        } else if (key == "scale_min") cfg.data.scale_min = ini_double(section, key, value);
        else if (key == "scale_max") cfg.data.scale_max = ini_double(section, key, value);
        else if (key == "hflip_prob") cfg.data.hflip_prob = ini_double(section, key, value);
        else if (key == "brightness") cfg.data.brightness = ini_double(section, key, value);
        else if (key == "contrast") cfg.data.contrast = ini_double(section, key, value);
        else if (key == "saturation") cfg.data.saturation = ini_double(section, key, value);
        else if (key == "mean") cfg.data.mean = detail::parse_triple(section, key, value);
        else if (key == "std") cfg.data.std_dev = detail::parse_triple(section, key, value);
        else throw ConfigError("unknown key '" + key + "' in [data]");
      }
    } else if (section.empty() && kv.empty()) {
      // no top-level keys
    } else {
      throw ConfigError("unknown section [" + section + "]");
    }
  }
  cfg.model.validate();
  cfg.train.validate();
  cfg.data.validate();
  return cfg;
}

inline AppConfig load_app_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_app_config(ss.str());
}

}  // namespace hrseg
