#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hrseg/core/errors.hpp"
#include "hrseg/nn/fuse.hpp"

namespace hrseg {

enum class Guidance { none, single, multi };  // none: high-resolution path only
enum class HeadMode { single_step, double_step };

// Declarative description of one HrSegNet variant.
struct ModelConfig {
  int base = 16;                 // HR-path channel width (B16/B32/B48)
  int hr_down = 4;               // HR resolution = input / hr_down, in {2,4,8}
  int num_blocks = 3;
  int layers_per_block = 3;
  Guidance guidance = Guidance::single;
  Fusion fusion = Fusion::sum;
  HeadMode head = HeadMode::double_step;
  std::vector<int> aux_heads = {1, 2};  // 1-based HrSeg block indices
  int num_classes = 2;

  void validate() const {
    if (base < 1) throw ConfigError("base must be >= 1");
    if (hr_down != 2 && hr_down != 4 && hr_down != 8) {
      throw ConfigError("hr_resolution must be 1/2, 1/4 or 1/8");
    }
    if (num_blocks < 1) throw ConfigError("num_blocks must be >= 1");
    if (layers_per_block < 1) throw ConfigError("layers_per_block must be >= 1");
    if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
    std::set<int> seen;
    for (int b : aux_heads) {
      if (b < 1 || b > num_blocks) {
        throw ConfigError("aux head h" + std::to_string(b) + " refers to a block outside 1.." +
                          std::to_string(num_blocks));
      }
      if (!seen.insert(b).second) {
        throw ConfigError("duplicate aux head h" + std::to_string(b));
      }
    }
  }

  bool has_aux(int block) const {
    return std::find(aux_heads.begin(), aux_heads.end(), block) != aux_heads.end();
  }
};

inline std::string to_string(Guidance g) {
  switch (g) {
    case Guidance::none: return "none";
    case Guidance::single: return "single";
    case Guidance::multi: return "multi";
  }
  return "single";
}
inline std::string to_string(Fusion f) { return f == Fusion::sum ? "sum" : "mul"; }
inline std::string to_string(HeadMode h) { return h == HeadMode::single_step ? "single" : "double"; }

inline std::string hr_resolution_str(int hr_down) { return "1/" + std::to_string(hr_down); }

// Key/value form used by both the config file's [model] section and the
// checkpoint's embedded config string.
inline std::map<std::string, std::string> model_config_to_map(const ModelConfig& c) {
  std::map<std::string, std::string> m;
  m["base"] = std::to_string(c.base);
  m["hr_resolution"] = hr_resolution_str(c.hr_down);
  m["num_blocks"] = std::to_string(c.num_blocks);
  m["layers_per_block"] = std::to_string(c.layers_per_block);
  m["guidance"] = to_string(c.guidance);
  m["fusion"] = to_string(c.fusion);
  m["head"] = to_string(c.head);
  std::string aux;
  for (int b : c.aux_heads) {
    if (!aux.empty()) aux += ",";
    aux += "h" + std::to_string(b);
  }
  m["aux_heads"] = aux.empty() ? "none" : aux;
  m["num_classes"] = std::to_string(c.num_classes);
  return m;
}

namespace detail {

inline int parse_int_value(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' expects an integer, got '" + v + "'");
  }
}

}  // namespace detail

// Parses a [model] key/value map. Unknown keys are hard errors.
inline ModelConfig model_config_from_map(const std::map<std::string, std::string>& m) {
  ModelConfig c;
  for (const auto& [key, value] : m) {
    if (key == "base") {
      c.base = detail::parse_int_value(key, value);
    } else if (key == "hr_resolution") {
      if (value == "1/2") c.hr_down = 2;
      else if (value == "1/4") c.hr_down = 4;
      else if (value == "1/8") c.hr_down = 8;
      else throw ConfigError("hr_resolution must be 1/2, 1/4 or 1/8, got '" + value + "'");
    } else if (key == "num_blocks") {
      c.num_blocks = detail::parse_int_value(key, value);
    } else if (key == "layers_per_block") {
      c.layers_per_block = detail::parse_int_value(key, value);
    } else if (key == "guidance") {
      if (value == "none") c.guidance = Guidance::none;
      else if (value == "single") c.guidance = Guidance::single;
      else if (value == "multi") c.guidance = Guidance::multi;
      else throw ConfigError("guidance must be none, single or multi, got '" + value + "'");
    } else if (key == "fusion") {
      if (value == "sum") c.fusion = Fusion::sum;
      else if (value == "mul") c.fusion = Fusion::mul;
      else throw ConfigError("fusion must be sum or mul, got '" + value + "'");
    } else if (key == "head") {
      if (value == "single") c.head = HeadMode::single_step;
      else if (value == "double") c.head = HeadMode::double_step;
      else throw ConfigError("head must be single or double, got '" + value + "'");
    } else if (key == "aux_heads") {
      c.aux_heads.clear();
      if (value != "none" && !value.empty()) {
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
          if (item.size() < 2 || item[0] != 'h') {
            throw ConfigError("aux_heads entries look like h1,h2; got '" + item + "'");
          }
          c.aux_heads.push_back(detail::parse_int_value(key, item.substr(1)));
        }
      }
    } else if (key == "num_classes") {
      c.num_classes = detail::parse_int_value(key, value);
    } else {
      throw ConfigError("unknown key '" + key + "' in [model]");
    }
  }
  c.validate();
  return c;
}

}  // namespace hrseg
