#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "hrseg/core/ini.hpp"
#include "hrseg/model/model.hpp"

namespace hrseg {

// Checkpoint wire format (little-endian):
//   magic "HRSG" | version u32 | config length u32 + UTF-8 bytes |
//   tensor count u32 | per tensor: name length u32, name, ndim u32,
//   extents u32 each, payload f32.
// The config string is INI text: [model], optional [data] normalization
// constants and optional [state] iter. Optimizer state rides along as extra
// tensors under the reserved "opt." prefix.
inline constexpr uint32_t kCheckpointVersion = 1;

struct CheckpointExtras {
  std::map<std::string, std::vector<float>> velocities;  // keyed by learnable name
  int64_t iter = -1;                                     // < 0: not a training snapshot
  std::array<float, 3> norm_mean{0.5f, 0.5f, 0.5f};
  std::array<float, 3> norm_std{0.5f, 0.5f, 0.5f};
};

namespace detail {

inline void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw FormatError("truncated checkpoint");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

inline void put_f32_payload(std::ostream& out, const float* data, int64_t count) {
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(count) * 4);
}

inline std::string fmt_float(double v) {
  std::ostringstream ss;
  ss.precision(9);
  ss << v;
  return ss.str();
}

}  // namespace detail

inline void save_checkpoint(Model<float>& model, const std::string& path,
                            const CheckpointExtras* extras = nullptr) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");

  IniDoc doc;
  doc["model"] = model_config_to_map(model.config());
  if (extras) {
    doc["data"]["mean"] = detail::fmt_float(extras->norm_mean[0]) + "," +
                          detail::fmt_float(extras->norm_mean[1]) + "," +
                          detail::fmt_float(extras->norm_mean[2]);
    doc["data"]["std"] = detail::fmt_float(extras->norm_std[0]) + "," +
                         detail::fmt_float(extras->norm_std[1]) + "," +
                         detail::fmt_float(extras->norm_std[2]);
    if (extras->iter >= 0) doc["state"]["iter"] = std::to_string(extras->iter);
  }
  const std::string config_text = serialize_ini(doc);

  out.write("HRSG", 4);
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, static_cast<uint32_t>(config_text.size()));
  out.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));

  auto views = model.registry();
  uint32_t count = static_cast<uint32_t>(views.size());
  if (extras) count += static_cast<uint32_t>(extras->velocities.size());
  detail::put_u32(out, count);

  auto write_tensor = [&](const std::string& name, const std::vector<uint32_t>& extents,
                          const float* data, int64_t n) {
    detail::put_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put_u32(out, static_cast<uint32_t>(extents.size()));
    for (uint32_t e : extents) detail::put_u32(out, e);
    detail::put_f32_payload(out, data, n);
  };

  for (const auto& v : views) write_tensor(v.name, v.extents, v.data, v.count);
  if (extras) {
    for (const auto& [name, vel] : extras->velocities) {
      write_tensor("opt.v." + name, {static_cast<uint32_t>(vel.size())}, vel.data(),
                   static_cast<int64_t>(vel.size()));
    }
  }
  out.flush();
  if (!out) throw IoError("write failed for '" + path + "'");
}

struct LoadedCheckpoint {
  Model<float> model;
  CheckpointExtras extras;
};

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "HRSG", 4) != 0) {
    throw FormatError("bad magic in '" + path + "'");
  }
  const uint32_t version = detail::get_u32(in);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const uint32_t config_len = detail::get_u32(in);
  if (config_len > (1u << 20)) throw FormatError("implausible config length");
  std::string config_text(config_len, '\0');
  in.read(config_text.data(), config_len);
  if (!in) throw FormatError("truncated checkpoint");

  const IniDoc doc = parse_ini(config_text);
  if (!doc.count("model")) throw FormatError("checkpoint config lacks [model]");
  const ModelConfig config = model_config_from_map(doc.at("model"));

  const uint32_t tensor_count = detail::get_u32(in);
  if (tensor_count > (1u << 20)) throw FormatError("implausible tensor count");

  struct Stored {
    std::vector<uint32_t> extents;
    std::vector<float> payload;
    bool used = false;
  };
  std::map<std::string, Stored> stored;
  std::vector<std::string> order;
  for (uint32_t t = 0; t < tensor_count; ++t) {
    const uint32_t name_len = detail::get_u32(in);
    if (name_len == 0 || name_len > 4096) throw FormatError("implausible tensor name length");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw FormatError("truncated checkpoint");
    const uint32_t ndim = detail::get_u32(in);
    if (ndim == 0 || ndim > 8) throw FormatError("implausible tensor rank");
    Stored s;
    uint64_t count = 1;
    for (uint32_t d = 0; d < ndim; ++d) {
      const uint32_t e = detail::get_u32(in);
      if (e == 0) throw FormatError("zero tensor extent");
      s.extents.push_back(e);
      count *= e;
      if (count > (1ull << 34)) throw FormatError("implausible tensor size");
    }
    s.payload.resize(count);
    in.read(reinterpret_cast<char*>(s.payload.data()),
            static_cast<std::streamsize>(count) * 4);
    if (!in) throw FormatError("truncated checkpoint");
    if (stored.count(name)) throw FormatError("duplicate tensor '" + name + "'");
    order.push_back(name);
    stored.emplace(std::move(name), std::move(s));
  }

  LoadedCheckpoint loaded;
  loaded.model = Model<float>::build(config, /*seed=*/0);
  for (auto& view : loaded.model.registry()) {
    auto it = stored.find(view.name);
    if (it == stored.end()) {
      throw IntegrityError("checkpoint is missing tensor '" + view.name + "'");
    }
    Stored& s = it->second;
    if (s.extents != view.extents) {
      std::string want, got;
      for (uint32_t e : view.extents) want += (want.empty() ? "" : "x") + std::to_string(e);
      for (uint32_t e : s.extents) got += (got.empty() ? "" : "x") + std::to_string(e);
      throw IntegrityError("tensor '" + view.name + "' extents " + got +
                           " do not match the config's " + want);
    }
    std::memcpy(view.data, s.payload.data(), static_cast<size_t>(view.count) * 4);
    s.used = true;
  }

  if (doc.count("state") && doc.at("state").count("iter")) {
    loaded.extras.iter = ini_int("state", "iter", doc.at("state").at("iter"));
  }
  if (doc.count("data")) {
    for (const auto& [key, value] : doc.at("data")) {
      std::array<float, 3>* dst = nullptr;
      if (key == "mean") dst = &loaded.extras.norm_mean;
      else if (key == "std") dst = &loaded.extras.norm_std;
      else throw FormatError("unknown key '" + key + "' in checkpoint [data]");
      std::stringstream ss(value);
      std::string item;
      for (int c = 0; c < 3; ++c) {
        if (!std::getline(ss, item, ',')) throw FormatError("[data] " + key + " needs 3 values");
        (*dst)[static_cast<size_t>(c)] = static_cast<float>(ini_double("data", key, item));
      }
    }
  }

  for (const std::string& name : order) {
    Stored& s = stored.at(name);
    if (s.used) continue;
    if (name.rfind("opt.v.", 0) == 0) {
      loaded.extras.velocities[name.substr(6)] = std::move(s.payload);
    } else {
      throw IntegrityError("unexpected tensor '" + name + "' in checkpoint");
    }
  }
  return loaded;
}

}  // namespace hrseg
