#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "hrseg/core/tensor.hpp"
#include "hrseg/data/png_io.hpp"

namespace hrseg {

// One image/mask pair: image (1,3,H,W) in [0,1], mask (1,1,H,W) class ids
// {0 background, 1 crack}.
struct Sample {
  Tensor<float> image;
  Tensor<float> mask;
};

inline Tensor<float> image_to_tensor(const ImageU8& img) {
  Tensor<float> t(1, 3, img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const int src_c = img.channels == 1 ? 0 : c;
        t(0, c, y, x) = static_cast<float>(img.at(y, x, src_c)) / 255.0f;
      }
    }
  }
  return t;
}

inline ImageU8 tensor_to_image(const Tensor<float>& t) {
  ImageU8 img;
  img.width = static_cast<int>(t.w());
  img.height = static_cast<int>(t.h());
  img.channels = static_cast<int>(t.c()) == 1 ? 1 : 3;
  img.pixels.resize(static_cast<size_t>(img.width) * img.height * img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        const float v = std::clamp(t(0, c, y, x), 0.0f, 1.0f);
        img.at(y, x, c) = static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    }
  }
  return img;
}

inline Tensor<float> read_image(const std::string& path) {
  return image_to_tensor(read_png(path));
}

// Masks travel as 8-bit grayscale PNG with 0 -> background, 255 -> crack.
inline void write_mask(const std::string& path, const Tensor<float>& mask) {
  ImageU8 img;
  img.width = static_cast<int>(mask.w());
  img.height = static_cast<int>(mask.h());
  img.channels = 1;
  img.pixels.resize(static_cast<size_t>(img.width) * img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const float v = mask(0, 0, y, x);
      if (v != 0.0f && v != 1.0f) {
        throw DataError("mask tensor value " + std::to_string(v) + " outside {0,1}");
      }
      img.at(y, x, 0) = v == 1.0f ? 255 : 0;
    }
  }
  write_png(path, img);
}

inline Tensor<float> read_mask(const std::string& path) {
  const ImageU8 img = read_png(path);
  if (img.channels != 1) {
    throw DataError("mask '" + path + "' must be single-channel grayscale");
  }
  Tensor<float> mask(1, 1, img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const unsigned char v = img.at(y, x, 0);
      if (v != 0 && v != 255) {
        throw DataError("mask '" + path + "' contains value " + std::to_string(int(v)) +
                        ", expected only 0 or 255");
      }
      mask(0, 0, y, x) = v == 255 ? 1.0f : 0.0f;
    }
  }
  return mask;
}

inline std::string index_name(const char* stem, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%04d.png", stem, index);
  return buf;
}

// Directory of image_XXXX.png / mask_XXXX.png pairs.
class Dataset {
 public:
  explicit Dataset(const std::string& dir) : dir_(dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir_)) {
      throw DataError("dataset directory '" + dir + "' does not exist");
    }
    std::vector<int> images, masks;
    for (const auto& entry : fs::directory_iterator(dir_)) {
      const std::string name = entry.path().filename().string();
      int idx = 0;
      if (std::sscanf(name.c_str(), "image_%d.png", &idx) == 1 &&
          name == index_name("image", idx)) {
        images.push_back(idx);
      } else if (std::sscanf(name.c_str(), "mask_%d.png", &idx) == 1 &&
                 name == index_name("mask", idx)) {
        masks.push_back(idx);
      }
    }
    std::sort(images.begin(), images.end());
    std::sort(masks.begin(), masks.end());
    std::vector<int> unmatched;
    std::set_symmetric_difference(images.begin(), images.end(), masks.begin(), masks.end(),
                                  std::back_inserter(unmatched));
    if (!unmatched.empty()) {
      std::string list;
      for (int i : unmatched) list += (list.empty() ? "" : ", ") + std::to_string(i);
      throw DataError("unmatched image/mask pairs in '" + dir + "' at indices: " + list);
    }
    if (images.empty()) throw DataError("no image_XXXX.png/mask_XXXX.png pairs in '" + dir + "'");
    indices_ = std::move(images);
  }

  int64_t size() const { return static_cast<int64_t>(indices_.size()); }

  Sample load(int64_t i) const {
    const int idx = indices_[static_cast<size_t>(i)];
    Sample s;
    s.image = read_image(dir_ + "/" + index_name("image", idx));
    s.mask = read_mask(dir_ + "/" + index_name("mask", idx));
    if (s.image.h() != s.mask.h() || s.image.w() != s.mask.w()) {
      throw DataError("image/mask extents differ for index " + std::to_string(idx));
    }
    return s;
  }

  const std::vector<int>& indices() const { return indices_; }

 private:
  std::string dir_;
  std::vector<int> indices_;
};

}  // namespace hrseg
