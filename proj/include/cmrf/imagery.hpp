#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmrf {

/// Integer pixel coordinate; u runs along columns, v along rows.
struct Pixel {
  int u = 0;
  int v = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// 8-bit raster, row-major, interleaved channels. Color images are RGB.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels);
  Image(int width, int height, int channels, std::vector<std::uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  std::uint8_t at(int u, int v, int c = 0) const {
    return data_[(static_cast<std::size_t>(v) * width_ + u) * channels_ + c];
  }
  std::uint8_t& at(int u, int v, int c = 0) {
    return data_[(static_cast<std::size_t>(v) * width_ + u) * channels_ + c];
  }
  std::span<const std::uint8_t> data() const { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Per-pixel disparity with an explicit validity flag. Invalid pixels carry
/// no value; valid values are finite and non-negative.
class DisparityImage {
 public:
  DisparityImage() = default;
  DisparityImage(int width, int height);  // all invalid

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return values_.size(); }

  bool valid(int u, int v) const { return valid_[index(u, v)] != 0; }
  float at(int u, int v) const { return values_[index(u, v)]; }
  /// Stores a valid disparity; throws std::invalid_argument if d < 0 or d is not finite.
  void set(int u, int v, float d);
  void invalidate(int u, int v);

  bool valid(std::size_t i) const { return valid_[i] != 0; }
  float at(std::size_t i) const { return values_[i]; }

  std::size_t valid_count() const;

  friend bool operator==(const DisparityImage&, const DisparityImage&) = default;

 private:
  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width_ + u; }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> values_;
  std::vector<std::uint8_t> valid_;
};

enum class Visibility : std::uint8_t { NonOccluded, Occluded, Unknown };

struct GroundTruth {
  DisparityImage disparity;
  std::vector<Visibility> mask;  // row-major, same dimensions as disparity

  Visibility visibility(int u, int v) const {
    return mask[static_cast<std::size_t>(v) * disparity.width() + u];
  }
  /// Throws std::invalid_argument when the mask size or validity is inconsistent.
  void check() const;
};

enum class DisparityFormat { Png16, Pfm };

enum class IoErrorKind {
  FileNotFound,
  UnsupportedFormat,
  CorruptData,
  FormatMismatch,
  DimensionOverflow,
  ValueOutOfRange,
  WriteFailed,
};

const char* to_string(IoErrorKind kind);

class IoError : public std::runtime_error {
 public:
  IoError(IoErrorKind kind, const std::string& what);
  IoErrorKind kind() const { return kind_; }

 private:
  IoErrorKind kind_;
};

/// Largest accepted width or height for any decoded raster.
inline constexpr int kMaxDimension = 1 << 15;

/// Decodes 8-bit PNG (gray, gray+alpha, RGB, RGBA, palette), PGM (P5) or
/// PPM (P6). Alpha is dropped; palette images expand to RGB.
Image load_image(const std::filesystem::path& path);

/// Writes PNG, or binary PGM/PPM when the extension is .pgm/.ppm.
void save_image(const Image& image, const std::filesystem::path& path);

/// png16: stored value v means disparity v/256 with v = 0 invalid.
/// pfm: 32-bit floats, non-positive or non-finite values are invalid.
DisparityImage load_disparity(const std::filesystem::path& path, DisparityFormat format);

/// Valid zero disparities cannot be represented by either container and
/// reload as invalid. png16 rejects disparities that round above 65535.
void save_disparity(const DisparityImage& d, const std::filesystem::path& path,
                    DisparityFormat format);

/// Picks the container from the file extension (.png -> png16, .pfm -> pfm).
DisparityFormat disparity_format_for(const std::filesystem::path& path);

/// Mask PNG encoding: 255 non-occluded, 128 occluded, 0 unknown.
std::vector<Visibility> load_mask(const std::filesystem::path& path, int& width, int& height);
void save_mask(const std::vector<Visibility>& mask, int width, int height,
               const std::filesystem::path& path);

/// 16-bit single channel PNG of raw values (used for label maps).
void save_png16(std::span<const std::uint16_t> values, int width, int height,
                const std::filesystem::path& path);
std::vector<std::uint16_t> load_png16(const std::filesystem::path& path, int& width, int& height);

}  // namespace cmrf
