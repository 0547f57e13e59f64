#include "cmrf/imagery.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

namespace cmrf {

namespace fs = std::filesystem;

Image::Image(int width, int height, int channels)
    : Image(width, height, channels,
            std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                      std::max(height, 0) * std::max(channels, 0))) {}

Image::Image(int width, int height, int channels, std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  if (width < 1 || height < 1) throw std::invalid_argument("Image: width and height must be >= 1");
  if (channels != 1 && channels != 3) throw std::invalid_argument("Image: channels must be 1 or 3");
  if (data_.size() != static_cast<std::size_t>(width) * height * channels)
    throw std::invalid_argument("Image: data length does not match dimensions");
}

DisparityImage::DisparityImage(int width, int height)
    : width_(width),
      height_(height),
      values_(static_cast<std::size_t>(width) * height, 0.0f),
      valid_(static_cast<std::size_t>(width) * height, 0) {
  if (width < 1 || height < 1)
    throw std::invalid_argument("DisparityImage: width and height must be >= 1");
}

void DisparityImage::set(int u, int v, float d) {
  if (!std::isfinite(d) || d < 0.0f)
    throw std::invalid_argument("DisparityImage: valid disparities must be finite and >= 0");
  values_[index(u, v)] = d;
  valid_[index(u, v)] = 1;
}

void DisparityImage::invalidate(int u, int v) {
  values_[index(u, v)] = 0.0f;
  valid_[index(u, v)] = 0;
}

std::size_t DisparityImage::valid_count() const {
  return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), std::uint8_t{1}));
}

void GroundTruth::check() const {
  if (mask.size() != disparity.size())
    throw std::invalid_argument("GroundTruth: mask dimensions differ from disparity");
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i] != Visibility::Unknown && !disparity.valid(i))
      throw std::invalid_argument("GroundTruth: known mask pixel without a valid disparity");
}

const char* to_string(IoErrorKind kind) {
  switch (kind) {
    case IoErrorKind::FileNotFound: return "file not found";
    case IoErrorKind::UnsupportedFormat: return "unsupported format";
    case IoErrorKind::CorruptData: return "corrupt data";
    case IoErrorKind::FormatMismatch: return "format mismatch";
    case IoErrorKind::DimensionOverflow: return "dimension overflow";
    case IoErrorKind::ValueOutOfRange: return "value out of range";
    case IoErrorKind::WriteFailed: return "write failed";
  }
  return "unknown";
}

IoError::IoError(IoErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_for_read(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw IoError(IoErrorKind::FileNotFound, path.string());
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError(IoErrorKind::FileNotFound, path.string());
  return f;
}

FilePtr open_for_write(const fs::path& path) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError(IoErrorKind::WriteFailed, path.string());
  return f;
}

void check_dimensions(long long w, long long h, const fs::path& path) {
  if (w < 1 || h < 1 || w > kMaxDimension || h > kMaxDimension)
    throw IoError(IoErrorKind::DimensionOverflow,
                  path.string() + " (" + std::to_string(w) + "x" + std::to_string(h) + ")");
}

bool has_png_signature(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

// Raw PNG decode result: 1, 2, 3 or 4 channels of 8 or 16 bits.
struct PngRaster {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> bytes;  // 16-bit samples in host order
};

struct PngReadGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadGuard() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct PngWriteGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriteGuard() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

void png_warning_sink(png_structp, png_const_charp) {}

// libpng reports failures through longjmp; every object touched after setjmp
// is declared before it.
bool decode_png(std::FILE* file, PngRaster& out, std::string& error) {
  PngReadGuard g;
  g.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warning_sink);
  if (!g.png) {
    error = "png_create_read_struct failed";
    return false;
  }
  g.info = png_create_info_struct(g.png);
  if (!g.info) {
    error = "png_create_info_struct failed";
    return false;
  }
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(g.png))) {
    error = "libpng decode error";
    return false;
  }
  png_init_io(g.png, file);
  png_read_info(g.png, g.info);
  const png_uint_32 w = png_get_image_width(g.png, g.info);
  const png_uint_32 h = png_get_image_height(g.png, g.info);
  const int color = png_get_color_type(g.png, g.info);
  const int depth = png_get_bit_depth(g.png, g.info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(g.png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(g.png);
  if (png_get_valid(g.png, g.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(g.png);
  if (depth == 16 && std::endian::native == std::endian::little) png_set_swap(g.png);
  png_read_update_info(g.png, g.info);
  out.width = static_cast<int>(std::min<png_uint_32>(w, std::numeric_limits<int>::max()));
  out.height = static_cast<int>(std::min<png_uint_32>(h, std::numeric_limits<int>::max()));
  out.channels = png_get_channels(g.png, g.info);
  out.bit_depth = png_get_bit_depth(g.png, g.info);
  if (w > static_cast<png_uint_32>(kMaxDimension) || h > static_cast<png_uint_32>(kMaxDimension)) {
    error = "dimensions";
    return false;
  }
  const std::size_t rowbytes = png_get_rowbytes(g.png, g.info);
  out.bytes.resize(rowbytes * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = out.bytes.data() + y * rowbytes;
  png_read_image(g.png, rows.data());
  png_read_end(g.png, nullptr);
  return true;
}

PngRaster read_png(const fs::path& path) {
  FilePtr f = open_for_read(path);
  PngRaster raster;
  std::string error;
  if (!decode_png(f.get(), raster, error)) {
    if (error == "dimensions") check_dimensions(raster.width, raster.height, path);
    throw IoError(IoErrorKind::CorruptData, path.string() + ": " + error);
  }
  return raster;
}

bool encode_png(std::FILE* file, const std::uint8_t* data, int width, int height, int color_type,
                int bit_depth, int channels) {
  PngWriteGuard g;
  g.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warning_sink);
  if (!g.png) return false;
  g.info = png_create_info_struct(g.png);
  if (!g.info) return false;
  if (setjmp(png_jmpbuf(g.png))) return false;
  png_init_io(g.png, file);
  png_set_IHDR(g.png, g.info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(g.png, g.info);
  if (bit_depth == 16 && std::endian::native == std::endian::little) png_set_swap(g.png);
  const std::size_t rowbytes = static_cast<std::size_t>(width) * channels * (bit_depth / 8);
  for (int y = 0; y < height; ++y)
    png_write_row(g.png, const_cast<png_bytep>(data + static_cast<std::size_t>(y) * rowbytes));
  png_write_end(g.png, nullptr);
  return true;
}

void write_png(const fs::path& path, const std::uint8_t* data, int width, int height,
               int color_type, int bit_depth, int channels) {
  FilePtr f = open_for_write(path);
  if (!encode_png(f.get(), data, width, height, color_type, bit_depth, channels))
    throw IoError(IoErrorKind::WriteFailed, path.string());
  if (std::fflush(f.get()) != 0) throw IoError(IoErrorKind::WriteFailed, path.string());
}

// Reads one whitespace-delimited header token of a PNM/PFM file, skipping comments.
bool next_token(std::istream& in, std::string& token) {
  token.clear();
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (!std::isspace(c)) {
      token.push_back(static_cast<char>(c));
      break;
    }
  }
  if (token.empty()) return false;
  while ((c = in.peek()) != EOF && !std::isspace(c)) token.push_back(static_cast<char>(in.get()));
  return true;
}

long long parse_int(const std::string& token, const fs::path& path) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw IoError(IoErrorKind::CorruptData, path.string() + ": bad header token '" + token + "'");
  }
}

Image read_pnm(const fs::path& path) {
  open_for_read(path);
  std::ifstream in(path, std::ios::binary);
  std::string magic, tw, th, tmax;
  if (!next_token(in, magic)) throw IoError(IoErrorKind::CorruptData, path.string());
  const int channels = magic == "P5" ? 1 : magic == "P6" ? 3 : 0;
  if (channels == 0) throw IoError(IoErrorKind::UnsupportedFormat, path.string() + ": " + magic);
  if (!next_token(in, tw) || !next_token(in, th) || !next_token(in, tmax))
    throw IoError(IoErrorKind::CorruptData, path.string() + ": truncated header");
  const long long w = parse_int(tw, path), h = parse_int(th, path), maxval = parse_int(tmax, path);
  check_dimensions(w, h, path);
  if (maxval != 255)
    throw IoError(IoErrorKind::UnsupportedFormat, path.string() + ": only 8-bit PNM is supported");
  in.get();  // single whitespace after maxval
  std::vector<std::uint8_t> data(static_cast<std::size_t>(w * h * channels));
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (in.gcount() != static_cast<std::streamsize>(data.size()))
    throw IoError(IoErrorKind::CorruptData, path.string() + ": truncated pixel data");
  return Image(static_cast<int>(w), static_cast<int>(h), channels, std::move(data));
}

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

}  // namespace

Image load_image(const fs::path& path) {
  open_for_read(path);
  if (has_png_signature(path)) {
    PngRaster r = read_png(path);
    if (r.bit_depth != 8)
      throw IoError(IoErrorKind::UnsupportedFormat, path.string() + ": not an 8-bit image");
    const std::size_t n = static_cast<std::size_t>(r.width) * r.height;
    const int out_channels = r.channels <= 2 ? 1 : 3;
    std::vector<std::uint8_t> data(n * out_channels);
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < out_channels; ++c) data[i * out_channels + c] = r.bytes[i * r.channels + c];
    return Image(r.width, r.height, out_channels, std::move(data));
  }
  std::ifstream in(path, std::ios::binary);
  char magic[2] = {};
  in.read(magic, 2);
  if (in.gcount() == 2 && magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6'))
    return read_pnm(path);
  throw IoError(IoErrorKind::UnsupportedFormat, path.string());
}

void save_image(const Image& image, const fs::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".pgm" || ext == ".ppm") {
    if ((ext == ".pgm") != (image.channels() == 1))
      throw IoError(IoErrorKind::FormatMismatch, path.string() + ": channel count vs extension");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(IoErrorKind::WriteFailed, path.string());
    out << (image.channels() == 1 ? "P5" : "P6") << '\n'
        << image.width() << ' ' << image.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.data().data()),
              static_cast<std::streamsize>(image.data().size()));
    if (!out) throw IoError(IoErrorKind::WriteFailed, path.string());
    return;
  }
  write_png(path, image.data().data(), image.width(), image.height(),
            image.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, 8, image.channels());
}

std::vector<std::uint16_t> load_png16(const fs::path& path, int& width, int& height) {
  open_for_read(path);
  if (!has_png_signature(path)) throw IoError(IoErrorKind::FormatMismatch, path.string() + ": not a PNG");
  PngRaster r = read_png(path);
  if (r.bit_depth != 16 || r.channels != 1)
    throw IoError(IoErrorKind::FormatMismatch, path.string() + ": expected 16-bit single channel PNG");
  width = r.width;
  height = r.height;
  std::vector<std::uint16_t> values(static_cast<std::size_t>(r.width) * r.height);
  std::memcpy(values.data(), r.bytes.data(), values.size() * sizeof(std::uint16_t));
  return values;
}

void save_png16(std::span<const std::uint16_t> values, int width, int height, const fs::path& path) {
  if (values.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("save_png16: size mismatch");
  write_png(path, reinterpret_cast<const std::uint8_t*>(values.data()), width, height,
            PNG_COLOR_TYPE_GRAY, 16, 1);
}

namespace {

DisparityImage read_pfm(const fs::path& path) {
  open_for_read(path);
  std::ifstream in(path, std::ios::binary);
  std::string magic, tw, th, tscale;
  if (!next_token(in, magic)) throw IoError(IoErrorKind::CorruptData, path.string());
  if (magic == "PF") throw IoError(IoErrorKind::FormatMismatch, path.string() + ": color PFM");
  if (magic != "Pf") throw IoError(IoErrorKind::FormatMismatch, path.string() + ": not a PFM");
  if (!next_token(in, tw) || !next_token(in, th) || !next_token(in, tscale))
    throw IoError(IoErrorKind::CorruptData, path.string() + ": truncated header");
  const long long w = parse_int(tw, path), h = parse_int(th, path);
  check_dimensions(w, h, path);
  double scale = 0.0;
  try {
    scale = std::stod(tscale);
  } catch (const std::exception&) {
    throw IoError(IoErrorKind::CorruptData, path.string() + ": bad scale");
  }
  if (scale == 0.0 || !std::isfinite(scale))
    throw IoError(IoErrorKind::CorruptData, path.string() + ": bad scale");
  const bool file_little = scale < 0.0;
  in.get();
  std::vector<std::uint32_t> raw(static_cast<std::size_t>(w * h));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
  if (in.gcount() != static_cast<std::streamsize>(raw.size() * 4))
    throw IoError(IoErrorKind::CorruptData, path.string() + ": truncated pixel data");
  const bool host_little = std::endian::native == std::endian::little;
  DisparityImage d(static_cast<int>(w), static_cast<int>(h));
  for (long long row = 0; row < h; ++row) {
    const int v = static_cast<int>(h - 1 - row);  // PFM rows run bottom to top
    for (long long u = 0; u < w; ++u) {
      std::uint32_t bits = raw[static_cast<std::size_t>(row * w + u)];
      if (file_little != host_little) bits = __builtin_bswap32(bits);
      const float value = std::bit_cast<float>(bits);
      if (std::isfinite(value) && value > 0.0f) d.set(static_cast<int>(u), v, value);
    }
  }
  return d;
}

void write_pfm(const DisparityImage& d, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(IoErrorKind::WriteFailed, path.string());
  const bool host_little = std::endian::native == std::endian::little;
  out << "Pf\n" << d.width() << ' ' << d.height() << '\n' << (host_little ? "-1.0" : "1.0") << '\n';
  std::vector<float> row(static_cast<std::size_t>(d.width()));
  for (int v = d.height() - 1; v >= 0; --v) {
    for (int u = 0; u < d.width(); ++u)
      row[u] = d.valid(u, v) ? d.at(u, v) : std::numeric_limits<float>::infinity();
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
  }
  if (!out) throw IoError(IoErrorKind::WriteFailed, path.string());
}

}  // namespace

DisparityImage load_disparity(const fs::path& path, DisparityFormat format) {
  if (format == DisparityFormat::Pfm) return read_pfm(path);
  int w = 0, h = 0;
  const std::vector<std::uint16_t> raw = load_png16(path, w, h);
  DisparityImage d(w, h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const std::uint16_t s = raw[static_cast<std::size_t>(v) * w + u];
      if (s != 0) d.set(u, v, static_cast<float>(s / 256.0));
    }
  return d;
}

void save_disparity(const DisparityImage& d, const fs::path& path, DisparityFormat format) {
  if (format == DisparityFormat::Pfm) {
    write_pfm(d, path);
    return;
  }
  std::vector<std::uint16_t> raw(d.size(), 0);
  for (int v = 0; v < d.height(); ++v)
    for (int u = 0; u < d.width(); ++u) {
      if (!d.valid(u, v)) continue;
      const double scaled = std::round(static_cast<double>(d.at(u, v)) * 256.0);
      if (scaled > 65535.0)
        throw IoError(IoErrorKind::ValueOutOfRange,
                      path.string() + ": disparity " + std::to_string(d.at(u, v)) + " exceeds png16 range");
      raw[static_cast<std::size_t>(v) * d.width() + u] = static_cast<std::uint16_t>(scaled);
    }
  save_png16(raw, d.width(), d.height(), path);
}

DisparityFormat disparity_format_for(const fs::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".pfm") return DisparityFormat::Pfm;
  if (ext == ".png") return DisparityFormat::Png16;
  throw IoError(IoErrorKind::UnsupportedFormat, path.string() + ": expected .png or .pfm");
}

std::vector<Visibility> load_mask(const fs::path& path, int& width, int& height) {
  const Image img = load_image(path);
  if (img.channels() != 1)
    throw IoError(IoErrorKind::FormatMismatch, path.string() + ": mask must be grayscale");
  width = img.width();
  height = img.height();
  std::vector<Visibility> mask(static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const std::uint8_t s = img.data()[i];
    mask[i] = s >= 192 ? Visibility::NonOccluded : s >= 64 ? Visibility::Occluded : Visibility::Unknown;
  }
  return mask;
}

void save_mask(const std::vector<Visibility>& mask, int width, int height, const fs::path& path) {
  if (mask.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("save_mask: size mismatch");
  std::vector<std::uint8_t> data(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i)
    data[i] = mask[i] == Visibility::NonOccluded ? 255 : mask[i] == Visibility::Occluded ? 128 : 0;
  save_image(Image(width, height, 1, std::move(data)), path);
}

}  // namespace cmrf
