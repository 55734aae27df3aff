#include "ottv/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "atomic_file.hpp"
#include "ottv/errors.hpp"

namespace ottv {

namespace {

struct Raster {
  std::size_t width = 0;
  std::size_t height = 0;
  unsigned maxval = 255;
  std::vector<std::uint8_t> samples;
};

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

// Cursor over a PGM header: whitespace-separated decimal tokens with '#' comments.
class PgmReader {
 public:
  PgmReader(const std::string& bytes, const std::string& name) : bytes_(bytes), name_(name) {}

  unsigned next_number() {
    skip_space();
    if (pos_ >= bytes_.size() || !std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) fail("expected a number");
    unsigned long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + static_cast<unsigned long>(bytes_[pos_++] - '0');
      if (value > 1u << 30) fail("number out of range");
    }
    return static_cast<unsigned>(value);
  }

  // Binary data starts after exactly one whitespace byte following maxval.
  std::size_t binary_start() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) fail("truncated header");
    return pos_ + 1;
  }

  [[noreturn]] void fail(const std::string& what) const { throw IoError(name_ + ": malformed PGM (" + what + ")"); }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  std::string name_;
  std::size_t pos_ = 2;
};

Raster decode_pgm(const std::string& bytes, const std::string& name) {
  const bool ascii = bytes[1] == '2';
  PgmReader reader(bytes, name);
  Raster r;
  r.width = reader.next_number();
  r.height = reader.next_number();
  r.maxval = reader.next_number();
  if (r.width == 0 || r.height == 0) reader.fail("empty image");
  if (r.maxval == 0 || r.maxval > 255) throw IoError(name + ": only 8-bit PGM is supported");
  const std::size_t count = r.width * r.height;
  r.samples.resize(count);
  if (ascii) {
    for (std::size_t k = 0; k < count; ++k) {
      const unsigned value = reader.next_number();
      if (value > r.maxval) reader.fail("sample exceeds maxval");
      r.samples[k] = static_cast<std::uint8_t>(value);
    }
  } else {
    const std::size_t start = reader.binary_start();
    if (bytes.size() < start + count) reader.fail("truncated pixel data");
    for (std::size_t k = 0; k < count; ++k) {
      const auto value = static_cast<std::uint8_t>(bytes[start + k]);
      if (value > r.maxval) reader.fail("sample exceeds maxval");
      r.samples[k] = value;
    }
  }
  return r;
}

Raster decode_png(const std::string& bytes, const std::string& name) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw IoError(name + ": " + image.message);
  }
  if (image.format & (PNG_FORMAT_FLAG_COLOR | PNG_FORMAT_FLAG_ALPHA | PNG_FORMAT_FLAG_LINEAR)) {
    png_image_free(&image);
    throw IoError(name + ": only 8-bit grayscale PNG without alpha is supported");
  }
  image.format = PNG_FORMAT_GRAY;
  Raster r;
  r.width = image.width;
  r.height = image.height;
  r.samples.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, r.samples.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw IoError(name + ": " + message);
  }
  return r;
}

std::string encode_pgm(const std::vector<std::uint8_t>& samples, std::size_t n) {
  std::string out = "P5\n" + std::to_string(n) + " " + std::to_string(n) + "\n255\n";
  out.append(samples.begin(), samples.end());
  return out;
}

std::string encode_png(const std::vector<std::uint8_t>& samples, std::size_t n) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(n);
  image.height = static_cast<png_uint_32>(n);
  image.format = PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, samples.data(), 0, nullptr)) {
    throw IoError(std::string("PNG encoding failed: ") + image.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, samples.data(), 0, nullptr)) {
    throw IoError(std::string("PNG encoding failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

ScalarField load_image(const std::filesystem::path& path, double h) {
  const std::string name = path.string();
  const std::string bytes = read_bytes(path);
  Raster r;
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '2' || bytes[1] == '5')) {
    r = decode_pgm(bytes, name);
  } else if (bytes.size() >= 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) == 0) {
    r = decode_png(bytes, name);
  } else {
    throw IoError(name + ": unsupported image format");
  }
  if (r.width != r.height) {
    throw IoError(name + ": image is " + std::to_string(r.width) + "x" + std::to_string(r.height) +
                  ", only square images are supported");
  }
  if (r.width < 2) throw IoError(name + ": image must be at least 2x2");
  ScalarField field(r.width, h);
  const double scale = 1.0 / static_cast<double>(r.maxval);
  for (std::size_t k = 0; k < field.size(); ++k) field[k] = r.samples[k] * scale;
  return field;
}

std::vector<std::uint8_t> quantize(const ScalarField& field, double offset) {
  std::vector<std::uint8_t> samples(field.size());
  for (std::size_t k = 0; k < field.size(); ++k) {
    double x = field[k] + offset;
    x = std::isnan(x) ? 0.0 : std::clamp(x, 0.0, 1.0);
    samples[k] = static_cast<std::uint8_t>(std::floor(x * 255.0 + 0.5));
  }
  return samples;
}

void save_image(const ScalarField& field, const std::filesystem::path& path, double offset) {
  const std::string ext = lower_extension(path);
  const std::vector<std::uint8_t> samples = quantize(field, offset);
  std::string bytes;
  if (ext == ".pgm") {
    bytes = encode_pgm(samples, field.n());
  } else if (ext == ".png") {
    bytes = encode_png(samples, field.n());
  } else {
    throw IoError(path.string() + ": unsupported extension (use .pgm or .png)");
  }
  detail::write_file_atomic(path.string(), bytes);
}

}  // namespace ottv
