#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace augsearch {

// Row-major interleaved byte image, 1 (gray) or 3 (RGB) channels.
struct ImageBuffer {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;

  static ImageBuffer filled(int h, int w, int c, std::uint8_t value) {
    ImageBuffer img;
    img.height = h;
    img.width = w;
    img.channels = c;
    img.pixels.assign(static_cast<std::size_t>(h) * w * c, value);
    return img;
  }

  std::uint8_t& at(int y, int x, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  std::size_t sample_count() const { return pixels.size(); }

  bool same_shape(const ImageBuffer& other) const {
    return height == other.height && width == other.width &&
           channels == other.channels;
  }
};

inline void validate_image(const ImageBuffer& img) {
  if (img.height <= 0 || img.width <= 0)
    throw std::invalid_argument("image has zero area");
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("image channels must be 1 or 3, got " +
                                std::to_string(img.channels));
  const std::size_t expect =
      static_cast<std::size_t>(img.height) * img.width * img.channels;
  if (img.pixels.size() != expect)
    throw std::invalid_argument("image pixel count " +
                                std::to_string(img.pixels.size()) +
                                " does not match dimensions");
}

// Golden-fixture format: "height width channels\n" followed by raw bytes.
inline void write_fixture(std::ostream& os, const ImageBuffer& img) {
  os << img.height << ' ' << img.width << ' ' << img.channels << '\n';
  os.write(reinterpret_cast<const char*>(img.pixels.data()),
           static_cast<std::streamsize>(img.pixels.size()));
}

inline void write_fixture(const std::string& path, const ImageBuffer& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open fixture for writing: " + path);
  write_fixture(os, img);
}

inline ImageBuffer read_fixture(std::istream& is) {
  ImageBuffer img;
  if (!(is >> img.height >> img.width >> img.channels))
    throw std::runtime_error("malformed fixture header");
  is.get();  // consume '\n'
  img.pixels.resize(static_cast<std::size_t>(img.height) * img.width *
                    img.channels);
  is.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (static_cast<std::size_t>(is.gcount()) != img.pixels.size())
    throw std::runtime_error("fixture truncated");
  validate_image(img);
  return img;
}

inline ImageBuffer read_fixture(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open fixture: " + path);
  return read_fixture(is);
}

}  // namespace augsearch
