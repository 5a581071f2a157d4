#include "oneshot/synth/image_folder.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace oneshot::synth {

namespace {

namespace fs = std::filesystem;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Next header token, skipping whitespace and `#` comments.
std::string pgm_token(std::istream& in) {
  std::string token;
  for (int c = in.get(); c != EOF; c = in.get()) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
  return token;
}

std::size_t pgm_number(std::istream& in, const fs::path& path) {
  const std::string token = pgm_token(in);
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(token, &used);
    if (used == token.size()) return v;
  } catch (const std::exception&) {
  }
  throw std::runtime_error(path.string() + ": malformed PGM header");
}

}  // namespace

GrayImage read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");
  const std::string magic = pgm_token(in);
  if (magic != "P5" && magic != "P2") throw std::runtime_error(path.string() + ": not a PGM file");
  GrayImage img;
  img.width = pgm_number(in, path);
  img.height = pgm_number(in, path);
  const std::size_t maxval = pgm_number(in, path);
  if (img.width == 0 || img.height == 0 || maxval == 0 || maxval > 65535) {
    throw std::runtime_error(path.string() + ": invalid PGM dimensions or maxval");
  }
  img.pixels.resize(img.width * img.height);
  const double scale = 1.0 / static_cast<double>(maxval);
  if (magic == "P2") {
    for (double& p : img.pixels) p = std::min(1.0, static_cast<double>(pgm_number(in, path)) * scale);
    return img;
  }
  const std::size_t bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(img.pixels.size() * bytes);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw std::runtime_error(path.string() + ": truncated PGM data");
  }
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const std::size_t v = bytes == 1 ? raw[i] : (std::size_t{raw[2 * i]} << 8 | raw[2 * i + 1]);
    img.pixels[i] = std::min(1.0, static_cast<double>(v) * scale);
  }
  return img;
}

GrayImage read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw std::runtime_error(path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw std::runtime_error(path.string() + ": " + message);
  }
  GrayImage img;
  img.width = image.width;
  img.height = image.height;
  img.pixels.resize(buffer.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) img.pixels[i] = buffer[i] / 255.0;
  return img;
}

GrayImage read_gray_image(const fs::path& path) {
  const std::string ext = lower(path.extension().string());
  if (ext == ".pgm") return read_pgm(path);
  if (ext == ".png") return read_png(path);
  throw std::runtime_error(path.string() + ": unsupported image type '" + ext + "'");
}

core::Tensor to_square_tensor(const GrayImage& image, std::size_t side) {
  if (image.height == 0 || image.width == 0 || image.pixels.size() != image.height * image.width) {
    throw std::invalid_argument("to_square_tensor: empty or inconsistent image");
  }
  if (side == 0) throw std::invalid_argument("to_square_tensor: side must be positive");
  const std::size_t h = image.height, w = image.width, s = std::max(h, w);
  double border = 0.0;
  std::size_t border_count = 0;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (y == 0 || x == 0 || y + 1 == h || x + 1 == w) {
        border += image.pixels[y * w + x];
        ++border_count;
      }
    }
  }
  border /= static_cast<double>(border_count);
  std::vector<double> square(s * s, border);
  const std::size_t oy = (s - h) / 2, ox = (s - w) / 2;
  for (std::size_t y = 0; y < h; ++y) {
    std::copy_n(image.pixels.begin() + static_cast<std::ptrdiff_t>(y * w), w,
                square.begin() + static_cast<std::ptrdiff_t>((oy + y) * s + ox));
  }

  // Each output pixel averages the source area it covers, with fractional
  // coverage at its edges.
  core::Tensor out({1, side, side});
  auto v = out.values();
  const double ratio = static_cast<double>(s) / static_cast<double>(side);
  auto overlap = [](double a0, double a1, double b0, double b1) { return std::max(0.0, std::min(a1, b1) - std::max(a0, b0)); };
  for (std::size_t oyi = 0; oyi < side; ++oyi) {
    const double y0 = oyi * ratio, y1 = (oyi + 1) * ratio;
    for (std::size_t oxi = 0; oxi < side; ++oxi) {
      const double x0 = oxi * ratio, x1 = (oxi + 1) * ratio;
      double acc = 0.0, area = 0.0;
      for (auto sy = static_cast<std::size_t>(y0); sy < s && static_cast<double>(sy) < y1; ++sy) {
        const double fy = overlap(y0, y1, static_cast<double>(sy), static_cast<double>(sy + 1));
        for (auto sx = static_cast<std::size_t>(x0); sx < s && static_cast<double>(sx) < x1; ++sx) {
          const double f = fy * overlap(x0, x1, static_cast<double>(sx), static_cast<double>(sx + 1));
          acc += f * square[sy * s + sx];
          area += f;
        }
      }
      v[oyi * side + oxi] = std::clamp(acc / area, 0.0, 1.0);
    }
  }
  return out;
}

core::Tensor ImageFolder::instance(std::size_t class_index, std::uint64_t k) const {
  const auto& images = images_.at(class_index);
  if (k >= images.size()) {
    throw std::out_of_range("class '" + names_.at(class_index) + "' has " + std::to_string(images.size()) +
                            " instances, asked for " + std::to_string(k));
  }
  return images[k].clone();
}

std::shared_ptr<ImageFolder> load_image_dataset(const fs::path& directory, std::vector<std::string>* warnings) {
  if (!fs::is_directory(directory)) throw std::runtime_error(directory.string() + ": not a directory");
  std::vector<fs::path> classes;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (entry.is_directory()) classes.push_back(entry.path());
  }
  std::sort(classes.begin(), classes.end());
  if (classes.empty()) throw std::runtime_error(directory.string() + ": no class subdirectories");

  auto out = std::make_shared<ImageFolder>();
  for (const fs::path& cls : classes) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(cls)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<core::Tensor> images;
    for (const fs::path& file : files) {
      try {
        images.push_back(to_square_tensor(read_gray_image(file)));
      } catch (const std::exception& e) {
        const std::string message = std::string("skipping ") + e.what();
        if (warnings) {
          warnings->push_back(message);
        } else {
          std::cerr << "warning: " << message << '\n';
        }
      }
    }
    if (images.empty()) throw std::runtime_error(cls.string() + ": class has no readable images");
    out->names_.push_back(cls.filename().string());
    out->images_.push_back(std::move(images));
  }
  return out;
}

}  // namespace oneshot::synth
