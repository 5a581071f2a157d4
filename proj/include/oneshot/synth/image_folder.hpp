#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "oneshot/synth/glyph.hpp"

namespace oneshot::synth {

/// Grayscale raster decoded to [0, 1], row-major.
struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;
};

/// Binary (P5) or ASCII (P2) PGM.
GrayImage read_pgm(const std::filesystem::path& path);
/// Any PNG, converted to 8-bit gray.
GrayImage read_png(const std::filesystem::path& path);
/// Dispatches on the extension (.pgm, .png; case-insensitive).
GrayImage read_gray_image(const std::filesystem::path& path);

/// Pads the shorter axis symmetrically with the mean border value so the
/// aspect ratio survives, then area-averages down (or up) to side x side.
core::Tensor to_square_tensor(const GrayImage& image, std::size_t side = kGlyphSize);

/// Class-per-folder corpus. Classes are the subdirectories in lexicographic
/// order; instances are their readable image files in lexicographic order.
class ImageFolder final : public ImageSource {
 public:
  std::size_t num_classes() const override { return images_.size(); }
  std::size_t instances(std::size_t class_index) const override { return images_.at(class_index).size(); }
  core::Tensor instance(std::size_t class_index, std::uint64_t k) const override;
  const std::string& class_name(std::size_t class_index) const { return names_.at(class_index); }

  friend std::shared_ptr<ImageFolder> load_image_dataset(const std::filesystem::path& directory,
                                                         std::vector<std::string>* warnings);

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<core::Tensor>> images_;
};

/// Unreadable files are skipped and described in `warnings` (or on stderr
/// when null). A class left without images is an error.
std::shared_ptr<ImageFolder> load_image_dataset(const std::filesystem::path& directory,
                                                std::vector<std::string>* warnings = nullptr);

}  // namespace oneshot::synth
