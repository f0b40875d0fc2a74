#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace swapnas {

/// Per-sample feature map shape (channels, height, width).
struct Shape {
  int channels = 0;
  int height = 0;
  int width = 0;

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
           static_cast<std::size_t>(width);
  }
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// S samples of C x W x H values, stored sample-major, then channel, then row
/// (height), then column (width).
class InputBatch {
 public:
  InputBatch() = default;
  InputBatch(int samples, Shape shape, std::vector<float> payload);

  int samples() const noexcept { return samples_; }
  const Shape& shape() const noexcept { return shape_; }
  std::span<const float> payload() const noexcept { return payload_; }
  std::span<const float> sample(int s) const noexcept {
    return std::span<const float>(payload_).subspan(static_cast<std::size_t>(s) * shape_.size(),
                                                    shape_.size());
  }

  /// Short provenance string, e.g. "gauss:32x3x32x32".
  const std::string& descriptor() const noexcept { return descriptor_; }
  void set_descriptor(std::string d) { descriptor_ = std::move(d); }

  InputBatch with_samples_permuted(std::span<const int> order) const;

 private:
  int samples_ = 0;
  Shape shape_;
  std::vector<float> payload_;
  std::string descriptor_;
};

/// Synthetic batch description parsed from "gauss:SxCxWxH" (every value
/// i.i.d. N(0,1)) or "gauss:SxCxWxH@eps" (eps > 0: every sample is one
/// common N(0,1) image plus eps times its own N(0,1) noise, i.e. a batch of
/// near-duplicate inputs).
struct BatchSpec {
  int samples = 32;
  int channels = 3;
  int width = 32;
  int height = 32;
  double jitter = 0.0;

  std::string to_string() const;
  static BatchSpec parse(std::string_view text);
};

/// Draws a batch from N(0, 1) per value. With jitter > 0 every sample is one
/// common N(0, 1) image plus jitter * N(0, 1) noise.
/// Bit-identical for identical (spec, seed).
InputBatch make_gaussian_batch(const BatchSpec& spec, std::uint64_t seed);

/// Raw tensor file: "SWAPTENSOR v1 S C W H\n" then S*C*W*H little-endian float32.
InputBatch read_tensor_file(const std::filesystem::path& path);
void write_tensor_file(const std::filesystem::path& path, const InputBatch& batch);

}  // namespace swapnas
