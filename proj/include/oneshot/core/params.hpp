#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "oneshot/core/tensor.hpp"

namespace oneshot::core {

/// Named model state: trainable parameters plus non-trainable buffers
/// (batch-norm running moments, bookkeeping scalars). Insertion order is
/// preserved and defines checkpoint order.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
    bool trainable = true;
  };

  Tensor& add(const std::string& name, Tensor value, bool trainable = true);
  bool contains(const std::string& name) const;
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;

  /// Overwrite values in place; the shape must match the existing entry.
  void assign(const std::string& name, const Tensor& value);

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }
  std::size_t size() const { return entries_.size(); }

  void zero_grad();
  /// Deep copy: the returned store shares no storage with this one.
  ParamStore clone() const;

 private:
  std::vector<Entry> entries_;
};

struct SgdConfig {
  double learning_rate = 0.1;
  std::size_t minibatch_size = 64;
};

void validate(const SgdConfig& config);

/// theta <- theta - lr * grad for every trainable entry, then zero the
/// gradients. Throws if a trainable entry has no gradient.
void sgd_step(ParamStore& params, const SgdConfig& config);

// Checkpoint file: "SIMD1", u32 version, then per tensor: u32 name length,
// name bytes, u32 rank, u64 extents, f64 values; all little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

void write_tensors(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_tensors(const std::filesystem::path& path);

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params);
/// Loads into an existing store; every stored name must exist with the same
/// shape, and every entry of the store must be present in the file.
void load_checkpoint(const std::filesystem::path& path, ParamStore& params);

}  // namespace oneshot::core
