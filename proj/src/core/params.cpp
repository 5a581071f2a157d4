#include "oneshot/core/params.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

namespace oneshot::core {

Tensor& ParamStore::add(const std::string& name, Tensor value, bool trainable) {
  if (contains(name)) throw std::invalid_argument("parameter '" + name + "' already exists");
  value.set_requires_grad(trainable);
  entries_.push_back(Entry{name, std::move(value), trainable});
  return entries_.back().tensor;
}

bool ParamStore::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.name == name; });
}

Tensor& ParamStore::get(const std::string& name) {
  for (Entry& e : entries_) {
    if (e.name == name) return e.tensor;
  }
  throw std::out_of_range("no parameter named '" + name + "'");
}

const Tensor& ParamStore::get(const std::string& name) const {
  return const_cast<ParamStore*>(this)->get(name);
}

void ParamStore::assign(const std::string& name, const Tensor& value) {
  Tensor& dst = get(name);
  if (dst.shape() != value.shape()) {
    throw std::invalid_argument("parameter '" + name + "' has shape " + shape_string(dst.shape()) +
                                ", cannot assign " + shape_string(value.shape()));
  }
  std::copy(value.values().begin(), value.values().end(), dst.values().begin());
}

void ParamStore::zero_grad() {
  for (Entry& e : entries_) e.tensor.zero_grad();
}

ParamStore ParamStore::clone() const {
  ParamStore out;
  for (const Entry& e : entries_) {
    Tensor copy = e.tensor.clone();
    copy.drop_grad();
    out.entries_.push_back(Entry{e.name, copy, e.trainable});
  }
  return out;
}

void validate(const SgdConfig& config) {
  if (!(config.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (config.minibatch_size == 0) throw std::invalid_argument("minibatch size must be positive");
}

void sgd_step(ParamStore& params, const SgdConfig& config) {
  for (ParamStore::Entry& e : params.entries()) {
    if (!e.trainable) continue;
    if (!e.tensor.has_grad()) throw std::logic_error("sgd_step: parameter '" + e.name + "' has no gradient");
  }
  for (ParamStore::Entry& e : params.entries()) {
    if (!e.trainable) continue;
    auto v = e.tensor.values();
    auto g = e.tensor.grad();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= config.learning_rate * g[i];
    e.tensor.zero_grad();
  }
}

namespace {

constexpr char kMagic[5] = {'S', 'I', 'M', 'D', '1'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ofstream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(std::ifstream& is, const std::filesystem::path& path) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw std::runtime_error("truncated tensor file " + path.string());
  return value;
}

}  // namespace

void write_tensors(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kCheckpointVersion);
  for (const NamedTensor& nt : tensors) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(nt.name.size()));
    os.write(nt.name.data(), static_cast<std::streamsize>(nt.name.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(nt.tensor.rank()));
    for (std::size_t d : nt.tensor.shape()) put<std::uint64_t>(os, d);
    const auto v = nt.tensor.values();
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

std::vector<NamedTensor> read_tensors(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  char magic[sizeof(kMagic)];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error(path.string() + " is not a tensor file (bad magic)");
  }
  const auto version = take<std::uint32_t>(is, path);
  if (version != kCheckpointVersion) {
    throw std::runtime_error(path.string() + ": unsupported version " + std::to_string(version));
  }
  std::vector<NamedTensor> out;
  while (is.peek() != std::ifstream::traits_type::eof()) {
    const auto name_len = take<std::uint32_t>(is, path);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const auto rank = take<std::uint32_t>(is, path);
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(take<std::uint64_t>(is, path));
    std::vector<double> values(shape_size(shape));
    is.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!is) throw std::runtime_error("truncated tensor file " + path.string());
    out.push_back(NamedTensor{std::move(name), Tensor(std::move(shape), std::move(values))});
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params) {
  std::vector<NamedTensor> tensors;
  tensors.reserve(params.size());
  for (const auto& e : params.entries()) tensors.push_back({e.name, e.tensor});
  write_tensors(path, tensors);
}

void load_checkpoint(const std::filesystem::path& path, ParamStore& params) {
  const auto tensors = read_tensors(path);
  std::unordered_set<std::string> seen;
  for (const NamedTensor& nt : tensors) {
    if (!params.contains(nt.name)) {
      throw std::runtime_error(path.string() + ": unexpected tensor '" + nt.name + "'");
    }
    params.assign(nt.name, nt.tensor);
    seen.insert(nt.name);
  }
  for (const auto& e : params.entries()) {
    if (!seen.count(e.name)) throw std::runtime_error(path.string() + ": missing tensor '" + e.name + "'");
  }
}

}  // namespace oneshot::core
