#include "oneshot/simnet/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace oneshot::simnet {

namespace {

EmbedConfig from_widths(std::size_t spatial_rank, std::size_t input_channels, const std::vector<std::size_t>& widths) {
  EmbedConfig cfg;
  cfg.spatial_rank = spatial_rank;
  cfg.input_channels = input_channels;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    cfg.layers.push_back(LayerSpec{widths[i], 5, 1, i % 2 == 1});
  }
  return cfg;
}

}  // namespace

EmbedConfig EmbedConfig::desk(std::size_t spatial_rank, std::size_t input_channels) {
  EmbedConfig cfg = from_widths(spatial_rank, input_channels, {32, 32, 64, 64});
  if (spatial_rank == 1) cfg.exemplar_extent = 32;
  return cfg;
}

EmbedConfig EmbedConfig::paper(std::size_t spatial_rank, std::size_t input_channels) {
  EmbedConfig cfg = from_widths(spatial_rank, input_channels, {256, 256, 256, 256, 512, 512, 512, 512});
  if (spatial_rank == 1) cfg.exemplar_extent = min_input_extent(cfg);
  return cfg;
}

EmbedConfig EmbedConfig::preset(const std::string& name, std::size_t spatial_rank, std::size_t input_channels) {
  if (name == "desk") return desk(spatial_rank, input_channels);
  if (name == "paper") return paper(spatial_rank, input_channels);
  throw std::invalid_argument("unknown model preset '" + name + "' (expected desk or paper)");
}

void validate(const EmbedConfig& config) {
  if (config.spatial_rank != 1 && config.spatial_rank != 2) {
    throw std::invalid_argument("spatial_rank must be 1 or 2");
  }
  if (config.input_channels == 0) throw std::invalid_argument("input_channels must be positive");
  if (config.layers.empty()) throw std::invalid_argument("embedding needs at least one layer");
  for (const auto& layer : config.layers) {
    if (layer.channels == 0 || layer.kernel == 0 || layer.stride == 0) {
      throw std::invalid_argument("layer channels, kernel and stride must be positive");
    }
  }
  if (!(config.temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
}

std::size_t embedded_extent(const EmbedConfig& config, std::size_t input_extent) {
  std::size_t n = input_extent;
  for (const auto& layer : config.layers) {
    if (n < layer.kernel) return 0;
    n = (n - layer.kernel) / layer.stride + 1;
    if (layer.pool_after) {
      if (n < 2) return 0;
      n /= 2;
    }
  }
  return n;
}

std::size_t min_input_extent(const EmbedConfig& config) { return receptive_extent(config, 1); }

std::size_t total_stride(const EmbedConfig& config) {
  std::size_t stride = 1;
  for (const auto& layer : config.layers) stride *= layer.stride * (layer.pool_after ? 2 : 1);
  return stride;
}

std::size_t receptive_extent(const EmbedConfig& config, std::size_t embedded) {
  std::size_t r = embedded;
  for (auto it = config.layers.rbegin(); it != config.layers.rend(); ++it) {
    if (it->pool_after) r *= 2;
    r = (r - 1) * it->stride + it->kernel;
  }
  return r;
}

std::string format_layers(const std::vector<LayerSpec>& layers) {
  std::ostringstream os;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (i) os << ", ";
    os << layers[i].channels << 'k' << layers[i].kernel << 's' << layers[i].stride;
    if (layers[i].pool_after) os << 'p';
  }
  return os.str();
}

std::vector<LayerSpec> parse_layers(const std::string& text) {
  std::vector<LayerSpec> layers;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    std::string token;
    for (char c : item) {
      if (!std::isspace(static_cast<unsigned char>(c))) token += c;
    }
    if (token.empty()) continue;
    LayerSpec spec;
    std::size_t pos = 0;
    auto number = [&](const char* what) {
      std::size_t start = pos;
      while (pos < token.size() && std::isdigit(static_cast<unsigned char>(token[pos]))) ++pos;
      if (start == pos) throw std::invalid_argument("layer '" + token + "': missing " + what);
      return static_cast<std::size_t>(std::stoull(token.substr(start, pos - start)));
    };
    auto expect = [&](char c) {
      if (pos >= token.size() || token[pos] != c) {
        throw std::invalid_argument("layer '" + token + "': expected '" + std::string(1, c) + "'");
      }
      ++pos;
    };
    spec.channels = number("channel count");
    expect('k');
    spec.kernel = number("kernel size");
    expect('s');
    spec.stride = number("stride");
    if (pos < token.size() && token[pos] == 'p') {
      spec.pool_after = true;
      ++pos;
    }
    if (pos != token.size()) throw std::invalid_argument("layer '" + token + "': trailing characters");
    layers.push_back(spec);
  }
  return layers;
}

core::KeyValues to_key_values(const EmbedConfig& config) {
  core::KeyValues kv;
  kv.set("spatial_rank", std::to_string(config.spatial_rank));
  kv.set("input_channels", std::to_string(config.input_channels));
  kv.set("layers", format_layers(config.layers));
  kv.set("temperature", core::format_double(config.temperature));
  kv.set("exemplar_extent", std::to_string(config.exemplar_extent));
  return kv;
}

EmbedConfig from_key_values(const core::KeyValues& kv) {
  EmbedConfig cfg;
  cfg.spatial_rank = static_cast<std::size_t>(kv.get_uint("spatial_rank", 2));
  cfg.input_channels = static_cast<std::size_t>(kv.get_uint("input_channels", 1));
  cfg.layers = parse_layers(kv.get_string("layers", "32k5s1, 32k5s1p, 64k5s1, 64k5s1p"));
  cfg.temperature = kv.get_double("temperature", 1.0 / 3.0);
  cfg.exemplar_extent = static_cast<std::size_t>(kv.get_uint("exemplar_extent", 0));
  validate(cfg);
  return cfg;
}

void save_config(const std::filesystem::path& path, const EmbedConfig& config) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write model config " + path.string());
  os << "# embedding network; layers are <channels>k<kernel>s<stride>[p = 2/2 max pool after]\n";
  os << to_key_values(config).dump();
  if (!os) throw std::runtime_error("failed writing model config " + path.string());
}

EmbedConfig load_config(const std::filesystem::path& path) {
  const auto kv = core::KeyValues::load(path);
  EmbedConfig cfg = from_key_values(kv);
  if (const auto extra = kv.unread(); !extra.empty()) {
    throw std::invalid_argument("model config " + path.string() + ": unknown key '" + extra.front() + "'");
  }
  return cfg;
}

}  // namespace oneshot::simnet
