#include "oneshot/synth/dataset.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <stdexcept>

#include "oneshot/core/params.hpp"
#include "oneshot/core/random.hpp"
#include "oneshot/synth/image_folder.hpp"

namespace oneshot::synth {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kDatasetFormat = 1;

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + std::to_string(v[i]);
  return out;
}

std::size_t read_size(const core::KeyValues& kv, const std::string& key, std::size_t fallback) {
  const std::int64_t v = kv.get_int(key, static_cast<std::int64_t>(fallback));
  if (v < 0) throw std::invalid_argument(key + " must be nonnegative");
  return static_cast<std::size_t>(v);
}

json box_json(const eval::Box& b) {
  if (b.rank == 1) return json{{"offset", {b.offset[0]}}, {"extent", {b.extent[0]}}};
  return json{{"offset", {b.offset[0], b.offset[1]}}, {"extent", {b.extent[0], b.extent[1]}}};
}

eval::Box box_from_json(const json& j) {
  const auto offset = j.at("offset").get<std::vector<double>>();
  const auto extent = j.at("extent").get<std::vector<double>>();
  if (offset.size() == 1 && extent.size() == 1) return eval::Box::interval(offset[0], extent[0]);
  if (offset.size() == 2 && extent.size() == 2) return eval::Box::rect(offset[0], offset[1], extent[0], extent[1]);
  throw std::runtime_error("malformed box in episode table");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot write");
  out << text;
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace

DataConfig default_data_config(Track track) {
  DataConfig config;
  config.track = track;
  if (track == Track::kSequence) config.ways = {10};
  return config;
}

void validate(const DataConfig& config) {
  if (config.train_classes == 0 || config.validation_classes == 0 || config.test_classes == 0) {
    throw std::invalid_argument("every split needs at least one class");
  }
  if (config.ways.empty()) throw std::invalid_argument("data.ways must list at least one N");
  if (config.train_pairs == 0 || config.train_pairs % 2 != 0) {
    throw std::invalid_argument("data.train_pairs must be positive and even");
  }
  if (config.track == Track::kImage && (config.n == 0 || config.n > 8)) {
    throw std::invalid_argument("data.n must be in 1..8");
  }
  const std::size_t occupied = config.track == Track::kImage ? config.n * config.n : 1;
  if (config.track == Track::kImage && config.train_classes < occupied + 1) {
    throw std::invalid_argument("data.train_classes must exceed n^2 so negatives exist");
  }
  for (std::size_t N : config.ways) {
    const std::size_t smallest = std::min(config.validation_classes, config.test_classes);
    if (N == 0 || smallest < occupied || N - 1 > smallest - occupied) {
      throw std::invalid_argument(std::to_string(N) + "-way sets need " + std::to_string(occupied + N - 1) +
                                  " classes in the validation and test splits, they have " +
                                  std::to_string(config.validation_classes) + " and " +
                                  std::to_string(config.test_classes));
    }
  }
  validate(config.sequence);
}

void write_data_config(const DataConfig& c, core::KeyValues& kv) {
  kv.set("track", track_name(c.track));
  kv.set("seed", std::to_string(c.seed));
  kv.set("data.train_classes", std::to_string(c.train_classes));
  kv.set("data.validation_classes", std::to_string(c.validation_classes));
  kv.set("data.test_classes", std::to_string(c.test_classes));
  kv.set("data.n", std::to_string(c.n));
  kv.set("data.ways", join_sizes(c.ways));
  kv.set("data.train_pairs", std::to_string(c.train_pairs));
  kv.set("data.validation_targets", std::to_string(c.validation_targets));
  kv.set("data.test_targets", std::to_string(c.test_targets));
  if (!c.image_dir.empty()) kv.set("data.image_dir", c.image_dir);
  const auto d = core::format_double;
  kv.set("data.glyph.max_rotation_deg", d(c.glyph.max_rotation_deg));
  kv.set("data.glyph.min_scale", d(c.glyph.min_scale));
  kv.set("data.glyph.max_scale", d(c.glyph.max_scale));
  kv.set("data.glyph.max_shift_px", d(c.glyph.max_shift_px));
  kv.set("data.glyph.point_jitter", d(c.glyph.point_jitter));
  kv.set("data.glyph.min_half_width_px", d(c.glyph.min_half_width_px));
  kv.set("data.glyph.max_half_width_px", d(c.glyph.max_half_width_px));
  kv.set("data.glyph.noise_std", d(c.glyph.noise_std));
  kv.set("data.sequence.channels", std::to_string(c.sequence.channels));
  kv.set("data.sequence.min_template", std::to_string(c.sequence.min_template));
  kv.set("data.sequence.max_template", std::to_string(c.sequence.max_template));
  kv.set("data.sequence.frames", std::to_string(c.sequence.frames));
  kv.set("data.sequence.noise_std", d(c.sequence.noise_std));
  kv.set("data.sequence.min_warp", d(c.sequence.min_warp));
  kv.set("data.sequence.max_warp", d(c.sequence.max_warp));
  kv.set("data.sequence.distractors", std::to_string(c.sequence.distractors));
  kv.set("data.sequence.background_std", d(c.sequence.background_std));
  kv.set("data.sequence.background_rho", d(c.sequence.background_rho));
  kv.set("data.sequence.gain_jitter", d(c.sequence.gain_jitter));
}

DataConfig read_data_config(const core::KeyValues& kv) {
  DataConfig c = default_data_config(parse_track(kv.get_string("track", "image")));
  c.seed = kv.get_uint("seed", c.seed);
  c.train_classes = read_size(kv, "data.train_classes", c.train_classes);
  c.validation_classes = read_size(kv, "data.validation_classes", c.validation_classes);
  c.test_classes = read_size(kv, "data.test_classes", c.test_classes);
  c.n = read_size(kv, "data.n", c.n);
  std::vector<std::int64_t> ways_default(c.ways.begin(), c.ways.end());
  c.ways.clear();
  for (std::int64_t N : kv.get_ints("data.ways", ways_default)) {
    if (N <= 0) throw std::invalid_argument("data.ways entries must be positive");
    c.ways.push_back(static_cast<std::size_t>(N));
  }
  c.train_pairs = read_size(kv, "data.train_pairs", c.train_pairs);
  c.validation_targets = read_size(kv, "data.validation_targets", c.validation_targets);
  c.test_targets = read_size(kv, "data.test_targets", c.test_targets);
  c.image_dir = kv.get_string("data.image_dir", c.image_dir);
  auto& g = c.glyph;
  g.max_rotation_deg = kv.get_double("data.glyph.max_rotation_deg", g.max_rotation_deg);
  g.min_scale = kv.get_double("data.glyph.min_scale", g.min_scale);
  g.max_scale = kv.get_double("data.glyph.max_scale", g.max_scale);
  g.max_shift_px = kv.get_double("data.glyph.max_shift_px", g.max_shift_px);
  g.point_jitter = kv.get_double("data.glyph.point_jitter", g.point_jitter);
  g.min_half_width_px = kv.get_double("data.glyph.min_half_width_px", g.min_half_width_px);
  g.max_half_width_px = kv.get_double("data.glyph.max_half_width_px", g.max_half_width_px);
  g.noise_std = kv.get_double("data.glyph.noise_std", g.noise_std);
  auto& s = c.sequence;
  s.channels = read_size(kv, "data.sequence.channels", s.channels);
  s.min_template = read_size(kv, "data.sequence.min_template", s.min_template);
  s.max_template = read_size(kv, "data.sequence.max_template", s.max_template);
  s.frames = read_size(kv, "data.sequence.frames", s.frames);
  s.noise_std = kv.get_double("data.sequence.noise_std", s.noise_std);
  s.min_warp = kv.get_double("data.sequence.min_warp", s.min_warp);
  s.max_warp = kv.get_double("data.sequence.max_warp", s.max_warp);
  s.distractors = read_size(kv, "data.sequence.distractors", s.distractors);
  s.background_std = kv.get_double("data.sequence.background_std", s.background_std);
  s.background_rho = kv.get_double("data.sequence.background_rho", s.background_rho);
  s.gain_jitter = kv.get_double("data.sequence.gain_jitter", s.gain_jitter);
  validate(c);
  return c;
}

std::string validation_set_name(std::size_t N) { return "validation_" + std::to_string(N) + "way"; }
std::string test_set_name(std::size_t N) { return "test_" + std::to_string(N) + "way"; }

Generator make_generator(const DataConfig& config) {
  validate(config);
  const std::size_t total = config.train_classes + config.validation_classes + config.test_classes;
  if (config.track == Track::kSequence) {
    return sequence_generator(total, core::mix_seed({config.seed, 0x74656d706cULL}), config.sequence);
  }
  std::shared_ptr<const ImageSource> images;
  if (config.image_dir.empty()) {
    images = std::make_shared<SyntheticGlyphs>(total, core::mix_seed({config.seed, 0x676c797068ULL}), config.glyph);
  } else {
    images = load_image_dataset(config.image_dir);
    if (images->num_classes() < total) {
      throw std::invalid_argument(config.image_dir + " has " + std::to_string(images->num_classes()) +
                                  " classes, the split needs " + std::to_string(total));
    }
  }
  return image_generator(std::move(images), config.n);
}

Dataset build_dataset(const DataConfig& config) {
  Dataset ds;
  ds.config = config;
  const Generator gen = make_generator(config);
  ds.split = make_split(config.train_classes, config.validation_classes, config.test_classes,
                        core::mix_seed({config.seed, 0x73706c6974ULL}));
  ds.sets["train"] = build_training_pairs(gen, ds.split, config.train_pairs, core::mix_seed({config.seed, 0x747261696eULL}));
  for (std::size_t N : config.ways) {
    ds.sets[validation_set_name(N)] =
        build_nway_eval(gen, ds.split.validation, N, config.validation_targets, core::mix_seed({config.seed, 0x76616cULL}));
    ds.sets[test_set_name(N)] =
        build_nway_eval(gen, ds.split.test, N, config.test_targets, core::mix_seed({config.seed, 0x74657374ULL}));
  }
  return ds;
}

void save_dataset(const fs::path& directory, const Dataset& dataset) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec || !fs::is_directory(directory)) {
    throw std::runtime_error(directory.string() + ": cannot create directory" + (ec ? " (" + ec.message() + ")" : ""));
  }
  core::KeyValues kv;
  write_data_config(dataset.config, kv);
  json manifest;
  manifest["format"] = kDatasetFormat;
  manifest["config"] = kv.values();
  manifest["split"] = {{"train", dataset.split.train}, {"validation", dataset.split.validation}, {"test", dataset.split.test}};
  json sets = json::object();
  for (const auto& [name, episodes] : dataset.sets) sets[name] = episodes.size();
  manifest["sets"] = sets;
  write_text(directory / "manifest.json", manifest.dump(2) + "\n");

  for (const auto& [name, episodes] : dataset.sets) {
    json table = json::array();
    std::vector<core::NamedTensor> tensors;
    std::set<std::int64_t> targets_written;
    for (const auto& e : episodes) {
      json row{{"id", e.id}, {"label", e.label}, {"class_id", e.class_id}, {"target_index", e.target_index}};
      if (e.truth_box) row["truth_box"] = box_json(*e.truth_box);
      table.push_back(std::move(row));
      if (targets_written.insert(e.target_index).second) {
        tensors.push_back({"target." + std::to_string(e.target_index), e.target});
      }
      tensors.push_back({"exemplar." + std::to_string(e.id), e.exemplar});
    }
    write_text(directory / (name + ".json"), table.dump(1) + "\n");
    core::write_tensors(directory / (name + ".bin"), tensors);
  }
}

Manifest load_manifest(const fs::path& directory) {
  const fs::path path = directory / "manifest.json";
  if (!fs::exists(path)) throw std::runtime_error(directory.string() + ": no dataset manifest (run synth first)");
  const json j = read_json(path);
  if (j.value("format", 0) != kDatasetFormat) throw std::runtime_error(path.string() + ": unsupported dataset format");
  core::KeyValues kv;
  for (const auto& [key, value] : j.at("config").items()) kv.set(key, value.get<std::string>());
  Manifest m;
  m.config = read_data_config(kv);
  m.split.train = j.at("split").at("train").get<std::vector<std::int64_t>>();
  m.split.validation = j.at("split").at("validation").get<std::vector<std::int64_t>>();
  m.split.test = j.at("split").at("test").get<std::vector<std::int64_t>>();
  validate(m.split);
  for (const auto& [name, count] : j.at("sets").items()) m.set_sizes[name] = count.get<std::size_t>();
  return m;
}

std::vector<simnet::Episode> load_episode_set(const fs::path& directory, const std::string& name) {
  const json table = read_json(directory / (name + ".json"));
  std::map<std::string, core::Tensor> tensors;
  for (auto& t : core::read_tensors(directory / (name + ".bin"))) tensors.emplace(t.name, t.tensor);
  auto fetch = [&](const std::string& key) {
    const auto it = tensors.find(key);
    if (it == tensors.end()) throw std::runtime_error(name + ".bin: missing tensor " + key);
    return it->second;
  };
  std::vector<simnet::Episode> out;
  for (const json& row : table) {
    simnet::Episode e;
    e.id = row.at("id").get<std::int64_t>();
    e.label = row.at("label").get<int>();
    e.class_id = row.at("class_id").get<std::int64_t>();
    e.target_index = row.at("target_index").get<std::int64_t>();
    if (row.contains("truth_box")) e.truth_box = box_from_json(row.at("truth_box"));
    e.target = fetch("target." + std::to_string(e.target_index));
    e.exemplar = fetch("exemplar." + std::to_string(e.id));
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace oneshot::synth
