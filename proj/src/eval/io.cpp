#include "oneshot/eval/io.hpp"

#include <charconv>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace oneshot::eval {

namespace {

namespace fs = std::filesystem;

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string box_cells(const std::optional<Box>& box) {
  if (!box) return ",,,,";
  std::string out = std::to_string(box->rank);
  for (std::size_t axis = 0; axis < 2; ++axis) {
    if (axis < box->rank) {
      out += "," + num(box->offset[axis]) + "," + num(box->extent[axis]);
    } else {
      out += ",,";
    }
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& s, const fs::path& path) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error(path.string() + ": bad number '" + s + "'");
  }
  return v;
}

std::int64_t parse_int(const std::string& s, const fs::path& path) {
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error(path.string() + ": bad integer '" + s + "'");
  }
  return v;
}

std::optional<Box> parse_box(const std::vector<std::string>& cells, std::size_t first, const fs::path& path) {
  if (cells[first].empty()) return std::nullopt;
  Box box;
  box.rank = static_cast<std::size_t>(parse_int(cells[first], path));
  if (box.rank != 1 && box.rank != 2) throw std::runtime_error(path.string() + ": box rank must be 1 or 2");
  for (std::size_t axis = 0; axis < box.rank; ++axis) {
    box.offset[axis] = parse_double(cells[first + 1 + 2 * axis], path);
    box.extent[axis] = parse_double(cells[first + 2 + 2 * axis], path);
  }
  return box;
}

std::vector<std::vector<std::string>> read_rows(const fs::path& path, const std::string& header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");
  std::string line;
  if (!std::getline(in, line) || line != header) throw std::runtime_error(path.string() + ": expected header " + header);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != 7) throw std::runtime_error(path.string() + ": expected 7 columns in '" + line + "'");
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot write");
  return out;
}

constexpr const char* kDetectionHeader = "episode_id,confidence,rank,offset0,extent0,offset1,extent1";
constexpr const char* kTruthHeader = "episode_id,label,rank,offset0,extent0,offset1,extent1";

}  // namespace

void write_detections_csv(const fs::path& path, const std::vector<Detection>& detections) {
  auto out = open_out(path);
  out << kDetectionHeader << '\n';
  for (const auto& d : detections) out << d.episode_id << ',' << num(d.confidence) << ',' << box_cells(d.box) << '\n';
}

std::vector<Detection> read_detections_csv(const fs::path& path) {
  std::vector<Detection> out;
  for (const auto& cells : read_rows(path, kDetectionHeader)) {
    const auto box = parse_box(cells, 2, path);
    if (!box) throw std::runtime_error(path.string() + ": detection without a box");
    out.push_back(Detection{parse_int(cells[0], path), *box, parse_double(cells[1], path)});
  }
  return out;
}

void write_truths_csv(const fs::path& path, const std::vector<GroundTruth>& truths) {
  auto out = open_out(path);
  out << kTruthHeader << '\n';
  for (const auto& t : truths) out << t.episode_id << ',' << t.label << ',' << box_cells(t.box) << '\n';
}

std::vector<GroundTruth> read_truths_csv(const fs::path& path) {
  std::vector<GroundTruth> out;
  for (const auto& cells : read_rows(path, kTruthHeader)) {
    out.push_back(GroundTruth{parse_int(cells[0], path), static_cast<int>(parse_int(cells[1], path)), parse_box(cells, 2, path)});
  }
  return out;
}

std::string report_json(const EvalReport& report) {
  nlohmann::json sets = nlohmann::json::array();
  for (const auto& s : report.sets) {
    nlohmann::json metrics{{"AP", s.ap}};
    for (std::size_t i = 0; i < s.recall_levels.size(); ++i) {
      std::ostringstream key;
      key << "Pr@" << s.recall_levels[i];
      metrics[key.str()] = i < s.precision.size() ? s.precision[i] : 0.0;
    }
    sets.push_back({{"name", s.name},
                    {"N", s.N},
                    {"iou_threshold", s.iou_threshold},
                    {"metrics", metrics},
                    {"episodes", s.episodes},
                    {"detections", s.detections},
                    {"calibration",
                     {{"threshold", s.calibration.threshold},
                      {"shift_start", s.calibration.shift_start},
                      {"shift_end", s.calibration.shift_end},
                      {"validation_ap", s.validation_ap}}}});
  }
  const nlohmann::json j{{"track", report.track}, {"model", report.model}, {"sets", sets}};
  return j.dump(2) + "\n";
}

void write_report(const fs::path& path, const EvalReport& report) { open_out(path) << report_json(report); }

void write_sweep_csv(const fs::path& path, const std::vector<double>& thresholds, const std::vector<double>& aps) {
  if (thresholds.size() != aps.size()) throw std::invalid_argument("write_sweep_csv: length mismatch");
  auto out = open_out(path);
  out << "iou_threshold,AP\n";
  for (std::size_t i = 0; i < aps.size(); ++i) out << num(thresholds[i]) << ',' << num(aps[i]) << '\n';
}

}  // namespace oneshot::eval
