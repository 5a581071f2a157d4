#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "oneshot/cli/pipeline.hpp"

namespace oneshot::cli {

/// Writes the dataset described by config.data, plus config.txt.
void cmd_synth(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);

/// Trains on <data>/train, selecting on the validation set of
/// train.selection_ways. Writes best.ckpt, last.ckpt, loss.csv,
/// validation.csv and config.txt to `out`; with `resume`, continues from the
/// last.ckpt already there.
TrainState cmd_train(const RunConfig& config, const std::filesystem::path& data, const std::filesystem::path& out,
                     bool resume, std::ostream& log);

/// Calibrates on each validation set and scores the matching test set.
std::vector<SetEvaluation> run_evaluation(const RunConfig& config, ModelKind kind, const std::filesystem::path& data,
                                          const std::optional<std::filesystem::path>& checkpoint, std::ostream& log);

/// report.json plus detections_<set>.csv and truths_<set>.csv.
eval::EvalReport cmd_eval(const RunConfig& config, ModelKind kind, const std::filesystem::path& data,
                          const std::optional<std::filesystem::path>& checkpoint, const std::filesystem::path& out,
                          std::ostream& log);

/// sweep_<set>.csv with AP per eval.sweep_thresholds, detections calibrated
/// as in cmd_eval.
void cmd_sweep(const RunConfig& config, ModelKind kind, const std::filesystem::path& data,
               const std::optional<std::filesystem::path>& checkpoint, const std::filesystem::path& out,
               std::ostream& log);

/// Gradient-check suite. Returns true when every check is within its
/// tolerance. `flip_closed_form` negates the closed-form gradient as a
/// negative control.
bool cmd_gradcheck(std::uint64_t seed, std::ostream& log, bool flip_closed_form = false);

}  // namespace oneshot::cli
