#pragma once

// File formats: CSV outputs for plotting, JSON manifests and checkpoints.
// Every writer goes through a temporary file and a rename, so a crashed run
// never leaves a truncated output under the final name.

#include "vslct/analysis.hpp"
#include "vslct/loss_family.hpp"
#include "vslct/metrics.hpp"
#include "vslct/nn.hpp"
#include "vslct/training.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace vslct {

using Json = nlohmann::ordered_json;

void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);

/// Lossless text form of a double ("%a" hex float) and its inverse.
std::string hex_double(double v);
double parse_hex_double(const std::string& text);

// ROC curves and scores -----------------------------------------------------
std::string roc_csv(const RocCurve& curve); ///< header fpr,tpr
RocCurve read_roc_csv(const std::filesystem::path& path);
Json to_json(const RocCurve& curve);
RocCurve roc_from_json(const Json& j);

std::string scores_csv(const LabeledScores& s); ///< header score,label
LabeledScores read_scores_csv(const std::filesystem::path& path);

/// Flat record; undefined metrics are null.
Json to_json(const MetricBundle& m);

// Configs and checkpoints ---------------------------------------------------
Json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const Json& j);
Json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const Json& j);
Json to_json(const VsParams& p);

/// Named tensors with shapes, values as hex floats, plus the model config.
Json checkpoint_json(const Model& m);
Model model_from_checkpoint(const Json& j);
void save_checkpoint(const Model& m, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

// Loss geometry ---------------------------------------------------------------
std::string loss_grid_csv(const LossDifferenceGrid<double>& grid); ///< header z0,z1,diff

// Sweeps ----------------------------------------------------------------------
Json to_json(const SweepRecord& r);
SweepRecord sweep_record_from_json(const Json& j);
/// One row per run: method,omega,gamma,tau,h_b,seed,auc,acc,tpr,status.
std::string sweep_csv(const std::vector<SweepRecord>& records);
/// All complete run manifests under `dir`/runs.
std::vector<SweepRecord> load_sweep_dir(const std::filesystem::path& dir);

} // namespace vslct
