#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gazecrop/cost_model.hpp"
#include "gazecrop/dataset_io.hpp"
#include "gazecrop/evaluation.hpp"
#include "gazecrop/input_assembly.hpp"
#include "gazecrop/roi.hpp"

namespace gazecrop {

/// Shell exit codes shared by every subcommand.
enum class ExitCode : int { kClean = 0, kUsage = 1, kCompletedWithSkips = 2, kFatal = 3 };

struct RunConfig {
  std::filesystem::path manifest_path;
  std::filesystem::path out_dir;
  std::vector<double> rhos;
  InputMode mode = InputMode::kTwoScale;
  std::optional<double> sigma_px;  // default: 2% of the image diagonal
  MinSizePolicy min_crop;
  std::string profile_name = "qwen25vl-3b-paper";
  std::uint64_t seed = 0;
  int jobs = 1;
  int global_size = 28;
  RoiViewOptions roi_view;
};

void validate_run_config(const RunConfig& config, bool needs_rho);
nlohmann::json effective_config_json(const RunConfig& config);

struct SkipRecord {
  std::string sample_id;
  std::size_t line_no = 0;
  std::string code;
  std::string message;
};

// ---------------------------------------------------------------------------

struct HeatmapFiles {
  std::filesystem::path grid;
  std::filesystem::path png;
};

/// Writes <out>/<sample_id>.gzhm and <out>/<sample_id>_heatmap.png.
HeatmapFiles cmd_heatmap(const RunConfig& config, std::string_view sample_id);

struct PrepareOutcome {
  std::vector<ResultRow> rows;  // sorted by sample_id
  std::vector<SkipRecord> skips;
};

/// Full per-sample pipeline for config.rhos[0] (or the full-image reference
/// in baseline mode). Writes <out>/bundles/, results.jsonl, skips.jsonl and
/// effective_config.json. Per-sample failures are skipped, never fatal.
PrepareOutcome cmd_prepare(const RunConfig& config);

struct SweepRow {
  std::optional<double> rho;  // empty for the baseline row
  double mean_roi_pixels = 0.0;
  double mean_visual_tokens = 0.0;
  double mean_total_tokens = 0.0;
  double mean_flops_g = 0.0;
  Reductions reductions;
};

struct SweepTable {
  std::string mode;
  std::string profile;
  std::string manifest_source;
  std::string manifest_version;
  std::size_t samples = 0;
  std::size_t skipped = 0;
  SweepRow baseline;
  std::vector<SweepRow> rows;
  std::vector<SkipRecord> skips;
};

nlohmann::json to_json(const SweepTable& table);
SweepTable sweep_table_from_json(const nlohmann::json& j);
std::string render_sweep_markdown(const SweepTable& table);
std::string render_sweep_csv(const SweepTable& table);

/// Prepares every rho (into <out>/rho_<r>/) plus the baseline (into
/// <out>/baseline/) with one heatmap per sample, then writes sweep.json,
/// sweep.md and sweep.csv.
SweepTable cmd_sweep(const RunConfig& config);

// ---------------------------------------------------------------------------

struct ScoreConfig {
  std::filesystem::path manifest_path;
  std::filesystem::path results_a;  // system under test
  std::filesystem::path results_b;  // reference system
  std::filesystem::path out_dir;
  std::string label;
  int jobs = 1;
  std::uint64_t seed = 0;
  JudgeOptions judge_options;
};

struct ScoreOutcome {
  EvalSummary summary;
  double mean_total_score_b = 0.0;
  std::optional<double> rho;
  std::string mode;
  std::vector<std::string> unpaired;
  std::vector<SkipRecord> failures;
  std::vector<std::string> sample_ids;  // judged, sorted
  std::vector<Verdict> verdicts;        // parallel to sample_ids
};

nlohmann::json to_json(const ScoreOutcome& outcome, std::string_view label,
                       std::string_view judge_name);

/// Pairs answers by sample_id and judges each pair in both orders. Writes
/// verdicts.jsonl, results_scored.jsonl, score_summary.json, wtl.csv and an
/// append-only judge_audit.jsonl.
ScoreOutcome cmd_score(const ScoreConfig& config, JudgeClient& judge,
                       std::string_view judge_name = "custom");

/// Renders a markdown + CSV report from a sweep.json and any number of
/// score_summary.json files. Writes report.md and report.csv and returns
/// the markdown.
std::string cmd_report(const std::filesystem::path& sweep_json,
                       const std::vector<std::filesystem::path>& score_summaries,
                       const std::filesystem::path& out_dir);

/// Shortest decimal label for a rho, used in directory names ("0.05", "0.1").
std::string rho_label(double rho);

}  // namespace gazecrop
