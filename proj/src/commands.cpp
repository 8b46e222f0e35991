#include "gazecrop/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <thread>

#include <spdlog/spdlog.h>

namespace gazecrop {

using nlohmann::json;
namespace fs = std::filesystem;

std::string rho_label(double rho) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", round_sig6(rho));
  return buf;
}

void validate_run_config(const RunConfig& config, bool needs_rho) {
  if (config.manifest_path.empty()) throw Error(ErrorCode::kUsage, "--manifest is required");
  if (config.out_dir.empty()) throw Error(ErrorCode::kUsage, "--out is required");
  if (needs_rho && config.rhos.empty()) throw Error(ErrorCode::kUsage, "at least one --rho is required");
  for (double r : config.rhos) {
    try {
      validate_rho(r);
    } catch (const Error& e) {
      throw Error(ErrorCode::kUsage, e.what());
    }
  }
  if (config.sigma_px && !(*config.sigma_px > 0.0 && std::isfinite(*config.sigma_px))) {
    throw Error(ErrorCode::kUsage, "--sigma-px must be positive");
  }
  if (config.min_crop.min_width < 1 || config.min_crop.min_height < 1) {
    throw Error(ErrorCode::kUsage, "--min-crop must be at least 1x1");
  }
  if (config.jobs < 1) throw Error(ErrorCode::kUsage, "--jobs must be >= 1");
}

json effective_config_json(const RunConfig& c) {
  json rhos = json::array();
  for (double r : c.rhos) rhos.push_back(round_sig6(r));
  return {{"manifest", c.manifest_path.string()},
          {"out", c.out_dir.string()},
          {"rho", rhos},
          {"mode", input_mode_name(c.mode)},
          {"sigma_px", c.sigma_px ? json(round_sig6(*c.sigma_px)) : json("auto")},
          {"min_crop", std::to_string(c.min_crop.min_width) + "x" + std::to_string(c.min_crop.min_height)},
          {"profile", c.profile_name},
          {"seed", c.seed},
          {"jobs", c.jobs},
          {"global_size", c.global_size},
          {"roi_max_pitches", c.roi_view.max_pitches}};
}

namespace {

// Each index is visited exactly once; fn must not throw.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, jobs)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());
}

json skip_json(const SkipRecord& s) {
  return {{"sample_id", s.sample_id}, {"line_no", s.line_no}, {"code", s.code}, {"message", s.message}};
}

void write_skips(const fs::path& path, const std::vector<SkipRecord>& skips) {
  std::string text;
  for (const auto& s : skips) text += dump_json_line(skip_json(s)) + "\n";
  write_text_file(path, text);
}

std::vector<SkipRecord> load_rejects(const Manifest& m) {
  std::vector<SkipRecord> out;
  for (const SampleIssue& issue : m.rejected) {
    spdlog::warn("skipping sample '{}' (line {}): {}", issue.sample_id, issue.line_no, issue.message);
    out.push_back({issue.sample_id, issue.line_no, std::string(error_code_name(issue.code)), issue.message});
  }
  return out;
}

struct PipelineTargets {
  std::vector<double> rhos;
  std::vector<fs::path> rho_bundle_dirs;  // parallel to rhos
  std::optional<fs::path> baseline_bundle_dir;
  InputMode roi_mode = InputMode::kTwoScale;
};

struct SampleOutcome {
  std::vector<ResultRow> rho_rows;
  std::optional<ResultRow> baseline_row;
  std::optional<SkipRecord> skip;
};

std::int64_t text_tokens_for(const Sample& s, const ModelProfile& profile) {
  return s.text_token_count ? *s.text_token_count : std::llround(profile.default_text_tokens);
}

ResultRow make_row(const Sample& s, std::optional<double> rho, InputMode mode, std::int64_t visual,
                   std::int64_t text, std::int64_t roi_pixels, const ModelProfile& profile) {
  ResultRow row;
  row.sample_id = s.sample_id;
  row.rho = rho;
  row.mode = std::string(input_mode_name(mode));
  row.visual_tokens = visual;
  row.total_tokens = count_total_tokens(visual, text);
  row.flops_g = estimate_flops(static_cast<double>(row.total_tokens), profile);
  row.roi_pixels = roi_pixels;
  return row;
}

SampleOutcome process_sample(const Manifest& manifest, const Sample& sample, const RunConfig& config,
                             const ModelProfile& profile, const PipelineTargets& targets) {
  SampleOutcome out;
  try {
    const Image image = read_image(resolve_image_path(manifest, sample));
    if (image.width() != sample.image_width || image.height() != sample.image_height) {
      throw Error(ErrorCode::kValidationError, "image size changed since the manifest was loaded");
    }
    const TokenGeometry& geometry = profile.geometry;
    const std::int64_t text = text_tokens_for(sample, profile);
    BundleContext ctx;
    ctx.manifest_version = manifest.version;
    ctx.profile_name = profile.name;
    ctx.seed = config.seed;
    ctx.token_pitch = geometry.token_pitch;

    if (!targets.rhos.empty()) {
      const double sigma = config.sigma_px.value_or(default_sigma_px(image.width(), image.height()));
      ctx.sigma_px = sigma;
      const GazeHeatmap heatmap = build_heatmap(make_trace(sample), sigma);
      const RankedPixels ranked(heatmap);
      const MinSizePolicy policy{std::min(config.min_crop.min_width, image.width()),
                                 std::min(config.min_crop.min_height, image.height())};
      std::optional<ScaledView> global;
      if (targets.roi_mode == InputMode::kTwoScale) {
        global = make_global_view(image, config.global_size, config.global_size, geometry);
      }
      for (std::size_t i = 0; i < targets.rhos.size(); ++i) {
        const double rho = targets.rhos[i];
        const RoiSelection sel = select_roi(heatmap, ranked, rho);
        RoiBox box = enforce_min_size(sel.box, policy, image.width(), image.height());
        box.covered_mass = box_mass(heatmap, box);
        const Image crop = extract_roi(image, box);
        TwoScaleInput input = assemble(global, make_roi_view(crop, geometry, config.roi_view),
                                       sample.question, targets.roi_mode);
        const std::int64_t visual = count_visual_tokens(input, geometry);
        const CostReport cost = make_cost_report(static_cast<double>(visual),
                                                 static_cast<double>(text), profile);
        ctx.rho = rho;
        ctx.box = box;
        ctx.support_mass = sel.support_mass;
        export_bundle(sample, input, cost, targets.rho_bundle_dirs[i], ctx);
        out.rho_rows.push_back(make_row(sample, rho, targets.roi_mode, visual, text, box.area(), profile));
      }
    }
    if (targets.baseline_bundle_dir) {
      ScaledView full = make_baseline_view(image, geometry, config.roi_view);
      const std::int64_t pixels = static_cast<std::int64_t>(full.width()) * full.height();
      TwoScaleInput input = assemble(std::nullopt, std::move(full), sample.question, InputMode::kBaseline);
      const std::int64_t visual = count_visual_tokens(input, geometry);
      const CostReport cost =
          make_cost_report(static_cast<double>(visual), static_cast<double>(text), profile);
      BundleContext base_ctx = ctx;
      base_ctx.rho.reset();
      base_ctx.box.reset();
      base_ctx.support_mass.reset();
      export_bundle(sample, input, cost, *targets.baseline_bundle_dir, base_ctx);
      out.baseline_row = make_row(sample, std::nullopt, InputMode::kBaseline, visual, text, pixels, profile);
    }
  } catch (const std::exception& e) {
    const auto* err = dynamic_cast<const Error*>(&e);
    out.skip = SkipRecord{sample.sample_id, sample.line_no,
                          err ? std::string(error_code_name(err->code())) : "Internal", e.what()};
    out.rho_rows.clear();
    out.baseline_row.reset();
  }
  return out;
}

struct BatchResult {
  std::vector<std::vector<ResultRow>> per_rho;  // each sorted by sample_id
  std::vector<ResultRow> baseline;
  std::vector<SkipRecord> skips;
};

BatchResult run_batch(const Manifest& manifest, const RunConfig& config, const ModelProfile& profile,
                      const PipelineTargets& targets) {
  for (const fs::path& d : targets.rho_bundle_dirs) ensure_dir(d);
  if (targets.baseline_bundle_dir) ensure_dir(*targets.baseline_bundle_dir);

  std::vector<SampleOutcome> outcomes(manifest.samples.size());
  parallel_for(manifest.samples.size(), config.jobs, [&](std::size_t i) {
    outcomes[i] = process_sample(manifest, manifest.samples[i], config, profile, targets);
  });

  // Ordered fold by sample_id so worker scheduling never shows in outputs.
  std::vector<std::size_t> order(outcomes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return manifest.samples[a].sample_id < manifest.samples[b].sample_id;
  });

  BatchResult result;
  result.per_rho.resize(targets.rhos.size());
  result.skips = load_rejects(manifest);
  for (std::size_t i : order) {
    SampleOutcome& o = outcomes[i];
    if (o.skip) {
      spdlog::warn("skipping sample '{}': {}", o.skip->sample_id, o.skip->message);
      result.skips.push_back(*o.skip);
      continue;
    }
    for (std::size_t r = 0; r < o.rho_rows.size(); ++r) result.per_rho[r].push_back(std::move(o.rho_rows[r]));
    if (o.baseline_row) result.baseline.push_back(std::move(*o.baseline_row));
  }
  return result;
}

void write_run_dir(const fs::path& dir, const std::vector<ResultRow>& rows,
                   const std::vector<SkipRecord>& skips, const json& config) {
  ensure_dir(dir);
  write_results(dir / "results.jsonl", rows);
  write_skips(dir / "skips.jsonl", skips);
  write_text_file(dir / "effective_config.json", dump_json(config));
}

}  // namespace

HeatmapFiles cmd_heatmap(const RunConfig& config, std::string_view sample_id) {
  if (config.manifest_path.empty()) throw Error(ErrorCode::kUsage, "--manifest is required");
  if (config.out_dir.empty()) throw Error(ErrorCode::kUsage, "--out is required");
  const Manifest manifest = load_manifest(config.manifest_path, {.strict = false});
  const Sample* sample = find_sample(manifest, sample_id);
  if (!sample) throw Error(ErrorCode::kNotFound, "sample '" + std::string(sample_id) + "' not in manifest");
  const double sigma = config.sigma_px.value_or(default_sigma_px(sample->image_width, sample->image_height));
  const GazeHeatmap heatmap = build_heatmap(make_trace(*sample), sigma);
  ensure_dir(config.out_dir);
  HeatmapFiles files{config.out_dir / (sample->sample_id + ".gzhm"),
                     config.out_dir / (sample->sample_id + "_heatmap.png")};
  write_heatmap_grid(files.grid, heatmap);
  write_heatmap_png(files.png, heatmap);
  return files;
}

PrepareOutcome cmd_prepare(const RunConfig& config) {
  const bool baseline = config.mode == InputMode::kBaseline;
  validate_run_config(config, !baseline);
  if (!baseline && config.rhos.size() != 1) {
    throw Error(ErrorCode::kUsage, "prepare takes exactly one --rho (use sweep for several)");
  }
  const ModelProfile profile = resolve_profile(config.profile_name);
  const Manifest manifest = load_manifest(config.manifest_path, {.strict = false});

  PipelineTargets targets;
  targets.roi_mode = config.mode;
  if (baseline) {
    targets.baseline_bundle_dir = config.out_dir / "bundles";
  } else {
    targets.rhos = {config.rhos.front()};
    targets.rho_bundle_dirs = {config.out_dir / "bundles"};
  }
  BatchResult batch = run_batch(manifest, config, profile, targets);

  PrepareOutcome out;
  out.rows = baseline ? std::move(batch.baseline) : std::move(batch.per_rho.front());
  out.skips = std::move(batch.skips);
  write_run_dir(config.out_dir, out.rows, out.skips, effective_config_json(config));
  return out;
}

namespace {

SweepRow aggregate(const std::vector<ResultRow>& rows, std::optional<double> rho) {
  SweepRow r;
  r.rho = rho;
  if (rows.empty()) return r;
  double pixels = 0, visual = 0, total = 0;
  for (const ResultRow& row : rows) {
    pixels += static_cast<double>(row.roi_pixels);
    visual += static_cast<double>(row.visual_tokens);
    total += static_cast<double>(row.total_tokens);
  }
  const auto n = static_cast<double>(rows.size());
  r.mean_roi_pixels = pixels / n;
  r.mean_visual_tokens = visual / n;
  r.mean_total_tokens = total / n;
  return r;
}

void finalize(SweepRow& row, const SweepRow& baseline, const ModelProfile& profile) {
  row.mean_flops_g = estimate_flops(row.mean_total_tokens, profile);
  if (baseline.mean_visual_tokens > 0) {
    row.reductions.visual_pct = reduction_pct(row.mean_visual_tokens, baseline.mean_visual_tokens);
    row.reductions.total_pct = reduction_pct(row.mean_total_tokens, baseline.mean_total_tokens);
    row.reductions.flops_pct = reduction_pct(row.mean_flops_g, baseline.mean_flops_g);
  }
  for (double* v : {&row.mean_roi_pixels, &row.mean_visual_tokens, &row.mean_total_tokens,
                    &row.mean_flops_g, &row.reductions.visual_pct, &row.reductions.total_pct,
                    &row.reductions.flops_pct}) {
    *v = round_sig6(*v);
  }
}

json sweep_row_json(const SweepRow& r) {
  return {{"rho", r.rho ? json(*r.rho) : json(nullptr)},
          {"mean_roi_pixels", r.mean_roi_pixels},
          {"mean_visual_tokens", r.mean_visual_tokens},
          {"mean_total_tokens", r.mean_total_tokens},
          {"mean_flops_g", r.mean_flops_g},
          {"reductions",
           {{"visual_pct", r.reductions.visual_pct},
            {"total_pct", r.reductions.total_pct},
            {"flops_pct", r.reductions.flops_pct}}}};
}

SweepRow sweep_row_from_json(const json& j) {
  SweepRow r;
  if (!j.at("rho").is_null()) r.rho = j["rho"].get<double>();
  r.mean_roi_pixels = j.at("mean_roi_pixels").get<double>();
  r.mean_visual_tokens = j.at("mean_visual_tokens").get<double>();
  r.mean_total_tokens = j.at("mean_total_tokens").get<double>();
  r.mean_flops_g = j.at("mean_flops_g").get<double>();
  const json& red = j.at("reductions");
  r.reductions = {red.at("visual_pct").get<double>(), red.at("total_pct").get<double>(),
                  red.at("flops_pct").get<double>()};
  return r;
}

std::string fmt1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

std::string fmt_pixels(double v) {
  char buf[32];
  if (v >= 1000.0) {
    std::snprintf(buf, sizeof(buf), "%.2fk", v / 1000.0);
  } else {
    std::snprintf(buf, sizeof(buf), "%.0f", v);
  }
  return buf;
}

std::string with_change(double value, double reduction) {
  return fmt1(value) + " (" + format_change(reduction) + ")";
}

}  // namespace

json to_json(const SweepTable& t) {
  json rows = json::array();
  for (const SweepRow& r : t.rows) rows.push_back(sweep_row_json(r));
  json skips = json::array();
  for (const SkipRecord& s : t.skips) skips.push_back(skip_json(s));
  return {{"mode", t.mode},
          {"profile", t.profile},
          {"manifest_source", t.manifest_source},
          {"manifest_version", t.manifest_version},
          {"samples", t.samples},
          {"skipped", t.skipped},
          {"baseline", sweep_row_json(t.baseline)},
          {"rows", rows},
          {"skips", skips}};
}

SweepTable sweep_table_from_json(const json& j) {
  SweepTable t;
  t.mode = j.at("mode").get<std::string>();
  t.profile = j.at("profile").get<std::string>();
  t.manifest_source = j.at("manifest_source").get<std::string>();
  t.manifest_version = j.at("manifest_version").get<std::string>();
  t.samples = j.at("samples").get<std::size_t>();
  t.skipped = j.at("skipped").get<std::size_t>();
  t.baseline = sweep_row_from_json(j.at("baseline"));
  for (const json& r : j.at("rows")) t.rows.push_back(sweep_row_from_json(r));
  for (const json& s : j.value("skips", json::array())) {
    t.skips.push_back({s.at("sample_id").get<std::string>(), s.at("line_no").get<std::size_t>(),
                       s.at("code").get<std::string>(), s.at("message").get<std::string>()});
  }
  return t;
}

std::string render_sweep_markdown(const SweepTable& t) {
  std::string md = "# Gaze-mass sweep\n\n";
  md += "Manifest: " + t.manifest_source + " (version " + t.manifest_version + "). Mode: " + t.mode +
        ". Profile: " + t.profile + ". Samples: " + std::to_string(t.samples) + " (skipped " +
        std::to_string(t.skipped) + ").\n\n";
  md += "| rho | ROI-size (pixels) | Visual tokens | Total tokens | FLOPs (G) |\n";
  md += "|---|---|---|---|---|\n";
  md += "| baseline | " + fmt_pixels(t.baseline.mean_roi_pixels) + " | " +
        fmt1(t.baseline.mean_visual_tokens) + " | " + fmt1(t.baseline.mean_total_tokens) + " | " +
        fmt1(t.baseline.mean_flops_g) + " |\n";
  for (const SweepRow& r : t.rows) {
    md += "| " + rho_label(*r.rho) + " | " + fmt_pixels(r.mean_roi_pixels) + " | " +
          with_change(r.mean_visual_tokens, r.reductions.visual_pct) + " | " +
          with_change(r.mean_total_tokens, r.reductions.total_pct) + " | " +
          with_change(r.mean_flops_g, r.reductions.flops_pct) + " |\n";
  }
  return md;
}

std::string render_sweep_csv(const SweepTable& t) {
  std::string csv =
      "rho,mean_roi_pixels,mean_visual_tokens,visual_change,mean_total_tokens,total_change,"
      "flops_g,flops_change\n";
  auto line = [&](const std::string& label, const SweepRow& r, bool base) {
    csv += label + "," + fmt1(r.mean_roi_pixels) + "," + fmt1(r.mean_visual_tokens) + "," +
           (base ? "" : format_change(r.reductions.visual_pct)) + "," + fmt1(r.mean_total_tokens) +
           "," + (base ? "" : format_change(r.reductions.total_pct)) + "," + fmt1(r.mean_flops_g) +
           "," + (base ? "" : format_change(r.reductions.flops_pct)) + "\n";
  };
  line("baseline", t.baseline, true);
  for (const SweepRow& r : t.rows) line(rho_label(*r.rho), r, false);
  return csv;
}

SweepTable cmd_sweep(const RunConfig& config) {
  validate_run_config(config, true);
  if (config.mode == InputMode::kBaseline) {
    throw Error(ErrorCode::kUsage, "sweep needs --mode roi_only or two_scale");
  }
  const ModelProfile profile = resolve_profile(config.profile_name);
  const Manifest manifest = load_manifest(config.manifest_path, {.strict = false});

  std::vector<double> rhos = config.rhos;
  std::sort(rhos.begin(), rhos.end());
  rhos.erase(std::unique(rhos.begin(), rhos.end()), rhos.end());

  PipelineTargets targets;
  targets.roi_mode = config.mode;
  targets.rhos = rhos;
  for (double r : rhos) targets.rho_bundle_dirs.push_back(config.out_dir / ("rho_" + rho_label(r)) / "bundles");
  targets.baseline_bundle_dir = config.out_dir / "baseline" / "bundles";
  BatchResult batch = run_batch(manifest, config, profile, targets);

  const json cfg = effective_config_json(config);
  SweepTable table;
  table.mode = std::string(input_mode_name(config.mode));
  table.profile = profile.name;
  table.manifest_source = manifest.source_name;
  table.manifest_version = manifest.version;
  table.samples = batch.baseline.size();
  table.skipped = batch.skips.size();
  table.skips = batch.skips;

  SweepRow base = aggregate(batch.baseline, std::nullopt);
  base.mean_flops_g = estimate_flops(base.mean_total_tokens, profile);
  const SweepRow base_exact = base;
  finalize(base, SweepRow{}, profile);
  write_run_dir(config.out_dir / "baseline", batch.baseline, batch.skips, cfg);
  table.baseline = base;

  for (std::size_t i = 0; i < rhos.size(); ++i) {
    SweepRow row = aggregate(batch.per_rho[i], rhos[i]);
    finalize(row, base_exact, profile);
    table.rows.push_back(row);
    write_run_dir(config.out_dir / ("rho_" + rho_label(rhos[i])), batch.per_rho[i], batch.skips, cfg);
  }

  write_text_file(config.out_dir / "effective_config.json", dump_json(cfg));
  write_text_file(config.out_dir / "sweep.json", dump_json(to_json(table)));
  write_text_file(config.out_dir / "sweep.md", render_sweep_markdown(table));
  write_text_file(config.out_dir / "sweep.csv", render_sweep_csv(table));
  return table;
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

namespace {

json scores_json(const JudgeScores& s) {
  return {{"coverage", s.coverage}, {"accuracy", s.accuracy}, {"details", s.details}, {"fluency", s.fluency}};
}

struct PairTask {
  std::string sample_id;
  const ResultRow* row_a = nullptr;
  JudgeRequest request;
};

struct PairResult {
  std::optional<PairJudgement> judgement;
  std::optional<SkipRecord> failure;
};

}  // namespace

json to_json(const ScoreOutcome& o, std::string_view label, std::string_view judge_name) {
  const EvalSummary& s = o.summary;
  const auto judged = static_cast<double>(s.wins + s.ties + s.losses);
  auto frac = [&](std::int64_t k) { return judged > 0 ? round_sig6(static_cast<double>(k) / judged) : 0.0; };
  json failures = json::array();
  for (const SkipRecord& f : o.failures) failures.push_back(skip_json(f));
  return {{"label", label},
          {"judge", judge_name},
          {"rubric_version", judge_rubric_version()},
          {"rho", o.rho ? json(round_sig6(*o.rho)) : json(nullptr)},
          {"mode", o.mode},
          {"judged", s.wins + s.ties + s.losses},
          {"wins", s.wins},
          {"ties", s.ties},
          {"losses", s.losses},
          {"win_rate_pct", s.win_rate_pct ? json(round_sig6(*s.win_rate_pct)) : json(nullptr)},
          {"fractions", {{"win", frac(s.wins)}, {"tie", frac(s.ties)}, {"loss", frac(s.losses)}}},
          {"mean_total_score", round_sig6(s.mean_total_score)},
          {"mean_total_score_b", round_sig6(o.mean_total_score_b)},
          {"unpaired", o.unpaired},
          {"failures", failures}};
}

ScoreOutcome cmd_score(const ScoreConfig& config, JudgeClient& judge, std::string_view judge_name) {
  if (config.manifest_path.empty() || config.results_a.empty() || config.results_b.empty() ||
      config.out_dir.empty()) {
    throw Error(ErrorCode::kUsage, "score needs --manifest, --results-a, --results-b and --out");
  }
  if (config.jobs < 1) throw Error(ErrorCode::kUsage, "--jobs must be >= 1");
  const Manifest manifest = load_manifest(config.manifest_path, {.strict = false});
  auto rows_a = read_results(config.results_a);
  const auto rows_b = read_results(config.results_b);

  std::map<std::string, const ResultRow*> by_id_b;
  for (const ResultRow& r : rows_b) by_id_b.emplace(r.sample_id, &r);
  std::map<std::string, const ResultRow*> by_id_a;
  for (const ResultRow& r : rows_a) by_id_a.emplace(r.sample_id, &r);

  ScoreOutcome out;
  std::vector<PairTask> tasks;
  for (const auto& [id, row_a] : by_id_a) {
    const auto it = by_id_b.find(id);
    const Sample* sample = find_sample(manifest, id);
    std::string why;
    if (it == by_id_b.end()) {
      why = "missing from results_b";
    } else if (!sample) {
      why = "not in manifest";
    } else if (!row_a->answer || !it->second->answer) {
      why = "no answer text";
    }
    if (!why.empty()) {
      spdlog::warn("UnpairedSample '{}': {}", id, why);
      out.unpaired.push_back(id + ": " + why);
      continue;
    }
    tasks.push_back({id, row_a,
                     JudgeRequest{sample->question, sample->caption, sample->reference_answer,
                                  *row_a->answer, *it->second->answer}});
  }
  for (const auto& [id, row_b] : by_id_b) {
    if (!by_id_a.count(id)) {
      spdlog::warn("UnpairedSample '{}': missing from results_a", id);
      out.unpaired.push_back(id + ": missing from results_a");
    }
  }
  std::sort(out.unpaired.begin(), out.unpaired.end());

  ensure_dir(config.out_dir);
  AuditLog audit(config.out_dir / "judge_audit.jsonl");
  std::vector<PairResult> results(tasks.size());
  parallel_for(tasks.size(), config.jobs, [&](std::size_t i) {
    try {
      results[i].judgement = judge_pair(tasks[i].request, judge, config.judge_options, &audit, tasks[i].sample_id);
    } catch (const MalformedJudgeResponse& e) {
      results[i].failure = SkipRecord{tasks[i].sample_id, 0, "MalformedJudgeResponse",
                                      std::string(e.what()) + " | payload: " + e.payload()};
    } catch (const Error& e) {
      results[i].failure = SkipRecord{tasks[i].sample_id, 0, std::string(error_code_name(e.code())), e.what()};
    }
  });

  std::vector<double> totals_a;
  double sum_b = 0.0;
  std::string verdict_lines;
  std::vector<ResultRow> scored;
  std::optional<double> rho;
  bool rho_uniform = true;
  std::optional<std::string> mode;
  bool mode_uniform = true;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const PairTask& task = tasks[i];
    if (results[i].failure) {
      spdlog::warn("judge failed for '{}': {}", task.sample_id, results[i].failure->message);
      out.failures.push_back(*results[i].failure);
      continue;
    }
    const PairJudgement& j = *results[i].judgement;
    const double total_a = weighted_total(j.scores_a);
    const double total_b = weighted_total(j.scores_b);
    out.sample_ids.push_back(task.sample_id);
    out.verdicts.push_back(j.verdict.aggregate);
    totals_a.push_back(total_a);
    sum_b += total_b;

    if (out.sample_ids.size() == 1) {
      rho = task.row_a->rho;
      mode = task.row_a->mode;
    } else {
      rho_uniform = rho_uniform && rho == task.row_a->rho;
      mode_uniform = mode_uniform && mode == task.row_a->mode;
    }

    json v = {{"sample_id", task.sample_id},
              {"rho", task.row_a->rho ? json(round_sig6(*task.row_a->rho)) : json(nullptr)},
              {"mode", task.row_a->mode},
              {"order_ab", order_result_name(j.verdict.order_ab)},
              {"order_ba", order_result_name(j.verdict.order_ba)},
              {"verdict", verdict_name(j.verdict.aggregate)},
              {"scores_a", scores_json(j.scores_a)},
              {"scores_b", scores_json(j.scores_b)},
              {"total_score", round_sig6(total_a)},
              {"total_score_b", round_sig6(total_b)}};
    verdict_lines += dump_json_line(v) + "\n";

    ResultRow row = *task.row_a;
    row.verdict = std::string(verdict_name(j.verdict.aggregate));
    row.total_score = total_a;
    scored.push_back(std::move(row));
  }
  out.summary = summarize(out.verdicts, totals_a);
  out.mean_total_score_b = out.sample_ids.empty() ? 0.0 : sum_b / static_cast<double>(out.sample_ids.size());
  out.rho = rho_uniform ? rho : std::nullopt;
  out.mode = mode_uniform && mode ? *mode : "mixed";

  const std::string label = config.label.empty() ? config.results_a.stem().string() : config.label;
  const json summary = to_json(out, label, judge_name);
  write_text_file(config.out_dir / "verdicts.jsonl", verdict_lines);
  write_results(config.out_dir / "results_scored.jsonl", scored);
  write_text_file(config.out_dir / "score_summary.json", dump_json(summary));
  std::string wtl = "label,rho,judged,wins,ties,losses,win_frac,tie_frac,loss_frac,win_rate_pct\n";
  char buf[256];
  const json& fr = summary["fractions"];
  std::snprintf(buf, sizeof(buf), "%s,%s,%lld,%lld,%lld,%lld,%.4f,%.4f,%.4f,%s\n", label.c_str(),
                out.rho ? rho_label(*out.rho).c_str() : "", static_cast<long long>(summary["judged"].get<std::int64_t>()),
                static_cast<long long>(out.summary.wins), static_cast<long long>(out.summary.ties),
                static_cast<long long>(out.summary.losses), fr["win"].get<double>(),
                fr["tie"].get<double>(), fr["loss"].get<double>(),
                out.summary.win_rate_pct ? fmt1(*out.summary.win_rate_pct).c_str() : "");
  wtl += buf;
  write_text_file(config.out_dir / "wtl.csv", wtl);
  return out;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

namespace {

struct ScoreSummaryView {
  std::string label;
  std::optional<double> rho;
  std::int64_t judged = 0, wins = 0, ties = 0, losses = 0;
  std::optional<double> win_rate_pct;
  double mean_total_score = 0.0;
  double mean_total_score_b = 0.0;
};

ScoreSummaryView load_summary(const fs::path& path) {
  const json j = json::parse(read_text_file(path));
  ScoreSummaryView v;
  v.label = j.value("label", path.parent_path().filename().string());
  if (j.contains("rho") && !j["rho"].is_null()) v.rho = j["rho"].get<double>();
  v.judged = j.at("judged").get<std::int64_t>();
  v.wins = j.at("wins").get<std::int64_t>();
  v.ties = j.at("ties").get<std::int64_t>();
  v.losses = j.at("losses").get<std::int64_t>();
  if (!j.at("win_rate_pct").is_null()) v.win_rate_pct = j["win_rate_pct"].get<double>();
  v.mean_total_score = j.at("mean_total_score").get<double>();
  v.mean_total_score_b = j.value("mean_total_score_b", 0.0);
  return v;
}

std::string pct(std::int64_t k, std::int64_t n) {
  return n > 0 ? fmt1(100.0 * static_cast<double>(k) / static_cast<double>(n)) + "%" : "--";
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string cmd_report(const fs::path& sweep_json, const std::vector<fs::path>& score_summaries,
                       const fs::path& out_dir) {
  if (sweep_json.empty() || out_dir.empty()) throw Error(ErrorCode::kUsage, "report needs --sweep and --out");
  fs::path sweep_path = fs::is_directory(sweep_json) ? sweep_json / "sweep.json" : sweep_json;
  SweepTable table;
  try {
    table = sweep_table_from_json(json::parse(read_text_file(sweep_path)));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, sweep_path.string() + ": " + e.what());
  }
  std::vector<ScoreSummaryView> scores;
  std::vector<std::string> missing;
  for (const fs::path& p : score_summaries) {
    const fs::path file = fs::is_directory(p) ? p / "score_summary.json" : p;
    if (!fs::exists(file)) {
      missing.push_back(file.filename().string());
      continue;
    }
    try {
      scores.push_back(load_summary(file));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParseError, file.string() + ": " + e.what());
    }
  }
  auto score_for = [&](std::optional<double> rho) -> const ScoreSummaryView* {
    for (const auto& s : scores) {
      if (s.rho && rho && round_sig6(*s.rho) == round_sig6(*rho)) return &s;
    }
    return nullptr;
  };
  const bool quality = !scores.empty();

  std::string md = "# Gaze-driven input report\n\n";
  md += "Manifest: " + table.manifest_source + " (version " + table.manifest_version + "). Mode: " +
        table.mode + ". Profile: " + table.profile + ". Samples: " + std::to_string(table.samples) +
        " (skipped " + std::to_string(table.skipped) + ").\n\n";
  md += "## Efficiency";
  md += quality ? " and answer quality\n\n" : "\n\n";
  std::string csv = "rho,mean_roi_pixels,mean_visual_tokens,visual_change,mean_total_tokens,total_change,flops_g,flops_change";
  if (quality) {
    md += "| rho | ROI-size (pixels) | Visual tokens | Total tokens | Win-rate (%) | Score | FLOPs (G) |\n";
    md += "|---|---|---|---|---|---|---|\n";
    csv += ",win_rate_pct,wins,ties,losses,mean_total_score";
  } else {
    md += "| rho | ROI-size (pixels) | Visual tokens | Total tokens | FLOPs (G) |\n";
    md += "|---|---|---|---|---|\n";
  }
  csv += "\n";

  const std::string base_score = quality ? fmt2(scores.front().mean_total_score_b) : "";
  md += "| baseline | " + fmt_pixels(table.baseline.mean_roi_pixels) + " | " +
        fmt1(table.baseline.mean_visual_tokens) + " | " + fmt1(table.baseline.mean_total_tokens) + " | ";
  if (quality) md += "-- | " + base_score + " | ";
  md += fmt1(table.baseline.mean_flops_g) + " |\n";
  csv += "baseline," + fmt1(table.baseline.mean_roi_pixels) + "," + fmt1(table.baseline.mean_visual_tokens) +
         ",," + fmt1(table.baseline.mean_total_tokens) + ",," + fmt1(table.baseline.mean_flops_g) + ",";
  if (quality) csv += ",,,,," + base_score;
  csv += "\n";

  for (const SweepRow& r : table.rows) {
    const ScoreSummaryView* s = score_for(r.rho);
    md += "| " + rho_label(*r.rho) + " | " + fmt_pixels(r.mean_roi_pixels) + " | " +
          with_change(r.mean_visual_tokens, r.reductions.visual_pct) + " | " +
          with_change(r.mean_total_tokens, r.reductions.total_pct) + " | ";
    if (quality) {
      md += (s && s->win_rate_pct ? fmt1(*s->win_rate_pct) : std::string("--")) + " | " +
            (s ? fmt2(s->mean_total_score) : std::string("--")) + " | ";
    }
    md += with_change(r.mean_flops_g, r.reductions.flops_pct) + " |\n";
    csv += rho_label(*r.rho) + "," + fmt1(r.mean_roi_pixels) + "," + fmt1(r.mean_visual_tokens) + "," +
           format_change(r.reductions.visual_pct) + "," + fmt1(r.mean_total_tokens) + "," +
           format_change(r.reductions.total_pct) + "," + fmt1(r.mean_flops_g) + "," +
           format_change(r.reductions.flops_pct);
    if (quality) {
      csv += "," + (s && s->win_rate_pct ? fmt1(*s->win_rate_pct) : std::string()) + "," +
             (s ? std::to_string(s->wins) + "," + std::to_string(s->ties) + "," + std::to_string(s->losses) + "," +
                      fmt2(s->mean_total_score)
                : std::string(",,,"));
    }
    csv += "\n";
  }

  if (quality) {
    md += "\nWin-rate excludes ties: wins / (wins + losses).\n";
    md += "\n## Win/Tie/Loss\n\n";
    md += "| rho | label | judged | win | tie | loss |\n|---|---|---|---|---|---|\n";
    std::vector<const ScoreSummaryView*> ordered;
    for (const auto& s : scores) ordered.push_back(&s);
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto* a, const auto* b) {
      return a->rho.value_or(-1.0) < b->rho.value_or(-1.0);
    });
    for (const auto* s : ordered) {
      md += "| " + (s->rho ? rho_label(*s->rho) : std::string("--")) + " | " + s->label + " | " +
            std::to_string(s->judged) + " | " + pct(s->wins, s->judged) + " | " + pct(s->ties, s->judged) +
            " | " + pct(s->losses, s->judged) + " |\n";
    }
  } else {
    md += "\nAnswer-quality columns omitted: no score summaries were supplied.\n";
  }
  if (!missing.empty()) {
    md += "\nMissing score summaries:";
    for (const auto& m : missing) md += " " + m;
    md += "\n";
  }

  ensure_dir(out_dir);
  write_text_file(out_dir / "report.md", md);
  write_text_file(out_dir / "report.csv", csv);
  return md;
}

}  // namespace gazecrop
