// gazecrop command-line driver: heatmap, prepare, sweep, score, report.

#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "gazecrop/commands.hpp"

namespace {

using namespace gazecrop;

int code(ExitCode c) { return static_cast<int>(c); }

MinSizePolicy parse_min_crop(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) throw Error(ErrorCode::kUsage, "--min-crop expects WxH, got " + text);
  try {
    std::size_t used_w = 0, used_h = 0;
    const std::string w = text.substr(0, x), h = text.substr(x + 1);
    MinSizePolicy p{std::stoi(w, &used_w), std::stoi(h, &used_h)};
    if (used_w != w.size() || used_h != h.size()) throw std::invalid_argument("trailing");
    return p;
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kUsage, "--min-crop expects WxH, got " + text);
  }
}

std::unique_ptr<JudgeClient> make_judge(const std::string& endpoint, const std::string& model,
                                        std::uint64_t seed, std::string& name) {
  if (endpoint == "mock" || endpoint.rfind("mock:", 0) == 0) {
    const std::string rule = endpoint == "mock" ? "overlap" : endpoint.substr(5);
    DeterministicMockJudge::Rule r;
    if (rule == "overlap") {
      r = DeterministicMockJudge::Rule::kOverlap;
    } else if (rule == "prefer_longer") {
      r = DeterministicMockJudge::Rule::kPreferLonger;
    } else if (rule == "tie") {
      r = DeterministicMockJudge::Rule::kAlwaysTie;
    } else if (rule == "malformed") {
      r = DeterministicMockJudge::Rule::kMalformed;
    } else {
      throw Error(ErrorCode::kUsage, "unknown mock judge rule: " + rule);
    }
    name = "mock:" + rule;
    return std::make_unique<DeterministicMockJudge>(r, seed);
  }
  HttpJudgeConfig cfg = HttpJudgeConfig::from_env();
  cfg.endpoint = endpoint;
  cfg.model = model;
  name = model;
  return std::make_unique<HttpJudgeClient>(cfg);
}

struct Options {
  RunConfig run;
  std::vector<std::string> rho_text;
  std::string mode = "two_scale";
  std::string min_crop = "56x56";
  double sigma = 0.0;
  std::string sample_id;

  ScoreConfig score;
  std::string score_policy = "ab";
  std::string judge_endpoint = "mock";
  std::string judge_model;

  std::string sweep;
  std::vector<std::string> scores;
};

void add_run_flags(CLI::App* app, Options& o, bool with_rho) {
  app->add_option("--manifest", o.run.manifest_path, "Manifest JSONL")->required();
  app->add_option("--out", o.run.out_dir, "Output directory")->required();
  app->add_option("--sigma-px", o.sigma, "Gaussian sigma in pixels (default: 2% of the diagonal)");
  app->add_option("--min-crop", o.min_crop, "Minimum ROI size WxH")->capture_default_str();
  app->add_option("--profile", o.run.profile_name, "Built-in profile name or profile file")
      ->capture_default_str();
  app->add_option("--seed", o.run.seed, "Seed recorded in every bundle")->capture_default_str();
  app->add_option("--jobs", o.run.jobs, "Worker threads")->capture_default_str();
  app->add_option("--mode", o.mode, "roi_only | two_scale | baseline")->capture_default_str();
  if (with_rho) {
    app->add_option("--rho", o.rho_text, "Gaze-mass threshold(s), repeatable or comma separated")
        ->delimiter(',');
  }
}

void finish_run_config(Options& o, CLI::App* app) {
  o.run.mode = parse_input_mode(o.mode);
  o.run.min_crop = parse_min_crop(o.min_crop);
  if (app->count("--sigma-px") > 0) o.run.sigma_px = o.sigma;
  o.run.rhos.clear();
  for (const std::string& r : o.rho_text) {
    try {
      std::size_t used = 0;
      o.run.rhos.push_back(std::stod(r, &used));
      if (used != r.size()) throw std::invalid_argument(r);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kUsage, "--rho expects a number, got " + r);
    }
  }
}

int report_skips(std::size_t skips) {
  if (skips > 0) {
    spdlog::warn("completed with {} skipped sample(s)", skips);
    return code(ExitCode::kCompletedWithSkips);
  }
  return code(ExitCode::kClean);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaze-driven foveated input toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with option defaults");
  Options o;

  auto* heatmap = app.add_subcommand("heatmap", "Write the gaze heatmap of one sample");
  add_run_flags(heatmap, o, false);
  heatmap->add_option("--sample", o.sample_id, "Sample id")->required();

  auto* prepare = app.add_subcommand("prepare", "Build model-ready bundles for one rho");
  add_run_flags(prepare, o, true);

  auto* sweep = app.add_subcommand("sweep", "Prepare every rho plus the baseline and tabulate cost");
  add_run_flags(sweep, o, true);

  auto* score = app.add_subcommand("score", "Judge answers A against answers B");
  score->add_option("--manifest", o.score.manifest_path, "Manifest JSONL")->required();
  score->add_option("--results-a", o.score.results_a, "Answers of the system under test")->required();
  score->add_option("--results-b", o.score.results_b, "Answers of the reference system")->required();
  score->add_option("--out", o.score.out_dir, "Output directory")->required();
  score->add_option("--label", o.score.label, "Label for the summary (default: results-a stem)");
  score->add_option("--jobs", o.score.jobs, "Concurrent judge calls")->capture_default_str();
  score->add_option("--seed", o.score.seed, "Mock judge seed")->capture_default_str();
  score->add_option("--judge-endpoint", o.judge_endpoint,
                    "Chat-completions URL, or mock[:overlap|prefer_longer|tie|malformed]")
      ->envname("GAZECROP_JUDGE_ENDPOINT")
      ->capture_default_str();
  score->add_option("--judge-model", o.judge_model, "Judge model name")->envname("GAZECROP_JUDGE_MODEL");
  score->add_option("--score-policy", o.score_policy, "ab | mean")->capture_default_str();

  auto* report = app.add_subcommand("report", "Render report.md and report.csv");
  report->add_option("--sweep", o.sweep, "sweep.json or the sweep output directory")->required();
  report->add_option("--scores", o.scores, "score_summary.json files or score directories");
  report->add_option("--out", o.run.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return code(ExitCode::kUsage);
  }

  try {
    if (heatmap->parsed()) {
      finish_run_config(o, heatmap);
      const HeatmapFiles files = cmd_heatmap(o.run, o.sample_id);
      std::cout << files.grid.string() << "\n" << files.png.string() << "\n";
      return code(ExitCode::kClean);
    }
    if (prepare->parsed()) {
      finish_run_config(o, prepare);
      const PrepareOutcome out = cmd_prepare(o.run);
      std::cout << "prepared " << out.rows.size() << " sample(s) into " << o.run.out_dir.string() << "\n";
      return report_skips(out.skips.size());
    }
    if (sweep->parsed()) {
      finish_run_config(o, sweep);
      const SweepTable table = cmd_sweep(o.run);
      std::cout << render_sweep_markdown(table);
      return report_skips(table.skipped);
    }
    if (score->parsed()) {
      if (o.score_policy == "ab") {
        o.score.judge_options.score_policy = ScorePolicy::kAbOrderOnly;
      } else if (o.score_policy == "mean") {
        o.score.judge_options.score_policy = ScorePolicy::kMeanOfBoth;
      } else {
        throw Error(ErrorCode::kUsage, "--score-policy must be ab or mean");
      }
      std::string judge_name;
      auto judge = make_judge(o.judge_endpoint, o.judge_model, o.score.seed, judge_name);
      const ScoreOutcome out = cmd_score(o.score, *judge, judge_name);
      const EvalSummary& s = out.summary;
      std::printf("W/T/L %lld/%lld/%lld", static_cast<long long>(s.wins), static_cast<long long>(s.ties),
                  static_cast<long long>(s.losses));
      if (s.win_rate_pct) {
        std::printf("  win-rate %.1f%%\n", *s.win_rate_pct);
      } else {
        std::printf("  win-rate undefined (all ties)\n");
      }
      return report_skips(out.unpaired.size() + out.failures.size());
    }
    if (report->parsed()) {
      std::vector<std::filesystem::path> paths(o.scores.begin(), o.scores.end());
      std::cout << cmd_report(o.sweep, paths, o.run.out_dir);
      return code(ExitCode::kClean);
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return code(e.code() == ErrorCode::kUsage ? ExitCode::kUsage : ExitCode::kFatal);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return code(ExitCode::kFatal);
  }
  return code(ExitCode::kUsage);
}
