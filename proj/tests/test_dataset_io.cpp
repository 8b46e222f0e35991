#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "gazecrop/cost_model.hpp"
#include "gazecrop/dataset_io.hpp"
#include "test_support.hpp"

using namespace gazecrop;
using nlohmann::json;
using testing_support::TempDir;
namespace fs = std::filesystem;

namespace {

json sample_json(const std::string& id, const std::string& image = "img.png") {
  return {{"sample_id", id},
          {"image_path", image},
          {"gaze_points", json::array({json::array({1.5, 2.5, 0.0}), json::array({3.0, 4.0, 0.1})})},
          {"question", "What is shown?"},
          {"reference_answer", "A square."},
          {"caption", "A square."}};
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  for (const auto& l : lines) out << l << '\n';
}

class ManifestDir : public ::testing::Test {
 protected:
  void SetUp() override {
    testing_support::Rng rng(11);
    write_png(dir / "img.png", testing_support::random_image(rng, 20, 10));
  }

  Manifest load(const std::vector<std::string>& lines, bool strict = true) {
    write_lines(dir / "m.jsonl", lines);
    return load_manifest(dir / "m.jsonl", LoadOptions{strict});
  }

  ErrorCode load_error(const std::vector<std::string>& lines, std::string* message = nullptr) {
    try {
      load(lines);
    } catch (const Error& e) {
      if (message) *message = e.what();
      return e.code();
    }
    ADD_FAILURE() << "manifest loaded without error";
    return ErrorCode::kUsage;
  }

  TempDir dir{"gazecrop-io"};
};

}  // namespace

TEST_F(ManifestDir, LoadsSamplesAndProbesImageSize) {
  json s = sample_json("a");
  s["text_token_count"] = 40;
  const Manifest m = load({json{{"manifest", {{"source_name", "unit"}, {"version", "7"}}}}.dump(), s.dump()});
  EXPECT_EQ(m.source_name, "unit");
  EXPECT_EQ(m.version, "7");
  ASSERT_EQ(m.samples.size(), 1u);
  const Sample& a = m.samples[0];
  EXPECT_EQ(a.image_width, 20);
  EXPECT_EQ(a.image_height, 10);
  EXPECT_EQ(a.line_no, 2u);
  EXPECT_EQ(a.text_token_count, 40);
  ASSERT_EQ(a.gaze_points.size(), 2u);
  EXPECT_EQ(a.gaze_points[1], (GazePoint{3.0, 4.0, 0.1}));
  EXPECT_EQ(resolve_image_path(m, a), dir.path() / "img.png");
  EXPECT_EQ(find_sample(m, "a"), &m.samples[0]);
  EXPECT_EQ(find_sample(m, "b"), nullptr);
}

TEST_F(ManifestDir, HeaderIsOptional) {
  const Manifest m = load({sample_json("a").dump(), "", sample_json("b").dump()});
  EXPECT_EQ(m.source_name, "unknown");
  ASSERT_EQ(m.samples.size(), 2u);
  EXPECT_EQ(m.samples[1].line_no, 3u);
}

TEST_F(ManifestDir, NormalizedUnitsScaleToPixels) {
  json s = sample_json("a");
  s["gaze_points"] = json::array({json::array({0.5, 0.5}), json::array({0.25, 0.1})});
  const Manifest m = load({json{{"manifest", {{"gaze_units", "normalized"}}}}.dump(), s.dump()});
  EXPECT_EQ(m.samples[0].gaze_points[0], (GazePoint{10.0, 5.0, std::nullopt}));
  EXPECT_EQ(m.samples[0].gaze_points[1], (GazePoint{5.0, 1.0, std::nullopt}));
}

TEST_F(ManifestDir, OutOfFrameGazeIsClampedAndCounted) {
  json s = sample_json("a");
  s["gaze_points"] = json::array({json::array({-4.0, 3.0}), json::array({25.0, 12.0}), json::array({1.0, 1.0})});
  const Sample a = load({s.dump()}).samples[0];
  EXPECT_EQ(a.clamped_points, 2u);
  for (const GazePoint& p : a.gaze_points) {
    EXPECT_GE(p.x, 0.0);
    EXPECT_LT(p.x, 20.0);
    EXPECT_GE(p.y, 0.0);
    EXPECT_LT(p.y, 10.0);
  }
  EXPECT_EQ(a.gaze_points[0].x, 0.0);
}

TEST_F(ManifestDir, RoundTripThroughWriter) {
  json s1 = sample_json("a");
  s1["text_token_count"] = 12;
  json s2 = sample_json("b");
  s2["caption"] = "";
  s2["gaze_points"] = json::array({json::array({0.1, 0.2}), json::array({19.9, 9.9})});
  const Manifest m = load({json{{"manifest", {{"source_name", "unit"}, {"version", "2"}}}}.dump(),
                           s1.dump(), s2.dump()});
  write_manifest(m, dir / "copy.jsonl");
  const Manifest back = load_manifest(dir / "copy.jsonl");
  EXPECT_EQ(back.source_name, "unit");
  EXPECT_EQ(back.version, "2");
  ASSERT_EQ(back.samples.size(), m.samples.size());
  for (std::size_t i = 0; i < m.samples.size(); ++i) {
    EXPECT_TRUE(same_fields(m.samples[i], back.samples[i])) << i;
  }
}

TEST_F(ManifestDir, RandomManifestsRoundTrip) {
  testing_support::Rng rng(99);
  std::uniform_real_distribution<double> ux(0.0, 20.0), uy(0.0, 10.0);
  for (int trial = 0; trial < 20; ++trial) {
    Manifest m;
    m.base_dir = dir.path();
    const int n = 1 + static_cast<int>(rng() % 5);
    for (int i = 0; i < n; ++i) {
      Sample s;
      s.sample_id = "s" + std::to_string(i);
      s.image_path = "img.png";
      s.question = "q" + std::to_string(rng() % 1000) + " \"quoted\" é";
      s.reference_answer = "r";
      if (rng() % 2) s.text_token_count = static_cast<std::int64_t>(rng() % 100);
      double t = 0.0;
      const int k = 1 + static_cast<int>(rng() % 8);
      for (int j = 0; j < k; ++j) {
        GazePoint p{ux(rng), uy(rng), std::nullopt};
        if (p.x >= 20.0 || p.y >= 10.0) continue;
        if (trial % 2) p.t = (t += 0.01 * (1 + rng() % 3));
        s.gaze_points.push_back(p);
      }
      if (s.gaze_points.empty()) s.gaze_points.push_back({1.0, 1.0, std::nullopt});
      m.samples.push_back(s);
    }
    write_manifest(m, dir / "r.jsonl");
    const Manifest back = load_manifest(dir / "r.jsonl");
    ASSERT_EQ(back.samples.size(), m.samples.size());
    for (std::size_t i = 0; i < m.samples.size(); ++i) {
      EXPECT_TRUE(same_fields(m.samples[i], back.samples[i])) << trial << "/" << i;
    }
  }
}

TEST_F(ManifestDir, MalformedJsonIsParseErrorWithLine) {
  std::string msg;
  EXPECT_EQ(load_error({sample_json("a").dump(), "{not json"}, &msg), ErrorCode::kParseError);
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
}

TEST_F(ManifestDir, MalformedJsonIsFatalEvenWhenLenient) {
  write_lines(dir / "m.jsonl", {sample_json("a").dump(), "[1,"});
  EXPECT_THROW(load_manifest(dir / "m.jsonl", LoadOptions{false}), Error);
}

TEST_F(ManifestDir, BadHeaderUnits) {
  EXPECT_EQ(load_error({json{{"manifest", {{"gaze_units", "inches"}}}}.dump()}), ErrorCode::kParseError);
}

TEST_F(ManifestDir, ValidationFailures) {
  auto with = [](const char* key, json value) {
    json s = sample_json("a");
    s[key] = std::move(value);
    return s.dump();
  };
  auto without = [](const char* key) {
    json s = sample_json("a");
    s.erase(key);
    return s.dump();
  };
  EXPECT_EQ(load_error({with("gaze_points", json::array())}), ErrorCode::kValidationError);
  EXPECT_EQ(load_error({with("gaze_points", json::array({json::array({1})}))}), ErrorCode::kValidationError);
  EXPECT_EQ(load_error({with("gaze_points", json::array({json::array({1, "x"})}))}),
            ErrorCode::kValidationError);
  EXPECT_EQ(load_error({with("question", "")}), ErrorCode::kValidationError);
  EXPECT_EQ(load_error({with("reference_answer", 3)}), ErrorCode::kValidationError);
  EXPECT_EQ(load_error({with("sample_id", "../escape")}), ErrorCode::kValidationError);
  EXPECT_EQ(load_error({with("sample_id", "..")}), ErrorCode::kValidationError);
  EXPECT_EQ(load_error({with("text_token_count", -1)}), ErrorCode::kValidationError);
  EXPECT_EQ(load_error({without("sample_id")}), ErrorCode::kValidationError);
  EXPECT_EQ(load_error({without("image_path")}), ErrorCode::kValidationError);
  EXPECT_EQ(load_error({with("gaze_points", json::array({json::array({1, 1, 0.5}), json::array({2, 2, 0.1})}))}),
            ErrorCode::kValidationError);
  EXPECT_EQ(load_error({"[1, 2]"}), ErrorCode::kValidationError);
}

TEST_F(ManifestDir, DuplicateIdCitesBothLines) {
  std::string msg;
  EXPECT_EQ(load_error({sample_json("a").dump(), sample_json("b").dump(), sample_json("a").dump()}, &msg),
            ErrorCode::kValidationError);
  EXPECT_NE(msg.find("lines 1 and 3"), std::string::npos) << msg;
}

TEST_F(ManifestDir, MissingAndCorruptImages) {
  EXPECT_EQ(load_error({sample_json("a", "nope.png").dump()}), ErrorCode::kMissingImage);
  write_lines(dir / "bad.png", {"this is not an image"});
  EXPECT_EQ(load_error({sample_json("a", "bad.png").dump()}), ErrorCode::kMissingImage);
}

TEST_F(ManifestDir, LenientLoadRecordsRejects) {
  json empty_q = sample_json("c");
  empty_q["question"] = "";
  const Manifest m = load({sample_json("a").dump(), sample_json("b", "nope.png").dump(), empty_q.dump(),
                           sample_json("a").dump(), sample_json("d").dump()},
                          false);
  ASSERT_EQ(m.samples.size(), 2u);
  EXPECT_EQ(m.samples[0].sample_id, "a");
  EXPECT_EQ(m.samples[1].sample_id, "d");
  ASSERT_EQ(m.rejected.size(), 3u);
  EXPECT_EQ(m.rejected[0].sample_id, "b");
  EXPECT_EQ(m.rejected[0].line_no, 2u);
  EXPECT_EQ(m.rejected[0].code, ErrorCode::kMissingImage);
  EXPECT_EQ(m.rejected[1].code, ErrorCode::kValidationError);
  EXPECT_EQ(m.rejected[2].sample_id, "a");
  EXPECT_EQ(m.rejected[2].line_no, 4u);
}

TEST(Images, ReadsPngAndJpegFixtures) {
  const Image png = read_image(testing_support::fixture_dir() / "tiny.png");
  EXPECT_EQ(png.width(), 5);
  EXPECT_EQ(png.height(), 3);
  EXPECT_EQ(png.pixel(0, 0)[0], 10);
  EXPECT_EQ(png.pixel(0, 0)[2], 30);
  EXPECT_EQ(png.pixel(4, 2)[0], 255);
  EXPECT_EQ(png.pixel(4, 2)[2], 128);

  const Image gray = read_image(testing_support::fixture_dir() / "gray.png");
  EXPECT_EQ(gray.pixel(3, 3)[0], 77);
  EXPECT_EQ(gray.pixel(3, 3)[1], 77);

  const Image jpg = read_image(testing_support::fixture_dir() / "tiny.jpg");
  EXPECT_EQ(jpg.width(), 8);
  EXPECT_EQ(jpg.height(), 6);
  EXPECT_NEAR(jpg.pixel(4, 3)[0], 200, 6);
  EXPECT_NEAR(jpg.pixel(4, 3)[1], 30, 6);
  EXPECT_NEAR(jpg.pixel(4, 3)[2], 60, 6);

  const ImageSize size = probe_image_size(testing_support::fixture_dir() / "tiny.jpg");
  EXPECT_EQ(size.width, 8);
  EXPECT_EQ(size.height, 6);
}

TEST(Images, PngRoundTrip) {
  TempDir dir;
  testing_support::Rng rng(5);
  const Image img = testing_support::random_image(rng, 33, 17);
  write_png(dir / "x.png", img);
  EXPECT_EQ(read_image(dir / "x.png"), img);
}

TEST(Json, RoundSig6) {
  EXPECT_EQ(round_sig6(0.1 + 0.2), 0.3);
  EXPECT_EQ(round_sig6(267.61744966), 267.617);
  EXPECT_EQ(round_sig6(-1.23456789e-7), -1.23457e-7);
  EXPECT_EQ(round_sig6(0.0), 0.0);
  EXPECT_TRUE(std::isnan(round_sig6(std::nan(""))));
  EXPECT_EQ(round_sig6(round_sig6(3.14159265)), round_sig6(3.14159265));
}

TEST(Json, DumpIsSortedAndStable) {
  json a;
  a["zeta"] = 1;
  a["alpha"] = {{"b", 2}, {"a", 1}};
  const std::string text = dump_json(a);
  EXPECT_EQ(text, "{\n  \"alpha\": {\n    \"a\": 1,\n    \"b\": 2\n  },\n  \"zeta\": 1\n}\n");
  EXPECT_EQ(dump_json_line(a), R"({"alpha":{"a":1,"b":2},"zeta":1})");
}

namespace {

struct BundleFixture {
  Sample sample;
  Image image;
};

BundleFixture bundle_fixture() {
  testing_support::Rng rng(3);
  BundleFixture f;
  f.image = testing_support::random_image(rng, 120, 90);
  f.sample.sample_id = "s1";
  f.sample.question = "Which colour?";
  f.sample.image_width = 120;
  f.sample.image_height = 90;
  return f;
}

}  // namespace

TEST(Bundle, TwoScaleLayout) {
  TempDir dir;
  const BundleFixture f = bundle_fixture();
  const RoiBox box{10, 20, 65, 75, 0.31, 0.3};
  const TwoScaleInput in = assemble(make_global_view(f.image, 28, 28), make_roi_view(extract_roi(f.image, box)),
                                    f.sample.question, InputMode::kTwoScale);
  const ModelProfile profile = *builtin_profile("qwen25vl-3b-paper");
  const CostReport cost = make_cost_report(5, 36, profile);
  BundleContext ctx;
  ctx.rho = 0.3;
  ctx.box = box;
  ctx.support_mass = 0.30001;
  ctx.sigma_px = 3.0;
  ctx.manifest_version = "1";
  ctx.profile_name = profile.name;
  const fs::path out = export_bundle(f.sample, in, cost, dir.path(), ctx);
  EXPECT_EQ(out, dir.path() / "s1");
  EXPECT_EQ(testing_support::list_files(out),
            (std::vector<std::string>{"global.png", "meta.json", "prompt.txt", "roi.png"}));
  EXPECT_EQ(testing_support::read_file(out / "prompt.txt"), in.prompt_text);
  EXPECT_EQ(read_image(out / "roi.png"), in.roi_view.pixels);
  EXPECT_EQ(read_image(out / "global.png"), in.global_view->pixels);

  const json meta = json::parse(testing_support::read_file(out / "meta.json"));
  EXPECT_EQ(meta["images"], json::array({"global.png", "roi.png"}));
  EXPECT_EQ(meta["mode"], "two_scale");
  EXPECT_EQ(meta["rho"], 0.3);
  EXPECT_EQ(meta["box"]["x0"], 10);
  EXPECT_EQ(meta["box"]["y1"], 75);
  EXPECT_EQ(meta["views"]["global"]["tokens"], 1);
  EXPECT_EQ(meta["views"]["roi"]["width"], 56);
  EXPECT_EQ(meta["views"]["roi"]["tokens"], 4);
  EXPECT_EQ(meta["tokens"]["total"], 41);
  EXPECT_EQ(meta["template_version"], "gazecrop-prompt-v1");
  EXPECT_EQ(meta["image_size"]["width"], 120);
}

TEST(Bundle, RoiOnlyAndBaselineLayouts) {
  TempDir dir;
  const BundleFixture f = bundle_fixture();
  const ModelProfile profile = *builtin_profile("qwen25vl-3b-paper");
  const TwoScaleInput roi = assemble(std::nullopt, make_roi_view(extract_roi(f.image, {0, 0, 27, 27, 1, 0.5})),
                                     "q", InputMode::kRoiOnly);
  const fs::path a = export_bundle(f.sample, roi, make_cost_report(1, 36, profile), dir / "a", {});
  EXPECT_EQ(testing_support::list_files(a), (std::vector<std::string>{"meta.json", "prompt.txt", "roi.png"}));
  EXPECT_EQ(json::parse(testing_support::read_file(a / "meta.json"))["rho"], nullptr);

  const TwoScaleInput base = assemble(std::nullopt, make_baseline_view(f.image), "q", InputMode::kBaseline);
  const fs::path b = export_bundle(f.sample, base, make_cost_report(64, 36, profile), dir / "b", {});
  EXPECT_EQ(testing_support::list_files(b), (std::vector<std::string>{"full.png", "meta.json", "prompt.txt"}));
  const json meta = json::parse(testing_support::read_file(b / "meta.json"));
  EXPECT_EQ(meta["images"], json::array({"full.png"}));
  EXPECT_EQ(meta["views"]["full"]["tokens"], 64);
}

TEST(Bundle, ByteDeterministic) {
  TempDir dir;
  const BundleFixture f = bundle_fixture();
  const ModelProfile profile = *builtin_profile("qwen25vl-7b-paper");
  const TwoScaleInput in = assemble(make_global_view(f.image, 28, 28),
                                    make_roi_view(extract_roi(f.image, {3, 4, 90, 60, 0.5, 0.5})), "q",
                                    InputMode::kTwoScale);
  const CostReport cost = make_cost_report(count_visual_tokens(in, profile.geometry), 36, profile);
  const fs::path a = export_bundle(f.sample, in, cost, dir / "a", {});
  const fs::path b = export_bundle(f.sample, in, cost, dir / "b", {});
  for (const std::string& name : testing_support::list_files(a)) {
    EXPECT_EQ(testing_support::read_file(a / name), testing_support::read_file(b / name)) << name;
  }
}

TEST(Results, RowRoundTrip) {
  ResultRow r;
  r.sample_id = "x";
  r.rho = 0.1;
  r.mode = "roi_only";
  r.visual_tokens = 9;
  r.total_tokens = 45;
  r.flops_g = 143.2;
  r.roi_pixels = 3136;
  r.verdict = "win";
  r.total_score = 7.35;
  r.answer = "yes";
  const ResultRow back = result_row_from_json(json::parse(dump_json_line(to_json(r))));
  EXPECT_EQ(back.sample_id, "x");
  EXPECT_EQ(back.rho, 0.1);
  EXPECT_EQ(back.mode, "roi_only");
  EXPECT_EQ(back.visual_tokens, 9);
  EXPECT_EQ(back.total_tokens, 45);
  EXPECT_EQ(back.flops_g, 143.2);
  EXPECT_EQ(back.roi_pixels, 3136);
  EXPECT_EQ(back.verdict, "win");
  EXPECT_EQ(back.total_score, 7.35);
  EXPECT_EQ(back.answer, "yes");

  const json nulls = to_json(ResultRow{});
  EXPECT_TRUE(nulls["rho"].is_null());
  EXPECT_TRUE(nulls["verdict"].is_null());
  EXPECT_TRUE(nulls["answer"].is_null());
}

TEST(Results, FileRoundTripAndSparseRows) {
  TempDir dir;
  std::vector<ResultRow> rows(2);
  rows[0].sample_id = "a";
  rows[0].answer = "A";
  rows[1].sample_id = "b";
  write_results(dir / "r.jsonl", rows);
  const auto back = read_results(dir / "r.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].answer, "A");
  EXPECT_FALSE(back[1].answer.has_value());

  write_lines(dir / "answers.jsonl", {R"({"sample_id": "q", "answer": "x"})", "", R"({"sample_id": "r"})"});
  const auto sparse = read_results(dir / "answers.jsonl");
  ASSERT_EQ(sparse.size(), 2u);
  EXPECT_EQ(sparse[0].answer, "x");
  EXPECT_FALSE(sparse[1].answer.has_value());

  write_lines(dir / "bad.jsonl", {R"({"answer": "no id"})"});
  try {
    read_results(dir / "bad.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
  }
}
