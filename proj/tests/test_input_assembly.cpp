#include <gtest/gtest.h>

#include "gazecrop/input_assembly.hpp"
#include "test_support.hpp"

using namespace gazecrop;
using testing_support::Rng;

namespace {

double mean(const Image& img) {
  double s = 0.0;
  for (auto b : img.bytes()) s += b;
  return s / static_cast<double>(img.bytes().size());
}

Image checkerboard(int n, std::uint8_t a, std::uint8_t b) {
  Image img(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const std::uint8_t v = ((x + y) % 2) ? b : a;
      img.pixel(x, y)[0] = img.pixel(x, y)[1] = img.pixel(x, y)[2] = v;
    }
  }
  return img;
}

template <class Fn>
void expect_code(ErrorCode code, Fn&& fn) {
  try {
    fn();
    FAIL() << "expected " << error_code_name(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace

TEST(GlobalView, TwentyEightSquareIsOneToken) {
  Rng rng(1);
  const ScaledView v = make_global_view(testing_support::random_image(rng, 640, 480), 28, 28);
  EXPECT_EQ(v.width(), 28);
  EXPECT_EQ(v.height(), 28);
  EXPECT_EQ(v.role, ViewRole::kGlobal);
}

TEST(GlobalView, ConstantImageStaysConstant) {
  Image img(77, 51);
  for (int y = 0; y < 51; ++y) {
    for (int x = 0; x < 77; ++x) {
      img.pixel(x, y)[0] = 10;
      img.pixel(x, y)[1] = 120;
      img.pixel(x, y)[2] = 250;
    }
  }
  for (auto [h, w] : {std::pair{28, 28}, std::pair{56, 84}, std::pair{112, 28}}) {
    const ScaledView v = make_global_view(img, h, w);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        ASSERT_EQ(v.pixels.pixel(x, y)[0], 10);
        ASSERT_EQ(v.pixels.pixel(x, y)[1], 120);
        ASSERT_EQ(v.pixels.pixel(x, y)[2], 250);
      }
    }
  }
}

TEST(GlobalView, CheckerboardDownsampleIsMeanPreserving) {
  const Image img = checkerboard(56, 10, 250);
  const ScaledView v = make_global_view(img, 28, 28);
  EXPECT_NEAR(mean(v.pixels), mean(img), 1e-6);
}

TEST(GlobalView, BadTarget) {
  const Image img(30, 30);
  expect_code(ErrorCode::kBadTarget, [&] { make_global_view(img, 30, 28); });
  expect_code(ErrorCode::kBadTarget, [&] { make_global_view(img, 0, 28); });
  expect_code(ErrorCode::kBadTarget, [&] { make_global_view(img, 28, -28); });
}

TEST(SnapToPitch, NearestMultipleWithBounds) {
  const TokenGeometry g;
  EXPECT_EQ(snap_to_pitch(56, g), 56);
  EXPECT_EQ(snap_to_pitch(84, g), 84);
  EXPECT_EQ(snap_to_pitch(30, g), 28);
  EXPECT_EQ(snap_to_pitch(41, g), 28);
  EXPECT_EQ(snap_to_pitch(42, g), 56);  // halves round up
  EXPECT_EQ(snap_to_pitch(1, g), 28);
  EXPECT_EQ(snap_to_pitch(300, g), 224);
  EXPECT_EQ(snap_to_pitch(300, g, {.max_pitches = 12}), 308);
}

TEST(RoiView, SnapsEachSide) {
  Rng rng(2);
  const ScaledView a = make_roi_view(testing_support::random_image(rng, 56, 84));
  EXPECT_EQ(a.width(), 56);
  EXPECT_EQ(a.height(), 84);
  EXPECT_EQ(a.role, ViewRole::kRoi);
  const ScaledView b = make_roi_view(testing_support::random_image(rng, 30, 30));
  EXPECT_EQ(b.width(), 28);
  EXPECT_EQ(b.height(), 28);
  const ScaledView c = make_roi_view(testing_support::random_image(rng, 300, 300));
  EXPECT_EQ(c.width(), 224);
  EXPECT_EQ(c.height(), 224);
}

TEST(RoiView, AlreadySnappedCropIsPixelExact) {
  Rng rng(3);
  const Image crop = testing_support::random_image(rng, 56, 84);
  EXPECT_EQ(make_roi_view(crop).pixels, crop);
}

TEST(RoiView, EmptyCrop) {
  expect_code(ErrorCode::kEmptyInput, [] { make_roi_view(Image()); });
}

TEST(RoiView, EveryViewIsAPitchMultiple) {
  Rng rng(4);
  std::uniform_int_distribution<int> side(1, 400);
  for (int t = 0; t < 100; ++t) {
    const ScaledView v = make_roi_view(Image(side(rng), side(rng)));
    EXPECT_EQ(v.width() % 28, 0);
    EXPECT_EQ(v.height() % 28, 0);
    EXPECT_GE(v.width(), 28);
    EXPECT_LE(v.width(), 224);
  }
}

TEST(BaselineView, FullImageAt224) {
  const ScaledView v = make_baseline_view(Image(640, 480));
  EXPECT_EQ(v.width(), 224);
  EXPECT_EQ(v.height(), 224);
  EXPECT_EQ(v.role, ViewRole::kFull);
}

TEST(Assemble, TwoScalePromptIsBitExact) {
  const ScaledView g = make_global_view(Image(50, 50), 28, 28);
  const ScaledView r = make_roi_view(Image(56, 56));
  const TwoScaleInput in = assemble(g, r, "What color is the cup?", InputMode::kTwoScale);
  EXPECT_EQ(in.prompt_text,
            "You are given two images. The first image is a low-resolution view of the whole scene. "
            "The second image is a region of interest (ROI) selected by the user's eye gaze; "
            "prioritize the ROI when reasoning. Question: What color is the cup?");
  EXPECT_NE(in.prompt_text.find(kRoiPrioritySentence), std::string::npos);
  ASSERT_TRUE(in.global_view.has_value());
  EXPECT_EQ(in.global_view->role, ViewRole::kGlobal);
  EXPECT_EQ(in.roi_view.role, ViewRole::kRoi);
  EXPECT_EQ(in.template_version, "gazecrop-prompt-v1");
}

TEST(Assemble, RoiOnlyOmitsThePrioritySentence) {
  const TwoScaleInput in =
      assemble(std::nullopt, make_roi_view(Image(56, 56)), "Is it raining?", InputMode::kRoiOnly);
  EXPECT_EQ(in.prompt_text,
            "You are given one image showing the region the user is looking at. Question: Is it raining?");
  EXPECT_EQ(in.prompt_text.find(kRoiPrioritySentence), std::string::npos);
  EXPECT_FALSE(in.global_view.has_value());
}

TEST(Assemble, QuestionIsInsertedVerbatim) {
  const std::string q = "Why {question} and \"quotes\"?\nSecond line";
  const std::string p = render_prompt(InputMode::kRoiOnly, q);
  EXPECT_EQ(p.substr(p.size() - q.size()), q);
}

TEST(Assemble, ModeMismatch) {
  const ScaledView g = make_global_view(Image(50, 50), 28, 28);
  const ScaledView r = make_roi_view(Image(56, 56));
  expect_code(ErrorCode::kModeMismatch, [&] { assemble(std::nullopt, r, "q", InputMode::kTwoScale); });
  expect_code(ErrorCode::kModeMismatch, [&] { assemble(g, r, "q", InputMode::kRoiOnly); });
  expect_code(ErrorCode::kModeMismatch, [&] { assemble(std::nullopt, g, "q", InputMode::kRoiOnly); });
  expect_code(ErrorCode::kModeMismatch, [&] { assemble(std::nullopt, r, "q", InputMode::kBaseline); });
}

TEST(InputMode, NamesRoundTrip) {
  for (InputMode m : {InputMode::kRoiOnly, InputMode::kTwoScale, InputMode::kBaseline}) {
    EXPECT_EQ(parse_input_mode(input_mode_name(m)), m);
  }
  expect_code(ErrorCode::kUsage, [] { parse_input_mode("three_scale"); });
}
