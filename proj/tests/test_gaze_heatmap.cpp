#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "gazecrop/gaze_heatmap.hpp"
#include "test_support.hpp"

using namespace gazecrop;
using testing_support::Rng;

namespace {

Grid impulse(int w, int h, int x, int y) {
  Grid g(static_cast<std::size_t>(h), static_cast<std::size_t>(w));
  g(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = 1.0;
  return g;
}

void expect_code(ErrorCode code, auto&& fn) {
  try {
    fn();
    FAIL() << "expected " << error_code_name(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace

TEST(GazeTrace, ClampsOutOfBoundsPointsOntoTheGrid) {
  GazeTrace t({{-3.0, 5.0}, {20.0, 20.0}, {15.999, 0.0}}, 16, 16);
  EXPECT_EQ(t.clamped_count(), 2u);
  for (const auto& p : t.points()) {
    EXPECT_GE(p.x, 0.0);
    EXPECT_LT(p.x, 16.0);
    EXPECT_GE(p.y, 0.0);
    EXPECT_LT(p.y, 16.0);
  }
  const Grid g = rasterize_trace(t);
  EXPECT_EQ(g(5, 0), 1.0);
  EXPECT_EQ(g(15, 15), 1.0);
}

TEST(GazeTrace, RejectsNonFiniteAndDecreasingTimestamps) {
  expect_code(ErrorCode::kValidationError, [] { GazeTrace({{NAN, 1.0}}, 8, 8); });
  expect_code(ErrorCode::kValidationError, [] { GazeTrace({{1, 1, 2.0}, {1, 1, 1.0}}, 8, 8); });
  EXPECT_NO_THROW(GazeTrace({{1, 1, 1.0}, {1, 1, 1.0}, {2, 2, std::nullopt}}, 8, 8));
}

TEST(Rasterize, FloorBinsASinglePoint) {
  const Grid g = rasterize_trace(GazeTrace({{5.2, 7.9}}, 16, 16));
  EXPECT_EQ(g(7, 5), 1.0);
  EXPECT_EQ(g.sum(), 1.0);
}

TEST(Rasterize, AccumulatesRepeatedPoints) {
  const Grid g = rasterize_trace(GazeTrace({{0.0, 0.0}, {0.0, 0.0}}, 4, 4));
  EXPECT_EQ(g(0, 0), 2.0);
  EXPECT_EQ(g.sum(), 2.0);
}

TEST(Rasterize, SumEqualsPointCount) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const GazeTrace t = testing_support::random_trace(rng, 40, 30, 100);
    EXPECT_EQ(rasterize_trace(t).sum(), static_cast<double>(t.points().size()));
  }
}

TEST(Rasterize, EmptyTraceIsAnError) {
  expect_code(ErrorCode::kEmptyTrace, [] { rasterize_trace(GazeTrace({}, 8, 8)); });
  expect_code(ErrorCode::kEmptyTrace, [] { build_heatmap(GazeTrace({}, 8, 8), 1.0); });
}

TEST(Smooth, KernelRadiusIsCeilThreeSigma) {
  EXPECT_EQ(kernel_radius(2.0), 6);
  EXPECT_EQ(kernel_radius(2.1), 7);
  EXPECT_EQ(kernel_radius(0.1), 1);
}

TEST(Smooth, InvalidSigma) {
  const Grid g = impulse(8, 8, 4, 4);
  expect_code(ErrorCode::kInvalidSigma, [&] { gaussian_smooth(g, 0.0); });
  expect_code(ErrorCode::kInvalidSigma, [&] { gaussian_smooth(g, -1.0); });
  expect_code(ErrorCode::kInvalidSigma, [&] { gaussian_smooth(g, INFINITY); });
}

TEST(Smooth, ImpulseStaysCenteredAndRotationSymmetric) {
  const int n = 64, c = 32;
  const Grid s = gaussian_smooth(impulse(n, n, c, c), 2.0);
  double best = -1.0;
  std::size_t br = 0, bc = 0;
  for (std::size_t r = 0; r < s.rows(); ++r) {
    for (std::size_t col = 0; col < s.cols(); ++col) {
      if (s(r, col) > best) {
        best = s(r, col);
        br = r;
        bc = col;
      }
    }
  }
  EXPECT_EQ(br, 32u);
  EXPECT_EQ(bc, 32u);
  // 90 degree rotation about (c, c): (dx, dy) -> (-dy, dx).
  for (int dy = -10; dy <= 10; ++dy) {
    for (int dx = -10; dx <= 10; ++dx) {
      EXPECT_NEAR(s(c + dy, c + dx), s(c + dx, c - dy), 1e-9);
    }
  }
}

TEST(Smooth, TranslationEquivariance) {
  const int n = 128;
  const Grid a = gaussian_smooth(impulse(n, n, 32, 32), 2.0);
  const Grid b = gaussian_smooth(impulse(n, n, 35, 40), 2.0);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const int sx = x + 3, sy = y + 8;
      const double shifted = (sx < n && sy < n) ? b(sy, sx) : 0.0;
      ASSERT_NEAR(a(y, x), shifted, 1e-9) << x << "," << y;
    }
  }
}

TEST(Smooth, ZeroGridStaysZero) {
  const Grid s = gaussian_smooth(Grid(10, 12), 1.5);
  for (double v : s.values()) EXPECT_EQ(v, 0.0);
}

TEST(Smooth, InteriorImpulseKeepsItsMass) {
  const Grid s = gaussian_smooth(impulse(40, 40, 20, 20), 3.0);
  EXPECT_NEAR(s.sum(), 1.0, 1e-12);
  for (double v : s.values()) EXPECT_GE(v, 0.0);
}

TEST(Smooth, MatchesDirectTwoDimensionalConvolution) {
  // Independent oracle: explicit 2-D truncated kernel, renormalized.
  Rng rng(3);
  Grid raw(9, 13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : raw.values()) v = u(rng) < 0.3 ? u(rng) : 0.0;
  const double sigma = 1.3;
  const int r = kernel_radius(sigma);
  double k1 = 0.0;
  for (int d = -r; d <= r; ++d) k1 += std::exp(-d * d / (2 * sigma * sigma));
  const Grid s = gaussian_smooth(raw, sigma);
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 13; ++x) {
      double acc = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int sy = y - dy, sx = x - dx;
          if (sy < 0 || sy >= 9 || sx < 0 || sx >= 13) continue;
          acc += raw(sy, sx) * std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma)) / (k1 * k1);
        }
      }
      EXPECT_NEAR(s(y, x), acc, 1e-12);
    }
  }
}

TEST(Normalize, UniformAndDelta) {
  const GazeHeatmap u = normalize(Grid(4, 4, 1.0));
  for (double v : u.values().values()) EXPECT_DOUBLE_EQ(v, 1.0 / 16.0);
  Grid d(3, 3);
  d(1, 2) = 2.0;
  const GazeHeatmap h = normalize(d);
  EXPECT_EQ(h.at(2, 1), 1.0);
  EXPECT_EQ(h.values().sum(), 1.0);
}

TEST(Normalize, ZeroMass) {
  expect_code(ErrorCode::kZeroMass, [] { normalize(Grid(3, 3)); });
}

TEST(Normalize, HeatmapRejectsUnnormalizedGrids) {
  expect_code(ErrorCode::kValidationError, [] { GazeHeatmap(Grid(2, 2, 1.0), 1.0); });
  Grid neg(1, 2);
  neg(0, 0) = 1.5;
  neg(0, 1) = -0.5;
  expect_code(ErrorCode::kValidationError, [&] { GazeHeatmap(neg, 1.0); });
}

TEST(BuildHeatmap, SingleFixationPeaksAtThePoint) {
  std::vector<GazePoint> pts(10, GazePoint{20.0, 20.0});
  const GazeHeatmap h = build_heatmap(GazeTrace(pts, 64, 64), 3.0);
  const auto v = h.values().values();
  const auto idx = std::max_element(v.begin(), v.end()) - v.begin();
  EXPECT_EQ(idx % 64, 20);
  EXPECT_EQ(idx / 64, 20);
  EXPECT_EQ(h.sigma_px(), 3.0);
}

TEST(BuildHeatmap, TwoClustersGiveTwoLocalMaxima) {
  Rng rng(5);
  std::normal_distribution<double> jitter(0.0, 0.6);
  std::vector<GazePoint> pts;
  double sx[2] = {0, 0}, sy[2] = {0, 0};
  for (int c = 0; c < 2; ++c) {
    const double cx = c == 0 ? 10.5 : 50.5;
    for (int i = 0; i < 10; ++i) {
      GazePoint p{cx + jitter(rng), cx + jitter(rng)};
      sx[c] += p.x;
      sy[c] += p.y;
      pts.push_back(p);
    }
  }
  const GazeHeatmap h = build_heatmap(GazeTrace(pts, 64, 64), 2.0);
  // Brute-force scan for strict 8-neighbour local maxima.
  std::vector<std::pair<int, int>> maxima;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      const double v = h.at(x, y);
      if (v <= 1e-12) continue;
      bool peak = true;
      for (int dy = -1; dy <= 1 && peak; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if ((dx || dy) && x + dx >= 0 && x + dx < 64 && y + dy >= 0 && y + dy < 64 &&
              h.at(x + dx, y + dy) >= v) {
            peak = false;
            break;
          }
        }
      }
      if (peak) maxima.emplace_back(x, y);
    }
  }
  ASSERT_EQ(maxima.size(), 2u);
  for (int c = 0; c < 2; ++c) {
    const double mx = sx[c] / 10.0, my = sy[c] / 10.0;
    const bool near = std::any_of(maxima.begin(), maxima.end(), [&](auto m) {
      return std::abs(m.first + 0.5 - mx) <= 1.5 && std::abs(m.second + 0.5 - my) <= 1.5;
    });
    EXPECT_TRUE(near) << "cluster " << c;
  }
}

TEST(BuildHeatmap, DefaultSigmaIsTwoPercentOfTheDiagonal) {
  EXPECT_DOUBLE_EQ(default_sigma_px(300, 400), 10.0);
  EXPECT_DOUBLE_EQ(default_sigma_px(640, 480), 16.0);
}

TEST(HeatmapProperties, NormalizedNonNegativeAndOrderIndependent) {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<int> side(4, 80);
    const int w = side(rng), h = side(rng);
    const GazeTrace t = testing_support::random_trace(rng, w, h, 50);
    const double sigma = std::uniform_real_distribution<double>(0.3, 6.0)(rng);
    const GazeHeatmap hm = build_heatmap(t, sigma);
    EXPECT_NEAR(hm.values().sum(), 1.0, kHeatmapSumTolerance);
    EXPECT_GE(*std::min_element(hm.values().values().begin(), hm.values().values().end()), 0.0);
    EXPECT_EQ(hm.width(), w);
    EXPECT_EQ(hm.height(), h);

    auto pts = t.points();
    std::shuffle(pts.begin(), pts.end(), rng);
    const GazeHeatmap shuffled = build_heatmap(GazeTrace(pts, w, h), sigma);
    EXPECT_EQ(hm.values(), shuffled.values());
  }
}

TEST(HeatmapProperties, ArgmaxNearSomeTracePoint) {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const GazeTrace t = testing_support::random_trace(rng, 50, 40, 8);
    const double sigma = 1.5;
    const GazeHeatmap hm = build_heatmap(t, sigma);
    const auto v = hm.values().values();
    const auto idx = std::max_element(v.begin(), v.end()) - v.begin();
    const int ax = static_cast<int>(idx % 50), ay = static_cast<int>(idx / 50);
    const int r = kernel_radius(sigma);
    const bool near = std::any_of(t.points().begin(), t.points().end(), [&](const GazePoint& p) {
      return std::max(std::abs(static_cast<int>(p.x) - ax), std::abs(static_cast<int>(p.y) - ay)) <= r;
    });
    EXPECT_TRUE(near);
  }
}

TEST(HeatmapProperties, MassStaysNearInteriorPoints) {
  Rng rng(91);
  for (int trial = 0; trial < 30; ++trial) {
    const double sigma = 2.0;
    const int r = kernel_radius(sigma);
    std::uniform_real_distribution<double> u(r, 60 - r);
    std::vector<GazePoint> pts(5);
    for (auto& p : pts) p = {u(rng), u(rng)};
    const GazeHeatmap hm = build_heatmap(GazeTrace(pts, 60, 60), sigma);
    double near_mass = 0.0;
    for (int y = 0; y < 60; ++y) {
      for (int x = 0; x < 60; ++x) {
        for (const auto& p : pts) {
          if (std::max(std::abs(static_cast<int>(p.x) - x), std::abs(static_cast<int>(p.y) - y)) <= r) {
            near_mass += hm.at(x, y);
            break;
          }
        }
      }
    }
    EXPECT_GE(near_mass, 0.99);
  }
}

TEST(HeatmapExport, GridRoundTripsWithHeader) {
  const GazeHeatmap hm = build_heatmap(GazeTrace({{3, 4}, {7, 1}}, 9, 6), 1.0);
  const auto bytes = encode_heatmap_grid(hm);
  ASSERT_EQ(bytes.size(), 16u + 9 * 6 * 4);
  EXPECT_EQ(std::memcmp(bytes.data(), "GZHM", 4), 0);
  std::uint32_t header[3];
  std::memcpy(header, bytes.data() + 4, sizeof(header));
  EXPECT_EQ(header[0], 6u);
  EXPECT_EQ(header[1], 9u);
  EXPECT_EQ(header[2], 0u);
  const Grid back = decode_heatmap_grid(bytes);
  ASSERT_EQ(back.rows(), 6u);
  ASSERT_EQ(back.cols(), 9u);
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back.values()[i], static_cast<double>(static_cast<float>(hm.values().values()[i])));
  }
}

TEST(HeatmapExport, DecodeRejectsBadInput) {
  std::vector<std::byte> junk(10);
  expect_code(ErrorCode::kParseError, [&] { decode_heatmap_grid(junk); });
  const GazeHeatmap hm = build_heatmap(GazeTrace({{1, 1}}, 3, 3), 1.0);
  auto bytes = encode_heatmap_grid(hm);
  bytes.pop_back();
  expect_code(ErrorCode::kParseError, [&] { decode_heatmap_grid(bytes); });
}

TEST(HeatmapExport, GrayRescalesByMax) {
  Grid g(1, 4);
  g(0, 0) = 0.5;
  g(0, 1) = 0.25;
  g(0, 2) = 0.25;
  const auto gray = heatmap_to_gray(normalize(g));
  EXPECT_EQ(gray[0], 255);
  EXPECT_EQ(gray[1], 128);
  EXPECT_EQ(gray[3], 0);
}
