#pragma once

namespace gazecrop {

/// Pixel side length covered by one vision token.
struct TokenGeometry {
  int token_pitch = 28;
};

inline constexpr int kDefaultTokenPitch = 28;

}  // namespace gazecrop
