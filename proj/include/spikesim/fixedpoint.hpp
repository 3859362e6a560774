#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace spikesim {

// Graded spike payloads are 24-bit signed integers; activations are 16-bit.
inline constexpr int32_t kSpikeMax = (1 << 23) - 1;
inline constexpr int32_t kSpikeMin = -(1 << 23);
inline constexpr int32_t kAct16Max = 32767;
inline constexpr int32_t kAct16Min = -32768;

/// Round-to-nearest, ties to even. Input is clamped to the int64 range
/// first; NaN maps to 0.
inline int64_t round_half_even(double x) {
  if (std::isnan(x)) return 0;
  if (x >= 9.2233720368547748e18) return INT64_MAX;
  if (x <= -9.2233720368547748e18) return INT64_MIN;
  const double fl = std::floor(x);
  const double frac = x - fl;
  auto lo = static_cast<int64_t>(fl);
  if (frac > 0.5) return lo + 1;
  if (frac < 0.5) return lo;
  return (lo % 2 == 0) ? lo : lo + 1;
}

inline int64_t clamp_signed(int64_t v, int bits) {
  const int64_t hi = (int64_t{1} << (bits - 1)) - 1;
  const int64_t lo = -(int64_t{1} << (bits - 1));
  return v > hi ? hi : (v < lo ? lo : v);
}

/// 24-bit signed spike magnitude. Construction saturates, never wraps.
struct SpikePayload {
  int32_t value = 0;

  static SpikePayload saturate(int64_t x) {
    return SpikePayload{static_cast<int32_t>(clamp_signed(x, 24))};
  }
};

inline SpikePayload saturate24(int64_t x) { return SpikePayload::saturate(x); }

/// 16-bit signed activation value. Construction saturates.
struct Activation16 {
  int16_t value = 0;

  static Activation16 saturate(int64_t x) {
    return Activation16{static_cast<int16_t>(clamp_signed(x, 16))};
  }
};

inline int32_t clamp16(int64_t v) {
  return static_cast<int32_t>(clamp_signed(v, 16));
}

/// 8-bit weight with a power-of-two scale exponent shared per layer.
/// The represented real weight is value * 2^scale_exp.
struct Weight8 {
  int8_t value = 0;
  int8_t scale_exp = 0;

  static Weight8 make(int64_t value, int scale_exp) {
    if (scale_exp < -31 || scale_exp > 31)
      throw std::invalid_argument("Weight8: scale exponent out of [-31, 31]");
    return Weight8{static_cast<int8_t>(clamp_signed(value, 8)),
                   static_cast<int8_t>(scale_exp)};
  }

  double real_value() const { return std::ldexp(double(value), scale_exp); }
};

/// Round-to-nearest-even quantization of x * 2^scale_exp, saturated to the
/// signed `bits` range. bits must be 8, 16 or 24.
inline int64_t quantize(double x, int bits, int scale_exp) {
  if (bits != 8 && bits != 16 && bits != 24)
    throw std::invalid_argument("quantize: bits must be 8, 16 or 24");
  return clamp_signed(round_half_even(std::ldexp(x, scale_exp)), bits);
}

inline double dequantize(int64_t v, int scale_exp) {
  return std::ldexp(double(v), -scale_exp);
}

/// v * 2^scale_exp on integers. Negative exponents divide with
/// round-to-nearest-even; positive exponents shift left.
inline int64_t shift_scale(int64_t v, int scale_exp) {
  if (scale_exp >= 0) return v << scale_exp;
  const int k = -scale_exp;
  const int64_t q = v >> k;  // floor
  const int64_t r = v - (q << k);
  const int64_t half = int64_t{1} << (k - 1);
  if (r > half || (r == half && (q & 1))) return q + 1;
  return q;
}

/// A timestamped graded-spike event. Zero-valued spikes do not exist:
/// absence of an event encodes zero.
struct GradedSpike {
  int64_t timestep = 0;
  int32_t source_unit = 0;
  SpikePayload payload;

  GradedSpike(int64_t t, int32_t unit, SpikePayload p)
      : timestep(t), source_unit(unit), payload(p) {
    if (t < 0) throw std::invalid_argument("GradedSpike: negative timestep");
    if (p.value == 0)
      throw std::invalid_argument("GradedSpike: zero-valued spike");
  }
};

}  // namespace spikesim
