#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "spikesim/fixedpoint.hpp"

namespace spikesim {

/// Delta encoder: transmits the change against the last communicated
/// reference when it exceeds the threshold. The reference moves only when
/// a spike is emitted, so the tracking error never exceeds the threshold.
struct DeltaState {
  int32_t x_ref = 0;
  int32_t threshold = 0;  // >= 0

  /// Returns the emitted spike value; 0 means silence.
  int32_t step(int32_t x) {
    const int32_t d = x - x_ref;
    const int32_t mag = d < 0 ? -d : d;
    if (mag > threshold) {
      x_ref += d;
      return d;
    }
    return 0;
  }
};

/// Sigma decoder: running sum of received spike values.
struct SigmaState {
  int64_t x_rec = 0;

  int64_t step(int64_t s) {
    x_rec += s;
    return x_rec;
  }
};

/// ReLU wrapped in a sigma decoder (input side) and delta encoder (output
/// side). The sigma accumulator holds raw weighted sums; scale_exp converts
/// them to activation units when the activation is evaluated, so repeated
/// incremental updates reconstruct exactly the same value as a dense
/// evaluation of the accumulated input.
struct SdReluUnit {
  SigmaState sigma;
  int32_t bias = 0;       // activation units
  int32_t scale_exp = 0;  // weight scale applied to the accumulator
  DeltaState delta;

  int32_t activation() const {
    int64_t a = shift_scale(sigma.x_rec, scale_exp) + bias;
    if (a < 0) a = 0;
    return clamp16(a);
  }

  /// Accumulates one timestep's weighted input sum and returns the emitted
  /// spike value (0 = no spike).
  int32_t step(int64_t weighted_input) {
    sigma.step(weighted_input);
    return delta.step(activation());
  }
};

/// Linear readout unit: sigma decoder plus a zero-threshold delta encoder,
/// used as a network output stage. Emits the change of its clamped readout.
struct PassSigmaUnit {
  SigmaState sigma;
  int32_t bias = 0;
  int32_t scale_exp = 0;
  int32_t last_out = 0;

  int32_t readout() const {
    return clamp16(shift_scale(sigma.x_rec, scale_exp) + bias);
  }

  int32_t step(int64_t weighted_input) {
    sigma.step(weighted_input);
    const int32_t out = readout();
    const int32_t s = out - last_out;
    last_out = out;
    return s;
  }
};

enum class LifReset { kToZero, kSubtractThreshold };

/// Leaky integrate-and-fire neuron with a Q0.12 fixed-point decay factor.
/// The decay multiply truncates toward zero, so the membrane magnitude
/// strictly decreases under zero input whenever decay < 1.
struct LifState {
  int64_t v = 0;
  int32_t decay_q12 = kLifOne;  // 4096 = 1.0
  int64_t threshold = 1;        // > 0
  LifReset reset = LifReset::kToZero;

  static constexpr int32_t kLifOne = 1 << 12;

  static LifState make(double decay, int64_t threshold,
                       LifReset reset = LifReset::kToZero);

  /// v <- decay*v + input; returns true when v crosses the threshold.
  bool step(int64_t input) {
    v = (v * decay_q12) / kLifOne + input;  // trunc toward zero
    if (v > threshold) {
      if (reset == LifReset::kToZero)
        v = 0;
      else
        v -= threshold;
      return true;
    }
    return false;
  }
};

enum class RfMechanism { kImHalfPlane, kReThreshold };
enum class RfReset { kNone, kZeroOnSpike };

/// Resonate-and-fire neuron: complex state z rotating by omega per step and
/// decaying by lambda <= 1. State is kept in Q.16 fixed point (16 fractional
/// bits below one activation unit); rotation and decay constants are
/// quantized to 24 fractional bits at construction and applied with
/// round-to-nearest.
struct RfState {
  static constexpr int kStateFrac = 16;
  static constexpr int kConstFrac = 24;
  static constexpr int32_t kConstOne = 1 << kConstFrac;

  int64_t z_re_q = 0;  // activation units * 2^16
  int64_t z_im_q = 0;
  int32_t cos_q = kConstOne;  // cos(omega), Q.24
  int32_t sin_q = 0;          // sin(omega), Q.24
  int32_t lambda_q = kConstOne;
  int64_t threshold = 1;  // activation units, > 0
  RfMechanism mechanism = RfMechanism::kImHalfPlane;
  RfReset reset = RfReset::kNone;

  /// Rejects lambda outside [0, 1] and non-positive thresholds.
  static RfState make(double lambda, double omega, int64_t threshold,
                      RfMechanism mechanism = RfMechanism::kImHalfPlane,
                      RfReset reset = RfReset::kNone);

  int64_t re() const { return shift_scale(z_re_q, -kStateFrac); }
  int64_t im() const { return shift_scale(z_im_q, -kStateFrac); }

  /// Integer magnitude of z in activation units.
  int64_t magnitude() const;

  /// Advances one timestep with complex input a (activation units).
  /// Returns the 24-bit graded payload when the spike mechanism fires.
  std::optional<SpikePayload> step(int64_t a_re, int64_t a_im);

  void set_state_units(int64_t re_units, int64_t im_units) {
    z_re_q = re_units << kStateFrac;
    z_im_q = im_units << kStateFrac;
  }
};

/// Drives a fresh RF neuron with a complex exponential of the given
/// frequency and amplitude and returns the |z| trace in activation units.
/// Diagnostic: the trace peaks when drive_omega matches omega and converges
/// to amplitude/(1-lambda) at resonance for lambda < 1.
std::vector<double> rf_resonance_gain(double lambda, double omega,
                                      double drive_omega, int64_t amplitude,
                                      int64_t duration);

}  // namespace spikesim
