#include "spikesim/neuron.hpp"

#include <cmath>
#include <stdexcept>

namespace spikesim {

namespace {

// Multiply a Q.16 state component by a Q.24 constant, round to nearest.
inline int64_t mul_const(int64_t state_q, int64_t const_q) {
  const __int128 p = static_cast<__int128>(state_q) * const_q;
  return static_cast<int64_t>((p + (int64_t{1} << 23)) >> RfState::kConstFrac);
}

inline int64_t isqrt_u64(uint64_t v) {
  if (v == 0) return 0;
  auto r = static_cast<uint64_t>(std::sqrt(static_cast<double>(v)));
  while (r > 0 && r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return static_cast<int64_t>(r);
}

}  // namespace

LifState LifState::make(double decay, int64_t threshold, LifReset reset) {
  if (!(decay >= 0.0 && decay <= 1.0))
    throw std::invalid_argument("LifState: decay must be in [0, 1]");
  if (threshold <= 0)
    throw std::invalid_argument("LifState: threshold must be positive");
  LifState s;
  s.decay_q12 = static_cast<int32_t>(round_half_even(decay * kLifOne));
  s.threshold = threshold;
  s.reset = reset;
  return s;
}

RfState RfState::make(double lambda, double omega, int64_t threshold,
                      RfMechanism mechanism, RfReset reset) {
  if (!(lambda >= 0.0) || lambda > 1.0)
    throw std::invalid_argument("RfState: lambda must be in [0, 1]");
  if (threshold <= 0)
    throw std::invalid_argument("RfState: threshold must be positive");
  RfState s;
  s.cos_q = static_cast<int32_t>(round_half_even(std::cos(omega) * kConstOne));
  s.sin_q = static_cast<int32_t>(round_half_even(std::sin(omega) * kConstOne));
  s.lambda_q = static_cast<int32_t>(round_half_even(lambda * kConstOne));
  s.threshold = threshold;
  s.mechanism = mechanism;
  s.reset = reset;
  return s;
}

int64_t RfState::magnitude() const {
  const int64_t re_u = re();
  const int64_t im_u = im();
  // Beyond this the 24-bit payload saturates anyway; keeps squares in range.
  const int64_t lim = int64_t{1} << 24;
  if (re_u >= lim || re_u <= -lim || im_u >= lim || im_u <= -lim)
    return lim;
  return isqrt_u64(static_cast<uint64_t>(re_u * re_u + im_u * im_u));
}

std::optional<SpikePayload> RfState::step(int64_t a_re, int64_t a_im) {
  const int64_t prev_im_q = z_im_q;

  const int64_t rot_re = mul_const(z_re_q, cos_q) - mul_const(z_im_q, sin_q);
  const int64_t rot_im = mul_const(z_re_q, sin_q) + mul_const(z_im_q, cos_q);
  z_re_q = mul_const(rot_re, lambda_q) + (a_re << kStateFrac);
  z_im_q = mul_const(rot_im, lambda_q) + (a_im << kStateFrac);

  const int64_t thr_q = threshold << kStateFrac;
  bool fire = false;
  if (mechanism == RfMechanism::kImHalfPlane) {
    // Upward crossing only: at most one spike per oscillation period.
    fire = prev_im_q <= thr_q && z_im_q > thr_q;
  } else {
    fire = z_re_q > thr_q;
  }
  if (!fire) return std::nullopt;

  const SpikePayload payload = saturate24(magnitude());
  if (reset == RfReset::kZeroOnSpike) {
    z_re_q = 0;
    z_im_q = 0;
  }
  // A spike with zero magnitude carries no information; suppress it.
  if (payload.value == 0) return std::nullopt;
  return payload;
}

std::vector<double> rf_resonance_gain(double lambda, double omega,
                                      double drive_omega, int64_t amplitude,
                                      int64_t duration) {
  if (!(lambda > 0.0 && lambda <= 1.0))
    throw std::invalid_argument("rf_resonance_gain: lambda must be in (0, 1]");
  if (duration < 1)
    throw std::invalid_argument("rf_resonance_gain: duration must be >= 1");

  RfState s = RfState::make(lambda, omega, /*threshold=*/INT64_MAX >> 20);
  std::vector<double> trace;
  trace.reserve(static_cast<size_t>(duration));
  for (int64_t t = 0; t < duration; ++t) {
    const double phase = drive_omega * static_cast<double>(t);
    const int64_t a_re = round_half_even(amplitude * std::cos(phase));
    const int64_t a_im = round_half_even(amplitude * std::sin(phase));
    s.step(a_re, a_im);
    trace.push_back(std::hypot(static_cast<double>(s.z_re_q),
                               static_cast<double>(s.z_im_q)) /
                    double(int64_t{1} << RfState::kStateFrac));
  }
  return trace;
}

}  // namespace spikesim
