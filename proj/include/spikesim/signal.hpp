#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "spikesim/network.hpp"

namespace spikesim {

/// Deterministic uniform integers on top of mt19937_64. The standard
/// distributions are implementation-defined, so draws are mapped by modulo;
/// the bias is negligible for the spans used here and the sequence is
/// identical on every platform.
class SeededRng {
 public:
  explicit SeededRng(uint64_t seed) : engine_(seed) {}

  int64_t uniform_int(int64_t lo, int64_t hi) {  // inclusive bounds
    const auto span = static_cast<uint64_t>(hi - lo + 1);
    return lo + static_cast<int64_t>(engine_() % span);
  }

  double uniform_unit() {  // [0, 1) with 53 random bits
    return double(engine_() >> 11) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 engine_;
};

struct ChirpSpec {
  double f_start = 50.0;
  double f_end = 1000.0;
  double duration_s = 1.0;
  double sample_rate = 4096.0;
  double amplitude = 0.5;  // fraction of full scale
};

/// Linear sweep from f_start to f_end over the duration, emitted in
/// activation units (amplitude * 32767).
std::vector<double> gen_chirp(const ChirpSpec& spec);

struct CorrelatedStreamSpec {
  Shape shape;
  int32_t frames = 1;
  double step_scale = 0.02;  // per-pixel random-walk step, fraction of range
  uint64_t seed = 0;
};

/// Frame 0 is uniform over [0, 32767]; each later frame adds an independent
/// per-pixel uniform step in +-step_scale*range, clamped to the range.
std::vector<std::vector<int16_t>> gen_correlated_stream(
    const CorrelatedStreamSpec& spec);

/// Raw 16-bit signed little-endian PCM, returned in activation units.
std::vector<double> load_signal_pcm16(const std::string& path);

/// Single-column CSV of real values (header rows are skipped).
std::vector<double> load_signal_csv(const std::string& path);

}  // namespace spikesim
