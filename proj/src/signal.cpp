#include "spikesim/signal.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace spikesim {

std::vector<double> gen_chirp(const ChirpSpec& spec) {
  if (!(spec.f_start > 0.0) || spec.f_start > spec.f_end)
    throw std::invalid_argument("gen_chirp: need 0 < f_start <= f_end");
  if (!(spec.f_end < spec.sample_rate / 2.0))
    throw std::invalid_argument("gen_chirp: f_end violates Nyquist");
  if (!(spec.duration_s > 0.0))
    throw std::invalid_argument("gen_chirp: duration must be positive");

  const double fs = spec.sample_rate;
  const auto n = static_cast<size_t>(std::lround(spec.duration_s * fs));
  std::vector<double> x(n);
  for (size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i);
    const double phase =
        2.0 * std::numbers::pi *
        (spec.f_start * t / fs +
         (spec.f_end - spec.f_start) * t * t / (2.0 * spec.duration_s * fs * fs));
    x[i] = spec.amplitude * std::sin(phase) * 32767.0;
  }
  return x;
}

std::vector<std::vector<int16_t>> gen_correlated_stream(
    const CorrelatedStreamSpec& spec) {
  if (spec.frames < 1)
    throw std::invalid_argument("gen_correlated_stream: frames must be >= 1");
  if (spec.step_scale < 0.0 || spec.step_scale > 1.0)
    throw std::invalid_argument(
        "gen_correlated_stream: step_scale must be in [0, 1]");

  const int64_t units = spec.shape.units();
  const int64_t range = 32767;
  const auto step_max =
      static_cast<int64_t>(std::lround(spec.step_scale * range));
  SeededRng rng(spec.seed);

  std::vector<std::vector<int16_t>> frames(
      spec.frames, std::vector<int16_t>(units));
  for (int64_t u = 0; u < units; ++u)
    frames[0][u] = static_cast<int16_t>(rng.uniform_int(0, range));
  for (int32_t t = 1; t < spec.frames; ++t)
    for (int64_t u = 0; u < units; ++u) {
      const int64_t step = rng.uniform_int(-step_max, step_max);
      int64_t v = frames[t - 1][u] + step;
      if (v < 0) v = 0;
      if (v > range) v = range;
      frames[t][u] = static_cast<int16_t>(v);
    }
  return frames;
}

std::vector<double> load_signal_pcm16(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open signal file " + path);
  std::vector<double> out;
  char buf[2];
  while (in.read(buf, 2)) {
    const auto lo = static_cast<uint8_t>(buf[0]);
    const auto hi = static_cast<uint8_t>(buf[1]);
    out.push_back(static_cast<double>(static_cast<int16_t>(
        static_cast<uint16_t>(lo) | (static_cast<uint16_t>(hi) << 8))));
  }
  if (out.empty()) throw std::runtime_error("signal file " + path + " is empty");
  return out;
}

std::vector<double> load_signal_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open signal file " + path);
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double v = 0.0;
    if (std::sscanf(line.c_str(), "%lf", &v) == 1)
      out.push_back(v);
    // non-numeric rows (headers) are skipped
  }
  if (out.empty())
    throw std::runtime_error("signal file " + path +
                             " contains no numeric rows");
  return out;
}

}  // namespace spikesim
