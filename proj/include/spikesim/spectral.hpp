#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "spikesim/neuron.hpp"

namespace spikesim {

/// Bank of resonate-and-fire neurons with evenly spaced center frequencies,
/// shared decay lambda = exp(-1/window).
struct RfBank {
  std::vector<RfState> neurons;
  std::vector<double> freqs_hz;
  std::vector<int32_t> periods;  // round(2*pi/omega) per neuron, timesteps
  double sample_rate = 0.0;
  double lambda = 1.0;  // unquantized value; neurons hold the Q.24 form
  int32_t window = 0;
};

RfBank make_bank(double f_min, double f_max, int n, double sample_rate,
                 int window, int64_t spike_threshold = 1);

enum class WindowKind { kRect, kExp };

/// Time-frequency array of complex coefficients in activation units.
/// align_offset is the sample offset (relative to the column index) that the
/// column's phase is referenced to: 0 for the causal RF bank, the window
/// center for the rectangular reference transform.
struct Spectrogram {
  std::vector<std::vector<std::complex<double>>> coeffs;  // [time][freq]
  std::vector<double> freqs_hz;
  double sample_rate = 0.0;
  int32_t hop = 1;
  int32_t window = 0;
  WindowKind window_kind = WindowKind::kExp;
  int32_t align_offset = 0;

  size_t columns() const { return coeffs.size(); }
  size_t bins() const { return coeffs.empty() ? 0 : coeffs[0].size(); }
};

/// Sparse spike view of an RF spectrogram: per-neuron upward-crossing events
/// carrying the 24-bit coefficient magnitude; phase is carried by timing.
struct SpikeTimingCode {
  struct Event {
    int32_t neuron = 0;
    int64_t timestep = 0;
    int32_t magnitude = 0;
  };
  std::vector<Event> events;
  std::vector<int32_t> period_per_neuron;
};

/// Drives every bank neuron with the real signal (quantized to 16-bit
/// activations on ingestion) and records each neuron's state per timestep.
std::pair<Spectrogram, SpikeTimingCode> rf_stft(const RfBank& bank,
                                                std::span<const double> signal);

/// Sliding rectangular-window DFT evaluated at the bank's frequencies by
/// direct summation; the oracle the RF path is scored against.
Spectrogram reference_stft(const RfBank& bank, std::span<const double> signal,
                           int window, int hop);

/// Timing phase in [0, 2*pi): fraction of the oscillation period elapsed
/// since the nearest spike at or before `timestep`. The upward Im crossing
/// anchors the oscillation, so arg(z) at phase 0 sits at the half-plane
/// crossing angle; only phase differences are convention-free.
double decode_phase(const SpikeTimingCode& code, int neuron,
                    int64_t timestep);

/// Per-column overlap-add style reconstruction: sum over bins of
/// Re(coeff * e^{i*omega_k*align_offset}) with uniform per-band weights
/// normalized by the window gain. Output sample m estimates the input at
/// m + align_offset.
std::vector<double> reconstruct(const Spectrogram& spec, const RfBank& bank);

/// Pearson correlation coefficient. Throws on length mismatch, length < 2,
/// or zero variance in either input.
double correlation(std::span<const double> a, std::span<const double> b);

/// Float-mode bank evaluation (complex double recursion, no quantization of
/// state or constants). Test aid for window-interpretation checks.
std::vector<std::vector<std::complex<double>>> rf_response_float(
    const RfBank& bank, std::span<const double> signal);

/// CSV with one row per time column: coefficient magnitudes per frequency.
void write_spectrogram_csv(const Spectrogram& spec, std::ostream& out);

}  // namespace spikesim
