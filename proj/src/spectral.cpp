#include "spikesim/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace spikesim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int32_t quantize16(double x) {
  return clamp16(round_half_even(x));
}

}  // namespace

RfBank make_bank(double f_min, double f_max, int n, double sample_rate,
                 int window, int64_t spike_threshold) {
  if (n < 1) throw std::invalid_argument("make_bank: need at least 1 neuron");
  if (!(f_min > 0.0) || !(f_min < f_max))
    throw std::invalid_argument("make_bank: need 0 < f_min < f_max");
  if (!(f_max < sample_rate / 2.0))
    throw std::invalid_argument("make_bank: f_max violates Nyquist (" +
                                std::to_string(f_max) + " Hz at " +
                                std::to_string(sample_rate) + " steps/s)");
  if (window < 1) throw std::invalid_argument("make_bank: window must be >= 1");

  RfBank bank;
  bank.sample_rate = sample_rate;
  bank.window = window;
  bank.lambda = std::exp(-1.0 / window);
  bank.neurons.reserve(n);
  bank.freqs_hz.reserve(n);
  bank.periods.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double f =
        n == 1 ? f_min : f_min + (f_max - f_min) * double(k) / double(n - 1);
    const double omega = kTwoPi * f / sample_rate;
    bank.freqs_hz.push_back(f);
    bank.periods.push_back(
        static_cast<int32_t>(std::lround(kTwoPi / omega)));
    bank.neurons.push_back(
        RfState::make(bank.lambda, omega, spike_threshold));
  }
  return bank;
}

std::pair<Spectrogram, SpikeTimingCode> rf_stft(
    const RfBank& bank, std::span<const double> signal) {
  if (signal.empty()) throw std::invalid_argument("rf_stft: empty signal");

  const size_t nb = bank.neurons.size();
  std::vector<RfState> neurons = bank.neurons;  // run on a copy

  Spectrogram spec;
  spec.freqs_hz = bank.freqs_hz;
  spec.sample_rate = bank.sample_rate;
  spec.hop = 1;
  spec.window = bank.window;
  spec.window_kind = WindowKind::kExp;
  spec.align_offset = 0;
  spec.coeffs.assign(signal.size(),
                     std::vector<std::complex<double>>(nb));

  SpikeTimingCode code;
  code.period_per_neuron = bank.periods;

  for (size_t t = 0; t < signal.size(); ++t) {
    const int32_t x = quantize16(signal[t]);
    for (size_t k = 0; k < nb; ++k) {
      const auto payload = neurons[k].step(x, 0);
      spec.coeffs[t][k] = {static_cast<double>(neurons[k].re()),
                           static_cast<double>(neurons[k].im())};
      if (payload)
        code.events.push_back({static_cast<int32_t>(k),
                               static_cast<int64_t>(t), payload->value});
    }
  }
  return {std::move(spec), std::move(code)};
}

Spectrogram reference_stft(const RfBank& bank, std::span<const double> signal,
                           int window, int hop) {
  if (window < 1 || hop < 1)
    throw std::invalid_argument("reference_stft: window and hop must be >= 1");
  if (static_cast<int>(signal.size()) < window)
    throw std::invalid_argument(
        "reference_stft: signal shorter than the window (" +
        std::to_string(signal.size()) + " < " + std::to_string(window) + ")");

  const size_t nb = bank.freqs_hz.size();
  std::vector<int32_t> xq(signal.size());
  for (size_t i = 0; i < signal.size(); ++i) xq[i] = quantize16(signal[i]);

  // per-bin twiddles for the window, computed once
  std::vector<std::vector<std::complex<double>>> basis(nb);
  for (size_t k = 0; k < nb; ++k) {
    const double omega = kTwoPi * bank.freqs_hz[k] / bank.sample_rate;
    basis[k].resize(window);
    for (int j = 0; j < window; ++j)
      basis[k][j] = std::polar(1.0, -omega * j);
  }

  Spectrogram spec;
  spec.freqs_hz = bank.freqs_hz;
  spec.sample_rate = bank.sample_rate;
  spec.hop = hop;
  spec.window = window;
  spec.window_kind = WindowKind::kRect;
  spec.align_offset = (window - 1) / 2;

  const size_t cols = (signal.size() - window) / hop + 1;
  spec.coeffs.assign(cols, std::vector<std::complex<double>>(nb));
  for (size_t m = 0; m < cols; ++m) {
    const size_t base = m * hop;
    for (size_t k = 0; k < nb; ++k) {
      std::complex<double> acc{0.0, 0.0};
      const auto& bk = basis[k];
      for (int j = 0; j < window; ++j)
        acc += double(xq[base + j]) * bk[j];
      spec.coeffs[m][k] = acc;
    }
  }
  return spec;
}

double decode_phase(const SpikeTimingCode& code, int neuron,
                    int64_t timestep) {
  if (neuron < 0 ||
      neuron >= static_cast<int>(code.period_per_neuron.size()))
    throw std::invalid_argument("decode_phase: neuron index out of range");
  const int64_t period = code.period_per_neuron[neuron];

  int64_t best = -1;
  for (const auto& ev : code.events) {
    if (ev.neuron != neuron || ev.timestep > timestep) continue;
    if (ev.timestep > best) best = ev.timestep;
  }
  if (best < 0 || timestep - best >= period)
    throw std::runtime_error(
        "decode_phase: no spike within one period before timestep " +
        std::to_string(timestep));
  return kTwoPi * double((timestep - best) % period) / double(period);
}

std::vector<double> reconstruct(const Spectrogram& spec, const RfBank& bank) {
  const size_t nb = bank.freqs_hz.size();
  if (spec.bins() != nb)
    throw std::invalid_argument("reconstruct: spectrogram has " +
                                std::to_string(spec.bins()) +
                                " bins but the bank has " +
                                std::to_string(nb));

  // window gain: rectangular -> window length; exponential -> sum of lambda^t
  double gain = spec.window;
  if (spec.window_kind == WindowKind::kExp) {
    gain = 0.0;
    double p = 1.0;
    for (int t = 0; t < spec.window; ++t, p *= bank.lambda) gain += p;
  }
  const double weight = 2.0 / (double(nb) * gain);

  std::vector<std::complex<double>> align(nb);
  for (size_t k = 0; k < nb; ++k) {
    const double omega = kTwoPi * bank.freqs_hz[k] / bank.sample_rate;
    align[k] = std::polar(1.0, omega * spec.align_offset);
  }

  std::vector<double> out(spec.columns(), 0.0);
  for (size_t m = 0; m < spec.columns(); ++m) {
    double acc = 0.0;
    for (size_t k = 0; k < nb; ++k)
      acc += (spec.coeffs[m][k] * align[k]).real();
    out[m] = weight * acc;
  }
  return out;
}

double correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("correlation: length mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  if (a.size() < 2)
    throw std::invalid_argument("correlation: need at least 2 samples");

  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 || sbb == 0.0)
    throw std::runtime_error("correlation: undefined for zero-variance input");
  return sab / std::sqrt(saa * sbb);
}

std::vector<std::vector<std::complex<double>>> rf_response_float(
    const RfBank& bank, std::span<const double> signal) {
  const size_t nb = bank.freqs_hz.size();
  std::vector<std::complex<double>> rot(nb), z(nb, {0.0, 0.0});
  for (size_t k = 0; k < nb; ++k)
    rot[k] = bank.lambda * std::polar(1.0, kTwoPi * bank.freqs_hz[k] /
                                               bank.sample_rate);
  std::vector<std::vector<std::complex<double>>> out(
      signal.size(), std::vector<std::complex<double>>(nb));
  for (size_t t = 0; t < signal.size(); ++t) {
    const double x = double(quantize16(signal[t]));
    for (size_t k = 0; k < nb; ++k) {
      z[k] = rot[k] * z[k] + x;
      out[t][k] = z[k];
    }
  }
  return out;
}

void write_spectrogram_csv(const Spectrogram& spec, std::ostream& out) {
  out << "time";
  for (double f : spec.freqs_hz) out << ",f" << f;
  out << '\n';
  for (size_t m = 0; m < spec.columns(); ++m) {
    out << m;
    for (size_t k = 0; k < spec.bins(); ++k)
      out << ',' << std::llround(std::abs(spec.coeffs[m][k]));
    out << '\n';
  }
}

}  // namespace spikesim
