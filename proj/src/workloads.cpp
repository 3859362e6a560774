#include "spikesim/workloads.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "spikesim/netio.hpp"
#include "spikesim/signal.hpp"
#include "spikesim/spectral.hpp"

namespace spikesim {

namespace {

using nlohmann::json;

json ratio_json(const RatioValue& r) {
  if (r.infinite) return json("inf");
  return json(r.value);
}

json reduction_json(const LayerReduction& r) {
  return json{{"synaptic_ops", ratio_json(r.synaptic_ops)},
              {"neuron_updates", ratio_json(r.neuron_updates)},
              {"activations", ratio_json(r.activations)},
              {"spike_rate", r.spike_rate}};
}

json counters_json(const CounterBlock& c) {
  return json{{"synaptic_ops", c.synaptic_ops},
              {"neuron_updates", c.neuron_updates},
              {"spikes_emitted", c.spikes_emitted}};
}

void merge_into(json& base, const json& over) {
  if (!base.is_object() || !over.is_object()) {
    base = over;
    return;
  }
  for (auto it = over.begin(); it != over.end(); ++it) {
    if (base.contains(it.key()))
      merge_into(base[it.key()], it.value());
    else
      base[it.key()] = it.value();
  }
}

void apply_override(json& cfg, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0)
    throw std::invalid_argument("override must be key=value, got '" + kv +
                                "'");
  const std::string key = kv.substr(0, eq);
  const std::string raw = kv.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;  // plain string
  }
  json* node = &cfg;
  size_t pos = 0;
  while (true) {
    const auto dot = key.find('.', pos);
    const std::string part = key.substr(pos, dot - pos);
    if (part.empty())
      throw std::invalid_argument("override key '" + key +
                                  "' has an empty path segment");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    node = &(*node)[part];
    pos = dot + 1;
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

// --- config validation helpers ------------------------------------------

[[noreturn]] void bad_config(const std::string& msg) {
  throw std::invalid_argument("config: " + msg);
}

double need_number(const json& j, const std::string& path) {
  const json* node = &j;
  size_t pos = 0;
  while (pos <= path.size()) {
    const auto dot = path.find('.', pos);
    const std::string part = path.substr(pos, dot - pos);
    if (!node->is_object() || !node->contains(part))
      bad_config("missing field '" + path + "'");
    node = &node->at(part);
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  if (!node->is_number())
    bad_config("field '" + path + "' must be a number");
  return node->get<double>();
}

int64_t need_int(const json& j, const std::string& path) {
  const double v = need_number(j, path);
  if (v != std::floor(v))
    bad_config("field '" + path + "' must be an integer");
  return static_cast<int64_t>(v);
}

// --- random weight generation --------------------------------------------

constexpr double kWeightRms = 73.6;  // uniform int8 in [-127, 127]

int32_t pick_scale_exp(int64_t fan_in, double input_rms, double target) {
  const double pre = kWeightRms * std::sqrt(double(fan_in)) * input_rms;
  int32_t e = static_cast<int32_t>(std::lround(std::log2(target / pre)));
  if (e > 0) e = 0;
  if (e < -31) e = -31;
  return e;
}

void fill_random_layer(LayerSpec& s, SeededRng& rng, double input_rms,
                       double target) {
  int64_t fan_in = 0;
  int64_t weight_n = 0;
  switch (s.kind) {
    case LayerKind::kDense:
      fan_in = s.in_shape.units();
      weight_n = s.in_shape.units() * s.out_shape.units();
      break;
    case LayerKind::kConv2d:
      fan_in = int64_t{s.in_shape.c} * s.conv.kh * s.conv.kw;
      weight_n = int64_t{s.out_shape.c} * s.in_shape.c * s.conv.kh * s.conv.kw;
      break;
    case LayerKind::kSparse:
      throw std::invalid_argument("random sparse layers are not generated");
  }
  s.weight_scale_exp = pick_scale_exp(fan_in, input_rms, target);
  s.weights.resize(weight_n);
  for (auto& w : s.weights)
    w = static_cast<int8_t>(rng.uniform_int(-127, 127));
  s.biases.resize(s.kind == LayerKind::kConv2d ? s.out_shape.c
                                               : s.out_shape.units());
  const auto bias_max = static_cast<int64_t>(target / 12);
  for (auto& b : s.biases)
    b = static_cast<int16_t>(rng.uniform_int(0, bias_max));
}

Shape conv_output(const Shape& in, int32_t oc, const ConvGeom& g) {
  return Shape{(in.h + 2 * g.pad_h - g.kh) / g.stride_h + 1,
               (in.w + 2 * g.pad_w - g.kw) / g.stride_w + 1, oc};
}

LayerSpec conv_layer(const Shape& in, int32_t oc, int32_t k, int32_t stride,
                     int32_t pad, int32_t threshold) {
  LayerSpec s;
  s.kind = LayerKind::kConv2d;
  s.in_shape = in;
  s.conv = ConvGeom{k, k, stride, stride, pad, pad};
  s.out_shape = conv_output(in, oc, s.conv);
  s.neuron.kind = NeuronKind::kSdRelu;
  s.neuron.threshold = threshold;
  return s;
}

LayerSpec dense_layer(int64_t in_units, int64_t out_units, int32_t threshold,
                      NeuronKind kind = NeuronKind::kSdRelu) {
  LayerSpec s;
  s.kind = LayerKind::kDense;
  s.in_shape = Shape{1, 1, static_cast<int32_t>(in_units)};
  s.out_shape = Shape{1, 1, static_cast<int32_t>(out_units)};
  s.neuron.kind = kind;
  s.neuron.threshold = kind == NeuronKind::kSdRelu ? threshold : 0;
  return s;
}

}  // namespace

std::vector<LayerSpec> build_desk_video_specs(const Shape& input,
                                              uint64_t seed,
                                              int32_t hidden_threshold,
                                              int32_t activation_target) {
  std::vector<LayerSpec> specs;
  specs.push_back(conv_layer(input, 8, 5, 2, 2, hidden_threshold));
  specs.push_back(
      conv_layer(specs.back().out_shape, 16, 3, 2, 1, hidden_threshold));
  specs.push_back(
      dense_layer(specs.back().out_shape.units(), 64, hidden_threshold));
  specs.push_back(dense_layer(64, 10, 0, NeuronKind::kPassthroughSigma));

  SeededRng rng(seed * 0x9e3779b97f4a7c15ULL + 1);
  const double target = activation_target;
  double in_rms = 32767.0 / std::sqrt(3.0);  // uniform pixels over [0, range]
  for (auto& s : specs) {
    fill_random_layer(s, rng, in_rms, target);
    in_rms = target;
  }
  return specs;
}

std::vector<LayerSpec> build_pilotnet_specs(uint64_t seed,
                                            int32_t hidden_threshold,
                                            int32_t activation_target) {
  std::vector<LayerSpec> specs;
  specs.push_back(
      conv_layer(Shape{66, 200, 3}, 24, 5, 2, 0, hidden_threshold));
  specs.push_back(
      conv_layer(specs.back().out_shape, 36, 5, 2, 0, hidden_threshold));
  specs.push_back(
      conv_layer(specs.back().out_shape, 48, 5, 2, 0, hidden_threshold));
  specs.push_back(
      conv_layer(specs.back().out_shape, 64, 3, 1, 0, hidden_threshold));
  specs.push_back(
      conv_layer(specs.back().out_shape, 64, 3, 1, 0, hidden_threshold));
  specs.push_back(dense_layer(specs.back().out_shape.units(), 182,
                              hidden_threshold));
  specs.push_back(dense_layer(182, 50, hidden_threshold));
  specs.push_back(dense_layer(50, 10, hidden_threshold));
  specs.push_back(dense_layer(10, 1, 0, NeuronKind::kPassthroughSigma));

  SeededRng rng(seed * 0x9e3779b97f4a7c15ULL + 2);
  const double target = activation_target;
  double in_rms = 32767.0 / std::sqrt(3.0);
  for (auto& s : specs) {
    fill_random_layer(s, rng, in_rms, target);
    in_rms = target;
  }
  return specs;
}

nlohmann::json default_config(const std::string& workload) {
  if (workload == "stft-chirp") {
    return json{
        {"workload", "stft-chirp"},
        {"seed", 1},
        {"chirp",
         {{"f_start", 50.0},
          {"f_end", 1000.0},
          {"duration_s", 1.0},
          {"sample_rate", 4096.0},
          {"amplitude", 0.5}}},
        {"signal", {{"file", ""}, {"format", "pcm16"}, {"sample_rate", 4096.0}}},
        {"bank",
         {{"f_min", 1.0},
          {"f_max", 1000.0},
          {"neurons", 200},
          {"window", 200},
          {"spike_threshold", 0},        // 0 = derive from amplitude
          {"spike_threshold_frac", 0.2}  // fraction of resonant peak
         }}};
  }
  if (workload == "sdnn-video") {
    return json{{"workload", "sdnn-video"},
                {"seed", 42},
                {"stream",
                 {{"height", 64},
                  {"width", 64},
                  {"channels", 1},
                  {"frames", 100},
                  {"step_scale", 0.02}}},
                {"network",
                 {{"preset", "desk"},
                  {"file", ""},
                  {"input_threshold_frac", 0.03},
                  {"hidden_threshold_frac", 0.06},
                  {"activation_target", 8000}}}};
  }
  if (workload == "sigma-delta-sweep") {
    return json{
        {"workload", "sigma-delta-sweep"},
        {"seed", 3},
        {"signal",
         {{"kind", "random-walk"}, {"length", 4096}, {"step_scale", 0.02}}},
        {"thresholds", {0, 1, 2, 5, 10, 20, 50, 100, 200, 500}}};
  }
  throw std::invalid_argument("unknown workload '" + workload +
                              "' (expected stft-chirp, sdnn-video or "
                              "sigma-delta-sweep)");
}

nlohmann::json resolve_config(const std::string& workload,
                              const nlohmann::json& user,
                              const std::vector<std::string>& overrides) {
  json cfg = default_config(workload);
  if (!user.is_null()) {
    if (!user.is_object()) bad_config("top level must be a JSON object");
    merge_into(cfg, user);
  }
  for (const auto& kv : overrides) apply_override(cfg, kv);
  if (cfg.at("workload") != workload)
    bad_config("config is for workload '" +
               cfg.at("workload").get<std::string>() + "', not '" + workload +
               "'");
  return cfg;
}

namespace {

void run_stft_chirp(const json& cfg, const std::string& out_dir) {
  const double fs = need_number(cfg, "chirp.sample_rate");
  ChirpSpec chirp{need_number(cfg, "chirp.f_start"),
                  need_number(cfg, "chirp.f_end"),
                  need_number(cfg, "chirp.duration_s"), fs,
                  need_number(cfg, "chirp.amplitude")};

  std::vector<double> signal;
  double fs_actual = fs;
  const std::string file = cfg.at("signal").value("file", std::string{});
  if (!file.empty()) {
    const std::string fmt = cfg.at("signal").value("format", std::string{});
    if (fmt == "pcm16")
      signal = load_signal_pcm16(file);
    else if (fmt == "csv")
      signal = load_signal_csv(file);
    else
      bad_config("signal.format must be 'pcm16' or 'csv'");
    fs_actual = cfg.at("signal").value("sample_rate", fs);
  } else {
    signal = gen_chirp(chirp);
  }

  const auto n = static_cast<int>(need_int(cfg, "bank.neurons"));
  const auto window = static_cast<int>(need_int(cfg, "bank.window"));
  const double lambda = std::exp(-1.0 / window);

  int64_t threshold = need_int(cfg, "bank.spike_threshold");
  if (threshold <= 0) {
    double peak_drive = chirp.amplitude * 32767.0;
    if (!file.empty()) {
      peak_drive = 1.0;
      for (double v : signal) peak_drive = std::max(peak_drive, std::abs(v));
    }
    const double frac = need_number(cfg, "bank.spike_threshold_frac");
    threshold = std::max<int64_t>(
        1, std::llround(frac * peak_drive / (2.0 * (1.0 - lambda))));
  }

  RfBank bank = make_bank(need_number(cfg, "bank.f_min"),
                          need_number(cfg, "bank.f_max"), n, fs_actual,
                          window, threshold);

  auto [rf_spec, code] = rf_stft(bank, signal);
  Spectrogram ref_spec = reference_stft(bank, signal, window, 1);

  std::vector<double> xq(signal.size());
  for (size_t i = 0; i < signal.size(); ++i)
    xq[i] = double(clamp16(round_half_even(signal[i])));

  const std::vector<double> rec_rf = reconstruct(rf_spec, bank);
  const std::vector<double> rec_ref = reconstruct(ref_spec, bank);

  const double corr_rf = correlation(rec_rf, xq);
  const std::span<const double> ref_target{
      xq.data() + ref_spec.align_offset, rec_ref.size()};
  const double corr_ref = correlation(rec_ref, ref_target);

  // magnitude correlation over aligned columns: RF column m+window-1 spans
  // the same samples as reference column m
  std::vector<double> mag_rf, mag_ref;
  mag_rf.reserve(ref_spec.columns() * bank.neurons.size());
  mag_ref.reserve(ref_spec.columns() * bank.neurons.size());
  for (size_t m = 0; m < ref_spec.columns(); ++m)
    for (size_t k = 0; k < bank.neurons.size(); ++k) {
      mag_rf.push_back(std::abs(rf_spec.coeffs[m + window - 1][k]));
      mag_ref.push_back(std::abs(ref_spec.coeffs[m][k]));
    }
  const double corr_mag = correlation(mag_rf, mag_ref);

  const double duration_s = double(signal.size()) / fs_actual;

  json report;
  report["report_format_version"] = kReportFormatVersion;
  report["workload"] = "stft-chirp";
  report["seed"] = cfg.at("seed");
  report["config"] = cfg;
  report["bank"] = {{"neurons", n},
                    {"window", window},
                    {"lambda", bank.lambda},
                    {"f_min", bank.freqs_hz.front()},
                    {"f_max", bank.freqs_hz.back()},
                    {"bin_spacing_hz",
                     n > 1 ? (bank.freqs_hz.back() - bank.freqs_hz.front()) /
                                 (n - 1)
                           : 0.0},
                    {"spike_threshold", threshold},
                    {"freqs_hz", bank.freqs_hz}};
  report["results"] = {
      {"samples", signal.size()},
      {"rf_reconstruction_correlation", corr_rf},
      {"reference_reconstruction_correlation", corr_ref},
      {"magnitude_correlation", corr_mag},
      {"spike_events", code.events.size()},
      // aggregate across the whole bank, not per neuron
      {"spike_events_per_second", double(code.events.size()) / duration_s}};

  write_file(out_dir + "/report.json", report.dump(2) + "\n");
  std::ofstream csv(out_dir + "/spectrogram.csv", std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write spectrogram.csv");
  write_spectrogram_csv(rf_spec, csv);
}

void run_sdnn_video(const json& cfg, const std::string& out_dir) {
  const Shape shape{static_cast<int32_t>(need_int(cfg, "stream.height")),
                    static_cast<int32_t>(need_int(cfg, "stream.width")),
                    static_cast<int32_t>(need_int(cfg, "stream.channels"))};
  const auto frames = static_cast<int32_t>(need_int(cfg, "stream.frames"));
  const double step_scale = need_number(cfg, "stream.step_scale");
  const auto seed = cfg.at("seed").get<uint64_t>();
  if (frames < 1) bad_config("stream.frames must be >= 1");

  const auto& netcfg = cfg.at("network");
  const auto target =
      static_cast<int32_t>(need_int(cfg, "network.activation_target"));
  const auto hidden_threshold = static_cast<int32_t>(std::lround(
      need_number(cfg, "network.hidden_threshold_frac") * target));
  const auto input_threshold = static_cast<int32_t>(std::lround(
      need_number(cfg, "network.input_threshold_frac") * 32767.0));

  std::vector<LayerSpec> specs;
  const std::string file = netcfg.value("file", std::string{});
  if (!file.empty()) {
    specs = load_network(file);
  } else {
    const std::string preset = netcfg.value("preset", std::string{"desk"});
    if (preset == "desk")
      specs = build_desk_video_specs(shape, seed, hidden_threshold, target);
    else if (preset == "pilotnet")
      specs = build_pilotnet_specs(seed, hidden_threshold, target);
    else
      bad_config("network.preset must be 'desk' or 'pilotnet'");
  }

  Network net = build_network(specs);
  if (!(net.input_shape() == shape))
    bad_config("stream shape " + shape.str() + " does not match network input " +
               net.input_shape().str());

  const auto stream =
      gen_correlated_stream({shape, frames, step_scale, seed});
  RunTrace trace = run(net, stream, InputEncoding::kDelta, input_threshold);
  const OpCounters ref = dense_reference_ops(specs, frames);
  const ReductionReport rep = reduction_report(trace, ref);

  int64_t input_spikes = 0;
  for (int64_t v : trace.input_spikes_per_step) input_spikes += v;

  json per_layer = json::array();
  for (size_t i = 0; i < rep.per_layer.size(); ++i)
    per_layer.push_back(
        {{"layer", i},
         {"measured", counters_json(trace.counters.per_layer[i])},
         {"reference", counters_json(ref.per_layer[i])},
         {"reduction", reduction_json(rep.per_layer[i])}});

  json report;
  report["report_format_version"] = kReportFormatVersion;
  report["workload"] = "sdnn-video";
  report["seed"] = cfg.at("seed");
  report["config"] = cfg;
  report["network"] = {{"layers", specs.size()},
                       {"parameters", net.total_parameters()},
                       {"input_threshold", input_threshold},
                       {"hidden_threshold", hidden_threshold}};
  report["results"] = {{"frames", frames},
                       {"input_spikes", input_spikes},
                       {"measured", counters_json(trace.counters.total)},
                       {"reference", counters_json(ref.total)},
                       {"reduction", reduction_json(rep.total)},
                       {"per_layer", std::move(per_layer)}};

  write_file(out_dir + "/report.json", report.dump(2) + "\n");
  std::ofstream csv(out_dir + "/ops.csv", std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write ops.csv");
  export_trace_csv(trace, csv);
}

void run_sigma_delta_sweep(const json& cfg, const std::string& out_dir) {
  const auto seed = cfg.at("seed").get<uint64_t>();
  const std::string kind = cfg.at("signal").value("kind", std::string{});
  std::vector<int16_t> seq;
  if (kind == "random-walk") {
    const auto length =
        static_cast<int32_t>(need_int(cfg, "signal.length"));
    const double step_scale = need_number(cfg, "signal.step_scale");
    const auto frames = gen_correlated_stream(
        {Shape{1, 1, 1}, length, step_scale, seed});
    seq.reserve(frames.size());
    for (const auto& f : frames) seq.push_back(f[0]);
  } else if (kind == "chirp") {
    const ChirpSpec chirp{need_number(cfg, "signal.f_start"),
                          need_number(cfg, "signal.f_end"),
                          need_number(cfg, "signal.duration_s"),
                          need_number(cfg, "signal.sample_rate"),
                          need_number(cfg, "signal.amplitude")};
    for (double v : gen_chirp(chirp))
      seq.push_back(static_cast<int16_t>(clamp16(round_half_even(v))));
  } else {
    bad_config("signal.kind must be 'random-walk' or 'chirp'");
  }

  if (!cfg.contains("thresholds") || !cfg.at("thresholds").is_array() ||
      cfg.at("thresholds").empty())
    bad_config("thresholds must be a non-empty array");

  json curve = json::array();
  std::string csv = "threshold,spike_count,max_abs_error\n";
  int64_t prev_count = -1;
  bool monotonic = true;
  for (const auto& tj : cfg.at("thresholds")) {
    if (!tj.is_number_integer() || tj.get<int64_t>() < 0)
      bad_config("thresholds must be non-negative integers");
    const auto threshold = static_cast<int32_t>(tj.get<int64_t>());
    DeltaState enc{0, threshold};
    SigmaState dec;
    int64_t spikes = 0;
    int64_t max_err = 0;
    for (int16_t x : seq) {
      const int32_t s = enc.step(x);
      if (s != 0) {
        ++spikes;
        dec.step(s);
      }
      const int64_t err = std::llabs(int64_t{x} - dec.x_rec);
      max_err = std::max(max_err, err);
    }
    if (prev_count >= 0 && spikes > prev_count) monotonic = false;
    prev_count = spikes;
    curve.push_back({{"threshold", threshold},
                     {"spike_count", spikes},
                     {"max_abs_error", max_err}});
    csv += std::to_string(threshold) + "," + std::to_string(spikes) + "," +
           std::to_string(max_err) + "\n";
  }

  json report;
  report["report_format_version"] = kReportFormatVersion;
  report["workload"] = "sigma-delta-sweep";
  report["seed"] = cfg.at("seed");
  report["config"] = cfg;
  report["results"] = {{"signal_length", seq.size()},
                       {"spike_count_monotonic", monotonic},
                       {"curve", std::move(curve)}};

  write_file(out_dir + "/report.json", report.dump(2) + "\n");
  write_file(out_dir + "/sweep.csv", csv);
}

}  // namespace

void run_workload(const nlohmann::json& resolved,
                  const std::string& out_dir) {
  if (!resolved.contains("workload") || !resolved.at("workload").is_string())
    bad_config("missing 'workload' field");
  const auto workload = resolved.at("workload").get<std::string>();

  std::filesystem::create_directories(out_dir);
  write_file(out_dir + "/config.resolved.json", resolved.dump(2) + "\n");

  if (workload == "stft-chirp")
    run_stft_chirp(resolved, out_dir);
  else if (workload == "sdnn-video")
    run_sdnn_video(resolved, out_dir);
  else if (workload == "sigma-delta-sweep")
    run_sigma_delta_sweep(resolved, out_dir);
  else
    bad_config("unknown workload '" + workload + "'");
}

}  // namespace spikesim
