#include "spikesim/network.hpp"

#include <algorithm>
#include <stdexcept>

namespace spikesim {

namespace {

int32_t conv_extent(int32_t in, int32_t k, int32_t stride, int32_t pad) {
  return (in + 2 * pad - k) / stride + 1;
}

void validate_layer(const LayerSpec& s, size_t index) {
  const auto fail = [index](const std::string& msg) {
    throw std::invalid_argument("layer " + std::to_string(index) + ": " + msg);
  };
  if (s.in_shape.units() <= 0 || s.out_shape.units() <= 0)
    fail("empty shape " + s.in_shape.str() + " -> " + s.out_shape.str());
  if (s.weight_scale_exp < -31 || s.weight_scale_exp > 31)
    fail("weight scale exponent out of [-31, 31]");
  if (s.delay < 0) fail("negative delay");
  // conv biases are shared per output channel, like the weights
  const int64_t bias_want = s.kind == LayerKind::kConv2d
                                ? s.out_shape.c
                                : s.out_shape.units();
  if (!s.biases.empty() && static_cast<int64_t>(s.biases.size()) != bias_want)
    fail("bias count " + std::to_string(s.biases.size()) +
         " does not match " + std::to_string(bias_want));

  switch (s.kind) {
    case LayerKind::kDense: {
      const int64_t want = s.in_shape.units() * s.out_shape.units();
      if (static_cast<int64_t>(s.weights.size()) != want)
        fail("dense weight count " + std::to_string(s.weights.size()) +
             " != in*out = " + std::to_string(want));
      break;
    }
    case LayerKind::kSparse: {
      if (!s.weights.empty()) fail("sparse layer must use the synapse list");
      for (const auto& syn : s.synapses) {
        if (syn.in_idx < 0 || syn.in_idx >= s.in_shape.units() ||
            syn.out_idx < 0 || syn.out_idx >= s.out_shape.units())
          fail("synapse index out of range");
      }
      break;
    }
    case LayerKind::kConv2d: {
      const auto& g = s.conv;
      if (g.kh <= 0 || g.kw <= 0 || g.stride_h <= 0 || g.stride_w <= 0 ||
          g.pad_h < 0 || g.pad_w < 0)
        fail("invalid conv geometry");
      const int32_t oh = conv_extent(s.in_shape.h, g.kh, g.stride_h, g.pad_h);
      const int32_t ow = conv_extent(s.in_shape.w, g.kw, g.stride_w, g.pad_w);
      if (oh != s.out_shape.h || ow != s.out_shape.w)
        fail("conv output shape " + s.out_shape.str() + " does not match (" +
             std::to_string(oh) + ", " + std::to_string(ow) + ", " +
             std::to_string(s.out_shape.c) + ")");
      const int64_t want = int64_t{s.out_shape.c} * s.in_shape.c * g.kh * g.kw;
      if (static_cast<int64_t>(s.weights.size()) != want)
        fail("conv weight count " + std::to_string(s.weights.size()) +
             " != oc*ic*kh*kw = " + std::to_string(want));
      break;
    }
  }

  const auto& n = s.neuron;
  switch (n.kind) {
    case NeuronKind::kSdRelu:
      if (n.threshold < 0) fail("sdrelu threshold must be >= 0");
      break;
    case NeuronKind::kLif:
      if (n.threshold <= 0) fail("lif threshold must be positive");
      if (!(n.lif_decay >= 0.0 && n.lif_decay <= 1.0))
        fail("lif decay must be in [0, 1]");
      break;
    case NeuronKind::kRf:
      if (n.threshold <= 0) fail("rf threshold must be positive");
      if (!(n.rf_lambda >= 0.0) || n.rf_lambda > 1.0)
        fail("rf lambda must be in [0, 1]");
      break;
    case NeuronKind::kPassthroughSigma:
      break;
  }
}

}  // namespace

std::string Shape::str() const {
  return "(" + std::to_string(h) + ", " + std::to_string(w) + ", " +
         std::to_string(c) + ")";
}

int64_t LayerSpec::parameter_count() const {
  switch (kind) {
    case LayerKind::kDense:
      return in_shape.units() * out_shape.units() + out_shape.units();
    case LayerKind::kSparse:
      return static_cast<int64_t>(synapses.size()) + out_shape.units();
    case LayerKind::kConv2d:  // weights and biases shared per channel
      return int64_t{out_shape.c} * in_shape.c * conv.kh * conv.kw +
             out_shape.c;
  }
  return 0;
}

Network::Network(std::vector<LayerSpec> specs) {
  if (specs.empty()) throw std::invalid_argument("network: empty layer list");
  for (size_t i = 0; i < specs.size(); ++i) {
    validate_layer(specs[i], i);
    if (i > 0) {
      const Shape& prev = specs[i - 1].out_shape;
      const Shape& cur = specs[i].in_shape;
      // flattening is allowed where the next layer has no spatial structure
      const bool flat_ok = specs[i].kind != LayerKind::kConv2d &&
                           prev.units() == cur.units();
      if (!(prev == cur || flat_ok))
        throw std::invalid_argument(
            "layer " + std::to_string(i - 1) + " -> " + std::to_string(i) +
            ": output " + prev.str() + " does not match input " + cur.str());
    }
  }

  layers_.reserve(specs.size());
  for (auto& s : specs) {
    LayerRt rt;
    rt.in_units = s.in_shape.units();
    rt.out_units = s.out_shape.units();

    if (s.kind == LayerKind::kSparse) {
      rt.by_input = s.synapses;
      std::stable_sort(rt.by_input.begin(), rt.by_input.end(),
                       [](const SparseSynapse& a, const SparseSynapse& b) {
                         return a.in_idx < b.in_idx;
                       });
      rt.row_offset.assign(rt.in_units + 1, 0);
      for (const auto& syn : rt.by_input) rt.row_offset[syn.in_idx + 1]++;
      for (int64_t i = 0; i < rt.in_units; ++i)
        rt.row_offset[i + 1] += rt.row_offset[i];
    }

    const auto bias_at = [&s](int64_t i) -> int32_t {
      if (s.biases.empty()) return 0;
      if (s.kind == LayerKind::kConv2d) return s.biases[i % s.out_shape.c];
      return s.biases[i];
    };
    switch (s.neuron.kind) {
      case NeuronKind::kSdRelu:
        rt.sdrelu.resize(rt.out_units);
        for (int64_t i = 0; i < rt.out_units; ++i) {
          rt.sdrelu[i].bias = bias_at(i);
          rt.sdrelu[i].scale_exp = s.weight_scale_exp;
          rt.sdrelu[i].delta.threshold = static_cast<int32_t>(s.neuron.threshold);
        }
        break;
      case NeuronKind::kPassthroughSigma:
        rt.psig.resize(rt.out_units);
        for (int64_t i = 0; i < rt.out_units; ++i) {
          rt.psig[i].bias = bias_at(i);
          rt.psig[i].scale_exp = s.weight_scale_exp;
        }
        break;
      case NeuronKind::kLif:
        rt.lif.assign(rt.out_units, LifState::make(s.neuron.lif_decay,
                                                   s.neuron.threshold,
                                                   s.neuron.lif_reset));
        break;
      case NeuronKind::kRf:
        rt.rf.assign(rt.out_units,
                     RfState::make(s.neuron.rf_lambda, s.neuron.rf_omega,
                                   s.neuron.threshold, s.neuron.rf_mechanism,
                                   s.neuron.rf_reset));
        break;
    }

    rt.ring.assign(s.delay + 1, std::vector<int64_t>(rt.out_units, 0));
    rt.spec = std::move(s);
    layers_.push_back(std::move(rt));
  }
  counters_.per_layer.resize(layers_.size());
}

int64_t Network::total_parameters() const {
  int64_t n = 0;
  for (const auto& l : layers_) n += l.spec.parameter_count();
  return n;
}

void Network::propagate(LayerRt& layer, const std::vector<LightSpike>& in,
                        std::vector<int64_t>& acc, int64_t& ops) const {
  const LayerSpec& s = layer.spec;
  switch (s.kind) {
    case LayerKind::kDense: {
      const int64_t out_n = layer.out_units;
      for (const auto& sp : in) {
        // weights are [out][in]; walk the column for this input unit
        for (int64_t o = 0; o < out_n; ++o)
          acc[o] += int64_t{sp.value} * s.weights[o * layer.in_units + sp.unit];
        ops += out_n;
      }
      break;
    }
    case LayerKind::kSparse: {
      for (const auto& sp : in) {
        const int64_t begin = layer.row_offset[sp.unit];
        const int64_t end = layer.row_offset[sp.unit + 1];
        for (int64_t i = begin; i < end; ++i) {
          const auto& syn = layer.by_input[i];
          acc[syn.out_idx] += int64_t{sp.value} * syn.weight;
        }
        ops += end - begin;
      }
      break;
    }
    case LayerKind::kConv2d: {
      const auto& g = s.conv;
      const int32_t ic_n = s.in_shape.c;
      const int32_t oc_n = s.out_shape.c;
      const int32_t ow = s.out_shape.w;
      const int32_t oh = s.out_shape.h;
      for (const auto& sp : in) {
        const int32_t ic = sp.unit % ic_n;
        const int32_t flat = sp.unit / ic_n;
        const int32_t x = flat % s.in_shape.w;
        const int32_t y = flat / s.in_shape.w;
        for (int32_t ky = 0; ky < g.kh; ++ky) {
          const int32_t ny = y + g.pad_h - ky;
          if (ny < 0 || ny % g.stride_h != 0) continue;
          const int32_t oy = ny / g.stride_h;
          if (oy >= oh) continue;
          for (int32_t kx = 0; kx < g.kw; ++kx) {
            const int32_t nx = x + g.pad_w - kx;
            if (nx < 0 || nx % g.stride_w != 0) continue;
            const int32_t ox = nx / g.stride_w;
            if (ox >= ow) continue;
            const int64_t out_base = (int64_t{oy} * ow + ox) * oc_n;
            for (int32_t oc = 0; oc < oc_n; ++oc) {
              const int64_t widx =
                  ((int64_t{oc} * ic_n + ic) * g.kh + ky) * g.kw + kx;
              acc[out_base + oc] += int64_t{sp.value} * s.weights[widx];
            }
            ops += oc_n;
          }
        }
      }
      break;
    }
  }
}

StepResult Network::step(const std::vector<GradedSpike>& input_spikes) {
  std::vector<LightSpike> current;
  current.reserve(input_spikes.size());
  for (const auto& sp : input_spikes) {
    if (sp.source_unit < 0 || sp.source_unit >= layers_.front().in_units)
      throw std::invalid_argument(
          "step: input spike unit " + std::to_string(sp.source_unit) +
          " outside layer 0 input " + layers_.front().spec.in_shape.str());
    current.push_back({sp.source_unit, sp.payload.value});
  }

  StepResult result;
  result.delta.per_layer.resize(layers_.size());

  std::vector<LightSpike> next;
  for (size_t li = 0; li < layers_.size(); ++li) {
    LayerRt& layer = layers_[li];
    CounterBlock& cb = result.delta.per_layer[li];

    const int32_t slots = layer.spec.delay + 1;
    auto& enqueue = layer.ring[(timestep_ + layer.spec.delay) % slots];
    propagate(layer, current, enqueue, cb.synaptic_ops);

    auto& due = layer.ring[timestep_ % slots];
    const int32_t scale = layer.spec.weight_scale_exp;
    next.clear();

    // The first evaluation visits every unit so bias-driven activations get
    // communicated; afterwards a zero contribution provably leaves the unit
    // unchanged and is skipped.
    const bool primed = layer.primed;
    layer.primed = true;
    switch (layer.spec.neuron.kind) {
      case NeuronKind::kSdRelu:
        for (int64_t o = 0; o < layer.out_units; ++o) {
          if (primed && due[o] == 0) continue;
          const int32_t s = layer.sdrelu[o].step(due[o]);
          if (s != 0 || due[o] != 0) cb.neuron_updates++;
          if (s != 0) next.push_back({static_cast<int32_t>(o), s});
        }
        break;
      case NeuronKind::kPassthroughSigma:
        for (int64_t o = 0; o < layer.out_units; ++o) {
          if (primed && due[o] == 0) continue;
          const int32_t s = layer.psig[o].step(due[o]);
          if (s != 0 || due[o] != 0) cb.neuron_updates++;
          if (s != 0) next.push_back({static_cast<int32_t>(o), s});
        }
        break;
      case NeuronKind::kLif:
        for (int64_t o = 0; o < layer.out_units; ++o) {
          LifState& n = layer.lif[o];
          const int64_t before = n.v;
          const bool fired = n.step(shift_scale(due[o], scale));
          if (fired || n.v != before) cb.neuron_updates++;
          if (fired) next.push_back({static_cast<int32_t>(o), 1});
        }
        break;
      case NeuronKind::kRf:
        for (int64_t o = 0; o < layer.out_units; ++o) {
          RfState& n = layer.rf[o];
          const int64_t re0 = n.z_re_q, im0 = n.z_im_q;
          const auto payload = n.step(shift_scale(due[o], scale), 0);
          if (payload || n.z_re_q != re0 || n.z_im_q != im0)
            cb.neuron_updates++;
          if (payload)
            next.push_back({static_cast<int32_t>(o), payload->value});
        }
        break;
    }

    std::fill(due.begin(), due.end(), 0);
    cb.spikes_emitted = static_cast<int64_t>(next.size());
    current.swap(next);
  }

  for (size_t li = 0; li < layers_.size(); ++li) {
    result.delta.total += result.delta.per_layer[li];
    counters_.per_layer[li] += result.delta.per_layer[li];
  }
  counters_.total += result.delta.total;

  result.output_spikes.reserve(current.size());
  for (const auto& sp : current)
    result.output_spikes.emplace_back(timestep_, sp.unit,
                                      saturate24(sp.value));
  ++timestep_;
  return result;
}

Network build_network(std::vector<LayerSpec> specs) {
  return Network(std::move(specs));
}

RunTrace run(Network& net, const std::vector<std::vector<int16_t>>& frames,
             InputEncoding encoding, int32_t input_threshold) {
  if (input_threshold < 0)
    throw std::invalid_argument("run: negative input threshold");
  const int64_t in_units = net.input_shape().units();

  RunTrace trace;
  trace.layer_units.reserve(net.num_layers());
  for (size_t i = 0; i < net.num_layers(); ++i)
    trace.layer_units.push_back(net.spec(i).out_shape.units());

  std::vector<DeltaState> encoders;
  if (encoding == InputEncoding::kDelta)
    encoders.assign(in_units, DeltaState{0, input_threshold});

  for (const auto& frame : frames) {
    if (static_cast<int64_t>(frame.size()) != in_units)
      throw std::invalid_argument(
          "run: frame size " + std::to_string(frame.size()) +
          " does not match input " + net.input_shape().str());

    std::vector<GradedSpike> spikes;
    const int64_t t = net.timestep();
    for (int64_t u = 0; u < in_units; ++u) {
      int32_t v = 0;
      if (encoding == InputEncoding::kDelta)
        v = encoders[u].step(frame[u]);
      else
        v = frame[u];
      if (v != 0)
        spikes.emplace_back(t, static_cast<int32_t>(u), saturate24(v));
    }

    StepResult res = net.step(spikes);
    trace.input_spikes_per_step.push_back(
        static_cast<int64_t>(spikes.size()));
    trace.per_step.push_back(std::move(res.delta.per_layer));
    trace.outputs.push_back(std::move(res.output_spikes));
  }

  trace.counters.per_layer.assign(net.num_layers(), CounterBlock{});
  for (const auto& row : trace.per_step)
    for (size_t li = 0; li < row.size(); ++li) {
      trace.counters.per_layer[li] += row[li];
      trace.counters.total += row[li];
    }
  return trace;
}

OpCounters dense_reference_ops(const std::vector<LayerSpec>& specs,
                               int64_t num_frames) {
  OpCounters ref;
  ref.per_layer.resize(specs.size());
  for (size_t i = 0; i < specs.size(); ++i) {
    const LayerSpec& s = specs[i];
    int64_t macs = 0;
    switch (s.kind) {
      case LayerKind::kDense:
        macs = s.in_shape.units() * s.out_shape.units();
        break;
      case LayerKind::kSparse:
        macs = static_cast<int64_t>(s.synapses.size());
        break;
      case LayerKind::kConv2d:
        macs = s.out_shape.units() * s.in_shape.c * s.conv.kh * s.conv.kw;
        break;
    }
    CounterBlock& cb = ref.per_layer[i];
    cb.synaptic_ops = macs * num_frames;
    cb.neuron_updates = s.out_shape.units() * num_frames;
    cb.spikes_emitted = s.out_shape.units() * num_frames;
    ref.total += cb;
  }
  return ref;
}

namespace {

RatioValue ratio_of(int64_t reference, int64_t measured) {
  if (measured == 0) return {0.0, true};
  return {static_cast<double>(reference) / static_cast<double>(measured),
          false};
}

}  // namespace

ReductionReport reduction_report(const RunTrace& trace,
                                 const OpCounters& reference) {
  if (reference.total.synaptic_ops == 0 ||
      reference.total.neuron_updates == 0)
    throw std::invalid_argument("reduction_report: zero reference counts");
  if (reference.per_layer.size() != trace.counters.per_layer.size())
    throw std::invalid_argument("reduction_report: layer count mismatch");

  const auto steps = static_cast<int64_t>(trace.per_step.size());
  ReductionReport rep;
  rep.per_layer.resize(reference.per_layer.size());
  for (size_t i = 0; i < reference.per_layer.size(); ++i) {
    const CounterBlock& r = reference.per_layer[i];
    const CounterBlock& m = trace.counters.per_layer[i];
    LayerReduction& lr = rep.per_layer[i];
    lr.synaptic_ops = ratio_of(r.synaptic_ops, m.synaptic_ops);
    lr.neuron_updates = ratio_of(r.neuron_updates, m.neuron_updates);
    lr.activations = ratio_of(r.spikes_emitted, m.spikes_emitted);
    const int64_t units =
        i < trace.layer_units.size() ? trace.layer_units[i] : 0;
    const int64_t denom = units * std::max<int64_t>(steps, 1);
    lr.spike_rate = denom > 0
                        ? static_cast<double>(m.spikes_emitted) / double(denom)
                        : 0.0;
  }
  const CounterBlock& r = reference.total;
  const CounterBlock& m = trace.counters.total;
  rep.total.synaptic_ops = ratio_of(r.synaptic_ops, m.synaptic_ops);
  rep.total.neuron_updates = ratio_of(r.neuron_updates, m.neuron_updates);
  rep.total.activations = ratio_of(r.spikes_emitted, m.spikes_emitted);
  int64_t all_units = 0;
  for (int64_t u : trace.layer_units) all_units += u;
  rep.total.spike_rate =
      all_units > 0 && steps > 0
          ? static_cast<double>(m.spikes_emitted) / double(all_units * steps)
          : 0.0;
  return rep;
}

}  // namespace spikesim
