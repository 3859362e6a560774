#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spikesim/fixedpoint.hpp"
#include "spikesim/neuron.hpp"

namespace spikesim {

/// Tensor shape, channel-last. Flat vectors are (1, 1, n); the flat index of
/// element (y, x, c) is (y*w + x)*channels + c.
struct Shape {
  int32_t h = 1;
  int32_t w = 1;
  int32_t c = 1;

  int64_t units() const { return int64_t{h} * w * c; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

enum class LayerKind { kDense, kSparse, kConv2d };
enum class NeuronKind { kSdRelu, kLif, kRf, kPassthroughSigma };

struct ConvGeom {
  int32_t kh = 1, kw = 1;
  int32_t stride_h = 1, stride_w = 1;
  int32_t pad_h = 0, pad_w = 0;
};

struct SparseSynapse {
  int32_t out_idx = 0;
  int32_t in_idx = 0;
  int8_t weight = 0;
};

struct NeuronParams {
  NeuronKind kind = NeuronKind::kSdRelu;
  int64_t threshold = 0;  // sdrelu: >= 0; lif/rf: > 0
  double lif_decay = 1.0;
  LifReset lif_reset = LifReset::kToZero;
  double rf_lambda = 1.0;
  double rf_omega = 0.0;
  RfMechanism rf_mechanism = RfMechanism::kImHalfPlane;
  RfReset rf_reset = RfReset::kNone;
};

struct LayerSpec {
  LayerKind kind = LayerKind::kDense;
  Shape in_shape;
  Shape out_shape;
  int32_t weight_scale_exp = 0;
  std::vector<int8_t> weights;          // dense: [out][in]; conv: [oc][ic][kh][kw]
  std::vector<SparseSynapse> synapses;  // sparse only
  std::vector<int16_t> biases;          // per output unit; empty = all zero
  NeuronParams neuron;
  int32_t delay = 0;  // axonal delay in timesteps for this synapse group
  ConvGeom conv;

  int64_t parameter_count() const;
};

struct CounterBlock {
  int64_t synaptic_ops = 0;   // weight MACs triggered by nonzero spikes
  int64_t neuron_updates = 0; // neuron steps that changed state or fired
  int64_t spikes_emitted = 0; // nonzero output spikes

  CounterBlock& operator+=(const CounterBlock& o) {
    synaptic_ops += o.synaptic_ops;
    neuron_updates += o.neuron_updates;
    spikes_emitted += o.spikes_emitted;
    return *this;
  }
};

struct OpCounters {
  CounterBlock total;
  std::vector<CounterBlock> per_layer;
};

struct StepResult {
  std::vector<GradedSpike> output_spikes;
  OpCounters delta;
};

/// Layered feed-forward network evaluated with synchronous global timesteps.
/// Within a step, layers run input to output; synaptic work happens only for
/// nonzero incoming spikes. Delayed synapse groups enqueue their weighted
/// contributions into a ring buffer and deliver them `delay` steps later.
class Network {
 public:
  explicit Network(std::vector<LayerSpec> specs);

  StepResult step(const std::vector<GradedSpike>& input_spikes);

  int64_t timestep() const { return timestep_; }
  const OpCounters& counters() const { return counters_; }
  size_t num_layers() const { return layers_.size(); }
  const LayerSpec& spec(size_t i) const { return layers_[i].spec; }
  Shape input_shape() const { return layers_.front().spec.in_shape; }
  Shape output_shape() const { return layers_.back().spec.out_shape; }
  int64_t total_parameters() const;

 private:
  struct LayerRt {
    LayerSpec spec;
    int64_t in_units = 0;
    int64_t out_units = 0;
    // sparse synapses indexed by input unit
    std::vector<int64_t> row_offset;
    std::vector<SparseSynapse> by_input;
    std::vector<SdReluUnit> sdrelu;
    std::vector<PassSigmaUnit> psig;
    std::vector<LifState> lif;
    std::vector<RfState> rf;
    std::vector<std::vector<int64_t>> ring;  // [delay+1][out_units]
    bool primed = false;
  };

  struct LightSpike {
    int32_t unit;
    int32_t value;
  };

  void propagate(LayerRt& layer, const std::vector<LightSpike>& in,
                 std::vector<int64_t>& acc, int64_t& ops) const;

  std::vector<LayerRt> layers_;
  int64_t timestep_ = 0;
  OpCounters counters_;
};

Network build_network(std::vector<LayerSpec> specs);

enum class InputEncoding { kDelta, kRawSpikes };

struct RunTrace {
  std::vector<std::vector<GradedSpike>> outputs;     // per timestep
  std::vector<std::vector<CounterBlock>> per_step;   // [timestep][layer]
  std::vector<int64_t> input_spikes_per_step;
  std::vector<int64_t> layer_units;
  OpCounters counters;  // cumulative over the run
};

/// Feeds a frame stream through the network, one global timestep per frame.
/// kDelta encodes each frame against the previous one with the given
/// threshold; kRawSpikes turns every nonzero frame value into a spike.
RunTrace run(Network& net, const std::vector<std::vector<int16_t>>& frames,
             InputEncoding encoding, int32_t input_threshold);

/// Op cost of evaluating the same topology densely on every frame. Conv
/// layers are counted per output pixel (padding taps included); every unit
/// counts as one update and one activation per frame.
OpCounters dense_reference_ops(const std::vector<LayerSpec>& specs,
                               int64_t num_frames);

struct RatioValue {
  double value = 0.0;
  bool infinite = false;  // measured count was zero
};

struct LayerReduction {
  RatioValue synaptic_ops;
  RatioValue neuron_updates;
  RatioValue activations;  // reference activations / spikes emitted
  double spike_rate = 0.0; // spikes per unit per timestep
};

struct ReductionReport {
  LayerReduction total;
  std::vector<LayerReduction> per_layer;
};

ReductionReport reduction_report(const RunTrace& trace,
                                 const OpCounters& reference);

}  // namespace spikesim
