#include <doctest.h>

#include <algorithm>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "dense_oracle.hpp"
#include "spikesim/netio.hpp"
#include "spikesim/network.hpp"

using namespace spikesim;
using spikesim::testing::DenseOracle;

namespace {

LayerSpec dense_spec(int in, int out, int64_t threshold,
                     NeuronKind kind = NeuronKind::kSdRelu,
                     uint64_t weight_seed = 1) {
  LayerSpec s;
  s.kind = LayerKind::kDense;
  s.in_shape = Shape{1, 1, in};
  s.out_shape = Shape{1, 1, out};
  s.neuron.kind = kind;
  s.neuron.threshold = kind == NeuronKind::kSdRelu ? threshold : 0;
  s.weights.resize(size_t(in) * out);
  std::mt19937_64 rng(weight_seed);
  for (auto& w : s.weights) w = static_cast<int8_t>(int64_t(rng() % 255) - 127);
  s.biases.resize(out);
  for (auto& b : s.biases) b = static_cast<int16_t>(rng() % 200);
  return s;
}

std::vector<GradedSpike> spikes_at(int64_t t,
                                   std::vector<std::pair<int, int>> list) {
  std::vector<GradedSpike> out;
  for (auto [u, v] : list) out.emplace_back(t, u, saturate24(v));
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("network");

TEST_CASE("build rejects bad specs") {
  CHECK_THROWS_AS(build_network({}), std::invalid_argument);

  SUBCASE("shape mismatch names the layer pair") {
    std::vector<LayerSpec> specs{dense_spec(3, 4, 0), dense_spec(5, 2, 0)};
    try {
      build_network(specs);
      FAIL("expected a shape mismatch error");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("layer 0 -> 1") != std::string::npos);
    }
  }
  SUBCASE("invalid neuron parameters") {
    auto s = dense_spec(3, 4, 0);
    s.neuron.threshold = -1;
    CHECK_THROWS_AS(build_network({s}), std::invalid_argument);

    auto r = dense_spec(3, 4, 0);
    r.neuron.kind = NeuronKind::kRf;
    r.neuron.threshold = 10;
    r.neuron.rf_lambda = 1.5;
    CHECK_THROWS_AS(build_network({r}), std::invalid_argument);
  }
  SUBCASE("weight count must match the shape") {
    auto s = dense_spec(3, 4, 0);
    s.weights.pop_back();
    CHECK_THROWS_AS(build_network({s}), std::invalid_argument);
  }
}

TEST_CASE("single dense layer builds with the right unit count") {
  Network net = build_network({dense_spec(3, 4, 0)});
  CHECK(net.num_layers() == 1);
  CHECK(net.output_shape().units() == 4);
  CHECK(net.total_parameters() == 3 * 4 + 4);
}

TEST_CASE("one input spike into dense 3->4 costs 4 synaptic ops") {
  Network net = build_network({dense_spec(3, 4, 0)});
  const auto res = net.step(spikes_at(0, {{1, 100}}));
  CHECK(res.delta.total.synaptic_ops == 4);

  // silence afterwards costs nothing
  const auto quiet = net.step({});
  CHECK(quiet.delta.total.synaptic_ops == 0);
  CHECK(quiet.delta.total.neuron_updates == 0);
  CHECK(quiet.output_spikes.empty());
}

TEST_CASE("input spikes outside layer 0 are rejected") {
  Network net = build_network({dense_spec(3, 4, 0)});
  CHECK_THROWS_AS(net.step(spikes_at(0, {{3, 5}})), std::invalid_argument);
}

TEST_CASE("step is deterministic and permutation invariant") {
  auto make = [] {
    return build_network({dense_spec(4, 6, 2), dense_spec(6, 3, 2)});
  };
  Network a = make();
  Network b = make();
  const auto in_a = spikes_at(0, {{0, 50}, {2, -30}, {3, 900}});
  const auto in_b = spikes_at(0, {{3, 900}, {0, 50}, {2, -30}});
  const auto ra = a.step(in_a);
  const auto rb = b.step(in_b);
  CHECK(ra.delta.total.synaptic_ops == rb.delta.total.synaptic_ops);
  CHECK(ra.delta.total.neuron_updates == rb.delta.total.neuron_updates);
  REQUIRE(ra.output_spikes.size() == rb.output_spikes.size());
  for (size_t i = 0; i < ra.output_spikes.size(); ++i) {
    CHECK(ra.output_spikes[i].source_unit == rb.output_spikes[i].source_unit);
    CHECK(ra.output_spikes[i].payload.value ==
          rb.output_spikes[i].payload.value);
  }
}

TEST_CASE("constant frames under delta encoding go quiet after t=0") {
  Network net = build_network({dense_spec(8, 8, 3), dense_spec(8, 4, 3)});
  std::vector<std::vector<int16_t>> frames(
      10, std::vector<int16_t>(8, 1234));
  const RunTrace trace = run(net, frames, InputEncoding::kDelta, 5);
  for (size_t t = 1; t < trace.per_step.size(); ++t)
    for (const auto& cb : trace.per_step[t]) CHECK(cb.synaptic_ops == 0);
  CHECK(trace.input_spikes_per_step[0] == 8);
  for (size_t t = 1; t < 10; ++t) CHECK(trace.input_spikes_per_step[t] == 0);
}

TEST_CASE("threshold 0 on always-changing frames matches dense layer-0 ops") {
  std::vector<LayerSpec> specs{dense_spec(16, 8, 0), dense_spec(8, 4, 0)};
  Network net = build_network(specs);
  std::vector<std::vector<int16_t>> frames;
  for (int t = 0; t < 12; ++t) {
    std::vector<int16_t> f(16);
    for (int u = 0; u < 16; ++u) f[u] = static_cast<int16_t>(1 + t + u);
    frames.push_back(std::move(f));
  }
  const RunTrace trace = run(net, frames, InputEncoding::kDelta, 0);
  const OpCounters ref = dense_reference_ops(specs, 12);
  CHECK(trace.counters.per_layer[0].synaptic_ops ==
        ref.per_layer[0].synaptic_ops);

  // measured == reference gives a ratio of exactly 1.0
  const ReductionReport rep = reduction_report(trace, ref);
  CHECK_FALSE(rep.per_layer[0].synaptic_ops.infinite);
  CHECK(rep.per_layer[0].synaptic_ops.value == 1.0);
}

TEST_CASE("raw-spikes encoding forwards nonzero frame values directly") {
  Network net = build_network(
      {dense_spec(4, 3, 0, NeuronKind::kPassthroughSigma)});
  std::vector<std::vector<int16_t>> frames{{5, 0, -2, 0}, {5, 0, -2, 0}};
  const RunTrace trace = run(net, frames, InputEncoding::kRawSpikes, 0);
  // two nonzero values per frame, every frame (no differencing)
  CHECK(trace.input_spikes_per_step == std::vector<int64_t>{2, 2});
  CHECK(trace.counters.per_layer[0].synaptic_ops == 2 * 2 * 3);
}

TEST_CASE("lif layers emit unit-valued spikes through the network") {
  LayerSpec s;
  s.kind = LayerKind::kDense;
  s.in_shape = Shape{1, 1, 1};
  s.out_shape = Shape{1, 1, 2};
  s.weights = {4, 1};
  s.neuron.kind = NeuronKind::kLif;
  s.neuron.threshold = 10;
  s.neuron.lif_decay = 0.5;
  Network net = build_network({s});

  // unit 0 integrates 4 per step (crosses), unit 1 integrates 1 (never)
  std::vector<int64_t> spike_steps;
  for (int64_t t = 0; t < 12; ++t) {
    const auto res = net.step({GradedSpike(t, 0, saturate24(3))});
    for (const auto& sp : res.output_spikes) {
      CHECK(sp.payload.value == 1);
      CHECK(sp.source_unit == 0);
      spike_steps.push_back(t);
    }
  }
  CHECK(!spike_steps.empty());
  // decay advances every step: neuron updates even without input
  const auto quiet = net.step({});
  CHECK(quiet.delta.total.neuron_updates > 0);
}

TEST_CASE("rf layers resonate on spike input") {
  LayerSpec s;
  s.kind = LayerKind::kDense;
  s.in_shape = Shape{1, 1, 1};
  s.out_shape = Shape{1, 1, 1};
  s.weights = {1};
  s.neuron.kind = NeuronKind::kRf;
  s.neuron.threshold = 1 << 18;
  s.neuron.rf_lambda = 1.0;
  s.neuron.rf_omega = std::numbers::pi / 2;
  Network net = build_network({s});

  std::vector<int64_t> spike_steps;
  net.step({GradedSpike(0, 0, saturate24(int64_t{1} << 20))});
  for (int64_t t = 1; t < 10; ++t) {
    const auto res = net.step({});
    if (!res.output_spikes.empty()) {
      CHECK(res.output_spikes[0].payload.value == int64_t{1} << 20);
      spike_steps.push_back(t);
    }
  }
  CHECK(spike_steps == std::vector<int64_t>{1, 5, 9});
}

TEST_CASE("counter exactness: brute-force recount from the trace") {
  Network net = build_network(
      {dense_spec(10, 12, 4), dense_spec(12, 8, 4), dense_spec(8, 3, 4)});
  std::mt19937_64 rng(31);
  std::vector<std::vector<int16_t>> frames;
  for (int t = 0; t < 30; ++t) {
    std::vector<int16_t> f(10);
    for (auto& v : f) v = static_cast<int16_t>(int64_t(rng() % 2000) - 1000);
    frames.push_back(std::move(f));
  }
  const RunTrace trace = run(net, frames, InputEncoding::kDelta, 2);

  // dense fan-out is the full output width; recount ops from spike counts
  const int64_t fanout[] = {12, 8, 3};
  std::vector<int64_t> recount(3, 0);
  for (size_t t = 0; t < trace.per_step.size(); ++t) {
    recount[0] += trace.input_spikes_per_step[t] * fanout[0];
    recount[1] += trace.per_step[t][0].spikes_emitted * fanout[1];
    recount[2] += trace.per_step[t][1].spikes_emitted * fanout[2];
  }
  for (int l = 0; l < 3; ++l)
    CHECK(trace.counters.per_layer[l].synaptic_ops == recount[l]);
}

TEST_CASE("event-driven path equals dense evaluation at threshold 0") {
  // conv -> dense -> passthrough output, all thresholds 0
  std::vector<LayerSpec> specs;
  LayerSpec conv;
  conv.kind = LayerKind::kConv2d;
  conv.in_shape = Shape{6, 6, 2};
  conv.conv = ConvGeom{3, 3, 2, 2, 1, 1};
  conv.out_shape = Shape{3, 3, 4};
  conv.neuron.kind = NeuronKind::kSdRelu;
  conv.neuron.threshold = 0;
  conv.weight_scale_exp = -4;
  std::mt19937_64 rng(77);
  conv.weights.resize(size_t(4) * 2 * 3 * 3);
  for (auto& w : conv.weights)
    w = static_cast<int8_t>(int64_t(rng() % 255) - 127);
  conv.biases.resize(4);  // per output channel
  for (auto& b : conv.biases) b = static_cast<int16_t>(rng() % 100);
  specs.push_back(conv);
  auto mid = dense_spec(3 * 3 * 4, 10, 0, NeuronKind::kSdRelu, 5);
  mid.weight_scale_exp = -5;
  specs.push_back(mid);
  auto out = dense_spec(10, 3, 0, NeuronKind::kPassthroughSigma, 6);
  out.weight_scale_exp = -3;
  specs.push_back(out);

  Network net = build_network(specs);
  const DenseOracle oracle{specs};

  std::vector<std::vector<int16_t>> frames;
  for (int t = 0; t < 20; ++t) {
    std::vector<int16_t> f(6 * 6 * 2);
    for (auto& v : f) v = static_cast<int16_t>(int64_t(rng() % 4000) - 2000);
    frames.push_back(std::move(f));
  }
  const RunTrace trace = run(net, frames, InputEncoding::kDelta, 0);

  std::vector<int64_t> recon(3, 0);
  for (size_t t = 0; t < frames.size(); ++t) {
    for (const auto& sp : trace.outputs[t])
      recon[sp.source_unit] += sp.payload.value;
    const auto want = oracle.eval(frames[t]);
    for (int o = 0; o < 3; ++o) CHECK(recon[o] == want[o]);
  }
}

TEST_CASE("axonal delay delivers exactly d steps late") {
  for (int delay : {1, 3}) {
    LayerSpec spec;
    spec.kind = LayerKind::kDense;
    spec.in_shape = Shape{1, 1, 1};
    spec.out_shape = Shape{1, 1, 1};
    spec.weights = {1};
    spec.neuron.kind = NeuronKind::kPassthroughSigma;
    spec.delay = delay;
    Network net = build_network({spec});
    auto first = net.step(spikes_at(0, {{0, 500}}));
    CHECK(first.delta.total.synaptic_ops == 1);  // MAC happens at emission
    CHECK(first.output_spikes.empty());
    for (int t = 1; t < delay; ++t)
      CHECK(net.step({}).output_spikes.empty());
    const auto res = net.step({});
    REQUIRE(res.output_spikes.size() == 1);
    CHECK(res.output_spikes[0].payload.value == 500);
  }
}

TEST_CASE("a delayed layer is the undelayed layer shifted in time") {
  const int delay = 2;
  auto base = dense_spec(6, 5, 2);
  // zero biases: the bias transient of the first evaluation is not delayed,
  // so only unbiased layers are exactly shift-equivalent
  std::fill(base.biases.begin(), base.biases.end(), int16_t{0});
  auto delayed = base;
  delayed.delay = delay;
  Network a = build_network({base});
  Network b = build_network({delayed});
  std::mt19937_64 rng(41);

  std::vector<std::vector<GradedSpike>> inputs(40);
  for (int t = 0; t < 30; ++t)
    for (int u = 0; u < 6; ++u)
      if (rng() % 3 == 0)
        inputs[t].emplace_back(t, u,
                               saturate24(int64_t(rng() % 400) - 200 + 1));

  std::vector<std::vector<int32_t>> out_a, out_b;
  for (const auto& in : inputs) {
    std::vector<int32_t> va, vb;
    for (const auto& sp : a.step(in).output_spikes)
      va.push_back(sp.payload.value);
    for (const auto& sp : b.step(in).output_spikes)
      vb.push_back(sp.payload.value);
    out_a.push_back(std::move(va));
    out_b.push_back(std::move(vb));
  }
  for (size_t t = 0; t + delay < out_b.size(); ++t)
    CHECK(out_b[t + delay] == out_a[t]);
  CHECK(a.counters().total.synaptic_ops == b.counters().total.synaptic_ops);
}

TEST_CASE("sparse layers route by input coordinate") {
  LayerSpec s;
  s.kind = LayerKind::kSparse;
  s.in_shape = Shape{1, 1, 4};
  s.out_shape = Shape{1, 1, 3};
  s.neuron.kind = NeuronKind::kPassthroughSigma;
  s.synapses = {{0, 0, 2}, {1, 0, -1}, {2, 3, 5}};
  Network net = build_network({s});
  const auto res = net.step(spikes_at(0, {{0, 10}}));
  CHECK(res.delta.total.synaptic_ops == 2);  // only unit 0's synapses fire
  REQUIRE(res.output_spikes.size() == 2);
  CHECK(res.output_spikes[0].payload.value == 20);
  CHECK(res.output_spikes[1].payload.value == -10);
}

TEST_CASE("dense_reference_ops examples") {
  const auto d = dense_spec(3, 4, 0);
  CHECK(dense_reference_ops({d}, 1).total.synaptic_ops == 12);
  CHECK(dense_reference_ops({d}, 2).total.synaptic_ops == 24);

  LayerSpec c;
  c.kind = LayerKind::kConv2d;
  c.in_shape = Shape{8, 8, 1};
  c.conv = ConvGeom{3, 3, 1, 1, 1, 1};
  c.out_shape = Shape{8, 8, 1};
  c.weights.resize(9);
  CHECK(dense_reference_ops({c}, 1).total.synaptic_ops == 576);
  CHECK(dense_reference_ops({c}, 1).total.neuron_updates == 64);
}

TEST_CASE("reduction_report ratios and infinity marker") {
  Network net = build_network({dense_spec(4, 4, 100000)});
  std::vector<std::vector<int16_t>> frames(
      5, std::vector<int16_t>{100, 200, 300, 400});
  const RunTrace trace = run(net, frames, InputEncoding::kDelta, 0);
  const OpCounters ref = dense_reference_ops({net.spec(0)}, 5);
  const ReductionReport rep = reduction_report(trace, ref);
  // huge neuron threshold: layer 0 does MAC work but never spikes
  CHECK_FALSE(rep.per_layer[0].synaptic_ops.infinite);
  CHECK(rep.per_layer[0].activations.infinite);
  CHECK(rep.per_layer[0].spike_rate == 0.0);

  OpCounters zero;
  zero.per_layer.resize(1);
  CHECK_THROWS_AS(reduction_report(trace, zero), std::invalid_argument);
}

TEST_CASE("network json round trip preserves behavior") {
  std::vector<LayerSpec> specs{dense_spec(6, 5, 3), dense_spec(5, 2, 3)};
  specs[0].delay = 2;
  const nlohmann::json doc = network_to_json(specs);
  const auto loaded = network_from_json(doc);
  CHECK(network_to_json(loaded) == doc);

  Network a = build_network(specs);
  Network b = build_network(loaded);
  std::mt19937_64 rng(51);
  std::vector<std::vector<int16_t>> frames;
  for (int t = 0; t < 20; ++t) {
    std::vector<int16_t> f(6);
    for (auto& v : f) v = static_cast<int16_t>(int64_t(rng() % 3000) - 1500);
    frames.push_back(f);
  }
  const RunTrace ta = run(a, frames, InputEncoding::kDelta, 1);
  const RunTrace tb = run(b, frames, InputEncoding::kDelta, 1);
  CHECK(ta.counters.total.synaptic_ops == tb.counters.total.synaptic_ops);
  CHECK(ta.counters.total.spikes_emitted == tb.counters.total.spikes_emitted);
}

TEST_CASE("network json loader reports actionable errors") {
  nlohmann::json doc = network_to_json({dense_spec(2, 2, 0)});
  SUBCASE("wrong version") {
    doc["format_version"] = 99;
    CHECK_THROWS_AS(network_from_json(doc), std::invalid_argument);
  }
  SUBCASE("missing field") {
    doc["layers"][0].erase("weights_hex");
    CHECK_THROWS_AS(network_from_json(doc), std::invalid_argument);
  }
  SUBCASE("bad hex blob") {
    doc["layers"][0]["weights_hex"] = "zz";
    CHECK_THROWS_AS(network_from_json(doc), std::invalid_argument);
  }
}

TEST_CASE("trace csv export is one row per timestep per layer") {
  Network net = build_network({dense_spec(3, 2, 0)});
  std::vector<std::vector<int16_t>> frames(4, std::vector<int16_t>{5, 6, 7});
  const RunTrace trace = run(net, frames, InputEncoding::kDelta, 0);
  std::ostringstream os;
  export_trace_csv(trace, os);
  const std::string text = os.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 4 * 1);
  CHECK(text.rfind("timestep,layer,spikes,synaptic_ops,neuron_updates", 0) ==
        0);
}

TEST_SUITE_END();
