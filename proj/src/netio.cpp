#include "spikesim/netio.hpp"

#include <fstream>
#include <ostream>
#include <stdexcept>

namespace spikesim {

namespace {

const char* kHexDigits = "0123456789abcdef";

int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  throw std::invalid_argument(std::string("bad hex character '") + c + "'");
}

std::string kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kDense: return "dense";
    case LayerKind::kSparse: return "sparse";
    case LayerKind::kConv2d: return "conv2d";
  }
  return "?";
}

LayerKind kind_from(const std::string& s) {
  if (s == "dense") return LayerKind::kDense;
  if (s == "sparse") return LayerKind::kSparse;
  if (s == "conv2d") return LayerKind::kConv2d;
  throw std::invalid_argument("unknown layer kind '" + s + "'");
}

std::string neuron_name(NeuronKind k) {
  switch (k) {
    case NeuronKind::kSdRelu: return "sdrelu";
    case NeuronKind::kLif: return "lif";
    case NeuronKind::kRf: return "rf";
    case NeuronKind::kPassthroughSigma: return "passthrough-sigma";
  }
  return "?";
}

NeuronKind neuron_from(const std::string& s) {
  if (s == "sdrelu") return NeuronKind::kSdRelu;
  if (s == "lif") return NeuronKind::kLif;
  if (s == "rf") return NeuronKind::kRf;
  if (s == "passthrough-sigma") return NeuronKind::kPassthroughSigma;
  throw std::invalid_argument("unknown neuron kind '" + s + "'");
}

nlohmann::json shape_to_json(const Shape& s) {
  return nlohmann::json::array({s.h, s.w, s.c});
}

Shape shape_from_json(const nlohmann::json& j) {
  if (!j.is_array() || (j.size() != 3 && j.size() != 1))
    throw std::invalid_argument("shape must be [h, w, c] or [n]");
  if (j.size() == 1) return Shape{1, 1, j[0].get<int32_t>()};
  return Shape{j[0].get<int32_t>(), j[1].get<int32_t>(), j[2].get<int32_t>()};
}

std::string bias_hex(const std::vector<int16_t>& biases) {
  std::vector<int8_t> bytes;
  bytes.reserve(biases.size() * 2);
  for (int16_t b : biases) {
    const auto u = static_cast<uint16_t>(b);
    bytes.push_back(static_cast<int8_t>(u & 0xff));        // little-endian
    bytes.push_back(static_cast<int8_t>((u >> 8) & 0xff));
  }
  return hex_encode(bytes);
}

std::vector<int16_t> bias_from_hex(const std::string& text) {
  const std::vector<int8_t> bytes = hex_decode(text);
  if (bytes.size() % 2 != 0)
    throw std::invalid_argument("bias blob has odd byte count");
  std::vector<int16_t> out(bytes.size() / 2);
  for (size_t i = 0; i < out.size(); ++i) {
    const auto lo = static_cast<uint8_t>(bytes[2 * i]);
    const auto hi = static_cast<uint8_t>(bytes[2 * i + 1]);
    out[i] = static_cast<int16_t>(static_cast<uint16_t>(lo) |
                                  (static_cast<uint16_t>(hi) << 8));
  }
  return out;
}

template <typename T>
T require(const nlohmann::json& j, const char* key) {
  if (!j.contains(key))
    throw std::invalid_argument(std::string("missing field '") + key + "'");
  return j.at(key).get<T>();
}

}  // namespace

std::string hex_encode(const std::vector<int8_t>& bytes) {
  std::string out;
  out.reserve(bytes.size() * 2);
  for (int8_t sb : bytes) {
    const auto b = static_cast<uint8_t>(sb);
    out.push_back(kHexDigits[b >> 4]);
    out.push_back(kHexDigits[b & 0xf]);
  }
  return out;
}

std::vector<int8_t> hex_decode(const std::string& text) {
  if (text.size() % 2 != 0)
    throw std::invalid_argument("hex blob has odd length");
  std::vector<int8_t> out(text.size() / 2);
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<int8_t>((hex_nibble(text[2 * i]) << 4) |
                                 hex_nibble(text[2 * i + 1]));
  return out;
}

nlohmann::json network_to_json(const std::vector<LayerSpec>& specs) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& s : specs) {
    nlohmann::json l;
    l["kind"] = kind_name(s.kind);
    l["in_shape"] = shape_to_json(s.in_shape);
    l["out_shape"] = shape_to_json(s.out_shape);
    l["weight_scale_exp"] = s.weight_scale_exp;
    l["delay"] = s.delay;
    if (s.kind == LayerKind::kSparse) {
      nlohmann::json syn = nlohmann::json::array();
      for (const auto& sy : s.synapses)
        syn.push_back({sy.out_idx, sy.in_idx, sy.weight});
      l["synapses"] = std::move(syn);
    } else {
      l["weights_hex"] = hex_encode(s.weights);
    }
    l["biases_hex"] = bias_hex(s.biases);
    if (s.kind == LayerKind::kConv2d) {
      l["conv"] = {{"kernel", {s.conv.kh, s.conv.kw}},
                   {"stride", {s.conv.stride_h, s.conv.stride_w}},
                   {"pad", {s.conv.pad_h, s.conv.pad_w}}};
    }
    nlohmann::json n;
    n["kind"] = neuron_name(s.neuron.kind);
    n["threshold"] = s.neuron.threshold;
    if (s.neuron.kind == NeuronKind::kLif) {
      n["decay"] = s.neuron.lif_decay;
      n["reset"] = s.neuron.lif_reset == LifReset::kToZero
                       ? "to-zero"
                       : "subtract-threshold";
    }
    if (s.neuron.kind == NeuronKind::kRf) {
      n["lambda"] = s.neuron.rf_lambda;
      n["omega"] = s.neuron.rf_omega;
      n["mechanism"] = s.neuron.rf_mechanism == RfMechanism::kImHalfPlane
                           ? "im-half-plane"
                           : "re-threshold";
      n["reset"] =
          s.neuron.rf_reset == RfReset::kNone ? "none" : "zero-on-spike";
    }
    l["neuron"] = std::move(n);
    layers.push_back(std::move(l));
  }
  return nlohmann::json{{"format_version", kNetworkFormatVersion},
                        {"layers", std::move(layers)}};
}

std::vector<LayerSpec> network_from_json(const nlohmann::json& doc) {
  const int version = require<int>(doc, "format_version");
  if (version != kNetworkFormatVersion)
    throw std::invalid_argument("unsupported network format_version " +
                                std::to_string(version));
  if (!doc.contains("layers") || !doc.at("layers").is_array())
    throw std::invalid_argument("missing 'layers' array");

  std::vector<LayerSpec> specs;
  for (const auto& l : doc.at("layers")) {
    LayerSpec s;
    s.kind = kind_from(require<std::string>(l, "kind"));
    s.in_shape = shape_from_json(l.at("in_shape"));
    s.out_shape = shape_from_json(l.at("out_shape"));
    s.weight_scale_exp = require<int32_t>(l, "weight_scale_exp");
    s.delay = l.value("delay", 0);
    if (s.kind == LayerKind::kSparse) {
      for (const auto& sy : require<nlohmann::json>(l, "synapses")) {
        if (!sy.is_array() || sy.size() != 3)
          throw std::invalid_argument("synapse entries must be [out, in, w]");
        s.synapses.push_back({sy[0].get<int32_t>(), sy[1].get<int32_t>(),
                              static_cast<int8_t>(sy[2].get<int32_t>())});
      }
    } else {
      s.weights = hex_decode(require<std::string>(l, "weights_hex"));
    }
    s.biases = bias_from_hex(l.value("biases_hex", std::string{}));
    if (s.kind == LayerKind::kConv2d) {
      const auto& c = l.at("conv");
      s.conv.kh = c.at("kernel")[0].get<int32_t>();
      s.conv.kw = c.at("kernel")[1].get<int32_t>();
      s.conv.stride_h = c.at("stride")[0].get<int32_t>();
      s.conv.stride_w = c.at("stride")[1].get<int32_t>();
      s.conv.pad_h = c.at("pad")[0].get<int32_t>();
      s.conv.pad_w = c.at("pad")[1].get<int32_t>();
    }
    const auto& n = l.at("neuron");
    s.neuron.kind = neuron_from(require<std::string>(n, "kind"));
    s.neuron.threshold = n.value("threshold", int64_t{0});
    if (s.neuron.kind == NeuronKind::kLif) {
      s.neuron.lif_decay = require<double>(n, "decay");
      s.neuron.lif_reset = n.value("reset", std::string("to-zero")) == "to-zero"
                               ? LifReset::kToZero
                               : LifReset::kSubtractThreshold;
    }
    if (s.neuron.kind == NeuronKind::kRf) {
      s.neuron.rf_lambda = require<double>(n, "lambda");
      s.neuron.rf_omega = require<double>(n, "omega");
      s.neuron.rf_mechanism =
          n.value("mechanism", std::string("im-half-plane")) == "im-half-plane"
              ? RfMechanism::kImHalfPlane
              : RfMechanism::kReThreshold;
      s.neuron.rf_reset = n.value("reset", std::string("none")) == "none"
                              ? RfReset::kNone
                              : RfReset::kZeroOnSpike;
    }
    specs.push_back(std::move(s));
  }
  return specs;
}

void save_network(const std::vector<LayerSpec>& specs,
                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write network file " + path);
  out << network_to_json(specs).dump(2) << '\n';
}

std::vector<LayerSpec> load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open network file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("network file " + path +
                             " is not valid JSON: " + e.what());
  }
  try {
    return network_from_json(doc);
  } catch (const std::exception& e) {
    throw std::runtime_error("network file " + path + ": " + e.what());
  }
}

void export_trace_csv(const RunTrace& trace, std::ostream& out) {
  out << "timestep,layer,spikes,synaptic_ops,neuron_updates\n";
  for (size_t t = 0; t < trace.per_step.size(); ++t)
    for (size_t li = 0; li < trace.per_step[t].size(); ++li) {
      const CounterBlock& cb = trace.per_step[t][li];
      out << t << ',' << li << ',' << cb.spikes_emitted << ','
          << cb.synaptic_ops << ',' << cb.neuron_updates << '\n';
    }
}

}  // namespace spikesim
