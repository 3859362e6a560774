#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "spikesim/network.hpp"

namespace spikesim {

inline constexpr int kNetworkFormatVersion = 1;

nlohmann::json network_to_json(const std::vector<LayerSpec>& specs);
std::vector<LayerSpec> network_from_json(const nlohmann::json& doc);

void save_network(const std::vector<LayerSpec>& specs,
                  const std::string& path);
std::vector<LayerSpec> load_network(const std::string& path);

/// One CSV row per timestep per layer: timestep, layer, spikes, synaptic
/// ops, neuron updates.
void export_trace_csv(const RunTrace& trace, std::ostream& out);

std::string hex_encode(const std::vector<int8_t>& bytes);
std::vector<int8_t> hex_decode(const std::string& text);

}  // namespace spikesim
