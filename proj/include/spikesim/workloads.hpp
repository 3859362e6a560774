#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "spikesim/network.hpp"

namespace spikesim {

inline constexpr int kReportFormatVersion = 1;

/// Built-in desk-scale defaults for a workload ("stft-chirp", "sdnn-video"
/// or "sigma-delta-sweep").
nlohmann::json default_config(const std::string& workload);

/// Deep-merges user settings over the defaults and applies dotted-path
/// overrides ("bank.neurons=100"). Values parse as JSON first, falling back
/// to plain strings.
nlohmann::json resolve_config(const std::string& workload,
                              const nlohmann::json& user,
                              const std::vector<std::string>& overrides);

/// Runs the workload named in the resolved config and writes report.json,
/// config.resolved.json and the workload's CSV into out_dir.
void run_workload(const nlohmann::json& resolved, const std::string& out_dir);

/// Small conv+dense topology for synthetic video streams, with seeded
/// random int8 weights. Weight scales are chosen so activations land near
/// activation_target; hidden delta thresholds are shared.
std::vector<LayerSpec> build_desk_video_specs(const Shape& input,
                                              uint64_t seed,
                                              int32_t hidden_threshold,
                                              int32_t activation_target);

/// PilotNet-style topology: five conv layers (24/36/48 at 5x5 stride 2,
/// 64/64 at 3x3) and four dense layers (1152-182-50-10-1) on 66x200x3
/// frames, 350,865 parameters. Weights are seeded random int8.
std::vector<LayerSpec> build_pilotnet_specs(uint64_t seed,
                                            int32_t hidden_threshold,
                                            int32_t activation_target);

}  // namespace spikesim
