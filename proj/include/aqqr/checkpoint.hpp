#pragma once

#include <string>

#include <json.hpp>

#include "aqqr/models.hpp"
#include "aqqr/qdqe.hpp"

namespace aqqr {

inline constexpr int kCheckpointFormatVersion = 1;

/// Rating-model checkpoint: format version, model kind, dimensions, feature
/// statistics, every parameter tensor with its shape, and the effective run
/// config. Doubles round-trip exactly through the JSON encoding.
void save_model_checkpoint(const RatingModel& model, const std::string& path,
                           const nlohmann::json& config_echo);
RatingModel load_model_checkpoint(const std::string& path,
                                  nlohmann::json* config_echo = nullptr);

void save_qdqe_checkpoint(const QdqeEncoder& encoder, const std::string& path,
                          const nlohmann::json& config_echo);
QdqeEncoder load_qdqe_checkpoint(const std::string& path,
                                 nlohmann::json* config_echo = nullptr);

}  // namespace aqqr
