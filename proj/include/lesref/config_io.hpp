#pragma once

#include <string>

#include "lesref/coarse_sim.hpp"
#include "lesref/protonet.hpp"
#include "lesref/trainer.hpp"

// JSON text round-trips for the config structs (missing keys keep defaults).
namespace lesref {

std::string to_json_text(const net::ModelConfig&);
net::ModelConfig model_config_from_json_text(const std::string&);

std::string to_json_text(const train::TrainConfig&);
train::TrainConfig train_config_from_json_text(const std::string&);

std::string to_json_text(const sim::SimConfig&);
sim::SimConfig sim_config_from_json_text(const std::string&);

}  // namespace lesref
