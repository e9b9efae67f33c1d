#pragma once

#include <string>

#include "vaemir/nn.hpp"
#include "vaemir/regressor.hpp"
#include "vaemir/vae.hpp"

// JSON encodings of trained models. Doubles are written in shortest
// round-trip form, so decoding reproduces every parameter exactly.
//
//   Network:  {"layers":[{"in":int,"out":int,"activation":"relu"|"identity",
//              "weights":[row-major],"biases":[...]}]}
//   VaeModel: {"latent_dim":int,"feature_mean":[...],"feature_std":[...],
//              "encoder":<Network>,"decoder":<Network>}
//   MlpRegressor: {"network":<Network>,"input_mean":[...],"input_std":[...],
//              "target_mean":x,"target_std":x,"seed":int}
namespace vaemir::serialization {

std::string network_to_json(const nn::Network& net);
nn::Network network_from_json(const std::string& text);

std::string vae_to_json(const vae::VaeModel& model);
vae::VaeModel vae_from_json(const std::string& text);

std::string regressor_to_json(const regressor::MlpRegressor& model);
regressor::MlpRegressor regressor_from_json(const std::string& text);

}  // namespace vaemir::serialization
