#include "vaemir/serialization.hpp"

#include "json.hpp"
#include "vaemir/error.hpp"

namespace vaemir::serialization {

using nlohmann::json;

namespace {

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from(const json& j, const char* what) {
  if (!j.is_array()) throw DataError(std::string("'") + what + "' must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw DataError(std::string("'") + what + "' must hold numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw DataError(std::string("model JSON is missing '") + key + "'");
  }
  return j.at(key);
}

json network_json(const nn::Network& net) {
  json layers = json::array();
  for (const auto& l : net.layers()) {
    json weights = json::array();
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) weights.push_back(l.weights(r, c));
    }
    layers.push_back({{"in", l.in_dim()},
                      {"out", l.out_dim()},
                      {"activation", std::string(nn::to_string(l.activation))},
                      {"weights", std::move(weights)},
                      {"biases", vector_json(l.biases)}});
  }
  return json{{"layers", std::move(layers)}};
}

nn::Network network_from(const json& j) {
  const json& layers = field(j, "layers");
  if (!layers.is_array()) throw DataError("'layers' must be an array");
  std::vector<nn::DenseLayer> out;
  for (const auto& lj : layers) {
    const auto in = field(lj, "in").get<long long>();
    const auto outd = field(lj, "out").get<long long>();
    if (in < 1 || outd < 1) throw DataError("layer dimensions must be positive");
    const Eigen::VectorXd flat = vector_from(field(lj, "weights"), "weights");
    if (flat.size() != in * outd) throw DataError("weights length does not equal in*out");
    nn::DenseLayer layer;
    layer.weights.resize(outd, in);
    for (Eigen::Index r = 0; r < outd; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) layer.weights(r, c) = flat[r * in + c];
    }
    layer.biases = vector_from(field(lj, "biases"), "biases");
    if (layer.biases.size() != outd) throw DataError("biases length does not equal out");
    layer.activation = nn::activation_from_string(field(lj, "activation").get<std::string>());
    out.push_back(std::move(layer));
  }
  try {
    return nn::Network(std::move(out));
  } catch (const InvalidArgument& e) {
    throw DataError(e.what());
  }
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid model JSON: ") + e.what());
  }
}

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model JSON: ") + e.what());
  }
}

}  // namespace

std::string network_to_json(const nn::Network& net) { return network_json(net).dump(); }

nn::Network network_from_json(const std::string& text) {
  const json j = parse(text);
  return guarded([&] { return network_from(j); });
}

std::string vae_to_json(const vae::VaeModel& model) {
  json j{{"latent_dim", model.latent_dim},
         {"feature_mean", vector_json(model.features.mean)},
         {"feature_std", vector_json(model.features.std)},
         {"encoder", network_json(model.encoder)},
         {"decoder", network_json(model.decoder)}};
  return j.dump();
}

vae::VaeModel vae_from_json(const std::string& text) {
  const json j = parse(text);
  return guarded([&] {
    vae::VaeModel model;
    model.latent_dim = field(j, "latent_dim").get<int>();
    model.features.mean = vector_from(field(j, "feature_mean"), "feature_mean");
    model.features.std = vector_from(field(j, "feature_std"), "feature_std");
    model.encoder = network_from(field(j, "encoder"));
    model.decoder = network_from(field(j, "decoder"));
    model.validate();
    return model;
  });
}

std::string regressor_to_json(const regressor::MlpRegressor& model) {
  json j{{"network", network_json(model.network)},
         {"input_mean", vector_json(model.inputs.mean)},
         {"input_std", vector_json(model.inputs.std)},
         {"target_mean", model.target_mean},
         {"target_std", model.target_std},
         {"seed", model.seed}};
  return j.dump();
}

regressor::MlpRegressor regressor_from_json(const std::string& text) {
  const json j = parse(text);
  return guarded([&] {
    regressor::MlpRegressor model;
    model.network = network_from(field(j, "network"));
    model.inputs.mean = vector_from(field(j, "input_mean"), "input_mean");
    model.inputs.std = vector_from(field(j, "input_std"), "input_std");
    model.target_mean = field(j, "target_mean").get<double>();
    model.target_std = field(j, "target_std").get<double>();
    model.seed = field(j, "seed").get<std::uint64_t>();
    model.validate();
    return model;
  });
}

}  // namespace vaemir::serialization
