
#include "cag/error.hpp"
#include "cag/gan.hpp"
#include "fs_util.hpp"
#include "json.hpp"

namespace cag {

namespace {

using nlohmann::json;

constexpr int kCheckpointSchema = 1;

json spec_to_json(const LayerSpec& s) {
  json j{{"kind", std::string(to_string(s.kind))}};
  switch (s.kind) {
    case LayerKind::Dense:
      j["in"] = s.in;
      j["out"] = s.out;
      break;
    case LayerKind::Conv1d:
      j["in"] = s.in;
      j["out"] = s.out;
      j["kernel"] = s.kernel;
      break;
    case LayerKind::Lstm:
      j["in"] = s.in;
      j["hidden"] = s.out;
      j["layers"] = s.layers;
      j["return_sequences"] = s.return_sequences;
      break;
    case LayerKind::Activation:
      j["activation"] = std::string(to_string(s.activation));
      break;
    case LayerKind::Flatten:
      break;
    case LayerKind::Reshape:
      j["dims"] = s.dims;
      break;
    case LayerKind::Repeat:
      j["steps"] = s.steps;
      break;
  }
  return j;
}

LayerSpec spec_from_json(const json& j) {
  const auto kind = layer_kind_from_string(j.at("kind").get<std::string>());
  switch (kind) {
    case LayerKind::Dense:
      return LayerSpec::dense(j.at("in").get<std::size_t>(), j.at("out").get<std::size_t>());
    case LayerKind::Conv1d:
      return LayerSpec::conv1d(j.at("in").get<std::size_t>(), j.at("out").get<std::size_t>(),
                               j.at("kernel").get<std::size_t>());
    case LayerKind::Lstm:
      return LayerSpec::lstm(j.at("in").get<std::size_t>(), j.at("hidden").get<std::size_t>(),
                             j.at("layers").get<std::size_t>(), j.at("return_sequences").get<bool>());
    case LayerKind::Activation:
      return LayerSpec::act(activation_from_string(j.at("activation").get<std::string>()));
    case LayerKind::Flatten:
      return LayerSpec::flatten();
    case LayerKind::Reshape:
      return LayerSpec::reshape(j.at("dims").get<std::vector<std::size_t>>());
    case LayerKind::Repeat:
      return LayerSpec::repeat(j.at("steps").get<std::size_t>());
  }
  throw Error(ErrorKind::Format, "unreachable layer kind");
}

json network_to_json(const Network& net) {
  json layers = json::array();
  for (const auto& s : net.specs()) layers.push_back(spec_to_json(s));
  json params = json::array();
  for (const auto* p : net.params()) {
    params.push_back({{"name", p->name}, {"shape", p->shape}, {"values", p->values}});
  }
  return {{"layers", std::move(layers)}, {"params", std::move(params)}};
}

Network network_from_json(const json& j) {
  std::vector<LayerSpec> specs;
  for (const auto& l : j.at("layers")) specs.push_back(spec_from_json(l));
  Network net(std::move(specs), 0);
  const auto& saved = j.at("params");
  auto params = net.params();
  if (saved.size() != params.size())
    throw Error(ErrorKind::Format, "checkpoint has " + std::to_string(saved.size()) +
                                       " parameter tensors, network expects " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    const auto& s = saved[i];
    if (s.at("name").get<std::string>() != p.name || s.at("shape").get<std::vector<std::size_t>>() != p.shape)
      throw Error(ErrorKind::Format, "checkpoint parameter " + std::to_string(i) + " does not match '" + p.name +
                                         "' " + shape_string(p.shape));
    p.values = s.at("values").get<std::vector<double>>();
    if (p.values.size() != p.grad.size())
      throw Error(ErrorKind::Format, "checkpoint parameter '" + p.name + "' has the wrong number of values");
  }
  return net;
}

json adam_to_json(const AdamState& s) { return {{"step", s.step}, {"m", s.m}, {"v", s.v}}; }

AdamState adam_from_json(const json& j, const Network& net) {
  AdamState s;
  s.step = j.at("step").get<std::uint64_t>();
  s.m = j.at("m").get<std::vector<std::vector<double>>>();
  s.v = j.at("v").get<std::vector<std::vector<double>>>();
  const auto params = net.params();
  bool ok = s.m.size() == params.size() && s.v.size() == params.size();
  for (std::size_t i = 0; ok && i < params.size(); ++i)
    ok = s.m[i].size() == params[i]->values.size() && s.v[i].size() == params[i]->values.size();
  if (!ok) throw Error(ErrorKind::Format, "optimizer state does not match the network");
  return s;
}

}  // namespace

std::string checkpoint_to_string(const GanModel& model) {
  json history = json::array();
  for (const auto& e : model.history) history.push_back({e.discriminator, e.generator});
  json j{
      {"schema_version", kCheckpointSchema},
      {"branch", std::string(to_string(model.branch))},
      {"latent_dim", model.latent_dim},
      {"output_len", model.output_len},
      {"seed", model.seed},
      {"data_range", {{"min", model.range.min}, {"max", model.range.max}}},
      {"generator", network_to_json(model.generator)},
      {"discriminator", network_to_json(model.discriminator)},
      {"generator_adam", adam_to_json(model.generator_state)},
      {"discriminator_adam", adam_to_json(model.discriminator_state)},
      {"loss_history", std::move(history)},
  };
  return j.dump() + '\n';
}

GanModel checkpoint_from_string(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kCheckpointSchema)
      throw Error(ErrorKind::Format, "unsupported checkpoint schema_version " + std::to_string(version));
    GanModel m;
    m.branch = branch_from_string(j.at("branch").get<std::string>());
    m.latent_dim = j.at("latent_dim").get<std::size_t>();
    m.output_len = j.at("output_len").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.range.min = j.at("data_range").at("min").get<double>();
    m.range.max = j.at("data_range").at("max").get<double>();
    if (!(m.range.min <= m.range.max)) throw Error(ErrorKind::Format, "checkpoint data range has min > max");
    m.generator = network_from_json(j.at("generator"));
    m.discriminator = network_from_json(j.at("discriminator"));
    m.generator_state = adam_from_json(j.at("generator_adam"), m.generator);
    m.discriminator_state = adam_from_json(j.at("discriminator_adam"), m.discriminator);
    for (const auto& e : j.at("loss_history")) m.history.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const GanModel& model) {
  detail::write_file_atomic(path, checkpoint_to_string(model));
}

GanModel load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_string(detail::read_file(path));
}

}  // namespace cag
