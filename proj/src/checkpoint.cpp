#include "veil/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "veil/errors.hpp"

namespace veil {

nlohmann::json to_json(const ModelSpec& spec) {
  return {{"task", task_name(spec.task)},
          {"vocab_size", spec.vocab_size},
          {"num_classes", spec.num_classes},
          {"embedding_dim", spec.embedding_dim},
          {"hidden_total", spec.hidden_total},
          {"filter_widths", spec.filter_widths},
          {"feature_maps", spec.feature_maps},
          {"discriminator_hidden", spec.discriminator_hidden},
          {"attributes", spec.attributes}};
}

ModelSpec model_spec_from_json(const nlohmann::json& j) {
  try {
    ModelSpec spec;
    spec.task = parse_task(j.at("task").get<std::string>());
    spec.vocab_size = j.at("vocab_size").get<std::size_t>();
    spec.num_classes = j.at("num_classes").get<std::size_t>();
    spec.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    spec.hidden_total = j.at("hidden_total").get<std::size_t>();
    spec.filter_widths = j.at("filter_widths").get<std::vector<std::size_t>>();
    spec.feature_maps = j.at("feature_maps").get<std::size_t>();
    spec.discriminator_hidden = j.at("discriminator_hidden").get<std::size_t>();
    spec.attributes = j.at("attributes").get<std::map<std::string, std::size_t>>();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad model spec: ") + e.what());
  }
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"lambdas", c.lambdas},       {"optimizer", optimizer_name(c.optimizer)},
          {"learning_rate", c.learning_rate}, {"beta1", c.beta1},
          {"beta2", c.beta2},           {"epsilon", c.epsilon},
          {"batch_size", c.batch_size}, {"max_epochs", c.max_epochs},
          {"patience", c.patience},     {"dropout", c.dropout},
          {"seed", c.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  try {
    TrainConfig c;
    c.lambdas = j.at("lambdas").get<std::map<std::string, double>>();
    c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
    c.learning_rate = j.at("learning_rate").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.patience = j.at("patience").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad train config: ") + e.what());
  }
}

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
}

std::uint64_t get_u64(std::string_view bytes, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
  }
  return v;
}

}  // namespace

std::string serialize_checkpoint(JointModel& model, const nlohmann::json& metadata) {
  nlohmann::json tensors = nlohmann::json::array();
  std::string payload;
  for (Parameter* p : model.parameters()) {
    tensors.push_back({{"name", p->name},
                       {"shape", p->value.shape()},
                       {"dtype", "f64"},
                       {"offset", payload.size()}});
    for (double v : p->value.values()) {
      put_u64(payload, std::bit_cast<std::uint64_t>(v));
    }
  }
  nlohmann::json attributes = nlohmann::json::array();
  for (const auto& [name, head] : model.discriminators) {
    attributes.push_back(name);
  }
  const nlohmann::json manifest{{"format", std::string(kCheckpointMagic)},
                                {"spec", to_json(model.spec)},
                                {"attributes", attributes},
                                {"metadata", metadata},
                                {"tensors", tensors}};
  const std::string header = manifest.dump();
  std::string out(kCheckpointMagic);
  put_u64(out, header.size());
  out += header;
  out += payload;
  return out;
}

LoadedCheckpoint deserialize_checkpoint(std::string_view bytes) {
  const std::size_t prefix = kCheckpointMagic.size() + 8;
  if (bytes.size() < prefix || bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) {
    throw CheckpointError("missing VEIL1 magic");
  }
  const std::uint64_t header_len = get_u64(bytes, kCheckpointMagic.size());
  if (header_len > bytes.size() - prefix) {
    throw CheckpointError("truncated manifest");
  }
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(prefix, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("unreadable manifest: ") + e.what());
  }
  const std::string_view payload = bytes.substr(prefix + header_len);

  LoadedCheckpoint loaded{JointModel::create(model_spec_from_json(manifest.at("spec")), 0),
                          manifest.value("metadata", nlohmann::json::object())};
  std::map<std::string, Parameter*> by_name;
  for (Parameter* p : loaded.model.parameters()) {
    by_name[p->name] = p;
  }
  std::size_t restored = 0;
  try {
    for (const auto& t : manifest.at("tensors")) {
      const auto name = t.at("name").get<std::string>();
      auto it = by_name.find(name);
      if (it == by_name.end()) {
        throw CheckpointError("unexpected tensor '" + name + "'");
      }
      if (t.at("dtype").get<std::string>() != "f64") {
        throw CheckpointError("tensor '" + name + "' is not f64");
      }
      Parameter& p = *it->second;
      if (t.at("shape").get<Shape>() != p.value.shape()) {
        throw CheckpointError("tensor '" + name + "' has shape " +
                              shape_to_string(t.at("shape").get<Shape>()) +
                              ", model expects " + shape_to_string(p.value.shape()));
      }
      const auto offset = t.at("offset").get<std::size_t>();
      if (offset > payload.size() || payload.size() - offset < 8 * p.value.size()) {
        throw CheckpointError("tensor '" + name + "' runs past the payload");
      }
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        p.value[i] = std::bit_cast<double>(get_u64(payload, offset + 8 * i));
      }
      ++restored;
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad tensor manifest: ") + e.what());
  }
  if (restored != by_name.size()) {
    throw CheckpointError("checkpoint restores " + std::to_string(restored) + " of " +
                          std::to_string(by_name.size()) + " parameters");
  }
  for (Parameter* p : loaded.model.parameters()) {
    p->zero_grad();
  }
  return loaded;
}

void save_checkpoint(const std::filesystem::path& path, JointModel& model,
                     const nlohmann::json& metadata) {
  const std::string bytes = serialize_checkpoint(model, metadata);
  std::ofstream out(path, std::ios::binary);
  if (!out || !out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()))) {
    throw IoError("cannot write checkpoint " + path.string());
  }
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open checkpoint " + path.string());
  }
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace veil
