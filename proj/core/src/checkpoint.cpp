#include "lswjp/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lswjp/errors.hpp"

namespace lswjp {

using nlohmann::json;

namespace {

constexpr const char* kFormatTag = "lswjp-checkpoint";

json config_to_json(const ModelConfig& c) {
  return {{"d_model", c.d_model},
          {"semantic_in", c.semantic_in},
          {"structural_in", c.structural_in},
          {"transformer_layers", c.transformer_layers},
          {"attention_heads", c.attention_heads},
          {"mlp_hidden", c.mlp_hidden},
          {"ffn_hidden", c.ffn_hidden},
          {"pool_hidden", c.pool_hidden},
          {"head_hidden", c.head_hidden},
          {"steps", c.steps},
          {"dropout", c.dropout},
          {"seed", c.seed},
          {"variant", std::string(to_string(c.variant))}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.d_model = j.at("d_model").get<int>();
  c.semantic_in = j.at("semantic_in").get<int>();
  c.structural_in = j.at("structural_in").get<int>();
  c.transformer_layers = j.at("transformer_layers").get<int>();
  c.attention_heads = j.at("attention_heads").get<int>();
  c.mlp_hidden = j.at("mlp_hidden").get<int>();
  c.ffn_hidden = j.at("ffn_hidden").get<int>();
  c.pool_hidden = j.at("pool_hidden").get<int>();
  c.head_hidden = j.at("head_hidden").get<int>();
  c.steps = j.at("steps").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  const auto variant = parse_variant(j.at("variant").get<std::string>());
  if (!variant) throw DataError("checkpoint names an unknown variant");
  c.variant = *variant;
  return c;
}

}  // namespace

void save_checkpoint(std::ostream& out, const Model& model, std::uint64_t data_hash) {
  json params = json::object();
  for (const auto* p : model.parameters()) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(p->value.size()));
    for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) flat.push_back(p->value(r, c));
    }
    params[p->name] = {{"rows", p->value.rows()}, {"cols", p->value.cols()}, {"data", flat}};
  }
  const json doc = {{"format", kFormatTag},
                    {"version", kCheckpointVersion},
                    {"data_hash", data_hash},
                    {"model_config", config_to_json(model.config())},
                    {"params", params}};
  out << doc.dump() << '\n';
  if (!out) throw DataError("failed to write checkpoint");
}

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     std::uint64_t data_hash) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  save_checkpoint(out, model, data_hash);
}

Model load_checkpoint(std::istream& in, std::uint64_t expected_data_hash) {
  const json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw DataError("checkpoint is not valid JSON");
  try {
    if (doc.at("format").get<std::string>() != kFormatTag) {
      throw DataError("not a checkpoint file");
    }
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw DataError("unsupported checkpoint version " + std::to_string(version));
    }
    const auto hash = doc.at("data_hash").get<std::uint64_t>();
    if (hash != expected_data_hash) {
      throw DataError("checkpoint was trained on a different data configuration");
    }
    Model model(config_from_json(doc.at("model_config")));
    const json& params = doc.at("params");
    if (params.size() != model.parameters().size()) {
      throw DataError("checkpoint parameter count does not match the model");
    }
    for (auto* p : model.parameters()) {
      const json& entry = params.at(p->name);
      const auto rows = entry.at("rows").get<Eigen::Index>();
      const auto cols = entry.at("cols").get<Eigen::Index>();
      const auto data = entry.at("data").get<std::vector<double>>();
      if (rows != p->value.rows() || cols != p->value.cols() ||
          static_cast<Eigen::Index>(data.size()) != rows * cols) {
        throw DataError("checkpoint shape mismatch for " + p->name);
      }
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) p->value(r, c) = data[r * cols + c];
      }
    }
    return model;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ArgumentError& e) {
    throw DataError(std::string("checkpoint config rejected: ") + e.what());
  }
}

Model load_checkpoint(const std::filesystem::path& path, std::uint64_t expected_data_hash) {
  std::ifstream in(path);
  if (!in) throw DataError("checkpoint not found: " + path.string());
  return load_checkpoint(in, expected_data_hash);
}

}  // namespace lswjp
