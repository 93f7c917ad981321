#include "aqqr/checkpoint.hpp"

#include <fstream>

#include "aqqr/errors.hpp"
#include <stdexcept>
#include <utility>
#include <vector>

namespace aqqr {

using nlohmann::json;

namespace {

using NamedParams = std::vector<std::pair<std::string, Tensor>>;

void collect_layer(const std::string& prefix, MultiHeadLayer& layer, NamedParams& out) {
  for (int j = 0; j < layer.heads(); ++j) {
    const std::string h = prefix + ".h" + std::to_string(j);
    out.emplace_back(h + ".wq", layer.wq[j]);
    out.emplace_back(h + ".wk", layer.wk[j]);
    out.emplace_back(h + ".wv", layer.wv[j]);
  }
  out.emplace_back(prefix + ".wo", layer.wo);
  out.emplace_back(prefix + ".w1", layer.w1);
  out.emplace_back(prefix + ".b1", layer.b1);
  out.emplace_back(prefix + ".w2", layer.w2);
  out.emplace_back(prefix + ".b2", layer.b2);
  out.emplace_back(prefix + ".ln1_gain", layer.ln1_gain);
  out.emplace_back(prefix + ".ln1_bias", layer.ln1_bias);
  out.emplace_back(prefix + ".ln2_gain", layer.ln2_gain);
  out.emplace_back(prefix + ".ln2_bias", layer.ln2_bias);
}

void collect_scqc_layer(const std::string& prefix, ScqcLayer& layer, NamedParams& out) {
  out.emplace_back(prefix + ".wq", layer.wq);
  out.emplace_back(prefix + ".wk", layer.wk);
  out.emplace_back(prefix + ".wv", layer.wv);
  out.emplace_back(prefix + ".w1", layer.w1);
  out.emplace_back(prefix + ".b1", layer.b1);
  out.emplace_back(prefix + ".w2", layer.w2);
  out.emplace_back(prefix + ".b2", layer.b2);
  out.emplace_back(prefix + ".ln1_gain", layer.ln1_gain);
  out.emplace_back(prefix + ".ln1_bias", layer.ln1_bias);
  out.emplace_back(prefix + ".ln2_gain", layer.ln2_gain);
  out.emplace_back(prefix + ".ln2_bias", layer.ln2_bias);
}

NamedParams named_parameters(RatingModel& model) {
  NamedParams out;
  if (model.scqc) {
    out.emplace_back("scqc.w", model.scqc->w);
    for (int l = 0; l < 2; ++l) {
      collect_scqc_layer("scqc.l" + std::to_string(l), model.scqc->layers[l], out);
    }
    out.emplace_back("scqc.proj_w", model.scqc->proj_w);
    out.emplace_back("scqc.proj_b", model.scqc->proj_b);
  }
  if (model.sf) {
    for (int l = 0; l < 2; ++l) {
      collect_layer("sf.l" + std::to_string(l), model.sf->layers[l], out);
    }
    out.emplace_back("sf.proj_w", model.sf->proj_w);
    out.emplace_back("sf.proj_b", model.sf->proj_b);
  }
  if (model.qdqe) collect_layer("qdqe.layer", model.qdqe->layer, out);
  out.emplace_back("head.w", model.head.w);
  out.emplace_back("head.b", model.head.b);
  return out;
}

json tensor_to_json(const Tensor& t) {
  json j;
  j["shape"] = t.shape();
  j["data"] = t.values();
  return j;
}

void tensor_from_json(const json& j, Tensor& t, const std::string& name) {
  const Shape shape = j.at("shape").get<Shape>();
  if (shape != t.shape()) {
    throw SchemaError("checkpoint parameter '" + name + "' has shape " +
                             shape_str(shape) + ", expected " + shape_str(t.shape()));
  }
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != t.size()) {
    throw SchemaError("checkpoint parameter '" + name + "' has wrong element count");
  }
  t.values() = data;
}

json stats_to_json(const FeatureStats& stats) {
  json j;
  j["mean"] = stats.mean;
  j["stddev"] = stats.stddev;
  return j;
}

FeatureStats stats_from_json(const json& j) {
  FeatureStats stats;
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto stddev = j.at("stddev").get<std::vector<double>>();
  if (mean.size() != 18 || stddev.size() != 18) {
    throw SchemaError("checkpoint feature stats must have 18 entries");
  }
  std::copy(mean.begin(), mean.end(), stats.mean.begin());
  std::copy(stddev.begin(), stddev.end(), stats.stddev.begin());
  return stats;
}

json model_config_to_json(const ModelConfig& cfg) {
  return json{{"d_scqc", cfg.d_scqc},     {"d_sf", cfg.d_sf},
              {"sf_heads", cfg.sf_heads}, {"scqc_d_ff", cfg.scqc_d_ff},
              {"dropout", cfg.dropout_p}, {"qdqe_finetune", cfg.qdqe_finetune}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig cfg;
  cfg.d_scqc = j.at("d_scqc").get<int>();
  cfg.d_sf = j.at("d_sf").get<int>();
  cfg.sf_heads = j.at("sf_heads").get<int>();
  cfg.scqc_d_ff = j.at("scqc_d_ff").get<int>();
  cfg.dropout_p = j.at("dropout").get<double>();
  cfg.qdqe_finetune = j.at("qdqe_finetune").get<bool>();
  return cfg;
}

json read_checkpoint_file(const std::string& path, const std::string& expected_type) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw SchemaError("malformed checkpoint " + path + ": " + e.what());
  }
  if (j.value("format_version", -1) != kCheckpointFormatVersion) {
    throw SchemaError("checkpoint " + path + " has unsupported format_version");
  }
  if (j.value("type", "") != expected_type) {
    throw SchemaError("checkpoint " + path + " is of type '" + j.value("type", "") +
                             "', expected '" + expected_type + "'");
  }
  return j;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace

void save_model_checkpoint(const RatingModel& model, const std::string& path,
                           const json& config_echo) {
  json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["type"] = "rating-model";
  j["kind"] = to_string(model.kind);
  j["embed_dim"] = model.embed_dim;
  j["model_config"] = model_config_to_json(model.config);
  j["feature_stats"] = stats_to_json(model.stats);
  j["config"] = config_echo;
  json params = json::object();
  for (auto& [name, tensor] : named_parameters(const_cast<RatingModel&>(model))) {
    params[name] = tensor_to_json(tensor);
  }
  j["params"] = params;
  write_json_file(j, path);
}

RatingModel load_model_checkpoint(const std::string& path, json* config_echo) {
  const json j = read_checkpoint_file(path, "rating-model");
  const ModelKind kind = model_kind_from_string(j.at("kind").get<std::string>());
  const int embed_dim = j.at("embed_dim").get<int>();
  const ModelConfig cfg = model_config_from_json(j.at("model_config"));
  std::mt19937_64 rng(0);  // placeholder values, overwritten below
  RatingModel model = RatingModel::init(kind, embed_dim, cfg, rng);
  model.stats = stats_from_json(j.at("feature_stats"));
  const json& params = j.at("params");
  for (auto& [name, tensor] : named_parameters(model)) {
    if (!params.contains(name)) {
      throw SchemaError("checkpoint " + path + " is missing parameter '" + name + "'");
    }
    tensor_from_json(params.at(name), tensor, name);
  }
  if (config_echo) *config_echo = j.value("config", json::object());
  return model;
}

void save_qdqe_checkpoint(const QdqeEncoder& encoder, const std::string& path,
                          const json& config_echo) {
  json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["type"] = "qdqe-encoder";
  j["dim"] = encoder.layer.dim();
  j["heads"] = encoder.layer.heads();
  j["config"] = config_echo;
  json params = json::object();
  NamedParams named;
  collect_layer("qdqe.layer", const_cast<QdqeEncoder&>(encoder).layer, named);
  for (auto& [name, tensor] : named) params[name] = tensor_to_json(tensor);
  j["params"] = params;
  write_json_file(j, path);
}

QdqeEncoder load_qdqe_checkpoint(const std::string& path, json* config_echo) {
  const json j = read_checkpoint_file(path, "qdqe-encoder");
  const int dim = j.at("dim").get<int>();
  const int heads = j.at("heads").get<int>();
  std::mt19937_64 rng(0);
  QdqeEncoder encoder = QdqeEncoder::init(dim, heads, rng);
  const json& params = j.at("params");
  NamedParams named;
  collect_layer("qdqe.layer", encoder.layer, named);
  for (auto& [name, tensor] : named) {
    if (!params.contains(name)) {
      throw SchemaError("checkpoint " + path + " is missing parameter '" + name + "'");
    }
    tensor_from_json(params.at(name), tensor, name);
  }
  if (config_echo) *config_echo = j.value("config", json::object());
  return encoder;
}

}  // namespace aqqr
