#include "lswjp/model.hpp"

#include <cmath>
#include <string>

#include "lswjp/errors.hpp"
#include "lswjp/structural.hpp"

namespace lswjp {

using nn::Matrix;
using nn::Vector;

std::string_view to_string(AblationVariant v) {
  switch (v) {
    case AblationVariant::kFull: return "full";
    case AblationVariant::kNoTransformer: return "no_transformer";
    case AblationVariant::kNoEmbedding: return "no_embedding";
    case AblationVariant::kNoFeature: return "no_feature";
    case AblationVariant::kNoDecoupling: return "no_decoupling";
  }
  return "full";
}

std::string_view display_name(AblationVariant v) {
  switch (v) {
    case AblationVariant::kFull: return "LSWJP";
    case AblationVariant::kNoTransformer: return "No-Transformer";
    case AblationVariant::kNoEmbedding: return "No-embedding";
    case AblationVariant::kNoFeature: return "No-feature";
    case AblationVariant::kNoDecoupling: return "No-decoupling";
  }
  return "LSWJP";
}

std::optional<AblationVariant> parse_variant(std::string_view name) {
  for (auto v : kAllVariants) {
    if (name == to_string(v)) return v;
  }
  return std::nullopt;
}

void ModelConfig::validate() const {
  if (d_model <= 0 || semantic_in <= 0 || structural_in <= 0 || mlp_hidden <= 0 ||
      ffn_hidden <= 0 || pool_hidden <= 0 || head_hidden <= 0) {
    throw ArgumentError("model widths must be positive");
  }
  if (transformer_layers < 0) throw ArgumentError("transformer_layers must be >= 0");
  if (attention_heads <= 0 || d_model % attention_heads != 0) {
    throw ArgumentError("d_model must be divisible by attention_heads");
  }
  if (steps < 1) throw ArgumentError("sequence length must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ArgumentError("dropout must lie in [0, 1)");
}

int ModelConfig::structural_width() const {
  return variant == AblationVariant::kNoFeature ? kSimpleSignWidth : structural_in;
}

int ModelConfig::link_input_width() const {
  return variant == AblationVariant::kNoDecoupling ? 2 * d_model : 4 * d_model;
}

Vector Predictions::link_prob() const {
  return (1.0 + (-link_logit.array()).exp()).inverse().matrix();
}

Vector Predictions::sign_prob() const {
  return (1.0 + (-sign_logit.array()).exp()).inverse().matrix();
}

Model::Model(ModelConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  const int d = cfg_.d_model;
  if (has_semantic_channel()) {
    semantic_mlp = nn::Mlp("semantic_mlp", cfg_.semantic_in, cfg_.mlp_hidden, d);
  }
  const int str_in = cfg_.variant == AblationVariant::kNoDecoupling
                         ? cfg_.semantic_in + cfg_.structural_width()
                         : cfg_.structural_width();
  structural_mlp = nn::Mlp("structural_mlp", str_in, cfg_.mlp_hidden, d);
  if (has_temporal_encoder()) {
    positional = nn::Parameter("positional", cfg_.steps, d);
    for (int l = 0; l < cfg_.transformer_layers; ++l) {
      layers.emplace_back("encoder." + std::to_string(l), d, cfg_.attention_heads,
                          cfg_.ffn_hidden);
    }
    pool = nn::AttentionPool("pool", d, cfg_.pool_hidden);
  }
  link_hidden = nn::Linear("link.hidden", cfg_.link_input_width(), cfg_.head_hidden);
  link_out = nn::Linear("link.out", cfg_.head_hidden, 1);
  shared_hidden = nn::Linear("sign_weight.hidden", cfg_.sign_input_width(), cfg_.head_hidden);
  sign_out = nn::Linear("sign.out", cfg_.head_hidden, 1);
  weight_out = nn::Linear("weight.out", cfg_.head_hidden, 1);

  Rng rng(derive_seed(cfg_.seed, {stream_id(SeedStream::kModelInit)}));
  if (has_semantic_channel()) semantic_mlp.init(rng);
  structural_mlp.init(rng);
  if (has_temporal_encoder()) {
    nn::normal_init(positional.value, 0.02, rng);
    for (auto& layer : layers) layer.init(rng);
    pool.init(rng);
  }
  link_hidden.init(rng);
  link_out.init(rng);
  shared_hidden.init(rng);
  sign_out.init(rng);
  weight_out.init(rng);
}

nn::ParameterList Model::parameters() {
  nn::ParameterList out;
  if (has_semantic_channel()) semantic_mlp.collect(out);
  structural_mlp.collect(out);
  if (has_temporal_encoder()) {
    out.push_back(&positional);
    for (auto& layer : layers) layer.collect(out);
    pool.collect(out);
  }
  link_hidden.collect(out);
  link_out.collect(out);
  shared_hidden.collect(out);
  sign_out.collect(out);
  weight_out.collect(out);
  return out;
}

std::vector<const nn::Parameter*> Model::parameters() const {
  auto mutable_list = const_cast<Model*>(this)->parameters();
  return {mutable_list.begin(), mutable_list.end()};
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += static_cast<std::size_t>(p->size());
  return n;
}

void Model::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

void Model::check_input(const ModelInput& input) const {
  const auto nodes = input.nodes();
  if (input.semantic.cols() != cfg_.semantic_in) {
    throw ShapeError("semantic input width " + std::to_string(input.semantic.cols()) +
                     " != " + std::to_string(cfg_.semantic_in));
  }
  if (input.steps < 1 || input.structural.rows() != nodes * input.steps) {
    throw ShapeError("structural input must have nodes * steps rows");
  }
  if (input.structural.cols() != cfg_.structural_width()) {
    throw ShapeError("structural input width " + std::to_string(input.structural.cols()) +
                     " != " + std::to_string(cfg_.structural_width()));
  }
  if (has_temporal_encoder() && input.steps != cfg_.steps) {
    throw ShapeError("sequence length " + std::to_string(input.steps) +
                     " does not match the positional table length " +
                     std::to_string(cfg_.steps));
  }
  for (const auto& [i, j] : input.pairs) {
    if (i < 0 || j < 0 || i >= nodes || j >= nodes) {
      throw ArgumentError("candidate edge refers to an unknown node row");
    }
  }
}

Matrix Model::spatial_input(const ModelInput& input) const {
  if (cfg_.variant != AblationVariant::kNoDecoupling) return input.structural;
  const int steps = input.steps;
  const int sem = cfg_.semantic_in;
  Matrix joint(input.structural.rows(), sem + input.structural.cols());
  for (Eigen::Index b = 0; b < input.nodes(); ++b) {
    for (int tau = 0; tau < steps; ++tau) {
      const Eigen::Index r = b * steps + tau;
      joint.row(r).head(sem) = input.semantic.row(b);
      joint.row(r).tail(input.structural.cols()) = input.structural.row(r);
    }
  }
  return joint;
}

void Model::build_edge_inputs(const NodeStates& states, const std::vector<EdgePair>& pairs,
                              Matrix& z_link, Matrix& z_sign) const {
  const int d = cfg_.d_model;
  const auto count = static_cast<Eigen::Index>(pairs.size());
  z_sign.resize(count, 2 * d);
  for (Eigen::Index e = 0; e < count; ++e) {
    const auto [i, j] = pairs[static_cast<std::size_t>(e)];
    z_sign.row(e).head(d) = states.structural.row(i);
    z_sign.row(e).tail(d) = states.structural.row(j);
  }
  if (!has_semantic_channel()) {
    z_link = z_sign;
    return;
  }
  z_link.resize(count, 4 * d);
  for (Eigen::Index e = 0; e < count; ++e) {
    const auto [i, j] = pairs[static_cast<std::size_t>(e)];
    z_link.row(e).segment(0, d) = states.semantic.row(i);
    z_link.row(e).segment(d, d) = states.semantic.row(j);
    z_link.row(e).segment(2 * d, 2 * d) = z_sign.row(e);
  }
}

Predictions Model::run(const ModelInput& input, Rng* dropout_rng, Cache* cache) const {
  check_input(input);
  const int steps = input.steps;
  const bool keep = cache != nullptr;

  NodeStates states;
  Matrix semantic = cfg_.variant == AblationVariant::kNoEmbedding
                        ? Matrix::Zero(input.semantic.rows(), input.semantic.cols())
                        : input.semantic;
  if (has_semantic_channel()) {
    states.semantic = semantic_mlp.forward(semantic, keep ? &cache->semantic_mlp : nullptr);
  }
  ModelInput effective;
  const ModelInput* source = &input;
  if (cfg_.variant == AblationVariant::kNoEmbedding) {
    effective.steps = steps;
    effective.semantic = std::move(semantic);
    effective.structural = input.structural;
    source = &effective;
  }
  Matrix h_t =
      structural_mlp.forward(spatial_input(*source), keep ? &cache->structural_mlp : nullptr);

  if (has_temporal_encoder()) {
    Matrix x = h_t;
    for (Eigen::Index b = 0; b < input.nodes(); ++b) x.middleRows(b * steps, steps) += positional.value;
    if (keep) cache->layers.resize(layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) {
      x = layers[l].forward(x, steps, cfg_.dropout, dropout_rng, keep ? &cache->layers[l] : nullptr);
    }
    states.structural = pool.forward(x, steps, keep ? &cache->pool : nullptr);
  } else {
    states.structural.resize(input.nodes(), cfg_.d_model);
    for (Eigen::Index b = 0; b < input.nodes(); ++b) {
      states.structural.row(b) = h_t.row(b * steps + steps - 1);
    }
  }

  Matrix z_link, z_sign;
  build_edge_inputs(states, input.pairs, z_link, z_sign);

  Predictions out;
  Matrix link_pre = link_hidden.forward(z_link);
  Matrix link_act = nn::relu(link_pre);
  out.link_logit = link_out.forward(link_act).col(0);
  Matrix shared_pre = shared_hidden.forward(z_sign);
  Matrix shared_act = nn::relu(shared_pre);
  out.sign_logit = sign_out.forward(shared_act).col(0);
  out.weight = weight_out.forward(shared_act).col(0);

  if (keep) {
    cache->input = input;
    cache->h_e = std::move(states.semantic);
    cache->h_t = std::move(h_t);
    cache->h_s = std::move(states.structural);
    cache->z_link = std::move(z_link);
    cache->z_sign = std::move(z_sign);
    cache->link_pre = std::move(link_pre);
    cache->link_act = std::move(link_act);
    cache->shared_pre = std::move(shared_pre);
    cache->shared_act = std::move(shared_act);
  }
  return out;
}

Predictions Model::forward(const ModelInput& input, Rng* dropout_rng) {
  cache_.emplace();
  return run(input, dropout_rng, &*cache_);
}

Predictions Model::predict(const ModelInput& input) const { return run(input, nullptr, nullptr); }

void Model::backward(const OutputGradients& grads) {
  if (!cache_) throw std::logic_error("backward() called without a preceding forward()");
  Cache& c = *cache_;
  const int d = cfg_.d_model;
  const int steps = c.input.steps;
  const auto count = static_cast<Eigen::Index>(c.input.pairs.size());
  if (grads.link_logit.size() != count || grads.sign_logit.size() != count ||
      grads.weight.size() != count) {
    throw ShapeError("output gradient length does not match the candidate count");
  }

  Matrix d_link_act = link_out.backward(c.link_act, grads.link_logit);
  d_link_act = (c.link_pre.array() > 0.0).select(d_link_act, 0.0);
  const Matrix dz_link = link_hidden.backward(c.z_link, d_link_act);

  Matrix d_shared = sign_out.backward(c.shared_act, grads.sign_logit);
  d_shared += weight_out.backward(c.shared_act, grads.weight);
  d_shared = (c.shared_pre.array() > 0.0).select(d_shared, 0.0);
  const Matrix dz_sign = shared_hidden.backward(c.z_sign, d_shared);

  const auto nodes = c.input.nodes();
  Matrix dh_s = Matrix::Zero(nodes, d);
  Matrix dh_e;
  if (has_semantic_channel()) dh_e = Matrix::Zero(nodes, d);
  for (Eigen::Index e = 0; e < count; ++e) {
    const auto [i, j] = c.input.pairs[static_cast<std::size_t>(e)];
    dh_s.row(i) += dz_sign.row(e).head(d);
    dh_s.row(j) += dz_sign.row(e).tail(d);
    if (has_semantic_channel()) {
      dh_e.row(i) += dz_link.row(e).segment(0, d);
      dh_e.row(j) += dz_link.row(e).segment(d, d);
      dh_s.row(i) += dz_link.row(e).segment(2 * d, d);
      dh_s.row(j) += dz_link.row(e).segment(3 * d, d);
    } else {
      dh_s.row(i) += dz_link.row(e).head(d);
      dh_s.row(j) += dz_link.row(e).tail(d);
    }
  }

  Matrix dh_t;
  if (has_temporal_encoder()) {
    Matrix dx = pool.backward(dh_s, steps, c.pool);
    for (std::size_t l = layers.size(); l-- > 0;) dx = layers[l].backward(dx, steps, c.layers[l]);
    for (Eigen::Index b = 0; b < nodes; ++b) positional.grad += dx.middleRows(b * steps, steps);
    dh_t = std::move(dx);
  } else {
    dh_t = Matrix::Zero(nodes * steps, d);
    for (Eigen::Index b = 0; b < nodes; ++b) dh_t.row(b * steps + steps - 1) = dh_s.row(b);
  }
  structural_mlp.backward(dh_t, c.structural_mlp);
  if (has_semantic_channel()) semantic_mlp.backward(dh_e, c.semantic_mlp);
}

SpatialOutput Model::spatial_encode(const Matrix& semantic, const Matrix& structural,
                                    int steps) const {
  ModelInput in;
  in.steps = steps;
  in.semantic = cfg_.variant == AblationVariant::kNoEmbedding
                    ? Matrix::Zero(semantic.rows(), semantic.cols())
                    : semantic;
  in.structural = structural;
  if (semantic.cols() != cfg_.semantic_in || structural.cols() != cfg_.structural_width() ||
      structural.rows() != semantic.rows() * steps) {
    throw ShapeError("spatial_encode: expected semantic width " +
                     std::to_string(cfg_.semantic_in) + " and structural width " +
                     std::to_string(cfg_.structural_width()));
  }
  SpatialOutput out;
  if (has_semantic_channel()) out.semantic = semantic_mlp.forward(in.semantic);
  out.temporal = structural_mlp.forward(spatial_input(in));
  return out;
}

Matrix Model::temporal_encode(const Matrix& sequence, int steps) const {
  if (!has_temporal_encoder()) return sequence;
  if (steps != cfg_.steps) {
    throw ShapeError("sequence length does not match the positional table length");
  }
  if (sequence.cols() != cfg_.d_model || sequence.rows() % steps != 0) {
    throw ShapeError("temporal_encode expects (nodes * steps) x d_model input");
  }
  Matrix x = sequence;
  for (Eigen::Index b = 0; b < x.rows() / steps; ++b) x.middleRows(b * steps, steps) += positional.value;
  for (const auto& layer : layers) x = layer.forward(x, steps, 0.0, nullptr);
  return x;
}

Matrix Model::attention_pool(const Matrix& sequence, int steps, Vector* alpha) const {
  if (!has_temporal_encoder()) throw std::logic_error("variant has no attention pooling");
  return pool.forward(sequence, steps, nullptr, alpha);
}

NodeStates Model::encode(const ModelInput& input) const {
  check_input(input);
  const auto spatial = spatial_encode(input.semantic, input.structural, input.steps);
  NodeStates states;
  states.semantic = spatial.semantic;
  if (has_temporal_encoder()) {
    states.structural = attention_pool(temporal_encode(spatial.temporal, input.steps), input.steps);
  } else {
    states.structural.resize(input.nodes(), cfg_.d_model);
    for (Eigen::Index b = 0; b < input.nodes(); ++b) {
      states.structural.row(b) = spatial.temporal.row(b * input.steps + input.steps - 1);
    }
  }
  return states;
}

EdgeRepresentation Model::edge_repr(int i, int j, const NodeStates& states) const {
  if (i < 0 || j < 0 || i >= states.structural.rows() || j >= states.structural.rows()) {
    throw ArgumentError("edge_repr: unknown node row");
  }
  Matrix z_link, z_sign;
  build_edge_inputs(states, {{i, j}}, z_link, z_sign);
  return {z_link.row(0).transpose(), z_sign.row(0).transpose()};
}

Vector Model::link_head(const Matrix& z_link) const {
  return link_out.forward(nn::relu(link_hidden.forward(z_link))).col(0);
}

std::pair<Vector, Vector> Model::sign_weight_head(const Matrix& z_sign) const {
  const Matrix g = nn::relu(shared_hidden.forward(z_sign));
  return {sign_out.forward(g).col(0), weight_out.forward(g).col(0)};
}

}  // namespace lswjp
