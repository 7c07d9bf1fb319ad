#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "lswjp/nn.hpp"

namespace lswjp {

enum class AblationVariant {
  kFull,
  kNoTransformer,  // h_s is the last snapshot's h_t
  kNoEmbedding,    // semantic block zeroed
  kNoFeature,      // structural block replaced by 2 simple sign sums
  kNoDecoupling,   // one MLP over [semantic | structural], z_e == z_s
};

inline constexpr AblationVariant kAllVariants[] = {
    AblationVariant::kNoTransformer, AblationVariant::kNoEmbedding, AblationVariant::kNoFeature,
    AblationVariant::kNoDecoupling, AblationVariant::kFull};

std::string_view to_string(AblationVariant v);          // e.g. "no_transformer"
std::string_view display_name(AblationVariant v);       // e.g. "No-Transformer"
std::optional<AblationVariant> parse_variant(std::string_view name);

struct ModelConfig {
  int d_model = 64;
  int semantic_in = 128;
  int structural_in = 8;
  int transformer_layers = 2;
  int attention_heads = 4;
  int mlp_hidden = 64;
  int ffn_hidden = 128;
  int pool_hidden = 64;
  int head_hidden = 64;
  int steps = 10;  // window length n; size of the positional table
  double dropout = 0.1;
  std::uint64_t seed = 0;
  AblationVariant variant = AblationVariant::kFull;

  void validate() const;
  // Width of the structural input actually consumed (2 for kNoFeature).
  int structural_width() const;
  int link_input_width() const;
  int sign_input_width() const { return 2 * d_model; }
};

using EdgePair = std::pair<int, int>;  // rows into ModelInput::semantic

struct ModelInput {
  int steps = 0;
  nn::Matrix semantic;    // nodes x semantic_in
  nn::Matrix structural;  // (nodes * steps) x structural_width, row node * steps + tau
  std::vector<EdgePair> pairs;

  Eigen::Index nodes() const { return semantic.rows(); }
};

struct NodeStates {
  nn::Matrix semantic;    // h_e, nodes x d_model (empty for kNoDecoupling)
  nn::Matrix structural;  // h_s, nodes x d_model
};

struct EdgeRepresentation {
  nn::Vector link;  // z_e
  nn::Vector sign;  // z_s
};

struct Predictions {
  nn::Vector link_logit;
  nn::Vector sign_logit;
  nn::Vector weight;

  nn::Vector link_prob() const;
  nn::Vector sign_prob() const;
  Eigen::Index size() const { return link_logit.size(); }
};

// dLoss with respect to each output.
struct OutputGradients {
  nn::Vector link_logit;
  nn::Vector sign_logit;
  nn::Vector weight;
};

struct SpatialOutput {
  nn::Matrix semantic;  // h_e
  nn::Matrix temporal;  // h_t, flat sequence layout
};

class Model {
 public:
  explicit Model(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  nn::ParameterList parameters();
  std::vector<const nn::Parameter*> parameters() const;
  std::size_t parameter_count() const;

  // Keeps activations for backward(). `dropout_rng == nullptr` disables dropout.
  Predictions forward(const ModelInput& input, Rng* dropout_rng = nullptr);
  void backward(const OutputGradients& grads);
  void zero_grad();
  // Drops activations kept by forward(); cheapens copies.
  void release_activations() { cache_.reset(); }

  // Stateless inference, dropout off.
  Predictions predict(const ModelInput& input) const;

  SpatialOutput spatial_encode(const nn::Matrix& semantic, const nn::Matrix& structural,
                               int steps) const;
  nn::Matrix temporal_encode(const nn::Matrix& sequence, int steps) const;
  nn::Matrix attention_pool(const nn::Matrix& sequence, int steps,
                            nn::Vector* alpha = nullptr) const;
  NodeStates encode(const ModelInput& input) const;
  EdgeRepresentation edge_repr(int i, int j, const NodeStates& states) const;
  nn::Vector link_head(const nn::Matrix& z_link) const;
  std::pair<nn::Vector, nn::Vector> sign_weight_head(const nn::Matrix& z_sign) const;

  bool has_semantic_channel() const { return cfg_.variant != AblationVariant::kNoDecoupling; }
  bool has_temporal_encoder() const { return cfg_.variant != AblationVariant::kNoTransformer; }

  // Direct access for tests and checkpointing.
  nn::Mlp semantic_mlp;
  nn::Mlp structural_mlp;  // joint MLP for kNoDecoupling
  nn::Parameter positional;
  std::vector<nn::TransformerEncoderLayer> layers;
  nn::AttentionPool pool;
  nn::Linear link_hidden, link_out;
  nn::Linear shared_hidden, sign_out, weight_out;

 private:
  struct Cache {
    ModelInput input;
    nn::Mlp::Cache semantic_mlp, structural_mlp;
    nn::Matrix h_e, h_t;
    std::vector<nn::TransformerEncoderLayer::Cache> layers;
    nn::AttentionPool::Cache pool;
    nn::Matrix h_s;
    nn::Matrix z_link, z_sign;
    nn::Matrix link_pre, link_act;
    nn::Matrix shared_pre, shared_act;
  };

  nn::Matrix spatial_input(const ModelInput& input) const;
  void check_input(const ModelInput& input) const;
  void build_edge_inputs(const NodeStates& states, const std::vector<EdgePair>& pairs,
                         nn::Matrix& z_link, nn::Matrix& z_sign) const;
  Predictions run(const ModelInput& input, Rng* dropout_rng, Cache* cache) const;

  ModelConfig cfg_;
  std::optional<Cache> cache_;
};

}  // namespace lswjp
