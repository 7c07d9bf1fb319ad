#pragma once

// Minimal dense layers with explicit forward/backward passes. Activations are
// row-major in meaning: one sample (or one node-time step) per matrix row.
// Sequence tensors are stored flat with row `node * steps + tau`.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lswjp/random.hpp"

namespace lswjp::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
  Eigen::Index size() const { return value.size(); }
};

using ParameterList = std::vector<Parameter*>;

void xavier_uniform(Matrix& m, Rng& rng);
void normal_init(Matrix& m, double stddev, Rng& rng);

class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, int in, int out);

  void init(Rng& rng);
  Matrix forward(const Matrix& x) const;
  // Accumulates parameter gradients and returns dL/dx.
  Matrix backward(const Matrix& x, const Matrix& dy);
  void collect(ParameterList& out);

  int in() const { return static_cast<int>(weight.value.cols()); }
  int out() const { return static_cast<int>(weight.value.rows()); }

  Parameter weight;  // out x in
  Parameter bias;    // out x 1
};

Matrix relu(const Matrix& x);

// Linear -> ReLU -> Linear.
class Mlp {
 public:
  struct Cache {
    Matrix input;
    Matrix hidden_pre;
    Matrix hidden;
  };

  Mlp() = default;
  Mlp(const std::string& name, int in, int hidden, int out);

  void init(Rng& rng);
  Matrix forward(const Matrix& x, Cache* cache = nullptr) const;
  Matrix backward(const Matrix& dy, const Cache& cache);
  void collect(ParameterList& out);

  int in() const { return first.in(); }

  Linear first;
  Linear second;
};

class LayerNorm {
 public:
  struct Cache {
    Matrix normalized;
    Vector inv_std;
  };

  LayerNorm() = default;
  LayerNorm(const std::string& name, int dim, double eps = 1e-5);

  Matrix forward(const Matrix& x, Cache* cache = nullptr) const;
  Matrix backward(const Matrix& dy, const Cache& cache);
  void collect(ParameterList& out);

  Parameter gamma;  // 1 x dim
  Parameter beta;   // 1 x dim
  double eps = 1e-5;
};

// Inverted dropout. An empty mask means identity.
struct DropoutMask {
  Matrix scale;

  static DropoutMask sample(Eigen::Index rows, Eigen::Index cols, double rate, Rng* rng);
  Matrix apply(const Matrix& x) const;
};

// Self-attention applied independently to each node's sequence of `steps` rows.
class MultiHeadSelfAttention {
 public:
  struct Cache {
    Matrix input;
    Matrix q, k, v;
    Matrix concat;
    std::vector<Matrix> probs;  // (node, head) major
  };

  MultiHeadSelfAttention() = default;
  MultiHeadSelfAttention(const std::string& name, int dim, int heads);

  void init(Rng& rng);
  Matrix forward(const Matrix& x, int steps, Cache* cache = nullptr) const;
  Matrix backward(const Matrix& dy, int steps, const Cache& cache);
  void collect(ParameterList& out);

  int heads() const { return heads_; }

  Linear query, key, value, output;

 private:
  int heads_ = 1;
};

// Post-norm Transformer encoder layer: LN(x + MHA(x)), then LN(y + FFN(y)).
class TransformerEncoderLayer {
 public:
  struct Cache {
    MultiHeadSelfAttention::Cache attention;
    DropoutMask attention_drop;
    LayerNorm::Cache norm1;
    Mlp::Cache ffn;
    DropoutMask ffn_drop;
    LayerNorm::Cache norm2;
  };

  TransformerEncoderLayer() = default;
  TransformerEncoderLayer(const std::string& name, int dim, int heads, int ffn_hidden);

  void init(Rng& rng);
  // `dropout_rng == nullptr` disables dropout.
  Matrix forward(const Matrix& x, int steps, double dropout, Rng* dropout_rng,
                 Cache* cache = nullptr) const;
  Matrix backward(const Matrix& dy, int steps, const Cache& cache);
  void collect(ParameterList& out);

  MultiHeadSelfAttention attention;
  LayerNorm norm1;
  Mlp ffn;
  LayerNorm norm2;
};

// Learnable temporal attention pooling: e = u^T tanh(U h + b),
// alpha = softmax over the sequence, output = sum alpha * h.
class AttentionPool {
 public:
  struct Cache {
    Matrix input;
    Matrix activation;  // tanh(U h + b)
    Vector alpha;       // flat, one weight per input row
  };

  AttentionPool() = default;
  AttentionPool(const std::string& name, int dim, int hidden);

  void init(Rng& rng);
  // Returns one pooled row per node. `alpha_out` receives the flat weights.
  Matrix forward(const Matrix& x, int steps, Cache* cache = nullptr,
                 Vector* alpha_out = nullptr) const;
  Matrix backward(const Matrix& dy, int steps, const Cache& cache);
  void collect(ParameterList& out);

  Linear projection;  // U, b
  Parameter score;    // u, hidden x 1
};

// Adaptive moment estimation with bias correction.
class Adam {
 public:
  Adam(ParameterList params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  void step();
  void zero_grad();
  long steps() const { return t_; }
  double learning_rate() const { return lr_; }

 private:
  ParameterList params_;
  std::vector<Matrix> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

}  // namespace lswjp::nn
