#include "lswjp/nn.hpp"

#include <cmath>
#include <random>

#include "lswjp/errors.hpp"

namespace lswjp::nn {

void xavier_uniform(Matrix& m, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

void normal_init(Matrix& m, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

// ---------------------------------------------------------------- Linear

Linear::Linear(const std::string& name, int in, int out)
    : weight(name + ".weight", out, in), bias(name + ".bias", out, 1) {}

void Linear::init(Rng& rng) {
  xavier_uniform(weight.value, rng);
  bias.value.setZero();
}

Matrix Linear::forward(const Matrix& x) const {
  if (x.cols() != weight.value.cols()) {
    throw ShapeError(weight.name + ": expected input width " + std::to_string(in()) + ", got " +
                     std::to_string(x.cols()));
  }
  Matrix y = x * weight.value.transpose();
  y.rowwise() += bias.value.col(0).transpose();
  return y;
}

Matrix Linear::backward(const Matrix& x, const Matrix& dy) {
  weight.grad.noalias() += dy.transpose() * x;
  bias.grad.col(0) += dy.colwise().sum().transpose();
  return dy * weight.value;
}

void Linear::collect(ParameterList& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

// ---------------------------------------------------------------- Mlp

Mlp::Mlp(const std::string& name, int in, int hidden, int out)
    : first(name + ".0", in, hidden), second(name + ".1", hidden, out) {}

void Mlp::init(Rng& rng) {
  first.init(rng);
  second.init(rng);
}

Matrix Mlp::forward(const Matrix& x, Cache* cache) const {
  Matrix pre = first.forward(x);
  Matrix hidden = relu(pre);
  Matrix y = second.forward(hidden);
  if (cache != nullptr) {
    cache->input = x;
    cache->hidden_pre = std::move(pre);
    cache->hidden = std::move(hidden);
  }
  return y;
}

Matrix Mlp::backward(const Matrix& dy, const Cache& cache) {
  Matrix dh = second.backward(cache.hidden, dy);
  dh = (cache.hidden_pre.array() > 0.0).select(dh, 0.0);
  return first.backward(cache.input, dh);
}

void Mlp::collect(ParameterList& out) {
  first.collect(out);
  second.collect(out);
}

// ---------------------------------------------------------------- LayerNorm

LayerNorm::LayerNorm(const std::string& name, int dim, double eps_)
    : gamma(name + ".gamma", 1, dim), beta(name + ".beta", 1, dim), eps(eps_) {
  gamma.value.setOnes();
}

Matrix LayerNorm::forward(const Matrix& x, Cache* cache) const {
  const double d = static_cast<double>(x.cols());
  Vector mean = x.rowwise().sum() / d;
  Matrix centered = x.colwise() - mean;
  Vector var = centered.array().square().rowwise().sum() / d;
  Vector inv = (var.array() + eps).rsqrt();
  Matrix normalized = centered.array().colwise() * inv.array();
  Matrix y = normalized.array().rowwise() * gamma.value.row(0).array();
  y.rowwise() += beta.value.row(0);
  if (cache != nullptr) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv);
  }
  return y;
}

Matrix LayerNorm::backward(const Matrix& dy, const Cache& cache) {
  const auto& xhat = cache.normalized;
  gamma.grad.row(0) += (dy.array() * xhat.array()).colwise().sum().matrix();
  beta.grad.row(0) += dy.colwise().sum();
  const double d = static_cast<double>(dy.cols());
  Matrix dxhat = dy.array().rowwise() * gamma.value.row(0).array();
  Vector sum_dxhat = dxhat.rowwise().sum();
  Vector sum_dxhat_xhat = (dxhat.array() * xhat.array()).rowwise().sum();
  Matrix dx = (d * dxhat.array()).matrix();
  dx.colwise() -= sum_dxhat;
  dx -= (xhat.array().colwise() * sum_dxhat_xhat.array()).matrix();
  dx = dx.array().colwise() * (cache.inv_std.array() / d);
  return dx;
}

void LayerNorm::collect(ParameterList& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

// ---------------------------------------------------------------- Dropout

DropoutMask DropoutMask::sample(Eigen::Index rows, Eigen::Index cols, double rate, Rng* rng) {
  DropoutMask mask;
  if (rng == nullptr || rate <= 0.0) return mask;
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  mask.scale.resize(rows, cols);
  for (Eigen::Index i = 0; i < mask.scale.size(); ++i) {
    mask.scale.data()[i] = keep(*rng) ? scale : 0.0;
  }
  return mask;
}

Matrix DropoutMask::apply(const Matrix& x) const {
  if (scale.size() == 0) return x;
  return x.cwiseProduct(scale);
}

// ---------------------------------------------------------------- Attention

MultiHeadSelfAttention::MultiHeadSelfAttention(const std::string& name, int dim, int heads)
    : query(name + ".q", dim, dim),
      key(name + ".k", dim, dim),
      value(name + ".v", dim, dim),
      output(name + ".o", dim, dim),
      heads_(heads) {
  if (heads <= 0 || dim % heads != 0) {
    throw ArgumentError("model dimension must be divisible by the number of attention heads");
  }
}

void MultiHeadSelfAttention::init(Rng& rng) {
  query.init(rng);
  key.init(rng);
  value.init(rng);
  output.init(rng);
}

namespace {

void softmax_rows(Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double mx = m.row(r).maxCoeff();
    m.row(r) = (m.row(r).array() - mx).exp();
    m.row(r) /= m.row(r).sum();
  }
}

Eigen::Index sequence_count(const Matrix& x, int steps) {
  if (steps <= 0 || x.rows() % steps != 0) {
    throw ShapeError("sequence rows (" + std::to_string(x.rows()) +
                     ") are not a multiple of the step count " + std::to_string(steps));
  }
  return x.rows() / steps;
}

}  // namespace

Matrix MultiHeadSelfAttention::forward(const Matrix& x, int steps, Cache* cache) const {
  const Eigen::Index nodes = sequence_count(x, steps);
  const int dim = query.out();
  const int dh = dim / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix q = query.forward(x);
  Matrix k = key.forward(x);
  Matrix v = value.forward(x);
  Matrix concat(x.rows(), dim);
  if (cache != nullptr) cache->probs.resize(static_cast<std::size_t>(nodes * heads_));

  for (Eigen::Index b = 0; b < nodes; ++b) {
    for (int h = 0; h < heads_; ++h) {
      const auto qb = q.block(b * steps, h * dh, steps, dh);
      const auto kb = k.block(b * steps, h * dh, steps, dh);
      const auto vb = v.block(b * steps, h * dh, steps, dh);
      Matrix p = (qb * kb.transpose()) * scale;
      softmax_rows(p);
      concat.block(b * steps, h * dh, steps, dh).noalias() = p * vb;
      if (cache != nullptr) cache->probs[static_cast<std::size_t>(b * heads_ + h)] = std::move(p);
    }
  }
  Matrix y = output.forward(concat);
  if (cache != nullptr) {
    cache->input = x;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->concat = std::move(concat);
  }
  return y;
}

Matrix MultiHeadSelfAttention::backward(const Matrix& dy, int steps, const Cache& cache) {
  const Eigen::Index nodes = sequence_count(dy, steps);
  const int dim = query.out();
  const int dh = dim / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  const Matrix dconcat = output.backward(cache.concat, dy);
  Matrix dq(dy.rows(), dim), dk(dy.rows(), dim), dv(dy.rows(), dim);
  for (Eigen::Index b = 0; b < nodes; ++b) {
    for (int h = 0; h < heads_; ++h) {
      const Matrix& p = cache.probs[static_cast<std::size_t>(b * heads_ + h)];
      const auto dout = dconcat.block(b * steps, h * dh, steps, dh);
      const auto qb = cache.q.block(b * steps, h * dh, steps, dh);
      const auto kb = cache.k.block(b * steps, h * dh, steps, dh);
      const auto vb = cache.v.block(b * steps, h * dh, steps, dh);
      const Matrix dp = dout * vb.transpose();
      dv.block(b * steps, h * dh, steps, dh).noalias() = p.transpose() * dout;
      const Vector row_dot = (dp.array() * p.array()).rowwise().sum();
      const Matrix ds = p.array() * (dp.colwise() - row_dot).array();
      dq.block(b * steps, h * dh, steps, dh).noalias() = (ds * kb) * scale;
      dk.block(b * steps, h * dh, steps, dh).noalias() = (ds.transpose() * qb) * scale;
    }
  }
  Matrix dx = query.backward(cache.input, dq);
  dx += key.backward(cache.input, dk);
  dx += value.backward(cache.input, dv);
  return dx;
}

void MultiHeadSelfAttention::collect(ParameterList& out) {
  query.collect(out);
  key.collect(out);
  value.collect(out);
  output.collect(out);
}

// ---------------------------------------------------------------- Encoder layer

TransformerEncoderLayer::TransformerEncoderLayer(const std::string& name, int dim, int heads,
                                                 int ffn_hidden)
    : attention(name + ".attn", dim, heads),
      norm1(name + ".norm1", dim),
      ffn(name + ".ffn", dim, ffn_hidden, dim),
      norm2(name + ".norm2", dim) {}

void TransformerEncoderLayer::init(Rng& rng) {
  attention.init(rng);
  ffn.init(rng);
}

Matrix TransformerEncoderLayer::forward(const Matrix& x, int steps, double dropout,
                                        Rng* dropout_rng, Cache* cache) const {
  Cache local;
  Cache* c = cache != nullptr ? cache : &local;
  const bool keep = cache != nullptr;

  Matrix a = attention.forward(x, steps, keep ? &c->attention : nullptr);
  c->attention_drop = DropoutMask::sample(a.rows(), a.cols(), dropout, dropout_rng);
  Matrix y1 = norm1.forward(x + c->attention_drop.apply(a), keep ? &c->norm1 : nullptr);
  Matrix f = ffn.forward(y1, keep ? &c->ffn : nullptr);
  c->ffn_drop = DropoutMask::sample(f.rows(), f.cols(), dropout, dropout_rng);
  return norm2.forward(y1 + c->ffn_drop.apply(f), keep ? &c->norm2 : nullptr);
}

Matrix TransformerEncoderLayer::backward(const Matrix& dy, int steps, const Cache& cache) {
  const Matrix dr2 = norm2.backward(dy, cache.norm2);
  const Matrix dy1 = dr2 + ffn.backward(cache.ffn_drop.apply(dr2), cache.ffn);
  const Matrix dr1 = norm1.backward(dy1, cache.norm1);
  return dr1 + attention.backward(cache.attention_drop.apply(dr1), steps, cache.attention);
}

void TransformerEncoderLayer::collect(ParameterList& out) {
  attention.collect(out);
  norm1.collect(out);
  ffn.collect(out);
  norm2.collect(out);
}

// ---------------------------------------------------------------- Pooling

AttentionPool::AttentionPool(const std::string& name, int dim, int hidden)
    : projection(name + ".proj", dim, hidden), score(name + ".score", hidden, 1) {}

void AttentionPool::init(Rng& rng) {
  projection.init(rng);
  xavier_uniform(score.value, rng);
}

Matrix AttentionPool::forward(const Matrix& x, int steps, Cache* cache, Vector* alpha_out) const {
  const Eigen::Index nodes = sequence_count(x, steps);
  Matrix act = projection.forward(x).array().tanh().matrix();
  Vector e = act * score.value.col(0);
  Vector alpha(x.rows());
  Matrix pooled(nodes, x.cols());
  for (Eigen::Index b = 0; b < nodes; ++b) {
    auto eb = e.segment(b * steps, steps);
    auto ab = alpha.segment(b * steps, steps);
    ab = (eb.array() - eb.maxCoeff()).exp();
    ab /= ab.sum();
    pooled.row(b).noalias() = ab.transpose() * x.middleRows(b * steps, steps);
  }
  if (alpha_out != nullptr) *alpha_out = alpha;
  if (cache != nullptr) {
    cache->input = x;
    cache->activation = std::move(act);
    cache->alpha = std::move(alpha);
  }
  return pooled;
}

Matrix AttentionPool::backward(const Matrix& dy, int steps, const Cache& cache) {
  const Matrix& x = cache.input;
  const Eigen::Index nodes = sequence_count(x, steps);
  Matrix dx(x.rows(), x.cols());
  Vector de(x.rows());
  for (Eigen::Index b = 0; b < nodes; ++b) {
    const auto ab = cache.alpha.segment(b * steps, steps);
    const auto xb = x.middleRows(b * steps, steps);
    dx.middleRows(b * steps, steps).noalias() = ab * dy.row(b);
    const Vector g = xb * dy.row(b).transpose();
    de.segment(b * steps, steps) = ab.array() * (g.array() - ab.dot(g));
  }
  score.grad.col(0).noalias() += cache.activation.transpose() * de;
  Matrix dpre = (de * score.value.col(0).transpose()).array() *
                (1.0 - cache.activation.array().square());
  dx += projection.backward(x, dpre);
  return dx;
}

void AttentionPool::collect(ParameterList& out) {
  projection.collect(out);
  out.push_back(&score);
}

// ---------------------------------------------------------------- Adam

Adam::Adam(ParameterList params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto* p : params_) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = *params_[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

void Adam::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

}  // namespace lswjp::nn
