#include "checks.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "lswjp/semantic.hpp"
#include "lswjp/structural.hpp"
#include "synthetic.hpp"

namespace lswjp::testing {

namespace {

NodeIndexMap dense_index(int n) {
  std::vector<NodeIndex> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = static_cast<NodeIndex>(i);
  return NodeIndexMap(std::move(v));
}

void record(PropertyOutcome& out, bool ok, int c, const std::string& what) {
  ++out.cases;
  if (ok) return;
  if (out.failures++ == 0) out.first_failure = "case " + std::to_string(c) + ": " + what;
}

}  // namespace

Eigen::MatrixXd brute_force_cumulative(const Snapshot& s, int n, int h) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : s.edges) a(e.source, e.target) += e.weight;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double deg = 0.0;
    for (int j = 0; j < n; ++j) deg += std::abs(a(i, j));
    if (deg == 0.0) continue;
    for (int j = 0; j < n; ++j) p(i, j) = a(i, j) / deg;
  }
  Eigen::MatrixXd power = p;
  Eigen::MatrixXd sum = p;
  for (int k = 2; k <= h; ++k) {
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int m = 0; m < n; ++m) acc += power(i, m) * p(m, j);
        next(i, j) = acc;
      }
    }
    power = next;
    sum += power;
  }
  return sum;
}

double multihop_oracle_error(int cases, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<int> size(1, 20);
  std::uniform_int_distribution<int> hops(1, 5);
  std::uniform_real_distribution<double> density(0.02, 0.6);
  double worst = 0.0;
  for (int c = 0; c < cases; ++c) {
    const int n = size(rng);
    const int h = hops(rng);
    const auto s = random_snapshot(rng, 0, n, density(rng));
    const auto fast = multihop_cumulative(signed_transition(s, dense_index(n)), h).to_dense();
    worst = std::max(worst, (fast - brute_force_cumulative(s, n, h)).cwiseAbs().maxCoeff());
  }
  return worst;
}

std::optional<double> trapezoid_auc(std::span<const ScoredLabel> samples) {
  std::vector<ScoredLabel> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredLabel& a, const ScoredLabel& b) { return a.score > b.score; });
  double pos = 0.0;
  double neg = 0.0;
  for (const auto& s : sorted) (s.label == 1 ? pos : neg) += 1.0;
  if (pos == 0.0 || neg == 0.0) return std::nullopt;
  // Walk thresholds from high to low; tied scores move the ROC point together.
  double tp = 0.0, fp = 0.0, prev_tpr = 0.0, prev_fpr = 0.0, area = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) {
      (sorted[j].label == 1 ? tp : fp) += 1.0;
      ++j;
    }
    const double tpr = tp / pos;
    const double fpr = fp / neg;
    area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
    prev_tpr = tpr;
    prev_fpr = fpr;
    i = j;
  }
  return area;
}

double auc_oracle_error(int cases, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<int> size(2, 300);
  std::uniform_int_distribution<int> coarse(0, 20);
  std::uniform_real_distribution<double> fine(0.0, 1.0);
  std::bernoulli_distribution label(0.4);
  std::bernoulli_distribution use_coarse(0.5);
  double worst = 0.0;
  for (int c = 0; c < cases; ++c) {
    std::vector<ScoredLabel> s(static_cast<std::size_t>(size(rng)));
    const bool ties = use_coarse(rng);
    for (auto& x : s) {
      x.score = ties ? coarse(rng) / 20.0 : fine(rng);
      x.label = label(rng) ? 1 : 0;
    }
    s[0].label = 1;
    s[1].label = 0;
    worst = std::max(worst, std::abs(*auc(s) - *trapezoid_auc(s)));
  }
  return worst;
}

RunConfig toy_run_config(std::uint64_t seed) {
  RunConfig cfg;
  cfg.seed = seed;
  cfg.deterministic = true;
  cfg.snapshots = 10;
  cfg.window = 3;
  cfg.feature.walk.num_walks = 2;
  cfg.feature.walk.walk_length = 5;
  cfg.feature.skipgram.dim = 8;
  cfg.feature.skipgram.epochs = 2;
  cfg.model.d_model = 16;
  cfg.model.mlp_hidden = 16;
  cfg.model.ffn_hidden = 32;
  cfg.model.pool_hidden = 16;
  cfg.model.head_hidden = 16;
  cfg.model.attention_heads = 2;
  cfg.train.epochs = 8;
  cfg.train.patience = 8;
  cfg.finalize();
  return cfg;
}

ModelConfig tiny_model_config(AblationVariant variant) {
  ModelConfig c;
  c.d_model = 8;
  c.semantic_in = 6;
  c.structural_in = 8;
  c.transformer_layers = 2;
  c.attention_heads = 4;
  c.mlp_hidden = 8;
  c.ffn_hidden = 16;
  c.pool_hidden = 8;
  c.head_hidden = 8;
  c.steps = 3;
  c.dropout = 0.0;
  c.seed = 5;
  c.variant = variant;
  return c;
}

TinyProblem tiny_problem(const ModelConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  constexpr int kNodes = 6;
  TinyProblem p;
  p.input.steps = cfg.steps;
  p.input.semantic = nn::Matrix::NullaryExpr(kNodes, cfg.semantic_in, [&] { return normal(rng); });
  p.input.structural = nn::Matrix::NullaryExpr(kNodes * cfg.steps, cfg.structural_width(),
                                               [&] { return normal(rng); });
  p.batch.positives = {{0, 1, 1, 0.7}, {1, 2, -1, -0.4}, {3, 4, 1, 0.2}, {5, 0, -1, -0.9}};
  p.batch.negatives = {{2, 5}, {4, 3}, {3, 1}, {1, 5}};
  for (const auto& [s, t] : p.batch.candidates()) {
    p.input.pairs.emplace_back(static_cast<int>(s), static_cast<int>(t));
  }
  p.meta.is_signed = true;
  p.meta.is_weighted = true;
  return p;
}

double total_loss(const Model& model, const TinyProblem& problem) {
  return multitask_loss(model.predict(problem.input), problem.batch, problem.meta, LossWeights{})
      .loss.total;
}

GradientCheck gradient_check(AblationVariant variant, std::uint64_t seed, double step) {
  const auto cfg = tiny_model_config(variant);
  Model model(cfg);
  // Random biases and norms so no gradient is trivially zero.
  Rng rng(seed + 1);
  std::normal_distribution<double> normal(0.0, 0.3);
  for (auto* p : model.parameters()) p->value += nn::Matrix::NullaryExpr(
      p->value.rows(), p->value.cols(), [&] { return normal(rng); });
  const auto problem = tiny_problem(cfg, seed);

  model.zero_grad();
  const auto preds = model.forward(problem.input, nullptr);
  model.backward(multitask_loss(preds, problem.batch, problem.meta, LossWeights{}).gradients);

  GradientCheck out;
  for (auto* p : model.parameters()) {
    nn::Matrix numeric(p->value.rows(), p->value.cols());
    for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
        const double keep = p->value(r, c);
        p->value(r, c) = keep + step;
        const double up = total_loss(model, problem);
        p->value(r, c) = keep - step;
        const double down = total_loss(model, problem);
        p->value(r, c) = keep;
        numeric(r, c) = (up - down) / (2.0 * step);
      }
    }
    // Exactly-zero gradients (e.g. attention key biases) leave only
    // finite-difference roundoff, so tiny norms are compared absolutely.
    const double scale = std::max({p->grad.norm(), numeric.norm(), 1e-4});
    const double err = (p->grad - numeric).norm() / scale;
    ++out.tensors;
    if (err >= out.max_relative_error) {
      out.max_relative_error = err;
      out.worst_parameter = p->name;
    }
  }
  return out;
}

PropertyOutcome transition_normalization_property(int cases, std::uint64_t seed) {
  PropertyOutcome out{"transition-distribution normalization"};
  Rng rng(seed);
  std::uniform_int_distribution<int> size(1, 15);
  for (int c = 0; c < cases; ++c) {
    const WalkGraph g(random_snapshot(rng, 0, size(rng), 0.3));
    bool ok = true;
    for (NodeIndex v : g.nodes()) {
      const auto dist = transition_distribution(v, g);
      if (dist.empty()) {
        ok = ok && g.out_arcs(v).empty();
        continue;
      }
      double sum = 0.0;
      for (const auto& [_, prob] : dist) {
        ok = ok && prob > 0.0;
        sum += prob;
      }
      ok = ok && std::abs(sum - 1.0) <= 1e-12;
    }
    record(out, ok, c, "distribution does not sum to 1");
  }
  return out;
}

PropertyOutcome attention_simplex_property(int cases, std::uint64_t seed) {
  PropertyOutcome out{"attention simplex"};
  Rng rng(seed);
  std::uniform_int_distribution<int> steps(1, 12);
  std::normal_distribution<double> normal(0.0, 3.0);
  for (int c = 0; c < cases; ++c) {
    auto cfg = tiny_model_config();
    cfg.steps = steps(rng);
    cfg.seed = seed + static_cast<std::uint64_t>(c);
    const Model model(cfg);
    const int nodes = 4;
    const nn::Matrix seq = nn::Matrix::NullaryExpr(nodes * cfg.steps, cfg.d_model,
                                                   [&] { return normal(rng); });
    nn::Vector alpha;
    model.attention_pool(seq, cfg.steps, &alpha);
    bool ok = alpha.size() == nodes * cfg.steps && alpha.allFinite();
    for (int v = 0; ok && v < nodes; ++v) {
      const auto seg = alpha.segment(v * cfg.steps, cfg.steps);
      ok = (seg.array() > 0.0).all() && std::abs(seg.sum() - 1.0) <= 1e-6;
    }
    record(out, ok, c, "attention weights leave the simplex");
  }
  return out;
}

PropertyOutcome balance_bounds_property(int cases, std::uint64_t seed) {
  PropertyOutcome out{"balance coefficient bounds"};
  Rng rng(seed);
  std::uniform_int_distribution<int> size(1, 15);
  std::uniform_int_distribution<int> hops(1, 5);
  for (int c = 0; c < cases; ++c) {
    const int n = size(rng);
    const auto s = random_snapshot(rng, 0, n, 0.3);
    const auto f = balance_features(multihop_cumulative(signed_transition(s, dense_index(n)), hops(rng)));
    const bool ok = (f.balance().array() >= -1.0).all() && (f.balance().array() <= 1.0).all() &&
                    (f.r_plus().array() >= 0.0).all() && (f.r_minus().array() >= 0.0).all() &&
                    f.values.allFinite();
    record(out, ok, c, "b outside [-1, 1]");
  }
  return out;
}

PropertyOutcome negative_disjointness_property(int cases, std::uint64_t seed) {
  PropertyOutcome out{"negative-sample disjointness"};
  Rng rng(seed);
  std::uniform_int_distribution<int> size(2, 30);
  std::uniform_real_distribution<double> density(0.01, 0.9);
  for (int c = 0; c < cases; ++c) {
    const int n = size(rng);
    const auto target = random_snapshot(rng, 1, n, density(rng));
    std::vector<NodeIndex> pool(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = static_cast<NodeIndex>(i);
    const auto sample = sample_negatives(target, target.edges.size(), pool, rng());
    std::set<NodePair> seen;
    bool ok = true;
    for (const auto& [i, j] : sample.pairs) {
      ok = ok && i != j && !target.has_edge(i, j) && seen.emplace(i, j).second &&
           static_cast<int>(i) < n && static_cast<int>(j) < n;
    }
    const std::size_t admissible =
        static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) - target.edges.size();
    ok = ok && sample.pairs.size() == std::min(target.edges.size(), admissible);
    record(out, ok, c, "negative collides with a positive or repeats");
  }
  return out;
}

PropertyOutcome temporal_diff_zero_property(int cases, std::uint64_t seed) {
  PropertyOutcome out{"temporal diff zero on identical snapshots"};
  Rng rng(seed);
  std::uniform_int_distribution<int> size(1, 20);
  for (int c = 0; c < cases; ++c) {
    const int n = size(rng);
    const auto s = random_snapshot(rng, 0, n, 0.3);
    record(out, temporal_diff(s, &s, dense_index(n)).values.isZero(0.0), c, "nonzero diff");
  }
  return out;
}

PropertyOutcome deterministic_rerun_property(int cases, std::uint64_t seed) {
  PropertyOutcome out{"deterministic reruns"};
  Rng rng(seed);
  for (int c = 0; c < cases; ++c) {
    const auto s = random_snapshot(rng, 0, 8, 0.3);
    const std::uint64_t run_seed = rng();
    WalkConfig wc;
    wc.num_walks = 2;
    wc.walk_length = 5;
    wc.seed = run_seed;
    SkipGramConfig sc;
    sc.dim = 4;
    sc.epochs = 1;
    sc.seed = run_seed;
    const WalkGraph g(s);
    const auto walks_a = generate_walks(g, wc);
    const auto walks_b = generate_walks(g, wc);
    const auto emb_a = train_skipgram(walks_a, sc, g.nodes());
    const auto emb_b = train_skipgram(walks_b, sc, g.nodes());

    auto cfg = tiny_model_config();
    cfg.seed = run_seed;
    const auto problem = tiny_problem(cfg, run_seed);
    const auto pa = Model(cfg).predict(problem.input);
    const auto pb = Model(cfg).predict(problem.input);

    std::vector<NodeIndex> pool(8);
    for (int i = 0; i < 8; ++i) pool[static_cast<std::size_t>(i)] = static_cast<NodeIndex>(i);
    const auto na = sample_negatives(s, 5, pool, run_seed);
    const auto nb = sample_negatives(s, 5, pool, run_seed);

    const bool ok = walks_a == walks_b && (emb_a.array() == emb_b.array()).all() &&
                    (pa.link_logit.array() == pb.link_logit.array()).all() &&
                    (pa.sign_logit.array() == pb.sign_logit.array()).all() &&
                    (pa.weight.array() == pb.weight.array()).all() && na.pairs == nb.pairs;
    record(out, ok, c, "rerun differs");
  }
  return out;
}

PropertyOutcome mae_le_rmse_property(int cases, std::uint64_t seed) {
  PropertyOutcome out{"MAE <= RMSE"};
  Rng rng(seed);
  std::uniform_int_distribution<int> size(1, 100);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int c = 0; c < cases; ++c) {
    std::vector<double> y(static_cast<std::size_t>(size(rng))), p(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] = normal(rng);
      p[i] = normal(rng);
    }
    const double m = mae(y, p);
    const double r = rmse(y, p);
    record(out, m >= 0.0 && m <= r + 1e-12, c, "MAE exceeds RMSE");
  }
  return out;
}

}  // namespace lswjp::testing
