#pragma once

// Weighted cross-entropy, global-norm clipping, SGD with momentum and the
// mini-batch training loop with early stopping on development loss.

#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "toponym/corpus.hpp"
#include "toponym/embeddings.hpp"
#include "toponym/error.hpp"
#include "toponym/features.hpp"
#include "toponym/linalg.hpp"
#include "toponym/network.hpp"
#include "toponym/scoring.hpp"

namespace toponym {

struct ClassWeights {
  double toponym = 2.0;
  double non_toponym = 1.0;

  double operator[](Label l) const noexcept { return is_toponym(l) ? toponym : non_toponym; }
  friend bool operator==(const ClassWeights&, const ClassWeights&) = default;
};

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
  double momentum = 0.1;
  ClassWeights class_weights;
  double clip_threshold = 1.0;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  std::size_t eval_every = 1;
  std::uint64_t seed = 42;

  void validate() const {
    if (!(learning_rate >= 0.0)) throw InvalidInput("training: learning_rate must be >= 0");
    if (batch_size == 0) throw InvalidInput("training: batch_size must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidInput("training: momentum must be in [0,1)");
    if (!(class_weights.toponym > 0.0 && class_weights.non_toponym > 0.0)) {
      throw InvalidInput("training: class weights must be strictly positive");
    }
    if (!(clip_threshold > 0.0)) throw InvalidInput("training: clip_threshold must be positive");
    if (max_epochs == 0) throw InvalidInput("training: max_epochs must be positive");
    if (patience == 0) throw InvalidInput("training: patience must be positive");
    if (eval_every == 0) throw InvalidInput("training: eval_every must be positive");
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

inline constexpr double kMinProbability = 1e-12;

// -w(target) * ln p(target); p is clamped to 1e-12 and `clamped` set when
// that happens.
inline double weighted_cross_entropy(const Vector& probs, Label target, const ClassWeights& weights,
                                     bool* clamped = nullptr) {
  if (probs.size() != 2) throw InvalidInput("weighted_cross_entropy: expects 2 probabilities");
  double p = probs[class_index(target)];
  if (p < kMinProbability) {
    p = kMinProbability;
    if (clamped) *clamped = true;
  }
  return -weights[target] * std::log(p);
}

// Scales every component by threshold/g when the global L2 norm g exceeds
// the threshold. Returns g.
inline double clip_global_norm_inplace(Gradients& grads, double threshold) {
  if (!(threshold > 0.0)) throw InvalidInput("clip_global_norm: threshold must be positive");
  const double g = grads.global_norm();
  if (g > threshold) grads.scale(threshold / g);
  return g;
}

inline Gradients clip_global_norm(Gradients grads, double threshold) {
  clip_global_norm_inplace(grads, threshold);
  return grads;
}

// v <- momentum*v - lr*grad;  param <- param + v
inline void sgd_momentum_step(ModelParams& params, const Gradients& grads, Gradients& velocity,
                              double lr, double momentum) {
  const std::size_t n = params.layers.size();
  if (grads.layers.size() != n || velocity.layers.size() != n) {
    throw InvalidInput("sgd_momentum_step: shape mismatch");
  }
  for (std::size_t k = 0; k < n; ++k) {
    auto& p = params.layers[k];
    const auto& g = grads.layers[k];
    auto& v = velocity.layers[k];
    if (g.weights.size() != p.weights.size() || v.weights.size() != p.weights.size() ||
        g.bias.size() != p.bias.size() || v.bias.size() != p.bias.size()) {
      throw InvalidInput("sgd_momentum_step: shape mismatch in layer " + std::to_string(k));
    }
    auto update = [&](std::span<double> pv, std::span<const double> gv, std::span<double> vv) {
      for (std::size_t i = 0; i < pv.size(); ++i) {
        vv[i] = momentum * vv[i] - lr * gv[i];
        pv[i] += vv[i];
      }
    };
    update(p.weights.span(), g.weights.span(), v.weights.span());
    update(p.bias.span(), g.bias.span(), v.bias.span());
  }
}

// ---------------------------------------------------------------------------
// Datasets

template <typename D>
concept Dataset = requires(const D& d, std::size_t i) {
  { d.size() } -> std::convertible_to<std::size_t>;
  { d.input(i) } -> std::convertible_to<Vector>;
  { d.label(i) } -> std::convertible_to<Label>;
};

struct Example {
  Vector input;
  Label label = Label::NonToponym;
};

class InMemoryDataset {
 public:
  InMemoryDataset() = default;
  explicit InMemoryDataset(std::vector<Example> examples) : examples_(std::move(examples)) {}

  std::size_t size() const noexcept { return examples_.size(); }
  const Vector& input(std::size_t i) const { return examples_[i].input; }
  Label label(std::size_t i) const { return examples_[i].label; }
  void push_back(Example e) { examples_.push_back(std::move(e)); }

 private:
  std::vector<Example> examples_;
};

// Windows over the kept tokens of prepared documents, assembled on demand.
class WindowDataset {
 public:
  WindowDataset(std::vector<PreparedDocument> docs, FeatureConfig config, const EmbeddingStore& store,
                OovPolicy policy)
      : docs_(std::move(docs)), config_(config), store_(&store), policy_(policy) {
    for (std::size_t d = 0; d < docs_.size(); ++d) {
      for (std::size_t k = 0; k < docs_[d].kept.size(); ++k) refs_.emplace_back(d, k);
    }
  }

  std::size_t size() const noexcept { return refs_.size(); }
  std::size_t input_dim() const { return toponym::input_dim(config_, store_->dimension); }

  Vector input(std::size_t i) const {
    const auto [d, k] = refs_[i];
    return assemble_window(docs_[d].kept, k, config_, *store_, policy_).values;
  }
  Label label(std::size_t i) const {
    const auto [d, k] = refs_[i];
    return docs_[d].kept[k].token.label.value_or(Label::NonToponym);
  }

  const std::vector<PreparedDocument>& documents() const noexcept { return docs_; }
  const FeatureConfig& config() const noexcept { return config_; }

 private:
  std::vector<PreparedDocument> docs_;
  std::vector<std::pair<std::size_t, std::size_t>> refs_;
  FeatureConfig config_;
  const EmbeddingStore* store_;
  OovPolicy policy_;
};

struct DatasetEval {
  double loss = 0.0;  // mean weighted cross-entropy, inference mode
  Counts counts;
};

template <Dataset D>
DatasetEval evaluate_dataset(const ModelParams& model, const D& data, const ClassWeights& weights) {
  DatasetEval e;
  if (data.size() == 0) return e;
  double total = 0.0;
  std::vector<Label> pred;
  std::vector<Label> gold;
  pred.reserve(data.size());
  gold.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Prediction p = predict(model, data.input(i));
    total += weighted_cross_entropy(p.probabilities, data.label(i), weights);
    pred.push_back(p.label);
    gold.push_back(data.label(i));
  }
  e.loss = total / static_cast<double>(data.size());
  e.counts = count_labels(pred, gold);
  return e;
}

// ---------------------------------------------------------------------------
// Training loop

struct HistoryRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;
  EvalReport dev;
};

struct TrainHistory {
  std::vector<HistoryRow> rows;
  bool stopped_early = false;
  std::size_t best_epoch = 0;
  double best_dev_loss = std::numeric_limits<double>::infinity();
  std::size_t clamped_losses = 0;  // probabilities clamped to 1e-12 before the log
};

struct TrainHooks {
  // Replaces the measured development loss at each evaluation point.
  std::function<double(std::size_t evaluation, std::size_t epoch, double measured)> dev_loss_override;
  std::function<void(const HistoryRow&)> on_evaluation;
};

struct TrainResult {
  ModelParams model;  // parameters at the best development-loss evaluation
  TrainHistory history;
};

namespace detail {

inline void shuffle(std::vector<std::size_t>& order, std::mt19937_64& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
}

}  // namespace detail

// Shuffled mini-batches: forward (train) -> weighted loss -> backward ->
// global clip -> momentum step. The development set is evaluated every
// `eval_every` epochs; training stops after `patience` evaluations without
// improvement. An empty development set falls back to the training loss.
template <Dataset Train, Dataset Dev>
TrainResult train(ModelParams model, const Train& train_data, const Dev& dev_data, const TrainConfig& config,
                  const TrainHooks& hooks = {}) {
  config.validate();
  if (train_data.size() == 0) throw InvalidInput("train: empty training set");

  std::mt19937_64 rng(config.seed);
  TrainResult result{model, {}};
  TrainHistory& h = result.history;
  Gradients grads = Gradients::zeros_like(model);
  Gradients velocity = Gradients::zeros_like(model);
  std::vector<std::size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t evaluations = 0;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    detail::shuffle(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      const std::size_t end = std::min(order.size(), b + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - b);
      grads.set_zero();
      for (std::size_t i = b; i < end; ++i) {
        const std::size_t idx = order[i];
        const Label y = train_data.label(idx);
        const ForwardResult fr = forward(model, train_data.input(idx), Mode::Train, &rng);
        bool clamped = false;
        epoch_loss += weighted_cross_entropy(fr.trace.probabilities, y, config.class_weights, &clamped);
        if (clamped) ++h.clamped_losses;
        backward_accumulate(model, fr.trace, y, config.class_weights[y], scale, grads);
      }
      clip_global_norm_inplace(grads, config.clip_threshold);
      sgd_momentum_step(model, grads, velocity, config.learning_rate, config.momentum);
    }

    const bool last = epoch == config.max_epochs;
    if (epoch % config.eval_every != 0 && !last) continue;

    HistoryRow row;
    row.epoch = epoch;
    row.train_loss = epoch_loss / static_cast<double>(order.size());
    if (dev_data.size() > 0) {
      const DatasetEval de = evaluate_dataset(model, dev_data, config.class_weights);
      row.dev_loss = de.loss;
      row.dev.counts = de.counts;
    } else {
      row.dev_loss = row.train_loss;
    }
    ++evaluations;
    if (hooks.dev_loss_override) row.dev_loss = hooks.dev_loss_override(evaluations, epoch, row.dev_loss);
    h.rows.push_back(row);
    if (hooks.on_evaluation) hooks.on_evaluation(row);

    if (row.dev_loss < h.best_dev_loss) {
      h.best_dev_loss = row.dev_loss;
      h.best_epoch = epoch;
      result.model = model;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      h.stopped_early = true;
      break;
    }
  }
  return result;
}

inline std::string format_real(double v) {
  std::ostringstream ss;
  ss << std::setprecision(10) << v;
  return ss.str();
}

// epoch, train_loss, dev_loss, P, R, F1
inline void write_history_tsv(std::ostream& out, const TrainHistory& h) {
  out << "epoch\ttrain_loss\tdev_loss\tprecision\trecall\tf1\n";
  for (const auto& r : h.rows) {
    out << r.epoch << '\t' << format_real(r.train_loss) << '\t' << format_real(r.dev_loss) << '\t'
        << r.dev.precision_str() << '\t' << r.dev.recall_str() << '\t' << r.dev.f1_str() << '\n';
  }
}

}  // namespace toponym
