#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairtab/core/adam.hpp"
#include "fairtab/core/matrix.hpp"
#include "fairtab/core/mlp.hpp"
#include "fairtab/core/rng.hpp"
#include "fairtab/data/csv.hpp"
#include "fairtab/data/dataset.hpp"
#include "fairtab/data/split.hpp"
#include "fairtab/error.hpp"
#include "fairtab/losses.hpp"
#include "fairtab/metrics.hpp"
#include "fairtab/sampler.hpp"

namespace fairtab {

enum class Baseline { none, unfair_mlp };

inline std::string_view to_string(Baseline b) { return b == Baseline::none ? "none" : "unfair-mlp"; }

inline Baseline baseline_from_string(std::string_view s) {
  if (s == "none" || s.empty()) return Baseline::none;
  if (s == "unfair-mlp" || s == "unfair_mlp") return Baseline::unfair_mlp;
  throw ConfigError("unknown baseline '" + std::string(s) + "'");
}

struct TrainConfig {
  std::string dataset = "adult";
  std::vector<std::size_t> encoder{64, 64, 64};
  std::vector<std::size_t> classifier{16};
  std::size_t epochs = 100;
  std::size_t batch_size = 256;
  double lr = 1e-3;
  double tau = 1.0;
  double alpha = 1.0;
  TrainingMode mode = TrainingMode::supervised;
  PairMode sampler = PairMode::fair;
  Baseline baseline = Baseline::none;
  std::uint64_t seed = 0;
  // Similarity for the contrastive term; unset means cosine (self-supervised) or dot (supervised).
  std::optional<Similarity> similarity;
  bool denominator_includes_positive = true;
  // Supervised mode: use every same-label embedding in the batch as a positive.
  bool full_supcon = false;
  // Train the encoder on the contrastive loss alone, then fit the head on frozen z.
  bool two_stage = false;
  std::vector<double> thresholds{0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5,
                                 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95};

  Similarity effective_similarity() const {
    if (similarity) return *similarity;
    return mode == TrainingMode::supervised ? Similarity::dot : Similarity::cosine;
  }

  void validate() const {
    if (epochs < 1) throw ConfigError("train config: epochs must be at least 1");
    if (batch_size < 2) throw ConfigError("train config: batch_size must be at least 2");
    if (encoder.empty()) throw ConfigError("train config: encoder needs at least one layer");
    if (!(lr > 0.0)) throw ConfigError("train config: lr must be positive");
    if (!(tau > 0.0)) throw ConfigError("train config: tau must be positive");
    if (!(alpha >= 0.0)) throw ConfigError("train config: alpha must be non-negative");
    for (double t : thresholds)
      if (!(t > 0.0 && t < 1.0)) throw ConfigError("train config: thresholds must lie in (0, 1)");
  }
};

/// Per-dataset defaults: layer sizes and epochs/lr/tau from the published
/// configuration, batch sizes chosen here (256, or 64 for the 1000-row German set).
inline TrainConfig default_config(const std::string& dataset) {
  TrainConfig c;
  c.dataset = dataset;
  if (dataset == "adult" || dataset == "synthetic") {
    c.encoder = {64, 64, 64};
  } else if (dataset == "health") {
    c.encoder = {128, 64, 64};
  } else if (dataset == "german") {
    c.encoder = {32, 32, 32};
    c.batch_size = 64;
  } else {
    throw ConfigError("no default configuration for dataset '" + dataset + "'");
  }
  return c;
}

inline nlohmann::json to_json(const TrainConfig& c) {
  nlohmann::json j{{"dataset", c.dataset},
                   {"encoder", c.encoder},
                   {"classifier", c.classifier},
                   {"epochs", c.epochs},
                   {"batch_size", c.batch_size},
                   {"lr", c.lr},
                   {"tau", c.tau},
                   {"alpha", c.alpha},
                   {"mode", std::string(to_string(c.mode))},
                   {"sampler", std::string(to_string(c.sampler))},
                   {"baseline", std::string(to_string(c.baseline))},
                   {"seed", c.seed},
                   {"denominator_includes_positive", c.denominator_includes_positive},
                   {"full_supcon", c.full_supcon},
                   {"two_stage", c.two_stage},
                   {"thresholds", c.thresholds}};
  j["similarity"] = c.similarity ? nlohmann::json(std::string(to_string(*c.similarity))) : nlohmann::json(nullptr);
  return j;
}

/// Overlays the keys present in `j` onto `base`.
inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base) {
  try {
    if (j.contains("dataset")) base.dataset = j["dataset"].get<std::string>();
    if (j.contains("encoder")) base.encoder = j["encoder"].get<std::vector<std::size_t>>();
    if (j.contains("classifier")) base.classifier = j["classifier"].get<std::vector<std::size_t>>();
    if (j.contains("epochs")) base.epochs = j["epochs"].get<std::size_t>();
    if (j.contains("batch_size")) base.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("lr")) base.lr = j["lr"].get<double>();
    if (j.contains("tau")) base.tau = j["tau"].get<double>();
    if (j.contains("alpha")) base.alpha = j["alpha"].get<double>();
    if (j.contains("mode")) base.mode = training_mode_from_string(j["mode"].get<std::string>());
    if (j.contains("sampler")) base.sampler = pair_mode_from_string(j["sampler"].get<std::string>());
    if (j.contains("baseline")) base.baseline = baseline_from_string(j["baseline"].get<std::string>());
    if (j.contains("seed")) base.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("similarity")) {
      if (j["similarity"].is_null()) base.similarity.reset();
      else base.similarity = similarity_from_string(j["similarity"].get<std::string>());
    }
    if (j.contains("denominator_includes_positive"))
      base.denominator_includes_positive = j["denominator_includes_positive"].get<bool>();
    if (j.contains("full_supcon")) base.full_supcon = j["full_supcon"].get<bool>();
    if (j.contains("two_stage")) base.two_stage = j["two_stage"].get<bool>();
    if (j.contains("thresholds")) base.thresholds = j["thresholds"].get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  return base;
}

/// Encoder x -> z and classification head z -> logit.
struct Model {
  Mlp encoder;
  Mlp classifier;
};

inline nlohmann::json to_json(const Model& m) { return {{"encoder", to_json(m.encoder)}, {"classifier", to_json(m.classifier)}}; }

inline Model model_from_json(const nlohmann::json& j) {
  return {mlp_from_json(j.at("encoder")), mlp_from_json(j.at("classifier"))};
}

inline Model make_model(Index in_dim, const TrainConfig& c, Rng& rng) {
  Model m;
  m.encoder = make_mlp(static_cast<std::size_t>(in_dim), c.encoder, Activation::relu, Activation::linear, rng);
  std::vector<std::size_t> head = c.classifier;
  head.push_back(1);
  m.classifier = make_mlp(c.encoder.back(), head, Activation::relu, Activation::linear, rng);
  return m;
}

inline Vector sigmoid(const Vector& logits) { return (1.0 + (-logits.array()).exp()).inverse().matrix(); }

inline Matrix encode(const Model& m, const Matrix& X) { return forward(m.encoder, X).output(); }

inline Vector predict_proba(const Model& m, const Matrix& X) {
  return sigmoid(forward(m.classifier, encode(m, X)).output().col(0));
}

struct Prediction {
  std::vector<int> labels;
  Vector probs;
};

inline std::vector<int> threshold_labels(const Vector& probs, double threshold) {
  std::vector<int> out(static_cast<std::size_t>(probs.size()));
  for (Index i = 0; i < probs.size(); ++i) out[static_cast<std::size_t>(i)] = probs(i) >= threshold ? 1 : 0;
  return out;
}

/// y_hat = 1 iff p >= threshold.
inline Prediction predict(const Model& m, const Matrix& X, double threshold = 0.5) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("predict: threshold must lie in [0, 1]");
  Prediction p;
  p.probs = predict_proba(m, X);
  p.labels = threshold_labels(p.probs, threshold);
  return p;
}

struct EpochLoss {
  double total = 0.0;
  double bce = 0.0;
  double scl = 0.0;
};

struct EvalMetrics {
  double accuracy = 0.0;
  double dp = 0.0;
  std::optional<double> eo, eopp;
};

inline EvalMetrics evaluate(const std::vector<int>& y, const std::vector<int>& yhat, const std::vector<int>& s) {
  EvalMetrics e;
  e.accuracy = accuracy(y, yhat);
  const auto counts = group_counts(y, yhat, s);
  e.dp = demographic_parity(counts);
  try {
    e.eopp = equal_opportunity(counts);
    e.eo = equalized_odds(counts);
  } catch (const DataError&) {
    // a (y, s) cell is empty in this split; EO/EOPP stay undefined
  }
  return e;
}

struct RunReport {
  TrainConfig config;
  std::vector<EpochLoss> losses;
  EvalMetrics test;
  EvalMetrics val;
  double pi = 0.0;
  std::size_t fallbacks = 0;
  double wall_seconds = 0.0;
  std::vector<TradeoffPoint> tradeoff;  // test-split (dp, accuracy) per decision threshold
};

inline nlohmann::json to_json(const EvalMetrics& e) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"accuracy", e.accuracy}, {"dp", e.dp}, {"eo", opt(e.eo)}, {"eopp", opt(e.eopp)}};
}

inline EvalMetrics eval_metrics_from_json(const nlohmann::json& j) {
  EvalMetrics e;
  e.accuracy = j.at("accuracy").get<double>();
  e.dp = j.at("dp").get<double>();
  if (!j.at("eo").is_null()) e.eo = j["eo"].get<double>();
  if (!j.at("eopp").is_null()) e.eopp = j["eopp"].get<double>();
  return e;
}

inline nlohmann::json to_json(const RunReport& r) {
  nlohmann::json losses = nlohmann::json::array();
  for (const auto& l : r.losses) losses.push_back({{"total", l.total}, {"bce", l.bce}, {"scl", l.scl}});
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : r.tradeoff) curve.push_back({{"dp", p.dp}, {"accuracy", p.accuracy}, {"tag", p.tag}});
  return {{"config", to_json(r.config)},   {"seed", r.config.seed},      {"losses", losses},
          {"test", to_json(r.test)},       {"val", to_json(r.val)},      {"pi", r.pi},
          {"fallbacks", r.fallbacks},      {"wall_seconds", r.wall_seconds}, {"tradeoff", curve}};
}

inline RunReport run_report_from_json(const nlohmann::json& j) {
  RunReport r;
  r.config = train_config_from_json(j.at("config"), TrainConfig{});
  for (const auto& l : j.at("losses")) r.losses.push_back({l.at("total"), l.at("bce"), l.at("scl")});
  r.test = eval_metrics_from_json(j.at("test"));
  r.val = eval_metrics_from_json(j.at("val"));
  r.pi = j.at("pi").get<double>();
  r.fallbacks = j.at("fallbacks").get<std::size_t>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  for (const auto& p : j.at("tradeoff")) r.tradeoff.push_back({p.at("dp"), p.at("accuracy"), p.at("tag")});
  return r;
}

struct TrainResult {
  Model model;
  RunReport report;
};

namespace detail {

inline std::vector<TradeoffPoint> threshold_curve(const Vector& probs, const Dataset& d,
                                                  const std::vector<double>& thresholds) {
  std::vector<TradeoffPoint> pts;
  for (double t : thresholds) {
    const auto yhat = threshold_labels(probs, t);
    pts.push_back({demographic_parity(yhat, d.s), accuracy(d.y, yhat), "t=" + csv::format_double(t)});
  }
  return pts;
}

inline void finish_report(RunReport& report, const Model& model, const Splits& splits,
                          std::chrono::steady_clock::time_point start) {
  const Vector test_probs = predict_proba(model, splits.test.X);
  report.test = evaluate(splits.test.y, threshold_labels(test_probs, 0.5), splits.test.s);
  if (splits.val.size() > 0) {
    const auto val = predict(model, splits.val.X);
    report.val = evaluate(splits.val.y, val.labels, splits.val.s);
  }
  report.tradeoff = threshold_curve(test_probs, splits.test, report.config.thresholds);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline std::string context(const TrainConfig& c, std::size_t epoch, std::size_t batch) {
  return "seed " + std::to_string(c.seed) + ", epoch " + std::to_string(epoch + 1) + ", batch " +
         std::to_string(batch);
}

// Batch order without pairing, for the BCE-only loops.
inline std::vector<std::vector<std::size_t>> plain_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order.begin(), order.end());
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    if (end - start == 1 && !out.empty()) {
      out.back().push_back(order[start]);
      continue;
    }
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

// BCE through encoder and head; `update_encoder` false freezes the encoder.
inline EpochLoss bce_epoch(Model& model, AdamState& opt, const Dataset& train, const TrainConfig& c,
                           std::size_t epoch, bool update_encoder, Rng& rng) {
  EpochLoss sum;
  std::size_t batches = 0;
  for (const auto& rows : plain_batches(train.size(), c.batch_size, rng)) {
    const Matrix x = gather_rows(train.X, rows);
    std::vector<int> y;
    y.reserve(rows.size());
    for (auto r : rows) y.push_back(train.y[r]);
    const auto enc = forward(model.encoder, x);
    const auto head = forward(model.classifier, enc.output());
    const auto loss = bce(sigmoid(head.output().col(0)), y);
    if (!std::isfinite(loss.value)) throw NumericError("non-finite loss at " + context(c, epoch, batches));
    const auto head_grad = backward(model.classifier, head, loss.grad_logits);
    std::vector<ParamBlock> params;
    std::vector<GradBlock> grads;
    MlpGrad enc_grad;
    if (update_encoder) {
      enc_grad = backward(model.encoder, enc, head_grad.input);
      append_param_blocks(model.encoder, "encoder", params);
      append_grad_blocks(enc_grad, "encoder", grads);
    }
    append_param_blocks(model.classifier, "classifier", params);
    append_grad_blocks(head_grad, "classifier", grads);
    adam_step(opt, params, grads, c.lr);
    sum.bce += loss.value;
    sum.total += loss.value;
    ++batches;
  }
  sum.bce /= static_cast<double>(batches);
  sum.total /= static_cast<double>(batches);
  return sum;
}

}  // namespace detail

struct StepGrad {
  EpochLoss loss;
  MlpGrad encoder;
  MlpGrad classifier;
};

/// alpha * BCE + contrastive loss on `batch` and its gradients. Anchors fill
/// rows [0, N) of the encoder input, positives rows [N, 2N); BCE sees anchors
/// only. With alpha = 0 the head gradient is zero.
inline StepGrad contrastive_grad(const Model& model, const Batch& batch, const Dataset& train, const Matrix* twin_X,
                                 const TrainConfig& c, double alpha) {
  const auto n = static_cast<Index>(batch.size());
  Matrix x(2 * n, train.dim());
  x.topRows(n) = gather_rows(train.X, batch.anchors);
  x.bottomRows(n) = gather_rows(batch.source == PositiveSource::counterfactual_twin ? *twin_X : train.X,
                                batch.positives);
  const auto enc = forward(model.encoder, x);
  const Matrix& z = enc.output();

  LossValue scl;
  const Similarity sim = c.effective_similarity();
  if (c.mode == TrainingMode::supervised && c.full_supcon) {
    std::vector<int> labels = batch.y;
    labels.insert(labels.end(), batch.pos_y.begin(), batch.pos_y.end());
    scl = sup_con(z, labels, c.tau, sim);
  } else {
    scl = info_nce(z.topRows(n), z.bottomRows(n), negatives_mask(batch, c.mode), c.tau, sim,
                   c.denominator_includes_positive);
  }

  StepGrad out;
  out.loss.scl = scl.value;
  Matrix grad_z = scl.grad;
  out.classifier = zero_grad(model.classifier);
  const auto head = forward(model.classifier, z.topRows(n));
  const auto loss = bce(sigmoid(head.output().col(0)), batch.y);
  out.loss.bce = loss.value;
  if (alpha > 0.0) {
    out.classifier = backward(model.classifier, head, alpha * loss.grad_logits);
    grad_z.topRows(n) += out.classifier.input;
  }
  out.loss.total = total_loss(alpha, out.loss.bce, out.loss.scl);
  if (std::isfinite(out.loss.total)) out.encoder = backward(model.encoder, enc, grad_z);
  return out;
}

/// One contrastive step on `batch`: contrastive_grad followed by one Adam update.
/// A non-finite loss is returned without updating.
inline EpochLoss contrastive_step(Model& model, AdamState& opt, const Batch& batch, const Dataset& train,
                                  const Matrix* twin_X, const TrainConfig& c, double alpha) {
  const StepGrad g = contrastive_grad(model, batch, train, twin_X, c, alpha);
  if (!std::isfinite(g.loss.total)) return g.loss;
  std::vector<ParamBlock> params;
  std::vector<GradBlock> grads;
  append_param_blocks(model.encoder, "encoder", params);
  append_param_blocks(model.classifier, "classifier", params);
  append_grad_blocks(g.encoder, "encoder", grads);
  append_grad_blocks(g.classifier, "classifier", grads);
  adam_step(opt, params, grads, c.lr);
  return g.loss;
}

/// End-to-end training with alpha * BCE + contrastive loss, one Adam step per batch
/// and a fresh pair plan every epoch. With `two_stage`, the encoder is first trained
/// on the contrastive loss alone and the head is then fitted on frozen z.
inline TrainResult train(const Splits& splits, const TrainConfig& c) {
  c.validate();
  splits.train.validate();
  const auto start = std::chrono::steady_clock::now();
  const Dataset& train = splits.train;
  const auto groups = subgroup_index(train);
  if (c.sampler == PairMode::fair) require_all_subgroups(train.y, train.s, "train: training split");

  Rng root(c.seed);
  Rng init_rng = root.fork(1);
  Rng pair_rng = root.fork(2);
  Rng batch_rng = root.fork(3);

  TrainResult result;
  result.model = make_model(train.dim(), c, init_rng);
  auto& report = result.report;
  report.config = c;
  report.pi = estimate_pi(train, groups);
  AdamState opt;

  std::optional<Matrix> twin_X;
  if (c.sampler == PairMode::counterfactual) twin_X = counterfactual_flip(train).X;

  const double alpha = c.two_stage ? 0.0 : c.alpha;
  for (std::size_t epoch = 0; epoch < c.epochs; ++epoch) {
    Rng epoch_pairs = pair_rng.fork(epoch);
    Rng epoch_batches = batch_rng.fork(epoch);
    const auto plan = assign_positives(train, groups, c.sampler, epoch_pairs);
    report.fallbacks += plan.fallbacks;
    EpochLoss sum;
    const auto batches = make_batches(plan, c.batch_size, epoch_batches);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto step = contrastive_step(result.model, opt, batches[b], train, twin_X ? &*twin_X : nullptr, c, alpha);
      if (!std::isfinite(step.total)) throw NumericError("non-finite loss at " + detail::context(c, epoch, b));
      sum.total += step.total;
      sum.bce += step.bce;
      sum.scl += step.scl;
    }
    const auto nb = static_cast<double>(batches.size());
    report.losses.push_back({sum.total / nb, sum.bce / nb, sum.scl / nb});
  }

  if (c.two_stage) {
    AdamState head_opt;
    Rng probe_rng = root.fork(4);
    for (std::size_t epoch = 0; epoch < c.epochs; ++epoch) {
      Rng epoch_batches = probe_rng.fork(epoch);
      detail::bce_epoch(result.model, head_opt, train, c, epoch, false, epoch_batches);
    }
  }
  detail::finish_report(report, result.model, splits, start);
  return result;
}

/// Baseline: the same encoder + head trained on BCE alone.
inline TrainResult train_unfair_mlp(const Splits& splits, TrainConfig c) {
  c.baseline = Baseline::unfair_mlp;
  c.validate();
  splits.train.validate();
  const auto start = std::chrono::steady_clock::now();
  const Dataset& train = splits.train;
  Rng root(c.seed);
  Rng init_rng = root.fork(1);
  Rng batch_rng = root.fork(3);

  TrainResult result;
  result.model = make_model(train.dim(), c, init_rng);
  auto& report = result.report;
  report.config = c;
  report.pi = estimate_pi(train, subgroup_index(train));
  AdamState opt;
  for (std::size_t epoch = 0; epoch < c.epochs; ++epoch) {
    Rng epoch_batches = batch_rng.fork(epoch);
    report.losses.push_back(detail::bce_epoch(result.model, opt, train, c, epoch, true, epoch_batches));
  }
  detail::finish_report(report, result.model, splits, start);
  return result;
}

inline TrainResult train_any(const Splits& splits, const TrainConfig& c) {
  return c.baseline == Baseline::unfair_mlp ? train_unfair_mlp(splits, c) : train(splits, c);
}

struct AggregateReport {
  double mean_accuracy = 0.0;
  double max_dp = 0.0;
  double mean_dp = 0.0;
  std::vector<RunReport> runs;
};

inline AggregateReport aggregate(std::vector<RunReport> runs) {
  if (runs.empty()) throw ConfigError("aggregate: no runs");
  AggregateReport a;
  for (const auto& r : runs) {
    a.mean_accuracy += r.test.accuracy;
    a.mean_dp += r.test.dp;
    a.max_dp = std::max(a.max_dp, r.test.dp);
  }
  a.mean_accuracy /= static_cast<double>(runs.size());
  a.mean_dp /= static_cast<double>(runs.size());
  a.runs = std::move(runs);
  return a;
}

inline nlohmann::json to_json(const AggregateReport& a) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : a.runs) runs.push_back(to_json(r));
  return {{"mean_accuracy", a.mean_accuracy}, {"max_dp", a.max_dp}, {"mean_dp", a.mean_dp}, {"runs", runs}};
}

inline AggregateReport aggregate_report_from_json(const nlohmann::json& j) {
  std::vector<RunReport> runs;
  for (const auto& r : j.at("runs")) runs.push_back(run_report_from_json(r));
  return aggregate(std::move(runs));
}

/// Applies `fn(i)` for i in [0, n) on up to `jobs` threads. The first exception is
/// rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

/// Runs seeds c.seed .. c.seed + n_runs - 1. `on_run` (optional) sees each finished
/// model and report, possibly from a worker thread.
template <class OnRun>
AggregateReport run_experiment(const Splits& splits, const TrainConfig& c, std::size_t n_runs, std::size_t jobs,
                               OnRun&& on_run) {
  if (n_runs < 1) throw ConfigError("run_experiment: n_runs must be at least 1");
  std::vector<RunReport> reports(n_runs);
  parallel_for(n_runs, jobs, [&](std::size_t i) {
    TrainConfig ci = c;
    ci.seed = c.seed + i;
    try {
      auto result = train_any(splits, ci);
      on_run(result);
      reports[i] = std::move(result.report);
    } catch (const Error& e) {
      throw Error("run with seed " + std::to_string(ci.seed) + " failed: " + e.what());
    }
  });
  return aggregate(std::move(reports));
}

inline AggregateReport run_experiment(const Splits& splits, const TrainConfig& c, std::size_t n_runs,
                                      std::size_t jobs = 1) {
  return run_experiment(splits, c, n_runs, jobs, [](const TrainResult&) {});
}

struct ProbeResult {
  Vector weights;
  double bias = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

/// Logistic regression on frozen representations (standardised with train statistics).
inline ProbeResult train_probe(const Matrix& z_train, const std::vector<int>& y_train, const Matrix& z_test,
                               const std::vector<int>& y_test, std::uint64_t seed, std::size_t epochs = 50,
                               std::size_t batch_size = 256, double lr = 1e-2) {
  if (static_cast<std::size_t>(z_train.rows()) != y_train.size() || static_cast<std::size_t>(z_test.rows()) != y_test.size())
    throw ShapeError("train_probe: row counts differ from labels");
  if (z_train.cols() != z_test.cols()) throw ShapeError("train_probe: train and test widths differ");
  const Vector mean = z_train.colwise().mean().transpose();
  Vector sd = ((z_train.rowwise() - mean.transpose()).array().square().colwise().mean()).sqrt().matrix().transpose();
  for (Index k = 0; k < sd.size(); ++k)
    if (sd(k) == 0.0) sd(k) = 1.0;
  auto standardise = [&](const Matrix& z) {
    return Matrix((z.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array());
  };
  const Matrix a = standardise(z_train);
  const Matrix b = standardise(z_test);

  Vector w = Vector::Zero(a.cols());
  Vector bias = Vector::Zero(1);
  AdamState opt;
  Rng rng(seed);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    for (const auto& rows : detail::plain_batches(y_train.size(), batch_size, rng)) {
      const Matrix x = gather_rows(a, rows);
      std::vector<int> y;
      for (auto r : rows) y.push_back(y_train[r]);
      const Vector logits = (x * w).array() + bias(0);
      const auto loss = bce(sigmoid(logits), y);
      const Vector gw = x.transpose() * loss.grad_logits;
      const Vector gb = Vector::Constant(1, loss.grad_logits.sum());
      std::vector<ParamBlock> params{{"w", {w.data(), static_cast<std::size_t>(w.size())}},
                                     {"b", {bias.data(), 1}}};
      std::vector<GradBlock> grads{{"w", {gw.data(), static_cast<std::size_t>(gw.size())}}, {"b", {gb.data(), 1}}};
      adam_step(opt, params, grads, lr);
    }
  }
  ProbeResult out;
  out.weights = w;
  out.bias = bias(0);
  auto acc = [&](const Matrix& x, const std::vector<int>& y) {
    return accuracy(y, threshold_labels(sigmoid((x * w).array() + bias(0)), 0.5));
  };
  out.train_accuracy = acc(a, y_train);
  out.test_accuracy = acc(b, y_test);
  return out;
}

/// id,z0..z{d-1},y,s,y_hat
inline void write_representations_csv(const std::string& path, const Model& m, const Dataset& d,
                                      double threshold = 0.5) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  const Matrix z = encode(m, d.X);
  const auto yhat = threshold_labels(sigmoid(forward(m.classifier, z).output().col(0)), threshold);
  out << "id";
  for (Index k = 0; k < z.cols(); ++k) out << ",z" << k;
  out << ",y,s,y_hat\n";
  for (Index i = 0; i < z.rows(); ++i) {
    out << i;
    for (Index k = 0; k < z.cols(); ++k) out << ',' << csv::format_double(z(i, k));
    const auto r = static_cast<std::size_t>(i);
    out << ',' << d.y[r] << ',' << d.s[r] << ',' << yhat[r] << '\n';
  }
}

}  // namespace fairtab
