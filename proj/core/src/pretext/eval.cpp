#include "xform/pretext/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "xform/ad/engine.hpp"
#include "xform/ad/ops.hpp"
#include "xform/ad/optim.hpp"
#include "xform/error.hpp"
#include "xform/io.hpp"
#include "xform/nn/checkpoint.hpp"
#include "xform/random.hpp"
#include "xform/transforms/geometric.hpp"

namespace xform::pretext {

using json = nlohmann::json;

void EvalConfig::validate() const {
  if (batch < 1) throw InvalidInput("eval: batch must be >= 1");
  if (!(lr > 0.0)) throw InvalidInput("eval: lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidInput("eval: momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw InvalidInput("eval: weight_decay must be >= 0");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InvalidInput("eval: test_fraction must lie in (0, 1)");
  if (width1 < 1 || width2 < 1) throw InvalidInput("eval: encoder widths must be >= 1");
}

std::string EvalConfig::to_json() const {
  json j;
  j["pretext_epochs"] = pretext_epochs;
  j["probe_epochs"] = probe_epochs;
  j["batch"] = batch;
  j["lr"] = lr;
  j["momentum"] = momentum;
  j["weight_decay"] = weight_decay;
  j["test_fraction"] = test_fraction;
  j["width1"] = width1;
  j["width2"] = width2;
  return j.dump();
}

EvalConfig EvalConfig::from_json(std::string_view text, const EvalConfig& base) {
  EvalConfig cfg = base;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw InvalidInput("eval config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "pretext_epochs") cfg.pretext_epochs = value.get<std::size_t>();
      else if (key == "probe_epochs") cfg.probe_epochs = value.get<std::size_t>();
      else if (key == "batch") cfg.batch = value.get<std::size_t>();
      else if (key == "lr") cfg.lr = value.get<double>();
      else if (key == "momentum") cfg.momentum = value.get<double>();
      else if (key == "weight_decay") cfg.weight_decay = value.get<double>();
      else if (key == "test_fraction") cfg.test_fraction = value.get<double>();
      else if (key == "width1") cfg.width1 = value.get<std::size_t>();
      else if (key == "width2") cfg.width2 = value.get<std::size_t>();
      else throw InvalidInput("eval config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("eval config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

double scheduled_lr(const EvalConfig& cfg, std::size_t epoch, std::size_t epochs) {
  double lr = cfg.lr;
  if (2 * epoch >= epochs) lr *= 0.5;
  if (4 * epoch >= 3 * epochs) lr *= 0.5;
  return lr;
}

namespace {

std::vector<ad::Var> vars_of(const std::vector<nn::NamedParam>& params) {
  std::vector<ad::Var> out;
  for (const auto& p : params) out.push_back(p.var);
  return out;
}

// Rows [idx...] of a [N, ...] tensor as a constant batch.
ad::Var gather_rows(const ad::Var& x, std::span<const std::size_t> idx) {
  const std::size_t per = x.numel() / x.dim(0);
  std::vector<double> values(idx.size() * per);
  const auto src = x.values();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(idx[i] * per), per,
                values.begin() + static_cast<std::ptrdiff_t>(i * per));
  }
  ad::Shape shape = x.shape();
  shape[0] = idx.size();
  return ad::Var::constant(std::move(shape), std::move(values));
}

std::size_t argmax_row(std::span<const double> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

// Shared minibatch SGD loop over a fixed dataset of inputs and labels.
template <typename Forward>
double sgd_train(const std::vector<nn::NamedParam>& params, const ad::Var& inputs, std::span<const int> labels,
                 std::size_t epochs, std::uint64_t seed, const EvalConfig& cfg, Forward&& forward) {
  ad::SgdMomentum opt(vars_of(params), cfg.lr, cfg.momentum, cfg.weight_decay);
  const std::size_t n = labels.size();
  std::vector<std::size_t> order(n);
  double last_loss = 0.0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    opt.set_lr(scheduled_lr(cfg, epoch, epochs));
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch) {
      const std::size_t len = std::min(cfg.batch, n - start);
      std::span<const std::size_t> idx(order.data() + start, len);
      std::vector<int> y(len);
      for (std::size_t i = 0; i < len; ++i) y[i] = labels[idx[i]];
      const auto loss = ad::softmax_cross_entropy(forward(gather_rows(inputs, idx)), y);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw TrainingAborted("sgd: non-finite loss in epoch " + std::to_string(epoch));
      }
      ad::backward(loss);
      opt.step();
      epoch_loss += value;
      ++batches;
    }
    last_loss = batches ? epoch_loss / static_cast<double>(batches) : 0.0;
  }
  return last_loss;
}

template <typename Forward>
double accuracy(const ad::Var& inputs, std::span<const int> labels, std::size_t batch, Forward&& forward) {
  ad::NoGradGuard no_grad;
  const std::size_t n = labels.size();
  if (n == 0) return 0.0;
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t len = std::min(batch, n - start);
    idx.resize(len);
    std::iota(idx.begin(), idx.end(), start);
    const auto logits = forward(gather_rows(inputs, idx));
    const std::size_t k = logits.dim(1);
    for (std::size_t i = 0; i < len; ++i) {
      const auto row = logits.values().subspan(i * k, k);
      if (static_cast<int>(argmax_row(row)) == labels[start + i]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

}  // namespace

ChannelStats channel_stats(const data::LabeledImageSet& data, std::span<const std::size_t> indices) {
  if (indices.empty()) throw InvalidInput("channel_stats: no images selected");
  const std::size_t c = data.channels, plane = data.height * data.width;
  ChannelStats s{std::vector<double>(c, 0.0), std::vector<double>(c, 0.0)};
  const double n = static_cast<double>(indices.size() * plane);
  for (auto i : indices) {
    const auto img = data.image(i);
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t k = 0; k < plane; ++k) s.mean[ch] += img[ch * plane + k];
    }
  }
  for (double& m : s.mean) m /= n;
  for (auto i : indices) {
    const auto img = data.image(i);
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t k = 0; k < plane; ++k) {
        const double d = img[ch * plane + k] - s.mean[ch];
        s.stddev[ch] += d * d;
      }
    }
  }
  for (double& v : s.stddev) {
    v = std::sqrt(v / n);
    if (v < 1e-12) v = 1.0;
  }
  return s;
}

ad::Var standardize(const ad::Var& images, const ChannelStats& stats) {
  if (images.rank() != 4 || images.dim(1) != stats.mean.size()) {
    throw ShapeError("standardize: expected [B, " + std::to_string(stats.mean.size()) + ", H, W], got " +
                     ad::to_string(images.shape()));
  }
  const std::size_t c = images.dim(1), plane = images.dim(2) * images.dim(3);
  std::vector<double> out(images.values().begin(), images.values().end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t ch = (i / plane) % c;
    out[i] = (out[i] - stats.mean[ch]) / stats.stddev[ch];
  }
  return ad::Var::constant(images.shape(), std::move(out));
}

data::LabeledImageSet standardize(const data::LabeledImageSet& data, const ChannelStats& stats) {
  auto out = data;
  const std::size_t c = data.channels, plane = data.height * data.width;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const std::size_t ch = (i / plane) % c;
    out.pixels[i] = (out.pixels[i] - stats.mean[ch]) / stats.stddev[ch];
  }
  return out;
}

PretextResult train_pretext(nn::PretextEncoder& encoder, const PretextBatch& task, std::size_t epochs,
                            std::uint64_t seed, const EvalConfig& cfg) {
  cfg.validate();
  if (task.labels.empty()) throw InvalidInput("train_pretext: empty task");
  auto forward = [&](const ad::Var& x) { return encoder.logits(x); };
  PretextResult r;
  r.final_loss = sgd_train(encoder.parameters(), task.images, task.labels, epochs, derive_seed(seed, 101), cfg,
                           forward);
  r.task_accuracy = accuracy(task.images, task.labels, std::max<std::size_t>(cfg.batch, 256), forward);
  return r;
}

double linear_probe_features(std::span<const double> train_features, std::span<const int> train_labels,
                             std::span<const double> test_features, std::span<const int> test_labels,
                             std::size_t dim, std::size_t classes, std::size_t epochs, std::uint64_t seed,
                             const EvalConfig& cfg) {
  cfg.validate();
  const std::size_t n_train = train_labels.size(), n_test = test_labels.size();
  if (n_train == 0 || n_test == 0) throw InvalidInput("linear_probe: empty train or test split");
  if (train_features.size() != n_train * dim || test_features.size() != n_test * dim) {
    throw ShapeError("linear_probe: feature arrays do not match the label counts");
  }
  std::vector<double> mu(dim, 0.0), sd(dim, 0.0);
  for (std::size_t i = 0; i < n_train; ++i) {
    for (std::size_t d = 0; d < dim; ++d) mu[d] += train_features[i * dim + d];
  }
  for (double& m : mu) m /= static_cast<double>(n_train);
  for (std::size_t i = 0; i < n_train; ++i) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double c = train_features[i * dim + d] - mu[d];
      sd[d] += c * c;
    }
  }
  for (double& s : sd) {
    s = std::sqrt(s / static_cast<double>(n_train));
    if (s < 1e-12) s = 1.0;
  }
  auto standardize = [&](std::span<const double> f, std::size_t n) {
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) out[i * dim + d] = (f[i * dim + d] - mu[d]) / sd[d];
    }
    return ad::Var::constant({n, dim}, std::move(out));
  };
  const auto x_train = standardize(train_features, n_train);
  const auto x_test = standardize(test_features, n_test);

  nn::Linear probe(dim, classes);
  std::vector<nn::NamedParam> params;
  probe.collect("probe", params);
  nn::init_fan_in_uniform(params, derive_seed(seed, 202));
  auto forward = [&](const ad::Var& x) { return probe.forward(x); };
  sgd_train(params, x_train, train_labels, epochs, derive_seed(seed, 203), cfg, forward);
  return accuracy(x_test, test_labels, 1024, forward);
}

std::vector<double> encode_features(const nn::PretextEncoder& encoder, const data::LabeledImageSet& data,
                                    std::span<const std::size_t> indices, std::size_t crop, std::size_t batch) {
  ad::NoGradGuard no_grad;
  std::vector<double> out;
  out.reserve(indices.size() * encoder.feature_dim());
  for (std::size_t start = 0; start < indices.size(); start += batch) {
    const std::size_t len = std::min(batch, indices.size() - start);
    const auto images = tf::center_crop(data.batch(indices.subspan(start, len)), crop, crop);
    const auto features = encoder.features(images);
    const auto f = features.values();
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

double linear_probe(const nn::PretextEncoder& encoder, const data::LabeledImageSet& data,
                    std::span<const std::size_t> train, std::span<const std::size_t> test, std::size_t crop,
                    std::size_t epochs, std::uint64_t seed, const EvalConfig& cfg) {
  const auto before = nn::snapshot(encoder.encoder_parameters());
  const auto train_f = encode_features(encoder, data, train, crop, 256);
  const auto test_f = encode_features(encoder, data, test, crop, 256);
  std::vector<int> train_y, test_y;
  for (auto i : train) train_y.push_back(data.labels[i]);
  for (auto i : test) test_y.push_back(data.labels[i]);
  const double acc = linear_probe_features(train_f, train_y, test_f, test_y, encoder.feature_dim(), data.num_classes,
                                           epochs, seed, cfg);
  const auto after = nn::snapshot(encoder.encoder_parameters());
  for (std::size_t p = 0; p < before.size(); ++p) {
    if (before[p].values != after[p].values) {
      throw Error("linear_probe: encoder parameter '" + before[p].name + "' changed during probe training");
    }
  }
  return acc;
}

ProbeResult evaluate_policy(const dist::PolicySpec& policy, const data::LabeledImageSet& data, std::uint64_t seed,
                            const EvalConfig& cfg) {
  cfg.validate();
  data.validate();
  const auto [train, test] = data::split_train_test(data, cfg.test_fraction, seed);
  const auto stats = channel_stats(data, train);
  auto task = build_pretext_task(policy, data, train);
  task.images = standardize(task.images, stats);
  nn::PretextEncoder encoder(data.channels, policy.size(), cfg.width1, cfg.width2);
  encoder.init_weights(derive_seed(seed, 7));
  const auto pre = train_pretext(encoder, task, cfg.pretext_epochs, seed, cfg);
  ProbeResult r;
  r.policy_id = policy.id();
  r.task = policy.task;
  r.instances = r.policy_id.substr(r.policy_id.find(':') + 1);
  r.seed = seed;
  r.pretext_acc = pre.task_accuracy;
  r.probe_acc = linear_probe(encoder, standardize(data, stats), train, test, task.crop, cfg.probe_epochs, seed, cfg);
  return r;
}

std::string results_csv_header() { return "policy_id,kind,instances,seed,pretext_acc,probe_acc\n"; }

std::string results_csv_row(const ProbeResult& r) {
  return r.policy_id + ',' + r.task + ',' + r.instances + ',' + std::to_string(r.seed) + ',' +
         io::format_double(r.pretext_acc) + ',' + io::format_double(r.probe_acc) + '\n';
}

}  // namespace xform::pretext
