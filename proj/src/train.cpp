#include "hbfp/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "hbfp/rng.hpp"

namespace hbfp {

namespace {

void fisher_yates(std::vector<int64_t>& idx, SplitMix64& g) {
  for (size_t i = idx.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(g.below(i));
    std::swap(idx[i - 1], idx[j]);
  }
}

void check_finite_grad(const Param& p) {
  for (const double g : p.grad.values())
    if (!std::isfinite(g)) throw std::runtime_error("non-finite gradient in " + p.name);
}

int64_t argmax_row(std::span<const double> row) {
  int64_t best = 0;
  for (size_t j = 1; j < row.size(); ++j)
    if (row[j] > row[static_cast<size_t>(best)]) best = static_cast<int64_t>(j);
  return best;
}

}  // namespace

double evaluate_accuracy(Model& model, const Dataset& data, std::span<const int64_t> indices,
                         int64_t batch) {
  if (indices.empty()) return 0.0;
  const QuantContext q{RoundingMode::nearest_even(), 0};
  int64_t correct = 0;
  for (size_t start = 0; start < indices.size(); start += static_cast<size_t>(batch)) {
    const size_t len = std::min(static_cast<size_t>(batch), indices.size() - start);
    const auto chunk = indices.subspan(start, len);
    const FpTensor logits = model.forward(data.gather(chunk), q, false);
    const std::vector<int> labels = data.gather_labels(chunk);
    for (int64_t b = 0; b < logits.dim(0); ++b)
      if (argmax_row(logits.row(b)) == labels[static_cast<size_t>(b)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(indices.size());
}

std::vector<EpochMetrics> train_model(Model& model, const Dataset& data, const TrainConfig& cfg) {
  if (cfg.epochs < 0) throw std::invalid_argument("train_model: negative epoch count");
  if (cfg.batch < 1) throw std::invalid_argument("train_model: batch size must be positive");
  if (data.train_indices.empty()) throw std::invalid_argument("train_model: empty training split");

  const RoundingMode base =
      cfg.stochastic ? RoundingMode::stochastic(cfg.seed) : RoundingMode::nearest_even();
  OptimizerState opt;
  opt.lr = cfg.lr;
  opt.momentum = cfg.momentum;
  opt.weight_decay = cfg.weight_decay;
  const std::vector<Param*> params = model.params();

  std::vector<EpochMetrics> metrics;
  uint64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<int64_t> perm = data.train_indices;
    SplitMix64 shuffle_rng(derive_seed(cfg.seed, static_cast<uint64_t>(epoch), kShuffleSite));
    fisher_yates(perm, shuffle_rng);

    double loss_sum = 0.0;
    int64_t seen = 0;
    for (size_t start = 0; start < perm.size(); start += static_cast<size_t>(cfg.batch)) {
      const size_t len = std::min(static_cast<size_t>(cfg.batch), perm.size() - start);
      const auto chunk = std::span<const int64_t>(perm).subspan(start, len);
      const FpTensor xb = data.gather(chunk);
      const std::vector<int> yb = data.gather_labels(chunk);

      const QuantContext q{base, step};
      model.zero_grads();
      const FpTensor logits = model.forward(xb, q, true);
      FpTensor dlogits;
      const double loss = softmax_xent(logits, yb, &dlogits);
      model.backward(dlogits, q);

      for (Param* p : params) {
        if (p->quantized) {
          shell_update(p->dual, p->grad, opt, p->name,
                       q.site(static_cast<uint64_t>(p->site_id), kMasterSite),
                       q.site(static_cast<uint64_t>(p->site_id), kComputeSite));
        } else {
          check_finite_grad(*p);
          sgd_momentum_step(p->value.values(), p->grad.values(),
                            opt.velocity_for(p->name, p->grad.shape()).values(), opt.lr,
                            opt.momentum, opt.weight_decay);
        }
      }
      loss_sum += loss * static_cast<double>(len);
      seen += static_cast<int64_t>(len);
      ++step;
    }

    const double val = evaluate_accuracy(model, data, data.val_indices, cfg.batch);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    metrics.push_back({epoch + 1, loss_sum / static_cast<double>(seen), val, secs});
  }
  return metrics;
}

}  // namespace hbfp
