#include "ostk/training.hpp"

#include <numeric>

#include "ostk/error.hpp"

namespace ostk {

void TrainConfig::validate() const {
  if (epochs <= 0 || !(step_size > 0.0) || batch <= 0) {
    throw Error(ErrorKind::validation, "training needs positive epochs, step_size and batch");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0)) {
    throw Error(ErrorKind::validation, "invalid Adam hyperparameters");
  }
  if (early_stop_patience <= 0) throw Error(ErrorKind::validation, "early_stop_patience must be positive");
}

LossHistory fit_network(Mlp& net, std::size_t train_count, const BatchLoss& train_loss,
                        const std::function<double()>& validation_loss, const TrainConfig& cfg,
                        std::string_view stream, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_count == 0) throw Error(ErrorKind::empty, "no training samples");
  Adam adam(net, {cfg.step_size, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps});
  CounterRng shuffle(derive_key(cfg.seed, stream));

  LossHistory hist;
  hist.validation.push_back(validation_loss());
  hist.best_validation = hist.validation.back();
  Mlp best = net;
  int since_best = 0;

  std::vector<std::size_t> order(train_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  MlpGradient grad = net.zero_gradient();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
    double sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch));
      grad.set_zero();
      sum += train_loss(std::span<const std::size_t>(order.data() + b, e - b), &grad);
      ++batches;
      adam.step(net, grad);
    }
    hist.train.push_back(sum / static_cast<double>(batches));
    hist.validation.push_back(validation_loss());
    if (on_epoch) on_epoch(epoch, hist.train.back(), hist.validation.back());
    if (hist.validation.back() < hist.best_validation) {
      hist.best_validation = hist.validation.back();
      hist.best_epoch = epoch;
      best = net;
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      break;
    }
  }
  net = std::move(best);
  return hist;
}

}  // namespace ostk
