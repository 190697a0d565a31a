#include "veil/split.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "veil/errors.hpp"
#include "veil/rng.hpp"

namespace veil {

SplitPlan kfold_split(std::size_t n_items, std::size_t k, std::uint64_t seed) {
  if (k < 2) {
    throw ConfigError("k-fold split needs k >= 2, got " + std::to_string(k));
  }
  if (n_items < k) {
    throw ConfigError("cannot split " + std::to_string(n_items) + " items into " +
                      std::to_string(k) + " folds");
  }
  std::vector<std::size_t> order(n_items);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  SplitPlan plan;
  plan.k = k;
  plan.slice_of.assign(n_items, 0);
  std::vector<std::vector<std::size_t>> slices(k);
  const std::size_t base = n_items / k, extra = n_items % k;
  std::size_t cursor = 0;
  for (std::size_t s = 0; s < k; ++s) {
    const std::size_t len = base + (s < extra ? 1 : 0);
    slices[s].assign(order.begin() + cursor, order.begin() + cursor + len);
    std::sort(slices[s].begin(), slices[s].end());
    for (std::size_t item : slices[s]) {
      plan.slice_of[item] = s;
    }
    cursor += len;
  }
  // With two slices a dev slice would leave nothing to train on, so k=2
  // folds train on the other slice and have no dev set.
  const bool with_dev = k > 2;
  for (std::size_t f = 0; f < k; ++f) {
    Fold fold;
    fold.test = slices[f];
    const std::size_t dev_slice = (f + 1) % k;
    if (with_dev) {
      fold.dev = slices[dev_slice];
    }
    for (std::size_t i = 0; i < n_items; ++i) {
      const std::size_t s = plan.slice_of[i];
      if (s != f && (!with_dev || s != dev_slice)) {
        fold.train.push_back(i);
      }
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

}  // namespace veil
