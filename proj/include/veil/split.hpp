#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace veil {

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> dev;
  std::vector<std::size_t> test;
};

// k contiguous slices of a seeded permutation. Fold f tests on slice f,
// selects on slice (f+1) mod k and trains on the rest, so k=10 gives 8:1:1.
// k=2 is the exception: each fold trains on the other slice, with no dev.
struct SplitPlan {
  std::size_t k = 0;
  std::vector<std::size_t> slice_of;  // item -> slice index
  std::vector<Fold> folds;
};

SplitPlan kfold_split(std::size_t n_items, std::size_t k = 10,
                      std::uint64_t seed = 0);

}  // namespace veil
