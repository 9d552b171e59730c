#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "diffsub/data.hpp"
#include "diffsub/random.hpp"

namespace testing {

// Uniform features on [0, 1), alternating attribute, continuous target
// y = x0 + noise.
inline diffsub::Dataset random_dataset(std::size_t n, std::size_t d, std::uint64_t seed,
                                       diffsub::Scaling scaling = diffsub::Scaling::None) {
  diffsub::Rng rng(seed);
  diffsub::DatasetInput in;
  in.features.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    in.features[j].name = "x" + std::to_string(j);
    in.features[j].values.resize(n);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) in.features[j].values[i] = rng.uniform();
    in.attribute.push_back(static_cast<int>(i % 2));
    in.target.push_back(in.features[0].values[i] + 0.3 * rng.normal() + 0.5 * (i % 2));
  }
  in.scaling = scaling;
  return diffsub::Dataset::build(std::move(in));
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("diffsub_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
