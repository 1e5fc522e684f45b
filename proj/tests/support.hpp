/*
Copyright 2026 The earbench Authors
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
you may obtain a copy of the License at

                http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#ifndef EARBENCH_TEST_SUPPORT_HPP
#define EARBENCH_TEST_SUPPORT_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "earbench/image.hpp"
#include "earbench/matrix.hpp"
#include "earbench/rng.hpp"

namespace earbench::fixtures {

inline GrayImage random_image(Rng& rng, int w, int h) {
    GrayImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            img(x, y) = static_cast<std::uint8_t>(rng.below(256));
    return img;
}

inline Matrix<double> random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0, double hi = 1.0) {
    Matrix<double> m(rows, cols);
    for (double& v : m.data())
        v = rng.uniform(lo, hi);
    return m;
}

inline std::vector<float> random_vector(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<float> v(n);
    for (float& x : v)
        x = static_cast<float>(rng.uniform(lo, hi));
    return v;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("earbench_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace earbench::fixtures

#endif
