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

#ifndef EARBENCH_FEATURE_VECTOR_HPP
#define EARBENCH_FEATURE_VECTOR_HPP

#include <cmath>
#include <string>
#include <vector>

namespace earbench {

// Descriptor output for one image. Values are float32, which is also the
// on-disk precision, so a feature file round-trips bit-exactly.
struct FeatureVector {
    std::string descriptor_id;
    std::string image_id;
    std::vector<float> values;

    std::size_t dim() const noexcept { return values.size(); }

    bool finite() const {
        for (float v : values)
            if (!std::isfinite(v))
                return false;
        return true;
    }

    bool operator==(const FeatureVector&) const = default;
};

} // namespace earbench

#endif
