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

#ifndef EARBENCH_PRESETS_HPP
#define EARBENCH_PRESETS_HPP

#include <array>
#include <string>
#include <string_view>

#include "descriptors.hpp"
#include "error.hpp"
#include "image.hpp"
#include "matching.hpp"

namespace earbench {

// Descriptor plus its default scoring measure. Inputs are resized to the
// working size first, except for BIOR, which resizes each block itself.
struct PipelinePreset {
    std::string_view name;
    Measure measure;
    int work_width = 96;
    int work_height = 128;

    LbpParams lbp{};
    HogParams hog{};
    PhogParams phog{};
    IflbpParams iflbp{};
    BiorParams bior{};

    FeatureVector extract(const GrayImage& img, std::string image_id) const {
        if (name == "bior")
            return extract_bior_energy(img, bior, std::move(image_id));
        const GrayImage work = resize_bilinear(img, work_width, work_height);
        if (name == "lbp-base")
            return extract_ulbp(work, lbp, std::move(image_id));
        if (name == "hog")
            return extract_hog(work, hog, std::move(image_id));
        if (name == "phog")
            return extract_phog(work, phog, std::move(image_id));
        return extract_iflbp(work, iflbp, std::move(image_id));
    }
};

inline constexpr std::array<std::string_view, 5> preset_names{"lbp-base", "phog", "iflbp", "bior", "hog"};

inline PipelinePreset make_preset(std::string_view name) {
    for (std::string_view known : preset_names) {
        if (known != name)
            continue;
        if (known == "bior")
            return {known, Measure::canberra};
        if (known == "hog")
            return {known, Measure::chi2};
        return {known, Measure::cosine};
    }
    throw DataError("unknown preset '" + std::string(name) + "' (expected lbp-base, phog, iflbp, bior or hog)");
}

} // namespace earbench

#endif
