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

#ifndef EARBENCH_SYNTH_HPP
#define EARBENCH_SYNTH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "error.hpp"
#include "image.hpp"
#include "protocol.hpp"
#include "rng.hpp"

namespace earbench {

// Deterministic synthetic identification dataset.
//
// Subject s has a base texture: 128 plus three sinusoidal gratings (random
// amplitude 12..30, frequency 0.05..0.3 cycles/pixel, orientation, phase)
// plus a bilinearly interpolated 7x9 grid of N(0, 18) offsets. Image k of
// subject s samples the base at an integer shift in [-2, 2]^2, adds a
// brightness offset in [-15, 15] and N(0, 6) pixel noise, then rounds and
// clamps. Occlusion ("none" 60%, "partial" 25%, "heavy" 15%) pastes a flat
// rectangle over 15% / 40% of the image. Each subject carries a gender
// label M or F. Every record is in the test split.
struct SynthParams {
    int subjects = 20;
    int images_per = 5;
    std::uint64_t seed = 1;
    int width = 96;
    int height = 128;

    void validate() const {
        if (subjects < 1)
            throw DataError("synthetic dataset needs at least one subject");
        if (images_per < 1)
            throw DataError("synthetic dataset needs at least one image per subject");
        if (subjects > 100000 || images_per > 1000)
            throw DataError("synthetic dataset size out of range");
        if (width < 8 || height < 8)
            throw DataError("synthetic images must be at least 8x8");
    }
};

struct SyntheticDataset {
    DatasetManifest manifest; // paths are images/<image_id>.png
    std::vector<GrayImage> images; // parallel to manifest.records()
};

namespace detail {

struct Grating {
    double amplitude, frequency, cos_t, sin_t, phase;
};

class BaseTexture {
public:
    BaseTexture(Rng& rng, int width, int height) : width_(width), height_(height) {
        for (auto& g : gratings_) {
            const double theta = rng.uniform(0.0, std::numbers::pi);
            g = {rng.uniform(12.0, 30.0), rng.uniform(0.05, 0.3), std::cos(theta), std::sin(theta),
                 rng.uniform(0.0, 2.0 * std::numbers::pi)};
        }
        for (double& v : grid_)
            v = rng.normal(0.0, 18.0);
    }

    double operator()(double x, double y) const {
        double v = 128.0;
        for (const auto& g : gratings_)
            v += g.amplitude * std::sin(2.0 * std::numbers::pi * g.frequency * (x * g.cos_t + y * g.sin_t) + g.phase);
        // Grid nodes span [-4, size + 4] so shifted samples stay inside.
        const double gx = std::clamp((x + 4.0) / (width_ + 8.0) * (grid_w - 1), 0.0, grid_w - 1.0);
        const double gy = std::clamp((y + 4.0) / (height_ + 8.0) * (grid_h - 1), 0.0, grid_h - 1.0);
        const int x0 = std::min(static_cast<int>(gx), grid_w - 2);
        const int y0 = std::min(static_cast<int>(gy), grid_h - 2);
        const double fx = gx - x0, fy = gy - y0;
        auto at = [&](int i, int j) { return grid_[static_cast<std::size_t>(j * grid_w + i)]; };
        const double top = at(x0, y0) + fx * (at(x0 + 1, y0) - at(x0, y0));
        const double bottom = at(x0, y0 + 1) + fx * (at(x0 + 1, y0 + 1) - at(x0, y0 + 1));
        return v + top + fy * (bottom - top);
    }

private:
    static constexpr int grid_w = 7;
    static constexpr int grid_h = 9;
    int width_, height_;
    std::array<Grating, 3> gratings_{};
    std::array<double, grid_w * grid_h> grid_{};
};

inline std::string synth_id(const char* fmt, int a, int b = 0) {
    char buf[32];
    std::snprintf(buf, sizeof buf, fmt, a, b);
    return buf;
}

} // namespace detail

inline SyntheticDataset make_synthetic(const SynthParams& p) {
    p.validate();
    const int sw = p.subjects > 1000 ? 5 : 3;
    const int iw = p.images_per > 100 ? 3 : 2;
    const std::string subject_fmt = "S%0" + std::to_string(sw) + "d";
    const std::string image_fmt = "s%0" + std::to_string(sw) + "d_%0" + std::to_string(iw) + "d";

    Rng master(p.seed);
    std::vector<ImageRecord> records;
    std::vector<GrayImage> images;
    records.reserve(static_cast<std::size_t>(p.subjects) * p.images_per);
    images.reserve(records.capacity());
    for (int s = 0; s < p.subjects; ++s) {
        Rng rng(master.next());
        const detail::BaseTexture base(rng, p.width, p.height);
        const std::string subject = detail::synth_id(subject_fmt.c_str(), s);
        const std::string gender = rng.below(2) ? "F" : "M";
        for (int k = 0; k < p.images_per; ++k) {
            const auto dx = static_cast<double>(rng.between(-2, 2));
            const auto dy = static_cast<double>(rng.between(-2, 2));
            const double brightness = rng.uniform(-15.0, 15.0);
            GrayImage img(p.width, p.height);
            for (int y = 0; y < p.height; ++y)
                for (int x = 0; x < p.width; ++x)
                    img(x, y) = saturate_u8(base(x + dx, y + dy) + brightness + rng.normal(0.0, 6.0));

            const double u = rng.uniform();
            const char* occlusion = u < 0.60 ? "none" : u < 0.85 ? "partial" : "heavy";
            if (u >= 0.60) {
                const double area = u < 0.85 ? 0.15 : 0.40;
                const int ow = static_cast<int>(std::lround(p.width * std::sqrt(area)));
                const int oh = static_cast<int>(std::lround(p.height * std::sqrt(area)));
                const int ox = static_cast<int>(rng.between(0, p.width - ow));
                const int oy = static_cast<int>(rng.between(0, p.height - oh));
                const auto fill = static_cast<std::uint8_t>(rng.between(0, 255));
                for (int y = oy; y < oy + oh; ++y)
                    for (int x = ox; x < ox + ow; ++x)
                        img(x, y) = fill;
            }

            ImageRecord r;
            r.image_id = detail::synth_id(image_fmt.c_str(), s, k);
            r.path = "images/" + r.image_id + ".png";
            r.subject_id = subject;
            r.split = Split::test;
            r.width = p.width;
            r.height = p.height;
            r.annotations = {{"gender", gender}, {"occlusion", occlusion}};
            records.push_back(std::move(r));
            images.push_back(std::move(img));
        }
    }
    return {DatasetManifest("synthetic", std::move(records)), std::move(images)};
}

} // namespace earbench

#endif
