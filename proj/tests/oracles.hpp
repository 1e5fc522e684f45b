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

#ifndef EARBENCH_TEST_ORACLES_HPP
#define EARBENCH_TEST_ORACLES_HPP

// Naive reference implementations shared by the unit and acceptance tests.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "earbench/image.hpp"
#include "earbench/matching.hpp"
#include "earbench/protocol.hpp"
#include "earbench/rng.hpp"

namespace earbench::oracle {

// A random probe/gallery matrix with its manifest. Scores come from a small
// integer set so ties are frequent.
struct Scenario {
    DatasetManifest manifest;
    SimilarityMatrix matrix;
};

inline Scenario random_scenario(Rng& rng, std::size_t max_probes = 20, std::size_t max_gallery = 50,
                                std::size_t max_identities = 10) {
    const std::size_t identities = 1 + rng.below(max_identities);
    const std::size_t gallery = 1 + rng.below(max_gallery);
    std::vector<ImageRecord> records;
    std::vector<std::string> gallery_ids;
    for (std::size_t j = 0; j < gallery; ++j) {
        ImageRecord r;
        r.image_id = "img" + std::to_string(j);
        r.subject_id = "id" + std::to_string(rng.below(identities));
        gallery_ids.push_back(r.image_id);
        records.push_back(std::move(r));
    }
    // Probes: mostly gallery members, occasionally outside images.
    std::vector<std::string> probe_ids;
    const std::size_t probes = 1 + rng.below(max_probes);
    std::vector<std::size_t> order(gallery);
    for (std::size_t j = 0; j < gallery; ++j)
        order[j] = j;
    for (std::size_t i = gallery; i > 1; --i)
        std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t i = 0; i < probes; ++i) {
        if (i < gallery && rng.below(5) != 0) {
            probe_ids.push_back(gallery_ids[order[i]]);
        } else {
            ImageRecord r;
            r.image_id = "extra" + std::to_string(i);
            r.subject_id = "id" + std::to_string(rng.below(identities + 1)); // may be absent from the gallery
            probe_ids.push_back(r.image_id);
            records.push_back(std::move(r));
        }
    }
    const int levels = 1 + static_cast<int>(rng.below(8));
    std::vector<float> scores(probe_ids.size() * gallery);
    for (float& s : scores)
        s = static_cast<float>(rng.between(-levels, levels));
    return {DatasetManifest("random", std::move(records)),
            SimilarityMatrix(std::move(probe_ids), std::move(gallery_ids), std::move(scores))};
}

// Sort-and-scan: collect (score, identity) per identity maximum, sort, find
// the true identity's position.
inline std::optional<std::size_t> identity_rank(const SimilarityMatrix& m, const DatasetManifest& mf, std::size_t row) {
    const std::string& probe = m.probe_ids()[row];
    std::map<std::string, float> best;
    for (std::size_t j = 0; j < m.cols(); ++j) {
        if (m.gallery_ids()[j] == probe)
            continue;
        const std::string& s = mf.at(m.gallery_ids()[j]).subject_id;
        auto [it, fresh] = best.emplace(s, m(row, j));
        if (!fresh)
            it->second = std::max(it->second, m(row, j));
    }
    std::vector<std::pair<float, std::string>> list;
    for (const auto& [s, v] : best)
        list.emplace_back(v, s);
    std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    const std::string& truth = mf.at(probe).subject_id;
    for (std::size_t k = 0; k < list.size(); ++k)
        if (list[k].second == truth)
            return k + 1;
    return std::nullopt;
}

inline std::size_t gallery_identity_count(const SimilarityMatrix& m, const DatasetManifest& mf) {
    std::set<std::string> s;
    for (const auto& g : m.gallery_ids())
        s.insert(mf.at(g).subject_id);
    return s.size();
}

// hits[r-1] by direct counting; nullopt when no probe is evaluable.
inline std::optional<std::vector<double>> cmc(const SimilarityMatrix& m, const DatasetManifest& mf) {
    std::vector<std::size_t> ranks;
    for (std::size_t i = 0; i < m.rows(); ++i)
        if (auto r = identity_rank(m, mf, i))
            ranks.push_back(*r);
    if (ranks.empty())
        return std::nullopt;
    const std::size_t n = gallery_identity_count(m, mf);
    std::vector<double> hits(n);
    for (std::size_t r = 1; r <= n; ++r) {
        std::size_t c = 0;
        for (std::size_t k : ranks)
            c += k <= r;
        hits[r - 1] = static_cast<double>(c) / static_cast<double>(ranks.size());
    }
    return hits;
}

// Classic 3x3 LBP histogram over interior pixels, bit k set iff neighbour k
// (counter-clockwise from east) >= centre. Normalised by pixel count.
inline std::vector<double> crisp_lbp256(const GrayImage& img) {
    const int ox[8] = {1, 1, 0, -1, -1, -1, 0, 1};
    const int oy[8] = {0, -1, -1, -1, 0, 1, 1, 1};
    std::vector<double> h(256, 0.0);
    double n = 0;
    for (int y = 1; y + 1 < img.height(); ++y)
        for (int x = 1; x + 1 < img.width(); ++x) {
            int code = 0;
            for (int k = 0; k < 8; ++k)
                if (img(x + ox[k], y + oy[k]) >= img(x, y))
                    code |= 1 << k;
            h[static_cast<std::size_t>(code)] += 1;
            n += 1;
        }
    for (double& v : h)
        v /= n;
    return h;
}

// Image whose 8-neighbour differences are never zero: a checkerboard of
// distinct-valued classes.
inline GrayImage tie_free_image(Rng& rng, int w, int h) {
    GrayImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            // Classes (x mod 3, y mod 3) occupy disjoint value bands so any
            // two 8-neighbours fall in different bands.
            const int cls = (x % 3) * 3 + (y % 3);
            img(x, y) = static_cast<std::uint8_t>(cls * 28 + static_cast<int>(rng.below(27)));
        }
    return img;
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v)
        s += x;
    return s / static_cast<double>(v.size());
}

} // namespace earbench::oracle

#endif
