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

#ifndef EARBENCH_MATCHING_HPP
#define EARBENCH_MATCHING_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "error.hpp"
#include "feature_vector.hpp"
#include "parallel.hpp"

namespace earbench {

// ---------------------------------------------------------------------------
// Similarity matrix
// ---------------------------------------------------------------------------

// Probe x gallery score table, higher = more similar. Shape and id
// uniqueness are enforced here; finiteness is checked by validate_matrix and
// by every reader and writer.
class SimilarityMatrix {
public:
    SimilarityMatrix() = default;

    SimilarityMatrix(std::vector<std::string> probe_ids, std::vector<std::string> gallery_ids,
                     std::vector<float> scores)
        : probe_ids_(std::move(probe_ids)), gallery_ids_(std::move(gallery_ids)), scores_(std::move(scores)) {
        if (scores_.size() != probe_ids_.size() * gallery_ids_.size())
            throw DataError("similarity matrix has " + std::to_string(scores_.size()) + " scores for " +
                            std::to_string(probe_ids_.size()) + "x" + std::to_string(gallery_ids_.size()) +
                            " ids");
        check_unique(probe_ids_, "probe");
        check_unique(gallery_ids_, "gallery");
    }

    std::size_t rows() const noexcept { return probe_ids_.size(); }
    std::size_t cols() const noexcept { return gallery_ids_.size(); }

    const std::vector<std::string>& probe_ids() const noexcept { return probe_ids_; }
    const std::vector<std::string>& gallery_ids() const noexcept { return gallery_ids_; }
    std::span<const float> scores() const noexcept { return scores_; }

    float operator()(std::size_t probe, std::size_t gallery) const { return scores_[probe * cols() + gallery]; }
    std::span<const float> row(std::size_t probe) const { return {scores_.data() + probe * cols(), cols()}; }

    std::optional<std::size_t> probe_index(std::string_view id) const { return find(probe_ids_, id); }
    std::optional<std::size_t> gallery_index(std::string_view id) const { return find(gallery_ids_, id); }

    bool all_finite() const {
        return std::all_of(scores_.begin(), scores_.end(), [](float s) { return std::isfinite(s); });
    }

    bool operator==(const SimilarityMatrix&) const = default;

private:
    static void check_unique(const std::vector<std::string>& ids, const char* what) {
        std::unordered_set<std::string_view> seen;
        for (const auto& id : ids)
            if (!seen.insert(id).second)
                throw DataError(std::string("duplicate ") + what + " id '" + id + "'");
    }

    static std::optional<std::size_t> find(const std::vector<std::string>& ids, std::string_view id) {
        auto it = std::find(ids.begin(), ids.end(), id);
        if (it == ids.end())
            return std::nullopt;
        return static_cast<std::size_t>(it - ids.begin());
    }

    std::vector<std::string> probe_ids_;
    std::vector<std::string> gallery_ids_;
    std::vector<float> scores_;
};

// ---------------------------------------------------------------------------
// Measures
// ---------------------------------------------------------------------------

enum class Measure { cosine, chi2, euclidean, canberra };

inline std::string_view to_string(Measure m) {
    switch (m) {
    case Measure::cosine: return "cosine";
    case Measure::chi2: return "chi2";
    case Measure::euclidean: return "euclidean";
    case Measure::canberra: return "canberra";
    }
    return "?";
}

inline Measure parse_measure(std::string_view s) {
    if (s == "cosine") return Measure::cosine;
    if (s == "chi2") return Measure::chi2;
    if (s == "euclidean") return Measure::euclidean;
    if (s == "canberra") return Measure::canberra;
    throw DataError("unknown measure '" + std::string(s) + "' (expected cosine, chi2, euclidean or canberra)");
}

namespace detail {
inline void check_dims(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size())
        throw DataError("dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
}
} // namespace detail

// Cosine of the angle between a and b. A zero vector scores 0; `degenerate`
// (when given) is set so callers can count such comparisons.
inline double cosine_similarity(std::span<const float> a, std::span<const float> b, bool* degenerate = nullptr) {
    detail::check_dims(a, b);
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        if (degenerate)
            *degenerate = true;
        return 0.0;
    }
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

inline constexpr double chi2_epsilon = 1e-10;

inline double distance(Measure kind, std::span<const float> a, std::span<const float> b) {
    detail::check_dims(a, b);
    double s = 0.0;
    switch (kind) {
    case Measure::chi2:
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i] < 0.0f || b[i] < 0.0f)
                throw DataError("chi-squared distance requires non-negative entries");
            const double d = static_cast<double>(a[i]) - b[i];
            s += d * d / (static_cast<double>(a[i]) + b[i] + chi2_epsilon);
        }
        return s;
    case Measure::euclidean:
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = static_cast<double>(a[i]) - b[i];
            s += d * d;
        }
        return std::sqrt(s);
    case Measure::canberra:
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double den = std::abs(static_cast<double>(a[i])) + std::abs(static_cast<double>(b[i]));
            if (den > 0.0)
                s += std::abs(static_cast<double>(a[i]) - b[i]) / den;
        }
        return s;
    case Measure::cosine:
        break;
    }
    throw DataError("cosine is a similarity, not a distance");
}

inline double distance_to_similarity(double d) { return -d; }

// Unified similarity: cosine directly, distances negated.
inline double similarity(Measure m, std::span<const float> a, std::span<const float> b, bool* degenerate = nullptr) {
    if (m == Measure::cosine)
        return cosine_similarity(a, b, degenerate);
    return distance_to_similarity(distance(m, a, b));
}

// ---------------------------------------------------------------------------
// All-vs-all scoring
// ---------------------------------------------------------------------------

enum class FlipStrategy {
    max_score,   // max(score(probe, g), score(flipped probe, g))
    sum_features // score(probe + flipped probe, g)
};

struct ScoringOptions {
    Measure measure = Measure::cosine;
    // Keyed by probe image_id. When non-null every probe needs an entry.
    const std::unordered_map<std::string, FeatureVector>* flip_variants = nullptr;
    FlipStrategy flip_strategy = FlipStrategy::max_score;
    unsigned threads = 1;
};

struct ScoringDiagnostics {
    std::size_t degenerate_comparisons = 0; // cosine against a zero vector
};

namespace detail {

inline void check_ids_unique(const std::vector<FeatureVector>& v, const char* what) {
    std::unordered_set<std::string_view> seen;
    for (const auto& f : v)
        if (!seen.insert(f.image_id).second)
            throw DataError(std::string("duplicate ") + what + " id '" + f.image_id + "'");
}

} // namespace detail

inline SimilarityMatrix compute_similarity_matrix(const std::vector<FeatureVector>& probes,
                                                  const std::vector<FeatureVector>& gallery,
                                                  const ScoringOptions& opt = {},
                                                  ScoringDiagnostics* diagnostics = nullptr) {
    detail::check_ids_unique(probes, "probe");
    detail::check_ids_unique(gallery, "gallery");
    std::optional<std::size_t> dim;
    auto check = [&](const FeatureVector& f) {
        if (!dim)
            dim = f.dim();
        else if (*dim != f.dim())
            throw DataError("dimension mismatch: '" + f.image_id + "' has " + std::to_string(f.dim()) +
                            ", expected " + std::to_string(*dim));
    };
    for (const auto& f : probes)
        check(f);
    for (const auto& f : gallery)
        check(f);

    // Per-probe query vectors: the original plus, optionally, its flip.
    std::vector<std::vector<float>> augmented;
    std::vector<const FeatureVector*> flipped(probes.size(), nullptr);
    if (opt.flip_variants) {
        for (std::size_t i = 0; i < probes.size(); ++i) {
            auto it = opt.flip_variants->find(probes[i].image_id);
            if (it == opt.flip_variants->end())
                throw DataError("no flip variant for probe '" + probes[i].image_id + "'");
            check(it->second);
            flipped[i] = &it->second;
        }
        if (opt.flip_strategy == FlipStrategy::sum_features) {
            augmented.resize(probes.size());
            for (std::size_t i = 0; i < probes.size(); ++i) {
                augmented[i].resize(probes[i].dim());
                for (std::size_t k = 0; k < probes[i].dim(); ++k)
                    augmented[i][k] = probes[i].values[k] + flipped[i]->values[k];
            }
        }
    }

    const std::size_t rows = probes.size(), cols = gallery.size();
    std::vector<float> scores(rows * cols);
    std::vector<std::size_t> degenerate(rows, 0);
    parallel_for(rows, opt.threads, [&](std::size_t i) {
        for (std::size_t j = 0; j < cols; ++j) {
            bool deg = false;
            double s;
            if (!opt.flip_variants) {
                s = similarity(opt.measure, probes[i].values, gallery[j].values, &deg);
            } else if (opt.flip_strategy == FlipStrategy::sum_features) {
                s = similarity(opt.measure, augmented[i], gallery[j].values, &deg);
            } else {
                bool deg2 = false;
                s = std::max(similarity(opt.measure, probes[i].values, gallery[j].values, &deg),
                             similarity(opt.measure, flipped[i]->values, gallery[j].values, &deg2));
                deg = deg || deg2;
            }
            scores[i * cols + j] = static_cast<float>(s);
            degenerate[i] += deg;
        }
    });
    if (diagnostics) {
        diagnostics->degenerate_comparisons = 0;
        for (std::size_t d : degenerate)
            diagnostics->degenerate_comparisons += d;
    }

    std::vector<std::string> pids, gids;
    pids.reserve(rows);
    gids.reserve(cols);
    for (const auto& f : probes)
        pids.push_back(f.image_id);
    for (const auto& f : gallery)
        gids.push_back(f.image_id);
    return SimilarityMatrix(std::move(pids), std::move(gids), std::move(scores));
}

// ---------------------------------------------------------------------------
// Normalisation and fusion
// ---------------------------------------------------------------------------

// Per-probe min-max to [0, 1]; constant rows become 0.5.
inline SimilarityMatrix minmax_normalize_rows(const SimilarityMatrix& m) {
    if (m.cols() < 2)
        throw DataError("min-max normalisation needs at least 2 gallery columns");
    std::vector<float> out(m.scores().begin(), m.scores().end());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto row = m.row(i);
        const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
        const double mn = *lo, range = static_cast<double>(*hi) - mn;
        float* dst = out.data() + i * m.cols();
        for (std::size_t j = 0; j < m.cols(); ++j)
            dst[j] = range > 0.0 ? static_cast<float>((row[j] - mn) / range) : 0.5f;
    }
    return SimilarityMatrix(m.probe_ids(), m.gallery_ids(), std::move(out));
}

struct FusionComponent {
    const SimilarityMatrix* matrix;
    double weight;
};

// Weighted sum rule over per-row min-max normalised components:
// sum_i w_i n_i / sum_i w_i.
inline SimilarityMatrix fuse_sum(const std::vector<FusionComponent>& components) {
    if (components.empty())
        throw DataError("fusion needs at least one component");
    double total = 0.0;
    for (const auto& c : components) {
        if (!c.matrix)
            throw DataError("fusion component without a matrix");
        if (!(c.weight >= 0.0) || !std::isfinite(c.weight))
            throw DataError("fusion weights must be finite and non-negative");
        total += c.weight;
    }
    if (!(total > 0.0))
        throw DataError("fusion weights sum to zero");

    const SimilarityMatrix& first = *components.front().matrix;
    for (std::size_t k = 1; k < components.size(); ++k) {
        const SimilarityMatrix& m = *components[k].matrix;
        if (m.probe_ids() != first.probe_ids())
            throw DataError("fusion id mismatch: component " + std::to_string(k) + " has different probe ids");
        if (m.gallery_ids() != first.gallery_ids())
            throw DataError("fusion id mismatch: component " + std::to_string(k) + " has different gallery ids");
    }

    std::vector<double> acc(first.scores().size(), 0.0);
    for (const auto& c : components) {
        const SimilarityMatrix n = minmax_normalize_rows(*c.matrix);
        const auto s = n.scores();
        for (std::size_t i = 0; i < acc.size(); ++i)
            acc[i] += c.weight * static_cast<double>(s[i]);
    }
    std::vector<float> out(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i)
        out[i] = static_cast<float>(acc[i] / total);
    return SimilarityMatrix(first.probe_ids(), first.gallery_ids(), std::move(out));
}

} // namespace earbench

#endif
