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

#ifndef EARBENCH_EVALUATION_HPP
#define EARBENCH_EVALUATION_HPP

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "matching.hpp"
#include "protocol.hpp"

namespace earbench {

enum class RankLevel { identity, image };

inline std::string_view to_string(RankLevel l) { return l == RankLevel::identity ? "identity" : "image"; }

inline RankLevel parse_rank_level(std::string_view s) {
    if (s == "identity") return RankLevel::identity;
    if (s == "image") return RankLevel::image;
    throw DataError("unknown ranking level '" + std::string(s) + "' (expected identity or image)");
}

// ---------------------------------------------------------------------------
// Gallery identity bookkeeping
// ---------------------------------------------------------------------------

// Gallery columns grouped by subject. Identities are kept in ascending name
// order, which doubles as the tie-break order.
class GalleryIdentities {
public:
    GalleryIdentities(const SimilarityMatrix& m, const DatasetManifest& manifest) {
        std::map<std::string, std::size_t> ids;
        column_subject_.reserve(m.cols());
        for (const auto& g : m.gallery_ids())
            ids.emplace(manifest.at(g).subject_id, 0);
        names_.reserve(ids.size());
        for (auto& [name, idx] : ids) {
            idx = names_.size();
            names_.push_back(name);
        }
        for (const auto& g : m.gallery_ids())
            column_subject_.push_back(ids.at(manifest.at(g).subject_id));
    }

    std::size_t count() const noexcept { return names_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    std::size_t column_identity(std::size_t col) const { return column_subject_[col]; }

    std::optional<std::size_t> index_of(std::string_view name) const {
        auto it = std::lower_bound(names_.begin(), names_.end(), name);
        if (it == names_.end() || *it != name)
            return std::nullopt;
        return static_cast<std::size_t>(it - names_.begin());
    }

    // Per-identity maximum score over the row, skipping column `skip`.
    // Identities with no remaining column are nullopt.
    std::vector<std::optional<float>> collapse(std::span<const float> row, std::optional<std::size_t> skip) const {
        std::vector<std::optional<float>> best(names_.size());
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (skip && *skip == j)
                continue;
            auto& b = best[column_subject_[j]];
            if (!b || row[j] > *b)
                b = row[j];
        }
        return best;
    }

private:
    std::vector<std::string> names_;
    std::vector<std::size_t> column_subject_;
};

namespace detail {

// 1-based rank of identity `target` among present identities, ordered by
// descending score then ascending name.
inline std::optional<std::size_t> identity_rank(const std::vector<std::optional<float>>& scores, std::size_t target) {
    if (!scores[target])
        return std::nullopt;
    const float t = *scores[target];
    std::size_t rank = 1;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!scores[i] || i == target)
            continue;
        if (*scores[i] > t || (*scores[i] == t && i < target))
            ++rank;
    }
    return rank;
}

// 1-based rank of the best-placed gallery image of `subject`, images ordered
// by descending score then ascending image id; self column excluded.
inline std::optional<std::size_t> image_rank(const SimilarityMatrix& m, std::size_t probe, const DatasetManifest& mf,
                                             const std::string& subject, std::optional<std::size_t> self) {
    const auto row = m.row(probe);
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < m.cols(); ++j) {
        if (self && *self == j)
            continue;
        if (mf.at(m.gallery_ids()[j]).subject_id != subject)
            continue;
        if (!best || row[j] > row[*best] || (row[j] == row[*best] && m.gallery_ids()[j] < m.gallery_ids()[*best]))
            best = j;
    }
    if (!best)
        return std::nullopt;
    std::size_t rank = 1;
    for (std::size_t j = 0; j < m.cols(); ++j) {
        if ((self && *self == j) || j == *best)
            continue;
        if (row[j] > row[*best] || (row[j] == row[*best] && m.gallery_ids()[j] < m.gallery_ids()[*best]))
            ++rank;
    }
    return rank;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Ranks
// ---------------------------------------------------------------------------

// Identity-level rank of the probe's true subject: the probe's own gallery
// column is excluded, each identity is represented by its best score, and
// ties go to the alphabetically smaller identity.
inline std::size_t rank_of_true_identity(const SimilarityMatrix& m, std::string_view probe_id,
                                         const DatasetManifest& manifest) {
    const auto row = m.probe_index(probe_id);
    if (!row)
        throw DataError("probe '" + std::string(probe_id) + "' is not in the matrix");
    const GalleryIdentities ids(m, manifest);
    const std::string& subject = manifest.at(probe_id).subject_id;
    const auto target = ids.index_of(subject);
    std::optional<std::size_t> rank;
    if (target)
        rank = detail::identity_rank(ids.collapse(m.row(*row), m.gallery_index(probe_id)), *target);
    if (!rank)
        throw DataError("identity '" + subject + "' of probe '" + std::string(probe_id) +
                        "' has no gallery image besides the probe itself");
    return *rank;
}

struct ProbeRanks {
    std::vector<std::optional<std::size_t>> ranks; // per matrix row; nullopt = not evaluable
    std::size_t max_rank = 0;
};

inline ProbeRanks probe_ranks(const SimilarityMatrix& m, const DatasetManifest& manifest,
                              RankLevel level = RankLevel::identity) {
    ProbeRanks out;
    out.ranks.resize(m.rows());
    if (level == RankLevel::identity) {
        const GalleryIdentities ids(m, manifest);
        out.max_rank = ids.count();
        for (std::size_t i = 0; i < m.rows(); ++i) {
            const auto target = ids.index_of(manifest.at(m.probe_ids()[i]).subject_id);
            if (target)
                out.ranks[i] = detail::identity_rank(ids.collapse(m.row(i), m.gallery_index(m.probe_ids()[i])), *target);
        }
    } else {
        for (std::size_t i = 0; i < m.rows(); ++i) {
            const auto self = m.gallery_index(m.probe_ids()[i]);
            out.max_rank = std::max(out.max_rank, m.cols() - (self ? 1 : 0));
            out.ranks[i] = detail::image_rank(m, i, manifest, manifest.at(m.probe_ids()[i]).subject_id, self);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// CMC / AUC
// ---------------------------------------------------------------------------

struct CmcCurve {
    std::size_t max_rank = 0;
    std::vector<double> hits; // hits[r - 1] = fraction of probes with rank <= r

    double at(std::size_t rank) const {
        if (hits.empty())
            return 0.0;
        return hits[std::min(rank, hits.size()) - 1];
    }
};

inline CmcCurve cmc_from_ranks(const std::vector<std::optional<std::size_t>>& ranks, std::size_t max_rank) {
    std::vector<std::size_t> at_rank(max_rank + 1, 0);
    std::size_t valid = 0;
    for (const auto& r : ranks)
        if (r) {
            ++valid;
            ++at_rank[std::min(*r, max_rank)];
        }
    if (valid == 0)
        throw DataError("no evaluable probes (every probe lacks a same-identity gallery image)");
    CmcCurve c{max_rank, std::vector<double>(max_rank)};
    std::size_t cum = 0;
    for (std::size_t r = 1; r <= max_rank; ++r) {
        cum += at_rank[r];
        c.hits[r - 1] = static_cast<double>(cum) / static_cast<double>(valid);
    }
    return c;
}

inline CmcCurve compute_cmc(const SimilarityMatrix& m, const DatasetManifest& manifest,
                            RankLevel level = RankLevel::identity) {
    const auto pr = probe_ranks(m, manifest, level);
    return cmc_from_ranks(pr.ranks, pr.max_rank);
}

// Area under the CMC with the rank axis normalised to 1: the mean hit rate.
inline double auc(const CmcCurve& c) {
    if (c.hits.empty())
        return 0.0;
    double s = 0.0;
    for (double h : c.hits)
        s += h;
    return s / static_cast<double>(c.hits.size());
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct Stratum {
    std::size_t probe_count = 0;
    double rank1 = 0.0;
};

struct EvalReport {
    RankLevel level = RankLevel::identity;
    double rank1 = 0.0;
    double rank5 = 0.0;
    double auc = 0.0;
    CmcCurve curve;
    std::size_t probe_count = 0;    // evaluable probes
    std::size_t skipped_probes = 0; // rows without a same-identity gallery image
    std::string stratify_key;       // empty when not stratified
    std::map<std::string, Stratum> strata;
};

inline EvalReport report_from_ranks(const ProbeRanks& pr, RankLevel level) {
    EvalReport rep;
    rep.level = level;
    rep.curve = cmc_from_ranks(pr.ranks, pr.max_rank);
    rep.rank1 = rep.curve.at(1);
    rep.rank5 = rep.curve.at(5);
    rep.auc = auc(rep.curve);
    for (const auto& r : pr.ranks)
        (r ? rep.probe_count : rep.skipped_probes)++;
    return rep;
}

inline EvalReport evaluate(const SimilarityMatrix& m, const DatasetManifest& manifest,
                           RankLevel level = RankLevel::identity) {
    return report_from_ranks(probe_ranks(m, manifest, level), level);
}

// ---------------------------------------------------------------------------
// Covariates
// ---------------------------------------------------------------------------

inline constexpr std::string_view unlabeled = "unlabeled";
inline constexpr std::string_view resolution_key = "resolution";

// Pixel-count buckets; edges are inclusive-lower.
struct ResolutionBuckets {
    std::vector<long long> edges{1000, 5000, 10000};
    std::vector<std::string> labels{"<1k", "1k–5k", "5k–10k", "≥10k"};

    std::string label(long long pixels) const {
        std::size_t b = 0;
        while (b < edges.size() && pixels >= edges[b])
            ++b;
        return labels.at(b);
    }
};

inline std::map<std::string, std::string> resolution_buckets(const DatasetManifest& m,
                                                             const ResolutionBuckets& buckets = {}) {
    std::map<std::string, std::string> out;
    for (const auto& r : m.records())
        out[r.image_id] = (r.width && r.height)
                              ? buckets.label(static_cast<long long>(*r.width) * static_cast<long long>(*r.height))
                              : std::string(unlabeled);
    return out;
}

// Global report plus rank-1 per label value of `key` (probes without the
// label fall into "unlabeled"). Ranks are always taken against the full
// gallery. key == "resolution" uses pixel-count buckets.
inline EvalReport stratified_eval(const SimilarityMatrix& m, const DatasetManifest& manifest, const std::string& key,
                                  RankLevel level = RankLevel::identity, const ResolutionBuckets& buckets = {}) {
    const auto pr = probe_ranks(m, manifest, level);
    EvalReport rep = report_from_ranks(pr, level);
    rep.stratify_key = key;

    const bool by_resolution = key == resolution_key;
    std::size_t labelled = 0;
    std::map<std::string, std::size_t> hits;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (!pr.ranks[i])
            continue;
        const ImageRecord& rec = manifest.at(m.probe_ids()[i]);
        std::string label(unlabeled);
        if (by_resolution) {
            if (rec.width && rec.height)
                label = buckets.label(static_cast<long long>(*rec.width) * *rec.height);
        } else if (auto it = rec.annotations.find(key); it != rec.annotations.end()) {
            label = it->second;
        }
        if (label != unlabeled)
            ++labelled;
        rep.strata[label].probe_count++;
        hits[label] += *pr.ranks[i] == 1;
    }
    if (labelled == 0)
        throw DataError("no evaluable probe carries the annotation '" + key + "'");
    for (auto& [label, s] : rep.strata)
        s.rank1 = static_cast<double>(hits[label]) / static_cast<double>(s.probe_count);
    return rep;
}

// ---------------------------------------------------------------------------
// Qualitative retrieval
// ---------------------------------------------------------------------------

struct RetrievedImage {
    std::string image_id;
    std::string subject_id;
    float score = 0.0f;
    std::size_t rank = 0; // 1-based, image level
};

struct QualitativeReport {
    std::string probe_id;
    std::string subject_id;
    std::vector<RetrievedImage> top;
    std::optional<RetrievedImage> first_correct;
};

// Top-k gallery images for one probe (self excluded, descending score, ties
// by image id) and the best-ranked image of the probe's own identity.
inline QualitativeReport qualitative_retrieval(const SimilarityMatrix& m, const DatasetManifest& manifest,
                                               std::string_view probe_id, std::size_t k) {
    const auto row = m.probe_index(probe_id);
    if (!row)
        throw DataError("probe '" + std::string(probe_id) + "' is not in the matrix");
    const auto self = m.gallery_index(probe_id);
    const auto scores = m.row(*row);

    std::vector<std::size_t> order;
    order.reserve(m.cols());
    for (std::size_t j = 0; j < m.cols(); ++j)
        if (!self || *self != j)
            order.push_back(j);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b])
            return scores[a] > scores[b];
        return m.gallery_ids()[a] < m.gallery_ids()[b];
    });

    QualitativeReport rep;
    rep.probe_id = std::string(probe_id);
    rep.subject_id = manifest.at(probe_id).subject_id;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const std::size_t j = order[pos];
        RetrievedImage img{m.gallery_ids()[j], manifest.at(m.gallery_ids()[j]).subject_id, scores[j], pos + 1};
        if (!rep.first_correct && img.subject_id == rep.subject_id)
            rep.first_correct = img;
        if (pos < k)
            rep.top.push_back(std::move(img));
        else if (rep.first_correct)
            break;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Serialisation
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json j{{"level", std::string(to_string(r.level))},
                     {"probe_count", r.probe_count},
                     {"skipped_probes", r.skipped_probes},
                     {"max_rank", r.curve.max_rank},
                     {"rank1", r.rank1},
                     {"rank5", r.rank5},
                     {"auc", r.auc},
                     {"cmc", r.curve.hits}};
    if (!r.stratify_key.empty()) {
        j["stratify_key"] = r.stratify_key;
        nlohmann::json strata = nlohmann::json::object();
        for (const auto& [label, s] : r.strata)
            strata[label] = {{"probe_count", s.probe_count}, {"rank1", s.rank1}};
        j["strata"] = std::move(strata);
    }
    return j;
}

inline nlohmann::json to_json(const RetrievedImage& r) {
    return {{"image_id", r.image_id}, {"subject_id", r.subject_id}, {"score", r.score}, {"rank", r.rank}};
}

inline nlohmann::json to_json(const QualitativeReport& r) {
    nlohmann::json top = nlohmann::json::array();
    for (const auto& t : r.top)
        top.push_back(to_json(t));
    return {{"probe_id", r.probe_id},
            {"subject_id", r.subject_id},
            {"top", std::move(top)},
            {"first_correct", r.first_correct ? to_json(*r.first_correct) : nlohmann::json()}};
}

// rank,normalized_rank,hit_rate
inline std::string cmc_to_csv(const CmcCurve& c) {
    std::string out = "rank,normalized_rank,hit_rate\n";
    for (std::size_t r = 1; r <= c.hits.size(); ++r)
        out += std::to_string(r) + "," + detail::format_g9(static_cast<double>(r) / static_cast<double>(c.max_rank)) +
               "," + detail::format_g9(c.hits[r - 1]) + "\n";
    return out;
}

} // namespace earbench

#endif
