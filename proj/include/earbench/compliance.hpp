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

#ifndef EARBENCH_COMPLIANCE_HPP
#define EARBENCH_COMPLIANCE_HPP

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "evaluation.hpp"
#include "matching.hpp"
#include "protocol.hpp"

namespace earbench {

struct NoisyProbeOutcome {
    std::string image_id;
    std::string true_subject;
    std::string assigned_subject;
    std::size_t true_rank = 0;
    std::size_t assigned_rank = 0;
    bool false_outranks = false;
};

struct ComplianceReport {
    double threshold = 0.5;
    std::size_t noisy_probes = 0; // relabelled images that act as probes
    std::size_t evaluated = 0;
    std::size_t skipped = 0;      // true or assigned identity has no gallery image
    std::size_t false_outranks = 0;
    double fraction = 0.0;
    bool flagged = false;
    std::vector<NoisyProbeOutcome> outcomes;
};

// Checks whether a submission's scores follow the injected (false) labels.
// Identity ranks use the organiser's truth labels for the gallery, recovered
// from the noisy manifest through the ledger. A relabelled image is a noisy
// probe when its subject has at least two images in its split under the
// noisy labels; every noisy probe must be a matrix row.
inline ComplianceReport check_noise_compliance(const SimilarityMatrix& m, const NoiseRecord& noise,
                                               const DatasetManifest& noisy, double threshold = 0.5) {
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw DataError("compliance threshold must lie in [0, 1]");
    const DatasetManifest truth = restore_labels(noisy, noise);

    std::unordered_map<std::string, std::size_t> per_subject;
    for (const auto& r : noisy.records())
        per_subject[std::string(to_string(r.split)) + '\x1f' + r.subject_id]++;

    ComplianceReport rep;
    rep.threshold = threshold;
    const GalleryIdentities ids(m, truth);
    for (const auto& swap : noise.swaps) {
        const ImageRecord& rec = noisy.at(swap.image_id);
        if (per_subject[std::string(to_string(rec.split)) + '\x1f' + rec.subject_id] < 2)
            continue;
        ++rep.noisy_probes;
        const auto row = m.probe_index(swap.image_id);
        if (!row)
            throw DataError("noisy probe '" + swap.image_id + "' is missing from the matrix");
        const auto t = ids.index_of(swap.original_subject);
        const auto f = ids.index_of(swap.assigned_subject);
        std::optional<std::size_t> tr, fr;
        if (t && f) {
            const auto collapsed = ids.collapse(m.row(*row), m.gallery_index(swap.image_id));
            tr = detail::identity_rank(collapsed, *t);
            fr = detail::identity_rank(collapsed, *f);
        }
        if (!tr || !fr) {
            ++rep.skipped;
            continue;
        }
        NoisyProbeOutcome o{swap.image_id, swap.original_subject, swap.assigned_subject, *tr, *fr, *fr < *tr};
        rep.false_outranks += o.false_outranks;
        rep.outcomes.push_back(std::move(o));
    }
    rep.evaluated = rep.outcomes.size();
    if (rep.evaluated == 0)
        throw DataError("no noisy probe can be evaluated against this matrix");
    rep.fraction = static_cast<double>(rep.false_outranks) / static_cast<double>(rep.evaluated);
    rep.flagged = rep.fraction > threshold;
    return rep;
}

inline nlohmann::json to_json(const ComplianceReport& r) {
    nlohmann::json probes = nlohmann::json::array();
    for (const auto& o : r.outcomes)
        probes.push_back({{"image_id", o.image_id},
                          {"true_subject", o.true_subject},
                          {"assigned_subject", o.assigned_subject},
                          {"true_rank", o.true_rank},
                          {"assigned_rank", o.assigned_rank},
                          {"false_outranks", o.false_outranks}});
    return {{"threshold", r.threshold},        {"noisy_probes", r.noisy_probes},
            {"evaluated", r.evaluated},        {"skipped", r.skipped},
            {"false_outranks", r.false_outranks}, {"fraction", r.fraction},
            {"flagged", r.flagged},            {"probes", std::move(probes)}};
}

} // namespace earbench

#endif
