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

// earbench command-line frontend.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "earbench/compliance.hpp"
#include "earbench/error.hpp"
#include "earbench/evaluation.hpp"
#include "earbench/image_io.hpp"
#include "earbench/matching.hpp"
#include "earbench/parallel.hpp"
#include "earbench/presets.hpp"
#include "earbench/protocol.hpp"
#include "earbench/synth.hpp"

namespace fs = std::filesystem;
using namespace earbench;

namespace {

enum Exit { ok = 0, usage = 1, data = 2, io = 3 };

unsigned default_threads() {
    if (const char* env = std::getenv("EARBENCH_THREADS")) {
        const auto n = detail::parse_int(env);
        if (!n || *n < 1 || *n > 1024)
            throw CLI::ValidationError("EARBENCH_THREADS", "must be an integer in [1, 1024]");
        return static_cast<unsigned>(*n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void write_json(const fs::path& path, const nlohmann::json& j) { detail::write_file(path, j.dump(2) + "\n"); }

std::string matrix_summary(const EvalReport& r) {
    return "probes=" + std::to_string(r.probe_count) + " skipped=" + std::to_string(r.skipped_probes) +
           " rank1=" + detail::format_g9(r.rank1) + " rank5=" + detail::format_g9(r.rank5) +
           " auc=" + detail::format_g9(r.auc);
}

// Re-expresses relative record paths against a manifest written elsewhere.
DatasetManifest rebase(const DatasetManifest& m, const fs::path& new_dir) {
    const fs::path from = fs::absolute(m.base_dir()).lexically_normal();
    const fs::path to = fs::absolute(new_dir).lexically_normal();
    if (from == to)
        return m;
    std::vector<ImageRecord> records = m.records();
    for (auto& r : records)
        if (!fs::path(r.path).is_absolute())
            r.path = (from / r.path).lexically_normal().lexically_relative(to).generic_string();
    return DatasetManifest(m.name(), std::move(records), new_dir);
}

struct Options {
    unsigned threads = 1;

    // extract
    std::string manifest, preset, split = "test", out;
    bool probes_only = false, flip = false;
    // score
    std::string probe_features, gallery_features, flip_features, measure, flip_strategy = "max";
    // fuse
    std::vector<std::string> inputs;
    std::vector<double> weights;
    // evaluate / stratify / validate / qualitative
    std::string matrix, report, cmc_csv, key, level = "identity", probe, probe_set = "probes";
    std::size_t k = 2;
    // noise
    double fraction = 0.0, threshold = 0.5;
    std::uint64_t seed = 1;
    std::string ledger;
    // synth
    int subjects = 20, images_per = 5;
};

int run_extract(const Options& o) {
    const PipelinePreset preset = make_preset(o.preset);
    const DatasetManifest m = load_manifest(o.manifest);
    const Split split = parse_split(o.split);
    const auto records = o.probes_only ? derive_probes(m, split) : gallery_records(m, split);
    std::vector<FeatureVector> features(records.size());
    parallel_for(records.size(), o.threads, [&](std::size_t i) {
        GrayImage img = load_grayscale(m.resolve(records[i]));
        if (o.flip)
            img = flip_horizontal(img);
        features[i] = preset.extract(img, records[i].image_id);
    });
    write_features(o.out, features);
    std::cout << "extracted " << features.size() << " " << preset.name << " vectors of dim "
              << (features.empty() ? 0 : features.front().dim()) << "\n";
    return ok;
}

int run_score(const Options& o) {
    const auto probes = read_features(o.probe_features);
    const auto gallery = read_features(o.gallery_features);
    ScoringOptions opt;
    opt.measure = parse_measure(o.measure);
    opt.threads = o.threads;
    std::unordered_map<std::string, FeatureVector> flips;
    if (!o.flip_features.empty()) {
        for (auto& f : read_features(o.flip_features))
            if (!flips.emplace(f.image_id, f).second)
                throw DataError("duplicate image_id '" + f.image_id + "' in flip features");
        opt.flip_variants = &flips;
        if (o.flip_strategy == "max")
            opt.flip_strategy = FlipStrategy::max_score;
        else if (o.flip_strategy == "sum")
            opt.flip_strategy = FlipStrategy::sum_features;
        else
            throw DataError("unknown flip strategy '" + o.flip_strategy + "' (expected max or sum)");
    }
    ScoringDiagnostics diag;
    const SimilarityMatrix sm = compute_similarity_matrix(probes, gallery, opt, &diag);
    write_matrix(o.out, sm);
    std::cout << "scored " << sm.rows() << "x" << sm.cols() << " " << to_string(opt.measure);
    if (diag.degenerate_comparisons)
        std::cout << " degenerate=" << diag.degenerate_comparisons;
    std::cout << "\n";
    return ok;
}

int run_fuse(const Options& o) {
    std::vector<double> weights = o.weights;
    if (weights.empty())
        weights.assign(o.inputs.size(), 1.0);
    if (weights.size() != o.inputs.size())
        throw DataError("fusion needs one weight per input (" + std::to_string(o.inputs.size()) + " inputs, " +
                        std::to_string(weights.size()) + " weights)");
    std::vector<SimilarityMatrix> mats;
    mats.reserve(o.inputs.size());
    for (const auto& p : o.inputs)
        mats.push_back(read_matrix(p));
    std::vector<FusionComponent> comps;
    for (std::size_t i = 0; i < mats.size(); ++i)
        comps.push_back({&mats[i], weights[i]});
    const SimilarityMatrix fused = fuse_sum(comps);
    write_matrix(o.out, fused);
    std::cout << "fused " << mats.size() << " matrices " << fused.rows() << "x" << fused.cols() << "\n";
    return ok;
}

int run_evaluate(const Options& o) {
    const SimilarityMatrix sm = read_matrix(o.matrix);
    const DatasetManifest m = load_manifest(o.manifest);
    const EvalReport r = evaluate(sm, m, parse_rank_level(o.level));
    if (!o.report.empty())
        write_json(o.report, to_json(r));
    if (!o.cmc_csv.empty())
        detail::write_file(o.cmc_csv, cmc_to_csv(r.curve));
    std::cout << matrix_summary(r) << "\n";
    return ok;
}

int run_stratify(const Options& o) {
    const SimilarityMatrix sm = read_matrix(o.matrix);
    const DatasetManifest m = load_manifest(o.manifest);
    const EvalReport r = stratified_eval(sm, m, o.key, parse_rank_level(o.level));
    if (!o.report.empty())
        write_json(o.report, to_json(r));
    std::cout << matrix_summary(r) << "\n";
    for (const auto& [label, s] : r.strata)
        std::cout << o.key << "=" << label << " probes=" << s.probe_count << " rank1=" << detail::format_g9(s.rank1)
                  << "\n";
    return ok;
}

int run_inject_noise(const Options& o) {
    const DatasetManifest m = load_manifest(o.manifest);
    const NoisyManifest noisy = inject_label_noise(m, o.fraction, o.seed);
    const fs::path out(o.out);
    write_manifest(out, rebase(noisy.manifest, out.parent_path()));
    write_json(o.ledger, noise_to_json(noisy.noise));
    std::cout << "relabelled " << noisy.noise.swaps.size() << " images\n";
    return ok;
}

int run_check_noise(const Options& o) {
    const SimilarityMatrix sm = read_matrix(o.matrix);
    const DatasetManifest m = load_manifest(o.manifest);
    nlohmann::json lj;
    try {
        lj = nlohmann::json::parse(detail::read_file(o.ledger));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(o.ledger + ": " + e.what());
    }
    const ComplianceReport r = check_noise_compliance(sm, noise_from_json(lj), m, o.threshold);
    if (!o.report.empty())
        write_json(o.report, to_json(r));
    std::cout << "evaluated=" << r.evaluated << " skipped=" << r.skipped << " false_outranks=" << r.false_outranks
              << " fraction=" << detail::format_g9(r.fraction) << " flagged=" << (r.flagged ? "true" : "false")
              << "\n";
    return ok;
}

int run_validate(const Options& o) {
    const SimilarityMatrix sm = read_matrix(o.matrix);
    const DatasetManifest m = load_manifest(o.manifest);
    const Split split = parse_split(o.split);
    std::vector<std::string> probes;
    if (o.probe_set == "probes")
        probes = ids_of(derive_probes(m, split));
    else if (o.probe_set == "all")
        probes = ids_of(gallery_records(m, split));
    else
        throw DataError("unknown probe set '" + o.probe_set + "' (expected probes or all)");
    const auto violations = validate_matrix(sm, probes, ids_of(gallery_records(m, split)));
    for (const auto& v : violations)
        std::cout << "violation: " << v << "\n";
    if (!violations.empty())
        throw DataError("matrix failed validation with " + std::to_string(violations.size()) + " violation(s)");
    std::cout << "valid " << sm.rows() << "x" << sm.cols() << "\n";
    return ok;
}

int run_qualitative(const Options& o) {
    const SimilarityMatrix sm = read_matrix(o.matrix);
    const DatasetManifest m = load_manifest(o.manifest);
    const auto j = to_json(qualitative_retrieval(sm, m, o.probe, o.k));
    if (!o.report.empty())
        write_json(o.report, j);
    std::cout << j.dump(2) << "\n";
    return ok;
}

int run_synth(const Options& o) {
    SynthParams p;
    p.subjects = o.subjects;
    p.images_per = o.images_per;
    p.seed = o.seed;
    const SyntheticDataset ds = make_synthetic(p);
    const fs::path dir(o.out);
    std::error_code ec;
    fs::create_directories(dir / "images", ec);
    if (ec)
        throw IoError("cannot create '" + (dir / "images").string() + "': " + ec.message());
    parallel_for(ds.images.size(), o.threads,
                 [&](std::size_t i) { write_png(dir / ds.manifest.records()[i].path, ds.images[i]); });
    write_manifest(dir / "manifest.csv", ds.manifest);
    std::cout << "wrote " << ds.images.size() << " images of " << p.subjects << " subjects to " << dir.string()
              << "\n";
    return ok;
}

std::string one_line(std::string s) {
    for (char& c : s)
        if (c == '\n' || c == '\r')
            c = ' ';
    return s;
}

int fail(const char* kind, int code, const std::string& what) {
    std::cerr << "earbench: error: " << kind << ": " << one_line(what) << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ear recognition evaluation toolkit"};
    app.require_subcommand(1);
    Options o;
    auto* threads = app.add_option("--threads", o.threads, "worker threads (default: EARBENCH_THREADS or all cores)")
                        ->check(CLI::Range(1u, 1024u));

    auto* extract = app.add_subcommand("extract", "extract descriptor features for a split");
    extract->add_option("--manifest", o.manifest)->required();
    extract->add_option("--preset", o.preset, "lbp-base, phog, iflbp, bior or hog")->required();
    extract->add_option("--split", o.split, "train, test or sequestered")->capture_default_str();
    extract->add_option("--out", o.out, "output EFV1 file")->required();
    extract->add_flag("--probes-only", o.probes_only, "only subjects with at least two images in the split");
    extract->add_flag("--flip", o.flip, "extract from horizontally flipped images");

    auto* score = app.add_subcommand("score", "compute an all-vs-all similarity matrix");
    score->add_option("--probe-features", o.probe_features)->required();
    score->add_option("--gallery-features", o.gallery_features)->required();
    score->add_option("--measure", o.measure, "cosine, chi2, euclidean or canberra")->required();
    score->add_option("--flip-features", o.flip_features, "features of flipped probes");
    score->add_option("--flip-strategy", o.flip_strategy, "max or sum")
        ->capture_default_str()
        ->check(CLI::IsMember({"max", "sum"}));
    score->add_option("--out", o.out, "output matrix (.csv or binary)")->required();

    auto* fuse = app.add_subcommand("fuse", "weighted sum-rule fusion of min-max normalised matrices");
    fuse->add_option("--inputs", o.inputs)->required()->delimiter(',');
    fuse->add_option("--weights", o.weights)->delimiter(',');
    fuse->add_option("--out", o.out)->required();

    auto* eval = app.add_subcommand("evaluate", "CMC, rank-1, rank-5 and AUC");
    eval->add_option("--matrix", o.matrix)->required();
    eval->add_option("--manifest", o.manifest)->required();
    eval->add_option("--report", o.report, "JSON report");
    eval->add_option("--cmc-csv", o.cmc_csv, "CMC curve CSV");
    eval->add_option("--level", o.level, "identity or image")->capture_default_str();

    auto* strat = app.add_subcommand("stratify", "rank-1 per annotation value");
    strat->add_option("--matrix", o.matrix)->required();
    strat->add_option("--manifest", o.manifest)->required();
    strat->add_option("--key", o.key, "annotation key, or 'resolution'")->required();
    strat->add_option("--report", o.report, "JSON report");
    strat->add_option("--level", o.level, "identity or image")->capture_default_str();

    auto* inject = app.add_subcommand("inject-noise", "relabel a fraction of test images");
    inject->add_option("--manifest", o.manifest)->required();
    inject->add_option("--fraction", o.fraction)->required();
    inject->add_option("--seed", o.seed)->required();
    inject->add_option("--out", o.out, "noisy manifest (.csv or .json)")->required();
    inject->add_option("--ledger", o.ledger, "JSON swap ledger")->required();

    auto* check = app.add_subcommand("check-noise", "flag matrices that follow injected labels");
    check->add_option("--matrix", o.matrix)->required();
    check->add_option("--manifest", o.manifest, "noisy manifest")->required();
    check->add_option("--ledger", o.ledger)->required();
    check->add_option("--threshold", o.threshold)->capture_default_str();
    check->add_option("--report", o.report, "JSON report");

    auto* validate = app.add_subcommand("validate", "check a submitted matrix against a manifest");
    validate->add_option("--matrix", o.matrix)->required();
    validate->add_option("--manifest", o.manifest)->required();
    validate->add_option("--split", o.split)->capture_default_str();
    validate->add_option("--probe-set", o.probe_set, "probes or all")->capture_default_str();

    auto* qual = app.add_subcommand("qualitative", "top-k retrieval for one probe");
    qual->add_option("--matrix", o.matrix)->required();
    qual->add_option("--manifest", o.manifest)->required();
    qual->add_option("--probe", o.probe)->required();
    qual->add_option("-k", o.k)->capture_default_str()->check(CLI::PositiveNumber);
    qual->add_option("--report", o.report, "JSON report");

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    synth->add_option("--subjects", o.subjects)->capture_default_str();
    synth->add_option("--images-per", o.images_per)->capture_default_str();
    synth->add_option("--seed", o.seed)->capture_default_str();
    synth->add_option("--out", o.out, "output directory")->required();

    try {
        app.parse(argc, argv);
        if (threads->count() == 0)
            o.threads = default_threads();
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", usage, e.what());
    }

    try {
        if (*extract) return run_extract(o);
        if (*score) return run_score(o);
        if (*fuse) return run_fuse(o);
        if (*eval) return run_evaluate(o);
        if (*strat) return run_stratify(o);
        if (*inject) return run_inject_noise(o);
        if (*check) return run_check_noise(o);
        if (*validate) return run_validate(o);
        if (*qual) return run_qualitative(o);
        if (*synth) return run_synth(o);
    } catch (const IoError& e) {
        return fail("io", io, e.what());
    } catch (const FormatError& e) {
        return fail("format", data, e.what());
    } catch (const DataError& e) {
        return fail("data", data, e.what());
    } catch (const std::exception& e) {
        return fail("internal", data, e.what());
    }
    return fail("usage", usage, "no subcommand");
}
