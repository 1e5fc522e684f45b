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

#include <cmath>
#include <cstring>
#include <limits>

#include <gtest/gtest.h>

#include "earbench/protocol.hpp"
#include "support.hpp"

using namespace earbench;
namespace fs = std::filesystem;

namespace {

ImageRecord rec(std::string id, std::string subject, Split split = Split::test) {
    ImageRecord r;
    r.image_id = std::move(id);
    r.path = "img/" + r.image_id + ".png";
    r.subject_id = std::move(subject);
    r.split = split;
    return r;
}

template <typename F>
std::string error_of(F&& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

bool contains(const std::string& s, std::string_view needle) { return s.find(needle) != std::string::npos; }

bool bit_equal(const std::vector<float>& a, const std::vector<float>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

std::string random_id(Rng& rng) {
    static constexpr char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789_-,\"é";
    std::string s;
    const auto n = 1 + rng.below(12);
    for (std::uint64_t i = 0; i < n; ++i)
        s += alphabet[rng.below(sizeof(alphabet) - 1)];
    return s;
}

std::vector<std::string> unique_ids(Rng& rng, std::size_t n, const std::string& prefix) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i)
        ids.push_back(prefix + std::to_string(i) + random_id(rng));
    return ids;
}

// Arbitrary bit patterns, including denormals, but never NaN or infinity.
float random_finite_float(Rng& rng) {
    for (;;) {
        const auto bits = static_cast<std::uint32_t>(rng.below(std::uint64_t{1} << 32));
        const float f = std::bit_cast<float>(bits);
        if (std::isfinite(f))
            return f;
    }
}

} // namespace

TEST(Manifest, CsvTwoRows) {
    const auto m = parse_manifest_csv("image_id,path,subject_id,split,width,height,gender\n"
                                      "a,a.png,S1,test,40,25,female\n"
                                      "b,b.png,S2,train,,,\n",
                                      "m.csv");
    ASSERT_EQ(m.records().size(), 2u);
    EXPECT_EQ(*m.records()[0].width, 40);
    EXPECT_EQ(m.records()[0].annotations.at("gender"), "female");
    EXPECT_FALSE(m.records()[1].width);
    EXPECT_TRUE(m.records()[1].annotations.empty());
}

TEST(Manifest, CsvErrors) {
    const std::string hdr = "image_id,path,subject_id,split,width,height\n";
    auto dup = error_of([&] { parse_manifest_csv(hdr + "x1,a,S1,test,,\nx1,b,S2,test,,\n", "m.csv"); });
    EXPECT_TRUE(contains(dup, "x1")) << dup;
    auto overlap = error_of([&] { parse_manifest_csv(hdr + "a,a,SUBJ7,test,,\nb,b,SUBJ7,train,,\n", "m.csv"); });
    EXPECT_TRUE(contains(overlap, "SUBJ7")) << overlap;
    auto ragged = error_of([&] { parse_manifest_csv(hdr + "a,a,S1,test,,\nb,b,S1\n", "m.csv"); });
    EXPECT_TRUE(contains(ragged, "m.csv:3")) << ragged;
    auto bad_split = error_of([&] { parse_manifest_csv(hdr + "a,a,S1,validation,,\n", "m.csv"); });
    EXPECT_TRUE(contains(bad_split, "m.csv:2")) << bad_split;
    EXPECT_THROW(parse_manifest_csv(hdr + "a,a,S1,test,0,5\n", "m.csv"), FormatError);
    EXPECT_THROW(parse_manifest_csv("id,path\n", "m.csv"), FormatError);
    EXPECT_THROW(parse_manifest_csv("", "m.csv"), FormatError);
}

TEST(Manifest, CsvAndJsonFilesAgree) {
    const auto dir = fixtures::scratch_dir("manifest_files");
    std::vector<ImageRecord> records{rec("a", "S1"), rec("b,\"q\"", "S1"), rec("c", "S2", Split::train)};
    records[0].width = 30;
    records[0].height = 20;
    records[1].annotations["occlusion"] = "heavy";
    const DatasetManifest m("demo", records);
    write_manifest(dir / "m.csv", m);
    std::ofstream(dir / "m.json") << manifest_to_json(m).dump(2);
    const auto a = load_manifest(dir / "m.csv");
    const auto b = load_manifest(dir / "m.json");
    EXPECT_EQ(a.records(), records);
    EXPECT_EQ(b.records(), records);
    EXPECT_EQ(b.name(), "demo");
    EXPECT_EQ(a.resolve(a.records()[0]), dir / "img/a.png");
}

TEST(Manifest, JsonErrors) {
    const auto dir = fixtures::scratch_dir("manifest_json_err");
    std::ofstream(dir / "bad.json") << "{not json";
    EXPECT_THROW(load_manifest(dir / "bad.json"), FormatError);
    std::ofstream(dir / "missing.json") << R"({"records":[{"image_id":"a"}]})";
    EXPECT_THROW(load_manifest(dir / "missing.json"), FormatError);
    EXPECT_THROW(load_manifest(dir / "nope.csv"), IoError);
}

TEST(DeriveProbes, MultiImageSubjectsOnly) {
    const DatasetManifest m("t", {rec("a1", "A"), rec("b1", "B"), rec("a2", "A"), rec("a3", "A"),
                                  rec("t1", "T", Split::train)});
    EXPECT_EQ(ids_of(derive_probes(m, Split::test)), (std::vector<std::string>{"a1", "a2", "a3"}));
    EXPECT_EQ(gallery_records(m, Split::test).size(), 4u);
    EXPECT_TRUE(derive_probes(m, Split::train).empty());
    EXPECT_THROW(derive_probes(m, Split::sequestered), DataError);
}

TEST(DeriveProbes, SingletonsGiveNoProbes) {
    const DatasetManifest m("t", {rec("a", "A"), rec("b", "B"), rec("c", "C")});
    EXPECT_TRUE(derive_probes(m, Split::test).empty());
}

TEST(DeriveProbes, UercShapedCounts) {
    // 9,500 gallery images; 1,758 singleton subjects and multi-image
    // subjects of 2-7 images filling the remaining 7,742.
    Rng rng(21);
    std::vector<ImageRecord> records;
    std::size_t subject = 0, multi = 0;
    auto add_subject = [&](std::size_t n) {
        const std::string s = "S" + std::to_string(subject++);
        for (std::size_t k = 0; k < n; ++k)
            records.push_back(rec(s + "_" + std::to_string(k), s));
    };
    while (multi < 7742) {
        std::size_t n = 2 + rng.below(6);
        if (multi + n > 7742 || 7742 - multi - n == 1)
            n = 7742 - multi;
        add_subject(n);
        multi += n;
    }
    for (int i = 0; i < 1758; ++i)
        add_subject(1);
    // interleave so manifest order is not grouped by subject
    for (std::size_t i = records.size() - 1; i > 0; --i)
        std::swap(records[i], records[rng.below(i + 1)]);
    const DatasetManifest m("uerc", records);

    const auto probes = derive_probes(m, Split::test);
    EXPECT_EQ(gallery_records(m, Split::test).size(), 9500u);
    EXPECT_EQ(probes.size(), 7742u);
    std::set<std::string> gallery;
    for (const auto& r : m.records())
        gallery.insert(r.image_id);
    std::ptrdiff_t last = -1;
    for (const auto& p : probes) {
        EXPECT_TRUE(gallery.count(p.image_id));
        const std::ptrdiff_t pos = m.find(p.image_id) - m.records().data();
        EXPECT_GT(pos, last);
        last = pos;
    }
}

TEST(LabelNoise, SmallFractionGivesOneSwap) {
    const DatasetManifest m("t", {rec("a1", "A"), rec("a2", "A"), rec("b1", "B"), rec("b2", "B")});
    const auto n = inject_label_noise(m, 0.01, 5);
    ASSERT_EQ(n.noise.swaps.size(), 1u);
    const auto& s = n.noise.swaps[0];
    EXPECT_NE(s.original_subject, s.assigned_subject);
    EXPECT_EQ(n.manifest.at(s.image_id).subject_id, s.assigned_subject);
    EXPECT_EQ(inject_label_noise(m, 0.5, 5).noise.swaps.size(), 2u);
    EXPECT_EQ(inject_label_noise(m, 0.51, 5).noise.swaps.size(), 3u);
}

TEST(LabelNoise, Errors) {
    const DatasetManifest one("t", {rec("a1", "A"), rec("a2", "A")});
    EXPECT_THROW(inject_label_noise(one, 0.5, 1), DataError);
    const DatasetManifest two("t", {rec("a1", "A"), rec("b1", "B")});
    for (double f : {0.0, 1.0, -0.1, std::nan("")})
        EXPECT_THROW(inject_label_noise(two, f, 1), DataError);
}

TEST(LabelNoise, DeterministicAndOnlyTestSplit) {
    std::vector<ImageRecord> records;
    for (int s = 0; s < 10; ++s)
        for (int k = 0; k < 4; ++k)
            records.push_back(rec("i" + std::to_string(s) + "_" + std::to_string(k), "S" + std::to_string(s),
                                  s < 3 ? Split::train : Split::test));
    const DatasetManifest m("t", records);
    const auto a = inject_label_noise(m, 0.2, 99), b = inject_label_noise(m, 0.2, 99);
    EXPECT_EQ(a.noise, b.noise);
    EXPECT_EQ(a.manifest.records(), b.manifest.records());
    EXPECT_EQ(a.noise.swaps.size(), 6u); // ceil(0.2 * 28)
    for (const auto& s : a.noise.swaps)
        EXPECT_EQ(m.at(s.image_id).split, Split::test);
    EXPECT_NE(inject_label_noise(m, 0.2, 100).noise, a.noise);
}

TEST(LabelNoise, AssignedDiffersAndLedgerRestores) {
    Rng rng(31);
    for (int t = 0; t < 1000; ++t) {
        std::vector<ImageRecord> records;
        const int subjects = 2 + static_cast<int>(rng.below(6));
        for (int s = 0; s < subjects; ++s)
            for (int k = 0, n = 1 + static_cast<int>(rng.below(4)); k < n; ++k)
                records.push_back(rec(std::to_string(s) + "_" + std::to_string(k), "S" + std::to_string(s)));
        const DatasetManifest m("t", records);
        const double fraction = rng.uniform(0.01, 0.99);
        const auto n = inject_label_noise(m, fraction, static_cast<std::uint64_t>(t));
        const auto expected = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(records.size()) - 1e-9));
        ASSERT_EQ(n.noise.swaps.size(), expected);
        std::set<std::string> seen;
        for (const auto& s : n.noise.swaps) {
            ASSERT_NE(s.original_subject, s.assigned_subject);
            ASSERT_TRUE(seen.insert(s.image_id).second);
            ASSERT_EQ(m.at(s.image_id).subject_id, s.original_subject);
        }
        ASSERT_EQ(restore_labels(n.manifest, n.noise).records(), m.records());
        ASSERT_EQ(noise_from_json(noise_to_json(n.noise)), n.noise);
    }
}

TEST(LabelNoise, RestoreRejectsMismatchedLedger) {
    const DatasetManifest m("t", {rec("a", "A"), rec("b", "B")});
    NoiseRecord bad{1, 0.5, {{"a", "B", "C"}}};
    EXPECT_THROW(restore_labels(m, bad), DataError);
    NoiseRecord missing{1, 0.5, {{"zz", "A", "B"}}};
    EXPECT_THROW(restore_labels(m, missing), DataError);
    EXPECT_THROW(noise_from_json(nlohmann::json::parse(R"({"seed":1,"swaps":[{"image_id":"a","original_subject":"A","assigned_subject":"A"}]})")),
                 DataError);
}

TEST(Efv1, RoundTripThreeVectors) {
    const auto dir = fixtures::scratch_dir("efv1");
    Rng rng(41);
    std::vector<FeatureVector> v;
    for (int i = 0; i < 3; ++i)
        v.push_back({"ulbp", "img" + std::to_string(i), fixtures::random_vector(rng, 17, -1e6, 1e6)});
    write_features(dir / "f.efv", v);
    const auto back = read_features(dir / "f.efv");
    ASSERT_EQ(back.size(), 3u);
    for (int i = 0; i < 3; ++i) {
        EXPECT_EQ(back[i].image_id, v[i].image_id);
        EXPECT_EQ(back[i].descriptor_id, "ulbp");
        EXPECT_TRUE(bit_equal(back[i].values, v[i].values));
    }
}

TEST(Efv1, ExactByteLayout) {
    const std::string bytes = encode_features({{"d", "x", {1.0f}}});
    const std::string expect("EFV1\x01\x00\x00\x00"
                             "d\x01\x00\x00\x00\x01\x00\x00\x00"
                             "\x01\x00\x00\x00x\x00\x00\x80\x3f",
                             4 + 5 + 4 + 4 + 5 + 4);
    EXPECT_EQ(bytes, expect);
}

TEST(Efv1, EmptyListRoundTrip) {
    const auto back = decode_features(encode_features({}), "empty");
    EXPECT_TRUE(back.empty());
}

TEST(Efv1, Errors) {
    std::string good = encode_features({{"d", "a", {1, 2, 3}}, {"d", "b", {4, 5, 6}}});
    std::string bad = good;
    bad[3] = '2';
    EXPECT_THROW(decode_features(bad, "f"), FormatError);
    for (std::size_t cut = 0; cut < good.size(); ++cut)
        EXPECT_THROW(decode_features(std::string_view(good).substr(0, cut), "f"), FormatError) << cut;
    EXPECT_THROW(decode_features(good + "x", "f"), FormatError);
    EXPECT_THROW(encode_features({{"d", "a", {1, 2}}, {"d", "b", {1}}}), DataError);
    EXPECT_THROW(encode_features({{"d", "a", {1}}, {"e", "b", {1}}}), DataError);
    EXPECT_THROW(read_features(fixtures::scratch_dir("efv1_missing") / "none.efv"), IoError);
}

TEST(Esm1, RoundTripTwoByThree) {
    const SimilarityMatrix m({"p1", "p2"}, {"g1", "g2", "g3"}, {0.1f, -2.5f, 3e-30f, 1e30f, 0.0f, -0.0f});
    const auto back = decode_matrix_binary(encode_matrix_binary(m), "m");
    EXPECT_EQ(back.probe_ids(), m.probe_ids());
    EXPECT_EQ(back.gallery_ids(), m.gallery_ids());
    EXPECT_EQ(std::memcmp(back.scores().data(), m.scores().data(), 6 * sizeof(float)), 0);
}

TEST(Esm1, Errors) {
    const SimilarityMatrix m({"p"}, {"g"}, {1.0f});
    std::string good = encode_matrix_binary(m);
    std::string bad = good;
    bad[0] = 'X';
    EXPECT_THROW(decode_matrix_binary(bad, "m"), FormatError);
    for (std::size_t cut = 0; cut < good.size(); ++cut)
        EXPECT_THROW(decode_matrix_binary(std::string_view(good).substr(0, cut), "m"), FormatError);
    const SimilarityMatrix nan({"p"}, {"g"}, {std::numeric_limits<float>::quiet_NaN()});
    EXPECT_THROW(encode_matrix_binary(nan), DataError);
    EXPECT_THROW(encode_matrix_csv(nan), DataError);
}

TEST(MatrixCsv, LayoutAndRoundTrip) {
    const SimilarityMatrix m({"p1", "p,2"}, {"g1", "g2"}, {0.1f, 1.0f / 3.0f, -7.0f, 16777217.0f});
    const std::string csv = encode_matrix_csv(m);
    EXPECT_EQ(csv, ",g1,g2\np1,0.100000001,0.333333343\n\"p,2\",-7,16777216\n");
    EXPECT_EQ(decode_matrix_csv(csv, "m.csv"), m);
}

TEST(MatrixCsv, NineDigitsRoundTripRandomFloats) {
    Rng rng(51);
    std::vector<float> s(400);
    for (float& v : s)
        v = random_finite_float(rng);
    std::vector<std::string> p, g;
    for (int i = 0; i < 20; ++i) {
        p.push_back("p" + std::to_string(i));
        g.push_back("g" + std::to_string(i));
    }
    const SimilarityMatrix m(p, g, s);
    const auto back = decode_matrix_csv(encode_matrix_csv(m), "m");
    EXPECT_TRUE(bit_equal(std::vector<float>(back.scores().begin(), back.scores().end()), s));
}

TEST(MatrixCsv, Errors) {
    const auto nan = error_of([] { decode_matrix_csv(",g1,g2\np1,1,2\np2,3,NaN\n", "m.csv"); });
    EXPECT_TRUE(contains(nan, "row 2")) << nan;
    EXPECT_TRUE(contains(nan, "column 2")) << nan;
    EXPECT_TRUE(contains(nan, "m.csv:3")) << nan;
    EXPECT_THROW(decode_matrix_csv(",g1,g2\np1,1\n", "m.csv"), FormatError);
    EXPECT_THROW(decode_matrix_csv("x,g1\np1,1\n", "m.csv"), FormatError);
    EXPECT_THROW(decode_matrix_csv(",g1\np1,inf\n", "m.csv"), FormatError);
    EXPECT_THROW(decode_matrix_csv(",g1\np1,1e999\n", "m.csv"), FormatError);
    EXPECT_THROW(decode_matrix_csv(",g1\np1,1e39\n", "m.csv"), DataError);
    EXPECT_THROW(decode_matrix_csv(",g1\np1,\n", "m.csv"), FormatError);
}

TEST(MatrixFiles, FormatByExtensionAndContent) {
    const auto dir = fixtures::scratch_dir("matrix_files");
    const SimilarityMatrix m({"p"}, {"g1", "g2"}, {0.5f, 0.25f});
    write_matrix(dir / "m.csv", m);
    write_matrix(dir / "m.esm", m);
    EXPECT_EQ(detail::read_file(dir / "m.csv").substr(0, 1), ",");
    EXPECT_EQ(detail::read_file(dir / "m.esm").substr(0, 4), "ESM1");
    EXPECT_EQ(read_matrix(dir / "m.csv"), m);
    EXPECT_EQ(read_matrix(dir / "m.esm"), m);
    fs::copy_file(dir / "m.esm", dir / "renamed.csv", fs::copy_options::overwrite_existing);
    EXPECT_EQ(read_matrix(dir / "renamed.csv"), m);
}

TEST(BinaryFormats, RandomPayloadRoundTrips) {
    Rng rng(61);
    for (int t = 0; t < 100; ++t) {
        const std::size_t count = rng.below(6), dim = rng.below(9);
        std::vector<FeatureVector> v;
        const auto ids = unique_ids(rng, count, "i");
        const std::string desc = random_id(rng);
        for (std::size_t i = 0; i < count; ++i) {
            FeatureVector f{desc, ids[i], std::vector<float>(dim)};
            for (float& x : f.values)
                x = random_finite_float(rng);
            v.push_back(std::move(f));
        }
        const auto back = decode_features(encode_features(v), "f");
        ASSERT_EQ(back.size(), v.size());
        for (std::size_t i = 0; i < count; ++i) {
            ASSERT_EQ(back[i].image_id, v[i].image_id);
            ASSERT_EQ(back[i].descriptor_id, desc);
            ASSERT_TRUE(bit_equal(back[i].values, v[i].values));
        }

        const std::size_t rows = rng.below(5), cols = rng.below(5);
        std::vector<float> s(rows * cols);
        for (float& x : s)
            x = random_finite_float(rng);
        const SimilarityMatrix m(unique_ids(rng, rows, "p"), unique_ids(rng, cols, "g"), s);
        const auto mb = decode_matrix_binary(encode_matrix_binary(m), "m");
        ASSERT_EQ(mb.probe_ids(), m.probe_ids());
        ASSERT_EQ(mb.gallery_ids(), m.gallery_ids());
        ASSERT_TRUE(bit_equal(std::vector<float>(mb.scores().begin(), mb.scores().end()), s));
    }
}

TEST(Validate, MatchingMatrixIsClean) {
    const SimilarityMatrix m({"p1", "p2"}, {"g1", "g2", "g3"}, std::vector<float>(6, 0.5f));
    EXPECT_TRUE(validate_matrix(m, {"p1", "p2"}, {"g1", "g2", "g3"}).empty());
}

TEST(Validate, Violations) {
    const std::vector<std::string> p{"p1", "p2"}, g{"g1", "g2", "g3"};
    const SimilarityMatrix transposed(g, p, std::vector<float>(6, 0.0f));
    const auto t = validate_matrix(transposed, p, g);
    ASSERT_FALSE(t.empty());
    EXPECT_TRUE(contains(t.front(), "shape")) << t.front();

    const SimilarityMatrix missing(p, {"g1", "g3"}, std::vector<float>(4, 0.0f));
    bool named = false;
    for (const auto& v : validate_matrix(missing, p, g))
        named = named || (contains(v, "missing") && contains(v, "'g2'"));
    EXPECT_TRUE(named);

    const SimilarityMatrix reordered(p, {"g2", "g1", "g3"}, std::vector<float>(6, 0.0f));
    const auto r = validate_matrix(reordered, p, g);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_TRUE(contains(r[0], "order")) << r[0];

    std::vector<float> s(6, 0.0f);
    s[4] = std::numeric_limits<float>::quiet_NaN();
    const auto n = validate_matrix(SimilarityMatrix(p, g, s), p, g);
    ASSERT_EQ(n.size(), 1u);
    EXPECT_TRUE(contains(n[0], "'p2'") && contains(n[0], "'g2'")) << n[0];
}

TEST(Validate, SequesteredShaped500) {
    Rng rng(71);
    std::vector<std::string> ids;
    std::vector<ImageRecord> records;
    for (int i = 0; i < 500; ++i) {
        records.push_back(rec("q" + std::to_string(i), "Q" + std::to_string(i / 5), Split::sequestered));
        ids.push_back(records.back().image_id);
    }
    const DatasetManifest m("seq", records);
    const auto probes = ids_of(derive_probes(m, Split::sequestered));
    const auto gallery = ids_of(gallery_records(m, Split::sequestered));
    ASSERT_EQ(probes.size(), 500u);
    const SimilarityMatrix sm(probes, gallery, fixtures::random_vector(rng, 500 * 500, -1.0, 1.0));
    const auto dir = fixtures::scratch_dir("seq500");
    write_matrix(dir / "s.esm", sm);
    const auto back = read_matrix(dir / "s.esm");
    EXPECT_EQ(back.rows(), 500u);
    EXPECT_EQ(back.cols(), 500u);
    EXPECT_TRUE(validate_matrix(back, probes, gallery).empty());
}
