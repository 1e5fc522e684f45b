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

#include <set>

#include <gtest/gtest.h>

#include "earbench/synth.hpp"

using namespace earbench;

TEST(Synth, ShapeAndIds) {
    const auto d = make_synthetic({});
    ASSERT_EQ(d.manifest.records().size(), 100u);
    ASSERT_EQ(d.images.size(), 100u);
    EXPECT_EQ(d.manifest.name(), "synthetic");
    EXPECT_EQ(d.manifest.records().front().image_id, "s000_00");
    EXPECT_EQ(d.manifest.records().front().subject_id, "S000");
    EXPECT_EQ(d.manifest.records().back().image_id, "s019_04");
    EXPECT_EQ(d.manifest.records().back().path, "images/s019_04.png");
    std::set<std::string> subjects;
    for (std::size_t i = 0; i < d.images.size(); ++i) {
        const auto& r = d.manifest.records()[i];
        EXPECT_EQ(d.images[i].width(), 96);
        EXPECT_EQ(d.images[i].height(), 128);
        EXPECT_EQ(r.width, 96);
        EXPECT_EQ(r.height, 128);
        EXPECT_EQ(r.split, Split::test);
        EXPECT_TRUE(r.annotations.count("gender"));
        EXPECT_TRUE(r.annotations.count("occlusion"));
        subjects.insert(r.subject_id);
    }
    EXPECT_EQ(subjects.size(), 20u);
}

TEST(Synth, GenderIsPerSubject) {
    const auto d = make_synthetic({});
    std::map<std::string, std::string> g;
    for (const auto& r : d.manifest.records()) {
        auto [it, fresh] = g.emplace(r.subject_id, r.annotations.at("gender"));
        EXPECT_EQ(it->second, r.annotations.at("gender"));
    }
}

TEST(Synth, DeterministicInSeed) {
    SynthParams p;
    p.subjects = 4;
    p.images_per = 3;
    const auto a = make_synthetic(p), b = make_synthetic(p);
    EXPECT_EQ(a.images, b.images);
    EXPECT_EQ(a.manifest.records(), b.manifest.records());
    p.seed = 2;
    EXPECT_NE(make_synthetic(p).images, a.images);
}

TEST(Synth, ImagesOfOneSubjectDiffer) {
    SynthParams p;
    p.subjects = 2;
    p.images_per = 3;
    const auto d = make_synthetic(p);
    EXPECT_NE(d.images[0], d.images[1]);
    EXPECT_NE(d.images[0], d.images[3]);
}

TEST(Synth, InvalidParameters) {
    SynthParams p;
    p.subjects = 0;
    EXPECT_THROW(make_synthetic(p), DataError);
    p = {};
    p.images_per = 0;
    EXPECT_THROW(make_synthetic(p), DataError);
    p = {};
    p.width = 4;
    EXPECT_THROW(make_synthetic(p), DataError);
}
