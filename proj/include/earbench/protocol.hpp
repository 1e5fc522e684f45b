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

#ifndef EARBENCH_PROTOCOL_HPP
#define EARBENCH_PROTOCOL_HPP

#include <algorithm>
#include <bit>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "feature_vector.hpp"
#include "matching.hpp"
#include "rng.hpp"

namespace earbench {

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

enum class Split { train, test, sequestered };

inline std::string_view to_string(Split s) {
    switch (s) {
    case Split::train: return "train";
    case Split::test: return "test";
    case Split::sequestered: return "sequestered";
    }
    return "?";
}

inline Split parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    if (s == "sequestered") return Split::sequestered;
    throw DataError("unknown split '" + std::string(s) + "' (expected train, test or sequestered)");
}

struct ImageRecord {
    std::string image_id;
    std::string path;
    std::string subject_id;
    Split split = Split::test;
    std::optional<int> width;
    std::optional<int> height;
    std::map<std::string, std::string> annotations;

    bool operator==(const ImageRecord&) const = default;
};

// Immutable, validated list of image records. Relative record paths are
// resolved against base_dir (the manifest file's directory).
class DatasetManifest {
public:
    DatasetManifest() = default;

    DatasetManifest(std::string name, std::vector<ImageRecord> records, std::filesystem::path base_dir = {})
        : name_(std::move(name)), records_(std::move(records)), base_dir_(std::move(base_dir)) {
        std::map<std::string, std::size_t, std::less<>> subjects_train, subjects_test;
        for (std::size_t i = 0; i < records_.size(); ++i) {
            const ImageRecord& r = records_[i];
            if (r.image_id.empty())
                throw DataError("record " + std::to_string(i + 1) + " has an empty image_id");
            if (r.subject_id.empty())
                throw DataError("image '" + r.image_id + "' has an empty subject_id");
            if ((r.width && *r.width <= 0) || (r.height && *r.height <= 0))
                throw DataError("image '" + r.image_id + "' has non-positive dimensions");
            if (!index_.emplace(r.image_id, i).second)
                throw DataError("duplicate image_id '" + r.image_id + "'");
            if (r.split == Split::train)
                subjects_train[r.subject_id]++;
            else if (r.split == Split::test)
                subjects_test[r.subject_id]++;
        }
        for (const auto& [s, n] : subjects_train)
            if (subjects_test.count(s))
                throw DataError("subject '" + s + "' appears in both train and test splits");
    }

    const std::string& name() const noexcept { return name_; }
    const std::vector<ImageRecord>& records() const noexcept { return records_; }
    const std::filesystem::path& base_dir() const noexcept { return base_dir_; }

    const ImageRecord* find(std::string_view image_id) const {
        auto it = index_.find(std::string(image_id));
        return it == index_.end() ? nullptr : &records_[it->second];
    }

    const ImageRecord& at(std::string_view image_id) const {
        const ImageRecord* r = find(image_id);
        if (!r)
            throw DataError("image '" + std::string(image_id) + "' is not in the manifest");
        return *r;
    }

    std::filesystem::path resolve(const ImageRecord& r) const {
        std::filesystem::path p(r.path);
        return p.is_absolute() ? p : base_dir_ / p;
    }

    std::vector<std::string> annotation_keys() const {
        std::set<std::string> keys;
        for (const auto& r : records_)
            for (const auto& [k, v] : r.annotations)
                keys.insert(k);
        return {keys.begin(), keys.end()};
    }

private:
    std::string name_;
    std::vector<ImageRecord> records_;
    std::filesystem::path base_dir_;
    std::unordered_map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Small file helpers
// ---------------------------------------------------------------------------

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad())
        throw IoError("error reading '" + path.string() + "'");
    return std::move(ss).str();
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out)
        throw IoError("error writing '" + path.string() + "'");
}

// Minimal RFC 4180 reader: quoted fields, "" escapes, CRLF tolerant.
// Returns (1-based line number, fields) per non-empty record.
inline std::vector<std::pair<std::size_t, std::vector<std::string>>> parse_csv(std::string_view text,
                                                                              const std::string& source) {
    std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false, any = false;
    std::size_t line = 1, start_line = 1;
    auto end_record = [&] {
        if (any || !field.empty() || !fields.empty()) {
            fields.push_back(std::move(field));
            rows.emplace_back(start_line, std::move(fields));
        }
        fields.clear();
        field.clear();
        any = false;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n')
                    ++line;
                field += c;
            }
            continue;
        }
        switch (c) {
        case '"':
            if (!field.empty())
                throw FormatError(source + ":" + std::to_string(line) + ": stray quote inside field");
            quoted = any = true;
            break;
        case ',':
            fields.push_back(std::move(field));
            field.clear();
            any = true;
            break;
        case '\r':
            break;
        case '\n':
            end_record();
            ++line;
            start_line = line;
            break;
        default:
            field += c;
            any = true;
        }
    }
    if (quoted)
        throw FormatError(source + ":" + std::to_string(start_line) + ": unterminated quoted field");
    end_record();
    return rows;
}

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos)
        return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::optional<long long> parse_int(std::string_view s) {
    if (s.empty())
        return std::nullopt;
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        return std::nullopt;
    return v;
}

// Accepts finite decimal numbers only; "nan", "inf" and garbage yield nullopt.
inline std::optional<double> parse_finite(std::string_view s) {
    while (!s.empty() && s.front() == ' ')
        s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ')
        s.remove_suffix(1);
    if (s.empty())
        return std::nullopt;
    std::string tmp(s);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(tmp.c_str(), &end);
    if (end != tmp.c_str() + tmp.size() || !std::isfinite(v))
        return std::nullopt;
    return v;
}

inline std::string format_g9(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline bool has_extension(const std::filesystem::path& p, std::string_view ext) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
    return e == ext;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Manifest I/O
// ---------------------------------------------------------------------------

inline constexpr std::string_view manifest_fixed_columns[] = {"image_id", "path", "subject_id",
                                                              "split",    "width", "height"};

inline DatasetManifest parse_manifest_csv(std::string_view text, const std::string& source,
                                          std::filesystem::path base_dir = {}) {
    const auto rows = detail::parse_csv(text, source);
    if (rows.empty())
        throw FormatError(source + ": empty manifest");
    const auto& header = rows.front().second;
    for (std::size_t i = 0; i < std::size(manifest_fixed_columns); ++i)
        if (i >= header.size() || header[i] != manifest_fixed_columns[i])
            throw FormatError(source + ":1: header must start with image_id,path,subject_id,split,width,height");

    std::vector<ImageRecord> records;
    records.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& [line, f] = rows[r];
        const std::string where = source + ":" + std::to_string(line) + ": ";
        if (f.size() != header.size())
            throw FormatError(where + "expected " + std::to_string(header.size()) + " fields, got " +
                              std::to_string(f.size()));
        ImageRecord rec;
        rec.image_id = f[0];
        rec.path = f[1];
        rec.subject_id = f[2];
        if (rec.image_id.empty() || rec.subject_id.empty())
            throw FormatError(where + "image_id and subject_id are required");
        try {
            rec.split = parse_split(f[3]);
        } catch (const DataError& e) {
            throw FormatError(where + e.what());
        }
        for (int k : {4, 5}) {
            if (f[k].empty())
                continue;
            const auto v = detail::parse_int(f[k]);
            if (!v || *v <= 0 || *v > INT32_MAX)
                throw FormatError(where + "invalid " + header[k] + " '" + f[k] + "'");
            (k == 4 ? rec.width : rec.height) = static_cast<int>(*v);
        }
        for (std::size_t c = std::size(manifest_fixed_columns); c < header.size(); ++c)
            if (!f[c].empty())
                rec.annotations[header[c]] = f[c];
        records.push_back(std::move(rec));
    }
    return DatasetManifest(source, std::move(records), std::move(base_dir));
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j, const std::string& source,
                                          std::filesystem::path base_dir = {}) {
    try {
        std::vector<ImageRecord> records;
        for (const auto& r : j.at("records")) {
            ImageRecord rec;
            rec.image_id = r.at("image_id").get<std::string>();
            rec.path = r.value("path", std::string{});
            rec.subject_id = r.at("subject_id").get<std::string>();
            rec.split = parse_split(r.at("split").get<std::string>());
            if (r.contains("width") && !r["width"].is_null())
                rec.width = r["width"].get<int>();
            if (r.contains("height") && !r["height"].is_null())
                rec.height = r["height"].get<int>();
            if (r.contains("annotations"))
                for (const auto& [k, v] : r["annotations"].items())
                    rec.annotations[k] = v.is_string() ? v.get<std::string>() : v.dump();
            records.push_back(std::move(rec));
        }
        return DatasetManifest(j.value("name", source), std::move(records), std::move(base_dir));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(source + ": " + e.what());
    }
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
    const std::string text = detail::read_file(path);
    const auto base = path.parent_path();
    if (detail::has_extension(path, ".json")) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(path.string() + ": " + e.what());
        }
        return manifest_from_json(j, path.string(), base);
    }
    return parse_manifest_csv(text, path.string(), base);
}

inline std::string manifest_to_csv(const DatasetManifest& m) {
    const auto keys = m.annotation_keys();
    std::string out = "image_id,path,subject_id,split,width,height";
    for (const auto& k : keys)
        out += "," + detail::csv_field(k);
    out += "\n";
    for (const auto& r : m.records()) {
        out += detail::csv_field(r.image_id) + "," + detail::csv_field(r.path) + "," +
               detail::csv_field(r.subject_id) + "," + std::string(to_string(r.split)) + "," +
               (r.width ? std::to_string(*r.width) : "") + "," + (r.height ? std::to_string(*r.height) : "");
        for (const auto& k : keys) {
            auto it = r.annotations.find(k);
            out += "," + (it == r.annotations.end() ? std::string{} : detail::csv_field(it->second));
        }
        out += "\n";
    }
    return out;
}

inline nlohmann::json manifest_to_json(const DatasetManifest& m) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : m.records()) {
        nlohmann::json j{{"image_id", r.image_id},
                         {"path", r.path},
                         {"subject_id", r.subject_id},
                         {"split", std::string(to_string(r.split))}};
        if (r.width)
            j["width"] = *r.width;
        if (r.height)
            j["height"] = *r.height;
        if (!r.annotations.empty())
            j["annotations"] = r.annotations;
        records.push_back(std::move(j));
    }
    return {{"name", m.name()}, {"records", std::move(records)}};
}

inline void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
    if (detail::has_extension(path, ".json"))
        detail::write_file(path, manifest_to_json(m).dump(2) + "\n");
    else
        detail::write_file(path, manifest_to_csv(m));
}

// ---------------------------------------------------------------------------
// Splits and probes
// ---------------------------------------------------------------------------

inline std::vector<ImageRecord> gallery_records(const DatasetManifest& m, Split split) {
    std::vector<ImageRecord> out;
    for (const auto& r : m.records())
        if (r.split == split)
            out.push_back(r);
    if (out.empty())
        throw DataError("split '" + std::string(to_string(split)) + "' has no records");
    return out;
}

// Records of the split whose subject has at least two images in it, in
// manifest order. The gallery is the whole split.
inline std::vector<ImageRecord> derive_probes(const DatasetManifest& m, Split split) {
    const auto gallery = gallery_records(m, split);
    std::unordered_map<std::string, std::size_t> count;
    for (const auto& r : gallery)
        count[r.subject_id]++;
    std::vector<ImageRecord> out;
    for (const auto& r : gallery)
        if (count[r.subject_id] >= 2)
            out.push_back(r);
    return out;
}

inline std::vector<std::string> ids_of(const std::vector<ImageRecord>& records) {
    std::vector<std::string> ids;
    ids.reserve(records.size());
    for (const auto& r : records)
        ids.push_back(r.image_id);
    return ids;
}

// ---------------------------------------------------------------------------
// Label noise
// ---------------------------------------------------------------------------

struct LabelSwap {
    std::string image_id;
    std::string original_subject;
    std::string assigned_subject;

    bool operator==(const LabelSwap&) const = default;
};

struct NoiseRecord {
    std::uint64_t seed = 0;
    double fraction = 0.0;
    std::vector<LabelSwap> swaps;

    bool operator==(const NoiseRecord&) const = default;
};

struct NoisyManifest {
    DatasetManifest manifest;
    NoiseRecord noise;
};

// Relabels ceil(fraction * |test|) test records, each to a different test
// subject drawn uniformly. Deterministic in the seed.
inline NoisyManifest inject_label_noise(const DatasetManifest& m, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw DataError("noise fraction must lie in (0, 1)");
    std::vector<std::size_t> test;
    std::set<std::string> subject_set;
    for (std::size_t i = 0; i < m.records().size(); ++i)
        if (m.records()[i].split == Split::test) {
            test.push_back(i);
            subject_set.insert(m.records()[i].subject_id);
        }
    if (subject_set.size() < 2)
        throw DataError("label noise needs at least 2 test subjects");
    const std::vector<std::string> subjects(subject_set.begin(), subject_set.end());

    const auto n = test.size();
    const auto count = std::min<std::size_t>(
        n, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9)));

    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i)
        std::swap(test[i], test[i + rng.below(n - i)]);
    std::vector<std::size_t> chosen(test.begin(), test.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(chosen.begin(), chosen.end());

    std::vector<ImageRecord> records = m.records();
    NoiseRecord noise{seed, fraction, {}};
    for (std::size_t idx : chosen) {
        ImageRecord& r = records[idx];
        const auto pos = static_cast<std::uint64_t>(
            std::lower_bound(subjects.begin(), subjects.end(), r.subject_id) - subjects.begin());
        std::uint64_t pick = rng.below(subjects.size() - 1);
        if (pick >= pos)
            ++pick;
        noise.swaps.push_back({r.image_id, r.subject_id, subjects[pick]});
        r.subject_id = subjects[pick];
    }
    return {DatasetManifest(m.name(), std::move(records), m.base_dir()), std::move(noise)};
}

// Undoes inject_label_noise using its ledger.
inline DatasetManifest restore_labels(const DatasetManifest& noisy, const NoiseRecord& noise) {
    std::vector<ImageRecord> records = noisy.records();
    std::unordered_map<std::string, const LabelSwap*> by_id;
    for (const auto& s : noise.swaps)
        if (!by_id.emplace(s.image_id, &s).second)
            throw DataError("noise ledger lists '" + s.image_id + "' twice");
    std::size_t applied = 0;
    for (auto& r : records) {
        auto it = by_id.find(r.image_id);
        if (it == by_id.end())
            continue;
        if (r.subject_id != it->second->assigned_subject)
            throw DataError("noise ledger does not match manifest for '" + r.image_id + "'");
        r.subject_id = it->second->original_subject;
        ++applied;
    }
    if (applied != by_id.size())
        throw DataError("noise ledger references images missing from the manifest");
    return DatasetManifest(noisy.name(), std::move(records), noisy.base_dir());
}

inline nlohmann::json noise_to_json(const NoiseRecord& n) {
    nlohmann::json swaps = nlohmann::json::array();
    for (const auto& s : n.swaps)
        swaps.push_back({{"image_id", s.image_id},
                         {"original_subject", s.original_subject},
                         {"assigned_subject", s.assigned_subject}});
    return {{"seed", n.seed}, {"fraction", n.fraction}, {"swaps", std::move(swaps)}};
}

inline NoiseRecord noise_from_json(const nlohmann::json& j) {
    try {
        NoiseRecord n;
        n.seed = j.at("seed").get<std::uint64_t>();
        n.fraction = j.value("fraction", 0.0);
        for (const auto& s : j.at("swaps")) {
            LabelSwap sw{s.at("image_id").get<std::string>(), s.at("original_subject").get<std::string>(),
                         s.at("assigned_subject").get<std::string>()};
            if (sw.original_subject == sw.assigned_subject)
                throw DataError("noise ledger swap for '" + sw.image_id + "' does not change the label");
            n.swaps.push_back(std::move(sw));
        }
        return n;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("noise ledger: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Binary encoding helpers (little-endian)
// ---------------------------------------------------------------------------

namespace detail {

class ByteWriter {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i)
            buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void bytes(std::string_view s) { buf_.append(s); }
    void str(std::string_view s) {
        if (s.size() > UINT32_MAX)
            throw DataError("string too long for a u32 length prefix");
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s);
    }
    const std::string& data() const noexcept { return buf_; }

private:
    std::string buf_;
};

class ByteReader {
public:
    ByteReader(std::string_view data, std::string source) : data_(data), source_(std::move(source)) {}

    std::uint32_t u32() {
        need(4, "integer");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string_view bytes(std::size_t n, const char* what) {
        need(n, what);
        auto s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::string str() {
        const auto n = u32();
        return std::string(bytes(n, "string"));
    }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    void finish() const {
        if (remaining() != 0)
            throw FormatError(source_ + ": " + std::to_string(remaining()) + " trailing bytes");
    }

private:
    void need(std::size_t n, const char* what) const {
        if (data_.size() - pos_ < n)
            throw FormatError(source_ + ": truncated file while reading " + what);
    }

    std::string_view data_;
    std::string source_;
    std::size_t pos_ = 0;
};

} // namespace detail

// ---------------------------------------------------------------------------
// EFV1 feature files
//   "EFV1" | str descriptor_id | u32 dim | u32 count |
//   count x (str image_id | dim x f32)
// str = u32 byte length + UTF-8 bytes; all integers and floats little-endian.
// ---------------------------------------------------------------------------

inline constexpr std::string_view efv1_magic = "EFV1";

inline std::string encode_features(const std::vector<FeatureVector>& vectors) {
    const std::string descriptor = vectors.empty() ? std::string{} : vectors.front().descriptor_id;
    const std::size_t dim = vectors.empty() ? 0 : vectors.front().dim();
    for (const auto& v : vectors) {
        if (v.dim() != dim)
            throw DataError("feature '" + v.image_id + "' has dimension " + std::to_string(v.dim()) + ", expected " +
                            std::to_string(dim));
        if (v.descriptor_id != descriptor)
            throw DataError("feature '" + v.image_id + "' has descriptor '" + v.descriptor_id + "', expected '" +
                            descriptor + "'");
    }
    if (dim > UINT32_MAX || vectors.size() > UINT32_MAX)
        throw DataError("feature set too large for EFV1");
    detail::ByteWriter w;
    w.bytes(efv1_magic);
    w.str(descriptor);
    w.u32(static_cast<std::uint32_t>(dim));
    w.u32(static_cast<std::uint32_t>(vectors.size()));
    for (const auto& v : vectors) {
        w.str(v.image_id);
        for (float x : v.values)
            w.f32(x);
    }
    return w.data();
}

inline std::vector<FeatureVector> decode_features(std::string_view data, const std::string& source) {
    detail::ByteReader r(data, source);
    if (data.size() < 4 || data.substr(0, 4) != efv1_magic)
        throw FormatError(source + ": not an EFV1 feature file (bad magic)");
    r.bytes(4, "magic");
    const std::string descriptor = r.str();
    const std::uint32_t dim = r.u32();
    const std::uint32_t count = r.u32();
    std::vector<FeatureVector> out;
    // Each record needs at least 4 + 4*dim bytes; refuse absurd counts early.
    if (static_cast<std::uint64_t>(count) * (4 + 4ull * dim) > r.remaining())
        throw FormatError(source + ": truncated file (" + std::to_string(count) + " records of dimension " +
                          std::to_string(dim) + " declared)");
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        FeatureVector f{descriptor, r.str(), {}};
        f.values.resize(dim);
        for (auto& v : f.values)
            v = r.f32();
        out.push_back(std::move(f));
    }
    r.finish();
    return out;
}

inline void write_features(const std::filesystem::path& path, const std::vector<FeatureVector>& vectors) {
    detail::write_file(path, encode_features(vectors));
}

inline std::vector<FeatureVector> read_features(const std::filesystem::path& path) {
    return decode_features(detail::read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Similarity matrix files
//   ESM1: "ESM1" | u32 rows | u32 cols | rows x str | cols x str |
//         rows*cols x f32 (row-major)
//   CSV:  ",g1,g2,..." then "p,s11,s12,..." with %.9g scores
// ---------------------------------------------------------------------------

enum class MatrixFormat { csv, binary };

inline constexpr std::string_view esm1_magic = "ESM1";

namespace detail {
inline void require_finite(const SimilarityMatrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            if (!std::isfinite(m(i, j)))
                throw DataError("non-finite score at probe '" + m.probe_ids()[i] + "', gallery '" +
                                m.gallery_ids()[j] + "'");
}
} // namespace detail

inline std::string encode_matrix_binary(const SimilarityMatrix& m) {
    detail::require_finite(m);
    if (m.rows() > UINT32_MAX || m.cols() > UINT32_MAX)
        throw DataError("matrix too large for ESM1");
    detail::ByteWriter w;
    w.bytes(esm1_magic);
    w.u32(static_cast<std::uint32_t>(m.rows()));
    w.u32(static_cast<std::uint32_t>(m.cols()));
    for (const auto& id : m.probe_ids())
        w.str(id);
    for (const auto& id : m.gallery_ids())
        w.str(id);
    for (float s : m.scores())
        w.f32(s);
    return w.data();
}

inline std::string encode_matrix_csv(const SimilarityMatrix& m) {
    detail::require_finite(m);
    std::string out;
    for (const auto& g : m.gallery_ids())
        out += "," + detail::csv_field(g);
    out += "\n";
    for (std::size_t i = 0; i < m.rows(); ++i) {
        out += detail::csv_field(m.probe_ids()[i]);
        for (float s : m.row(i))
            out += "," + detail::format_g9(s);
        out += "\n";
    }
    return out;
}

inline SimilarityMatrix decode_matrix_binary(std::string_view data, const std::string& source) {
    detail::ByteReader r(data, source);
    if (r.bytes(4, "magic") != esm1_magic)
        throw FormatError(source + ": not an ESM1 matrix file (bad magic)");
    const std::uint32_t rows = r.u32(), cols = r.u32();
    std::vector<std::string> pids, gids;
    if (static_cast<std::uint64_t>(rows) * 4 + static_cast<std::uint64_t>(cols) * 4 +
            static_cast<std::uint64_t>(rows) * cols * 4 >
        r.remaining())
        throw FormatError(source + ": truncated file (" + std::to_string(rows) + "x" + std::to_string(cols) +
                          " declared)");
    pids.reserve(rows);
    gids.reserve(cols);
    for (std::uint32_t i = 0; i < rows; ++i)
        pids.push_back(r.str());
    for (std::uint32_t j = 0; j < cols; ++j)
        gids.push_back(r.str());
    std::vector<float> scores(static_cast<std::size_t>(rows) * cols);
    for (auto& s : scores)
        s = r.f32();
    r.finish();
    SimilarityMatrix m(std::move(pids), std::move(gids), std::move(scores));
    detail::require_finite(m);
    return m;
}

inline SimilarityMatrix decode_matrix_csv(std::string_view text, const std::string& source) {
    const auto rows = detail::parse_csv(text, source);
    if (rows.empty())
        throw FormatError(source + ": empty matrix file");
    const auto& header = rows.front().second;
    if (header.empty() || !header.front().empty())
        throw FormatError(source + ":1: first header cell must be empty");
    std::vector<std::string> gids(header.begin() + 1, header.end());
    std::vector<std::string> pids;
    std::vector<float> scores;
    scores.reserve((rows.size() - 1) * gids.size());
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& [line, f] = rows[r];
        if (f.size() != header.size())
            throw FormatError(source + ":" + std::to_string(line) + ": ragged row (" + std::to_string(f.size()) +
                              " fields, expected " + std::to_string(header.size()) + ")");
        pids.push_back(f[0]);
        for (std::size_t c = 1; c < f.size(); ++c) {
            const auto v = detail::parse_finite(f[c]);
            if (!v)
                throw FormatError(source + ":" + std::to_string(line) + ": invalid score '" + f[c] + "' at row " +
                                  std::to_string(r) + " (probe '" + f[0] + "'), column " + std::to_string(c) +
                                  " (gallery '" + gids[c - 1] + "')");
            scores.push_back(static_cast<float>(*v));
        }
    }
    SimilarityMatrix m(std::move(pids), std::move(gids), std::move(scores));
    detail::require_finite(m); // float overflow of huge decimal values
    return m;
}

inline MatrixFormat matrix_format_for(const std::filesystem::path& path) {
    return detail::has_extension(path, ".csv") ? MatrixFormat::csv : MatrixFormat::binary;
}

inline void write_matrix(const std::filesystem::path& path, const SimilarityMatrix& m, MatrixFormat format) {
    detail::write_file(path, format == MatrixFormat::csv ? encode_matrix_csv(m) : encode_matrix_binary(m));
}

inline void write_matrix(const std::filesystem::path& path, const SimilarityMatrix& m) {
    write_matrix(path, m, matrix_format_for(path));
}

// Format is detected from the content: ESM1 magic, otherwise CSV.
inline SimilarityMatrix read_matrix(const std::filesystem::path& path) {
    const std::string data = detail::read_file(path);
    if (data.size() >= 4 && std::string_view(data).substr(0, 4) == esm1_magic)
        return decode_matrix_binary(data, path.string());
    return decode_matrix_csv(data, path.string());
}

// ---------------------------------------------------------------------------
// Submission validation
// ---------------------------------------------------------------------------

// Lists every disagreement between a matrix and the expected probe/gallery
// id lists (shape, id sets, order, non-finite scores). Empty means valid.
inline std::vector<std::string> validate_matrix(const SimilarityMatrix& m, const std::vector<std::string>& probes,
                                                const std::vector<std::string>& gallery) {
    std::vector<std::string> v;
    if (m.rows() != probes.size() || m.cols() != gallery.size())
        v.push_back("shape: expected " + std::to_string(probes.size()) + "x" + std::to_string(gallery.size()) +
                    ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));

    auto compare = [&](const std::vector<std::string>& expected, const std::vector<std::string>& actual,
                       const std::string& what) {
        const std::set<std::string_view> e(expected.begin(), expected.end()), a(actual.begin(), actual.end());
        bool sets_differ = false;
        for (const auto& id : expected)
            if (!a.count(id)) {
                v.push_back("missing " + what + " id '" + id + "'");
                sets_differ = true;
            }
        for (const auto& id : actual)
            if (!e.count(id)) {
                v.push_back("unexpected " + what + " id '" + id + "'");
                sets_differ = true;
            }
        if (!sets_differ && expected != actual) {
            for (std::size_t i = 0; i < expected.size(); ++i)
                if (expected[i] != actual[i]) {
                    v.push_back(what + " order differs at position " + std::to_string(i) + ": expected '" +
                                expected[i] + "', got '" + actual[i] + "'");
                    break;
                }
        }
    };
    compare(probes, m.probe_ids(), "probe");
    compare(gallery, m.gallery_ids(), "gallery");

    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            if (!std::isfinite(m(i, j)))
                v.push_back("non-finite score at probe '" + m.probe_ids()[i] + "', gallery '" +
                            m.gallery_ids()[j] + "'");
    return v;
}

} // namespace earbench

#endif
