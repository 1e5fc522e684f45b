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

#ifndef EARBENCH_DESCRIPTORS_HPP
#define EARBENCH_DESCRIPTORS_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "feature_vector.hpp"
#include "image.hpp"
#include "wavelet.hpp"

namespace earbench {

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

struct LbpParams {
    int radius = 2;
    int neighbors = 8;
    int patch = 16;
    int stride = 4;

    void validate() const {
        if (radius <= 0)
            throw DataError("LBP radius must be positive");
        if (neighbors != 8)
            throw DataError("uniform-59 LBP mapping requires 8 neighbours");
        if (patch < 2 * radius + 1)
            throw DataError("LBP patch must be at least 2R+1 pixels");
        if (stride < 1)
            throw DataError("LBP stride must be >= 1");
    }
};

struct HogParams {
    int cell = 8;
    int block = 2; // cells per block side
    int bins = 9;
    bool signed_orientation = false;
};

struct PhogParams {
    int levels = 2; // pyramid levels beyond the whole-image level
    int bins = 8;
    bool signed_orientation = false;

    void validate() const {
        if (levels < 0)
            throw DataError("PHOG levels must be >= 0");
        if (bins < 2)
            throw DataError("PHOG needs at least 2 orientation bins");
    }
};

struct IflbpParams {
    double width = 5.0;  // triangular membership half-width F, in intensity units
    double lambda = 2.0; // Sugeno complement parameter

    void validate() const {
        if (!(width > 0.0))
            throw DataError("IFLBP fuzzification width must be positive");
        // Sugeno non-membership exceeds 1 - mu when lambda < 0, which would
        // make the hesitation degree negative.
        if (!(lambda >= 0.0))
            throw DataError("IFLBP Sugeno lambda must be >= 0");
    }
};

struct BiorParams {
    int levels = 4;
    int block_rows = 3;
    int block_cols = 2;
    int block_size = 32; // blocks are resized to block_size x block_size

    void validate() const {
        if (levels < 1)
            throw DataError("BIOR levels must be >= 1");
        if (block_rows < 1 || block_cols < 1)
            throw DataError("BIOR block grid must be at least 1x1");
        if (block_size < (1 << levels))
            throw DataError("BIOR block size must be >= 2^levels");
    }
};

struct FuzzyMembership {
    double membership;
    double non_membership;
    double hesitation;
};

// Intuitionistic fuzzy set from a membership degree via the Sugeno
// complement nu = (1 - mu) / (1 + lambda mu).
inline FuzzyMembership intuitionistic(double mu, double lambda) {
    const double nu = (1.0 - mu) / (1.0 + lambda * mu);
    return {mu, nu, 1.0 - mu - nu};
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

namespace detail {

inline int circular_transitions(unsigned code, int bits) {
    int t = 0;
    for (int k = 0; k < bits; ++k) {
        const unsigned a = (code >> k) & 1u;
        const unsigned b = (code >> ((k + 1) % bits)) & 1u;
        t += a != b;
    }
    return t;
}

// 8-bit code -> uniform bin (0..57 in code order), non-uniform -> 58.
inline const std::array<std::uint8_t, 256>& uniform_lbp_table() {
    static const auto table = [] {
        std::array<std::uint8_t, 256> t{};
        std::uint8_t next = 0;
        for (unsigned c = 0; c < 256; ++c)
            t[c] = circular_transitions(c, 8) <= 2 ? next++ : 58;
        return t;
    }();
    return table;
}

struct Gradient {
    std::vector<double> magnitude;
    std::vector<double> angle; // degrees, in [0, range)
};

// Central differences with replicated borders.
inline Gradient gradients(const GrayImage& img, bool signed_orientation) {
    const int w = img.width(), h = img.height();
    const double range = signed_orientation ? 360.0 : 180.0;
    Gradient g;
    g.magnitude.resize(static_cast<std::size_t>(w) * h);
    g.angle.resize(g.magnitude.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double gx = static_cast<double>(img.clamped(x + 1, y)) - img.clamped(x - 1, y);
            const double gy = static_cast<double>(img.clamped(x, y + 1)) - img.clamped(x, y - 1);
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            g.magnitude[i] = std::hypot(gx, gy);
            double a = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
            a = std::fmod(a + 360.0, range);
            g.angle[i] = a >= range ? 0.0 : a;
        }
    }
    return g;
}

inline void l1_normalize(std::span<double> v) {
    double s = 0.0;
    for (double x : v)
        s += std::abs(x);
    if (s > 0.0)
        for (double& x : v)
            x /= s;
}

inline FeatureVector make_feature(std::string descriptor, std::string image_id, const std::vector<double>& values) {
    FeatureVector f{std::move(descriptor), std::move(image_id), {}};
    f.values.assign(values.begin(), values.end());
    return f;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Uniform LBP over sliding patches
// ---------------------------------------------------------------------------

inline std::size_t ulbp_patch_count(int width, int height, const LbpParams& p) {
    if (p.patch > width || p.patch > height)
        return 0;
    return static_cast<std::size_t>((width - p.patch) / p.stride + 1) *
           static_cast<std::size_t>((height - p.patch) / p.stride + 1);
}

// Circular uniform LBP (P = 8) histogrammed per patch. Neighbours lie at
// (R cos(2 pi k / P), -R sin(2 pi k / P)) and are bilinearly interpolated with
// 16-bit fixed-point weights; bit k is set iff the interpolated neighbour is
// >= the centre. The test is evaluated on integer differences so it is exact.
// Only pixels whose whole neighbourhood lies inside the patch are counted,
// and trailing partial windows are dropped.
inline FeatureVector extract_ulbp(const GrayImage& img, const LbpParams& p = {}, std::string image_id = {}) {
    p.validate();
    if (p.patch > img.width() || p.patch > img.height())
        throw DataError("LBP patch " + std::to_string(p.patch) + " larger than image " +
                        std::to_string(img.width()) + "x" + std::to_string(img.height()));

    struct Sample {
        int dx, dy;
        std::int64_t weight;
    };
    constexpr std::int64_t one = 1 << 16;
    std::vector<std::vector<Sample>> neighbours(static_cast<std::size_t>(p.neighbors));
    for (int k = 0; k < p.neighbors; ++k) {
        const double theta = 2.0 * std::numbers::pi * k / p.neighbors;
        auto snap = [](double v) { return std::abs(v - std::round(v)) < 1e-9 ? std::round(v) : v; };
        const double sx = snap(p.radius * std::cos(theta));
        const double sy = snap(-p.radius * std::sin(theta));
        const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
        const double fx = sx - x0, fy = sy - y0;
        std::array<Sample, 4> s{{{x0, y0, std::llround((1 - fx) * (1 - fy) * one)},
                                 {x0 + 1, y0, std::llround(fx * (1 - fy) * one)},
                                 {x0, y0 + 1, std::llround((1 - fx) * fy * one)},
                                 {x0 + 1, y0 + 1, std::llround(fx * fy * one)}}};
        std::int64_t total = 0;
        for (const auto& e : s)
            total += e.weight;
        std::max_element(s.begin(), s.end(), [](auto& a, auto& b) { return a.weight < b.weight; })->weight +=
            one - total;
        for (const auto& e : s)
            if (e.weight != 0)
                neighbours[k].push_back(e);
    }

    const int w = img.width(), h = img.height(), r = p.radius;
    const auto& table = detail::uniform_lbp_table();
    std::vector<std::uint8_t> bins(static_cast<std::size_t>(w) * h, 58);
    for (int y = r; y < h - r; ++y) {
        for (int x = r; x < w - r; ++x) {
            const int c = img(x, y);
            unsigned code = 0;
            for (int k = 0; k < p.neighbors; ++k) {
                std::int64_t d = 0;
                for (const auto& s : neighbours[k])
                    d += s.weight * (static_cast<int>(img(x + s.dx, y + s.dy)) - c);
                code |= static_cast<unsigned>(d >= 0) << k;
            }
            bins[static_cast<std::size_t>(y) * w + x] = table[code];
        }
    }

    const int nx = (w - p.patch) / p.stride + 1, ny = (h - p.patch) / p.stride + 1;
    std::vector<double> out(static_cast<std::size_t>(nx) * ny * 59, 0.0);
    std::size_t base = 0;
    for (int py = 0; py < ny; ++py) {
        for (int px = 0; px < nx; ++px, base += 59) {
            const int x0 = px * p.stride, y0 = py * p.stride;
            for (int y = y0 + r; y < y0 + p.patch - r; ++y)
                for (int x = x0 + r; x < x0 + p.patch - r; ++x)
                    out[base + bins[static_cast<std::size_t>(y) * w + x]] += 1.0;
        }
    }
    return detail::make_feature("ulbp", std::move(image_id), out);
}

// ---------------------------------------------------------------------------
// HOG
// ---------------------------------------------------------------------------

inline std::size_t hog_dim(int width, int height, const HogParams& p) {
    const int cx = width / p.cell, cy = height / p.cell;
    if (cx < p.block || cy < p.block)
        return 0;
    return static_cast<std::size_t>(cx - p.block + 1) * (cy - p.block + 1) * p.block * p.block * p.bins;
}

// Dalal-Triggs HOG: per-cell magnitude-weighted orientation histograms with
// linear interpolation between neighbouring bins (bin b centred on
// b * range / bins), L2-Hys normalised over overlapping blocks of cells.
inline FeatureVector extract_hog(const GrayImage& img, const HogParams& p = {}, std::string image_id = {}) {
    if (p.cell < 1 || p.block < 1 || p.bins < 2)
        throw DataError("HOG needs cell >= 1, block >= 1, bins >= 2");
    if (p.cell > img.width() || p.cell > img.height())
        throw DataError("HOG cell " + std::to_string(p.cell) + " larger than image " + std::to_string(img.width()) +
                        "x" + std::to_string(img.height()));
    const int cx = img.width() / p.cell, cy = img.height() / p.cell;
    if (cx < p.block || cy < p.block)
        throw DataError("HOG block of " + std::to_string(p.block) + " cells does not fit the image");

    const auto g = detail::gradients(img, p.signed_orientation);
    const double bin_width = (p.signed_orientation ? 360.0 : 180.0) / p.bins;
    std::vector<double> cells(static_cast<std::size_t>(cx) * cy * p.bins, 0.0);
    for (int y = 0; y < cy * p.cell; ++y) {
        for (int x = 0; x < cx * p.cell; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * img.width() + x;
            const double pos = g.angle[i] / bin_width;
            const int b0 = static_cast<int>(std::floor(pos));
            const double frac = pos - b0;
            double* hist = &cells[(static_cast<std::size_t>(y / p.cell) * cx + x / p.cell) * p.bins];
            hist[b0 % p.bins] += (1.0 - frac) * g.magnitude[i];
            hist[(b0 + 1) % p.bins] += frac * g.magnitude[i];
        }
    }

    const int bx = cx - p.block + 1, by = cy - p.block + 1;
    const std::size_t block_len = static_cast<std::size_t>(p.block) * p.block * p.bins;
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(bx) * by * block_len);
    std::vector<double> v(block_len);
    constexpr double eps = 1e-6;
    auto l2 = [&] {
        double s = 0.0;
        for (double a : v)
            s += a * a;
        const double n = std::sqrt(s + eps * eps);
        for (double& a : v)
            a /= n;
    };
    for (int j = 0; j < by; ++j) {
        for (int i = 0; i < bx; ++i) {
            std::size_t k = 0;
            for (int u = 0; u < p.block; ++u)
                for (int t = 0; t < p.block; ++t)
                    for (int b = 0; b < p.bins; ++b)
                        v[k++] = cells[(static_cast<std::size_t>(j + u) * cx + (i + t)) * p.bins + b];
            l2();
            for (double& a : v)
                a = std::min(a, 0.2);
            l2();
            out.insert(out.end(), v.begin(), v.end());
        }
    }
    return detail::make_feature("hog", std::move(image_id), out);
}

// ---------------------------------------------------------------------------
// PHOG
// ---------------------------------------------------------------------------

inline std::size_t phog_dim(const PhogParams& p) {
    std::size_t cells = 0;
    for (int l = 0; l <= p.levels; ++l)
        cells += std::size_t{1} << (2 * l);
    return cells * static_cast<std::size_t>(p.bins);
}

// Pyramid of orientation histograms: level l splits the image into
// 2^l x 2^l cells; each level's concatenated histograms are L1-normalised.
inline FeatureVector extract_phog(const GrayImage& img, const PhogParams& p = {}, std::string image_id = {}) {
    p.validate();
    const int finest = 1 << p.levels;
    if (img.width() < finest || img.height() < finest)
        throw DataError("image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                        " too small for " + std::to_string(p.levels) + " PHOG levels");

    const auto g = detail::gradients(img, p.signed_orientation);
    const double bin_width = (p.signed_orientation ? 360.0 : 180.0) / p.bins;
    std::vector<int> bin(g.angle.size());
    for (std::size_t i = 0; i < bin.size(); ++i)
        bin[i] = std::min(static_cast<int>(g.angle[i] / bin_width), p.bins - 1);

    std::vector<double> out;
    out.reserve(phog_dim(p));
    for (int l = 0; l <= p.levels; ++l) {
        const int n = 1 << l;
        std::vector<double> level(static_cast<std::size_t>(n) * n * p.bins, 0.0);
        for (int cyi = 0; cyi < n; ++cyi) {
            const Extent ey = tile_extent(img.height(), n, cyi);
            for (int cxi = 0; cxi < n; ++cxi) {
                const Extent ex = tile_extent(img.width(), n, cxi);
                double* hist = &level[(static_cast<std::size_t>(cyi) * n + cxi) * p.bins];
                for (int y = ey.begin; y < ey.end; ++y)
                    for (int x = ex.begin; x < ex.end; ++x) {
                        const std::size_t i = static_cast<std::size_t>(y) * img.width() + x;
                        hist[bin[i]] += g.magnitude[i];
                    }
            }
        }
        detail::l1_normalize(level);
        out.insert(out.end(), level.begin(), level.end());
    }
    return detail::make_feature("phog", std::move(image_id), out);
}

// ---------------------------------------------------------------------------
// Intuitionistic fuzzy LBP
// ---------------------------------------------------------------------------

// Probability-like weight that neighbour bit is 1 for difference d.
// Triangular membership mu1 = clamp((d + F) / 2F, 0, 1), mu0 = 1 - mu1; each
// is raised by its hesitation degree (mu' = mu + pi) and the pair is
// renormalised to sum to 1.
inline std::array<double, 2> iflbp_bit_weights(double d, const IflbpParams& p) {
    const double mu1 = std::clamp((d + p.width) / (2.0 * p.width), 0.0, 1.0);
    const FuzzyMembership one = intuitionistic(mu1, p.lambda);
    const FuzzyMembership zero = intuitionistic(1.0 - mu1, p.lambda);
    const double m1 = one.membership + one.hesitation;
    const double m0 = zero.membership + zero.hesitation;
    const double s = m1 + m0;
    return {m0 / s, m1 / s};
}

// 256-bin soft LBP histogram over interior pixels (3x3 neighbourhood, no
// interpolation). Each pixel spreads unit mass over all codes as the product
// of its per-bit weights. L1-normalised.
inline FeatureVector extract_iflbp(const GrayImage& img, const IflbpParams& p = {}, std::string image_id = {}) {
    p.validate();
    if (img.width() < 3 || img.height() < 3)
        throw DataError("IFLBP needs an image of at least 3x3");

    static constexpr int dx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
    static constexpr int dy[8] = {0, -1, -1, -1, 0, 1, 1, 1};

    std::vector<double> hist(256, 0.0);
    std::array<double, 256> dist{};
    for (int y = 1; y < img.height() - 1; ++y) {
        for (int x = 1; x < img.width() - 1; ++x) {
            const int c = img(x, y);
            dist[0] = 1.0;
            for (int k = 0; k < 8; ++k) {
                const auto wgt = iflbp_bit_weights(static_cast<double>(img(x + dx[k], y + dy[k])) - c, p);
                const unsigned span = 1u << k;
                for (unsigned code = 0; code < span; ++code) {
                    dist[code | span] = dist[code] * wgt[1];
                    dist[code] *= wgt[0];
                }
            }
            for (int code = 0; code < 256; ++code)
                hist[code] += dist[code];
        }
    }
    detail::l1_normalize(hist);
    return detail::make_feature("iflbp", std::move(image_id), hist);
}

// ---------------------------------------------------------------------------
// Bior4.4 block energy
// ---------------------------------------------------------------------------

inline std::size_t bior_dim(const BiorParams& p) {
    return static_cast<std::size_t>(p.block_rows) * p.block_cols * p.levels * 3;
}

// Splits the image into a rows x cols block grid, resizes every block to
// block_size^2, decomposes it and records the mean squared coefficient of
// each detail subband. Layout: block-major, then level (finest first), then
// orientation (horizontal, vertical, diagonal).
inline FeatureVector extract_bior_energy(const GrayImage& img, const BiorParams& p = {}, std::string image_id = {}) {
    p.validate();
    GrayImage src = img;
    if (src.width() < p.block_cols || src.height() < p.block_rows)
        src = resize_bilinear(src, std::max(src.width(), p.block_cols), std::max(src.height(), p.block_rows));

    static const BiorFilters filters = BiorFilters::bior44();
    const BlockGrid grid = partition_blocks(src, p.block_rows, p.block_cols);
    std::vector<double> out;
    out.reserve(bior_dim(p));
    for (const Block& b : grid.blocks) {
        const GrayImage block = resize_bilinear(b.image, p.block_size, p.block_size);
        const WaveletDecomposition dec = dwt2(to_matrix(block), filters, p.levels);
        for (const DetailBands& d : dec.details) {
            out.push_back(subband_energy(d.horizontal));
            out.push_back(subband_energy(d.vertical));
            out.push_back(subband_energy(d.diagonal));
        }
    }
    return detail::make_feature("bior", std::move(image_id), out);
}

} // namespace earbench

#endif
