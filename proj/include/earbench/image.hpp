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

#ifndef EARBENCH_IMAGE_HPP
#define EARBENCH_IMAGE_HPP

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "matrix.hpp"

namespace earbench {

// 8-bit single-channel raster, row-major.
class GrayImage {
public:
    GrayImage() = default;

    GrayImage(int width, int height, std::uint8_t fill = 0) : width_(width), height_(height) {
        if (width <= 0 || height <= 0)
            throw DataError("image dimensions must be positive, got " + std::to_string(width) + "x" +
                            std::to_string(height));
        pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }

    GrayImage(int width, int height, std::vector<std::uint8_t> pixels) : GrayImage(width, height) {
        if (pixels.size() != pixels_.size())
            throw DataError("pixel buffer has " + std::to_string(pixels.size()) + " entries, expected " +
                            std::to_string(pixels_.size()));
        pixels_ = std::move(pixels);
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return pixels_.empty(); }

    std::uint8_t operator()(int x, int y) const {
        assert(x >= 0 && x < width_ && y >= 0 && y < height_);
        return pixels_[static_cast<std::size_t>(y) * width_ + x];
    }
    std::uint8_t& operator()(int x, int y) {
        assert(x >= 0 && x < width_ && y >= 0 && y < height_);
        return pixels_[static_cast<std::size_t>(y) * width_ + x];
    }

    // Edge-replicating access.
    std::uint8_t clamped(int x, int y) const {
        return (*this)(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
    }

    std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }

    bool operator==(const GrayImage&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

// ITU-R BT.601 luma, rounded to nearest.
inline std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const double y = 0.299 * r + 0.587 * g + 0.114 * b;
    return static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
}

inline std::uint8_t saturate_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// Bilinear resampling with pixel-centre alignment: output sample x maps to
// source position (x + 0.5) * (W / w) - 0.5, clamped to the image. Positions
// and weights are exact rationals (denominator 2w), so the result is exact
// integer arithmetic, rounded half up; mirrored inputs give mirrored outputs.
inline GrayImage resize_bilinear(const GrayImage& img, int width, int height) {
    if (width <= 0 || height <= 0)
        throw DataError("resize target must be positive, got " + std::to_string(width) + "x" +
                        std::to_string(height));
    if (img.empty())
        throw DataError("cannot resize an empty image");
    if (width == img.width() && height == img.height())
        return img;

    struct Tap {
        int i0, i1;
        std::int64_t r; // weight of i1, out of 2 * dst
    };
    auto taps = [](int src, int dst) {
        std::vector<Tap> out(static_cast<std::size_t>(dst));
        const std::int64_t den = 2 * std::int64_t{dst};
        for (int i = 0; i < dst; ++i) {
            const std::int64_t num = (2 * std::int64_t{i} + 1) * src - dst;
            if (num <= 0)
                out[i] = {0, 0, 0};
            else if (num >= (src - 1) * den)
                out[i] = {src - 1, src - 1, 0};
            else
                out[i] = {static_cast<int>(num / den), static_cast<int>(num / den) + 1, num % den};
        }
        return out;
    };
    const auto tx = taps(img.width(), width);
    const auto ty = taps(img.height(), height);
    const std::int64_t dx = 2 * std::int64_t{width}, dy = 2 * std::int64_t{height};
    const std::int64_t den = dx * dy;

    GrayImage out(width, height);
    for (int y = 0; y < height; ++y) {
        const Tap& ry = ty[y];
        for (int x = 0; x < width; ++x) {
            const Tap& rx = tx[x];
            const std::int64_t top = img(rx.i0, ry.i0) * (dx - rx.r) + img(rx.i1, ry.i0) * rx.r;
            const std::int64_t bottom = img(rx.i0, ry.i1) * (dx - rx.r) + img(rx.i1, ry.i1) * rx.r;
            const std::int64_t v = top * (dy - ry.r) + bottom * ry.r;
            out(x, y) = static_cast<std::uint8_t>((2 * v + den) / (2 * den));
        }
    }
    return out;
}

inline GrayImage flip_horizontal(const GrayImage& img) {
    if (img.empty())
        return img;
    GrayImage out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            out(img.width() - 1 - x, y) = img(x, y);
    return out;
}

inline GrayImage crop(const GrayImage& img, int x0, int y0, int width, int height) {
    if (x0 < 0 || y0 < 0 || width <= 0 || height <= 0 || x0 + width > img.width() || y0 + height > img.height())
        throw DataError("crop rectangle outside image");
    GrayImage out(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            out(x, y) = img(x0 + x, y0 + y);
    return out;
}

inline Matrix<double> to_matrix(const GrayImage& img) {
    Matrix<double> m(static_cast<std::size_t>(img.height()), static_cast<std::size_t>(img.width()));
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            m(y, x) = img(x, y);
    return m;
}

// Half-open [begin, end) extent of tile `index` when `length` is split into
// `count` tiles; the last tile absorbs the remainder.
struct Extent {
    int begin;
    int end;
    int size() const noexcept { return end - begin; }
};

inline Extent tile_extent(int length, int count, int index) {
    const int step = length / count;
    return {index * step, index == count - 1 ? length : (index + 1) * step};
}

struct Block {
    int x0 = 0;
    int y0 = 0;
    GrayImage image;
};

struct BlockGrid {
    int rows = 0;
    int cols = 0;
    std::vector<Block> blocks; // row-major

    const Block& at(int row, int col) const { return blocks[static_cast<std::size_t>(row) * cols + col]; }
};

inline BlockGrid partition_blocks(const GrayImage& img, int rows, int cols) {
    if (rows <= 0 || cols <= 0)
        throw DataError("block grid must be at least 1x1");
    if (rows > img.height() || cols > img.width())
        throw DataError("block grid " + std::to_string(rows) + "x" + std::to_string(cols) + " larger than image " +
                        std::to_string(img.width()) + "x" + std::to_string(img.height()));
    BlockGrid grid{rows, cols, {}};
    grid.blocks.reserve(static_cast<std::size_t>(rows) * cols);
    for (int i = 0; i < rows; ++i) {
        const Extent ey = tile_extent(img.height(), rows, i);
        for (int j = 0; j < cols; ++j) {
            const Extent ex = tile_extent(img.width(), cols, j);
            grid.blocks.push_back({ex.begin, ey.begin, crop(img, ex.begin, ey.begin, ex.size(), ey.size())});
        }
    }
    return grid;
}

} // namespace earbench

#endif
