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

#ifndef EARBENCH_IMAGE_IO_HPP
#define EARBENCH_IMAGE_IO_HPP

// PNG/JPEG decoding and PNG encoding. Requires the earbench_io target
// (OpenCV imgcodecs).

#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "error.hpp"
#include "image.hpp"

namespace earbench {

inline GrayImage load_grayscale(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec))
        throw IoError("cannot open image '" + path.string() + "': no such file");

    cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED | cv::IMREAD_IGNORE_ORIENTATION);
    if (raw.empty())
        throw FormatError("cannot decode image '" + path.string() + "': not a readable PNG or JPEG");

    if (raw.depth() != CV_8U) {
        cv::Mat scaled;
        const double alpha = raw.depth() == CV_16U ? 1.0 / 257.0 : 1.0;
        raw.convertTo(scaled, CV_8U, alpha);
        raw = scaled;
    }

    const int w = raw.cols, h = raw.rows, ch = raw.channels();
    if (ch != 1 && ch != 3 && ch != 4)
        throw FormatError("unsupported channel count " + std::to_string(ch) + " in '" + path.string() + "'");

    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* row = raw.ptr<std::uint8_t>(y);
        for (int x = 0; x < w; ++x) {
            const std::uint8_t* px = row + static_cast<std::ptrdiff_t>(x) * ch;
            // OpenCV stores colour as BGR(A).
            out(x, y) = ch == 1 ? px[0] : luma(px[2], px[1], px[0]);
        }
    }
    return out;
}

inline void write_png(const std::filesystem::path& path, const GrayImage& img) {
    cv::Mat mat(img.height(), img.width(), CV_8UC1, const_cast<std::uint8_t*>(img.pixels().data()));
    const std::vector<int> params{cv::IMWRITE_PNG_COMPRESSION, 6};
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), mat, params);
    } catch (const cv::Exception& e) {
        throw IoError("cannot write '" + path.string() + "': " + e.what());
    }
    if (!ok)
        throw IoError("cannot write '" + path.string() + "'");
}

} // namespace earbench

#endif
