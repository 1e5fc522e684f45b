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

#ifndef EARBENCH_WAVELET_HPP
#define EARBENCH_WAVELET_HPP

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "matrix.hpp"

namespace earbench {

// Two-channel biorthogonal filter bank with odd-length, symmetric taps.
// Each list is stored centred: tap t (offset from the centre) lives at
// index t + size/2. Highpass analysis outputs sit on odd samples.
struct BiorFilters {
    std::vector<double> analysis_lowpass;
    std::vector<double> analysis_highpass;
    std::vector<double> synthesis_lowpass;
    std::vector<double> synthesis_highpass;

    // CDF 9/7 ("bior4.4"). Lowpass taps are sqrt(2) cos^4(w/2) times the
    // quadratic / linear factors of 1 + 4y + 10y^2 + 20y^3 (y = sin^2(w/2)),
    // evaluated to 20 digits so the highpass DC gain is zero to machine
    // precision. Highpass filters follow by alternating sign flip.
    static BiorFilters bior44() {
        const double h[5] = {0.85269867900940341931, 0.37740285561265376411, -0.11062440441842340885,
                             -0.023849465019380001913, 0.037828455506995461393};
        const double g[4] = {0.78848561640566439785, 0.41809227322221220084, -0.040689417609558436724,
                             -0.064538882628938438637};
        auto centred = [](const double* half, int n, bool alternate) {
            std::vector<double> taps(static_cast<std::size_t>(2 * n - 1));
            for (int t = -(n - 1); t <= n - 1; ++t) {
                const int a = t < 0 ? -t : t;
                const double sign = alternate ? (a % 2 == 0 ? -1.0 : 1.0) : 1.0;
                taps[static_cast<std::size_t>(t + n - 1)] = sign * half[a];
            }
            return taps;
        };
        return {centred(h, 5, false), centred(g, 4, true), centred(g, 4, false), centred(h, 5, true)};
    }
};

struct DetailBands {
    Matrix<double> horizontal; // lowpass along x, highpass along y
    Matrix<double> vertical;   // highpass along x, lowpass along y
    Matrix<double> diagonal;
};

struct WaveletDecomposition {
    std::vector<DetailBands> details; // details[0] is level 1 (finest)
    Matrix<double> approximation;

    int levels() const noexcept { return static_cast<int>(details.size()); }
};

namespace detail {

// Whole-point symmetric reflection into [0, n).
inline std::ptrdiff_t reflect(std::ptrdiff_t i, std::ptrdiff_t n) {
    if (n == 1)
        return 0;
    const std::ptrdiff_t period = 2 * (n - 1);
    i %= period;
    if (i < 0)
        i += period;
    return i < n ? i : period - i;
}

inline double tap(const std::vector<double>& f, std::ptrdiff_t offset) {
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(f.size()) / 2;
    if (offset < -half || offset > half)
        return 0.0;
    return f[static_cast<std::size_t>(offset + half)];
}

// in: n samples (n >= 2). low gets ceil(n/2), high gets floor(n/2).
inline void analyze(std::span<const double> in, std::span<double> low, std::span<double> high,
                    const BiorFilters& f) {
    const auto n = static_cast<std::ptrdiff_t>(in.size());
    const auto lh = static_cast<std::ptrdiff_t>(f.analysis_lowpass.size()) / 2;
    const auto hh = static_cast<std::ptrdiff_t>(f.analysis_highpass.size()) / 2;
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(low.size()); ++k) {
        double s = 0.0;
        for (std::ptrdiff_t j = -lh; j <= lh; ++j)
            s += tap(f.analysis_lowpass, j) * in[reflect(2 * k + j, n)];
        low[k] = s;
    }
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(high.size()); ++k) {
        double s = 0.0;
        for (std::ptrdiff_t j = -hh; j <= hh; ++j)
            s += tap(f.analysis_highpass, j) * in[reflect(2 * k + 1 + j, n)];
        high[k] = s;
    }
}

// Inverse of analyze. The interleaved subband signal inherits the input's
// whole-point symmetry, so it is extended with the same reflection.
inline void synthesize(std::span<const double> low, std::span<const double> high, std::span<double> out,
                       const BiorFilters& f) {
    const auto n = static_cast<std::ptrdiff_t>(out.size());
    std::vector<double> y(static_cast<std::size_t>(n));
    for (std::ptrdiff_t i = 0; i < n; ++i)
        y[i] = (i % 2 == 0) ? low[i / 2] : high[i / 2];
    const auto reach = static_cast<std::ptrdiff_t>(
                           std::max(f.synthesis_lowpass.size(), f.synthesis_highpass.size())) / 2;
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::ptrdiff_t m = i - reach; m <= i + reach; ++m) {
            const std::ptrdiff_t r = reflect(m, n);
            // Reflection preserves parity, so m and r agree on the channel.
            const auto& g = (r % 2 == 0) ? f.synthesis_lowpass : f.synthesis_highpass;
            s += tap(g, i - m) * y[r];
        }
        out[i] = s;
    }
}

struct Quad {
    Matrix<double> ll, hl_h, lh_v, hh_d;
};

inline Quad analyze_2d(const Matrix<double>& x, const BiorFilters& f) {
    const std::size_t h = x.rows(), w = x.cols();
    const std::size_t wl = (w + 1) / 2, wh = w / 2, hl = (h + 1) / 2, hhn = h / 2;

    // Rows: [low | high] per row.
    Matrix<double> rows_done(h, w);
    for (std::size_t r = 0; r < h; ++r) {
        auto out = rows_done.row(r);
        analyze(x.row(r), out.subspan(0, wl), out.subspan(wl, wh), f);
    }

    Quad q{Matrix<double>(hl, wl), Matrix<double>(hhn, wl), Matrix<double>(hl, wh), Matrix<double>(hhn, wh)};
    std::vector<double> col(h), lo(hl), hi(hhn);
    for (std::size_t c = 0; c < w; ++c) {
        for (std::size_t r = 0; r < h; ++r)
            col[r] = rows_done(r, c);
        analyze(col, lo, hi, f);
        const bool low_cols = c < wl;
        const std::size_t cc = low_cols ? c : c - wl;
        for (std::size_t r = 0; r < hl; ++r)
            (low_cols ? q.ll : q.lh_v)(r, cc) = lo[r];
        for (std::size_t r = 0; r < hhn; ++r)
            (low_cols ? q.hl_h : q.hh_d)(r, cc) = hi[r];
    }
    return q;
}

inline Matrix<double> synthesize_2d(const Matrix<double>& ll, const DetailBands& d, const BiorFilters& f) {
    const std::size_t hl = ll.rows(), wl = ll.cols();
    const std::size_t hhn = d.horizontal.rows(), wh = d.vertical.cols();
    const bool consistent = d.horizontal.cols() == wl && d.vertical.rows() == hl && d.diagonal.rows() == hhn &&
                            d.diagonal.cols() == wh && (hl == hhn || hl == hhn + 1) && (wl == wh || wl == wh + 1) &&
                            hhn > 0 && wh > 0;
    if (!consistent)
        throw DataError("wavelet decomposition subband dimensions are inconsistent");
    const std::size_t h = hl + hhn, w = wl + wh;

    Matrix<double> rows_done(h, w);
    std::vector<double> lo(hl), hi(hhn), col(h);
    for (std::size_t c = 0; c < w; ++c) {
        const bool low_cols = c < wl;
        const std::size_t cc = low_cols ? c : c - wl;
        for (std::size_t r = 0; r < hl; ++r)
            lo[r] = (low_cols ? ll : d.vertical)(r, cc);
        for (std::size_t r = 0; r < hhn; ++r)
            hi[r] = (low_cols ? d.horizontal : d.diagonal)(r, cc);
        synthesize(lo, hi, col, f);
        for (std::size_t r = 0; r < h; ++r)
            rows_done(r, c) = col[r];
    }

    Matrix<double> out(h, w);
    for (std::size_t r = 0; r < h; ++r) {
        auto in = rows_done.row(r);
        synthesize(in.subspan(0, wl), in.subspan(wl, wh), out.row(r), f);
    }
    return out;
}

} // namespace detail

// Multi-level separable 2-D DWT (Mallat recursion): rows, then columns, then
// recurse on the approximation.
inline WaveletDecomposition dwt2(const Matrix<double>& x, const BiorFilters& filters, int levels) {
    if (levels < 1)
        throw DataError("wavelet level count must be >= 1");
    const std::size_t need = std::size_t{1} << levels;
    if (x.rows() < need || x.cols() < need)
        throw DataError("matrix " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) + " too small for " +
                        std::to_string(levels) + "-level decomposition (needs >= " + std::to_string(need) + ")");

    WaveletDecomposition dec;
    dec.details.reserve(static_cast<std::size_t>(levels));
    Matrix<double> current = x;
    for (int l = 0; l < levels; ++l) {
        auto q = detail::analyze_2d(current, filters);
        dec.details.push_back({std::move(q.hl_h), std::move(q.lh_v), std::move(q.hh_d)});
        current = std::move(q.ll);
    }
    dec.approximation = std::move(current);
    return dec;
}

inline Matrix<double> idwt2(const WaveletDecomposition& dec, const BiorFilters& filters) {
    if (dec.details.empty())
        throw DataError("wavelet decomposition has no levels");
    Matrix<double> current = dec.approximation;
    for (auto it = dec.details.rbegin(); it != dec.details.rend(); ++it)
        current = detail::synthesize_2d(current, *it, filters);
    return current;
}

// Mean squared coefficient.
inline double subband_energy(const Matrix<double>& coeffs) {
    if (coeffs.empty())
        throw DataError("subband energy of an empty matrix");
    double s = 0.0;
    for (double c : coeffs.data())
        s += c * c;
    return s / static_cast<double>(coeffs.size());
}

} // namespace earbench

#endif
