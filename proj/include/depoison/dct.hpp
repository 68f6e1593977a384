#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "depoison/tensor.hpp"

namespace depoison {

// Per-channel 2D DCT-II coefficients; (0,0) of each channel is DC.
struct SpectrumTensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    SpectrumTensor() = default;
    SpectrumTensor(int c, int h, int w)
        : channels(c), height(h), width(w),
          data(static_cast<std::size_t>(c) * h * w, 0.0) {}

    double& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
};

// Keep fraction p in (0, 1]: the "lowest X%" of frequencies, linear in block side.
struct KeepFraction {
    double value;
    explicit KeepFraction(double p) : value(p) {
        if (!(p > 0.0 && p <= 1.0))
            throw std::invalid_argument("KeepFraction: p must be in (0, 1]");
    }
};

namespace detail {

// Orthonormal DCT-II matrix, row-major: C[k][i] = s(k) cos(pi (2i+1) k / 2n),
// s(0) = sqrt(1/n), s(k>0) = sqrt(2/n). Cached per size.
inline const std::vector<double>& dct_matrix(int n) {
    static std::mutex mu;
    static std::map<int, std::vector<double>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<double> m(static_cast<std::size_t>(n) * n);
    const double pi = 3.14159265358979323846;
    for (int k = 0; k < n; ++k) {
        const double s = std::sqrt((k == 0 ? 1.0 : 2.0) / n);
        for (int i = 0; i < n; ++i)
            m[static_cast<std::size_t>(k) * n + i] =
                s * std::cos(pi * (2 * i + 1) * k / (2.0 * n));
    }
    return cache.emplace(n, std::move(m)).first->second;
}

// out = C * in (forward) or C^T * in (inverse), applied down columns of an
// h x w plane when `rows` is false, across rows when true.
inline void dct_axis(const double* in, double* out, int h, int w, bool rows,
                     bool inverse) {
    if (rows) {
        const auto& c = dct_matrix(w);
        for (int y = 0; y < h; ++y)
            for (int k = 0; k < w; ++k) {
                double acc = 0.0;
                for (int i = 0; i < w; ++i)
                    acc += (inverse ? c[static_cast<std::size_t>(i) * w + k]
                                    : c[static_cast<std::size_t>(k) * w + i]) *
                           in[static_cast<std::size_t>(y) * w + i];
                out[static_cast<std::size_t>(y) * w + k] = acc;
            }
    } else {
        const auto& c = dct_matrix(h);
        for (int k = 0; k < h; ++k)
            for (int x = 0; x < w; ++x) {
                double acc = 0.0;
                for (int i = 0; i < h; ++i)
                    acc += (inverse ? c[static_cast<std::size_t>(i) * h + k]
                                    : c[static_cast<std::size_t>(k) * h + i]) *
                           in[static_cast<std::size_t>(i) * w + x];
                out[static_cast<std::size_t>(k) * w + x] = acc;
            }
    }
}

}  // namespace detail

// 1D orthonormal DCT-II; exposed for direct verification against the
// definitional sum.
inline std::vector<double> dct_1d(const std::vector<double>& signal) {
    const int n = static_cast<int>(signal.size());
    std::vector<double> out(signal.size());
    if (n == 0) return out;
    detail::dct_axis(signal.data(), out.data(), 1, n, true, false);
    return out;
}

inline SpectrumTensor dct2(const ImageTensor& image) {
    SpectrumTensor spec(image.channels, image.height, image.width);
    const std::size_t plane =
        static_cast<std::size_t>(image.height) * image.width;
    std::vector<double> buf(plane), tmp(plane);
    for (int c = 0; c < image.channels; ++c) {
        for (std::size_t i = 0; i < plane; ++i)
            buf[i] = image.data[c * plane + i];
        detail::dct_axis(buf.data(), tmp.data(), image.height, image.width, true,
                         false);
        detail::dct_axis(tmp.data(), spec.data.data() + c * plane, image.height,
                         image.width, false, false);
    }
    return spec;
}

inline ImageTensor idct2(const SpectrumTensor& spec) {
    ImageTensor img(spec.channels, spec.height, spec.width);
    const std::size_t plane = static_cast<std::size_t>(spec.height) * spec.width;
    std::vector<double> tmp(plane), out(plane);
    for (int c = 0; c < spec.channels; ++c) {
        detail::dct_axis(spec.data.data() + c * plane, tmp.data(), spec.height,
                         spec.width, false, true);
        detail::dct_axis(tmp.data(), out.data(), spec.height, spec.width, true,
                         true);
        for (std::size_t i = 0; i < plane; ++i)
            img.data[c * plane + i] = static_cast<float>(out[i]);
    }
    return img;
}

// Block side for "keep the lowest p" along an axis of n samples: round half-up.
inline int mask_side(double p, int n) {
    int s = static_cast<int>(std::floor(p * n + 0.5));
    return std::max(1, std::min(s, n));
}

// True exactly on the top-left s_h x s_w block.
inline std::vector<std::uint8_t> lowfreq_mask(int height, int width,
                                              KeepFraction p) {
    const int sh = mask_side(p.value, height);
    const int sw = mask_side(p.value, width);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(height) * width, 0);
    for (int y = 0; y < sh; ++y)
        for (int x = 0; x < sw; ++x)
            mask[static_cast<std::size_t>(y) * width + x] = 1;
    return mask;
}

// clip01(idct2(dct2(image) masked to the lowest frequencies)). A full mask is
// an exact identity (no transform roundoff).
inline ImageTensor frequency_filter(const ImageTensor& image, KeepFraction p) {
    const int sh = mask_side(p.value, image.height);
    const int sw = mask_side(p.value, image.width);
    if (sh == image.height && sw == image.width) return clip01(image);
    SpectrumTensor spec = dct2(image);
    for (int c = 0; c < spec.channels; ++c)
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x)
                if (y >= sh || x >= sw) spec.at(c, y, x) = 0.0;
    return clip01(idct2(spec));
}

// Fraction of squared-coefficient energy inside the kept block. 1.0 for an
// all-zero image by convention.
inline double retained_energy(const ImageTensor& image, KeepFraction p) {
    SpectrumTensor spec = dct2(image);
    const int sh = mask_side(p.value, image.height);
    const int sw = mask_side(p.value, image.width);
    double kept = 0.0, total = 0.0;
    for (int c = 0; c < spec.channels; ++c)
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x) {
                double e = spec.at(c, y, x) * spec.at(c, y, x);
                total += e;
                if (y < sh && x < sw) kept += e;
            }
    return total == 0.0 ? 1.0 : kept / total;
}

}  // namespace depoison
