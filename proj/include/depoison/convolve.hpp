#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "depoison/tensor.hpp"

namespace depoison {

// Mirror without repeating the edge sample: -1 -> 1, n -> n-2.
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) i = (i < 0) ? -i : 2 * n - 2 - i;
    return i;
}

// Per-channel 2D cross-correlation with reflect padding. Output shape equals
// input shape; values are not clipped here.
inline ImageTensor convolve_reflect(const ImageTensor& image,
                                    const std::vector<double>& weights, int k) {
    if (k <= 0 || k % 2 == 0)
        throw std::invalid_argument("convolve_reflect: kernel size must be odd");
    if (weights.size() != static_cast<std::size_t>(k) * k)
        throw ShapeError("convolve_reflect: weight count does not match k*k");
    if (k > image.height || k > image.width)
        throw ShapeError("convolve_reflect: kernel " + std::to_string(k) +
                         " larger than image " + std::to_string(image.height) +
                         "x" + std::to_string(image.width));

    const int r = k / 2;
    ImageTensor out(image.channels, image.height, image.width);
    for (int c = 0; c < image.channels; ++c) {
        for (int y = 0; y < image.height; ++y) {
            for (int x = 0; x < image.width; ++x) {
                double acc = 0.0;
                for (int dy = 0; dy < k; ++dy) {
                    const int sy = reflect_index(y + dy - r, image.height);
                    for (int dx = 0; dx < k; ++dx) {
                        const int sx = reflect_index(x + dx - r, image.width);
                        acc += weights[dy * k + dx] * image.at(c, sy, sx);
                    }
                }
                out.at(c, y, x) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

}  // namespace depoison
