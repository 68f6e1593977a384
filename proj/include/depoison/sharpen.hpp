#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "depoison/convolve.hpp"
#include "depoison/rng.hpp"
#include "depoison/tensor.hpp"

namespace depoison {

// 3x3 cross-shaped sharpening kernel: positive center, non-positive edge
// neighbors, zero corners.
struct SharpenKernel {
    double center = 5.0;
    std::array<double, 4> neighbors = {-1.0, -1.0, -1.0, -1.0};  // up,left,right,down

    std::vector<double> weights() const {
        return {0.0,          neighbors[0], 0.0,
                neighbors[1], center,       neighbors[2],
                0.0,          neighbors[3], 0.0};
    }

    double weight_sum() const {
        return center + neighbors[0] + neighbors[1] + neighbors[2] + neighbors[3];
    }
};

inline SharpenKernel standard_kernel() {
    return SharpenKernel{5.0, {-1.0, -1.0, -1.0, -1.0}};
}

// Neighbors -(c-1)/4 so the weight sum is exactly 1 (unit DC gain).
inline SharpenKernel soft_kernel(double center) {
    if (!(center > 1.0))
        throw std::invalid_argument("soft_kernel: center must be > 1");
    const double n = -(center - 1.0) / 4.0;
    return SharpenKernel{center, {n, n, n, n}};
}

struct RskSpec {
    double center_mean = 2.5;
    double center_std = 0.1;
    double neighbor_mean = 0.375;
    double neighbor_std = 0.1;
    bool per_image = true;   // fresh kernel per image in sharpen_dataset
    bool coupled = false;    // neighbor mean follows (center-1)/4
};

// Random sharpening kernel: center then the four neighbor magnitudes, each a
// Gaussian draw. Tail draws are clamped (center > 1, magnitudes >= 0) so the
// draw count stays deterministic.
inline SharpenKernel sample_rsk(const RskSpec& spec, Rng& rng) {
    if (spec.center_std < 0.0 || spec.neighbor_std < 0.0)
        throw std::invalid_argument("sample_rsk: stds must be >= 0");
    if (!(spec.center_mean > 0.0) || !(spec.neighbor_mean > 0.0))
        throw std::invalid_argument("sample_rsk: means must be > 0");
    double center = rng.gaussian(spec.center_mean, spec.center_std);
    center = std::max(center, 1.0 + 1e-9);
    const double nmean = spec.coupled ? (center - 1.0) / 4.0 : spec.neighbor_mean;
    SharpenKernel k;
    k.center = center;
    for (auto& n : k.neighbors) {
        double mag = rng.gaussian(nmean, spec.neighbor_std);
        n = -std::max(mag, 0.0);
    }
    return k;
}

struct SharpenMode {
    enum class Kind { Ssk, Soft, Rsk };
    Kind kind = Kind::Ssk;
    double soft_center = 2.5;
    RskSpec rsk;

    static SharpenMode ssk() { return {Kind::Ssk, 2.5, {}}; }
    static SharpenMode soft(double center) { return {Kind::Soft, center, {}}; }
    static SharpenMode random(const RskSpec& spec = {}) {
        return {Kind::Rsk, 2.5, spec};
    }
};

// Convolves every image with its sharpening kernel (reflect padding), then
// clips. Under RSK with per_image a fresh kernel is drawn for each image.
inline LabeledDataset sharpen_dataset(const LabeledDataset& ds, const SharpenMode& mode,
                                      Rng& rng) {
    SharpenKernel fixed;
    switch (mode.kind) {
        case SharpenMode::Kind::Ssk: fixed = standard_kernel(); break;
        case SharpenMode::Kind::Soft: fixed = soft_kernel(mode.soft_center); break;
        case SharpenMode::Kind::Rsk:
            if (!mode.rsk.per_image) fixed = sample_rsk(mode.rsk, rng);
            break;
    }
    LabeledDataset out;
    out.num_classes = ds.num_classes;
    out.labels = ds.labels;
    out.images.reserve(ds.size());
    for (const auto& img : ds.images) {
        if (img.height < 3 || img.width < 3)
            throw ShapeError("sharpen_dataset: image smaller than 3x3");
        SharpenKernel k = (mode.kind == SharpenMode::Kind::Rsk && mode.rsk.per_image)
                              ? sample_rsk(mode.rsk, rng)
                              : fixed;
        out.images.push_back(clip01(convolve_reflect(img, k.weights(), 3)));
    }
    return out;
}

}  // namespace depoison
