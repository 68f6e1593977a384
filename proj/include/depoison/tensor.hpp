#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "depoison/rng.hpp"

namespace depoison {

// Malformed or truncated file contents.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Incompatible tensor/kernel/dataset shapes.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite loss during training.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One image, channel-planar row-major, nominal pixel range [0,1].
struct ImageTensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    ImageTensor() = default;
    ImageTensor(int c, int h, int w, float fill = 0.0f)
        : channels(c), height(h), width(w),
          data(static_cast<std::size_t>(c) * h * w, fill) {}

    std::size_t size() const { return data.size(); }

    float& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    float at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }

    bool same_shape(const ImageTensor& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }
};

inline ImageTensor clip01(ImageTensor img) {
    for (auto& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
    return img;
}

// Ordered images with integer labels in [0, num_classes).
struct LabeledDataset {
    std::vector<ImageTensor> images;
    std::vector<int> labels;
    int num_classes = 0;

    std::size_t size() const { return images.size(); }
};

inline LabeledDataset subset(const LabeledDataset& ds,
                             const std::vector<std::size_t>& indices) {
    LabeledDataset out;
    out.num_classes = ds.num_classes;
    out.images.reserve(indices.size());
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) {
        if (i >= ds.size())
            throw std::out_of_range("subset: index " + std::to_string(i) +
                                    " out of range");
        out.images.push_back(ds.images[i]);
        out.labels.push_back(ds.labels[i]);
    }
    return out;
}

namespace detail {

inline void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        std::size_t j = rng.uniform_int(i);
        std::swap(idx[i - 1], idx[j]);
    }
}

}  // namespace detail

// Seeded shuffle then prefix/suffix cut. With `stratified`, the cut is made
// per class, keeping the label distribution within +-1 per class.
inline std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds,
                                                       double fraction, Rng& rng,
                                                       bool stratified = false) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw std::invalid_argument("split: fraction must be in (0,1)");

    std::vector<std::size_t> train_idx, test_idx;
    if (stratified) {
        std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
        for (std::size_t i = 0; i < ds.size(); ++i)
            by_class[ds.labels[i]].push_back(i);
        for (auto& cls : by_class) {
            detail::shuffle_indices(cls, rng);
            std::size_t cut = static_cast<std::size_t>(
                std::llround(fraction * static_cast<double>(cls.size())));
            for (std::size_t i = 0; i < cls.size(); ++i)
                (i < cut ? train_idx : test_idx).push_back(cls[i]);
        }
    } else {
        std::vector<std::size_t> idx(ds.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        detail::shuffle_indices(idx, rng);
        std::size_t cut = static_cast<std::size_t>(
            std::llround(fraction * static_cast<double>(idx.size())));
        train_idx.assign(idx.begin(), idx.begin() + cut);
        test_idx.assign(idx.begin() + cut, idx.end());
    }
    return {subset(ds, train_idx), subset(ds, test_idx)};
}

}  // namespace depoison
