#pragma once

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "depoison/convolve.hpp"
#include "depoison/io.hpp"
#include "depoison/rng.hpp"
#include "depoison/tensor.hpp"

namespace depoison {

// One class-wise blur kernel. Non-negative, sums to 1.
struct BlurKernel {
    int size = 0;                  // odd k
    std::vector<double> weights;   // k*k, row-major
    int class_id = 0;
};

struct CudaPoisonSpec {
    int num_classes = 10;
    int kernel_size = 3;
    double blur_param = 0.3;   // p_b: upper bound for off-center draws
    std::uint64_t seed = 0;
};

// How the per-class perturbation is assigned to an image of class y.
enum class LabelScheme {
    Matched,   // delta of class y
    Shifted,   // delta of class (y+1) mod K
    Random,    // delta of a uniformly drawn class
};

inline int scheme_class(LabelScheme scheme, int label, int num_classes, Rng& rng) {
    switch (scheme) {
        case LabelScheme::Matched: return label;
        case LabelScheme::Shifted: return (label + 1) % num_classes;
        case LabelScheme::Random:
            return static_cast<int>(rng.uniform_int(num_classes));
    }
    throw std::logic_error("unreachable");
}

// Kernel c: center weight 1, off-center weights uniform in [0, p_b],
// normalized to sum 1. p_b = 0 degenerates to the identity kernel.
inline std::vector<BlurKernel> gen_cuda_kernels(const CudaPoisonSpec& spec,
                                                Rng& rng) {
    if (spec.num_classes <= 0)
        throw std::invalid_argument("gen_cuda_kernels: num_classes must be > 0");
    if (spec.kernel_size <= 0 || spec.kernel_size % 2 == 0)
        throw std::invalid_argument("gen_cuda_kernels: kernel size must be odd");
    if (spec.blur_param < 0.0)
        throw std::invalid_argument("gen_cuda_kernels: blur_param must be >= 0");

    const int k = spec.kernel_size;
    const int center = (k / 2) * k + k / 2;
    std::vector<BlurKernel> kernels;
    kernels.reserve(spec.num_classes);
    for (int c = 0; c < spec.num_classes; ++c) {
        BlurKernel kern;
        kern.size = k;
        kern.class_id = c;
        kern.weights.assign(static_cast<std::size_t>(k) * k, 0.0);
        double sum = 0.0;
        for (int i = 0; i < k * k; ++i) {
            kern.weights[i] = (i == center) ? 1.0 : rng.uniform(0.0, spec.blur_param);
            sum += kern.weights[i];
        }
        for (auto& w : kern.weights) w /= sum;
        kernels.push_back(std::move(kern));
    }
    return kernels;
}

// Class-wise convolutional poisoning; labels are unchanged, only pixels move.
inline LabeledDataset poison_dataset(const LabeledDataset& ds,
                                     const std::vector<BlurKernel>& kernels,
                                     LabelScheme scheme, Rng& rng) {
    if (static_cast<int>(kernels.size()) != ds.num_classes)
        throw ShapeError("poison_dataset: kernel count " +
                         std::to_string(kernels.size()) + " != num_classes " +
                         std::to_string(ds.num_classes));
    LabeledDataset out;
    out.num_classes = ds.num_classes;
    out.labels = ds.labels;
    out.images.reserve(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        int c = scheme_class(scheme, ds.labels[i], ds.num_classes, rng);
        const BlurKernel& k = kernels[c];
        out.images.push_back(
            clip01(convolve_reflect(ds.images[i], k.weights, k.size)));
    }
    return out;
}

// Additive form for non-blur class-wise poisons: x -> clip01(x + delta).
inline LabeledDataset apply_classwise_additive(
    const LabeledDataset& ds, const std::vector<ImageTensor>& deltas,
    LabelScheme scheme, Rng& rng) {
    if (static_cast<int>(deltas.size()) != ds.num_classes)
        throw ShapeError("apply_classwise_additive: delta count != num_classes");
    LabeledDataset out;
    out.num_classes = ds.num_classes;
    out.labels = ds.labels;
    out.images.reserve(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        int c = scheme_class(scheme, ds.labels[i], ds.num_classes, rng);
        const ImageTensor& delta = deltas[c];
        if (!delta.same_shape(ds.images[i]))
            throw ShapeError("apply_classwise_additive: delta shape mismatch");
        ImageTensor img = ds.images[i];
        for (std::size_t p = 0; p < img.data.size(); ++p)
            img.data[p] += delta.data[p];
        out.images.push_back(clip01(std::move(img)));
    }
    return out;
}

// Mean over images of ||x' - x||_2 and ||x' - x||_inf, norms taken over all
// channels and pixels jointly, in [0,1] pixel space.
inline std::pair<double, double> perturbation_stats(const LabeledDataset& clean,
                                                    const LabeledDataset& poisoned) {
    if (clean.size() != poisoned.size())
        throw ShapeError("perturbation_stats: dataset length mismatch");
    double sum_l2 = 0.0, sum_linf = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const auto& a = clean.images[i];
        const auto& b = poisoned.images[i];
        if (!a.same_shape(b))
            throw ShapeError("perturbation_stats: image shape mismatch");
        double sq = 0.0, linf = 0.0;
        for (std::size_t p = 0; p < a.data.size(); ++p) {
            double d = static_cast<double>(b.data[p]) - a.data[p];
            sq += d * d;
            linf = std::max(linf, std::abs(d));
        }
        sum_l2 += std::sqrt(sq);
        sum_linf += linf;
    }
    const double n = clean.size() == 0 ? 1.0 : static_cast<double>(clean.size());
    return {sum_l2 / n, sum_linf / n};
}

// Persists kernels as <base>.itns (K x k x k) with a <base>.json sidecar of
// the generating spec.
inline void save_kernels(const std::vector<BlurKernel>& kernels,
                         const CudaPoisonSpec& spec, const std::string& base) {
    if (kernels.empty()) throw std::invalid_argument("save_kernels: empty list");
    const int k = kernels.front().size;
    Tensor t;
    t.dims = {static_cast<std::uint32_t>(kernels.size()),
              static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k)};
    for (const auto& kern : kernels)
        for (double w : kern.weights) t.data.push_back(static_cast<float>(w));
    save_tensor(t, base + ".itns");
    nlohmann::json j;
    j["num_classes"] = spec.num_classes;
    j["kernel_size"] = spec.kernel_size;
    j["blur_param"] = spec.blur_param;
    j["seed"] = spec.seed;
    std::ofstream out(base + ".json");
    out << j.dump(2) << "\n";
}

inline std::pair<std::vector<BlurKernel>, CudaPoisonSpec> load_kernels(
    const std::string& base) {
    Tensor t = load_tensor(base + ".itns");
    if (t.dims.size() != 3 || t.dims[1] != t.dims[2])
        throw FormatError(base + ".itns: expected K x k x k tensor");
    std::ifstream in(base + ".json");
    if (!in) throw FormatError("cannot open " + base + ".json");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(base + ".json: " + e.what());
    }
    CudaPoisonSpec spec;
    spec.num_classes = j.at("num_classes").get<int>();
    spec.kernel_size = j.at("kernel_size").get<int>();
    spec.blur_param = j.at("blur_param").get<double>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    const int k = static_cast<int>(t.dims[1]);
    std::vector<BlurKernel> kernels;
    for (std::uint32_t c = 0; c < t.dims[0]; ++c) {
        BlurKernel kern;
        kern.size = k;
        kern.class_id = static_cast<int>(c);
        kern.weights.assign(t.data.begin() + static_cast<std::size_t>(c) * k * k,
                            t.data.begin() + static_cast<std::size_t>(c + 1) * k * k);
        kernels.push_back(std::move(kern));
    }
    return {std::move(kernels), spec};
}

}  // namespace depoison
