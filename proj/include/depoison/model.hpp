#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "depoison/io.hpp"
#include "depoison/rng.hpp"
#include "depoison/tensor.hpp"

namespace depoison {

// Conv(3x3, zero pad 1) -> ReLU -> maxpool 2x2, twice, then a fully-connected
// layer to K logits. Desk-scale stand-in for a deep classifier.
struct ModelArch {
    int in_channels = 3;
    int height = 32;
    int width = 32;
    int conv1_out = 16;
    int conv2_out = 32;
    int num_classes = 10;

    int pooled_h() const { return height / 4; }
    int pooled_w() const { return width / 4; }
    int flat_dim() const { return conv2_out * pooled_h() * pooled_w(); }

    void validate() const {
        if (height % 4 != 0 || width % 4 != 0)
            throw std::invalid_argument("ModelArch: height/width must be divisible by 4");
        if (num_classes < 2)
            throw std::invalid_argument("ModelArch: need at least 2 classes");
    }
};

// Parameters are kept in double precision so analytic gradients can be
// validated against central finite differences; checkpoints quantize to f32.
struct ModelParams {
    ModelArch arch;
    std::vector<double> conv1_w, conv1_b;  // [c1][cin][3][3], [c1]
    std::vector<double> conv2_w, conv2_b;  // [c2][c1][3][3], [c2]
    std::vector<double> fc_w, fc_b;        // [K][flat], [K]
    std::vector<double> norm_mean, norm_std;  // per input channel

    std::vector<std::vector<double>*> tensors() {
        return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc_w, &fc_b};
    }
    std::vector<const std::vector<double>*> tensors() const {
        return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc_w, &fc_b};
    }
    static const char* tensor_name(std::size_t i) {
        static const char* names[] = {"conv1_w", "conv1_b", "conv2_w",
                                      "conv2_b", "fc_w",    "fc_b"};
        return names[i];
    }
};

struct ModelGrads {
    std::vector<double> conv1_w, conv1_b, conv2_w, conv2_b, fc_w, fc_b;

    static ModelGrads zeros_like(const ModelParams& m) {
        ModelGrads g;
        g.conv1_w.assign(m.conv1_w.size(), 0.0);
        g.conv1_b.assign(m.conv1_b.size(), 0.0);
        g.conv2_w.assign(m.conv2_w.size(), 0.0);
        g.conv2_b.assign(m.conv2_b.size(), 0.0);
        g.fc_w.assign(m.fc_w.size(), 0.0);
        g.fc_b.assign(m.fc_b.size(), 0.0);
        return g;
    }
    std::vector<std::vector<double>*> tensors() {
        return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc_w, &fc_b};
    }
    std::vector<const std::vector<double>*> tensors() const {
        return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc_w, &fc_b};
    }
    void add(const ModelGrads& o) {
        auto a = tensors();
        auto b = o.tensors();
        for (std::size_t t = 0; t < a.size(); ++t)
            for (std::size_t i = 0; i < a[t]->size(); ++i)
                (*a[t])[i] += (*b[t])[i];
    }
};

// He-style init: weights ~ N(0, sqrt(2/fan_in)), biases zero.
inline ModelParams init_model(const ModelArch& arch, Rng& rng) {
    arch.validate();
    ModelParams m;
    m.arch = arch;
    auto he = [&rng](std::vector<double>& w, std::size_t n, int fan_in) {
        const double s = std::sqrt(2.0 / fan_in);
        w.resize(n);
        for (auto& v : w) v = rng.gaussian(0.0, s);
    };
    he(m.conv1_w, static_cast<std::size_t>(arch.conv1_out) * arch.in_channels * 9,
       arch.in_channels * 9);
    he(m.conv2_w, static_cast<std::size_t>(arch.conv2_out) * arch.conv1_out * 9,
       arch.conv1_out * 9);
    he(m.fc_w, static_cast<std::size_t>(arch.num_classes) * arch.flat_dim(),
       arch.flat_dim());
    m.conv1_b.assign(arch.conv1_out, 0.0);
    m.conv2_b.assign(arch.conv2_out, 0.0);
    m.fc_b.assign(arch.num_classes, 0.0);
    m.norm_mean.assign(arch.in_channels, 0.0);
    m.norm_std.assign(arch.in_channels, 1.0);
    return m;
}

namespace detail {

// 3x3 convolution, zero padding 1, same-size output.
inline void conv3x3_forward(const double* in, int cin, int h, int w,
                            const double* wt, const double* bias, int cout,
                            double* out) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int co = 0; co < cout; ++co) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double acc = bias[co];
                for (int ci = 0; ci < cin; ++ci) {
                    const double* wk =
                        wt + ((static_cast<std::size_t>(co) * cin + ci) * 9);
                    const double* ip = in + ci * plane;
                    for (int dy = -1; dy <= 1; ++dy) {
                        const int sy = y + dy;
                        if (sy < 0 || sy >= h) continue;
                        for (int dx = -1; dx <= 1; ++dx) {
                            const int sx = x + dx;
                            if (sx < 0 || sx >= w) continue;
                            acc += wk[(dy + 1) * 3 + (dx + 1)] *
                                   ip[static_cast<std::size_t>(sy) * w + sx];
                        }
                    }
                }
                out[co * plane + static_cast<std::size_t>(y) * w + x] = acc;
            }
    }
}

// Backward for the same conv: accumulates dwt/dbias and writes din (if given).
inline void conv3x3_backward(const double* in, int cin, int h, int w,
                             const double* wt, int cout, const double* dout,
                             double* dwt, double* dbias, double* din) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    if (din)
        std::fill(din, din + static_cast<std::size_t>(cin) * plane, 0.0);
    for (int co = 0; co < cout; ++co) {
        const double* dop = dout + co * plane;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double g = dop[static_cast<std::size_t>(y) * w + x];
                dbias[co] += g;
                for (int ci = 0; ci < cin; ++ci) {
                    const std::size_t base =
                        (static_cast<std::size_t>(co) * cin + ci) * 9;
                    const double* ip = in + ci * plane;
                    double* dip = din ? din + ci * plane : nullptr;
                    for (int dy = -1; dy <= 1; ++dy) {
                        const int sy = y + dy;
                        if (sy < 0 || sy >= h) continue;
                        for (int dx = -1; dx <= 1; ++dx) {
                            const int sx = x + dx;
                            if (sx < 0 || sx >= w) continue;
                            const std::size_t wi = base + (dy + 1) * 3 + (dx + 1);
                            const std::size_t si =
                                static_cast<std::size_t>(sy) * w + sx;
                            dwt[wi] += g * ip[si];
                            if (dip) dip[si] += g * wt[wi];
                        }
                    }
                }
            }
    }
}

// 2x2 max pool, stride 2; records the source index of each maximum. Ties go
// to the first element in scan order, which keeps the op deterministic.
inline void maxpool2_forward(const double* in, int c, int h, int w, double* out,
                             int* argmax) {
    const int oh = h / 2, ow = w / 2;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const std::size_t oplane = static_cast<std::size_t>(oh) * ow;
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                int best = -1;
                double bv = 0.0;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        const int idx = static_cast<int>(
                            ch * plane + static_cast<std::size_t>(2 * y + dy) * w +
                            (2 * x + dx));
                        if (best < 0 || in[idx] > bv) {
                            best = idx;
                            bv = in[idx];
                        }
                    }
                out[ch * oplane + static_cast<std::size_t>(y) * ow + x] = bv;
                argmax[ch * oplane + static_cast<std::size_t>(y) * ow + x] = best;
            }
}

}  // namespace detail

struct ForwardCache {
    std::vector<double> x0;          // normalized input
    std::vector<double> a1, r1, p1;  // conv1 pre-act, relu, pooled
    std::vector<int> idx1;
    std::vector<double> a2, r2, p2;
    std::vector<int> idx2;
    std::vector<double> logits;
};

inline void forward_cached(const ModelParams& m, const ImageTensor& img,
                           ForwardCache& c) {
    const ModelArch& a = m.arch;
    if (img.channels != a.in_channels || img.height != a.height ||
        img.width != a.width)
        throw ShapeError("forward: image shape does not match architecture");
    const std::size_t plane = static_cast<std::size_t>(a.height) * a.width;

    c.x0.resize(a.in_channels * plane);
    for (int ch = 0; ch < a.in_channels; ++ch)
        for (std::size_t i = 0; i < plane; ++i)
            c.x0[ch * plane + i] =
                (static_cast<double>(img.data[ch * plane + i]) - m.norm_mean[ch]) /
                m.norm_std[ch];

    c.a1.resize(a.conv1_out * plane);
    detail::conv3x3_forward(c.x0.data(), a.in_channels, a.height, a.width,
                            m.conv1_w.data(), m.conv1_b.data(), a.conv1_out,
                            c.a1.data());
    c.r1.resize(c.a1.size());
    for (std::size_t i = 0; i < c.a1.size(); ++i)
        c.r1[i] = std::max(c.a1[i], 0.0);

    const int h1 = a.height / 2, w1 = a.width / 2;
    const std::size_t plane1 = static_cast<std::size_t>(h1) * w1;
    c.p1.resize(a.conv1_out * plane1);
    c.idx1.resize(c.p1.size());
    detail::maxpool2_forward(c.r1.data(), a.conv1_out, a.height, a.width,
                             c.p1.data(), c.idx1.data());

    c.a2.resize(a.conv2_out * plane1);
    detail::conv3x3_forward(c.p1.data(), a.conv1_out, h1, w1, m.conv2_w.data(),
                            m.conv2_b.data(), a.conv2_out, c.a2.data());
    c.r2.resize(c.a2.size());
    for (std::size_t i = 0; i < c.a2.size(); ++i)
        c.r2[i] = std::max(c.a2[i], 0.0);

    const int h2 = h1 / 2, w2 = w1 / 2;
    const std::size_t plane2 = static_cast<std::size_t>(h2) * w2;
    c.p2.resize(a.conv2_out * plane2);
    c.idx2.resize(c.p2.size());
    detail::maxpool2_forward(c.r2.data(), a.conv2_out, h1, w1, c.p2.data(),
                             c.idx2.data());

    c.logits.assign(a.num_classes, 0.0);
    const int flat = a.flat_dim();
    for (int k = 0; k < a.num_classes; ++k) {
        double acc = m.fc_b[k];
        const double* wk = m.fc_w.data() + static_cast<std::size_t>(k) * flat;
        for (int i = 0; i < flat; ++i) acc += wk[i] * c.p2[i];
        c.logits[k] = acc;
    }
}

inline std::vector<double> forward(const ModelParams& m, const ImageTensor& img) {
    ForwardCache c;
    forward_cached(m, img, c);
    return c.logits;
}

namespace detail {

// Softmax cross-entropy (max-subtracted) plus full backprop for one image.
// Gradients are scaled by `scale` and accumulated into `grads`.
inline double backward_image(const ModelParams& m, const ForwardCache& c,
                             int label, double scale, ModelGrads& grads,
                             int* predicted = nullptr) {
    const ModelArch& a = m.arch;
    const int K = a.num_classes;
    const double maxlogit =
        *std::max_element(c.logits.begin(), c.logits.end());
    double sumexp = 0.0;
    for (double z : c.logits) sumexp += std::exp(z - maxlogit);
    const double loss = std::log(sumexp) - (c.logits[label] - maxlogit);
    if (predicted) {
        int best = 0;
        for (int k = 1; k < K; ++k)
            if (c.logits[k] > c.logits[best]) best = k;  // lowest-index tie-break
        *predicted = best;
    }

    std::vector<double> dlogits(K);
    for (int k = 0; k < K; ++k) {
        double p = std::exp(c.logits[k] - maxlogit) / sumexp;
        dlogits[k] = scale * (p - (k == label ? 1.0 : 0.0));
    }

    // fc
    const int flat = a.flat_dim();
    std::vector<double> dp2(flat, 0.0);
    for (int k = 0; k < K; ++k) {
        grads.fc_b[k] += dlogits[k];
        double* dwk = grads.fc_w.data() + static_cast<std::size_t>(k) * flat;
        const double* wk = m.fc_w.data() + static_cast<std::size_t>(k) * flat;
        for (int i = 0; i < flat; ++i) {
            dwk[i] += dlogits[k] * c.p2[i];
            dp2[i] += dlogits[k] * wk[i];
        }
    }

    // unpool 2 and relu 2
    const int h1 = a.height / 2, w1 = a.width / 2;
    std::vector<double> da2(c.a2.size(), 0.0);
    for (std::size_t i = 0; i < dp2.size(); ++i) da2[c.idx2[i]] += dp2[i];
    for (std::size_t i = 0; i < da2.size(); ++i)
        if (c.a2[i] <= 0.0) da2[i] = 0.0;

    // conv2
    std::vector<double> dp1(c.p1.size(), 0.0);
    conv3x3_backward(c.p1.data(), a.conv1_out, h1, w1, m.conv2_w.data(),
                     a.conv2_out, da2.data(), grads.conv2_w.data(),
                     grads.conv2_b.data(), dp1.data());

    // unpool 1 and relu 1
    std::vector<double> da1(c.a1.size(), 0.0);
    for (std::size_t i = 0; i < dp1.size(); ++i) da1[c.idx1[i]] += dp1[i];
    for (std::size_t i = 0; i < da1.size(); ++i)
        if (c.a1[i] <= 0.0) da1[i] = 0.0;

    // conv1 (input gradient not needed)
    conv3x3_backward(c.x0.data(), a.in_channels, a.height, a.width,
                     m.conv1_w.data(), a.conv1_out, da1.data(),
                     grads.conv1_w.data(), grads.conv1_b.data(), nullptr);

    return loss;
}

}  // namespace detail

struct BatchResult {
    double loss = 0.0;  // mean cross-entropy
    int correct = 0;
    ModelGrads grads;
};

// Mean cross-entropy over the batch with full backprop. Work is split into
// fixed index chunks so the floating-point reduction order is independent of
// thread availability.
inline BatchResult loss_and_grads(const ModelParams& m,
                                  const std::vector<ImageTensor>& batch,
                                  const std::vector<int>& labels,
                                  int num_threads = 0) {
    if (batch.empty()) throw std::invalid_argument("loss_and_grads: empty batch");
    if (batch.size() != labels.size())
        throw ShapeError("loss_and_grads: batch/label size mismatch");
    const std::size_t n = batch.size();
    const double scale = 1.0 / static_cast<double>(n);

    constexpr std::size_t kChunks = 8;
    const std::size_t chunks = std::min(kChunks, n);
    std::vector<BatchResult> partial(chunks);
    for (auto& p : partial) p.grads = ModelGrads::zeros_like(m);

    auto work = [&](std::size_t ci) {
        const std::size_t lo = ci * n / chunks, hi = (ci + 1) * n / chunks;
        ForwardCache cache;
        for (std::size_t i = lo; i < hi; ++i) {
            forward_cached(m, batch[i], cache);
            int pred = 0;
            partial[ci].loss += scale * detail::backward_image(
                                            m, cache, labels[i], scale,
                                            partial[ci].grads, &pred);
            if (pred == labels[i]) ++partial[ci].correct;
        }
    };

    if (num_threads == 0)
        num_threads = static_cast<int>(std::thread::hardware_concurrency());
    if (num_threads > 1 && chunks > 1) {
        std::vector<std::thread> pool;
        std::size_t per = static_cast<std::size_t>(num_threads);
        for (std::size_t t = 0; t < std::min<std::size_t>(per, chunks); ++t)
            pool.emplace_back([&, t] {
                for (std::size_t ci = t; ci < chunks; ci += std::min<std::size_t>(per, chunks))
                    work(ci);
            });
        for (auto& th : pool) th.join();
    } else {
        for (std::size_t ci = 0; ci < chunks; ++ci) work(ci);
    }

    BatchResult out;
    out.grads = std::move(partial[0].grads);
    out.loss = partial[0].loss;
    out.correct = partial[0].correct;
    for (std::size_t ci = 1; ci < chunks; ++ci) {
        out.grads.add(partial[ci].grads);
        out.loss += partial[ci].loss;
        out.correct += partial[ci].correct;
    }
    return out;
}

// Classic SGD with momentum and L2 applied in the velocity:
//   v <- momentum*v + g + wd*theta;  theta <- theta - lr*v
inline void sgd_step(ModelParams& m, const ModelGrads& grads, ModelGrads& velocity,
                     double lr, double momentum, double weight_decay) {
    auto th = m.tensors();
    auto g = grads.tensors();
    auto v = velocity.tensors();
    for (std::size_t t = 0; t < th.size(); ++t)
        for (std::size_t i = 0; i < th[t]->size(); ++i) {
            double& vel = (*v[t])[i];
            vel = momentum * vel + (*g[t])[i] + weight_decay * (*th[t])[i];
            (*th[t])[i] -= lr * vel;
        }
}

inline double cosine_lr(double base_lr, int epoch, int total_epochs) {
    const double pi = 3.14159265358979323846;
    return base_lr * 0.5 *
           (1.0 + std::cos(pi * static_cast<double>(epoch) / total_epochs));
}

enum class LrSchedule { Constant, Cosine };

struct TrainConfig {
    int epochs = 30;
    int batch_size = 128;
    double lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    LrSchedule schedule = LrSchedule::Cosine;
    std::uint64_t seed = 0;
    bool random_crop = false;
    bool hflip = false;
    int num_threads = 0;  // 0 = hardware concurrency

    void validate() const {
        if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs >= 1");
        if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr > 0");
        if (momentum < 0.0 || momentum >= 1.0)
            throw std::invalid_argument("TrainConfig: momentum in [0,1)");
        if (batch_size < 1)
            throw std::invalid_argument("TrainConfig: batch_size >= 1");
    }
};

// Optional horizontal flip (p = 0.5), then zero-pad-4 random crop back to the
// original size. Offset (4,4) reproduces the input exactly.
inline ImageTensor augment(const ImageTensor& img, bool random_crop, bool hflip,
                           Rng& rng) {
    ImageTensor out = img;
    if (hflip && rng.uniform() < 0.5) {
        for (int c = 0; c < out.channels; ++c)
            for (int y = 0; y < out.height; ++y)
                for (int x = 0; x < out.width / 2; ++x)
                    std::swap(out.at(c, y, x), out.at(c, y, out.width - 1 - x));
    }
    if (random_crop) {
        constexpr int pad = 4;
        const int oy = static_cast<int>(rng.uniform_int(2 * pad + 1));
        const int ox = static_cast<int>(rng.uniform_int(2 * pad + 1));
        ImageTensor crop(out.channels, out.height, out.width);
        for (int c = 0; c < out.channels; ++c)
            for (int y = 0; y < out.height; ++y)
                for (int x = 0; x < out.width; ++x) {
                    const int sy = y + oy - pad;
                    const int sx = x + ox - pad;
                    crop.at(c, y, x) = (sy >= 0 && sy < out.height && sx >= 0 &&
                                        sx < out.width)
                                           ? out.at(c, sy, sx)
                                           : 0.0f;
                }
        out = std::move(crop);
    }
    return out;
}

struct TrainReport {
    std::vector<double> train_loss;
    std::vector<double> train_acc;
    ModelParams model;
};

inline TrainReport train(const LabeledDataset& ds, const TrainConfig& cfg,
                         ModelArch arch) {
    cfg.validate();
    if (ds.size() == 0) throw std::invalid_argument("train: empty dataset");
    const ImageTensor& first = ds.images.front();
    arch.in_channels = first.channels;
    arch.height = first.height;
    arch.width = first.width;
    arch.num_classes = ds.num_classes;
    arch.validate();

    Rng rng(cfg.seed);
    ModelParams model = init_model(arch, rng);

    // dataset mean/std per channel; normalization happens inside forward
    const std::size_t plane = static_cast<std::size_t>(arch.height) * arch.width;
    for (int c = 0; c < arch.in_channels; ++c) {
        double sum = 0.0, sq = 0.0;
        for (const auto& img : ds.images)
            for (std::size_t i = 0; i < plane; ++i) {
                double v = img.data[c * plane + i];
                sum += v;
                sq += v * v;
            }
        const double n = static_cast<double>(ds.size() * plane);
        const double mean = sum / n;
        model.norm_mean[c] = mean;
        model.norm_std[c] = std::max(std::sqrt(std::max(sq / n - mean * mean, 0.0)),
                                     1e-8);
    }

    ModelGrads velocity = ModelGrads::zeros_like(model);
    TrainReport report;
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.schedule == LrSchedule::Cosine
                              ? cosine_lr(cfg.lr, epoch, cfg.epochs)
                              : cfg.lr;
        detail::shuffle_indices(order, rng);
        double epoch_loss = 0.0;
        std::size_t correct = 0, seen = 0;
        for (std::size_t start = 0; start < order.size();
             start += cfg.batch_size) {
            const std::size_t end =
                std::min(order.size(), start + cfg.batch_size);
            std::vector<ImageTensor> batch;
            std::vector<int> labels;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) {
                batch.push_back((cfg.random_crop || cfg.hflip)
                                    ? augment(ds.images[order[i]], cfg.random_crop,
                                              cfg.hflip, rng)
                                    : ds.images[order[i]]);
                labels.push_back(ds.labels[order[i]]);
            }
            BatchResult res = loss_and_grads(model, batch, labels, cfg.num_threads);
            if (!std::isfinite(res.loss))
                throw DivergenceError("train: non-finite loss at epoch " +
                                      std::to_string(epoch));
            sgd_step(model, res.grads, velocity, lr, cfg.momentum,
                     cfg.weight_decay);
            epoch_loss += res.loss * static_cast<double>(batch.size());
            correct += res.correct;
            seen += batch.size();
        }
        report.train_loss.push_back(epoch_loss / static_cast<double>(seen));
        report.train_acc.push_back(static_cast<double>(correct) /
                                   static_cast<double>(seen));
    }
    report.model = std::move(model);
    return report;
}

// Fraction of argmax-correct predictions; argmax ties break to the lowest
// class index.
inline double evaluate(const ModelParams& model, const LabeledDataset& ds) {
    if (ds.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
    std::size_t correct = 0;
    ForwardCache cache;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        forward_cached(model, ds.images[i], cache);
        int best = 0;
        for (int k = 1; k < model.arch.num_classes; ++k)
            if (cache.logits[k] > cache.logits[best]) best = k;
        if (best == ds.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

// ---------------------------------------------------------------------------
// Checkpoints: one ITNS per parameter tensor plus manifest.json
// ---------------------------------------------------------------------------

inline void save_model(const ModelParams& m, const std::string& dir) {
    std::filesystem::create_directories(dir);
    auto ts = m.tensors();
    for (std::size_t t = 0; t < ts.size(); ++t) {
        Tensor out;
        out.dims = {static_cast<std::uint32_t>(ts[t]->size())};
        out.data.reserve(ts[t]->size());
        for (double v : *ts[t]) out.data.push_back(static_cast<float>(v));
        save_tensor(out, dir + "/" + ModelParams::tensor_name(t) + ".itns");
    }
    nlohmann::json j;
    j["arch"] = {{"in_channels", m.arch.in_channels},
                 {"height", m.arch.height},
                 {"width", m.arch.width},
                 {"conv1_out", m.arch.conv1_out},
                 {"conv2_out", m.arch.conv2_out},
                 {"num_classes", m.arch.num_classes}};
    j["norm_mean"] = m.norm_mean;
    j["norm_std"] = m.norm_std;
    std::ofstream out(dir + "/manifest.json");
    out << j.dump(2) << "\n";
}

inline ModelParams load_model(const std::string& dir) {
    std::ifstream in(dir + "/manifest.json");
    if (!in) throw FormatError("cannot open " + dir + "/manifest.json");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(dir + "/manifest.json: " + e.what());
    }
    ModelArch arch;
    arch.in_channels = j.at("arch").at("in_channels").get<int>();
    arch.height = j.at("arch").at("height").get<int>();
    arch.width = j.at("arch").at("width").get<int>();
    arch.conv1_out = j.at("arch").at("conv1_out").get<int>();
    arch.conv2_out = j.at("arch").at("conv2_out").get<int>();
    arch.num_classes = j.at("arch").at("num_classes").get<int>();
    Rng dummy(0);
    ModelParams m = init_model(arch, dummy);
    m.norm_mean = j.at("norm_mean").get<std::vector<double>>();
    m.norm_std = j.at("norm_std").get<std::vector<double>>();
    auto ts = m.tensors();
    for (std::size_t t = 0; t < ts.size(); ++t) {
        Tensor loaded =
            load_tensor(dir + "/" + ModelParams::tensor_name(t) + ".itns");
        if (loaded.data.size() != ts[t]->size())
            throw FormatError(dir + ": tensor size mismatch for " +
                              ModelParams::tensor_name(t));
        for (std::size_t i = 0; i < loaded.data.size(); ++i)
            (*ts[t])[i] = loaded.data[i];
    }
    return m;
}

}  // namespace depoison
