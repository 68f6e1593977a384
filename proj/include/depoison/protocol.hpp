#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "depoison/dct.hpp"
#include "depoison/model.hpp"
#include "depoison/poison.hpp"
#include "depoison/rng.hpp"
#include "depoison/sharpen.hpp"
#include "depoison/tensor.hpp"

namespace depoison {

// ---------------------------------------------------------------------------
// Synthetic benchmark: per-class smooth low-frequency templates plus pixel
// noise. Templates share a common DC (mean brightness) so class identity
// never leaks through brightness alone.
// ---------------------------------------------------------------------------

struct SyntheticBenchSpec {
    int num_classes = 4;
    int channels = 3;
    int height = 16;
    int width = 16;
    int train_per_class = 2000;
    int test_per_class = 250;
    // Calibrated so a small CNN reaches >= 0.9 clean test accuracy while a
    // class-wise blur shortcut stays strictly easier to learn than the
    // templates. Raising amplitude much past ~0.06 lets template matching win
    // over the shortcut; lowering it much below ~0.05 sinks clean accuracy.
    double amplitude = 0.054;  // RMS of the class template
    double noise_std = 0.45;   // per-pixel Gaussian noise
    std::uint64_t seed = 0;

    void validate() const {
        if (num_classes < 2)
            throw std::invalid_argument("SyntheticBenchSpec: K >= 2");
        if (!(amplitude > 0.0) || !(noise_std > 0.0))
            throw std::invalid_argument(
                "SyntheticBenchSpec: amplitude and noise_std must be > 0");
        if (height < 4 || width < 4)
            throw std::invalid_argument("SyntheticBenchSpec: image too small");
    }
};

namespace detail {

// Smooth random pattern: spectrum supported on the lowest 25% DCT block,
// zero DC, scaled to unit RMS.
inline ImageTensor make_template(int channels, int height, int width, Rng& rng) {
    SpectrumTensor spec(channels, height, width);
    const int sh = mask_side(0.25, height);
    const int sw = mask_side(0.25, width);
    for (int c = 0; c < channels; ++c)
        for (int y = 0; y < sh; ++y)
            for (int x = 0; x < sw; ++x)
                if (y != 0 || x != 0) spec.at(c, y, x) = rng.gaussian();
    ImageTensor img = idct2(spec);
    double sq = 0.0;
    for (float v : img.data) sq += static_cast<double>(v) * v;
    const double rms = std::sqrt(sq / static_cast<double>(img.data.size()));
    if (rms > 0.0)
        for (auto& v : img.data) v = static_cast<float>(v / rms);
    return img;
}

}  // namespace detail

inline std::pair<LabeledDataset, LabeledDataset> make_synthetic(
    const SyntheticBenchSpec& spec, Rng& rng) {
    spec.validate();
    std::vector<ImageTensor> templates;
    templates.reserve(spec.num_classes);
    for (int c = 0; c < spec.num_classes; ++c)
        templates.push_back(
            detail::make_template(spec.channels, spec.height, spec.width, rng));

    auto sample_split = [&](int per_class) {
        LabeledDataset ds;
        ds.num_classes = spec.num_classes;
        for (int c = 0; c < spec.num_classes; ++c)
            for (int s = 0; s < per_class; ++s) {
                ImageTensor img(spec.channels, spec.height, spec.width);
                for (std::size_t i = 0; i < img.data.size(); ++i)
                    img.data[i] = static_cast<float>(
                        0.5 + spec.amplitude * templates[c].data[i] +
                        spec.noise_std * rng.gaussian());
                ds.images.push_back(clip01(std::move(img)));
                ds.labels.push_back(c);
            }
        return ds;
    };
    LabeledDataset train = sample_split(spec.train_per_class);
    LabeledDataset test = sample_split(spec.test_per_class);
    return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Shortcut evaluation: accuracy on three perturbed copies of the clean test
// set (matched / shifted / random perturbation class).
// ---------------------------------------------------------------------------

struct ShortcutReport {
    double acc_matched = 0.0;
    double acc_mismatched = 0.0;
    double acc_random = 0.0;
    int num_classes = 0;
};

inline ShortcutReport run_shortcut_eval(const ModelParams& model,
                                        const LabeledDataset& clean_test,
                                        const std::vector<BlurKernel>& kernels,
                                        Rng& rng) {
    if (static_cast<int>(kernels.size()) != clean_test.num_classes)
        throw ShapeError("run_shortcut_eval: kernel count != num_classes");
    ShortcutReport r;
    r.num_classes = clean_test.num_classes;
    r.acc_matched = evaluate(
        model, poison_dataset(clean_test, kernels, LabelScheme::Matched, rng));
    r.acc_mismatched = evaluate(
        model, poison_dataset(clean_test, kernels, LabelScheme::Shifted, rng));
    r.acc_random = evaluate(
        model, poison_dataset(clean_test, kernels, LabelScheme::Random, rng));
    return r;
}

// ---------------------------------------------------------------------------
// Transform chains
// ---------------------------------------------------------------------------

struct TransformStep {
    enum class Kind { Sharpen, FrequencyFilter };
    Kind kind = Kind::Sharpen;
    SharpenMode sharpen;
    double keep = 1.0;

    static TransformStep sharpen_step(const SharpenMode& mode) {
        TransformStep s;
        s.kind = Kind::Sharpen;
        s.sharpen = mode;
        return s;
    }
    static TransformStep filter_step(double keep) {
        TransformStep s;
        s.kind = Kind::FrequencyFilter;
        s.keep = keep;
        return s;
    }
};

using TransformChain = std::vector<TransformStep>;

inline LabeledDataset apply_chain(const LabeledDataset& ds,
                                  const TransformChain& chain, Rng& rng) {
    LabeledDataset out = ds;
    for (const auto& step : chain) {
        if (step.kind == TransformStep::Kind::Sharpen) {
            out = sharpen_dataset(out, step.sharpen, rng);
        } else {
            KeepFraction p(step.keep);
            for (auto& img : out.images) img = frequency_filter(img, p);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Keep-fraction sweep: each point retrains from scratch on the transformed
// training data with seed = base_seed + index, then evaluates on clean test.
// ---------------------------------------------------------------------------

struct SweepRow {
    double keep = 1.0;
    double accuracy = 0.0;
};

inline std::vector<SweepRow> run_sweep(const LabeledDataset& train_data,
                                       const LabeledDataset& test_data,
                                       const TransformChain& prefix_chain,
                                       const std::vector<double>& keep_fractions,
                                       const TrainConfig& base_config,
                                       const ModelArch& arch = {}) {
    std::vector<SweepRow> rows;
    rows.reserve(keep_fractions.size());
    for (std::size_t i = 0; i < keep_fractions.size(); ++i) {
        TransformChain chain = prefix_chain;
        chain.push_back(TransformStep::filter_step(keep_fractions[i]));
        TrainConfig cfg = base_config;
        cfg.seed = base_config.seed + i;
        Rng rng(cfg.seed ^ 0x5eedULL);
        LabeledDataset transformed = apply_chain(train_data, chain, rng);
        TrainReport rep = train(transformed, cfg, arch);
        rows.push_back({keep_fractions[i], evaluate(rep.model, test_data)});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Report emission (CSV / JSON), byte-stable, numbers at 4 decimal places
// ---------------------------------------------------------------------------

struct ResultTable {
    std::string experiment;
    std::vector<std::pair<std::string, std::string>> config;  // ordered
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

namespace detail {

inline std::string fmt4(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
}

}  // namespace detail

enum class ReportFormat { Csv, Json };

inline void emit_report(const ResultTable& results, const std::string& path,
                        ReportFormat format) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path);
    if (format == ReportFormat::Csv) {
        for (std::size_t i = 0; i < results.columns.size(); ++i)
            out << (i ? "," : "") << results.columns[i];
        out << "\n";
        for (const auto& row : results.rows) {
            for (std::size_t i = 0; i < row.size(); ++i)
                out << (i ? "," : "") << detail::fmt4(row[i]);
            out << "\n";
        }
    } else {
        nlohmann::json j;
        j["experiment"] = results.experiment;
        j["config"] = nlohmann::json::object();
        for (const auto& [k, v] : results.config) j["config"][k] = v;
        j["rows"] = nlohmann::json::array();
        for (const auto& row : results.rows) {
            nlohmann::json r = nlohmann::json::object();
            for (std::size_t i = 0; i < row.size(); ++i)
                r[results.columns[i]] = std::round(row[i] * 1e4) / 1e4;
            j["rows"].push_back(r);
        }
        out << j.dump(2) << "\n";
    }
}

}  // namespace depoison
