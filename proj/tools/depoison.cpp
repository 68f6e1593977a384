// depoison: command-line front end for the dataset poisoning / recovery
// toolkit. One binary, one subcommand per pipeline stage.
//
// Exit codes: 0 success, 2 argument errors, 3 data-format errors,
// 4 training divergence.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "depoison/dct.hpp"
#include "depoison/io.hpp"
#include "depoison/model.hpp"
#include "depoison/poison.hpp"
#include "depoison/protocol.hpp"
#include "depoison/sharpen.hpp"
#include "depoison/tensor.hpp"

using namespace depoison;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitArgs = 2;
constexpr int kExitFormat = 3;
constexpr int kExitDivergence = 4;

void print_config(const std::string& cmd,
                  const std::vector<std::pair<std::string, std::string>>& kv) {
    std::ostringstream os;
    os << "config: command=" << cmd;
    for (const auto& [k, v] : kv) os << " " << k << "=" << v;
    std::cerr << os.str() << "\n";
}

SharpenMode parse_sharpen_mode(const std::string& text, const RskSpec& rsk) {
    if (text == "ssk") return SharpenMode::ssk();
    if (text == "rsk") return SharpenMode::random(rsk);
    if (text.rfind("soft:", 0) == 0) {
        double c = std::stod(text.substr(5));
        return SharpenMode::soft(c);
    }
    throw CLI::ValidationError("--sharpen", "expected ssk, soft:<c>, or rsk");
}

ReportFormat parse_format(const std::string& text) {
    if (text == "csv") return ReportFormat::Csv;
    if (text == "json") return ReportFormat::Json;
    throw CLI::ValidationError("--format", "expected csv or json");
}

std::vector<double> parse_keeps(const std::string& csv) {
    std::vector<double> keeps;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        int pct = std::stoi(item);
        if (pct < 1 || pct > 100)
            throw CLI::ValidationError("--keeps", "percent out of range (1-100)");
        keeps.push_back(pct / 100.0);
    }
    if (keeps.empty())
        throw CLI::ValidationError("--keeps", "empty list");
    return keeps;
}

struct SharpenFlags {
    std::string mode = "rsk";
    RskSpec rsk;

    void attach(CLI::App* cmd) {
        cmd->add_option("--sharpen", mode,
                        "Sharpening mode: ssk, soft:<center>, or rsk");
        cmd->add_option("--rsk-center-mean", rsk.center_mean, "RSK center mean");
        cmd->add_option("--rsk-center-std", rsk.center_std, "RSK center std");
        cmd->add_option("--rsk-neighbor-mean", rsk.neighbor_mean,
                        "RSK neighbor mean");
        cmd->add_option("--rsk-neighbor-std", rsk.neighbor_std,
                        "RSK neighbor std");
        cmd->add_flag("--rsk-coupled", rsk.coupled,
                      "Tie neighbor mean to (center-1)/4");
    }
};

struct TrainFlags {
    TrainConfig cfg;
    std::string schedule = "cosine";
    std::string augment;
    int conv1 = 16, conv2 = 32;

    void attach(CLI::App* cmd, bool require_seed = true) {
        cmd->add_option("--epochs", cfg.epochs, "Training epochs");
        cmd->add_option("--batch", cfg.batch_size, "Batch size");
        cmd->add_option("--lr", cfg.lr, "Base learning rate");
        cmd->add_option("--momentum", cfg.momentum, "SGD momentum");
        cmd->add_option("--wd", cfg.weight_decay, "Weight decay");
        cmd->add_option("--schedule", schedule, "constant or cosine");
        cmd->add_option("--augment", augment,
                        "Comma list from {crop,flip}, empty for none");
        cmd->add_option("--conv1", conv1, "First conv width");
        cmd->add_option("--conv2", conv2, "Second conv width");
        cmd->add_option("--threads", cfg.num_threads,
                        "Worker thread hint (0 = auto)");
        cmd->add_option("--seed", cfg.seed, "Random seed")->required(require_seed);
    }

    TrainConfig resolve() const {
        TrainConfig out = cfg;
        if (schedule == "constant") out.schedule = LrSchedule::Constant;
        else if (schedule == "cosine") out.schedule = LrSchedule::Cosine;
        else throw CLI::ValidationError("--schedule", "expected constant or cosine");
        out.random_crop = augment.find("crop") != std::string::npos;
        out.hflip = augment.find("flip") != std::string::npos;
        return out;
    }

    ModelArch arch() const {
        ModelArch a;
        a.conv1_out = conv1;
        a.conv2_out = conv2;
        return a;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Toolkit for convolution-poisoned image datasets: poison, "
                 "sharpen, frequency-filter, train, and evaluate"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "Generate the synthetic benchmark");
    SyntheticBenchSpec synth_spec;
    std::string synth_out;
    std::uint64_t synth_seed = 0;
    synth->add_option("--classes", synth_spec.num_classes, "Class count");
    synth->add_option("--size", synth_spec.height, "Image side (square)");
    synth->add_option("--train-per-class", synth_spec.train_per_class,
                      "Training samples per class");
    synth->add_option("--test-per-class", synth_spec.test_per_class,
                      "Test samples per class");
    synth->add_option("--amplitude", synth_spec.amplitude, "Template RMS amplitude");
    synth->add_option("--noise-std", synth_spec.noise_std, "Pixel noise std");
    synth->add_option("--seed", synth_seed, "Random seed")->required();
    synth->add_option("--out", synth_out, "Output directory")->required();

    // ---- poison ----
    auto* poison = app.add_subcommand("poison", "Blur-poison a dataset class-wise");
    std::string poison_dataset_path, poison_out, poison_scheme = "matched";
    CudaPoisonSpec poison_spec;
    poison->add_option("--dataset", poison_dataset_path,
                       "CIFAR-10 .bin or ITNS dataset dir")->required();
    poison->add_option("--pb", poison_spec.blur_param, "Blur parameter p_b");
    poison->add_option("--kernel-size", poison_spec.kernel_size, "Odd kernel size");
    poison->add_option("--scheme", poison_scheme, "matched, shifted, or random");
    poison->add_option("--seed", poison_spec.seed, "Random seed")->required();
    poison->add_option("--out", poison_out, "Output directory")->required();

    // ---- sharpen ----
    auto* sharpen = app.add_subcommand("sharpen", "Sharpen a dataset");
    std::string sharpen_dataset_path, sharpen_out;
    std::uint64_t sharpen_seed = 0;
    SharpenFlags sharpen_flags;
    sharpen->add_option("--dataset", sharpen_dataset_path, "Input dataset")
        ->required();
    sharpen_flags.attach(sharpen);
    sharpen->add_option("--seed", sharpen_seed, "Random seed")->required();
    sharpen->add_option("--out", sharpen_out, "Output directory")->required();

    // ---- filter ----
    auto* filter = app.add_subcommand("filter",
                                      "Low-frequency DCT filter a dataset");
    std::string filter_dataset_path, filter_out;
    int filter_keep = 30;
    filter->add_option("--dataset", filter_dataset_path, "Input dataset")
        ->required();
    filter->add_option("--keep", filter_keep,
                       "Percent of lowest frequencies to keep (1-100)");
    filter->add_option("--out", filter_out, "Output directory")->required();

    // ---- stats ----
    auto* stats = app.add_subcommand("stats", "Perturbation norm statistics");
    std::string stats_clean, stats_poisoned;
    stats->add_option("--clean", stats_clean, "Clean dataset")->required();
    stats->add_option("--poisoned", stats_poisoned, "Poisoned dataset")
        ->required();

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "Train the classifier");
    std::string train_dataset_path, train_out, train_report_path;
    TrainFlags train_flags;
    train_cmd->add_option("--dataset", train_dataset_path, "Training dataset")
        ->required();
    train_flags.attach(train_cmd);
    train_cmd->add_option("--out", train_out, "Model checkpoint directory")
        ->required();
    train_cmd->add_option("--report", train_report_path,
                          "Optional JSON training report path");

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
    std::string eval_model, eval_dataset_path;
    eval_cmd->add_option("--model", eval_model, "Checkpoint directory")
        ->required();
    eval_cmd->add_option("--dataset", eval_dataset_path, "Evaluation dataset")
        ->required();

    // ---- shortcut-eval ----
    auto* shortcut = app.add_subcommand(
        "shortcut-eval", "Matched/shifted/random accuracy on a clean test set");
    std::string sc_model, sc_dataset, sc_kernels, sc_out, sc_format = "json";
    std::uint64_t sc_seed = 0;
    shortcut->add_option("--model", sc_model, "Checkpoint directory")->required();
    shortcut->add_option("--dataset", sc_dataset, "Clean test dataset")
        ->required();
    shortcut->add_option("--kernels", sc_kernels,
                         "Kernel base path (without .itns)")->required();
    shortcut->add_option("--seed", sc_seed, "Random seed")->required();
    shortcut->add_option("--out", sc_out, "Report path (stdout if omitted)");
    shortcut->add_option("--format", sc_format, "csv or json");

    // ---- sweep ----
    auto* sweep = app.add_subcommand("sweep", "Keep-fraction sweep with retraining");
    std::string sw_train, sw_test, sw_keeps = "10,20,30,40,50,60,70,80,90,100";
    std::string sw_out, sw_format = "csv";
    SharpenFlags sw_sharpen;
    TrainFlags sw_train_flags;
    bool sw_no_sharpen = false;
    sweep->add_option("--train", sw_train, "Training dataset")->required();
    sweep->add_option("--test", sw_test, "Clean test dataset")->required();
    sweep->add_option("--keeps", sw_keeps, "Comma list of keep percents");
    sw_sharpen.attach(sweep);
    sweep->add_flag("--no-sharpen", sw_no_sharpen,
                    "Sweep the filter only, without sharpening");
    sw_train_flags.attach(sweep);
    sweep->add_option("--out", sw_out, "Report path")->required();
    sweep->add_option("--format", sw_format, "csv or json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitArgs;
    }

    try {
        if (*synth) {
            synth_spec.width = synth_spec.height;
            synth_spec.seed = synth_seed;
            print_config("synth",
                         {{"classes", std::to_string(synth_spec.num_classes)},
                          {"size", std::to_string(synth_spec.height)},
                          {"train_per_class", std::to_string(synth_spec.train_per_class)},
                          {"test_per_class", std::to_string(synth_spec.test_per_class)},
                          {"amplitude", std::to_string(synth_spec.amplitude)},
                          {"noise_std", std::to_string(synth_spec.noise_std)},
                          {"seed", std::to_string(synth_seed)},
                          {"out", synth_out}});
            Rng rng(synth_seed);
            auto [train_ds, test_ds] = make_synthetic(synth_spec, rng);
            save_dataset(train_ds, synth_out + "/train");
            save_dataset(test_ds, synth_out + "/test");
        } else if (*poison) {
            print_config("poison",
                         {{"dataset", poison_dataset_path},
                          {"pb", std::to_string(poison_spec.blur_param)},
                          {"kernel_size", std::to_string(poison_spec.kernel_size)},
                          {"scheme", poison_scheme},
                          {"seed", std::to_string(poison_spec.seed)},
                          {"out", poison_out}});
            LabeledDataset ds = load_dataset_any(poison_dataset_path);
            poison_spec.num_classes = ds.num_classes;
            LabelScheme scheme;
            if (poison_scheme == "matched") scheme = LabelScheme::Matched;
            else if (poison_scheme == "shifted") scheme = LabelScheme::Shifted;
            else if (poison_scheme == "random") scheme = LabelScheme::Random;
            else {
                std::cerr << "error: --scheme must be matched, shifted, or random\n";
                return kExitArgs;
            }
            Rng rng(poison_spec.seed);
            auto kernels = gen_cuda_kernels(poison_spec, rng);
            LabeledDataset poisoned = poison_dataset(ds, kernels, scheme, rng);
            save_dataset(poisoned, poison_out);
            save_kernels(kernels, poison_spec, poison_out + "/kernels");
        } else if (*sharpen) {
            print_config("sharpen", {{"dataset", sharpen_dataset_path},
                                     {"sharpen", sharpen_flags.mode},
                                     {"seed", std::to_string(sharpen_seed)},
                                     {"out", sharpen_out}});
            LabeledDataset ds = load_dataset_any(sharpen_dataset_path);
            SharpenMode mode =
                parse_sharpen_mode(sharpen_flags.mode, sharpen_flags.rsk);
            Rng rng(sharpen_seed);
            save_dataset(sharpen_dataset(ds, mode, rng), sharpen_out);
        } else if (*filter) {
            print_config("filter", {{"dataset", filter_dataset_path},
                                    {"keep", std::to_string(filter_keep)},
                                    {"out", filter_out}});
            if (filter_keep < 1 || filter_keep > 100) {
                std::cerr << "error: --keep must be in 1..100\n";
                return kExitArgs;
            }
            LabeledDataset ds = load_dataset_any(filter_dataset_path);
            KeepFraction p(filter_keep / 100.0);
            for (auto& img : ds.images) img = frequency_filter(img, p);
            save_dataset(ds, filter_out);
        } else if (*stats) {
            print_config("stats", {{"clean", stats_clean},
                                   {"poisoned", stats_poisoned}});
            LabeledDataset clean = load_dataset_any(stats_clean);
            LabeledDataset poisoned = load_dataset_any(stats_poisoned);
            auto [l2, linf] = perturbation_stats(clean, poisoned);
            std::cout << "mean_l2=" << l2 << " mean_linf=" << linf << "\n";
        } else if (*train_cmd) {
            TrainConfig cfg = train_flags.resolve();
            print_config("train",
                         {{"dataset", train_dataset_path},
                          {"epochs", std::to_string(cfg.epochs)},
                          {"batch", std::to_string(cfg.batch_size)},
                          {"lr", std::to_string(cfg.lr)},
                          {"momentum", std::to_string(cfg.momentum)},
                          {"wd", std::to_string(cfg.weight_decay)},
                          {"schedule", train_flags.schedule},
                          {"augment", train_flags.augment},
                          {"seed", std::to_string(cfg.seed)},
                          {"out", train_out}});
            LabeledDataset ds = load_dataset_any(train_dataset_path);
            TrainReport rep = train(ds, cfg, train_flags.arch());
            for (std::size_t e = 0; e < rep.train_loss.size(); ++e)
                std::cerr << "epoch " << e << " loss " << rep.train_loss[e]
                          << " acc " << rep.train_acc[e] << "\n";
            save_model(rep.model, train_out);
            if (!train_report_path.empty()) {
                nlohmann::json j;
                j["train_loss"] = rep.train_loss;
                j["train_acc"] = rep.train_acc;
                std::ofstream out(train_report_path);
                out << j.dump(2) << "\n";
            }
        } else if (*eval_cmd) {
            print_config("eval",
                         {{"model", eval_model}, {"dataset", eval_dataset_path}});
            ModelParams model = load_model(eval_model);
            LabeledDataset ds = load_dataset_any(eval_dataset_path);
            std::cout << "accuracy=" << evaluate(model, ds) << "\n";
        } else if (*shortcut) {
            print_config("shortcut-eval", {{"model", sc_model},
                                           {"dataset", sc_dataset},
                                           {"kernels", sc_kernels},
                                           {"seed", std::to_string(sc_seed)}});
            ModelParams model = load_model(sc_model);
            LabeledDataset ds = load_dataset_any(sc_dataset);
            auto [kernels, unused_spec] = load_kernels(sc_kernels);
            Rng rng(sc_seed);
            ShortcutReport rep = run_shortcut_eval(model, ds, kernels, rng);
            ResultTable t;
            t.experiment = "shortcut-eval";
            t.config = {{"model", sc_model},
                        {"kernels", sc_kernels},
                        {"seed", std::to_string(sc_seed)}};
            t.columns = {"acc_matched", "acc_mismatched", "acc_random"};
            t.rows = {{rep.acc_matched, rep.acc_mismatched, rep.acc_random}};
            if (sc_out.empty()) {
                std::cout << "acc_matched=" << rep.acc_matched
                          << " acc_mismatched=" << rep.acc_mismatched
                          << " acc_random=" << rep.acc_random << "\n";
            } else {
                emit_report(t, sc_out, parse_format(sc_format));
            }
        } else if (*sweep) {
            TrainConfig cfg = sw_train_flags.resolve();
            print_config("sweep", {{"train", sw_train},
                                   {"test", sw_test},
                                   {"keeps", sw_keeps},
                                   {"sharpen", sw_no_sharpen ? "none" : sw_sharpen.mode},
                                   {"seed", std::to_string(cfg.seed)},
                                   {"out", sw_out}});
            std::vector<double> keeps = parse_keeps(sw_keeps);
            LabeledDataset train_ds = load_dataset_any(sw_train);
            LabeledDataset test_ds = load_dataset_any(sw_test);
            TransformChain prefix;
            if (!sw_no_sharpen)
                prefix.push_back(TransformStep::sharpen_step(
                    parse_sharpen_mode(sw_sharpen.mode, sw_sharpen.rsk)));
            auto rows = run_sweep(train_ds, test_ds, prefix, keeps, cfg,
                                  sw_train_flags.arch());
            ResultTable t;
            t.experiment = "keep-fraction-sweep";
            t.config = {{"train", sw_train},
                        {"test", sw_test},
                        {"sharpen", sw_no_sharpen ? "none" : sw_sharpen.mode},
                        {"seed", std::to_string(cfg.seed)}};
            t.columns = {"keep", "accuracy"};
            for (const auto& row : rows)
                t.rows.push_back({row.keep, row.accuracy});
            emit_report(t, sw_out, parse_format(sw_format));
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitArgs;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFormat;
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitArgs;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
