#include <doctest.h>

#include <cmath>

#include "depoison/model.hpp"
#include "depoison/rng.hpp"

using namespace depoison;

namespace {

ModelArch bench_arch() {
    ModelArch a;
    a.conv1_out = 8;
    a.conv2_out = 16;
    return a;
}

LabeledDataset random_labeled(int n, int classes, int h, int w, Rng& rng,
                              bool shuffle_labels = false) {
    LabeledDataset ds;
    ds.num_classes = classes;
    for (int i = 0; i < n; ++i) {
        ImageTensor img(3, h, w);
        for (auto& v : img.data) v = static_cast<float>(rng.uniform());
        ds.images.push_back(std::move(img));
        ds.labels.push_back(shuffle_labels
                                ? static_cast<int>(rng.uniform_int(classes))
                                : i % classes);
    }
    return ds;
}

}  // namespace

TEST_CASE("untrained model scores at chance on a balanced test set") {
    // K=4 balanced set; accuracy over 10 random inits stays in the chance band
    Rng gen(1);
    LabeledDataset test = random_labeled(200, 4, 8, 8, gen);
    ModelArch arch;
    arch.height = 8;
    arch.width = 8;
    arch.num_classes = 4;
    arch.conv1_out = 8;
    arch.conv2_out = 8;
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        ModelParams m = init_model(arch, rng);
        m.norm_mean = {0.5, 0.5, 0.5};
        m.norm_std = {0.3, 0.3, 0.3};
        total += evaluate(m, test);
    }
    const double mean_acc = total / 10.0;
    CHECK(mean_acc > 0.15);
    CHECK(mean_acc < 0.35);
}

TEST_CASE("memorizes a 32-sample fixture") {
    Rng gen(7);
    LabeledDataset tiny = random_labeled(32, 4, 8, 8, gen);
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.batch_size = 32;
    cfg.lr = 0.05;
    cfg.weight_decay = 0.0;
    cfg.seed = 3;
    cfg.num_threads = 1;
    ModelArch arch;
    arch.conv1_out = 8;
    arch.conv2_out = 16;
    TrainReport rep = train(tiny, cfg, arch);
    CHECK(rep.train_acc.back() == doctest::Approx(1.0));
    CHECK(evaluate(rep.model, tiny) == doctest::Approx(1.0));

    SUBCASE("loss is non-increasing after warmup, smoothed over 5 epochs") {
        auto window = [&](int e) {
            double s = 0.0;
            for (int i = e; i < e + 5; ++i) s += rep.train_loss[i];
            return s / 5.0;
        };
        for (int e = 10; e + 10 < static_cast<int>(rep.train_loss.size());
             e += 5)
            CHECK(window(e + 5) <= window(e) + 1e-6);
    }
}

TEST_CASE("training is deterministic per seed") {
    Rng gen(11);
    LabeledDataset ds = random_labeled(64, 4, 8, 8, gen);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 16;
    cfg.lr = 0.05;
    cfg.seed = 21;
    cfg.random_crop = true;
    cfg.hflip = true;
    TrainReport a = train(ds, cfg, bench_arch());
    TrainReport b = train(ds, cfg, bench_arch());
    CHECK(a.train_loss == b.train_loss);
    CHECK(a.model.conv1_w == b.model.conv1_w);
    CHECK(a.model.fc_w == b.model.fc_w);
}

TEST_CASE("shuffled labels stay at chance on held-out data") {
    Rng gen(13);
    LabeledDataset train_ds = random_labeled(128, 4, 8, 8, gen, true);
    LabeledDataset test_ds = random_labeled(200, 4, 8, 8, gen);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 32;
    cfg.lr = 0.05;
    cfg.seed = 5;
    TrainReport rep = train(train_ds, cfg, bench_arch());
    double acc = evaluate(rep.model, test_ds);
    CHECK(acc > 0.10);
    CHECK(acc < 0.45);
}

TEST_CASE("empty dataset is rejected") {
    TrainConfig cfg;
    LabeledDataset empty;
    CHECK_THROWS_AS(train(empty, cfg, ModelArch{}), std::invalid_argument);
}

TEST_CASE("divergence raises a distinct error") {
    Rng gen(17);
    LabeledDataset ds = random_labeled(64, 4, 8, 8, gen);
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch_size = 64;
    cfg.lr = 1e6;  // guaranteed blowup
    cfg.schedule = LrSchedule::Constant;
    cfg.seed = 1;
    CHECK_THROWS_AS(train(ds, cfg, bench_arch()), DivergenceError);
}

TEST_CASE("config validation") {
    TrainConfig cfg;
    cfg.lr = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.momentum = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
