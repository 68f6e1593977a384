#include <doctest.h>

#include <stdexcept>

#include "depoison/rng.hpp"
#include "depoison/tensor.hpp"

using namespace depoison;

TEST_CASE("clip01 clamps out-of-range values and keeps in-range ones") {
    ImageTensor img(1, 1, 3);
    img.data = {1.7f, -0.2f, 0.4f};
    ImageTensor c = clip01(img);
    CHECK(c.data[0] == 1.0f);
    CHECK(c.data[1] == 0.0f);
    CHECK(c.data[2] == 0.4f);
}

static LabeledDataset make_ds(int n, int num_classes) {
    LabeledDataset ds;
    ds.num_classes = num_classes;
    for (int i = 0; i < n; ++i) {
        ds.images.emplace_back(1, 2, 2, static_cast<float>(i) / n);
        ds.labels.push_back(i % num_classes);
    }
    return ds;
}

TEST_CASE("subset") {
    LabeledDataset ds = make_ds(10, 2);
    SUBCASE("empty index list gives empty dataset") {
        LabeledDataset s = subset(ds, {});
        CHECK(s.size() == 0);
        CHECK(s.num_classes == 2);
    }
    SUBCASE("picks the right items") {
        LabeledDataset s = subset(ds, {3, 7});
        CHECK(s.size() == 2);
        CHECK(s.labels[0] == 1);
        CHECK(s.images[0].data[0] == doctest::Approx(0.3));
    }
    SUBCASE("out-of-range index throws") {
        CHECK_THROWS_AS(subset(ds, {10}), std::out_of_range);
    }
}

TEST_CASE("split sizes and determinism") {
    LabeledDataset ds = make_ds(100, 4);
    Rng r1(9), r2(9);
    auto [tr1, te1] = split(ds, 0.8, r1);
    CHECK(tr1.size() == 80);
    CHECK(te1.size() == 20);
    auto [tr2, te2] = split(ds, 0.8, r2);
    for (std::size_t i = 0; i < tr1.size(); ++i)
        CHECK(tr1.labels[i] == tr2.labels[i]);
}

TEST_CASE("split rejects fractions outside (0,1)") {
    LabeledDataset ds = make_ds(10, 2);
    Rng r(0);
    CHECK_THROWS_AS(split(ds, 0.0, r), std::invalid_argument);
    CHECK_THROWS_AS(split(ds, 1.0, r), std::invalid_argument);
    CHECK_THROWS_AS(split(ds, 1.5, r), std::invalid_argument);
}

TEST_CASE("stratified split keeps per-class counts within +-1") {
    LabeledDataset ds = make_ds(103, 4);  // uneven class sizes
    Rng r(1);
    auto [tr, te] = split(ds, 0.7, r, true);
    std::vector<int> train_counts(4, 0), total_counts(4, 0);
    for (int l : tr.labels) ++train_counts[l];
    for (int l : ds.labels) ++total_counts[l];
    for (int c = 0; c < 4; ++c) {
        double expected = 0.7 * total_counts[c];
        CHECK(std::abs(train_counts[c] - expected) <= 1.0);
    }
}
