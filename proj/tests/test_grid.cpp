#include <catch_amalgamated.hpp>

#include <t2net/grid.hpp>
#include <t2net/rng.hpp>

using namespace t2net;

namespace {

LabelCube filled(std::size_t L, std::size_t W, std::size_t H, std::int8_t value) {
    return LabelCube{Tensor<std::int8_t>({L, W, H}, value), 0};
}

} // namespace

TEST_CASE("make_masks on fully unlabeled and fully labeled grids") {
    auto unknown = make_masks(filled(10, 10, 5, -1));
    CHECK(unknown.supervised_count() == 0);
    CHECK(unknown.unsupervised_count() == 500);

    auto known = make_masks(filled(10, 10, 5, 2));
    CHECK(known.supervised_count() == 500);
    CHECK(known.unsupervised_count() == 0);
}

TEST_CASE("make_masks counts exactly the labeled cells") {
    auto cube = filled(10, 10, 10, -1);
    const std::vector<std::size_t> labeled = {0, 17, 333, 640, 999};
    for (std::size_t i : labeled) cube.labels[i] = static_cast<std::int8_t>(i % 4);
    std::size_t scanned = 0;
    for (std::size_t i = 0; i < cube.cells(); ++i) scanned += cube.labels[i] != -1;
    auto masks = make_masks(cube);
    CHECK(scanned == 5);
    CHECK(masks.supervised_count() == 5);
    for (std::size_t i : labeled) CHECK(masks.supervised[i]);
}

TEST_CASE("make_masks rejects invalid class codes and names the cell") {
    auto cube = filled(2, 2, 2, 0);
    cube.labels[5] = 4;
    REQUIRE_THROWS_AS(make_masks(cube), ValidationError);
    REQUIRE_THROWS_WITH(make_masks(cube), Catch::Matchers::ContainsSubstring("cell 5"));
    cube.labels[5] = -2;
    REQUIRE_THROWS_AS(make_masks(cube), ValidationError);
}

TEST_CASE("one_hot rows") {
    auto cube = filled(1, 1, 3, 0);
    cube.labels[1] = -1;
    cube.labels[2] = 3;
    auto oh = one_hot(cube);
    REQUIRE(oh.shape() == Shape{1, 1, 3, 4});
    CHECK(std::vector<float>(oh.data(), oh.data() + 4) == std::vector<float>{1, 0, 0, 0});
    CHECK(std::vector<float>(oh.data() + 4, oh.data() + 8) == std::vector<float>{0, 0, 0, 0});
    CHECK(std::vector<float>(oh.data() + 8, oh.data() + 12) == std::vector<float>{0, 0, 0, 1});
}

TEST_CASE("mask partition and one_hot/argmax round trip on random cubes") {
    RandomStream rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t L = 1 + rng.below(6), W = 1 + rng.below(6), H = 1 + rng.below(4);
        auto cube = filled(L, W, H, -1);
        for (std::size_t i = 0; i < cube.cells(); ++i) cube.labels[i] = static_cast<std::int8_t>(int(rng.below(5)) - 1);
        auto masks = make_masks(cube);
        CHECK(masks.supervised_count() + masks.unsupervised_count() == L * W * H);
        auto oh = one_hot(cube);
        for (std::size_t i = 0; i < cube.cells(); ++i) {
            CHECK(masks.supervised[i] != masks.unsupervised[i]);
            if (!masks.supervised[i]) continue;
            const float* row = oh.data() + i * 4;
            const auto arg = std::max_element(row, row + 4) - row;
            CHECK(arg == cube.labels[i]);
        }
    }
}

TEST_CASE("ClassDistribution validation") {
    CHECK_NOTHROW(ClassDistribution({0.4, 0.3, 0.2, 0.1}));
    CHECK_NOTHROW(ClassDistribution({0.25, 0.25, 0.25, 0.25 + 5e-7}));
    CHECK_THROWS_AS(ClassDistribution({-0.1, 0.5, 0.3, 0.3}), ValidationError);
    CHECK_THROWS_AS(ClassDistribution({0.25, 0.25, 0.25, 0.25 + 2e-6}), ValidationError);
    CHECK(ClassDistribution({0.1, 0.6, 0.2, 0.1}).argmax() == 1);
}

TEST_CASE("RegionSpec defaults and validation") {
    RegionSpec r;
    CHECK(r.length == 10);
    CHECK(r.width == 10);
    CHECK(r.height == 5);
    CHECK(r.channels == 12);
    CHECK_NOTHROW(r.validate());
    r.history_len = 0;
    CHECK_THROWS_AS(r.validate(), ConfigError);
}
