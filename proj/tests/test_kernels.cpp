#include "doctest.h"

#include <cmath>
#include <random>

#include "dreamforge/kernels.hpp"
#include "dreamforge/rle.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace dreamforge;

TEST_CASE("parallel codec kernels equal the serial ones") {
    std::mt19937_64 rng(3);
    std::vector<BitGrid> grids;
    for (int i = 0; i < 200; ++i) {
        grids.push_back(testing::random_grid(rng, std::uniform_int_distribution<int>(1, 50)(rng),
                                             std::uniform_int_distribution<int>(1, 50)(rng)));
    }
    const auto s = kernels::serial::encode(grids);
    const auto p = kernels::parallel::encode(grids);
    CHECK(s == p);
    CHECK(kernels::serial::decode(s) == grids);
    CHECK(kernels::parallel::decode(p) == grids);
}

TEST_CASE("uncertainty kernels agree with each other and the pixel oracle") {
    std::mt19937_64 rng(9);
    std::vector<ObjectInstance> objs;
    std::vector<ConfidenceMap> confs;
    for (int i = 0; i < 100; ++i) {
        objs.push_back(testing::random_object(rng, 40, 30, i, 0));
        ConfidenceMap c{objs.back().bbox.w, objs.back().bbox.h, {}};
        for (int k = 0; k < c.width * c.height; ++k) c.values.push_back(std::uniform_real_distribution<double>(0, 1)(rng));
        confs.push_back(std::move(c));
    }
    const Mask empty = Mask::empty(40, 30);
    std::vector<kernels::UncertaintyInput> in;
    for (std::size_t i = 0; i < objs.size(); ++i) in.push_back({&objs[i].mask, objs[i].bbox, &confs[i]});
    const ConfidenceMap one{1, 1, {0.5}};
    in.push_back({&empty, BBox{0, 0, 1, 1}, &one});
    const auto s = kernels::serial::uncertainties(in);
    const auto p = kernels::parallel::uncertainties(in);
    for (std::size_t i = 0; i < objs.size(); ++i) {
        CHECK(s[i] == p[i]);
        CHECK(std::abs(s[i] - oracle::uncertainty(objs[i].mask, objs[i].bbox, confs[i])) <= 1e-12);
    }
    CHECK(std::isnan(s.back()));
    CHECK(std::isnan(p.back()));
}

TEST_CASE("column mean and sra kernels agree") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    std::vector<std::vector<double>> rows(37, std::vector<double>(64));
    for (auto& r : rows) {
        for (auto& x : r) x = g(rng);
    }
    std::vector<std::span<const double>> spans(rows.begin(), rows.end());
    const auto s = kernels::serial::column_mean(spans);
    CHECK(s == kernels::parallel::column_mean(spans));
    const auto o = oracle::column_mean(rows);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(s[i] - o[i]) <= 1e-12);

    std::vector<kernels::SraItem> items;
    for (std::size_t i = 0; i + 1 < rows.size(); i += 2) items.push_back({rows[i], rows[i + 1]});
    const auto a = kernels::serial::sra(items);
    const auto b = kernels::parallel::sra(items);
    CHECK(a.losses == b.losses);
    CHECK(a.grads == b.grads);
    CHECK(kernels::max_threads() >= 1);
}
