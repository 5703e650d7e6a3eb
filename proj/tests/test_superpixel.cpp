#include <doctest.h>

#include <random>
#include <set>

#include "lesref/common.hpp"
#include "lesref/superpixel.hpp"
#include "testutil.hpp"

using namespace lesref;
using namespace lesref::sp;

namespace {

void check_partition_invariants(const SuperpixelLabeling& l, const Mask& mask, int n_sp) {
    REQUIRE(l.h == mask.h);
    REQUIRE(l.w == mask.w);
    int64_t masked = mask.count();
    CHECK(l.n_eff == std::min<int64_t>(n_sp, masked));
    std::vector<int64_t> sizes(size_t(l.n_eff), 0);
    for (int y = 0; y < l.h; ++y)
        for (int x = 0; x < l.w; ++x) {
            int32_t lab = l.at(y, x);
            if (mask.at(y, x)) {
                REQUIRE(lab >= 0);
                REQUIRE(lab < l.n_eff);
                ++sizes[size_t(lab)];
            } else {
                REQUIRE(lab == -1);
            }
        }
    for (int64_t s : sizes) CHECK(s > 0);
}

}  // namespace

TEST_SUITE_BEGIN("superpixel");

TEST_CASE("single cluster and per-pixel degenerate cases") {
    std::mt19937_64 rng(31);
    Mask m = testutil::random_blob_mask(16, 16, 2, rng);
    if (m.empty_fg()) m.at(5, 5) = 1;
    auto f = testutil::random_tensor({3, 16, 16}, rng);

    auto one = mask_slic(f, m, 1);
    check_partition_invariants(one, m, 1);
    CHECK(one.n_eff == 1);

    Mask seven(8, 8);
    int placed = 0;
    for (int y = 0; y < 8 && placed < 7; ++y)
        for (int x = 0; x < 8 && placed < 7; x += 3) {
            seven.at(y, x) = 1;
            ++placed;
        }
    auto f8 = testutil::random_tensor({2, 8, 8}, rng);
    auto cap = mask_slic(f8, seven, 20);
    check_partition_invariants(cap, seven, 20);
    CHECK(cap.n_eff == 7);
    std::set<int32_t> distinct;
    for (auto v : cap.labels)
        if (v >= 0) distinct.insert(v);
    CHECK(distinct.size() == 7);  // one pixel per label
}

TEST_CASE("two well-separated constant-feature blobs split exactly") {
    const int h = 20, w = 40;
    Mask m(h, w);
    nn::Tensor f({2, h, w});
    for (int y = 6; y < 14; ++y)
        for (int x = 3; x < 11; ++x) {
            m.at(y, x) = 1;
            f[(0 * int64_t(h) + y) * w + x] = 1.0;  // blob A feature (1,0)
        }
    for (int y = 6; y < 14; ++y)
        for (int x = 29; x < 37; ++x) {
            m.at(y, x) = 1;
            f[(1 * int64_t(h) + y) * w + x] = 1.0;  // blob B feature (0,1)
        }
    auto l = mask_slic(f, m, 2);
    check_partition_invariants(l, m, 2);
    // every pixel of a blob shares one label, and the blobs differ
    int32_t la = l.at(6, 3), lb = l.at(6, 29);
    CHECK(la != lb);
    for (int y = 6; y < 14; ++y) {
        for (int x = 3; x < 11; ++x) CHECK(l.at(y, x) == la);
        for (int x = 29; x < 37; ++x) CHECK(l.at(y, x) == lb);
    }
}

TEST_CASE("partition invariants and cost monotonicity on random inputs") {
    std::mt19937_64 rng(32);
    for (int t = 0; t < 40; ++t) {
        int h = 10 + int(rng() % 20), w = 10 + int(rng() % 20);
        Mask m = testutil::random_blob_mask(h, w, 1 + int(rng() % 4), rng);
        if (m.empty_fg()) continue;
        auto f = testutil::random_tensor({4, h, w}, rng);
        int n_sp = 1 + int(rng() % 12);
        auto l = mask_slic(f, m, n_sp);
        check_partition_invariants(l, m, n_sp);
        for (size_t i = 1; i < l.cost_history.size(); ++i)
            CHECK(l.cost_history[i] <= l.cost_history[i - 1] + 1e-12);
    }
}

TEST_CASE("deterministic and translation-equivariant") {
    std::mt19937_64 rng(33);
    const int h = 24, w = 24;
    Mask m = testutil::random_blob_mask(14, 14, 2, rng);
    if (m.empty_fg()) m.at(7, 7) = 1;
    auto f = testutil::random_tensor({3, 14, 14}, rng);

    // embed at two offsets
    auto embed = [&](int oy, int ox) {
        Mask me(h, w);
        nn::Tensor fe({3, h, w});
        for (int y = 0; y < 14; ++y)
            for (int x = 0; x < 14; ++x) {
                me.at(y + oy, x + ox) = m.at(y, x);
                for (int c = 0; c < 3; ++c)
                    fe[(int64_t(c) * h + y + oy) * w + x + ox] =
                        f[(int64_t(c) * 14 + y) * 14 + x];
            }
        return std::pair{me, fe};
    };
    auto [m1, f1] = embed(2, 3);
    auto [m2, f2] = embed(6, 8);
    auto l1 = mask_slic(f1, m1, 4, 0.3);
    auto l1b = mask_slic(f1, m1, 4, 0.3);
    CHECK(l1.labels == l1b.labels);  // deterministic

    auto l2 = mask_slic(f2, m2, 4, 0.3);
    for (int y = 0; y < 14; ++y)
        for (int x = 0; x < 14; ++x)
            CHECK(l1.at(y + 2, x + 3) == l2.at(y + 6, x + 8));
}

TEST_CASE("errors") {
    std::mt19937_64 rng(34);
    auto f = testutil::random_tensor({2, 8, 8}, rng);
    Mask empty(8, 8);
    CHECK_THROWS_AS(mask_slic(f, empty, 4), ValidationError);
    Mask m(8, 8);
    m.at(1, 1) = 1;
    CHECK_THROWS_AS(mask_slic(f, m, 0), ValidationError);
    Mask wrong(9, 8);
    wrong.at(0, 0) = 1;
    CHECK_THROWS_AS(mask_slic(f, wrong, 2), ValidationError);
}

TEST_SUITE_END();
