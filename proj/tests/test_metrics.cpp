#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tabkan/metrics.hpp"

#include <cmath>
#include <random>

using namespace tabkan;

namespace {

// O(n^2) pairwise oracle: P(score+ > score-) + 0.5 P(tie).
double auc_bruteforce(const std::vector<double>& s, const std::vector<int>& y) {
    double wins = 0.0;
    long pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[i] != 1 || y[j] != 0) continue;
            ++pairs;
            if (s[i] > s[j])
                wins += 1.0;
            else if (s[i] == s[j])
                wins += 0.5;
        }
    return wins / pairs;
}

}  // namespace

TEST_CASE("roc_auc equals the pairwise brute force on 50 random instances with ties") {
    Rng rng(42);
    std::uniform_int_distribution<int> len(5, 60);
    std::uniform_int_distribution<int> lab(0, 1);
    std::uniform_int_distribution<int> level(0, 6);  // coarse levels force ties
    for (int t = 0; t < 50; ++t) {
        int n = len(rng);
        std::vector<double> s(n);
        std::vector<int> y(n);
        bool has0 = false, has1 = false;
        for (int i = 0; i < n; ++i) {
            y[i] = lab(rng);
            s[i] = level(rng) / 6.0;
            (y[i] ? has1 : has0) = true;
        }
        if (!has0 || !has1) {
            CHECK(!metrics::roc_auc(s, y).has_value());
            continue;
        }
        auto auc = metrics::roc_auc(s, y);
        REQUIRE(auc.has_value());
        CHECK(*auc == doctest::Approx(auc_bruteforce(s, y)).epsilon(1e-12));
    }
}

TEST_CASE("auc edge cases") {
    CHECK(*metrics::roc_auc({0.1, 0.9}, {0, 1}) == doctest::Approx(1.0));
    CHECK(*metrics::roc_auc({0.9, 0.1}, {0, 1}) == doctest::Approx(0.0));
    CHECK(*metrics::roc_auc({0.5, 0.5, 0.5}, {0, 1, 0}) == doctest::Approx(0.5));
    CHECK(!metrics::roc_auc({0.2, 0.3}, {1, 1}).has_value());
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
    Rng rng(5);
    std::normal_distribution<double> norm;
    std::uniform_int_distribution<int> lab(0, 1);
    std::vector<double> s(40);
    std::vector<int> y(40);
    for (int i = 0; i < 40; ++i) {
        s[i] = norm(rng);
        y[i] = lab(rng);
    }
    y[0] = 0;
    y[1] = 1;
    double base = *metrics::roc_auc(s, y);
    std::vector<double> sexp = s, saff = s;
    for (auto& v : sexp) v = std::exp(v);
    for (auto& v : saff) v = 3.0 * v + 11.0;
    CHECK(*metrics::roc_auc(sexp, y) == doctest::Approx(base).epsilon(1e-12));
    CHECK(*metrics::roc_auc(saff, y) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("auc complement identity") {
    Rng rng(6);
    std::uniform_real_distribution<double> u;
    std::uniform_int_distribution<int> lab(0, 1);
    std::vector<double> s(30);
    std::vector<int> y(30), yflip(30);
    for (int i = 0; i < 30; ++i) {
        s[i] = std::round(u(rng) * 5) / 5.0;
        y[i] = lab(rng);
        yflip[i] = 1 - y[i];
    }
    y[0] = 0;
    y[1] = 1;
    yflip[0] = 1;
    yflip[1] = 0;
    CHECK(*metrics::roc_auc(s, y) + *metrics::roc_auc(s, yflip) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("f1 conventions") {
    // no predicted and no actual positives -> 0 by convention
    CHECK(metrics::f1({0, 0}, {0, 0}) == 0.0);
    CHECK(metrics::f1({1, 1, 0}, {1, 1, 0}) == doctest::Approx(1.0));
    // tp=1 fp=1 fn=1 -> f1 = 0.5
    CHECK(metrics::f1({1, 1, 0}, {1, 0, 1}) == doctest::Approx(0.5));
}

TEST_CASE("macro f1 equals mean of both orientations for binary") {
    std::vector<int> p = {1, 0, 1, 1, 0, 0, 1};
    std::vector<int> y = {1, 0, 0, 1, 1, 0, 0};
    double pos = metrics::f1(p, y, 1);
    double neg = metrics::f1(p, y, 0);
    CHECK(metrics::macro_f1(p, y, 2) == doctest::Approx(0.5 * (pos + neg)).epsilon(1e-12));
}

TEST_CASE("3-class macro f1 against hand enumeration") {
    std::vector<int> p = {0, 1, 2, 0, 1, 2, 0, 0, 1};
    std::vector<int> y = {0, 1, 2, 1, 2, 0, 0, 2, 1};
    // class 0: tp=2 fp=2 fn=1 -> f1 = 2*2/(2*2+2+1)=4/7
    // class 1: tp=2 fp=1 fn=1 -> 4/6
    // class 2: tp=1 fp=1 fn=2 -> 2/5
    double expect = (4.0 / 7.0 + 4.0 / 6.0 + 2.0 / 5.0) / 3.0;
    CHECK(metrics::macro_f1(p, y, 3) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("accuracy") {
    CHECK(metrics::accuracy({1, 1, 1}, {1, 1, 1}) == 1.0);
    CHECK(metrics::accuracy({0, 0, 0}, {1, 1, 1}) == 0.0);
    std::vector<int> p(10, 1), y(10, 1);
    for (int i = 0; i < 3; ++i) y[i] = 0;
    CHECK(metrics::accuracy(p, y) == doctest::Approx(0.7));
}

TEST_CASE("evaluate fills the report coherently") {
    Matrix logits(4, 2);
    logits << 2, -1, -1, 2, 3, 0, 0, 3;
    std::vector<int> y = {0, 1, 0, 1};
    auto rep = metrics::evaluate(logits, y, 2);
    CHECK(rep.accuracy == doctest::Approx(1.0));
    REQUIRE(rep.auc.has_value());
    CHECK(*rep.auc == doctest::Approx(1.0));
    long total = 0;
    for (const auto& row : rep.confusion)
        for (long v : row) total += v;
    CHECK(total == 4);
}

TEST_CASE("softmax rows are stable and normalized") {
    Matrix logits(2, 3);
    logits << 1000, 1000, 1000, -1000, 0, 1000;
    Matrix p = metrics::softmax_rows(logits);
    for (int r = 0; r < 2; ++r) CHECK(p.row(r).sum() == doctest::Approx(1.0));
    CHECK(p(0, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(p(1, 2) == doctest::Approx(1.0));
}

TEST_CASE("normal quantile inverts the cdf") {
    for (double p : {0.001, 0.05, 0.3, 0.5, 0.77, 0.999}) {
        double z = tabkan::normal_quantile(p);
        CHECK(tabkan::normal_cdf(z) == doctest::Approx(p).epsilon(1e-10));
    }
    CHECK(tabkan::normal_quantile(0.5) == doctest::Approx(0.0));
}
