#include "qcomp/gf2.hpp"

#include <random>

#include "gtest/gtest.h"

using namespace qcomp;

namespace {

// Brute-force rank: size of the row span, found by enumerating all 2^r
// combinations of rows.
size_t rank_by_enumeration(const F2Mat &m) {
    std::vector<std::string> seen;
    size_t r = m.n_rows();
    for (uint64_t c = 0; c < (uint64_t{1} << r); c++) {
        F2Vec acc(m.n_cols());
        for (size_t i = 0; i < r; i++) {
            if ((c >> i) & 1) {
                acc ^= m.row(i);
            }
        }
        std::string s = acc.str();
        if (std::find(seen.begin(), seen.end(), s) == seen.end()) {
            seen.push_back(s);
        }
    }
    size_t k = 0;
    while ((size_t{1} << k) < seen.size()) {
        k++;
    }
    return k;
}

F2Mat random_matrix(size_t rows, size_t cols, std::mt19937_64 &rng) {
    F2Mat m(cols);
    for (size_t i = 0; i < rows; i++) {
        F2Vec v(cols);
        for (size_t j = 0; j < cols; j++) {
            v.set(j, rng() & 1);
        }
        m.push_row(v);
    }
    return m;
}

}  // namespace

TEST(gf2, VecBasics) {
    F2Vec v = F2Vec::from_string("10110");
    EXPECT_EQ(v.size(), 5u);
    EXPECT_EQ(v.weight(), 3u);
    EXPECT_TRUE(v.get(0));
    EXPECT_FALSE(v.get(1));
    EXPECT_EQ(v.str(), "10110");
    F2Vec w = F2Vec::from_string("01100");
    EXPECT_EQ((v ^ w).str(), "11010");
    EXPECT_EQ(v.dot(w), 1);
    EXPECT_THROW(F2Vec::from_string("10a"), InputError);
    EXPECT_THROW(v.dot(F2Vec(4)), DimensionError);
}

TEST(gf2, VecLongerThanOneWord) {
    F2Vec v(130);
    v.set(0, true);
    v.set(64, true);
    v.set(129, true);
    EXPECT_EQ(v.weight(), 3u);
    F2Vec w(130);
    w.set(129, true);
    EXPECT_EQ(v.dot(w), 1);
    EXPECT_EQ(F2Vec::from_string(v.str()), v);
}

TEST(gf2, LexicographicOrder) {
    EXPECT_LT(F2Vec::from_string("001"), F2Vec::from_string("010"));
    EXPECT_LT(F2Vec::from_string("011"), F2Vec::from_string("100"));
    EXPECT_FALSE(F2Vec::from_string("100") < F2Vec::from_string("100"));
}

TEST(gf2, RankExamples) {
    EXPECT_EQ(rank(F2Mat::identity(3)), 3u);
    EXPECT_EQ(rank(F2Mat::zeros(2, 4)), 0u);
    F2Mat m = F2Mat::from_rows({"110", "011", "101"});
    EXPECT_EQ(rank(m), 2u);
    EXPECT_EQ(rank_by_enumeration(m), 2u);
}

TEST(gf2, RankMatchesEnumeration) {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 200; t++) {
        F2Mat m = random_matrix(1 + rng() % 6, 1 + rng() % 7, rng);
        ASSERT_EQ(rank(m), rank_by_enumeration(m)) << m.to_text();
        ASSERT_EQ(rank(m), rank(m));
    }
}

TEST(gf2, KernelExamples) {
    EXPECT_TRUE(kernel_basis(F2Mat::identity(3)).empty());

    // Oracle: enumerate all 8 vectors and keep those with Mv = 0.
    F2Mat m = F2Mat::from_rows({"110"});
    auto basis = kernel_basis(m);
    ASSERT_EQ(basis.size(), 2u);
    std::vector<std::string> expected;
    for (uint64_t x = 0; x < 8; x++) {
        F2Vec v = F2Vec::from_mask(3, x);
        if (syndrome(m, v).weight() == 0) {
            expected.push_back(v.str());
        }
    }
    std::vector<std::string> spanned;
    for (uint64_t c = 0; c < 4; c++) {
        F2Vec acc(3);
        for (size_t i = 0; i < 2; i++) {
            if ((c >> i) & 1) {
                acc ^= basis[i];
            }
        }
        spanned.push_back(acc.str());
    }
    std::sort(expected.begin(), expected.end());
    std::sort(spanned.begin(), spanned.end());
    EXPECT_EQ(spanned, expected);

    auto full = kernel_basis(F2Mat::zeros(1, 2));
    EXPECT_EQ(full.size(), 2u);
    EXPECT_EQ(rank(F2Mat(2, full)), 2u);
}

TEST(gf2, KernelProperties) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 200; t++) {
        F2Mat m = random_matrix(rng() % 6, 1 + rng() % 9, rng);
        auto basis = kernel_basis(m);
        ASSERT_EQ(rank(m) + basis.size(), m.n_cols());
        for (const auto &v : basis) {
            ASSERT_EQ(syndrome(m, v).weight(), 0u);
        }
        ASSERT_EQ(rank(F2Mat(m.n_cols(), basis)), basis.size());
    }
}

TEST(gf2, SyndromeRepetitionTable) {
    F2Mat h = F2Mat::from_rows({"101", "011"});
    EXPECT_EQ(syndrome(h, F2Vec::from_string("000")).str(), "00");
    EXPECT_EQ(syndrome(h, F2Vec::from_string("100")).str(), "10");
    EXPECT_EQ(syndrome(h, F2Vec::from_string("010")).str(), "01");
    EXPECT_EQ(syndrome(h, F2Vec::from_string("001")).str(), "11");
    EXPECT_THROW(syndrome(h, F2Vec(4)), DimensionError);
}

TEST(gf2, SyndromeIsLinear) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 100; t++) {
        size_t n = 1 + rng() % 20;
        F2Mat m = random_matrix(rng() % 8, n, rng);
        F2Vec v(n), w(n);
        for (size_t j = 0; j < n; j++) {
            v.set(j, rng() & 1);
            w.set(j, rng() & 1);
        }
        ASSERT_EQ(syndrome(m, v ^ w), syndrome(m, v) ^ syndrome(m, w));
    }
}

TEST(gf2, SolveFindsParticularSolution) {
    F2Mat h = F2Mat::from_rows({"101", "011"});
    auto x = solve(h, F2Vec::from_string("11"));
    ASSERT_TRUE(x.has_value());
    EXPECT_EQ(syndrome(h, *x).str(), "11");
    F2Mat singular = F2Mat::from_rows({"11", "11"});
    EXPECT_FALSE(solve(singular, F2Vec::from_string("10")).has_value());
}

TEST(gf2, CssHashShapes) {
    auto [hz, hx] = sample_css_hash(3, 2, 0, 17);
    EXPECT_EQ(hz.n_rows(), 2u);
    EXPECT_EQ(rank(hz), 2u);
    EXPECT_EQ(hx.n_rows(), 0u);
    EXPECT_EQ(hx.n_cols(), 3u);
    EXPECT_THROW(sample_css_hash(4, 3, 2, 1), ConstructionError);
}

TEST(gf2, CssHashOrthogonality) {
    auto [hz, hx] = sample_css_hash(9, 6, 2, 1);
    int products = 0;
    for (size_t i = 0; i < hz.n_rows(); i++) {
        for (size_t j = 0; j < hx.n_rows(); j++) {
            EXPECT_EQ(hz.row(i).dot(hx.row(j)), 0);
            products++;
        }
    }
    EXPECT_EQ(products, 12);
    EXPECT_EQ(rank(hz), 6u);
    EXPECT_EQ(rank(hx), 2u);
    for (uint64_t seed = 0; seed < 50; seed++) {
        auto [a, b] = sample_css_hash(12, 1 + seed % 6, seed % 5, seed);
        ASSERT_TRUE(orthogonal(a, b));
        ASSERT_EQ(rank(a), a.n_rows());
        ASSERT_EQ(rank(b), b.n_rows());
    }
}

TEST(gf2, CssHashDeterministicPerSeed) {
    auto a = sample_css_hash(10, 4, 3, 99);
    auto b = sample_css_hash(10, 4, 3, 99);
    auto c = sample_css_hash(10, 4, 3, 100);
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
    EXPECT_FALSE(a.first == c.first && a.second == c.second);
}

TEST(gf2, CssHashRowsAreNested) {
    // Growing n_Z under a fixed seed extends the earlier matrix.
    auto small = sample_css_hash(10, 3, 0, 5).first;
    auto big = sample_css_hash(10, 6, 0, 5).first;
    for (size_t i = 0; i < small.n_rows(); i++) {
        EXPECT_EQ(small.row(i), big.row(i));
    }
}

TEST(gf2, ShorChecksAreALegalCssShape) {
    F2Mat hz = F2Mat::from_rows({"110000000", "011000000", "000110000", "000011000",
                                 "000000110", "000000011"});
    F2Mat hx = F2Mat::from_rows({"000111111", "111111000"});
    EXPECT_TRUE(orthogonal(hz, hx));
    EXPECT_EQ(rank(hz) + rank(hx), 8u);
}

TEST(gf2, TextRoundTrip) {
    F2Mat m = F2Mat::from_rows({"1010", "0111"});
    EXPECT_EQ(m.to_text(), "2 4\n1010\n0111\n");
    EXPECT_EQ(F2Mat::from_text(m.to_text()), m);
    EXPECT_EQ(F2Mat::from_text("0 3\n").n_cols(), 3u);
    EXPECT_THROW(F2Mat::from_text("2 3\n101\n"), InputError);
    EXPECT_THROW(F2Mat::from_text("1 3\n1012\n"), InputError);
}

namespace {

// Exact collision probability for a uniformly random linear map
// f: F2^n -> F2^m and a uniformly random pair x != y, by enumeration. Since
// f(x) = f(y) iff f(x ^ y) = 0 and rows are independent, it is the average
// over nonzero d of (fraction of rows r with r.d = 0)^m.
double exact_collision(size_t n, size_t m) {
    double total = 0.0;
    uint64_t count = 0;
    for (uint64_t d = 1; d < (uint64_t{1} << n); d++) {
        uint64_t zero_rows = 0;
        for (uint64_t r = 0; r < (uint64_t{1} << n); r++) {
            if (__builtin_popcountll(r & d) % 2 == 0) {
                zero_rows++;
            }
        }
        total += std::pow(double(zero_rows) / double(uint64_t{1} << n), double(m));
        count++;
    }
    return total / double(count);
}

}  // namespace

TEST(gf2, UniversalityProbeSmall) {
    double exact = exact_collision(4, 4);
    EXPECT_NEAR(exact, 1.0 / 16.0, 1e-12);
    auto r = universality_probe(4, 4, 10000, 3);
    EXPECT_LE(std::abs(r.estimate - exact), 3 * r.sigma + 1e-12);
    EXPECT_LE(r.estimate, r.bound + 3 * r.sigma);
}

TEST(gf2, UniversalityProbeZeroOutput) {
    auto r = universality_probe(2, 0, 50, 1);
    EXPECT_EQ(r.estimate, 1.0);
}

TEST(gf2, UniversalityProbeEightBits) {
    double exact = exact_collision(8, 3);
    EXPECT_NEAR(exact, 1.0 / 8.0, 1e-12);
    auto r = universality_probe(8, 3, 100000, 8);
    EXPECT_LE(std::abs(r.estimate - exact), 3 * r.sigma);
    EXPECT_THROW(universality_probe(3, 4, 10, 1), InputError);
    EXPECT_THROW(universality_probe(3, 1, 0, 1), InputError);
}
