#include "qcomp/qkdrate.hpp"

#include "gtest/gtest.h"

using namespace qcomp;

namespace {

const Protocol kAll[] = {Protocol::BB84, Protocol::SixState, Protocol::Tetrahedral};

}  // namespace

TEST(qkdrate, BellParamsExamples) {
    auto b = bell_params(Protocol::BB84, 0);
    EXPECT_EQ(b.p00, 1);
    EXPECT_EQ(b.p11, 0);
    auto t = bell_params(Protocol::Tetrahedral, 0.12);
    EXPECT_NEAR(t.p01, 0.08, 1e-15);
    EXPECT_NEAR(t.p11, 0.08, 1e-15);
    EXPECT_NEAR(t.p10, 0.04, 1e-15);
    EXPECT_NEAR(t.p01, 2 * t.p10, 1e-15);
    auto s = bell_params(Protocol::SixState, 0.1);
    EXPECT_NEAR(s.p00, 0.85, 1e-15);
    EXPECT_NEAR(s.p01, 0.05, 1e-15);
    EXPECT_NEAR(s.p10, 0.05, 1e-15);
    EXPECT_NEAR(s.p11, 0.05, 1e-15);
    EXPECT_THROW(bell_params(Protocol::BB84, 0.5), InputError);
    EXPECT_THROW(bell_params(Protocol::BB84, -0.1), InputError);
}

TEST(qkdrate, AmplitudeMarginalIsDelta) {
    for (Protocol p : kAll) {
        for (double d = 0; d < 0.5; d += 0.01) {
            auto b = bell_params(p, d);
            EXPECT_NEAR(b.p10 + b.p11, d, 1e-15);
            b.validate();
        }
    }
}

TEST(qkdrate, ParseProtocol) {
    EXPECT_EQ(parse_protocol("bb84"), Protocol::BB84);
    EXPECT_EQ(parse_protocol("sixstate"), Protocol::SixState);
    EXPECT_EQ(parse_protocol("tetrahedral"), Protocol::Tetrahedral);
    EXPECT_THROW(parse_protocol("e91"), InputError);
    EXPECT_EQ(parse_protocol(protocol_name(Protocol::SixState)), Protocol::SixState);
}

TEST(qkdrate, RateExamples) {
    KeyRateModel bb84{Protocol::BB84, 0, 1};
    EXPECT_NEAR(rate(bb84, 0.05), 1 - 2 * h2(0.05), 1e-15);
    EXPECT_NEAR(rate(bb84, 0.05), 0.4272, 1e-4);
    EXPECT_NEAR(rate(bb84, 0.110028), 0, 1e-4);
    for (Protocol p : kAll) {
        EXPECT_NEAR(rate({p, 0, 1}, 0), 1, 1e-12);
    }
}

TEST(qkdrate, ClosedFormsMatchOracle) {
    for (Protocol p : kAll) {
        for (double d : {0.0, 0.03, 0.1, 0.2}) {
            KeyRateModel m{p, 0, 1};
            EXPECT_NEAR(oracle_rate_smallm(m, d), closed_form_rate(p, d), 1e-10) << protocol_name(p) << " " << d;
            EXPECT_NEAR(detail::sector_rate(bell_params(p, d), 0, 1), closed_form_rate(p, d), 1e-10);
        }
    }
}

TEST(qkdrate, SectorMatchesOracle) {
    for (Protocol p : kAll) {
        for (size_t m : {1, 2, 3, 4}) {
            for (double q : {0.0, 0.2, 0.37}) {
                for (double d : {0.02, 0.1}) {
                    KeyRateModel model{p, q, m};
                    double oracle = oracle_rate_smallm(model, d);
                    EXPECT_NEAR(detail::sector_rate(bell_params(p, d), q, m), oracle, 1e-8)
                        << protocol_name(p) << " m=" << m << " q=" << q << " d=" << d;
                    EXPECT_NEAR(rate(model, d), oracle, 1e-8);
                }
            }
        }
    }
}

TEST(qkdrate, SymmetricPowerMatchesDirectProducts) {
    for (Protocol p : kAll) {
        for (size_t m : {5, 6, 7, 8}) {
            for (double q : {0.0, 0.3}) {
                auto b = bell_params(p, 0.11);
                EXPECT_NEAR(detail::sector_rate(b, q, m), detail::sector_rate_direct(b, q, m), 1e-10)
                    << protocol_name(p) << " m=" << m << " q=" << q;
            }
        }
    }
}

TEST(qkdrate, OracleCapsBlockLength) {
    EXPECT_THROW(oracle_rate_smallm({Protocol::BB84, 0, 5}, 0.1), CapabilityError);
    EXPECT_THROW(rate({Protocol::BB84, 0, kMaxBlock + 1}, 0.1), CapabilityError);
    EXPECT_THROW(rate({Protocol::BB84, 0.6, 1}, 0.1), InputError);
}

TEST(qkdrate, RateDecreasesInDelta) {
    for (Protocol p : kAll) {
        KeyRateModel m{p, 0, 1};
        double t = threshold(m).delta_star;
        double prev = rate(m, 0);
        for (double d = 0.001; d <= t + 0.05; d += 0.001) {
            double r = rate(m, d);
            EXPECT_LT(r, prev) << protocol_name(p) << " " << d;
            prev = r;
        }
    }
}

TEST(qkdrate, PreprocessingNeverExceedsOne) {
    for (Protocol p : kAll) {
        for (double q : {0.05, 0.2, 0.45}) {
            for (double d : {0.0, 0.05, 0.12}) {
                EXPECT_LE(rate({p, q, 1}, d), 1 + 1e-12);
                EXPECT_LE(rate({p, q, 3}, d), 1 + 1e-12);
            }
            // On a noiseless channel the added flips cost exactly h2(q).
            EXPECT_NEAR(rate({p, q, 1}, 0), 1 - h2(q), 1e-10);
        }
    }
}

TEST(qkdrate, PlainThresholds) {
    auto b = threshold({Protocol::BB84, 0, 1});
    EXPECT_NEAR(b.delta_star, 0.11003, 1e-4);
    EXPECT_GT(rate({Protocol::BB84, 0, 1}, b.lo), 0);
    EXPECT_LT(rate({Protocol::BB84, 0, 1}, b.hi), 0);
    EXPECT_LE(b.hi - b.lo, 1e-5);
    EXPECT_NEAR(threshold({Protocol::Tetrahedral, 0, 1}).delta_star, 0.1156, 2e-4);
    EXPECT_NEAR(threshold({Protocol::SixState, 0, 1}).delta_star, 0.126, 5e-4);
}

TEST(qkdrate, ThresholdNeedsSignChange) {
    // At q = 1/2 the key is pure noise and the rate is zero at zero error.
    EXPECT_THROW(threshold({Protocol::BB84, 0.5, 1}), SolverError);
    EXPECT_NO_THROW(threshold({Protocol::BB84, 0.49, 1}));
}

TEST(qkdrate, OptimizeNoiseless) {
    auto o = optimize_preprocessing(Protocol::BB84, 0, 1);
    EXPECT_EQ(o.q, 0);
    EXPECT_NEAR(o.rate, 1, 1e-12);
}

TEST(qkdrate, OptimizedThresholds) {
    auto b = optimized_threshold(Protocol::BB84, 1);
    EXPECT_NEAR(b.delta_star, 0.124, 5e-4);
    EXPECT_GT(b.q_used, 0.3);
    auto s = optimized_threshold(Protocol::SixState, 1);
    EXPECT_NEAR(s.delta_star, 0.141, 1e-3);
}

TEST(qkdrate, OptimumBeatsGridAndEndpoints) {
    auto o = optimize_preprocessing(Protocol::BB84, 0.12, 1);
    for (double q = 0; q <= kMaxFlip; q += 0.01) {
        EXPECT_GE(o.rate, rate({Protocol::BB84, q, 1}, 0.12) - 1e-9) << q;
    }
}

TEST(qkdrate, BlocksNeverHurtAfterOptimizing) {
    double base = optimized_threshold(Protocol::BB84, 1).delta_star;
    for (size_t m : {2, 3}) {
        EXPECT_GE(optimized_threshold(Protocol::BB84, m).delta_star, base - 1e-4) << m;
    }
}
