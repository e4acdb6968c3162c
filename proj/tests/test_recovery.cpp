#include "qcomp/recovery.hpp"

#include <random>

#include "gtest/gtest.h"

using namespace qcomp;

namespace {

const double s2 = 1 / std::sqrt(2.0);

Mat pauli_x() { return weyl_observables(2).first; }

// Purified Bell-diagonal pair: Sum_jk sqrt(p_jk) beta_jk^{AB} |jk>^E.
StateVector bell_diagonal(const std::array<double, 4> &p) {
    Vec v = Vec::Zero(16);
    for (int j = 0; j < 2; j++) {
        for (int k = 0; k < 2; k++) {
            Vec b = bell_state(j, k).amps;
            for (long ab = 0; ab < 4; ab++) {
                v[ab * 4 + (j * 2 + k)] += std::sqrt(p[size_t(j * 2 + k)]) * b[ab];
            }
        }
    }
    return StateVector({{"A", 2}, {"B", 2}, {"E", 4}}, v);
}

// Noisy near-EPR state with a random perturbation mixed in.
StateVector near_epr(std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> u(0, 0.12);
    std::array<double, 4> p{};
    p[1] = u(rng);
    p[2] = u(rng);
    p[3] = u(rng) / 2;
    p[0] = 1 - p[1] - p[2] - p[3];
    StateVector s = bell_diagonal(p);
    StateVector r = random_pure(s.labels, rng);
    Vec v = s.amps + std::uniform_real_distribution<double>(0, 0.15)(rng) * r.amps;
    return StateVector(s.labels, v.normalized());
}

// Pretty-good measurement on `keep` for guessing A in `basis`.
Povm pgm_guess(const StateVector &psi, const Mat &basis, const std::vector<std::string> &keep) {
    return Povm{select_labels(psi.labels, keep), pgm_substates(conditional_states(psi, "A", basis, keep))};
}

}  // namespace

TEST(recovery, CoherentProjectiveMeasurementCopies) {
    Isometry iso = coherent_isometry(basis_povm({{"B", 2}}, z_basis(2)), "C");
    iso.check();
    // |b> -> |b>^C |b>^B.
    EXPECT_NEAR(std::abs(iso.v(0, 0)), 1, 1e-12);
    EXPECT_NEAR(std::abs(iso.v(3, 1)), 1, 1e-12);
    EXPECT_THROW(coherent_isometry(basis_povm({{"B", 3}}, z_basis(3)), "C", 2), DimensionError);
}

TEST(recovery, CoherentTrivialMeasurement) {
    Povm half{{{"B", 2}}, {0.5 * Mat::Identity(2, 2), 0.5 * Mat::Identity(2, 2)}};
    Isometry iso = coherent_isometry(half, "C");
    iso.check();
    std::mt19937_64 rng(1);
    StateVector b = random_pure({{"B", 2}}, rng);
    StateVector out = apply(b, iso);
    // The register ends in |+>, uncorrelated with B.
    EXPECT_LT((partial_trace(out, {"C"}).rho - 0.5 * Mat::Ones(2, 2)).norm(), 1e-12);
    EXPECT_NEAR(trace_distance(partial_trace(out, {"B"}), DensityMatrix(b)), 0, 1e-12);
}

TEST(recovery, CoherentPgmIsIsometry) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 20; t++) {
        DensityMatrix r = random_density({{"B", 2}}, 1 + rng() % 2, rng);
        DensityMatrix s = random_density({{"B", 2}}, 1 + rng() % 2, rng);
        Povm m = pgm({{0.3, r}, {0.7, s}});
        Mat v = coherent_isometry(m, "C").v;
        EXPECT_LT((v.adjoint() * v - Mat::Identity(2, 2)).norm(), 1e-10);
    }
}

TEST(recovery, PredictiveExactOnEpr) {
    StateVector psi = tensor(bell_state(0, 0), basis_state({{"E", 2}}, 0));
    auto r = recover_predictive(psi, "A", basis_povm({{"B", 2}}, z_basis(2)), basis_povm({{"B", 2}}, x_basis(2)));
    EXPECT_NEAR(r.eps1, 0, 1e-12);
    EXPECT_NEAR(r.eps2, 0, 1e-12);
    EXPECT_GE(r.epr_fidelity, 1 - 1e-9);
    EXPECT_LT(r.trace_dist, 1e-9);
    EXPECT_LT(r.transfer_dist, 1e-9);
    EXPECT_TRUE(r.certified);
}

TEST(recovery, PredictiveExactOnQutritPair) {
    StateVector psi = tensor(max_entangled(3), basis_state({{"E", 2}}, 1));
    // Phase of A is predicted by B's conjugate Fourier basis.
    auto r = recover_predictive(psi, "A", basis_povm({{"B", 3}}, z_basis(3)),
                                basis_povm({{"B", 3}}, x_basis(3).conjugate()));
    EXPECT_NEAR(r.eps2, 0, 1e-12);
    EXPECT_GE(r.epr_fidelity, 1 - 1e-9);
    EXPECT_LT(r.trace_dist, 1e-9);
}

TEST(recovery, PredictiveNoisyWithinBound) {
    // 5% amplitude flips recorded in E.
    StateVector psi = bell_diagonal({0.95, 0, 0.05, 0});
    auto r = recover_predictive(psi, "A", basis_povm({{"B", 2}}, z_basis(2)), basis_povm({{"B", 2}}, x_basis(2)));
    EXPECT_NEAR(r.eps1, 0.05, 1e-12);
    EXPECT_NEAR(r.eps2, 0, 1e-12);
    EXPECT_TRUE(r.certified);
    EXPECT_LE(r.trace_dist, r.bound + 1e-8);
    EXPECT_GT(r.trace_dist, 0.01);
}

TEST(recovery, PredictiveProductIsNotCertified) {
    std::mt19937_64 rng(3);
    StateVector psi = tensor(random_pure({{"A", 2}}, rng), random_pure({{"B", 2}, {"E", 2}}, rng));
    Povm blind{{{"B", 2}}, {0.5 * Mat::Identity(2, 2), 0.5 * Mat::Identity(2, 2)}};
    auto r = recover_predictive(psi, "A", blind, blind);
    EXPECT_FALSE(r.certified);
    EXPECT_GE(r.bound, 1);
}

TEST(recovery, PredictiveRandomWithinBound) {
    std::mt19937_64 rng(4);
    int certified = 0;
    for (int t = 0; t < 100; t++) {
        StateVector psi = near_epr(rng);
        auto r = recover_predictive(psi, "A", pgm_guess(psi, z_basis(2), {"B"}), pgm_guess(psi, x_basis(2), {"B"}));
        if (r.certified) {
            certified++;
            EXPECT_LE(r.trace_dist, r.bound + 1e-8);
            EXPECT_LE(r.transfer_dist, r.bound + 1e-8);
        }
    }
    EXPECT_GT(certified, 50);
}

TEST(recovery, AmplitudeDecoupledExamples) {
    StateVector epr = tensor(bell_state(0, 0), basis_state({{"E", 2}}, 0));
    auto r = recover_amplitude_decoupled(epr, "A", basis_povm({{"B", 2}}, z_basis(2)));
    EXPECT_GE(r.epr_fidelity, 1 - 1e-9);
    EXPECT_LT(r.trace_dist, 1e-9);

    // Z correlated with B, E in a product state.
    for (double p : {0.5, 0.7}) {
        Vec v = Vec::Zero(8);
        v[0] = std::sqrt(p);
        v[6] = std::sqrt(1 - p);
        StateVector s({{"A", 2}, {"B", 2}, {"E", 2}}, v);
        auto q = recover_amplitude_decoupled(s, "A", basis_povm({{"B", 2}}, z_basis(2)));
        EXPECT_NEAR(q.eps1, 0, 1e-12);
        EXPECT_LE(q.trace_dist, q.bound + 1e-8);
        if (p == 0.5) {
            EXPECT_LT(q.trace_dist, 1e-9);
        }
    }

    // Amplitude leaked to E.
    Vec g = Vec::Zero(8);
    g[0] = g[7] = s2;
    auto l = recover_amplitude_decoupled(StateVector({{"A", 2}, {"B", 2}, {"E", 2}}, g), "A",
                                         basis_povm({{"B", 2}}, z_basis(2)));
    EXPECT_NEAR(l.eps2, 0.5, 1e-12);
    EXPECT_FALSE(l.certified);
    EXPECT_GE(l.bound, 1);
}

TEST(recovery, AmplitudeDecoupledRandomWithinBound) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 100; t++) {
        StateVector psi = near_epr(rng);
        auto r = recover_amplitude_decoupled(psi, "A", pgm_guess(psi, z_basis(2), {"B"}));
        if (r.certified) {
            EXPECT_LE(r.trace_dist, r.bound + 1e-8);
        }
    }
}

TEST(recovery, DoubleDecoupledExamples) {
    StateVector epr = tensor(bell_state(0, 0), basis_state({{"E", 2}}, 0));
    auto r = recover_double_decoupled(epr, "A", {"B"});
    EXPECT_GE(r.epr_fidelity, 1 - 1e-9);
    EXPECT_LT(r.trace_dist, 1e-9);
}

TEST(recovery, DoubleDecoupledCounterexample) {
    // A in a phase-amplitude eigenstate, independent of B and E.
    std::mt19937_64 rng(6);
    Vec y(2);
    y << s2, cplx(0, s2);
    StateVector psi = tensor(StateVector({{"A", 2}}, y), random_pure({{"B", 2}, {"E", 2}}, rng));
    auto r = recover_double_decoupled(psi, "A", {"B"});
    EXPECT_NEAR(r.eps2, 0, 1e-12);
    EXPECT_NEAR(r.eps1, 0.5, 1e-12);
    EXPECT_FALSE(r.certified);
    EXPECT_NEAR(r.epr_fidelity, 0.5, 1e-9);
}

TEST(recovery, DoubleDecoupledRandomWithinBound) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 100; t++) {
        StateVector psi = near_epr(rng);
        auto r = recover_double_decoupled(psi, "A", {"B"});
        if (r.certified) {
            EXPECT_LE(r.trace_dist, r.bound + 1e-8);
        }
    }
}

TEST(recovery, RegisterNamesReserved) {
    StateVector psi = tensor(bell_state(0, 0, "A", "CZ"), basis_state({{"E", 2}}, 0));
    EXPECT_THROW(recover_double_decoupled(psi, "A", {"CZ"}), LabelError);
}

namespace {

// U (Phi^{AB} x xi^{A'B'}) U^dagger with U = P_0 x I + P_1 x V1.
DensityMatrix twisted(const Mat &xi, const Mat &v1) {
    Mat phi = projector(bell_state(0, 0).amps);
    Mat u = kron(kron(projector(Vec::Unit(2, 0)), Mat::Identity(2, 2)), Mat::Identity(4, 4)) +
            kron(kron(projector(Vec::Unit(2, 1)), Mat::Identity(2, 2)), v1);
    Mat rho = u * kron(phi, xi) * u.adjoint();
    return DensityMatrix({{"A", 2}, {"B", 2}, {"A'", 2}, {"B'", 2}}, rho);
}

}  // namespace

TEST(recovery, PrivateStateUntwisted) {
    std::mt19937_64 rng(8);
    Mat xi = random_density({{"A'", 2}, {"B'", 2}}, 4, rng).rho;
    auto r = verify_private_state(twisted(xi, Mat::Identity(4, 4)), "A", "B", "A'", "B'");
    EXPECT_TRUE(r.is_private);
    EXPECT_LT((r.twists[1] - Mat::Identity(4, 4)).norm(), 1e-8);
    EXPECT_LT((r.shield - xi).norm(), 1e-10);
}

TEST(recovery, PrivateStateTwisted) {
    std::mt19937_64 rng(9);
    Mat xi = random_density({{"A'", 2}, {"B'", 2}}, 4, rng).rho;
    Mat v1 = kron(pauli_x(), Mat::Identity(2, 2));
    DensityMatrix rho = twisted(xi, v1);
    // Shuffle the system order to make sure names are honored.
    auto r = verify_private_state(reorder(rho, {"B'", "A", "A'", "B"}), "A", "B", "A'", "B'");
    EXPECT_TRUE(r.is_private);
    EXPECT_NEAR(std::abs((r.twists[1].adjoint() * v1).trace()) / 4, 1, 1e-8);
}

TEST(recovery, ClassicalKeyIsNotPrivate) {
    Mat key = Mat::Zero(4, 4);
    key(0, 0) = key(3, 3) = 0.5;
    Mat xi = Mat::Zero(4, 4);
    xi(0, 0) = 1;
    DensityMatrix rho({{"A", 2}, {"B", 2}, {"A'", 2}, {"B'", 2}}, kron(key, xi));
    EXPECT_FALSE(verify_private_state(rho, "A", "B", "A'", "B'").is_private);
}

namespace {

// Twisted pure private state with shield |xi> and twist V1, plus E = |0>.
StateVector twisted_pure(const Vec &xi, const Mat &v1) {
    Vec v = Vec::Zero(2 * 2 * 4);
    Vec s1 = v1 * xi;
    for (long i = 0; i < 4; i++) {
        v[(0 * 2 + 0) * 4 + i] = s2 * xi[i];
        v[(1 * 2 + 1) * 4 + i] = s2 * s1[i];
    }
    StateVector s({{"A", 2}, {"B", 2}, {"A'", 2}, {"B'", 2}}, v);
    return reorder(tensor(s, basis_state({{"E", 2}}, 0)), {"A", "A'", "B", "B'", "E"});
}

// Phase measurement of A from (A', B, B') by the pretty-good measurement.
Povm phase_guess(const StateVector &psi) {
    return pgm_guess(psi, x_basis(2), {"A'", "B", "B'"});
}

}  // namespace

TEST(recovery, UntwistPerfectKey) {
    StateVector psi = twisted_pure(Vec::Unit(4, 0), Mat::Identity(4, 4));
    auto r = untwist_private(psi, "A", "B", "A'", "B'", phase_guess(psi));
    EXPECT_NEAR(r.eps1, 0, 1e-12);
    EXPECT_NEAR(r.eps2, 0, 1e-10);
    EXPECT_NEAR(r.key_dist, 0, 1e-10);
    EXPECT_LT(r.untwist_dist, 1e-8);
}

TEST(recovery, UntwistTwistedPrivateState) {
    std::mt19937_64 rng(10);
    Vec xi = random_pure({{"A'", 2}, {"B'", 2}}, rng).amps;
    Mat v1 = kron(pauli_x(), weyl_observables(2).second);
    StateVector psi = twisted_pure(xi, v1);
    auto r = untwist_private(psi, "A", "B", "A'", "B'", phase_guess(psi));
    EXPECT_NEAR(r.eps1, 0, 1e-12);
    EXPECT_NEAR(r.key_dist, 0, 1e-10);
    EXPECT_LE(r.key_dist, std::sqrt(2 * r.eps2) + 1e-10);
    EXPECT_LE(r.untwist_dist, r.untwist_bound + 1e-8);
}

TEST(recovery, UntwistNoisyKeyWithinBound) {
    // 10% disagreement between the key bits, recorded in E.
    StateVector noisy = bell_diagonal({0.9, 0, 0.1, 0});
    StateVector psi = tensor(tensor(noisy, basis_state({{"A'", 2}}, 0)), basis_state({{"B'", 2}}, 0));
    auto r = untwist_private(psi, "A", "B", "A'", "B'", phase_guess(psi));
    EXPECT_NEAR(r.eps1, 0.1, 1e-12);
    EXPECT_LE(r.key_dist, r.key_bound + 1e-10);
    EXPECT_LE(r.untwist_dist, r.untwist_bound + 1e-8);
}

TEST(recovery, UntwistRandomWithinBounds) {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 40; t++) {
        Vec xi = random_pure({{"A'", 2}, {"B'", 2}}, rng).amps;
        Mat v1 = random_pure({{"X", 4}, {"Y", 4}}, rng).amps.reshaped(4, 4).householderQr().householderQ();
        StateVector ideal = twisted_pure(xi, v1);
        StateVector noise = random_pure(ideal.labels, rng);
        Vec v = ideal.amps + std::uniform_real_distribution<double>(0, 0.2)(rng) * noise.amps;
        StateVector psi(ideal.labels, v.normalized());
        auto r = untwist_private(psi, "A", "B", "A'", "B'", phase_guess(psi));
        EXPECT_LE(r.key_dist, r.key_bound + 1e-10);
        if (r.eps1 < 0.5 && r.eps2 < 0.5) {
            EXPECT_LE(r.untwist_dist, r.untwist_bound + 1e-8);
        }
    }
}

TEST(recovery, TeleportAllBranches) {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 100; t++) {
        StateVector chi = random_pure({{"Q", 2}}, rng);
        for (int j = 0; j < 2; j++) {
            for (int k = 0; k < 2; k++) {
                EXPECT_GE(fidelity(teleport_branch(chi, j, k), chi), 1 - 1e-10);
            }
        }
        EXPECT_GE(fidelity(teleport(chi, uint64_t(t)), chi), 1 - 1e-10);
    }
    StateVector zero = basis_state({{"Q", 2}}, 0);
    EXPECT_NEAR(std::abs(teleport(zero, 5).amps[0]), 1, 1e-12);
}

TEST(recovery, SuperdenseDecodes) {
    for (int j = 0; j < 2; j++) {
        for (int k = 0; k < 2; k++) {
            EXPECT_EQ(superdense(j, k), std::make_pair(j, k));
        }
    }
}
