#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "qcomp/errors.hpp"
#include "qcomp/qstate.hpp"

namespace qcomp {

// Two orthonormal bases on one system, as matrix columns. By convention
// `first` is the amplitude (Z) basis and `second` the phase (X) basis.
struct ObservablePair {
    Mat first, second;

    void check(double tol = 1e-10) const {
        if (first.rows() != second.rows() || first.rows() != first.cols() || second.rows() != second.cols()) {
            throw DimensionError("observable bases must be square and of equal size");
        }
        long d = first.rows();
        for (const Mat *b : {&first, &second}) {
            if ((b->adjoint() * *b - Mat::Identity(d, d)).norm() > tol) {
                throw InputError("observable basis is not orthonormal");
            }
        }
    }
    size_t dim() const { return size_t(first.rows()); }
};

inline ObservablePair zx_pair(size_t d) { return {z_basis(d), x_basis(d)}; }

// c = max_{j,k} |<psi_j|phi_k>|^2.
inline double overlap_c(const ObservablePair &p) {
    p.check();
    return (p.first.adjoint() * p.second).cwiseAbs2().maxCoeff();
}

// Entropy of the outcome of measuring `a` in `basis`, conditioned on the
// systems `given` (possibly none), evaluated on the dephased state.
template <class State>
double measured_cond_entropy(const State &s, const std::string &a, const Mat &basis,
                             const std::vector<std::string> &given) {
    double joint = 0;
    for (const auto &phi : conditional_states(s, a, basis, given)) {
        joint += entropy(phi);
    }
    return joint - entropy(s, given);
}

struct UncertaintyReport {
    double h1 = 0;      // entropy term for the first relation slot
    double h2 = 0;      // entropy term for the second relation slot
    double h_cond = 0;  // H(A|B) for the memory-assisted relation, else 0
    double bound = 0;   // log2(1/c), plus H(A|B) when present
    double slack = 0;   // h1 + h2 - bound
};

namespace detail {

inline UncertaintyReport finish(double h1, double h2, double h_cond, double c) {
    UncertaintyReport r{h1, h2, h_cond, std::log2(1 / c) + h_cond, 0};
    r.slack = h1 + h2 - r.bound;
    return r;
}

inline void check_single(const Labels &l, const ObservablePair &p) {
    if (l.size() != 1 || l[0].dim != p.dim()) {
        throw DimensionError("state must be a single system matching the observables");
    }
}

}  // namespace detail

// H(Z) + H(X) >= log(1/c) for a single system.
template <class State>
UncertaintyReport check_maassen_uffink(const State &s, const ObservablePair &p) {
    detail::check_single(s.labels, p);
    const std::string &a = s.labels[0].name;
    return detail::finish(measured_cond_entropy(s, a, p.first, {}), measured_cond_entropy(s, a, p.second, {}), 0,
                          overlap_c(p));
}

// H(X^A|B) + H(Z^A|B) >= log(1/c) + H(A|B), where B is every other system.
template <class State>
UncertaintyReport check_berta(const State &s, const std::string &a, const ObservablePair &p) {
    auto b = detail::complement(s.labels, {a});
    if (s.labels[label_index(s.labels, a)].dim != p.dim()) {
        throw DimensionError("observables do not match the dimension of '" + a + "'");
    }
    return detail::finish(measured_cond_entropy(s, a, p.second, b), measured_cond_entropy(s, a, p.first, b),
                          cond_entropy(s, {a}, b), overlap_c(p));
}

// H(X^A|B) + H(Z^A|C) >= log(1/c) for a pure state on A, B, C.
inline UncertaintyReport check_tripartite(const StateVector &psi, const std::string &a, const std::string &b,
                                          const std::string &c, const ObservablePair &p) {
    psi.check(1e-9);
    if (psi.labels.size() != 3) {
        throw LabelError("tripartite relation needs exactly three systems");
    }
    detail::perm_for(psi.labels, {a, b, c});
    if (psi.labels[label_index(psi.labels, a)].dim != p.dim()) {
        throw DimensionError("observables do not match the dimension of '" + a + "'");
    }
    return detail::finish(measured_cond_entropy(psi, a, p.second, {b}), measured_cond_entropy(psi, a, p.first, {c}),
                          0, overlap_c(p));
}

inline UncertaintyReport check_tripartite(const DensityMatrix &rho, const std::string &a, const std::string &b,
                                          const std::string &c, const ObservablePair &p) {
    Eigen::SelfAdjointEigenSolver<Mat> es(rho.rho);
    long top = es.eigenvalues().size() - 1;
    if (std::abs(es.eigenvalues()[top] - 1) > 1e-9) {
        throw ContractError("tripartite relation needs a pure state");
    }
    return check_tripartite(StateVector(rho.labels, es.eigenvectors().col(top)), a, b, c, p);
}

// Haar-random unitary from the QR decomposition of a complex Gaussian matrix,
// with the phases of R's diagonal absorbed so the distribution is uniform.
inline Mat random_unitary(size_t d, std::mt19937_64 &rng) {
    std::normal_distribution<double> g;
    Mat a = Mat::Zero(long(d), long(d));
    for (long i = 0; i < a.size(); i++) {
        a.data()[i] = cplx(g(rng), g(rng));
    }
    Eigen::HouseholderQR<Mat> qr(a);
    Mat q = qr.householderQ();
    Mat r = qr.matrixQR();
    for (long j = 0; j < long(d); j++) {
        cplx rj = r(j, j);
        q.col(j) *= std::abs(rj) > 0 ? rj / std::abs(rj) : cplx(1);
    }
    return q;
}

enum class Relation { MaassenUffink, Berta, Tripartite };

inline Relation parse_relation(const std::string &s) {
    if (s == "mu") {
        return Relation::MaassenUffink;
    }
    if (s == "berta") {
        return Relation::Berta;
    }
    if (s == "tri") {
        return Relation::Tripartite;
    }
    throw InputError("unknown uncertainty relation '" + s + "' (expected mu, berta or tri)");
}

// Dispatches on the relation. The measured system is the first label; the
// tripartite relation conditions the phase on the second and the amplitude
// on the third.
inline UncertaintyReport check_relation(Relation rel, const DensityMatrix &rho, const ObservablePair &p) {
    switch (rel) {
    case Relation::MaassenUffink:
        return check_maassen_uffink(rho, p);
    case Relation::Berta:
        return check_berta(rho, rho.labels.at(0).name, p);
    case Relation::Tripartite:
        if (rho.labels.size() != 3) {
            throw LabelError("tripartite relation needs exactly three systems");
        }
        return check_tripartite(rho, rho.labels[0].name, rho.labels[1].name, rho.labels[2].name, p);
    }
    throw InputError("unknown relation");
}

struct UncertaintyCase {
    DensityMatrix state;
    ObservablePair obs;
};

// Random instance for a relation. Half the instances use the Z/X pair, the
// rest a Haar-random second basis. Dimensions stay small so 10^3 cases run
// in well under a second.
inline UncertaintyCase random_uncertainty_case(Relation rel, std::mt19937_64 &rng) {
    size_t d = 2 + rng() % 2;
    ObservablePair p = zx_pair(d);
    if (rng() % 2) {
        p.second = random_unitary(d, rng);
    }
    switch (rel) {
    case Relation::MaassenUffink:
        return {random_density({{"A", d}}, 1 + rng() % d, rng), p};
    case Relation::Berta: {
        Labels l{{"A", d}, {"B", 2}};
        return {random_density(l, 1 + rng() % (2 * d), rng), p};
    }
    case Relation::Tripartite: {
        StateVector psi = random_pure({{"A", d}, {"B", 2}, {"C", 2}}, rng);
        return {DensityMatrix(psi.labels, psi.amps * psi.amps.adjoint()), p};
    }
    }
    throw InputError("unknown relation");
}

struct PinskerReport {
    double h = 0;         // H(Z^A|E) of the measured state
    double eps = 0;       // sqrt(1 - H)
    double p_secure = 0;
    double bound = 0;     // 1 - eps
    bool consistent = false;
};

// If H(Z^A|E) >= 1 - eps^2 then p_secure >= 1 - eps, for a qubit key A.
template <class State>
PinskerReport pinsker_secure(const State &s, const std::string &a, const Mat &basis = z_basis(2)) {
    if (s.labels[label_index(s.labels, a)].dim != 2) {
        throw DimensionError("the security bound is stated for a qubit key");
    }
    PinskerReport r;
    r.h = measured_cond_entropy(s, a, basis, detail::complement(s.labels, {a}));
    r.eps = std::sqrt(std::max(0.0, 1 - r.h));
    r.p_secure = p_secure_of(s, a, basis);
    r.bound = 1 - r.eps;
    r.consistent = r.p_secure >= r.bound - 1e-9;
    return r;
}

struct GuessingGameResult {
    double success = 0;
    Vec state;        // optimal single-system state
    size_t guess1 = 0, guess2 = 0;
};

// Best average success at predicting whichever of the two observables is
// measured at random, using one prepared state: max over guesses of the top
// eigenvalue of (P_j + Q_k) / 2.
inline GuessingGameResult guessing_game(const ObservablePair &p) {
    p.check();
    GuessingGameResult best;
    for (long j = 0; j < p.first.cols(); j++) {
        for (long k = 0; k < p.second.cols(); k++) {
            Mat m = 0.5 * (projector(p.first.col(j)) + projector(p.second.col(k)));
            Eigen::SelfAdjointEigenSolver<Mat> es(m);
            long top = es.eigenvalues().size() - 1;
            if (es.eigenvalues()[top] > best.success + 1e-15) {
                best.success = es.eigenvalues()[top];
                best.state = es.eigenvectors().col(top);
                best.guess1 = size_t(j);
                best.guess2 = size_t(k);
            }
        }
    }
    return best;
}

// (1/2) Sum_t |t>^A |phi_t>^B with phi = 0, 1, +, -.
inline StateVector holevo_locking_state() {
    double s = 1 / std::sqrt(2.0);
    Vec v = Vec::Zero(8);
    v[0 * 2 + 0] = 0.5;
    v[1 * 2 + 1] = 0.5;
    v[2 * 2 + 0] = 0.5 * s;
    v[2 * 2 + 1] = 0.5 * s;
    v[3 * 2 + 0] = 0.5 * s;
    v[3 * 2 + 1] = -0.5 * s;
    return StateVector({{"A", 4}, {"B", 2}}, v);
}

// Projective qubit measurement along the Bloch direction (theta, phi).
inline Povm bloch_measurement(const std::string &sys, double theta, double phi) {
    Vec up(2), down(2);
    up << std::cos(theta / 2), std::polar(std::sin(theta / 2), phi);
    down << -std::polar(std::sin(theta / 2), -phi), std::cos(theta / 2);
    return Povm{{{sys, 2}}, {projector(up), projector(down)}};
}

// H(Z^A | M) for the classical outcome of M on the given sub-states.
inline double entropy_given_outcome(const std::vector<Mat> &phi, const Povm &m) {
    double h_joint = 0, h_m = 0;
    for (const auto &e : m.elements) {
        double pm = 0;
        for (const auto &f : phi) {
            double p = (e * f).trace().real();
            if (p > 1e-15) {
                h_joint -= p * std::log2(p);
            }
            pm += p;
        }
        if (pm > 1e-15) {
            h_m -= pm * std::log2(pm);
        }
    }
    return h_joint - h_m;
}

struct LockingReport {
    double h_given_b = 0;     // H(Z^A|B), quantum side information
    double min_h_given_m = 0; // min over projective M of H(Z^A|M)
    double accessible = 0;    // H(Z^A) - min H(Z^A|M)
    double theta = 0, phi = 0;
};

// Scans a Fibonacci grid of measurement directions, then refines the best
// point by a shrinking coordinate search. Projective measurements only.
inline LockingReport locking_analysis(size_t grid = 10000) {
    StateVector psi = holevo_locking_state();
    auto sub = conditional_states(psi, "A", z_basis(4), {"B"});
    auto h_of = [&](double th, double ph) { return entropy_given_outcome(sub, bloch_measurement("B", th, ph)); };
    LockingReport r;
    r.h_given_b = measured_cond_entropy(psi, "A", z_basis(4), {"B"});
    double best = 1e300;
    const double golden = M_PI * (3 - std::sqrt(5.0));
    for (size_t i = 0; i < grid; i++) {
        double z = 1 - 2 * (double(i) + 0.5) / double(grid);
        double th = std::acos(z), ph = std::fmod(golden * double(i), 2 * M_PI);
        double h = h_of(th, ph);
        if (h < best) {
            best = h;
            r.theta = th;
            r.phi = ph;
        }
    }
    for (double step = 0.05; step > 1e-10; step *= 0.5) {
        bool moved = true;
        while (moved) {
            moved = false;
            for (auto [dt, dp] : {std::pair{step, 0.0}, {-step, 0.0}, {0.0, step}, {0.0, -step}}) {
                double h = h_of(r.theta + dt, r.phi + dp);
                if (h < best - 1e-15) {
                    best = h;
                    r.theta += dt;
                    r.phi += dp;
                    moved = true;
                }
            }
        }
    }
    r.min_h_given_m = best;
    r.accessible = measured_cond_entropy(psi, "A", z_basis(4), {}) - best;
    return r;
}

}  // namespace qcomp
