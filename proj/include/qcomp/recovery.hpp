#pragma once

#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qcomp/errors.hpp"
#include "qcomp/qstate.hpp"

namespace qcomp {

struct Isometry {
    Labels in, out;
    Mat v;  // total_dim(out) x total_dim(in)

    void check(double tol = 1e-9) const {
        if (size_t(v.cols()) != total_dim(in) || size_t(v.rows()) != total_dim(out)) {
            throw DimensionError("isometry shape does not match its systems");
        }
        if ((v.adjoint() * v - Mat::Identity(v.cols(), v.cols())).norm() > tol) {
            throw InputError("matrix is not an isometry");
        }
    }
};

// Sum_z |z>^reg x sqrt(Lambda_z), taking the POVM systems to reg followed by
// the same systems. The register defaults to one level per outcome.
inline Isometry coherent_isometry(const Povm &m, const std::string &reg, size_t reg_dim = 0) {
    m.check();
    size_t k = m.elements.size();
    if (reg_dim == 0) {
        reg_dim = std::max<size_t>(2, k);
    }
    if (reg_dim < k) {
        throw DimensionError("register has fewer levels than the POVM has outcomes");
    }
    long d = long(total_dim(m.labels));
    Isometry iso;
    iso.in = m.labels;
    iso.out = {{reg, reg_dim}};
    iso.out.insert(iso.out.end(), m.labels.begin(), m.labels.end());
    iso.v = Mat::Zero(long(reg_dim) * d, d);
    for (size_t z = 0; z < k; z++) {
        iso.v.block(long(z) * d, 0, d, d) = sqrtm_psd(m.elements[z]);
    }
    return iso;
}

inline StateVector apply(const StateVector &psi, const Isometry &iso) {
    return apply_op(psi, iso.v, label_names(iso.in), iso.out);
}

inline StateVector rename(StateVector psi, const std::string &from, const std::string &to) {
    psi.labels[label_index(psi.labels, from)].name = to;
    total_dim(psi.labels);
    return psi;
}

namespace detail {

// |c, t> -> |c, t + sign*c mod d> on two d-level systems, in (control, target) order.
inline Mat add_gate(size_t d, int sign = 1) {
    long n = long(d);
    Mat g = Mat::Zero(n * n, n * n);
    for (long c = 0; c < n; c++) {
        for (long t = 0; t < n; t++) {
            long t2 = ((t + sign * c) % n + n) % n;
            g(c * n + t2, c * n + t) = 1;
        }
    }
    return g;
}

inline StateVector add_onto(const StateVector &psi, const std::string &control, const std::string &target,
                            int sign = 1) {
    size_t d = psi.labels[label_index(psi.labels, control)].dim;
    if (psi.labels[label_index(psi.labels, target)].dim != d) {
        throw DimensionError("controlled addition needs equal dimensions");
    }
    return apply_op(psi, add_gate(d, sign), {control, target}, {{control, d}, {target, d}});
}

// Coherent measurement whose register stores outcome x as the Fourier state.
inline Isometry fourier_register(const Povm &m, const std::string &reg, size_t d) {
    Isometry iso = coherent_isometry(m, reg, d);
    long rest = iso.v.rows() / long(d);
    iso.v = kron(x_basis(d), Mat::Identity(rest, rest)) * iso.v;
    return iso;
}

inline void require_free(const Labels &l, const std::vector<std::string> &names) {
    for (const auto &n : names) {
        for (const auto &s : l) {
            if (s.name == n) {
                throw LabelError("system name '" + n + "' is reserved for a recovery register");
            }
        }
    }
}

inline double sandwich(const DensityMatrix &rho, const StateVector &phi) {
    return std::real(phi.amps.dot(rho.rho * phi.amps));
}

}  // namespace detail

struct RecoveryReport {
    StateVector output;         // systems in the order of `target`
    StateVector target;         // ideal: max entangled pair x transferred state
    double eps1 = 0, eps2 = 0;
    double bound = 0;           // sqrt(2 eps1) + sqrt(2 eps2)
    double trace_dist = 0;      // between output and target
    double epr_fidelity = 0;    // <Phi| rho^{A C_Z} |Phi>
    double transfer_dist = 0;   // marginal on the transferred systems vs the original
    bool certified = false;     // eps1, eps2 < 1/2
};

namespace detail {

// Fills in distances against Phi^{A CZ} x psi(A -> CX).
inline RecoveryReport finish_recovery(const StateVector &psi, const std::string &a, StateVector out, double eps1,
                                      double eps2) {
    size_t d = psi.labels[label_index(psi.labels, a)].dim;
    RecoveryReport r;
    StateVector moved = rename(psi, a, "CX");
    r.target = tensor(max_entangled(d, a, "CZ"), moved);
    out = reorder(out, label_names(r.target.labels));
    r.output = out;
    r.eps1 = std::max(0.0, eps1);
    r.eps2 = std::max(0.0, eps2);
    r.bound = std::sqrt(2 * r.eps1) + std::sqrt(2 * r.eps2);
    r.trace_dist = trace_distance(out, r.target);
    r.epr_fidelity = sandwich(partial_trace(out, {a, "CZ"}), max_entangled(d, a, "CZ"));
    auto kept = label_names(moved.labels);
    r.transfer_dist = trace_distance(partial_trace(out, kept), partial_trace(moved, kept));
    r.certified = r.eps1 < 0.5 - 1e-9 && r.eps2 < 0.5 - 1e-9;
    return r;
}

}  // namespace detail

// Recovery from two measurements on B that predict the amplitude and the
// phase of A: coherent M_Z into CZ, coherent M_X into CX (Fourier-stored),
// then CZ added onto CX. M_X outcomes are guesses of A's phase basis index.
inline RecoveryReport recover_predictive(const StateVector &psi, const std::string &a, const Povm &m_z,
                                         const Povm &m_x) {
    detail::require_free(psi.labels, {"CZ", "CX"});
    size_t d = psi.labels[label_index(psi.labels, a)].dim;
    if (m_z.elements.size() != d || m_x.elements.size() != d) {
        throw DimensionError("each measurement needs one outcome per level of '" + a + "'");
    }
    double eps1 = 1 - p_guess(psi, a, z_basis(d), m_z);
    double eps2 = 1 - p_guess(psi, a, x_basis(d), m_x);
    StateVector s = apply(psi, coherent_isometry(m_z, "CZ", d));
    s = apply(s, detail::fourier_register(m_x, "CX", d));
    s = detail::add_onto(s, "CZ", "CX");
    return detail::finish_recovery(psi, a, s, eps1, eps2);
}

namespace detail {

// Isometry on the systems of `from` outside `shared` that brings `from` to
// `to`, applied to `from`.
inline StateVector uhlmann_step(const StateVector &from, const StateVector &to,
                                const std::vector<std::string> &shared) {
    auto u = uhlmann_isometry(from, to, shared);
    return apply_op(from, u.w, label_names(u.from), u.to);
}

}  // namespace detail

// Recovery from an amplitude measurement on B plus the environment being
// ignorant of the amplitude: U1 is the coherent M_Z, U2 the Uhlmann
// isometry on CZ B to the ideal output.
inline RecoveryReport recover_amplitude_decoupled(const StateVector &psi, const std::string &a, const Povm &m_z) {
    detail::require_free(psi.labels, {"CZ", "CX"});
    size_t d = psi.labels[label_index(psi.labels, a)].dim;
    if (m_z.elements.size() != d) {
        throw DimensionError("the measurement needs one outcome per level of '" + a + "'");
    }
    auto b = label_names(m_z.labels);
    std::vector<std::string> e;
    for (const auto &n : detail::complement(psi.labels, {a})) {
        if (std::find(b.begin(), b.end(), n) == b.end()) {
            e.push_back(n);
        }
    }
    double eps1 = 1 - p_guess(psi, a, z_basis(d), m_z);
    double eps2 = 1 - p_secure_from(conditional_states(psi, a, z_basis(d), e));
    StateVector s = apply(psi, coherent_isometry(m_z, "CZ", d));
    StateVector target = tensor(max_entangled(d, a, "CZ"), rename(psi, a, "CX"));
    s = detail::uhlmann_step(s, target, detail::concat({a}, e));
    return detail::finish_recovery(psi, a, s, eps1, eps2);
}

// psi_Z: the amplitude of A copied coherently into a fresh register.
inline StateVector amplitude_copy(const StateVector &psi, const std::string &a, const std::string &reg) {
    size_t d = psi.labels[label_index(psi.labels, a)].dim;
    StateVector s = tensor(psi, basis_state({{reg, d}}, 0));
    return detail::add_onto(s, a, reg);
}

// Recovery from two decoupling conditions alone: E ignorant of the phase
// given the copied amplitude, and of the amplitude. Both isometries come from
// Uhlmann's theorem. `b` lists Bob's systems; everything else is E.
inline RecoveryReport recover_double_decoupled(const StateVector &psi, const std::string &a,
                                               const std::vector<std::string> &b) {
    detail::require_free(psi.labels, {"CZ", "CX"});
    size_t d = psi.labels[label_index(psi.labels, a)].dim;
    std::vector<std::string> e;
    for (const auto &n : detail::complement(psi.labels, {a})) {
        if (std::find(b.begin(), b.end(), n) == b.end()) {
            e.push_back(n);
        }
    }
    StateVector psi_z = amplitude_copy(psi, a, "CZ");
    double eps1 = 1 - p_secure_from(conditional_states(psi_z, a, x_basis(d), detail::concat({"CZ"}, e)));
    double eps2 = 1 - p_secure_from(conditional_states(psi, a, z_basis(d), e));
    StateVector s = detail::uhlmann_step(psi, psi_z, detail::concat({a}, e));
    StateVector target = tensor(max_entangled(d, a, "CZ"), rename(psi, a, "CX"));
    s = detail::uhlmann_step(s, target, detail::concat({a}, e));
    return detail::finish_recovery(psi, a, s, eps1, eps2);
}

struct PrivateStateReport {
    bool is_private = false;
    std::vector<Mat> twists;  // V_z on the shield, V_0 = I
    Mat shield;               // xi on the shield
    double residual = 0;      // max entry deviation of the reconstruction
};

// Tests whether rho = U (Phi^{AB} x xi) U^dagger with U = Sum_z P_z^A x V_z.
// Systems are given by name; the shield is a_shield followed by b_shield.
inline PrivateStateReport verify_private_state(const DensityMatrix &rho, const std::string &a, const std::string &b,
                                               const std::string &a_shield, const std::string &b_shield,
                                               double tol = 1e-8) {
    DensityMatrix r = reorder(rho, {a, b, a_shield, b_shield});
    long d = long(r.labels[0].dim);
    if (long(r.labels[1].dim) != d) {
        throw DimensionError("key systems must have equal dimensions");
    }
    long ds = long(r.labels[2].dim * r.labels[3].dim);
    auto block = [&](long a1, long b1, long a2, long b2) {
        return r.rho.block((a1 * d + b1) * ds, (a2 * d + b2) * ds, ds, ds);
    };
    PrivateStateReport out;
    out.shield = double(d) * block(0, 0, 0, 0);
    out.twists.push_back(Mat::Identity(ds, ds));
    for (long z = 1; z < d; z++) {
        Eigen::JacobiSVD<Mat> svd(Mat(block(z, z, 0, 0)), Eigen::ComputeFullU | Eigen::ComputeFullV);
        out.twists.push_back(svd.matrixU() * svd.matrixV().adjoint());
    }
    // Rebuild U (Phi x xi) U^dagger and compare entrywise.
    double worst = 0;
    for (long a1 = 0; a1 < d; a1++) {
        for (long b1 = 0; b1 < d; b1++) {
            for (long a2 = 0; a2 < d; a2++) {
                for (long b2 = 0; b2 < d; b2++) {
                    Mat expect = Mat::Zero(ds, ds);
                    if (a1 == b1 && a2 == b2) {
                        expect = out.twists[size_t(a1)] * out.shield * out.twists[size_t(a2)].adjoint() / double(d);
                    }
                    worst = std::max(worst, (block(a1, b1, a2, b2) - expect).cwiseAbs().maxCoeff());
                }
            }
        }
    }
    out.residual = worst;
    out.is_private = worst <= tol;
    return out;
}

struct UntwistReport {
    StateVector output;
    double eps1 = 0;        // 1 - p_guess(Z^A | Z^B)
    double eps2 = 0;        // 1 - p_guess(X^A | M_X)
    double key_dist = 0;    // measured key + E vs ideal key x E
    double key_bound = 0;   // eps1 + sqrt(2 eps2)
    double untwist_dist = 0;  // output vs Phi^{AB} x psi(A -> CX, B -> CZ)
    double untwist_bound = 0; // sqrt(2 eps1) + sqrt(2 eps2)
};

// Untwisting circuit: B added onto CZ, the coherent phase measurement M_X
// on Alice's shield, CZ and Bob's shield into CX (Fourier-stored), then B
// added onto CX. M_X's systems must be (a_shield, b, b_shield) in that order.
inline UntwistReport untwist_private(const StateVector &psi, const std::string &a, const std::string &b,
                                     const std::string &a_shield, const std::string &b_shield, const Povm &m_x) {
    detail::require_free(psi.labels, {"CZ", "CX"});
    size_t d = psi.labels[label_index(psi.labels, a)].dim;
    if (psi.labels[label_index(psi.labels, b)].dim != d || m_x.elements.size() != d) {
        throw DimensionError("key systems and the phase measurement must all have d levels");
    }
    if (!(m_x.labels == select_labels(psi.labels, {a_shield, b, b_shield}))) {
        throw DimensionError("phase measurement must act on (A', B, B')");
    }
    auto e = detail::complement(psi.labels, {a, b, a_shield, b_shield});
    UntwistReport r;

    // Key quality from the original state.
    auto joint = conditional_states(psi, a, z_basis(d), detail::concat({b}, e));
    double agree = 0, dist = 0;
    DensityMatrix rho_e = partial_trace(psi, e.empty() ? std::vector<std::string>{} : e);
    long de = long(detail::dim_of(psi.labels, e));
    for (long za = 0; za < long(d); za++) {
        for (long zb = 0; zb < long(d); zb++) {
            Mat blk = joint[size_t(za)].block(zb * de, zb * de, de, de);
            agree += za == zb ? blk.trace().real() : 0;
            Mat ideal = za == zb ? Mat(rho_e.rho / double(d)) : Mat::Zero(de, de);
            dist += trace_norm(blk - ideal);
        }
    }
    r.eps1 = std::max(0.0, 1 - agree);
    r.eps2 = std::max(0.0, 1 - p_guess(psi, a, x_basis(d), m_x));
    r.key_dist = 0.5 * dist;
    r.key_bound = r.eps1 + std::sqrt(2 * r.eps2);

    StateVector s = tensor(psi, basis_state({{"CZ", d}}, 0));
    s = detail::add_onto(s, b, "CZ");
    Povm moved = m_x;
    moved.labels[1].name = "CZ";
    s = apply(s, detail::fourier_register(moved, "CX", d));
    s = detail::add_onto(s, b, "CX");
    StateVector rest = rename(rename(psi, a, "CX"), b, "CZ");
    StateVector target = tensor(max_entangled(d, a, b), rest);
    r.output = reorder(s, label_names(target.labels));
    r.untwist_dist = trace_distance(r.output, target);
    r.untwist_bound = std::sqrt(2 * r.eps1) + std::sqrt(2 * r.eps2);
    return r;
}

// Bob's qubit after Alice's Bell outcome (j, k) and his correction X^j Z^k.
inline StateVector teleport_branch(const StateVector &chi, int j, int k) {
    if (chi.labels.size() != 1 || chi.labels[0].dim != 2) {
        throw DimensionError("teleportation input must be one qubit");
    }
    StateVector s = tensor(rename(chi, chi.labels[0].name, "S"), bell_state(0, 0, "A", "B"));
    // Project (S, A) onto beta_jk.
    Vec bell = bell_state(j, k, "S", "A").amps;
    Mat m = split(s, {"S", "A"});
    Vec bob = bell.adjoint() * m;
    bob /= bob.norm();
    auto [x, z] = weyl_observables(2);
    Mat corr = Mat::Identity(2, 2);
    if (j) {
        corr = x * corr;
    }
    if (k) {
        corr = corr * z;
    }
    return StateVector(chi.labels, corr * bob);
}

// Teleports along a random Bell outcome.
inline StateVector teleport(const StateVector &chi, uint64_t seed) {
    std::mt19937_64 rng(seed);
    int outcome = int(rng() % 4);
    return teleport_branch(chi, outcome >> 1, outcome & 1);
}

// Alice encodes (j, k) as X^j Z^k on her half of an EPR pair; Bob decodes by
// a Bell measurement.
inline std::pair<int, int> superdense(int j, int k) {
    StateVector phi = bell_state(0, 0);
    auto [x, z] = weyl_observables(2);
    Mat op = Mat::Identity(2, 2);
    if (j) {
        op = x * op;
    }
    if (k) {
        op = op * z;
    }
    StateVector sent = reorder(apply_op(phi, op, {"A"}, {{"A", 2}}), {"A", "B"});
    std::pair<int, int> best{0, 0};
    double best_p = -1;
    for (int jj = 0; jj < 2; jj++) {
        for (int kk = 0; kk < 2; kk++) {
            double p = std::norm(bell_state(jj, kk).amps.dot(sent.amps));
            if (p > best_p) {
                best_p = p;
                best = {jj, kk};
            }
        }
    }
    return best;
}

}  // namespace qcomp
