#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qcomp/errors.hpp"

namespace qcomp {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

// Largest total dimension any labeled state may have.
inline constexpr size_t kMaxDim = 4096;
// Eigenvalues below this count as zero in entropies and pseudo-inverses.
inline constexpr double kEigCutoff = 1e-12;

struct System {
    std::string name;
    size_t dim = 2;
    bool operator==(const System &o) const { return name == o.name && dim == o.dim; }
};
using Labels = std::vector<System>;

// Product of dims after checking names are unique and the cap holds.
inline size_t total_dim(const Labels &labels) {
    size_t d = 1;
    for (size_t i = 0; i < labels.size(); i++) {
        if (labels[i].dim < 2) {
            throw DimensionError("system '" + labels[i].name + "' must have dimension >= 2");
        }
        for (size_t j = 0; j < i; j++) {
            if (labels[j].name == labels[i].name) {
                throw LabelError("duplicate system label '" + labels[i].name + "'");
            }
        }
        d *= labels[i].dim;
        if (d > kMaxDim) {
            throw CapabilityError("total dimension exceeds the cap of " + std::to_string(kMaxDim));
        }
    }
    return d;
}

inline size_t label_index(const Labels &labels, const std::string &name) {
    for (size_t i = 0; i < labels.size(); i++) {
        if (labels[i].name == name) {
            return i;
        }
    }
    throw LabelError("unknown system label '" + name + "'");
}

inline Labels select_labels(const Labels &labels, const std::vector<std::string> &names) {
    Labels out;
    for (const auto &n : names) {
        out.push_back(labels[label_index(labels, n)]);
    }
    total_dim(out);
    return out;
}

inline std::vector<std::string> label_names(const Labels &labels) {
    std::vector<std::string> out;
    for (const auto &s : labels) {
        out.push_back(s.name);
    }
    return out;
}

// Pure state; labels[0] is the most significant tensor factor.
struct StateVector {
    Labels labels;
    Vec amps;

    StateVector() = default;
    StateVector(Labels l, Vec a) : labels(std::move(l)), amps(std::move(a)) {
        if (size_t(amps.size()) != total_dim(labels)) {
            throw DimensionError("amplitude count does not match the system dimensions");
        }
    }

    size_t dim() const { return size_t(amps.size()); }

    void check(double tol = 1e-10) const {
        if (std::abs(amps.norm() - 1) > tol) {
            throw InputError("state vector is not normalized");
        }
    }
};

struct DensityMatrix {
    Labels labels;
    Mat rho;

    DensityMatrix() = default;
    DensityMatrix(Labels l, Mat r) : labels(std::move(l)), rho(std::move(r)) {
        size_t d = total_dim(labels);
        if (size_t(rho.rows()) != d || size_t(rho.cols()) != d) {
            throw DimensionError("matrix size does not match the system dimensions");
        }
    }
    explicit DensityMatrix(const StateVector &psi)
        : DensityMatrix(psi.labels, psi.amps * psi.amps.adjoint()) {}

    size_t dim() const { return size_t(rho.rows()); }

    void check(double tol = 1e-10) const {
        if ((rho - rho.adjoint()).norm() > tol) {
            throw InputError("density matrix is not Hermitian");
        }
        if (std::abs(rho.trace().real() - 1) > tol) {
            throw InputError("density matrix does not have unit trace");
        }
        Eigen::SelfAdjointEigenSolver<Mat> es(rho, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -tol) {
            throw InputError("density matrix is not positive semidefinite");
        }
    }
};

struct Povm {
    Labels labels;
    std::vector<Mat> elements;

    void check(double tol = 1e-9) const {
        size_t d = total_dim(labels);
        Mat sum = Mat::Zero(long(d), long(d));
        for (const auto &e : elements) {
            if (size_t(e.rows()) != d || size_t(e.cols()) != d) {
                throw DimensionError("POVM element has the wrong size");
            }
            sum += e;
        }
        if ((sum - Mat::Identity(long(d), long(d))).norm() > tol) {
            throw InputError("POVM elements do not sum to the identity");
        }
    }
};

namespace detail {

// map[new_index] = old_index for the reordering where new position i holds
// old system perm[i].
inline std::vector<size_t> permutation_map(const Labels &labels, const std::vector<size_t> &perm) {
    size_t m = labels.size();
    std::vector<size_t> stride(m, 1);
    for (size_t j = m; j-- > 1;) {
        stride[j - 1] = stride[j] * labels[j].dim;
    }
    size_t d = m ? stride[0] * labels[0].dim : 1;
    std::vector<size_t> map(d), digit(m, 0);
    size_t old = 0;
    for (size_t idx = 0; idx < d; idx++) {
        map[idx] = old;
        // Odometer increment over new positions, last position fastest.
        for (size_t i = m; i-- > 0;) {
            size_t s = perm[i];
            digit[i]++;
            old += stride[s];
            if (digit[i] < labels[s].dim) {
                break;
            }
            old -= stride[s] * digit[i];
            digit[i] = 0;
        }
    }
    return map;
}

inline std::vector<size_t> perm_for(const Labels &labels, const std::vector<std::string> &order) {
    std::vector<size_t> perm;
    for (const auto &n : order) {
        size_t i = label_index(labels, n);
        if (std::find(perm.begin(), perm.end(), i) != perm.end()) {
            throw LabelError("label '" + n + "' listed twice");
        }
        perm.push_back(i);
    }
    if (perm.size() != labels.size()) {
        throw LabelError("reordering must list every system exactly once");
    }
    return perm;
}

// Names of the systems not in `names`, in their original order.
inline std::vector<std::string> complement(const Labels &labels, const std::vector<std::string> &names) {
    for (const auto &n : names) {
        label_index(labels, n);
    }
    std::vector<std::string> out;
    for (const auto &s : labels) {
        if (std::find(names.begin(), names.end(), s.name) == names.end()) {
            out.push_back(s.name);
        }
    }
    return out;
}

inline size_t dim_of(const Labels &labels, const std::vector<std::string> &names) {
    size_t d = 1;
    for (const auto &n : names) {
        d *= labels[label_index(labels, n)].dim;
    }
    return d;
}

inline std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string> &b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

inline bool is_identity(const std::vector<size_t> &perm) {
    for (size_t i = 0; i < perm.size(); i++) {
        if (perm[i] != i) {
            return false;
        }
    }
    return true;
}

}  // namespace detail

inline StateVector reorder(const StateVector &psi, const std::vector<std::string> &order) {
    auto perm = detail::perm_for(psi.labels, order);
    Labels nl;
    for (size_t p : perm) {
        nl.push_back(psi.labels[p]);
    }
    if (detail::is_identity(perm)) {
        return psi;
    }
    auto map = detail::permutation_map(psi.labels, perm);
    Vec out(psi.amps.size());
    for (size_t i = 0; i < map.size(); i++) {
        out[long(i)] = psi.amps[long(map[i])];
    }
    return StateVector(nl, out);
}

inline DensityMatrix reorder(const DensityMatrix &rho, const std::vector<std::string> &order) {
    auto perm = detail::perm_for(rho.labels, order);
    Labels nl;
    for (size_t p : perm) {
        nl.push_back(rho.labels[p]);
    }
    if (detail::is_identity(perm)) {
        return rho;
    }
    auto map = detail::permutation_map(rho.labels, perm);
    long d = long(map.size());
    Mat out(d, d);
    for (long j = 0; j < d; j++) {
        for (long i = 0; i < d; i++) {
            out(i, j) = rho.rho(long(map[size_t(i)]), long(map[size_t(j)]));
        }
    }
    return DensityMatrix(nl, out);
}

// Marginal on `keep`, with systems in the order given.
inline DensityMatrix partial_trace(const DensityMatrix &rho, const std::vector<std::string> &keep) {
    auto rest = detail::complement(rho.labels, keep);
    DensityMatrix r = reorder(rho, detail::concat(keep, rest));
    long dk = long(detail::dim_of(rho.labels, keep)), dr = long(detail::dim_of(rho.labels, rest));
    Mat out = Mat::Zero(dk, dk);
    for (long j = 0; j < dk; j++) {
        for (long i = 0; i < dk; i++) {
            cplx acc = 0;
            for (long t = 0; t < dr; t++) {
                acc += r.rho(i * dr + t, j * dr + t);
            }
            out(i, j) = acc;
        }
    }
    return DensityMatrix(select_labels(rho.labels, keep), out);
}

// Amplitudes reshaped to (first systems) x (remaining systems).
// The remaining systems keep their original order unless `second` lists them.
inline Mat split(const StateVector &psi, const std::vector<std::string> &first,
                 std::vector<std::string> second = {}) {
    auto rest = detail::complement(psi.labels, first);
    if (!second.empty()) {
        rest = std::move(second);
    }
    StateVector r = reorder(psi, detail::concat(first, rest));
    long df = long(detail::dim_of(psi.labels, first)), dr = long(detail::dim_of(psi.labels, rest));
    // Row-major flat index i*dr + t; Eigen maps are column-major, hence the transpose.
    return Eigen::Map<const Mat>(r.amps.data(), dr, df).transpose();
}

inline DensityMatrix partial_trace(const StateVector &psi, const std::vector<std::string> &keep) {
    Mat m = split(psi, keep);
    return DensityMatrix(select_labels(psi.labels, keep), m * m.adjoint());
}

inline Mat kron(const Mat &a, const Mat &b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (long i = 0; i < a.rows(); i++) {
        for (long j = 0; j < a.cols(); j++) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

inline StateVector tensor(const StateVector &a, const StateVector &b) {
    Labels l = a.labels;
    l.insert(l.end(), b.labels.begin(), b.labels.end());
    Mat v = kron(a.amps, b.amps);
    return StateVector(l, Vec(v.col(0)));
}

inline DensityMatrix tensor(const DensityMatrix &a, const DensityMatrix &b) {
    Labels l = a.labels;
    l.insert(l.end(), b.labels.begin(), b.labels.end());
    return DensityMatrix(l, kron(a.rho, b.rho));
}

inline Eigen::VectorXd hermitian_eigenvalues(const Mat &m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (m + m.adjoint())), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

// Von Neumann entropy in bits.
inline double entropy(const Mat &rho) {
    double h = 0;
    for (double l : hermitian_eigenvalues(rho)) {
        if (l > kEigCutoff) {
            h -= l * std::log2(l);
        }
    }
    return h;
}

inline double entropy(const DensityMatrix &rho) { return entropy(rho.rho); }

// Entropy of a marginal; for a pure state the smaller side is diagonalized.
inline double entropy(const DensityMatrix &rho, const std::vector<std::string> &sys) {
    if (sys.empty()) {
        return 0;
    }
    return entropy(partial_trace(rho, sys));
}

inline double entropy(const StateVector &psi, const std::vector<std::string> &sys) {
    auto rest = detail::complement(psi.labels, sys);
    if (sys.empty() || rest.empty()) {
        return 0;
    }
    const auto &small = detail::dim_of(psi.labels, sys) <= detail::dim_of(psi.labels, rest) ? sys : rest;
    return entropy(partial_trace(psi, small));
}

// H(target | given) = H(target, given) - H(given).
template <class State>
double cond_entropy(const State &s, const std::vector<std::string> &target,
                    const std::vector<std::string> &given) {
    for (const auto &t : target) {
        if (std::find(given.begin(), given.end(), t) != given.end()) {
            throw LabelError("target and conditioning systems overlap at '" + t + "'");
        }
    }
    return entropy(s, detail::concat(target, given)) - entropy(s, given);
}

template <class State>
double mutual_info(const State &s, const std::vector<std::string> &a, const std::vector<std::string> &b) {
    return entropy(s, a) + entropy(s, b) - entropy(s, detail::concat(a, b));
}

inline Mat psd_function(const Mat &m, double (*f)(double)) {
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (m + m.adjoint())));
    Eigen::VectorXd l = es.eigenvalues();
    for (long i = 0; i < l.size(); i++) {
        l[i] = f(l[i]);
    }
    return es.eigenvectors() * l.asDiagonal() * es.eigenvectors().adjoint();
}

inline Mat sqrtm_psd(const Mat &m) {
    return psd_function(m, [](double l) { return l > kEigCutoff ? std::sqrt(l) : 0.0; });
}

// Pseudo-inverse square root on the support.
inline Mat inv_sqrt_psd(const Mat &m) {
    return psd_function(m, [](double l) { return l > kEigCutoff ? 1 / std::sqrt(l) : 0.0; });
}

inline double trace_norm(const Mat &m) {
    if ((m - m.adjoint()).norm() <= 1e-13 * std::max(1.0, m.norm())) {
        return hermitian_eigenvalues(m).cwiseAbs().sum();
    }
    Eigen::BDCSVD<Mat> svd(m);
    return svd.singularValues().sum();
}

inline void check_same_space(const Labels &a, const Labels &b) {
    if (!(a == b)) {
        throw DimensionError("states live on different systems");
    }
}

inline double trace_distance(const DensityMatrix &a, const DensityMatrix &b) {
    check_same_space(a.labels, b.labels);
    return 0.5 * trace_norm(a.rho - b.rho);
}

inline double trace_distance(const StateVector &a, const StateVector &b) {
    check_same_space(a.labels, b.labels);
    // 1 - |<a|b>| from the phase-aligned difference keeps tiny distances accurate.
    cplx ov = a.amps.dot(b.amps);
    double o = std::abs(ov);
    cplx ph = o > 0 ? ov / o : cplx(1);
    double one_minus = 0.5 * (a.amps * ph - b.amps).squaredNorm() / std::max(1.0, a.amps.norm() * b.amps.norm());
    return std::sqrt(std::max(0.0, one_minus * (1 + o)));
}

// Root fidelity Tr|sqrt(rho) sqrt(sigma)|.
inline double fidelity(const Mat &a, const Mat &b) {
    Mat s = sqrtm_psd(a);
    double f = 0;
    for (double l : hermitian_eigenvalues(s * b * s)) {
        f += l > 0 ? std::sqrt(l) : 0;
    }
    return std::min(f, 1.0 + 1e-12);
}

inline double fidelity(const DensityMatrix &a, const DensityMatrix &b) {
    check_same_space(a.labels, b.labels);
    return fidelity(a.rho, b.rho);
}

inline double fidelity(const StateVector &a, const StateVector &b) {
    check_same_space(a.labels, b.labels);
    return std::abs(a.amps.dot(b.amps));
}

// Shift X|k> = |k+1> and clock Z|k> = w^k |k>, so that ZX = w XZ.
inline std::pair<Mat, Mat> weyl_observables(size_t d) {
    if (d < 2) {
        throw DimensionError("Weyl operators need d >= 2");
    }
    long n = long(d);
    Mat x = Mat::Zero(n, n), z = Mat::Zero(n, n);
    for (long k = 0; k < n; k++) {
        x((k + 1) % n, k) = 1;
        z(k, k) = std::polar(1.0, 2 * M_PI * double(k) / double(d));
    }
    return {x, z};
}

// Columns are the basis vectors.
inline Mat z_basis(size_t d) { return Mat::Identity(long(d), long(d)); }

// Fourier basis F_{yx} = w^{xy} / sqrt(d); column x is the X-type state x~.
inline Mat x_basis(size_t d) {
    long n = long(d);
    Mat f(n, n);
    for (long y = 0; y < n; y++) {
        for (long x = 0; x < n; x++) {
            f(y, x) = std::polar(1 / std::sqrt(double(d)), 2 * M_PI * double((x * y) % n) / double(d));
        }
    }
    return f;
}

// phi_z = <b_z| rho^{A keep} |b_z>, unnormalized, on `keep` in the given order.
inline std::vector<Mat> conditional_states(const DensityMatrix &rho, const std::string &a, const Mat &basis,
                                           const std::vector<std::string> &keep) {
    DensityMatrix m = partial_trace(rho, detail::concat({a}, keep));
    long da = long(m.labels[0].dim), dk = long(m.dim()) / da;
    if (basis.rows() != da) {
        throw DimensionError("basis does not match the dimension of '" + a + "'");
    }
    std::vector<Mat> out;
    for (long z = 0; z < basis.cols(); z++) {
        Mat acc = Mat::Zero(dk, dk);
        for (long i = 0; i < da; i++) {
            for (long j = 0; j < da; j++) {
                cplx c = std::conj(basis(i, z)) * basis(j, z);
                if (c != cplx(0)) {
                    acc += c * m.rho.block(i * dk, j * dk, dk, dk);
                }
            }
        }
        out.push_back(acc);
    }
    return out;
}

inline std::vector<Mat> conditional_states(const StateVector &psi, const std::string &a, const Mat &basis,
                                           const std::vector<std::string> &keep) {
    Mat m = split(psi, detail::concat({a}, keep));
    long da = long(psi.labels[label_index(psi.labels, a)].dim), dk = m.rows() / da;
    if (basis.rows() != da) {
        throw DimensionError("basis does not match the dimension of '" + a + "'");
    }
    std::vector<Mat> out;
    for (long z = 0; z < basis.cols(); z++) {
        Mat v = Mat::Zero(dk, m.cols());
        for (long i = 0; i < da; i++) {
            v += std::conj(basis(i, z)) * m.block(i * dk, 0, dk, m.cols());
        }
        out.push_back(v * v.adjoint());
    }
    return out;
}

// Sum_z Tr[Lambda_z phi_z].
inline double guess_success(const std::vector<Mat> &phi, const std::vector<Mat> &povm) {
    if (phi.size() != povm.size()) {
        throw DimensionError("POVM needs one outcome per value of the guessed variable");
    }
    double p = 0;
    for (size_t z = 0; z < phi.size(); z++) {
        p += (povm[z] * phi[z]).trace().real();
    }
    return p;
}

// Probability that measuring M on its systems yields the outcome of the
// measurement of A in `basis`.
template <class State>
double p_guess(const State &s, const std::string &a, const Mat &basis, const Povm &m) {
    auto keep = label_names(m.labels);
    auto phi = conditional_states(s, a, basis, keep);
    if (!(select_labels(s.labels, keep) == m.labels)) {
        throw DimensionError("POVM systems do not match the state");
    }
    return guess_success(phi, m.elements);
}

// 1 - (1/2) Sum_z || phi_z - rho^E / d ||_1 for the measured state.
inline double p_secure_from(const std::vector<Mat> &phi) {
    Mat avg = Mat::Zero(phi[0].rows(), phi[0].cols());
    for (const auto &p : phi) {
        avg += p;
    }
    avg /= double(phi.size());
    double dist = 0;
    for (const auto &p : phi) {
        dist += trace_norm(p - avg);
    }
    return 1 - 0.5 * dist;
}

// Security of the outcome of measuring A in `basis` against the other systems.
template <class State>
double p_secure_of(const State &s, const std::string &a, const Mat &basis) {
    return p_secure_from(conditional_states(s, a, basis, detail::complement(s.labels, {a})));
}

// Requires rho to be classical on A in `basis`.
inline double p_secure(const DensityMatrix &rho, const std::string &a, const Mat &basis, double tol = 1e-9) {
    auto rest = detail::complement(rho.labels, {a});
    DensityMatrix m = reorder(rho, detail::concat({a}, rest));
    long da = long(m.labels[0].dim), dk = long(m.dim()) / da;
    Mat u = kron(basis, Mat::Identity(dk, dk));
    Mat rot = u.adjoint() * m.rho * u;
    for (long i = 0; i < da; i++) {
        for (long j = 0; j < da; j++) {
            if (i != j && rot.block(i * dk, j * dk, dk, dk).cwiseAbs().maxCoeff() > tol) {
                throw ContractError("state is not classical on '" + a + "' in the given basis");
            }
        }
    }
    return p_secure_of(rho, a, basis);
}

// Pretty-good measurement for sub-normalized states phi_z = p_z rho_z. The
// part of the identity outside the support is split evenly over outcomes.
inline std::vector<Mat> pgm_substates(const std::vector<Mat> &phi) {
    if (phi.empty()) {
        throw InputError("pretty-good measurement of an empty ensemble");
    }
    long d = phi[0].rows();
    Mat avg = Mat::Zero(d, d);
    for (const auto &p : phi) {
        avg += p;
    }
    Mat s = inv_sqrt_psd(avg);
    std::vector<Mat> out;
    Mat rem = Mat::Identity(d, d);
    for (const auto &p : phi) {
        out.push_back(s * p * s);
        rem -= out.back();
    }
    for (auto &e : out) {
        e += rem / double(phi.size());
    }
    return out;
}

inline Povm pgm(const std::vector<std::pair<double, DensityMatrix>> &ensemble) {
    if (ensemble.empty()) {
        throw InputError("pretty-good measurement of an empty ensemble");
    }
    double total = 0;
    std::vector<Mat> phi;
    for (const auto &[p, rho] : ensemble) {
        check_same_space(rho.labels, ensemble[0].second.labels);
        total += p;
        phi.push_back(p * rho.rho);
    }
    if (std::abs(total - 1) > 1e-9) {
        throw InputError("ensemble probabilities must sum to 1");
    }
    return Povm{ensemble[0].second.labels, pgm_substates(phi)};
}

struct HelstromResult {
    Povm povm;
    double success = 0;
};

// Optimal discrimination of rho (prior p) from sigma.
inline HelstromResult helstrom(double p, const DensityMatrix &rho, const DensityMatrix &sigma) {
    check_same_space(rho.labels, sigma.labels);
    if (!(p >= 0 && p <= 1)) {
        throw InputError("prior must lie in [0, 1]");
    }
    Mat delta = p * rho.rho - (1 - p) * sigma.rho;
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (delta + delta.adjoint())));
    long d = delta.rows();
    Mat proj = Mat::Zero(d, d);
    for (long i = 0; i < d; i++) {
        if (es.eigenvalues()[i] > 0) {
            proj += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
        }
    }
    return {Povm{rho.labels, {proj, Mat::Identity(d, d) - proj}},
            0.5 * (1 + es.eigenvalues().cwiseAbs().sum())};
}

// Eigen-decomposition purification onto a new system `ref` of dimension
// max(2, rank).
inline StateVector purify(const DensityMatrix &rho, const std::string &ref = "R") {
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (rho.rho + rho.rho.adjoint())));
    std::vector<long> support;
    for (long i = es.eigenvalues().size(); i-- > 0;) {
        if (es.eigenvalues()[i] > kEigCutoff) {
            support.push_back(i);
        }
    }
    size_t r = std::max<size_t>(2, support.size());
    Labels l = rho.labels;
    l.push_back({ref, r});
    long d = long(rho.dim());
    Vec amps = Vec::Zero(d * long(r));
    for (size_t k = 0; k < support.size(); k++) {
        long i = support[k];
        Vec v = std::sqrt(es.eigenvalues()[i]) * es.eigenvectors().col(i);
        for (long x = 0; x < d; x++) {
            amps[x * long(r) + long(k)] = v[x];
        }
    }
    amps.normalize();
    return StateVector(l, amps);
}

struct UhlmannResult {
    Mat w;             // maps the first state's private systems to the second's
    double overlap = 0; // |<b|(I x W)|a>|
    Labels from, to;
};

// Isometry on the non-shared systems taking a as close as possible to b.
// Needs the target side to be at least as large as the source side.
inline UhlmannResult uhlmann_isometry(const StateVector &a, const StateVector &b,
                                      const std::vector<std::string> &shared) {
    check_same_space(select_labels(a.labels, shared), select_labels(b.labels, shared));
    auto ra = detail::complement(a.labels, shared), rb = detail::complement(b.labels, shared);
    Mat ma = split(a, shared), mb = split(b, shared);
    if (mb.cols() < ma.cols()) {
        throw DimensionError("target purifying system is smaller than the source");
    }
    Mat y = mb.adjoint() * ma;
    Eigen::JacobiSVD<Mat> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
    UhlmannResult out;
    out.w = svd.matrixU().conjugate() * svd.matrixV().transpose();
    out.overlap = svd.singularValues().sum();
    out.from = select_labels(a.labels, ra);
    out.to = select_labels(b.labels, rb);
    return out;
}

// Applies V (d_out x d_in) to the systems `inputs`; the outputs are appended
// after the untouched systems.
inline StateVector apply_op(const StateVector &psi, const Mat &v, const std::vector<std::string> &inputs,
                            const Labels &outputs) {
    auto rest = detail::complement(psi.labels, inputs);
    Mat m = split(psi, rest, inputs);
    if (v.cols() != m.cols() || size_t(v.rows()) != total_dim(outputs)) {
        throw DimensionError("operator shape does not match its input and output systems");
    }
    Labels l = select_labels(psi.labels, rest);
    l.insert(l.end(), outputs.begin(), outputs.end());
    size_t d = total_dim(l);
    Mat out = m * v.transpose();  // rows: rest index, cols: output index
    Mat t = out.transpose();
    return StateVector(l, Eigen::Map<const Vec>(t.data(), long(d)));
}

inline DensityMatrix apply_op(const DensityMatrix &rho, const Mat &v, const std::vector<std::string> &inputs,
                              const Labels &outputs) {
    auto rest = detail::complement(rho.labels, inputs);
    DensityMatrix r = reorder(rho, detail::concat(rest, inputs));
    long dr = long(detail::dim_of(rho.labels, rest));
    if (v.cols() * dr != long(r.dim()) || size_t(v.rows()) != total_dim(outputs)) {
        throw DimensionError("operator shape does not match its input and output systems");
    }
    Labels l = select_labels(rho.labels, rest);
    l.insert(l.end(), outputs.begin(), outputs.end());
    Mat big = kron(Mat::Identity(dr, dr), v);
    return DensityMatrix(l, big * r.rho * big.adjoint());
}

// (X^j Z^k x I)|Phi> = (1/sqrt2) Sum_z (-1)^{kz} |z+j>|z>.
inline StateVector bell_state(int j, int k, const std::string &a = "A", const std::string &b = "B") {
    Vec v = Vec::Zero(4);
    for (int z = 0; z < 2; z++) {
        v[((z ^ j) << 1) | z] = (k && z ? -1.0 : 1.0) / std::sqrt(2.0);
    }
    return StateVector({{a, 2}, {b, 2}}, v);
}

inline StateVector max_entangled(size_t d, const std::string &a = "A", const std::string &b = "B") {
    Vec v = Vec::Zero(long(d * d));
    for (size_t k = 0; k < d; k++) {
        v[long(k * d + k)] = 1 / std::sqrt(double(d));
    }
    return StateVector({{a, d}, {b, d}}, v);
}

inline StateVector basis_state(const Labels &labels, size_t index) {
    Vec v = Vec::Zero(long(total_dim(labels)));
    v[long(index)] = 1;
    return StateVector(labels, v);
}

// Haar-random pure state.
inline StateVector random_pure(const Labels &labels, std::mt19937_64 &rng) {
    std::normal_distribution<double> g;
    Vec v(long(total_dim(labels)));
    for (long i = 0; i < v.size(); i++) {
        v[i] = cplx(g(rng), g(rng));
    }
    return StateVector(labels, v.normalized());
}

// Random mixed state of rank <= `rank` from a partial trace of a random pure state.
inline DensityMatrix random_density(const Labels &labels, size_t rank, std::mt19937_64 &rng) {
    std::normal_distribution<double> g;
    long d = long(total_dim(labels));
    Mat a(d, long(rank));
    for (long i = 0; i < a.size(); i++) {
        a.data()[i] = cplx(g(rng), g(rng));
    }
    Mat rho = a * a.adjoint();
    return DensityMatrix(labels, rho / rho.trace().real());
}

inline Mat projector(const Vec &v) { return v * v.adjoint(); }

// Projective measurement in the columns of `basis`.
inline Povm basis_povm(const Labels &labels, const Mat &basis) {
    Povm m{labels, {}};
    for (long z = 0; z < basis.cols(); z++) {
        m.elements.push_back(projector(basis.col(z)));
    }
    return m;
}

}  // namespace qcomp
