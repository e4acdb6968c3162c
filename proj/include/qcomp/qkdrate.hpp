#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "qcomp/distill.hpp"
#include "qcomp/errors.hpp"
#include "qcomp/pauli.hpp"
#include "qcomp/qstate.hpp"

namespace qcomp {

enum class Protocol { BB84, SixState, Tetrahedral };

inline std::string protocol_name(Protocol p) {
    switch (p) {
    case Protocol::BB84:
        return "bb84";
    case Protocol::SixState:
        return "sixstate";
    case Protocol::Tetrahedral:
        return "tetrahedral";
    }
    return "";
}

inline Protocol parse_protocol(const std::string &s) {
    if (s == "bb84") {
        return Protocol::BB84;
    }
    if (s == "sixstate" || s == "six-state" || s == "six") {
        return Protocol::SixState;
    }
    if (s == "tetrahedral" || s == "tet") {
        return Protocol::Tetrahedral;
    }
    throw InputError("unknown protocol '" + s + "' (bb84, sixstate, tetrahedral)");
}

// Repetition blocks above this length are refused by default.
inline constexpr size_t kMaxBlock = 12;

struct KeyRateModel {
    Protocol protocol = Protocol::BB84;
    double q = 0;  // preprocessing flip probability
    size_t m = 1;  // repetition block length

    void check() const {
        if (!(q >= 0 && q <= 0.5)) {
            throw InputError("flip probability q must lie in [0, 1/2]");
        }
        if (m < 1) {
            throw InputError("block length m must be at least 1");
        }
        if (m > kMaxBlock) {
            throw CapabilityError("block length " + std::to_string(m) + " exceeds the cap of " +
                                  std::to_string(kMaxBlock));
        }
    }
};

// Bell-diagonal weights with amplitude-error marginal p10 + p11 = delta.
inline BellDiagonalParams bell_params(Protocol p, double delta) {
    if (!(delta >= 0 && delta < 0.5)) {
        throw InputError("bit error rate must lie in [0, 1/2)");
    }
    switch (p) {
    case Protocol::BB84:
        return {(1 - delta) * (1 - delta), delta * (1 - delta), delta * (1 - delta), delta * delta};
    case Protocol::SixState:
        return {1 - 1.5 * delta, delta / 2, delta / 2, delta / 2};
    case Protocol::Tetrahedral:
        return {1 - 5 * delta / 3, 2 * delta / 3, delta / 3, 2 * delta / 3};
    }
    throw InputError("unknown protocol");
}

// Key rate without preprocessing, single-pair blocks.
inline double closed_form_rate(Protocol p, double d) {
    switch (p) {
    case Protocol::BB84:
        return 1 - 2 * h2(d);
    case Protocol::SixState:
        return 1 - h2(d) - (1 - d) * h2(d / (2 * (1 - d))) - d;
    case Protocol::Tetrahedral:
        return 1 - h2(d) - d * h2(1.0 / 3) - (1 - d) * h2(2 * d / (3 * (1 - d)));
    }
    return 0;
}

namespace detail {

// Explicit purified state of m signal pairs with preprocessing ancillas,
// laid out as (A^m, A'^m, B^m, E^m) with pair 1 most significant.
// Per pair: Sum_{jkzf} sqrt(p_jk q_f / 2) (-1)^{kz} |z+j+f>^A |f>^A' |z>^B |jk>^E.
inline Vec preprocessed_state(const BellDiagonalParams &p, double q, size_t m) {
    size_t d2 = size_t(1) << m, d4 = size_t(1) << (2 * m);
    Vec v = Vec::Zero(long(d2 * d2 * d2 * d4));
    size_t terms = size_t(1) << (4 * m);
    for (size_t t = 0; t < terms; t++) {
        size_t x = 0, fs = 0, bs = 0, es = 0;
        double amp = 1;
        for (size_t i = 0; i < m; i++) {
            size_t c = (t >> (4 * (m - 1 - i))) & 15;
            int j = int(c >> 3), k = int((c >> 2) & 1), z = int((c >> 1) & 1), f = int(c & 1);
            amp *= std::sqrt(p.p(j, k) * (f ? q : 1 - q) / 2) * ((k & z) ? -1 : 1);
            x = (x << 1) | size_t(z ^ j ^ f);
            fs = (fs << 1) | size_t(f);
            bs = (bs << 1) | size_t(z);
            es = (es << 2) | size_t(2 * j + k);
        }
        if (amp != 0) {
            v[long(((x * d2 + fs) * d2 + bs) * d4 + es)] += amp;
        }
    }
    return v;
}

// H(Zbar | side, S) where Zbar is pair 1's key bit and S the parities of
// pair 1 with each other pair. `rho_of(x)` is the subnormalized side state
// for key string x.
template <class F>
double cond_entropy_given_syndrome(size_t m, F rho_of) {
    size_t d2 = size_t(1) << m;
    double joint = 0;
    std::vector<Mat> by_s(d2 >> 1);
    for (size_t x = 0; x < d2; x++) {
        Mat r = rho_of(x);
        joint += entropy(r);
        size_t lead = x >> (m - 1);
        size_t s = (x ^ (lead ? d2 - 1 : 0)) & ((d2 >> 1) - 1);
        if (by_s[s].size() == 0) {
            by_s[s] = r;
        } else {
            by_s[s] += r;
        }
    }
    double hs = 0;
    for (const auto &r : by_s) {
        hs += entropy(r);
    }
    return joint - hs;
}

inline double entropy_real(const Eigen::MatrixXd &m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    double h = 0;
    for (double l : es.eigenvalues()) {
        if (l > kEigCutoff) {
            h -= l * std::log2(l);
        }
    }
    return h;
}

}  // namespace detail

// Brute-force rate from explicit density matrices of the full purified
// state, (1/m)[H(Zbar|E,S) - H(Zbar|B,S)]. Alice's ancillas stay with her.
inline double oracle_rate_smallm(const KeyRateModel &model, double delta) {
    model.check();
    size_t m = model.m;
    if (m > 4) {
        throw CapabilityError("the explicit oracle supports m <= 4");
    }
    BellDiagonalParams p = bell_params(model.protocol, delta);
    Vec v = detail::preprocessed_state(p, model.q, m);
    long d2 = 1L << m, d4 = 1L << (2 * m);
    long block = d2 * d2 * d4;
    auto rows = [&](size_t x) {
        // (A', B) x E for key string x.
        return Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            v.data() + long(x) * block, d2 * d2, d4);
    };
    double he = detail::cond_entropy_given_syndrome(m, [&](size_t x) {
        auto mx = rows(x);
        return Mat(mx.transpose() * mx.conjugate());
    });
    double hb = detail::cond_entropy_given_syndrome(m, [&](size_t x) {
        auto mx = rows(x);
        Mat r = Mat::Zero(d2, d2);
        for (long f = 0; f < d2; f++) {
            auto mf = mx.middleRows(f * d2, d2);
            r += mf * mf.adjoint();
        }
        return r;
    });
    return (he - hb) / double(m);
}

namespace detail {

inline double binom(size_t n, size_t k) {
    if (k > n) {
        return 0;
    }
    return std::round(std::exp(std::lgamma(double(n + 1)) - std::lgamma(double(k + 1)) - std::lgamma(double(n - k + 1))));
}

// E's operator on one phase register given amplitude error j, for key bit 0;
// key bit 1 flips the sign of the off-diagonal.
inline std::array<Eigen::Matrix2d, 2> phase_operators(const BellDiagonalParams &p, double q,
                                                      std::array<bool, 2> &present) {
    double lam = 1 - 2 * q;
    std::array<Eigen::Matrix2d, 2> tau{};
    for (int j = 0; j < 2; j++) {
        double pj = p.p_amp(j);
        present[size_t(j)] = pj > 0;
        if (pj <= 0) {
            tau[size_t(j)].setZero();
            continue;
        }
        double c = lam * std::sqrt(p.p(j, 0) * p.p(j, 1)) / pj * (j ? -1 : 1);
        tau[size_t(j)] << p.p(j, 0) / pj, c, c, p.p(j, 1) / pj;
    }
    return tau;
}

// H(Zbar|B,S): Bob's side is classical, so this is the residual entropy of
// the key bit given the syndrome of m flipped bits.
inline double bob_term(double dp, size_t m) {
    double hb = 0;
    for (size_t w = 0; w < m; w++) {
        double p1 = std::pow(dp, double(w)) * std::pow(1 - dp, double(m - w));
        double p2 = std::pow(dp, double(m - w)) * std::pow(1 - dp, double(w));
        if (p1 + p2 > 0) {
            hb += binom(m - 1, w) * (p1 + p2) * h2(p1 / (p1 + p2));
        }
    }
    return hb;
}

inline double amplitude_weight(double delta, size_t m, size_t w) {
    return binom(m, w) * std::pow(delta, double(w)) * std::pow(1 - delta, double(m - w));
}

// Sector evaluation by direct tensor products; exponential in m and kept as
// a cross-check for the symmetric-power version.
inline double sector_rate_direct(const BellDiagonalParams &p, double q, size_t m) {
    std::array<bool, 2> present{};
    auto tau = phase_operators(p, q, present);
    double delta = p.p_amp(1);
    size_t dim = size_t(1) << m;
    std::vector<long> even, odd;
    for (size_t i = 0; i < dim; i++) {
        (__builtin_popcountll(i) % 2 ? odd : even).push_back(long(i));
    }
    double he = 0;
    for (size_t w = 0; w <= m; w++) {
        double pa = amplitude_weight(delta, m, w);
        if (pa <= 0 || (w > 0 && !present[1]) || (w < m && !present[0])) {
            continue;
        }
        Eigen::MatrixXd r = Eigen::MatrixXd::Ones(1, 1);
        double h_prod = 0;
        for (size_t i = 0; i < m; i++) {
            const auto &t = tau[i < w ? 1 : 0];
            Eigen::MatrixXd next(r.rows() * 2, r.cols() * 2);
            for (int a = 0; a < 2; a++) {
                for (int b = 0; b < 2; b++) {
                    next.block(a * r.rows(), b * r.cols(), r.rows(), r.cols()) = t(a, b) * r;
                }
            }
            r = next;
            h_prod += entropy_real(t);
        }
        // The two key hypotheses differ by Z on every register, so their
        // average is the parity-block compression of one of them.
        double h_avg = 0;
        for (const auto *idx : {&even, &odd}) {
            h_avg += entropy_real(r(*idx, *idx));
        }
        he += pa * (1 + h_prod - h_avg);
    }
    double dp = delta * (1 - q) + q * (1 - delta);
    return (he - bob_term(dp, m)) / double(m);
}

// n-th symmetric power of a real 2x2 matrix in the orthonormal symmetric
// basis.
inline Eigen::MatrixXd sym_power(const Eigen::Matrix2d &g, size_t n) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(long(n + 1), long(n + 1));
    double a = g(0, 0), b = g(0, 1), c = g(1, 0), d = g(1, 1);
    for (size_t k = 0; k <= n; k++) {
        // g (e1^{n-k} e2^k) = (a e1 + c e2)^{n-k} (b e1 + d e2)^k
        for (size_t i = 0; i <= n - k; i++) {
            double left = binom(n - k, i) * std::pow(a, double(n - k - i)) * std::pow(c, double(i));
            for (size_t j = 0; j <= k; j++) {
                double right = binom(k, j) * std::pow(b, double(k - j)) * std::pow(d, double(j));
                out(long(i + j), long(k)) += left * right;
            }
        }
    }
    for (size_t l = 0; l <= n; l++) {
        for (size_t k = 0; k <= n; k++) {
            out(long(l), long(k)) *= std::sqrt(binom(n, k) / binom(n, l));
        }
    }
    return out;
}

// g^{(x)n} restricted to its GL(2) isotypic components: for each k <=
// n/2 the block Sym^{n-2k}(g) det(g)^k with multiplicity C(n,k) - C(n,k-1).
struct IsotypicBlock {
    Eigen::MatrixXd even, flipped;  // for g and Z g Z
    double mult = 0;
};

inline std::vector<IsotypicBlock> isotypic(const Eigen::Matrix2d &g, size_t n) {
    Eigen::Matrix2d z;
    z << 1, 0, 0, -1;
    Eigen::Matrix2d gz = z * g * z;
    std::vector<IsotypicBlock> out;
    for (size_t k = 0; 2 * k <= n; k++) {
        double det = std::pow(g.determinant(), double(k));
        double mult = binom(n, k) - (k ? binom(n, k - 1) : 0);
        out.push_back({sym_power(g, n - 2 * k) * det, sym_power(gz, n - 2 * k) * det, mult});
    }
    return out;
}

inline Eigen::MatrixXd kron_real(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (long i = 0; i < a.rows(); i++) {
        for (long j = 0; j < a.cols(); j++) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

// Sector evaluation for blocks of m pairs. Conditioned on w amplitude errors,
// E's state for key bit 0 is tau_1^{(x)w} (x) tau_0^{(x)(m-w)} and for key bit
// 1 its conjugate by Z on every register. Both commute with permutations
// inside each group, so the average is diagonalized per isotypic component.
inline double sector_rate(const BellDiagonalParams &p, double q, size_t m) {
    std::array<bool, 2> present{};
    auto tau = phase_operators(p, q, present);
    double delta = p.p_amp(1);
    std::array<double, 2> h_tau = {entropy_real(tau[0]), entropy_real(tau[1])};
    double he = 0;
    for (size_t w = 0; w <= m; w++) {
        double pa = amplitude_weight(delta, m, w);
        if (pa <= 0 || (w > 0 && !present[1]) || (w < m && !present[0])) {
            continue;
        }
        double h_prod = double(w) * h_tau[1] + double(m - w) * h_tau[0];
        double h_avg = 0;
        for (const auto &b1 : isotypic(tau[1], w)) {
            for (const auto &b0 : isotypic(tau[0], m - w)) {
                Eigen::MatrixXd avg = 0.5 * (kron_real(b1.even, b0.even) + kron_real(b1.flipped, b0.flipped));
                h_avg += b1.mult * b0.mult * entropy_real(0.5 * (avg + avg.transpose()));
            }
        }
        he += pa * (1 + h_prod - h_avg);
    }
    double dp = delta * (1 - q) + q * (1 - delta);
    return (he - bob_term(dp, m)) / double(m);
}

}  // namespace detail

// Key bits per sifted signal. Closed forms at q = 0, m = 1; the explicit
// four-system state for m = 1, q > 0; the sector evaluation for m > 1.
inline double rate(const KeyRateModel &model, double delta) {
    model.check();
    BellDiagonalParams p = bell_params(model.protocol, delta);
    if (model.m == 1) {
        return model.q == 0 ? closed_form_rate(model.protocol, delta) : oracle_rate_smallm(model, delta);
    }
    return detail::sector_rate(p, model.q, model.m);
}

struct PreprocessingOptimum {
    double q = 0;
    double rate = 0;
    size_t evals = 0;
};

// Upper end of the q search; at q = 1/2 the key is pure noise.
inline constexpr double kMaxFlip = 0.5 - 1e-3;

// 21-point grid on [0, kMaxFlip], then golden section around the best grid
// point to 1e-4. Ties within 1e-9 prefer the smaller q.
inline PreprocessingOptimum optimize_preprocessing(Protocol protocol, double delta, size_t m) {
    KeyRateModel model{protocol, 0, m};
    PreprocessingOptimum best;
    auto eval = [&](double q) {
        model.q = q;
        best.evals++;
        return rate(model, delta);
    };
    const int grid = 21;
    std::vector<double> qs(grid), rs(grid);
    int arg = 0;
    for (int i = 0; i < grid; i++) {
        qs[size_t(i)] = kMaxFlip * i / (grid - 1);
        rs[size_t(i)] = eval(qs[size_t(i)]);
        if (rs[size_t(i)] > rs[size_t(arg)] + 1e-9) {
            arg = i;
        }
    }
    best.q = qs[size_t(arg)];
    best.rate = rs[size_t(arg)];
    double a = qs[size_t(std::max(arg - 1, 0))], b = qs[size_t(std::min(arg + 1, grid - 1))];
    const double g = (std::sqrt(5.0) - 1) / 2;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = eval(c), fd = eval(d);
    while (b - a > 1e-4) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = eval(d);
        }
    }
    double qm = 0.5 * (a + b), rm = eval(qm);
    if (rm > best.rate + 1e-9 || (rm >= best.rate - 1e-9 && qm < best.q)) {
        best.q = qm;
        best.rate = rm;
    }
    return best;
}

struct ThresholdResult {
    double delta_star = 0;
    double q_used = 0;
    size_t m_used = 1;
    size_t solver_evals = 0;
    double lo = 0, hi = 0;  // final bracket
};

namespace detail {

template <class F>
ThresholdResult bisect_threshold(F positive_rate, double tol) {
    ThresholdResult r;
    double lo = 0, hi = 0.25;
    if (!(positive_rate(lo) > 0)) {
        throw SolverError("rate is not positive at zero error");
    }
    if (!(positive_rate(hi) < 0)) {
        throw SolverError("rate does not change sign on [0, 0.25]");
    }
    r.solver_evals = 2;
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        (positive_rate(mid) > 0 ? lo : hi) = mid;
        r.solver_evals++;
    }
    r.lo = lo;
    r.hi = hi;
    r.delta_star = 0.5 * (lo + hi);
    return r;
}

}  // namespace detail

// Error rate where the key rate of the fixed model crosses zero.
inline ThresholdResult threshold(const KeyRateModel &model, double tol = 1e-5) {
    model.check();
    ThresholdResult r = detail::bisect_threshold([&](double d) { return rate(model, d); }, tol);
    r.q_used = model.q;
    r.m_used = model.m;
    return r;
}

// Threshold of max_q rate(delta, q); q_used is the optimizer's q at the
// lower bracket end.
inline ThresholdResult optimized_threshold(Protocol protocol, size_t m, double tol = 1e-5) {
    KeyRateModel{protocol, 0, m}.check();
    size_t evals = 0;
    ThresholdResult r = detail::bisect_threshold(
        [&](double d) {
            auto o = optimize_preprocessing(protocol, d, m);
            evals += o.evals;
            return o.rate;
        },
        tol);
    r.q_used = optimize_preprocessing(protocol, r.lo, m).q;
    r.m_used = m;
    r.solver_evals = evals;
    return r;
}

}  // namespace qcomp
