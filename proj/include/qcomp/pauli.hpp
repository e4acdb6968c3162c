#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qcomp/errors.hpp"
#include "qcomp/gf2.hpp"

namespace qcomp {

// P = i^phase * X^x Z^z, with X^x Z^z taken qubit by qubit. Y = iXZ.
class PauliOp {
public:
    PauliOp() = default;
    PauliOp(F2Vec x, F2Vec z, int phase = 0) : x_(std::move(x)), z_(std::move(z)), phase_(phase & 3) {
        if (x_.size() != z_.size()) {
            throw DimensionError("Pauli x and z parts differ in length");
        }
    }

    static PauliOp identity(size_t n) { return PauliOp(F2Vec(n), F2Vec(n)); }

    // Accepts an optional sign prefix (+, -, i, +i, -i) then letters IXYZ.
    static PauliOp from_string(const std::string &s) {
        size_t pos = 0;
        int letter_phase = 0;
        if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
            letter_phase = s[pos] == '-' ? 2 : 0;
            pos++;
        }
        if (pos < s.size() && s[pos] == 'i') {
            letter_phase += 1;
            pos++;
        }
        size_t n = s.size() - pos;
        F2Vec x(n), z(n);
        int ys = 0;
        for (size_t k = 0; k < n; k++) {
            switch (s[pos + k]) {
            case 'I': break;
            case 'X': x.set(k, true); break;
            case 'Z': z.set(k, true); break;
            case 'Y':
                x.set(k, true);
                z.set(k, true);
                ys++;
                break;
            default: throw InputError("bad Pauli letter in '" + s + "'");
            }
        }
        return PauliOp(x, z, letter_phase + ys);
    }

    size_t n() const { return x_.size(); }
    const F2Vec &x() const { return x_; }
    const F2Vec &z() const { return z_; }
    int phase() const { return phase_; }

    std::string letters() const {
        std::string s(n(), 'I');
        for (size_t k = 0; k < n(); k++) {
            bool a = x_.get(k), b = z_.get(k);
            s[k] = a && b ? 'Y' : a ? 'X' : b ? 'Z' : 'I';
        }
        return s;
    }

    // Sign in the letter form, e.g. "-iY" for XZ.
    std::string str() const {
        int p = (phase_ - ys()) & 3;
        static const char *prefix[] = {"+", "+i", "-", "-i"};
        return std::string(prefix[p]) + (n() ? letters() : "I");
    }

    PauliOp operator*(const PauliOp &o) const {
        if (n() != o.n()) {
            throw DimensionError("Pauli product of different lengths");
        }
        // Z^a X^b = (-1)^{a.b} X^b Z^a.
        return PauliOp(x_ ^ o.x_, z_ ^ o.z_, phase_ + o.phase_ + 2 * z_.dot(o.x_));
    }

    bool equal_up_to_phase(const PauliOp &o) const { return x_ == o.x_ && z_ == o.z_; }
    bool operator==(const PauliOp &o) const { return equal_up_to_phase(o) && phase_ == o.phase_; }

private:
    int ys() const {
        size_t c = 0;
        for (size_t k = 0; k < n(); k++) {
            c += x_.get(k) && z_.get(k);
        }
        return int(c);
    }

    F2Vec x_, z_;
    int phase_ = 0;
};

inline bool commutes(const PauliOp &a, const PauliOp &b) {
    if (a.n() != b.n()) {
        throw DimensionError("commutes: operators act on different numbers of qubits");
    }
    return (a.x().dot(b.z()) ^ a.z().dot(b.x())) == 0;
}

// Dense matrix with qubit 1 as the most significant tensor factor.
inline Eigen::MatrixXcd pauli_matrix(const PauliOp &p) {
    using C = std::complex<double>;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(1, 1);
    for (size_t k = 0; k < p.n(); k++) {
        Eigen::Matrix2cd f = Eigen::Matrix2cd::Identity();
        if (p.x().get(k)) {
            f = (Eigen::Matrix2cd() << 0, 1, 1, 0).finished() * f;
        }
        if (p.z().get(k)) {
            f = f * (Eigen::Matrix2cd() << 1, 0, 0, -1).finished();
        }
        Eigen::MatrixXcd next(m.rows() * 2, m.cols() * 2);
        for (Eigen::Index i = 0; i < m.rows(); i++) {
            for (Eigen::Index j = 0; j < m.cols(); j++) {
                next.block(2 * i, 2 * j, 2, 2) = m(i, j) * f;
            }
        }
        m = std::move(next);
    }
    static const C ipow[] = {C(1, 0), C(0, 1), C(-1, 0), C(0, -1)};
    return ipow[p.phase()] * m;
}

// Bell-diagonal noise: p_jk is the weight of X^j Z^k acting on one half of
// an EPR pair, so j flags an amplitude error and k a phase error.
struct BellDiagonalParams {
    double p00 = 1, p01 = 0, p10 = 0, p11 = 0;

    double p(int j, int k) const {
        return j ? (k ? p11 : p10) : (k ? p01 : p00);
    }
    double p_amp(int j) const { return p(j, 0) + p(j, 1); }

    void validate() const {
        double sum = 0;
        for (double v : {p00, p01, p10, p11}) {
            if (!(v >= -1e-12) || !std::isfinite(v)) {
                throw InputError("Bell-diagonal weights must be nonnegative");
            }
            sum += v;
        }
        if (std::abs(sum - 1) > 1e-9) {
            throw InputError("Bell-diagonal weights must sum to 1");
        }
    }
};

inline double error_probability(const PauliOp &e, const BellDiagonalParams &noise) {
    double p = 1;
    for (size_t k = 0; k < e.n(); k++) {
        p *= noise.p(e.x().get(k), e.z().get(k));
    }
    return p;
}

// CSS code: Z-type checks hz act on amplitude errors, X-type checks hx on
// phase errors. Each logical pair is (Zbar, Xbar).
struct CssCode {
    size_t n = 0;
    F2Mat hz, hx;
    std::vector<std::pair<PauliOp, PauliOp>> logicals;
};

// Pairs (Z-type, X-type) that anticommute within a pair and commute across
// pairs. Order: Z checks, X checks, logicals.
struct VirtualBasis {
    std::vector<std::pair<PauliOp, PauliOp>> pairs;
    size_t n_z_stabilizers = 0;
    size_t n_x_stabilizers = 0;
    size_t n_logical = 0;
};

namespace detail {

inline PauliOp z_type(const F2Vec &v) { return PauliOp(F2Vec(v.size()), v); }
inline PauliOp x_type(const F2Vec &v) { return PauliOp(v, F2Vec(v.size())); }

// Builds the Z-type basis [R; W; L] and its dual [U; S; G]. L and G are the
// given logicals when supplied, otherwise L completes R inside ker(hx) and G
// is read off the dual.
inline VirtualBasis build_virtual(const F2Mat &hz, const F2Mat &hx,
                                  const std::vector<std::pair<F2Vec, F2Vec>> *given) {
    size_t n = hz.n_cols(), rz = hz.n_rows(), rx = hx.n_rows();
    size_t k = n - rz - rx;
    std::vector<F2Vec> L, G;
    if (given) {
        for (const auto &[zb, xb] : *given) {
            L.push_back(zb);
            G.push_back(xb);
        }
    } else {
        EchelonBasis eb(n);
        for (const auto &r : hz.rows()) {
            eb.insert(r);
        }
        for (const auto &v : kernel_basis(hx)) {
            if (L.size() < k && eb.insert(v)) {
                L.push_back(v);
            }
        }
    }
    if (L.size() != k) {
        throw ConstructionError("logical count does not match n - rank(hz) - rank(hx)");
    }

    // W: w_j . s_i = delta_ij and, with known Xbar, w_j . g = 0.
    F2Mat lhs(n);
    for (const auto &r : hx.rows()) {
        lhs.push_row(r);
    }
    for (const auto &g : G) {
        lhs.push_row(g);
    }
    std::vector<F2Vec> W;
    for (size_t j = 0; j < rx; j++) {
        F2Vec rhs(lhs.n_rows());
        rhs.set(j, true);
        auto w = solve(lhs, rhs);
        if (!w) {
            throw ConstructionError("X checks and logicals are linearly dependent");
        }
        W.push_back(*w);
    }

    F2Mat zb(n);
    for (const auto &r : hz.rows()) {
        zb.push_row(r);
    }
    for (const auto &w : W) {
        zb.push_row(w);
    }
    for (const auto &l : L) {
        zb.push_row(l);
    }
    auto inv = inverse(zb);
    if (!inv) {
        throw ConstructionError("Z checks and logicals are linearly dependent");
    }
    F2Mat dual = transpose(*inv);
    for (size_t j = 0; j < rx; j++) {
        if (!(dual.row(rz + j) == hx.row(j))) {
            throw ConstructionError("X checks do not commute with Z checks and logicals");
        }
    }
    for (size_t j = 0; j < G.size(); j++) {
        if (!(dual.row(rz + rx + j) == G[j])) {
            throw ConstructionError("logical operators do not pair up with the checks");
        }
    }

    VirtualBasis vb;
    vb.n_z_stabilizers = rz;
    vb.n_x_stabilizers = rx;
    vb.n_logical = k;
    for (size_t i = 0; i < n; i++) {
        vb.pairs.emplace_back(z_type(zb.row(i)), x_type(dual.row(i)));
    }
    return vb;
}

}  // namespace detail

// Validates the checks and fills in logicals. Explicit logicals are given as
// (Zbar z-part, Xbar x-part) pairs.
inline CssCode make_css(const F2Mat &hz, const F2Mat &hx,
                        std::optional<std::vector<std::pair<F2Vec, F2Vec>>> logicals = std::nullopt) {
    size_t n = hz.n_cols();
    if (hx.n_cols() != n) {
        throw DimensionError("hz and hx have different widths");
    }
    if (rank(hz) != hz.n_rows() || rank(hx) != hx.n_rows()) {
        throw ConstructionError("check rows must be linearly independent");
    }
    if (!orthogonal(hz, hx)) {
        throw ConstructionError("Z and X checks do not commute");
    }
    if (logicals) {
        for (const auto &[zb, xb] : *logicals) {
            if (zb.size() != n || xb.size() != n) {
                throw DimensionError("logical operator has wrong length");
            }
        }
    }
    VirtualBasis vb = detail::build_virtual(hz, hx, logicals ? &*logicals : nullptr);
    CssCode c{n, hz, hx, {}};
    for (size_t i = 0; i < vb.n_logical; i++) {
        c.logicals.push_back(vb.pairs[vb.n_z_stabilizers + vb.n_x_stabilizers + i]);
    }
    return c;
}

inline VirtualBasis virtual_basis(const CssCode &c) {
    std::vector<std::pair<F2Vec, F2Vec>> given;
    for (const auto &[zb, xb] : c.logicals) {
        given.emplace_back(zb.z(), xb.x());
    }
    return detail::build_virtual(c.hz, c.hx, &given);
}

inline CssCode repetition3() {
    return make_css(F2Mat::from_rows({"101", "011"}), F2Mat(3),
                    std::vector<std::pair<F2Vec, F2Vec>>{
                        {F2Vec::from_string("111"), F2Vec::from_string("111")}});
}

inline CssCode shor9() {
    F2Mat hz = F2Mat::from_rows({"101000000", "011000000", "000101000", "000011000",
                                 "000000101", "000000011"});
    F2Mat hx = F2Mat::from_rows({"000111111", "111000111"});
    return make_css(hz, hx,
                    std::vector<std::pair<F2Vec, F2Vec>>{
                        {F2Vec::from_string("111111111"), F2Vec::from_string("111111111")}});
}

// (sZ, sX) = (hz x, hx z).
inline std::pair<F2Vec, F2Vec> syndromes_of(const CssCode &c, const PauliOp &e) {
    if (e.n() != c.n) {
        throw DimensionError("error acts on the wrong number of qubits");
    }
    return {syndrome(c.hz, e.x()), syndrome(c.hx, e.z())};
}

inline bool in_rowspace(const F2Mat &m, const F2Vec &v) {
    EchelonBasis eb(m.n_cols());
    for (const auto &r : m.rows()) {
        eb.insert(r);
    }
    return eb.contains(v);
}

// Element of the stabilizer group, up to phase.
inline bool is_stabilizer(const CssCode &c, const PauliOp &p) {
    return in_rowspace(c.hx, p.x()) && in_rowspace(c.hz, p.z());
}

inline bool same_logical_class(const CssCode &c, const PauliOp &a, const PauliOp &b) {
    return is_stabilizer(c, a * b);
}

inline std::string pauli_to_mask_string(const PauliOp &p) {
    return "X:" + p.x().str() + ";Z:" + p.z().str();
}

inline PauliOp pauli_from_mask_string(const std::string &s) {
    auto semi = s.find(';');
    if (s.rfind("X:", 0) != 0 || semi == std::string::npos || s.compare(semi + 1, 2, "Z:") != 0) {
        throw InputError("expected X:<bits>;Z:<bits>, got '" + s + "'");
    }
    F2Vec x = F2Vec::from_string(s.substr(2, semi - 2));
    F2Vec z = F2Vec::from_string(s.substr(semi + 3));
    if (x.size() != z.size()) {
        throw InputError("X and Z masks differ in length in '" + s + "'");
    }
    return PauliOp(x, z);
}

// Text form: the two check matrices then one logical pair per line.
inline std::string code_to_text(const CssCode &c) {
    std::string s = "hz\n" + c.hz.to_text() + "hx\n" + c.hx.to_text() + "logicals " +
                    std::to_string(c.logicals.size()) + "\n";
    for (const auto &[zb, xb] : c.logicals) {
        s += pauli_to_mask_string(zb) + " " + pauli_to_mask_string(xb) + "\n";
    }
    return s;
}

inline CssCode code_from_text(const std::string &text) {
    std::istringstream in(text);
    auto read_matrix = [&](const std::string &tag) {
        std::string t;
        size_t r = 0, c = 0;
        if (!(in >> t) || t != tag || !(in >> r >> c)) {
            throw InputError("code text: expected section '" + tag + "'");
        }
        std::string body = std::to_string(r) + " " + std::to_string(c) + "\n";
        for (size_t i = 0; i < r; i++) {
            std::string row;
            if (!(in >> row)) {
                throw InputError("code text: missing rows in '" + tag + "'");
            }
            body += row + "\n";
        }
        return F2Mat::from_text(body);
    };
    F2Mat hz = read_matrix("hz");
    F2Mat hx = read_matrix("hx");
    std::string t;
    size_t k = 0;
    if (!(in >> t) || t != "logicals" || !(in >> k)) {
        throw InputError("code text: expected 'logicals <k>'");
    }
    std::vector<std::pair<F2Vec, F2Vec>> logicals;
    for (size_t i = 0; i < k; i++) {
        std::string a, b;
        if (!(in >> a >> b)) {
            throw InputError("code text: missing logical pair");
        }
        logicals.emplace_back(pauli_from_mask_string(a).z(), pauli_from_mask_string(b).x());
    }
    return make_css(hz, hx, logicals);
}

enum class CosetStrategy { Auto, Enumerate, Trellis };

// Minimum-cost v with H v = s, where bit k costs cost[k][v_k]. Ties within
// a relative 1e-9 go to the lexicographically smallest v. Enumerates the
// kernel when it is small, otherwise runs a DP over syndrome states.
inline F2Vec decode_coset(const F2Mat &h, const F2Vec &s, const std::vector<std::array<double, 2>> &cost,
                          CosetStrategy strategy = CosetStrategy::Auto) {
    size_t n = h.n_cols();
    if (cost.size() != n) {
        throw DimensionError("decode_coset: one cost pair per bit is required");
    }
    if (n > 64) {
        throw CapabilityError("decode_coset supports at most 64 bits");
    }
    auto x0 = solve(h, s);
    if (!x0) {
        throw InputError("syndrome is not reachable from any error");
    }
    auto rows = detail::rref(h).rows;
    size_t r = rows.size(), k = n - r;
    if (strategy == CosetStrategy::Auto) {
        strategy = (k <= r || r > 24) ? CosetStrategy::Enumerate : CosetStrategy::Trellis;
    }
    auto tol = [](double v) { return 1e-9 * std::max(1.0, std::abs(v)); };

    if (strategy == CosetStrategy::Enumerate) {
        if (k > 30) {
            throw CapabilityError("coset too large to enumerate (" + std::to_string(k) + " free bits)");
        }
        std::vector<uint64_t> kern;
        for (const auto &v : kernel_basis(h)) {
            kern.push_back(v.mask());
        }
        auto cost_of = [&](uint64_t m) {
            double c = 0;
            for (size_t b = 0; b < n; b++) {
                c += cost[b][(m >> b) & 1];
            }
            return c;
        };
        uint64_t cur = x0->mask(), best = cur;
        double best_cost = cost_of(cur);
        for (uint64_t g = 1; g < (uint64_t{1} << k); g++) {
            cur ^= kern[size_t(__builtin_ctzll(g))];
            double c = cost_of(cur);
            if (c < best_cost - tol(best_cost) ||
                (c <= best_cost + tol(best_cost) && mask_less(cur, best))) {
                if (c < best_cost) {
                    best_cost = c;
                }
                best = cur;
            }
        }
        return F2Vec::from_mask(n, best);
    }

    if (r > 24) {
        throw CapabilityError("too many independent checks for the trellis decoder");
    }
    std::vector<uint64_t> col(n, 0);
    for (size_t i = 0; i < r; i++) {
        for (size_t b = 0; b < n; b++) {
            if (rows[i].get(b)) {
                col[b] |= uint64_t{1} << i;
            }
        }
    }
    uint64_t target = 0;
    for (size_t b = 0; b < n; b++) {
        if (x0->get(b)) {
            target ^= col[b];
        }
    }
    size_t states = size_t{1} << r;
    const double inf = std::numeric_limits<double>::infinity();
    // best[b][st]: cheapest completion of bits b.. starting from state st.
    std::vector<double> best((n + 1) * states, inf);
    auto at = [&](size_t b, uint64_t st) -> double & { return best[b * states + st]; };
    at(n, target) = 0;
    for (size_t b = n; b-- > 0;) {
        for (uint64_t st = 0; st < states; st++) {
            at(b, st) = std::min(cost[b][0] + at(b + 1, st), cost[b][1] + at(b + 1, st ^ col[b]));
        }
    }
    F2Vec out(n);
    uint64_t st = 0;
    for (size_t b = 0; b < n; b++) {
        double opt = at(b, st);
        if (cost[b][0] + at(b + 1, st) <= opt + tol(opt)) {
            continue;
        }
        out.set(b, true);
        st ^= col[b];
    }
    return out;
}

// Most probable Pauli with the given syndromes under i.i.d. Bell-diagonal
// noise. Enumerates amplitude corrections and, for each, solves the phase
// problem with conditional weights. Ties go to the lexicographically smallest
// (x, z).
inline PauliOp decode_ml(const CssCode &c, const F2Vec &s_z, const F2Vec &s_x,
                         const BellDiagonalParams &noise, size_t n_max = 20) {
    noise.validate();
    size_t n = c.n;
    if (n > n_max) {
        throw CapabilityError("decode_ml: n = " + std::to_string(n) + " exceeds the cap of " +
                              std::to_string(n_max));
    }
    auto x0 = solve(c.hz, s_z);
    if (!x0) {
        throw InputError("amplitude syndrome is not reachable");
    }
    auto kern = kernel_basis(c.hz);
    size_t kz = kern.size(), rx = c.hx.n_rows();
    double work = std::ldexp(double(n), int(kz + std::min(rx, n - rx)));
    if (kz > 26 || work > std::ldexp(1.0, 26)) {
        throw CapabilityError("decode_ml: search space too large");
    }
    auto nlog = [](double p) { return -std::log(std::max(p, 1e-300)); };
    std::array<std::array<double, 2>, 2> phase_cost{};
    for (int j = 0; j < 2; j++) {
        double pa = noise.p_amp(j);
        for (int k = 0; k < 2; k++) {
            phase_cost[j][k] = pa > 0 ? nlog(noise.p(j, k) / pa) : 0.0;
        }
    }
    std::array<double, 2> amp_cost = {nlog(noise.p_amp(0)), nlog(noise.p_amp(1))};

    F2Vec cur = *x0, best_x = cur, best_z(n);
    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<std::array<double, 2>> cost(n);
    for (uint64_t g = 0; g < (uint64_t{1} << kz); g++) {
        if (g) {
            cur ^= kern[size_t(__builtin_ctzll(g))];
        }
        double total = 0;
        for (size_t b = 0; b < n; b++) {
            int j = cur.get(b);
            total += amp_cost[j];
            cost[b] = phase_cost[j];
        }
        F2Vec z = decode_coset(c.hx, s_x, cost);
        for (size_t b = 0; b < n; b++) {
            total += cost[b][z.get(b)];
        }
        double t = 1e-9 * std::max(1.0, std::abs(best_cost));
        if (g == 0 || total < best_cost - t || (total <= best_cost + t && cur < best_x)) {
            best_cost = std::min(best_cost, total);
            best_x = cur;
            best_z = z;
        }
    }
    return PauliOp(best_x, best_z);
}

}  // namespace qcomp
