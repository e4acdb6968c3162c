#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qcomp/errors.hpp"

namespace qcomp {

// Fixed-length bit string over GF(2), packed 64 bits per word. Bit i is the
// i-th character of the string form, so index 0 is qubit 1.
class F2Vec {
public:
    F2Vec() = default;
    explicit F2Vec(size_t n) : n_(n), words_((n + 63) / 64, 0) {}

    static F2Vec from_string(const std::string &s) {
        F2Vec v(s.size());
        for (size_t i = 0; i < s.size(); i++) {
            if (s[i] == '1') {
                v.set(i, true);
            } else if (s[i] != '0') {
                throw InputError("bit string contains '" + std::string(1, s[i]) + "'");
            }
        }
        return v;
    }

    // Low bit of mask is index 0.
    static F2Vec from_mask(size_t n, uint64_t mask) {
        if (n > 64) {
            throw DimensionError("from_mask supports at most 64 bits");
        }
        F2Vec v(n);
        if (n > 0) {
            v.words_[0] = n == 64 ? mask : (mask & ((uint64_t{1} << n) - 1));
        }
        return v;
    }

    size_t size() const { return n_; }

    bool get(size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1; }

    void set(size_t i, bool b) {
        uint64_t bit = uint64_t{1} << (i & 63);
        if (b) {
            words_[i >> 6] |= bit;
        } else {
            words_[i >> 6] &= ~bit;
        }
    }

    void flip(size_t i) { words_[i >> 6] ^= uint64_t{1} << (i & 63); }

    // Only valid for n <= 64.
    uint64_t mask() const {
        if (n_ > 64) {
            throw DimensionError("mask() needs at most 64 bits");
        }
        return words_.empty() ? 0 : words_[0];
    }

    size_t weight() const {
        size_t w = 0;
        for (uint64_t x : words_) {
            w += size_t(__builtin_popcountll(x));
        }
        return w;
    }

    bool is_zero() const {
        return std::all_of(words_.begin(), words_.end(), [](uint64_t x) { return x == 0; });
    }

    // GF(2) inner product.
    int dot(const F2Vec &o) const {
        check_same(o);
        uint64_t acc = 0;
        for (size_t i = 0; i < words_.size(); i++) {
            acc ^= words_[i] & o.words_[i];
        }
        return __builtin_popcountll(acc) & 1;
    }

    F2Vec &operator^=(const F2Vec &o) {
        check_same(o);
        for (size_t i = 0; i < words_.size(); i++) {
            words_[i] ^= o.words_[i];
        }
        return *this;
    }

    friend F2Vec operator^(F2Vec a, const F2Vec &b) {
        a ^= b;
        return a;
    }

    // Index of the first set bit, or size() if zero.
    size_t first_one() const {
        for (size_t w = 0; w < words_.size(); w++) {
            if (words_[w]) {
                return w * 64 + size_t(__builtin_ctzll(words_[w]));
            }
        }
        return n_;
    }

    std::string str() const {
        std::string s(n_, '0');
        for (size_t i = 0; i < n_; i++) {
            if (get(i)) {
                s[i] = '1';
            }
        }
        return s;
    }

    friend bool operator==(const F2Vec &a, const F2Vec &b) {
        return a.n_ == b.n_ && a.words_ == b.words_;
    }

    // Lexicographic on the string form ('0' < '1', index 0 first).
    friend bool operator<(const F2Vec &a, const F2Vec &b) {
        a.check_same(b);
        for (size_t w = 0; w < a.words_.size(); w++) {
            uint64_t d = a.words_[w] ^ b.words_[w];
            if (d) {
                return ((a.words_[w] >> __builtin_ctzll(d)) & 1) == 0;
            }
        }
        return false;
    }

private:
    void check_same(const F2Vec &o) const {
        if (o.n_ != n_) {
            throw DimensionError("bit vector lengths differ: " + std::to_string(n_) + " vs " +
                                 std::to_string(o.n_));
        }
    }

    size_t n_ = 0;
    std::vector<uint64_t> words_;
};

// Lexicographic compare of masks under the same convention as F2Vec.
inline bool mask_less(uint64_t a, uint64_t b) {
    uint64_t d = a ^ b;
    return d != 0 && ((a >> __builtin_ctzll(d)) & 1) == 0;
}

class F2Mat {
public:
    F2Mat() = default;
    explicit F2Mat(size_t n_cols) : n_cols_(n_cols) {}
    F2Mat(size_t n_cols, std::vector<F2Vec> rows) : n_cols_(n_cols), rows_(std::move(rows)) {
        for (const auto &r : rows_) {
            if (r.size() != n_cols_) {
                throw DimensionError("matrix rows must all have length " + std::to_string(n_cols_));
            }
        }
    }

    static F2Mat from_rows(const std::vector<std::string> &rows) {
        if (rows.empty()) {
            throw InputError("from_rows needs at least one row to fix the width");
        }
        std::vector<F2Vec> v;
        for (const auto &r : rows) {
            v.push_back(F2Vec::from_string(r));
        }
        return F2Mat(rows[0].size(), std::move(v));
    }

    static F2Mat identity(size_t n) {
        F2Mat m(n);
        for (size_t i = 0; i < n; i++) {
            F2Vec v(n);
            v.set(i, true);
            m.push_row(v);
        }
        return m;
    }

    static F2Mat zeros(size_t rows, size_t cols) {
        return F2Mat(cols, std::vector<F2Vec>(rows, F2Vec(cols)));
    }

    size_t n_rows() const { return rows_.size(); }
    size_t n_cols() const { return n_cols_; }
    const F2Vec &row(size_t i) const { return rows_.at(i); }
    const std::vector<F2Vec> &rows() const { return rows_; }

    void push_row(const F2Vec &v) {
        if (v.size() != n_cols_) {
            throw DimensionError("row length " + std::to_string(v.size()) + " != " +
                                 std::to_string(n_cols_));
        }
        rows_.push_back(v);
    }

    F2Mat first_rows(size_t k) const {
        return F2Mat(n_cols_, std::vector<F2Vec>(rows_.begin(), rows_.begin() + long(k)));
    }

    // Plain text: "n_rows n_cols" then one 0/1 row per line.
    std::string to_text() const {
        std::ostringstream out;
        out << rows_.size() << ' ' << n_cols_ << '\n';
        for (const auto &r : rows_) {
            out << r.str() << '\n';
        }
        return out.str();
    }

    static F2Mat from_text(const std::string &text) {
        std::istringstream in(text);
        long r = -1, c = -1;
        if (!(in >> r >> c) || r < 0 || c < 0) {
            throw InputError("matrix header must be 'n_rows n_cols'");
        }
        F2Mat m{size_t(c)};
        for (long i = 0; i < r; i++) {
            std::string line;
            if (!(in >> line)) {
                throw InputError("matrix text ends after " + std::to_string(i) + " rows");
            }
            if (line.size() != size_t(c)) {
                throw InputError("matrix row " + std::to_string(i) + " has wrong length");
            }
            m.push_row(F2Vec::from_string(line));
        }
        return m;
    }

    friend bool operator==(const F2Mat &a, const F2Mat &b) {
        return a.n_cols_ == b.n_cols_ && a.rows_ == b.rows_;
    }

private:
    size_t n_cols_ = 0;
    std::vector<F2Vec> rows_;
};

// Incremental echelon form; insert() reports whether a vector was independent
// of everything inserted before.
class EchelonBasis {
public:
    explicit EchelonBasis(size_t n) : n_(n) {}

    F2Vec reduce(F2Vec v) const {
        for (size_t i = 0; i < rows_.size(); i++) {
            if (v.get(pivots_[i])) {
                v ^= rows_[i];
            }
        }
        return v;
    }

    bool contains(const F2Vec &v) const { return reduce(v).is_zero(); }

    bool insert(const F2Vec &v) {
        if (v.size() != n_) {
            throw DimensionError("echelon insert: wrong length");
        }
        F2Vec r = reduce(v);
        if (r.is_zero()) {
            return false;
        }
        size_t p = r.first_one();
        // Keep existing rows clear of the new pivot so reduce() is one pass.
        for (auto &row : rows_) {
            if (row.get(p)) {
                row ^= r;
            }
        }
        rows_.push_back(r);
        pivots_.push_back(p);
        return true;
    }

    size_t size() const { return rows_.size(); }

private:
    size_t n_;
    std::vector<F2Vec> rows_;
    std::vector<size_t> pivots_;
};

namespace detail {

// Reduced row echelon form with leftmost-first pivoting.
struct Rref {
    std::vector<F2Vec> rows;    // nonzero rows in pivot order
    std::vector<size_t> pivots; // pivot column per row
};

inline Rref rref(const F2Mat &m) {
    std::vector<F2Vec> a = m.rows();
    Rref out;
    size_t r = 0;
    for (size_t c = 0; c < m.n_cols() && r < a.size(); c++) {
        size_t p = r;
        while (p < a.size() && !a[p].get(c)) {
            p++;
        }
        if (p == a.size()) {
            continue;
        }
        std::swap(a[r], a[p]);
        for (size_t i = 0; i < a.size(); i++) {
            if (i != r && a[i].get(c)) {
                a[i] ^= a[r];
            }
        }
        out.pivots.push_back(c);
        r++;
    }
    a.resize(r);
    out.rows = std::move(a);
    return out;
}

}  // namespace detail

inline size_t rank(const F2Mat &m) { return detail::rref(m).rows.size(); }

// Basis of {v : M v = 0}, one vector per free column in increasing column
// order, built from the leftmost-pivot reduced echelon form.
inline std::vector<F2Vec> kernel_basis(const F2Mat &m) {
    auto e = detail::rref(m);
    size_t n = m.n_cols();
    std::vector<bool> is_pivot(n, false);
    for (size_t p : e.pivots) {
        is_pivot[p] = true;
    }
    std::vector<F2Vec> basis;
    for (size_t f = 0; f < n; f++) {
        if (is_pivot[f]) {
            continue;
        }
        F2Vec v(n);
        v.set(f, true);
        for (size_t i = 0; i < e.rows.size(); i++) {
            if (e.rows[i].get(f)) {
                v.set(e.pivots[i], true);
            }
        }
        basis.push_back(v);
    }
    return basis;
}

inline F2Vec syndrome(const F2Mat &m, const F2Vec &v) {
    if (v.size() != m.n_cols()) {
        throw DimensionError("syndrome: vector length " + std::to_string(v.size()) +
                             " != matrix width " + std::to_string(m.n_cols()));
    }
    F2Vec s(m.n_rows());
    for (size_t i = 0; i < m.n_rows(); i++) {
        s.set(i, m.row(i).dot(v));
    }
    return s;
}

// Some x with M x = s, or nothing when s is outside the column space.
inline std::optional<F2Vec> solve(const F2Mat &m, const F2Vec &s) {
    if (s.size() != m.n_rows()) {
        throw DimensionError("solve: right-hand side has wrong length");
    }
    // Augment each row with its target bit and eliminate.
    size_t n = m.n_cols();
    F2Mat aug(n + 1);
    for (size_t i = 0; i < m.n_rows(); i++) {
        F2Vec r(n + 1);
        for (size_t j = 0; j < n; j++) {
            r.set(j, m.row(i).get(j));
        }
        r.set(n, s.get(i));
        aug.push_row(r);
    }
    auto e = detail::rref(aug);
    F2Vec x(n);
    for (size_t i = 0; i < e.rows.size(); i++) {
        if (e.pivots[i] == n) {
            return std::nullopt;
        }
        x.set(e.pivots[i], e.rows[i].get(n));
    }
    return x;
}

inline F2Mat transpose(const F2Mat &m) {
    F2Mat t(m.n_rows());
    for (size_t j = 0; j < m.n_cols(); j++) {
        F2Vec v(m.n_rows());
        for (size_t i = 0; i < m.n_rows(); i++) {
            v.set(i, m.row(i).get(j));
        }
        t.push_row(v);
    }
    return t;
}

// Inverse of a square matrix, or nothing when it is singular.
inline std::optional<F2Mat> inverse(const F2Mat &m) {
    size_t n = m.n_cols();
    if (m.n_rows() != n) {
        throw DimensionError("inverse needs a square matrix");
    }
    std::vector<F2Vec> a = m.rows(), b = F2Mat::identity(n).rows();
    for (size_t c = 0; c < n; c++) {
        size_t p = c;
        while (p < n && !a[p].get(c)) {
            p++;
        }
        if (p == n) {
            return std::nullopt;
        }
        std::swap(a[c], a[p]);
        std::swap(b[c], b[p]);
        for (size_t i = 0; i < n; i++) {
            if (i != c && a[i].get(c)) {
                a[i] ^= a[c];
                b[i] ^= b[c];
            }
        }
    }
    return F2Mat(n, std::move(b));
}

// True when every row of a is GF(2)-orthogonal to every row of b.
inline bool orthogonal(const F2Mat &a, const F2Mat &b) {
    for (const auto &r : a.rows()) {
        for (const auto &s : b.rows()) {
            if (r.dot(s)) {
                return false;
            }
        }
    }
    return true;
}

inline F2Vec random_vec(size_t n, std::mt19937_64 &rng) {
    F2Vec v(n);
    for (size_t i = 0; i < n; i++) {
        v.set(i, (rng() >> 17) & 1);
    }
    return v;
}

// Random CSS hash pair: n_Z independent rows, then n_X independent rows drawn
// uniformly from the kernel of the first block. Rows are drawn one at a time
// by rejection, so a smaller n_Z under the same seed yields a prefix of the
// larger matrix when n_X = 0.
inline std::pair<F2Mat, F2Mat> sample_css_hash(size_t n, size_t n_z, size_t n_x, uint64_t seed) {
    if (n_z + n_x > n) {
        throw ConstructionError("n_Z + n_X = " + std::to_string(n_z + n_x) + " exceeds n = " +
                                std::to_string(n));
    }
    std::mt19937_64 rng(seed);
    constexpr int max_restarts = 64;
    constexpr int max_draws = 4096;
    for (int attempt = 0; attempt < max_restarts; attempt++) {
        F2Mat hz(n), hx(n);
        EchelonBasis ez(n), ex(n);
        bool dead = false;
        for (size_t i = 0; i < n_z && !dead; i++) {
            int d = 0;
            for (; d < max_draws; d++) {
                F2Vec v = random_vec(n, rng);
                if (ez.insert(v)) {
                    hz.push_row(v);
                    break;
                }
            }
            dead = d == max_draws;
        }
        auto ker = kernel_basis(hz);
        for (size_t i = 0; i < n_x && !dead; i++) {
            int d = 0;
            for (; d < max_draws; d++) {
                F2Vec v(n);
                for (const auto &k : ker) {
                    if ((rng() >> 17) & 1) {
                        v ^= k;
                    }
                }
                if (ex.insert(v)) {
                    hx.push_row(v);
                    break;
                }
            }
            dead = d == max_draws;
        }
        if (!dead) {
            return {hz, hx};
        }
    }
    throw ConstructionError("sample_css_hash: no valid completion found");
}

struct UniversalityResult {
    double estimate = 0.0;
    double sigma = 0.0;  // binomial standard error of the estimate
    double bound = 0.0;  // 2^-m
    uint64_t trials = 0;
    uint64_t collisions = 0;
};

// Empirical Pr[f(x) = f(y)] for uniformly random linear f: F2^n -> F2^m
// (rank unconstrained) and uniformly random distinct x, y.
inline UniversalityResult universality_probe(size_t n, size_t m, uint64_t trials, uint64_t seed) {
    if (m > n) {
        throw InputError("universality_probe: m must not exceed n");
    }
    if (trials < 1) {
        throw InputError("universality_probe: trials must be positive");
    }
    if (n < 1) {
        throw InputError("universality_probe: need n >= 1 for distinct inputs");
    }
    std::mt19937_64 rng(seed);
    UniversalityResult r;
    r.trials = trials;
    r.bound = std::ldexp(1.0, -int(m));
    for (uint64_t t = 0; t < trials; t++) {
        F2Mat f(n);
        for (size_t i = 0; i < m; i++) {
            f.push_row(random_vec(n, rng));
        }
        F2Vec x = random_vec(n, rng);
        F2Vec y = random_vec(n, rng);
        while (y == x) {
            y = random_vec(n, rng);
        }
        if (syndrome(f, x) == syndrome(f, y)) {
            r.collisions++;
        }
    }
    r.estimate = double(r.collisions) / double(trials);
    r.sigma = std::sqrt(std::max(r.estimate * (1.0 - r.estimate), r.bound * (1.0 - r.bound)) /
                        double(trials));
    return r;
}

}  // namespace qcomp
