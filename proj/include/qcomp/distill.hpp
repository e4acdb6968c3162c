#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "qcomp/errors.hpp"
#include "qcomp/gf2.hpp"
#include "qcomp/pauli.hpp"
#include "qcomp/qstate.hpp"

namespace qcomp {

inline double h2(double p) {
    if (p <= 0 || p >= 1) {
        return 0;
    }
    return -p * std::log2(p) - (1 - p) * std::log2(1 - p);
}

inline double shannon(const std::vector<double> &p) {
    double h = 0;
    for (double v : p) {
        if (v > 0) {
            h -= v * std::log2(v);
        }
    }
    return h;
}

// Independent stream for one Monte-Carlo trial, so results do not depend on
// how trials are scheduled across threads.
inline std::mt19937_64 trial_rng(uint64_t seed, uint64_t trial) {
    std::seed_seq seq{uint32_t(seed), uint32_t(seed >> 32), uint32_t(trial), uint32_t(trial >> 32)};
    return std::mt19937_64(seq);
}

// Counts the trials for which `fail(t)` holds, splitting the range over up to
// `threads` workers (0 picks the hardware count).
inline uint64_t count_failures(uint64_t trials, const std::function<bool(uint64_t)> &fail, unsigned threads = 0) {
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = unsigned(std::min<uint64_t>(threads, std::max<uint64_t>(trials, 1)));
    std::atomic<uint64_t> failures{0};
    std::atomic<uint64_t> next{0};
    auto worker = [&] {
        uint64_t local = 0;
        for (uint64_t t; (t = next.fetch_add(1)) < trials;) {
            local += fail(t) ? 1 : 0;
        }
        failures += local;
    };
    if (threads == 1) {
        worker();
        return failures;
    }
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex mu;
    for (unsigned i = 0; i < threads; i++) {
        pool.emplace_back([&] {
            try {
                worker();
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                err = std::current_exception();
                next = trials;
            }
        });
    }
    for (auto &t : pool) {
        t.join();
    }
    if (err) {
        std::rethrow_exception(err);
    }
    return failures;
}

// Bell-diagonal two-qubit state with weights p_jk on beta_jk, systems a, b.
inline DensityMatrix bell_diagonal_state(const BellDiagonalParams &p, const std::string &a = "A",
                                         const std::string &b = "B") {
    p.validate();
    Mat rho = Mat::Zero(4, 4);
    for (int j = 0; j < 2; j++) {
        for (int k = 0; k < 2; k++) {
            rho += p.p(j, k) * projector(bell_state(j, k).amps);
        }
    }
    return DensityMatrix({{a, 2}, {b, 2}}, rho);
}

// -H(A|B), the one-way hashing rate.
inline double hashing_rate(const DensityMatrix &rho, const std::string &a = "A", const std::string &b = "B") {
    return -cond_entropy(rho, {a}, {b});
}

struct DistillationRun {
    BellDiagonalParams p;
    size_t n = 0, n_z = 0, n_x = 0;
    uint64_t trials = 0, seed = 0, failures = 0;
    double logical_error_rate = 0;
    double rate = 0;  // (n - n_Z - n_X) / n
    double wall_seconds = 0;
};

// Check counts that spend `n - round(rate n)` checks, split between amplitude
// and phase in proportion to H(J) and H(K|J).
inline std::pair<size_t, size_t> split_checks(const BellDiagonalParams &p, size_t n, double rate) {
    p.validate();
    long keep = std::lround(rate * double(n));
    if (keep < 0 || size_t(keep) > n) {
        throw InputError("rate must lie in [0, 1]");
    }
    size_t total = n - size_t(keep);
    double hj = h2(p.p_amp(1));
    double hjk = shannon({p.p00, p.p01, p.p10, p.p11});
    size_t nx = hjk > 0 ? size_t(std::lround(double(total) * (hjk - hj) / hjk)) : 0;
    return {total - nx, nx};
}

// Samples one Bell-diagonal Pauli error per pair: bit j into x, bit k into z.
inline PauliOp sample_bell_error(const BellDiagonalParams &p, size_t n, std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> u(0, 1);
    F2Vec x(n), z(n);
    for (size_t i = 0; i < n; i++) {
        double r = u(rng);
        int jk = r < p.p00 ? 0 : r < p.p00 + p.p01 ? 1 : r < p.p00 + p.p01 + p.p10 ? 2 : 3;
        x.set(i, jk >> 1);
        z.set(i, jk & 1);
    }
    return PauliOp(x, z);
}

// Decodes amplitude errors from s_z, then phase errors from s_x with weights
// conditioned on the decoded amplitude pattern.
inline PauliOp decode_sequential(const F2Mat &hz, const F2Mat &hx, const F2Vec &s_z, const F2Vec &s_x,
                                 const BellDiagonalParams &p) {
    size_t n = hz.n_cols();
    auto nlog = [](double v) { return -std::log(std::max(v, 1e-300)); };
    std::vector<std::array<double, 2>> cost(n, {nlog(p.p_amp(0)), nlog(p.p_amp(1))});
    F2Vec x = decode_coset(hz, s_z, cost);
    for (size_t b = 0; b < n; b++) {
        int j = x.get(b);
        double pa = p.p_amp(j);
        for (int k = 0; k < 2; k++) {
            cost[b][size_t(k)] = pa > 0 ? nlog(p.p(j, k) / pa) : 0.0;
        }
    }
    return PauliOp(x, decode_coset(hx, s_x, cost));
}

// Hashing-protocol Monte Carlo. Each trial draws a fresh CSS hash and error
// string; a trial fails when the residual error is not a stabilizer.
inline DistillationRun simulate_distillation(const BellDiagonalParams &p, size_t n, size_t n_z, size_t n_x,
                                             uint64_t trials, uint64_t seed, unsigned threads = 0) {
    p.validate();
    if (n > 20) {
        throw CapabilityError("simulate_distillation decodes exactly and supports n <= 20");
    }
    if (n == 0 || n_z + n_x >= n) {
        throw InputError("need n_Z + n_X < n");
    }
    if (trials == 0) {
        throw InputError("trials must be positive");
    }
    auto start = std::chrono::steady_clock::now();
    DistillationRun run{p, n, n_z, n_x, trials, seed, 0, 0, double(n - n_z - n_x) / double(n), 0};
    run.failures = count_failures(
        trials,
        [&](uint64_t t) {
            auto rng = trial_rng(seed, t);
            auto [hz, hx] = sample_css_hash(n, n_z, n_x, rng());
            PauliOp e = sample_bell_error(p, n, rng);
            PauliOp d = decode_sequential(hz, hx, syndrome(hz, e.x()), syndrome(hx, e.z()), p);
            return !(in_rowspace(hx, e.x() ^ d.x()) && in_rowspace(hz, e.z() ^ d.z()));
        },
        threads);
    run.logical_error_rate = double(run.failures) / double(trials);
    run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return run;
}

// Appends one line per run; writes the header when the file is new or empty.
inline void append_run_csv(const std::string &path, const DistillationRun &r) {
    bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    std::ofstream out(path, std::ios::app);
    if (!out) {
        throw InputError("cannot open log file '" + path + "'");
    }
    out.imbue(std::locale::classic());
    out.precision(12);
    if (fresh) {
        out << "p00,p01,p10,p11,n,n_z,n_x,trials,seed,failures,logical_error_rate,rate,wall_seconds\n";
    }
    out << r.p.p00 << ',' << r.p.p01 << ',' << r.p.p10 << ',' << r.p.p11 << ',' << r.n << ',' << r.n_z << ','
        << r.n_x << ',' << r.trials << ',' << r.seed << ',' << r.failures << ',' << r.logical_error_rate << ','
        << r.rate << ',' << r.wall_seconds << '\n';
}

struct MergingRates {
    double q_cost = 0;        // H(A|B)
    double c_cost = 0;        // I(A:E) on a purification
    double distill_rate = 0;  // -H(A|B)
};

inline MergingRates merging_rates(const DensityMatrix &rho, const std::string &a = "A",
                                  const std::string &b = "B") {
    DensityMatrix ab = partial_trace(rho, {a, b});
    auto names = label_names(ab.labels);
    std::string e = "E";
    while (std::find(names.begin(), names.end(), e) != names.end()) {
        e += "'";
    }
    StateVector psi = purify(ab, e);
    MergingRates r;
    r.q_cost = cond_entropy(psi, {a}, {b});
    r.c_cost = mutual_info(psi, {a}, {e});
    r.distill_rate = -r.q_cost;
    return r;
}

// Coherent information H(B) - H(E) after the isometry v: a -> (b, e) acts on
// one half of psi.
inline double coherent_information(const StateVector &psi, const std::string &a, const Mat &v,
                                   const Labels &b_e) {
    if (b_e.size() != 2) {
        throw LabelError("the channel output must be exactly two systems (B, E)");
    }
    StateVector out = apply_op(psi, v, {a}, b_e);
    return entropy(out, {b_e[0].name}) - entropy(out, {b_e[1].name});
}

struct ReconcileResult {
    size_t n = 0, n_z = 0;
    uint64_t trials = 0, seed = 0;
    double error = 0;  // mean PGM failure probability on the true string
};

// Information reconciliation on n i.i.d. copies of a binary ensemble
// {(p_z, phi_z)} on B. Each trial draws a string z and n_Z independent hash
// rows (in that order, so a smaller n_Z uses a prefix of the same rows), then
// evaluates the exact success probability of the pretty-good measurement
// over the strings consistent with the hash.
inline ReconcileResult reconcile(const std::vector<std::pair<double, Mat>> &ensemble, size_t n, size_t n_z,
                                 uint64_t trials, uint64_t seed) {
    if (ensemble.size() != 2) {
        throw InputError("reconcile hashes bits and needs a binary ensemble");
    }
    long d = ensemble[0].second.rows();
    if (ensemble[1].second.rows() != d || d < 1) {
        throw DimensionError("ensemble states must share one space");
    }
    double total = ensemble[0].first + ensemble[1].first;
    if (std::abs(total - 1) > 1e-9 || ensemble[0].first < 0 || ensemble[1].first < 0) {
        throw InputError("ensemble weights must be a distribution");
    }
    if (n == 0 || n_z > n || n > 20) {
        throw InputError("need 0 < n <= 20 and n_Z <= n");
    }
    double dim = std::pow(double(d), double(n));
    if (dim > 1024) {
        throw CapabilityError("B^n exceeds 1024 dimensions");
    }
    std::array<Mat, 2> rho;
    for (int z = 0; z < 2; z++) {
        double t = ensemble[size_t(z)].second.trace().real();
        if (t <= 0) {
            throw InputError("ensemble states need positive trace");
        }
        rho[size_t(z)] = ensemble[size_t(z)].second / t;
    }
    // Commuting diagonal ensembles are handled as probability vectors.
    bool diagonal = true;
    for (const auto &r : rho) {
        diagonal = diagonal && (r - Mat(r.diagonal().asDiagonal())).norm() < 1e-14;
    }
    if (diagonal) {
        for (auto &r : rho) {
            r = Mat(r.diagonal());
        }
    }
    long cols = diagonal ? 1 : long(dim);
    auto state = [&](uint64_t m) {
        Mat r = rho[m & 1];
        for (size_t i = 1; i < n; i++) {
            r = kron(r, rho[(m >> i) & 1]);
        }
        return r;
    };
    auto prior = [&](uint64_t m) {
        double q = 1;
        for (size_t i = 0; i < n; i++) {
            q *= ensemble[(m >> i) & 1].first;
        }
        return q;
    };
    // Sum of p_z rho_z over {z : H z = s}: direct enumeration of the coset,
    // or the character expansion 2^-r Sum_u (-1)^{u.s} (x)_i (p_0 rho_0 +
    // (-1)^{(H^T u)_i} p_1 rho_1), whichever has fewer terms.
    auto candidate_sum = [&](const F2Mat &h, const F2Vec &s) {
        auto kern = kernel_basis(h);
        size_t r = h.n_rows();
        Mat avg = Mat::Zero(long(dim), cols);
        if (kern.size() <= r) {
            uint64_t cur = solve(h, s)->mask();
            for (uint64_t g = 0; g < (uint64_t{1} << kern.size()); g++) {
                if (g) {
                    cur ^= kern[size_t(__builtin_ctzll(g))].mask();
                }
                avg += prior(cur) * state(cur);
            }
            return avg;
        }
        std::array<Mat, 2> mix = {ensemble[0].first * rho[0] + ensemble[1].first * rho[1],
                                  ensemble[0].first * rho[0] - ensemble[1].first * rho[1]};
        for (uint64_t u = 0; u < (uint64_t{1} << r); u++) {
            F2Vec col(n);
            int sign = 0;
            for (size_t i = 0; i < r; i++) {
                if ((u >> i) & 1) {
                    col ^= h.row(i);
                    sign ^= int(s.get(i));
                }
            }
            Mat term = mix[col.get(0)];
            for (size_t i = 1; i < n; i++) {
                term = kron(term, mix[col.get(i)]);
            }
            avg += (sign ? -1.0 : 1.0) * term;
        }
        return Mat(avg / std::ldexp(1.0, int(r)));
    };
    ReconcileResult res{n, n_z, trials, seed, 0};
    double err = 0;
    for (uint64_t t = 0; t < trials; t++) {
        auto rng = trial_rng(seed, t);
        std::uniform_real_distribution<double> u(0, 1);
        uint64_t zm = 0;
        for (size_t i = 0; i < n; i++) {
            if (u(rng) >= ensemble[0].first) {
                zm |= uint64_t{1} << i;
            }
        }
        F2Mat h(n);
        EchelonBasis span(n);
        while (h.n_rows() < n_z) {
            F2Vec row = random_vec(n, rng);
            if (span.insert(row)) {
                h.push_row(row);
            }
        }
        F2Vec z = F2Vec::from_mask(n, zm);
        Mat avg = candidate_sum(h, syndrome(h, z));
        Mat rz = state(zm);
        double success = 0;
        if (diagonal) {
            double cut = kEigCutoff * avg.real().maxCoeff();
            for (long i = 0; i < avg.rows(); i++) {
                if (avg(i, 0).real() > cut) {
                    success += std::norm(rz(i, 0)) / avg(i, 0).real();
                }
            }
            success *= prior(zm);
        } else {
            Mat s = inv_sqrt_psd(avg);
            success = prior(zm) * (s * rz * s * rz).trace().real();
        }
        err += 1 - std::min(1.0, success);
    }
    res.error = err / double(trials);
    return res;
}

struct PrivacyResult {
    size_t n = 0, out_bits = 0;
    double p_secure = 1;
};

// Hashes the classical string a of a CQ state Sum_a |a><a| (x) sigma_a to
// H a and returns p_secure of the result given E. `sub[m]` is the
// subnormalized E state for the string with bit i = (m >> i) & 1.
inline PrivacyResult privacy_amplify(const std::vector<Mat> &sub, const F2Mat &h) {
    size_t n = h.n_cols();
    if (n > 20 || sub.size() != (size_t{1} << n)) {
        throw DimensionError("privacy_amplify needs 2^n E states for n <= 20 input bits");
    }
    PrivacyResult r{n, h.n_rows(), 1};
    if (h.n_rows() == 0) {
        return r;
    }
    if (h.n_rows() > 16) {
        throw CapabilityError("at most 16 output bits");
    }
    std::vector<Mat> out(size_t{1} << h.n_rows(), Mat::Zero(sub[0].rows(), sub[0].cols()));
    for (uint64_t m = 0; m < sub.size(); m++) {
        out[syndrome(h, F2Vec::from_mask(n, m)).mask()] += sub[m];
    }
    r.p_secure = p_secure_from(out);
    return r;
}

// Product form: bit i drawn from {(p_0, sigma_0), (p_1, sigma_1)} with its own
// copy of E, so the E states are tensor products.
inline PrivacyResult privacy_amplify_iid(const std::array<std::pair<double, Mat>, 2> &single, const F2Mat &h) {
    size_t n = h.n_cols();
    double dim = std::pow(double(single[0].second.rows()), double(n));
    if (dim > 4096 || n > 20) {
        throw CapabilityError("E^n exceeds 4096 dimensions");
    }
    std::vector<Mat> sub(size_t{1} << n);
    for (uint64_t m = 0; m < sub.size(); m++) {
        Mat r = Mat::Ones(1, 1);
        for (size_t i = 0; i < n; i++) {
            const auto &[p, s] = single[(m >> i) & 1];
            r = kron(r, p * s);
        }
        sub[m] = r;
    }
    return privacy_amplify(sub, h);
}

struct DualityReport {
    double ir_error = 0;        // 1 - p_guess(Z^A | B, H_Z Z^A) under the PGM
    double phase_security = 0;  // p_secure of the phase logicals given E
    double bound = 0;           // 1 - sqrt(2 ir_error)
    bool bound_holds = false;
};

namespace detail {

// Merges the qubits `a` into one system "A" (first qubit most significant)
// and the given side systems into "B" and "E".
inline StateVector merge_abe(const StateVector &psi, const std::vector<std::string> &a,
                             const std::vector<std::string> &b, const std::vector<std::string> &e) {
    for (const auto &q : a) {
        if (psi.labels[label_index(psi.labels, q)].dim != 2) {
            throw DimensionError("system '" + q + "' must be a qubit");
        }
    }
    auto order = concat(concat(a, b), e);
    if (order.size() != psi.labels.size()) {
        throw LabelError("A, B and E must cover every system exactly once");
    }
    StateVector r = reorder(psi, order);
    r.labels = {{"A", size_t(1) << a.size()}, {"B", dim_of(psi.labels, b)}, {"E", dim_of(psi.labels, e)}};
    return r;
}

// Bit string for basis index idx of n qubits, first qubit most significant.
inline F2Vec index_bits(size_t n, uint64_t idx) {
    F2Vec v(n);
    for (size_t i = 0; i < n; i++) {
        v.set(i, (idx >> (n - 1 - i)) & 1);
    }
    return v;
}

}  // namespace detail

// Checks that reconciling Z^A to B with hash H_Z leaves the conjugate phase
// logicals (X-strings in ker H_Z) secret from E: p_secure >= 1 - sqrt(2 eps).
// B or E may be empty.
inline DualityReport duality_check(const StateVector &psi, const std::vector<std::string> &a,
                                   const std::vector<std::string> &b, const std::vector<std::string> &e,
                                   const F2Mat &hz) {
    size_t n = a.size();
    if (n == 0 || n > 6) {
        throw CapabilityError("duality_check supports 1..6 qubits in A");
    }
    if (hz.n_cols() != n) {
        throw DimensionError("hash width must match the number of A qubits");
    }
    StateVector ket = psi;
    auto add_trivial = [&](std::vector<std::string> sys, const std::string &name) {
        if (sys.empty()) {
            ket = tensor(ket, basis_state({{name + "#", 2}}, 0));
            sys.push_back(name + "#");
        }
        return sys;
    };
    auto bs = add_trivial(b, "B");
    auto es = add_trivial(e, "E");
    StateVector m = detail::merge_abe(ket, a, bs, es);

    size_t big = size_t(1) << n;
    Mat hadamard = x_basis(2);
    Mat xb = Mat::Ones(1, 1);
    for (size_t i = 0; i < n; i++) {
        xb = kron(xb, hadamard);
    }
    auto phi_b = conditional_states(m, "A", z_basis(big), {"B"});
    auto phi_e = conditional_states(m, "A", xb, {"E"});

    // Bob guesses z among the strings sharing its syndrome.
    std::map<uint64_t, std::vector<size_t>> by_syndrome;
    for (size_t z = 0; z < big; z++) {
        by_syndrome[syndrome(hz, detail::index_bits(n, z)).mask()].push_back(z);
    }
    double success = 0;
    for (const auto &[s, members] : by_syndrome) {
        std::vector<Mat> sub;
        for (size_t z : members) {
            sub.push_back(phi_b[z]);
        }
        success += guess_success(sub, pgm_substates(sub));
    }

    // Phase logicals: x -> (v . x) for v spanning ker H_Z.
    auto ker = kernel_basis(hz);
    std::vector<Mat> phase(size_t(1) << ker.size(), Mat::Zero(phi_e[0].rows(), phi_e[0].cols()));
    for (size_t x = 0; x < big; x++) {
        F2Vec xv = detail::index_bits(n, x);
        size_t k = 0;
        for (size_t i = 0; i < ker.size(); i++) {
            k |= size_t(ker[i].dot(xv)) << i;
        }
        phase[k] += phi_e[x];
    }
    DualityReport r;
    r.ir_error = std::max(0.0, 1 - success);
    r.phase_security = ker.empty() ? 1.0 : p_secure_from(phase);
    r.bound = 1 - std::sqrt(2 * r.ir_error);
    r.bound_holds = r.phase_security >= r.bound - 1e-8;
    return r;
}

struct ChannelCodeResult {
    double p_flip = 0;
    size_t n = 0, n_syndrome = 0;
    uint64_t trials = 0, seed = 0, failures = 0;
    double rate = 0;  // (n - n_syndrome) / n
    double block_error = 0;
};

// Channel code built from a reconciliation hash: the codewords are the
// strings with syndrome 0 under one random full-rank hash. Messages are
// sent over a binary symmetric channel and decoded by exact ML over the
// received coset.
inline ChannelCodeResult channel_code_from_ir(double p_flip, size_t n, size_t n_syndrome, uint64_t trials,
                                              uint64_t seed) {
    if (!(p_flip >= 0 && p_flip <= 0.5)) {
        throw InputError("flip probability must lie in [0, 1/2]");
    }
    if (n == 0 || n > 20 || n_syndrome > n) {
        throw InputError("need 0 < n <= 20 and n_syndrome <= n");
    }
    if (trials == 0) {
        throw InputError("trials must be positive");
    }
    F2Mat h = sample_css_hash(n, n_syndrome, 0, seed).first;
    auto basis = kernel_basis(h);
    auto nlog = [](double v) { return -std::log(std::max(v, 1e-300)); };
    std::vector<std::array<double, 2>> cost(n, {nlog(1 - p_flip), nlog(p_flip)});
    ChannelCodeResult r{p_flip, n, n_syndrome, trials, seed, 0, double(n - n_syndrome) / double(n), 0};
    r.failures = count_failures(trials, [&](uint64_t t) {
        auto rng = trial_rng(seed, t + 1);
        std::uniform_real_distribution<double> u(0, 1);
        F2Vec c(n), e(n);
        for (const auto &v : basis) {
            if (rng() & 1) {
                c ^= v;
            }
        }
        for (size_t i = 0; i < n; i++) {
            e.set(i, u(rng) < p_flip);
        }
        F2Vec y = c ^ e;
        F2Vec guess = y ^ decode_coset(h, syndrome(h, y), cost);
        return !(guess == c);
    });
    r.block_error = double(r.failures) / double(trials);
    return r;
}

}  // namespace qcomp
