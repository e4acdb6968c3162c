// qcomp: command-line frontend. Every run prints (or writes with --out) one
// report carrying the tool version, seed and resolved parameters.

#include <chrono>
#include <cmath>
#include <ctime>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qcomp/distill.hpp"
#include "qcomp/io.hpp"
#include "qcomp/pauli.hpp"
#include "qcomp/qkdrate.hpp"
#include "qcomp/uncert.hpp"
#include "qcomp/version.hpp"

using namespace qcomp;

namespace {

constexpr int kExitBadInput = 2;
constexpr int kExitCapability = 3;
constexpr int kExitSolver = 4;
// Uncertainty sweeps exit with this code when any slack is negative.
constexpr int kExitViolation = 1;

struct Common {
    std::string format = "json";
    uint64_t seed = 1;
    std::string out;
    bool no_timestamp = false;
};

struct Report {
    std::string command;
    json parameters = json::object();
    json result = json::object();
    CsvTable table{{}};
    double wall_seconds = 0;
    int exit_code = 0;
};

std::string utc_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string render(const Common &c, const Report &r) {
    if (c.format == "csv") {
        std::string s = "# qcomp " + std::string(kVersion) + "\n# command: " + r.command +
                        "\n# seed: " + std::to_string(c.seed) + "\n# parameters: " + r.parameters.dump() + "\n";
        if (!c.no_timestamp) {
            s += "# timestamp: " + utc_now() + "\n# wall_seconds: " + format_number(r.wall_seconds) + "\n";
        }
        return s + r.table.str();
    }
    json j = {{"tool", "qcomp"},       {"version", kVersion},    {"command", r.command},
              {"seed", c.seed},        {"parameters", r.parameters}, {"result", r.result}};
    if (!c.no_timestamp) {
        j["timestamp"] = utc_now();
        j["wall_seconds"] = r.wall_seconds;
    }
    return j.dump(2) + "\n";
}

BellDiagonalParams bell_from(const std::vector<double> &v) {
    if (v.size() != 4) {
        throw InputError("Bell-diagonal parameters need four values p00,p01,p10,p11");
    }
    BellDiagonalParams p{v[0], v[1], v[2], v[3]};
    p.validate();
    return p;
}

json bell_json(const BellDiagonalParams &p) { return json::array({p.p00, p.p01, p.p10, p.p11}); }

CssCode code_named(const std::string &name) {
    if (name == "rep3") {
        return repetition3();
    }
    if (name == "shor9") {
        return shor9();
    }
    throw InputError("unknown code '" + name + "' (expected rep3 or shor9)");
}

// Single-qubit errors the code can see: bit flips when there are amplitude
// checks, phase flips when there are phase checks, and both together.
std::vector<std::pair<std::string, size_t>> detectable_single_errors(const CssCode &c) {
    std::vector<char> kinds;
    if (c.hz.n_rows()) {
        kinds.push_back('X');
    }
    if (c.hx.n_rows()) {
        kinds.push_back('Z');
    }
    if (c.hz.n_rows() && c.hx.n_rows()) {
        kinds.push_back('Y');
    }
    std::vector<std::pair<std::string, size_t>> out;
    for (char k : kinds) {
        for (size_t i = 0; i < c.n; i++) {
            std::string s(c.n, 'I');
            s[i] = k;
            out.emplace_back(s, i + 1);
        }
    }
    return out;
}

Report cmd_codes_table(const std::string &name) {
    CssCode c = code_named(name);
    Report r{"codes table"};
    r.parameters = {{"code", name}};
    bool classical = c.hx.n_rows() == 0;
    r.table = classical ? CsvTable({"error", "bits0", "bits1", "position", "s_z"})
                        : CsvTable({"error", "position", "s_z", "s_x"});
    json rows = json::array();
    auto errors = detectable_single_errors(c);
    errors.insert(errors.begin(), {std::string(c.n, 'I'), 0});
    for (const auto &[s, pos] : errors) {
        PauliOp e = PauliOp::from_string(s);
        auto [sz, sx] = syndromes_of(c, e);
        std::string where = pos ? std::to_string(pos) : "none";
        json row = {{"error", s}, {"position", pos}, {"s_z", sz.str()}, {"s_x", sx.str()}};
        if (classical) {
            std::string b0 = e.x().str(), b1 = (e.x() ^ c.logicals[0].second.x()).str();
            row["bits"] = {b0, b1};
            r.table.add_row({s, b0, b1, where, sz.str()});
        } else {
            r.table.add_row({s, where, sz.str(), sx.str()});
        }
        rows.push_back(row);
    }
    json virt = json::array();
    for (const auto &[z, x] : virtual_basis(c).pairs) {
        virt.push_back({{"amplitude", z.letters()}, {"phase", x.letters()}});
    }
    r.result = {{"code", name}, {"n", c.n}, {"syndromes", rows}, {"virtual_qubits", virt}};
    return r;
}

Report cmd_codes_decode(const std::string &name, const std::vector<double> &noise_v) {
    CssCode c = code_named(name);
    BellDiagonalParams noise = bell_from(noise_v);
    Report r{"codes decode-demo"};
    r.parameters = {{"code", name}, {"noise", bell_json(noise)}};
    r.table = CsvTable({"error", "s_z", "s_x", "correction", "corrected"});
    json rows = json::array();
    std::vector<PauliOp> errs;
    size_t corrected = 0;
    for (size_t i = 0; i < c.n; i++) {
        for (char k : {'X', 'Y', 'Z'}) {
            std::string s(c.n, 'I');
            s[i] = k;
            PauliOp e = PauliOp::from_string(s);
            auto [sz, sx] = syndromes_of(c, e);
            PauliOp fix = decode_ml(c, sz, sx, noise);
            bool ok = same_logical_class(c, fix, e);
            corrected += ok;
            errs.push_back(e);
            rows.push_back({{"error", s}, {"s_z", sz.str()}, {"s_x", sx.str()}, {"correction", fix.letters()},
                            {"corrected", ok}});
            r.table.add_row({s, sz.str(), sx.str(), fix.letters(), ok ? "1" : "0"});
        }
    }
    // Errors that differ by a stabilizer need the same correction.
    json classes = json::array();
    std::vector<bool> used(errs.size());
    for (size_t i = 0; i < errs.size(); i++) {
        if (used[i]) {
            continue;
        }
        json cls = json::array({errs[i].letters()});
        for (size_t j = i + 1; j < errs.size(); j++) {
            if (!used[j] && same_logical_class(c, errs[i], errs[j])) {
                used[j] = true;
                cls.push_back(errs[j].letters());
            }
        }
        if (cls.size() > 1) {
            classes.push_back(cls);
        }
    }
    r.result = {{"code", name},      {"errors", rows},      {"corrected", corrected},
                {"total", errs.size()}, {"degenerate_classes", classes}};
    return r;
}

Report cmd_uncertainty(const std::string &rel_name, const std::string &source, Common &common) {
    Relation rel = parse_relation(rel_name);
    Report r{"uncertainty " + rel_name};
    r.table = CsvTable({"id", "h1", "h2", "h_cond", "log_inv_c", "bound", "slack"});
    json rows = json::array();
    double min_slack = INFINITY;
    size_t violations = 0;
    auto record = [&](const std::string &id, const UncertaintyReport &u) {
        double lic = u.bound - u.h_cond;
        r.table.add_row({id, CsvTable::cell(u.h1), CsvTable::cell(u.h2), CsvTable::cell(u.h_cond),
                         CsvTable::cell(lic), CsvTable::cell(u.bound), CsvTable::cell(u.slack)});
        rows.push_back({{"id", id}, {"h1", u.h1}, {"h2", u.h2}, {"h_cond", u.h_cond}, {"log_inv_c", lic},
                        {"bound", u.bound}, {"slack", u.slack}});
        min_slack = std::min(min_slack, u.slack);
        violations += u.slack < -1e-9;
    };
    if (source.rfind("random:", 0) == 0) {
        size_t count = 0;
        uint64_t seed = 0;
        char tail = 0;
        if (std::sscanf(source.c_str(), "random:%zu:%lu%c", &count, &seed, &tail) != 2 || count == 0) {
            throw InputError("random source must look like random:N:seed");
        }
        common.seed = seed;
        std::mt19937_64 rng(seed);
        for (size_t i = 0; i < count; i++) {
            auto cs = random_uncertainty_case(rel, rng);
            record(std::to_string(i), check_relation(rel, cs.state, cs.obs));
        }
        r.parameters = {{"relation", rel_name}, {"source", "random"}, {"count", count}};
    } else {
        for (const auto &s : load_states(source)) {
            record(s.id, check_relation(rel, s.rho, zx_pair(s.rho.labels.at(0).dim)));
        }
        r.parameters = {{"relation", rel_name}, {"source", source}, {"observables", "zx"}};
    }
    r.result = {{"rows", rows}, {"min_slack", min_slack}, {"violations", violations}};
    r.exit_code = violations ? kExitViolation : 0;
    return r;
}

// Default check counts: just above the entropy each decoding stage must
// resolve, n H(J) amplitude checks and n H(K|J) phase checks.
std::pair<size_t, size_t> default_checks(const BellDiagonalParams &p, size_t n) {
    double hj = h2(p.p10 + p.p11);
    double hkj = shannon({p.p00, p.p01, p.p10, p.p11}) - hj;
    auto count = [&](double h) { return h > 1e-12 ? size_t(std::ceil(double(n) * h - 1e-9)) + 1 : size_t(0); };
    return {count(hj), count(hkj)};
}

Report cmd_distill_sim(const std::vector<double> &pv, size_t n, uint64_t trials, int nz_opt, int nx_opt,
                       double rate_opt, unsigned threads, const std::string &log, const Common &common) {
    BellDiagonalParams p = bell_from(pv);
    size_t nz, nx;
    std::string rule;
    if (!std::isnan(rate_opt)) {
        if (nz_opt >= 0 || nx_opt >= 0) {
            throw InputError("give either --rate or --nz/--nx, not both");
        }
        std::tie(nz, nx) = split_checks(p, n, rate_opt);
        rule = "rate";
    } else {
        auto [dz, dx] = default_checks(p, n);
        nz = nz_opt >= 0 ? size_t(nz_opt) : dz;
        nx = nx_opt >= 0 ? size_t(nx_opt) : dx;
        rule = nz_opt >= 0 && nx_opt >= 0 ? "explicit" : "entropy";
    }
    DistillationRun run = simulate_distillation(p, n, nz, nx, trials, common.seed, threads);
    if (!log.empty()) {
        append_run_csv(log, run);
    }
    Report r{"distill sim"};
    r.parameters = {{"p", bell_json(p)}, {"n", n},         {"n_z", nz},          {"n_x", nx},
                    {"trials", trials},   {"check_rule", rule}};
    if (!std::isnan(rate_opt)) {
        r.parameters["rate"] = rate_opt;
    }
    double hashing = 1 - shannon({p.p00, p.p01, p.p10, p.p11});
    r.result = {{"failures", run.failures},
                {"logical_error_rate", run.logical_error_rate},
                {"rate", run.rate},
                {"hashing_rate", hashing}};
    r.table = CsvTable({"p00", "p01", "p10", "p11", "n", "n_z", "n_x", "trials", "seed", "failures",
                        "logical_error_rate", "rate", "hashing_rate"});
    r.table.add_row({CsvTable::cell(p.p00), CsvTable::cell(p.p01), CsvTable::cell(p.p10), CsvTable::cell(p.p11),
                     CsvTable::cell(n), CsvTable::cell(nz), CsvTable::cell(nx), CsvTable::cell(size_t(trials)),
                     CsvTable::cell(size_t(common.seed)), CsvTable::cell(size_t(run.failures)),
                     CsvTable::cell(run.logical_error_rate), CsvTable::cell(run.rate), CsvTable::cell(hashing)});
    return r;
}

Report cmd_distill_channel(double p_flip, size_t n, uint64_t trials, int ns_opt, double gap, const Common &common) {
    double capacity = 1 - h2(p_flip);
    size_t ns;
    if (ns_opt >= 0) {
        if (!std::isnan(gap)) {
            throw InputError("give either --gap or --n-syndrome, not both");
        }
        ns = size_t(ns_opt);
    } else {
        if (std::isnan(gap)) {
            throw InputError("one of --gap or --n-syndrome is required");
        }
        double target = capacity - gap;
        if (!(target > 0 && target < 1)) {
            throw InputError("capacity minus gap must lie in (0, 1)");
        }
        ns = size_t(std::ceil(double(n) * (1 - target) - 1e-9));
    }
    ChannelCodeResult c = channel_code_from_ir(p_flip, n, ns, trials, common.seed);
    Report r{"distill channel"};
    r.parameters = {{"p_flip", p_flip}, {"n", n}, {"n_syndrome", ns}, {"trials", trials}};
    if (!std::isnan(gap)) {
        r.parameters["gap"] = gap;
    }
    r.result = {{"capacity", capacity}, {"rate", c.rate}, {"failures", c.failures}, {"block_error", c.block_error}};
    r.table = CsvTable({"p_flip", "n", "n_syndrome", "trials", "seed", "capacity", "rate", "failures", "block_error"});
    r.table.add_row({CsvTable::cell(p_flip), CsvTable::cell(n), CsvTable::cell(ns), CsvTable::cell(size_t(trials)),
                     CsvTable::cell(size_t(common.seed)), CsvTable::cell(capacity), CsvTable::cell(c.rate),
                     CsvTable::cell(size_t(c.failures)), CsvTable::cell(c.block_error)});
    return r;
}

Report cmd_distill_hashing(const std::vector<double> &pv) {
    BellDiagonalParams p = bell_from(pv);
    DensityMatrix rho = bell_diagonal_state(p);
    MergingRates m = merging_rates(rho);
    Report r{"distill hashing"};
    r.parameters = {{"p", bell_json(p)}};
    r.result = {{"hashing_rate", hashing_rate(rho)}, {"q_cost", m.q_cost}, {"c_cost", m.c_cost}};
    r.table = CsvTable({"hashing_rate", "q_cost", "c_cost"});
    r.table.add_row({CsvTable::cell(hashing_rate(rho)), CsvTable::cell(m.q_cost), CsvTable::cell(m.c_cost)});
    return r;
}

Report cmd_qkd_rate(const std::string &proto, const std::vector<double> &deltas, double q, size_t m,
                    bool optimize_q) {
    Protocol p = parse_protocol(proto);
    if (deltas.empty()) {
        throw InputError("--delta needs at least one value");
    }
    Report r{"qkd rate"};
    r.parameters = {{"protocol", protocol_name(p)}, {"delta", deltas}, {"m", m}, {"optimize_q", optimize_q}};
    if (!optimize_q) {
        r.parameters["q"] = q;
    }
    r.table = CsvTable({"protocol", "delta", "q", "m", "rate"});
    json rows = json::array();
    for (double d : deltas) {
        double qq = q, rt;
        if (optimize_q) {
            auto o = optimize_preprocessing(p, d, m);
            qq = o.q;
            rt = o.rate;
        } else {
            rt = rate({p, q, m}, d);
        }
        rows.push_back({{"delta", d}, {"q", qq}, {"m", m}, {"rate", rt}});
        r.table.add_row({protocol_name(p), CsvTable::cell(d), CsvTable::cell(qq), CsvTable::cell(m),
                         CsvTable::cell(rt)});
    }
    r.result = {{"rows", rows}};
    return r;
}

json threshold_json(const ThresholdResult &t) {
    return {{"delta_star", t.delta_star}, {"q_used", t.q_used}, {"m_used", t.m_used},
            {"solver", {{"method", "bisection"}, {"evals", t.solver_evals}, {"lo", t.lo}, {"hi", t.hi}}}};
}

Report threshold_report(const std::string &cmd, Protocol p, const ThresholdResult &t, double tol) {
    Report r{cmd};
    r.result = threshold_json(t);
    r.table = CsvTable({"protocol", "q", "m", "delta_star", "lo", "hi", "solver_evals"});
    r.table.add_row({protocol_name(p), CsvTable::cell(t.q_used), CsvTable::cell(t.m_used),
                     CsvTable::cell(t.delta_star), CsvTable::cell(t.lo), CsvTable::cell(t.hi),
                     CsvTable::cell(t.solver_evals)});
    r.parameters = {{"protocol", protocol_name(p)}, {"m", t.m_used}, {"tol", tol}};
    return r;
}

Report cmd_qkd_threshold(const std::string &proto, double q, size_t m, double tol) {
    Protocol p = parse_protocol(proto);
    Report r = threshold_report("qkd threshold", p, threshold({p, q, m}, tol), tol);
    r.parameters["q"] = q;
    return r;
}

Report cmd_qkd_optimize(const std::string &proto, size_t m, double tol) {
    Protocol p = parse_protocol(proto);
    return threshold_report("qkd optimize", p, optimized_threshold(p, m, tol), tol);
}

int run(int argc, char **argv) {
    CLI::App app{"qcomp: stabilizer codes, entropic uncertainty, distillation and key-rate tools"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    app.add_option("--format", common.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--seed", common.seed, "Random seed (recorded in every report)");
    app.add_option("--out", common.out, "Write the report to this file instead of stdout");
    app.add_flag("--no-timestamp", common.no_timestamp, "Omit the timestamp and wall-clock fields");

    std::function<Report()> action;

    auto *codes = app.add_subcommand("codes", "Code tables and decoding demos");
    codes->require_subcommand(1);
    std::string code_name;
    std::vector<double> noise{0.97, 0.01, 0.01, 0.01};
    auto *table = codes->add_subcommand("table", "Syndrome table and virtual qubits");
    table->add_option("code", code_name, "rep3 or shor9")->required();
    table->callback([&] { action = [&] { return cmd_codes_table(code_name); }; });
    auto *demo = codes->add_subcommand("decode-demo", "Decode every single-qubit Pauli error");
    demo->add_option("code", code_name, "rep3 or shor9")->required();
    demo->add_option("--noise", noise, "Bell-diagonal decoder prior p00,p01,p10,p11")->delimiter(',');
    demo->callback([&] { action = [&] { return cmd_codes_decode(code_name, noise); }; });

    auto *unc = app.add_subcommand("uncertainty", "Check an entropic uncertainty relation on many states");
    std::string relation, source;
    unc->add_option("relation", relation, "mu, berta or tri")->required();
    unc->add_option("states", source, "State file or random:N:seed")->required();
    unc->callback([&] { action = [&] { return cmd_uncertainty(relation, source, common); }; });

    auto *dist = app.add_subcommand("distill", "Distillation and reconciliation simulations");
    dist->require_subcommand(1);
    std::vector<double> pv;
    size_t n = 15, n_ch = 18;
    uint64_t trials = 1000;
    int nz = -1, nx = -1, ns = -1;
    double rate_opt = NAN, gap = NAN, p_flip = 0.11;
    unsigned threads = 0;
    std::string log;
    auto *sim = dist->add_subcommand("sim", "Hashing-protocol Monte Carlo on Bell-diagonal pairs");
    sim->add_option("--p", pv, "p00,p01,p10,p11")->delimiter(',')->required();
    sim->add_option("--n", n, "Pairs per block");
    sim->add_option("--trials", trials, "Monte Carlo trials");
    sim->add_option("--nz", nz, "Amplitude checks");
    sim->add_option("--nx", nx, "Phase checks");
    sim->add_option("--rate", rate_opt, "Target yield; splits checks by entropy");
    sim->add_option("--threads", threads, "Worker threads (0 = hardware)");
    sim->add_option("--log", log, "Append a CSV line per run to this file");
    sim->callback([&] {
        action = [&] { return cmd_distill_sim(pv, n, trials, nz, nx, rate_opt, threads, log, common); };
    });
    auto *chan = dist->add_subcommand("channel", "Channel code from a reconciliation hash over a BSC");
    chan->add_option("--p-flip", p_flip, "Channel flip probability");
    chan->add_option("--n", n_ch, "Block length");
    chan->add_option("--trials", trials, "Monte Carlo trials");
    chan->add_option("--gap", gap, "Capacity minus rate");
    chan->add_option("--n-syndrome", ns, "Syndrome bits");
    chan->callback([&] { action = [&] { return cmd_distill_channel(p_flip, n_ch, trials, ns, gap, common); }; });
    auto *hash = dist->add_subcommand("hashing", "Hashing rate and merging costs of a Bell-diagonal pair");
    hash->add_option("--p", pv, "p00,p01,p10,p11")->delimiter(',')->required();
    hash->callback([&] { action = [&] { return cmd_distill_hashing(pv); }; });

    auto *qkd = app.add_subcommand("qkd", "Key rates and thresholds");
    qkd->require_subcommand(1);
    std::string proto = "bb84";
    std::vector<double> deltas;
    double q = 0, tol = 1e-5;
    size_t m = 1;
    bool optimize_q = false;
    auto *qr = qkd->add_subcommand("rate", "Key rate at one or more error rates");
    qr->add_option("--protocol", proto, "bb84, sixstate or tetrahedral");
    qr->add_option("--delta", deltas, "Error rates, comma separated")->delimiter(',')->required();
    qr->add_option("--q", q, "Preprocessing flip probability");
    qr->add_option("--m", m, "Repetition block length");
    qr->add_flag("--optimize-q", optimize_q, "Optimize q at each error rate");
    qr->callback([&] { action = [&] { return cmd_qkd_rate(proto, deltas, q, m, optimize_q); }; });
    auto *qt = qkd->add_subcommand("threshold", "Error rate where the key rate vanishes, fixed q");
    qt->add_option("--protocol", proto, "bb84, sixstate or tetrahedral");
    qt->add_option("--q", q, "Preprocessing flip probability");
    qt->add_option("--m", m, "Repetition block length");
    qt->add_option("--tol", tol, "Bracket width");
    qt->callback([&] { action = [&] { return cmd_qkd_threshold(proto, q, m, tol); }; });
    auto *qo = qkd->add_subcommand("optimize", "Threshold with q optimized at each error rate");
    qo->add_option("--protocol", proto, "bb84, sixstate or tetrahedral");
    qo->add_option("--m", m, "Repetition block length");
    qo->add_option("--tol", tol, "Bracket width");
    qo->callback([&] { action = [&] { return cmd_qkd_optimize(proto, m, tol); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitBadInput;
    }

    try {
        auto start = std::chrono::steady_clock::now();
        Report r = action();
        r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::string text = render(common, r);
        if (common.out.empty()) {
            std::cout << text;
        } else {
            write_text_file(common.out, text);
        }
        if (r.exit_code == kExitViolation) {
            std::cerr << "qcomp: uncertainty relation violated (slack < -1e-9)\n";
        }
        return r.exit_code;
    } catch (const CapabilityError &e) {
        std::cerr << "qcomp: " << e.what() << "\n";
        return kExitCapability;
    } catch (const SolverError &e) {
        std::cerr << "qcomp: " << e.what() << "\n";
        return kExitSolver;
    } catch (const Error &e) {
        std::cerr << "qcomp: " << e.what() << "\n";
        return kExitBadInput;
    }
}

}  // namespace

int main(int argc, char **argv) { return run(argc, argv); }
