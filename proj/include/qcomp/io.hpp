#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qcomp/errors.hpp"
#include "qcomp/qstate.hpp"
#include "qcomp/recovery.hpp"

namespace qcomp {

using json = nlohmann::json;

// Locale-independent, 12 significant digits. Magnitudes below 5e-13 print as
// 0 so that round-off noise does not leak into reproducible tables.
inline std::string format_number(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    if (std::abs(v) < 5e-13) {
        v = 0;
    }
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
    return std::string(buf, res.ptr);
}

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    // Cells are pre-formatted strings; use cell() for numbers.
    void add_row(std::vector<std::string> row) {
        if (row.size() != header_.size()) {
            throw DimensionError("CSV row has " + std::to_string(row.size()) + " cells, header has " +
                                 std::to_string(header_.size()));
        }
        rows_.push_back(std::move(row));
    }

    static std::string cell(double v) { return format_number(v); }
    static std::string cell(long long v) { return std::to_string(v); }
    static std::string cell(size_t v) { return std::to_string(v); }
    static std::string cell(std::string s) { return s; }

    size_t n_rows() const { return rows_.size(); }
    const std::vector<std::string> &header() const { return header_; }
    const std::vector<std::vector<std::string>> &rows() const { return rows_; }

    std::string str() const {
        std::string out;
        write_line(out, header_);
        for (const auto &r : rows_) {
            write_line(out, r);
        }
        return out;
    }

private:
    static void write_line(std::string &out, const std::vector<std::string> &cells) {
        for (size_t i = 0; i < cells.size(); i++) {
            if (i) {
                out += ',';
            }
            const std::string &c = cells[i];
            if (c.find_first_of(",\"\n") == std::string::npos) {
                out += c;
            } else {
                out += '"';
                for (char ch : c) {
                    out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
                }
                out += '"';
            }
        }
        out += '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

// State fixture format:
//   {"id": "...", "kind": "vector" | "density",
//    "labels": [{"name": "A", "dim": 2}, ...],
//    "data": [[re, im], ...]  (amplitudes, or the matrix in row-major order),
//    "tolerance": 1e-10}
// A file holds one such object or {"states": [...]}.
struct StateRecord {
    std::string id;
    DensityMatrix rho;
    std::optional<StateVector> pure;
    double tolerance = 1e-10;
};

inline json labels_to_json(const Labels &l) {
    json out = json::array();
    for (const auto &s : l) {
        out.push_back({{"name", s.name}, {"dim", s.dim}});
    }
    return out;
}

inline Labels labels_from_json(const json &j) {
    if (!j.is_array() || j.empty()) {
        throw InputError("state labels must be a non-empty array");
    }
    Labels l;
    for (const auto &s : j) {
        if (!s.is_object() || !s.contains("name") || !s.contains("dim") || !s["name"].is_string() ||
            !s["dim"].is_number_unsigned() || s["dim"].get<size_t>() == 0) {
            throw InputError("each label needs a string name and a positive integer dim");
        }
        l.push_back({s["name"].get<std::string>(), s["dim"].get<size_t>()});
    }
    total_dim(l);
    return l;
}

namespace detail {

inline json complex_array(const cplx *data, long n) {
    json out = json::array();
    for (long i = 0; i < n; i++) {
        out.push_back({data[i].real(), data[i].imag()});
    }
    return out;
}

inline std::vector<cplx> read_complex_array(const json &j, size_t expect) {
    if (!j.is_array() || j.size() != expect) {
        throw InputError("state data must hold " + std::to_string(expect) + " [re, im] pairs");
    }
    std::vector<cplx> out;
    out.reserve(expect);
    for (const auto &e : j) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
            throw InputError("state data entries must be [re, im] number pairs");
        }
        out.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
    return out;
}

}  // namespace detail

inline json state_to_json(const StateVector &psi, const std::string &id = "", double tol = 1e-10) {
    return {{"id", id},
            {"kind", "vector"},
            {"labels", labels_to_json(psi.labels)},
            {"data", detail::complex_array(psi.amps.data(), psi.amps.size())},
            {"tolerance", tol}};
}

inline json state_to_json(const DensityMatrix &rho, const std::string &id = "", double tol = 1e-10) {
    Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = rho.rho;
    return {{"id", id},
            {"kind", "density"},
            {"labels", labels_to_json(rho.labels)},
            {"data", detail::complex_array(rm.data(), rm.size())},
            {"tolerance", tol}};
}

inline StateRecord state_from_json(const json &j) {
    if (!j.is_object()) {
        throw InputError("a state must be a JSON object");
    }
    for (const auto &[key, _] : j.items()) {
        if (key != "id" && key != "kind" && key != "labels" && key != "data" && key != "tolerance") {
            throw InputError("unknown state field '" + key + "'");
        }
    }
    if (!j.contains("kind") || !j.contains("labels") || !j.contains("data")) {
        throw InputError("a state needs kind, labels and data");
    }
    StateRecord r{j.value("id", std::string()), DensityMatrix(), std::nullopt, j.value("tolerance", 1e-10)};
    if (!(r.tolerance > 0)) {
        throw InputError("state tolerance must be positive");
    }
    Labels l = labels_from_json(j["labels"]);
    size_t d = total_dim(l);
    std::string kind = j["kind"].is_string() ? j["kind"].get<std::string>() : "";
    if (kind == "vector") {
        auto v = detail::read_complex_array(j["data"], d);
        StateVector psi(l, Eigen::Map<Vec>(v.data(), long(d)));
        psi.check(r.tolerance);
        r.rho = DensityMatrix(l, psi.amps * psi.amps.adjoint());
        r.pure = std::move(psi);
    } else if (kind == "density") {
        auto v = detail::read_complex_array(j["data"], d * d);
        Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm =
            Eigen::Map<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(v.data(), long(d),
                                                                                            long(d));
        r.rho = DensityMatrix(l, Mat(rm));
        r.rho.check(r.tolerance);
    } else {
        throw InputError("state kind must be 'vector' or 'density'");
    }
    return r;
}

inline std::vector<StateRecord> states_from_json(const json &j) {
    std::vector<StateRecord> out;
    if (j.is_object() && j.contains("states")) {
        if (!j["states"].is_array()) {
            throw InputError("'states' must be an array");
        }
        for (const auto &s : j["states"]) {
            out.push_back(state_from_json(s));
        }
    } else {
        out.push_back(state_from_json(j));
    }
    for (size_t i = 0; i < out.size(); i++) {
        if (out[i].id.empty()) {
            out[i].id = "state" + std::to_string(i);
        }
    }
    return out;
}

inline std::string read_text_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline json parse_json(const std::string &text, const std::string &what = "input") {
    try {
        return json::parse(text);
    } catch (const json::parse_error &e) {
        throw InputError("malformed JSON in " + what + ": " + e.what());
    }
}

inline std::vector<StateRecord> load_states(const std::string &path) {
    return states_from_json(parse_json(read_text_file(path), path));
}

inline void write_text_file(const std::string &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text) || !out.flush()) {
        throw InputError("cannot write '" + path + "'");
    }
}

inline json recovery_to_json(const RecoveryReport &r) {
    return {{"eps1", r.eps1},
            {"eps2", r.eps2},
            {"bound", r.bound},
            {"trace_dist", r.trace_dist},
            {"epr_fidelity", r.epr_fidelity},
            {"transfer_dist", r.transfer_dist},
            {"certified", r.certified},
            {"output_labels", labels_to_json(r.output.labels)}};
}

}  // namespace qcomp
