#include "qcomp/io.hpp"

#include <clocale>
#include <cstdio>
#include <random>

#include "gtest/gtest.h"
#include "qcomp/uncert.hpp"

using namespace qcomp;

TEST(io, FormatNumber) {
    EXPECT_EQ(format_number(0.5), "0.5");
    EXPECT_EQ(format_number(-1), "-1");
    EXPECT_EQ(format_number(1.0 / 3), "0.333333333333");
    EXPECT_EQ(format_number(0.110027599), "0.110027599");
    EXPECT_EQ(format_number(1e-20), "0");
    EXPECT_EQ(format_number(-2e-16), "0");
    EXPECT_EQ(format_number(1.5e-9), "1.5e-09");
    EXPECT_EQ(format_number(123456789012345.0), "1.23456789012e+14");
    EXPECT_EQ(format_number(std::nan("")), "nan");
}

TEST(io, FormatIgnoresLocale) {
    // A comma-decimal locale may be missing from the image; only assert when
    // it can be selected.
    const char *old = std::setlocale(LC_NUMERIC, nullptr);
    std::string saved = old ? old : "C";
    if (std::setlocale(LC_NUMERIC, "de_DE.UTF-8")) {
        EXPECT_EQ(format_number(0.25), "0.25");
    }
    std::setlocale(LC_NUMERIC, saved.c_str());
}

TEST(io, CsvTable) {
    CsvTable t({"id", "value", "note"});
    t.add_row({"a", CsvTable::cell(0.25), "x,y"});
    t.add_row({"b", CsvTable::cell(size_t(3)), "say \"hi\""});
    EXPECT_EQ(t.str(), "id,value,note\na,0.25,\"x,y\"\nb,3,\"say \"\"hi\"\"\"\n");
    EXPECT_THROW(t.add_row({"too", "short"}), DimensionError);
}

TEST(io, VectorRoundTrip) {
    std::mt19937_64 rng(1);
    StateVector psi = random_pure({{"A", 2}, {"B", 3}}, rng);
    StateRecord r = state_from_json(parse_json(state_to_json(psi, "x").dump()));
    EXPECT_EQ(r.id, "x");
    ASSERT_TRUE(r.pure.has_value());
    EXPECT_EQ(r.pure->labels, psi.labels);
    EXPECT_EQ((r.pure->amps - psi.amps).norm(), 0);
    EXPECT_LT((r.rho.rho - psi.amps * psi.amps.adjoint()).norm(), 1e-15);
}

TEST(io, DensityRoundTripIsRowMajor) {
    Mat m(2, 2);
    m << 0.75, cplx(0, 0.25), cplx(0, -0.25), 0.25;
    DensityMatrix rho({{"Q", 2}}, m);
    json j = state_to_json(rho, "d", 1e-9);
    EXPECT_EQ(j["data"][1][1].get<double>(), 0.25);   // entry (0, 1)
    EXPECT_EQ(j["data"][2][1].get<double>(), -0.25);  // entry (1, 0)
    EXPECT_EQ(j["tolerance"].get<double>(), 1e-9);
    StateRecord r = state_from_json(j);
    EXPECT_FALSE(r.pure.has_value());
    EXPECT_EQ((r.rho.rho - m).norm(), 0);
    EXPECT_EQ(r.tolerance, 1e-9);
}

TEST(io, EprFixture) {
    auto states = load_states(QCOMP_FIXTURE_DIR "/epr.json");
    ASSERT_EQ(states.size(), 1u);
    EXPECT_EQ(states[0].id, "epr");
    auto rep = check_relation(Relation::Berta, states[0].rho, zx_pair(2));
    EXPECT_NEAR(rep.h_cond, -1, 1e-10);
    EXPECT_NEAR(rep.slack, 0, 1e-9);
}

TEST(io, StateCollections) {
    json j = {{"states",
               {state_to_json(max_entangled(2)), state_to_json(basis_state({{"A", 2}}, 1), "one")}}};
    auto s = states_from_json(j);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0].id, "state0");
    EXPECT_EQ(s[1].id, "one");
}

TEST(io, MalformedStatesRejected) {
    json good = state_to_json(basis_state({{"A", 2}}, 0));
    auto broken = [&](auto edit) {
        json j = good;
        edit(j);
        return j;
    };
    EXPECT_THROW(state_from_json(broken([](json &j) { j["kind"] = "tensor"; })), InputError);
    EXPECT_THROW(state_from_json(broken([](json &j) { j["data"].erase(1); })), InputError);
    EXPECT_THROW(state_from_json(broken([](json &j) { j["data"][0] = {1, 0, 0}; })), InputError);
    EXPECT_THROW(state_from_json(broken([](json &j) { j["data"][0] = {2, 0}; })), InputError);
    EXPECT_THROW(state_from_json(broken([](json &j) { j["labels"][0]["dim"] = 0; })), InputError);
    EXPECT_THROW(state_from_json(broken([](json &j) { j["extra"] = 1; })), InputError);
    EXPECT_THROW(state_from_json(broken([](json &j) { j.erase("labels"); })), InputError);
    EXPECT_THROW(parse_json("{\"kind\": "), InputError);
    EXPECT_THROW(load_states("/nonexistent/state.json"), InputError);
    json dup = parse_json(R"({"kind": "vector", "labels": [{"name": "A", "dim": 2}, {"name": "A", "dim": 2}],
                              "data": []})");
    EXPECT_THROW(state_from_json(dup), LabelError);
}

TEST(io, NonPositiveDensityRejected) {
    Mat m(2, 2);
    m << 1.2, 0, 0, -0.2;
    EXPECT_THROW(state_from_json(state_to_json(DensityMatrix({{"A", 2}}, m))), InputError);
}

TEST(io, RecoveryReportJson) {
    StateVector psi = max_entangled(2);
    auto rep = recover_predictive(psi, "A", basis_povm({{"B", 2}}, z_basis(2)),
                                  basis_povm({{"B", 2}}, x_basis(2).conjugate()));
    json j = recovery_to_json(rep);
    EXPECT_EQ(j["certified"], true);
    EXPECT_NEAR(j["epr_fidelity"].get<double>(), 1, 1e-9);
    EXPECT_TRUE(j.contains("bound") && j.contains("eps1") && j.contains("eps2") && j.contains("trace_dist"));
}

TEST(io, WriteAndReadText) {
    std::string path = ::testing::TempDir() + "qcomp_io_test.txt";
    write_text_file(path, "a,b\n1,2\n");
    EXPECT_EQ(read_text_file(path), "a,b\n1,2\n");
    std::remove(path.c_str());
}
