#include "negcq/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace negcq;
namespace fs = std::filesystem;

namespace {

struct Result {
    int rc;
    std::string out, err;
};

Result call(std::vector<std::string> args) {
    args.insert(args.begin(), "negcq");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int rc = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {rc, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("negcq_cli_" + name + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// Query C instance: R(x, x mod 4), S(z mod 4, z), T = {(i,i),(i,i+1)} over 12 values.
fs::path query_c_dir() {
    fs::path d = scratch("qc");
    std::string R = "x,y\n", S = "y,z\n", T = "x,z\n";
    for (int i = 0; i < 12; ++i) {
        R += std::to_string(i) + "," + std::to_string(i % 4) + "\n";
        S += std::to_string(i % 4) + "," + std::to_string(i) + "\n";
        T += std::to_string(i) + "," + std::to_string(i) + "\n" + std::to_string(i) + "," + std::to_string(i + 1) + "\n";
    }
    write(d / "R.csv", R);
    write(d / "S.csv", S);
    write(d / "T.csv", T);
    return d;
}

const std::string kQC = "C(X,Z) :- R(X,Y), S(Y,Z), !T(X,Z).";

cli::Json last_json_line(const std::string& s) {
    std::istringstream in(s);
    std::string line, last;
    while (std::getline(in, line))
        if (!line.empty()) last = line;
    return cli::Json::parse(last);
}

}  // namespace

TEST(Cli, RunStrategiesAgree) {
    const fs::path d = query_c_dir();
    const Result naive = call({"run", "--db", d.string(), "--query", kQC, "--strategy", "naive"});
    ASSERT_EQ(naive.rc, 0) << naive.err;
    EXPECT_EQ(naive.out.substr(0, 4), "X,Z\n");
    for (const char* st : {"tensor", "colors-join"}) {
        const Result r = call({"run", "--db", d.string(), "--query", kQC, "--strategy", st});
        EXPECT_EQ(r.rc, 0) << r.err;
        EXPECT_EQ(r.out, naive.out) << st;
    }
    // Pairs with X ≡ Z mod 4 (36) minus the diagonal of T; the (i,i+1) tuples never join.
    EXPECT_EQ(std::count(naive.out.begin(), naive.out.end(), '\n'), 1 + 36 - 12);
}

TEST(Cli, ReportsAreByteIdenticalWithoutTimings) {
    const fs::path d = query_c_dir();
    const std::vector<std::string> args = {"run", "--db", d.string(), "--query", kQC, "--report", "json", "--no-timings", "--seed", "5"};
    const Result a = call(args), b = call(args);
    ASSERT_EQ(a.rc, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(a.err, b.err);
    const cli::Json rep = cli::Json::parse(a.err);
    EXPECT_EQ(rep["schema"], 1);
    EXPECT_EQ(rep["B"], "4");
    EXPECT_EQ(rep["seed"], 5);
    EXPECT_EQ(a.err.find("\"ms\""), std::string::npos);
    const fs::path out = d / "ans.csv", rep_out = d / "rep.json";
    const Result c = call({"run", "--db", d.string(), "--query", kQC, "--out", out.string(), "--report", "json",
                           "--report-out", rep_out.string(), "--no-timings", "--seed", "5"});
    ASSERT_EQ(c.rc, 0);
    std::ifstream f(out);
    EXPECT_EQ(std::string(std::istreambuf_iterator<char>(f), {}), a.out);
}

TEST(Cli, QueryFromFile) {
    const fs::path d = query_c_dir();
    write(d / "q.txt", kQC + "\n");
    const Result a = call({"run", "--db", d.string(), "--query", (d / "q.txt").string()});
    const Result b = call({"run", "--db", d.string(), "--query", kQC});
    EXPECT_EQ(a.rc, 0);
    EXPECT_EQ(a.out, b.out);
}

TEST(Cli, PlanOfWalk) {
    const Result r = call({"plan", "--query", "Q() :- E(A,B), E(B,C), E(C,D), E(D,F)."});
    ASSERT_EQ(r.rc, 0) << r.err;
    EXPECT_NE(r.out.find("fhtw_F = 1"), std::string::npos) << r.out;
    const Result t = call({"plan", "--query", "Q() :- E(A,B), E(B,C), E(C,A)."});
    EXPECT_NE(t.out.find("fhtw_F = 3/2"), std::string::npos) << t.out;
    const Result j = call({"plan", "--query", "Q(A) :- E(A,B), E(B,C).", "--report", "json"});
    ASSERT_EQ(j.rc, 0) << j.err;
    EXPECT_EQ(cli::Json::parse(j.out)["fhtw_F"], "1");
}

TEST(Cli, RewriteQueryC) {
    const fs::path d = query_c_dir();
    const Result r = call({"rewrite", "--db", d.string(), "--query", kQC});
    ASSERT_EQ(r.rc, 0) << r.err;
    EXPECT_NE(r.out.find("B = 4"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("degree 2, matchings 2"), std::string::npos) << r.out;
}

TEST(Cli, ExplicitFamilyForTwoStarVerifies) {
    const fs::path d = scratch("fam");
    const fs::path csv = d / "fam.csv";
    const Result r = call({"family", "--structure", "X != Y, Y != Z", "--N", "8", "--mode", "explicit", "--out", csv.string()});
    ASSERT_EQ(r.rc, 0) << r.err;
    std::ifstream side(csv.string() + ".json");
    const cli::Json j = cli::Json::parse(side);
    EXPECT_EQ(j["mode"], "explicit");
    EXPECT_TRUE(j["verified"].get<bool>());
    ColorFamily F;
    F.c = j["c"].get<std::size_t>();
    F.N = 8;
    std::ifstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::uint8_t> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(static_cast<std::uint8_t>(std::stoi(cell)));
        ASSERT_EQ(row.size(), 8u);
        F.table.push_back(row);
    }
    EXPECT_EQ(F.table.size(), j["F"].get<std::size_t>());
    const LocalGraph g(3, {{0, 1}, {1, 2}});
    EXPECT_TRUE(verify_coverage(g, F, 8).ok);
}

TEST(Cli, FamilyIsDeterministicUnderSeed) {
    const std::vector<std::string> args = {"family", "--structure", "NAE(A,B,C)", "--N", "6", "--seed", "3"};
    const Result a = call(args), b = call(args);
    ASSERT_EQ(a.rc, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(a.err, b.err);
}

TEST(Cli, ErrorsAreStructured) {
    const Result bad_flag = call({"run", "--frobnicate"});
    EXPECT_EQ(bad_flag.rc, 2);
    EXPECT_EQ(last_json_line(bad_flag.err)["error"]["kind"], "usage");
    const Result parse = call({"plan", "--query", "Q() :- E(A,B"});
    EXPECT_EQ(parse.rc, 2);
    EXPECT_EQ(last_json_line(parse.err)["error"]["type"], "ParseError");
    const Result missing = call({"run", "--db", "/nonexistent/negcq", "--query", kQC});
    EXPECT_EQ(missing.rc, 2);
    const fs::path d = query_c_dir();
    const Result budget = call({"run", "--db", d.string(), "--query", kQC, "--strategy", "naive", "--budget-naive", "1"});
    EXPECT_EQ(budget.rc, 3);
    const cli::Json e = last_json_line(budget.err);
    EXPECT_EQ(e["schema"], 1);
    EXPECT_EQ(e["error"]["kind"], "budget");
    EXPECT_EQ(call({"--help"}).rc, 0);
    EXPECT_EQ(cli::exit_code(ErrorKind::usage), 2);
    EXPECT_EQ(cli::exit_code(ErrorKind::budget), 3);
    EXPECT_EQ(cli::exit_code(ErrorKind::internal), 4);
}

TEST(Cli, BenchReportsBothSizes) {
    const Result r = call({"bench", "--N", "200", "--repeat", "1"});
    ASSERT_EQ(r.rc, 0) << r.err;
    const cli::Json j = cli::Json::parse(r.out);
    ASSERT_EQ(j["runs"].size(), 2u);
    EXPECT_EQ(j["runs"][0]["N"], 200);
    EXPECT_EQ(j["runs"][1]["N"], 400);
    EXPECT_EQ(j["runs"][0]["B"], "4");
    EXPECT_GT(j["ratio"].get<double>(), 0.0);
}

TEST(Cli, LoadDatabaseSharesComparedColumns) {
    const fs::path d = scratch("ld");
    write(d / "A.csv", "u\nx\ny\n");
    write(d / "B.csv", "v;w\ny;z\n");
    const QueryIR q = parse_query("Q(P,Q) :- A(P), B(Q,W), P != Q.");
    const Database db = cli::load_database(d.string(), q, ';');
    auto r = db.relation("A");
    EXPECT_EQ(db.domain_of("A", 0), db.domain_of("B", 0));
    EXPECT_EQ(cli::read_query_text("Q() :- A(P)."), "Q() :- A(P).");
}
