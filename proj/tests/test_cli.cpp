#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

namespace {

struct Run {
    int code;
    std::string out;
};

Run tandim(const std::string& args) {
    const std::string cmd = std::string(TANDIM_CLI) + " " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    std::string out;
    std::array<char, 4096> buf;
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
    const int st = pclose(p);
    return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

nlohmann::json result(const Run& r) { return nlohmann::json::parse(r.out).at("result"); }

std::string temp_file(const std::string& name, const std::string& content) {
    const std::string path = std::string(TANDIM_TEST_TMP) + "/" + name;
    std::ofstream(path) << content;
    return path;
}

}  // namespace

TEST(Gen, SierpinskiDepthFourHas324Cells) {
    auto r = tandim("gen --spec sierpinski --depth 4");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(result(r)["cells"], 3 * 6 * 6 * 3);
}

TEST(Gen, ChessboardOneLevel) {
    auto r = tandim("gen --spec chessboard:1 --depth 1");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(result(r)["cells"], 5);
}

TEST(Gen, SameSeedIsByteIdentical) {
    const std::string a = "gen --spec sierpinski --depth 3 --samples 3 --seed 11";
    EXPECT_EQ(tandim(a).out, tandim(a).out);
    EXPECT_NE(tandim(a).out, tandim("gen --spec sierpinski --depth 3 --samples 3 --seed 12").out);
}

TEST(Gen, CsvCarriesHashAndSeed) {
    auto r = tandim("gen --spec vicsek --depth 2 --format csv --seed 5");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("# tandim ", 0), 0u);
    EXPECT_NE(r.out.find("config_hash="), std::string::npos);
    EXPECT_NE(r.out.find("seed=5"), std::string::npos);
}

TEST(Gen, InvalidSpecIsInputError) {
    EXPECT_EQ(tandim("gen --spec sierpinski:1 --depth 2").code, 2);
    EXPECT_EQ(tandim("gen --spec nosuch --depth 2").code, 2);
    EXPECT_EQ(tandim("gen").code, 2);
}

TEST(Dims, SinglePointIsAllZeros) {
    auto r = tandim("dims --spec '{\"points\":[[0,0]]}'");
    ASSERT_EQ(r.code, 0);
    auto rep = result(r)["report"];
    for (const char* k : {"delta_lower", "d_lower", "d_upper", "delta_upper"}) EXPECT_EQ(rep[k]["value"], 0.0) << k;
}

TEST(Dims, SierpinskiBracketsTheClosedForm) {
    auto r = tandim("dims --spec sierpinski --depth 3000");
    ASSERT_EQ(r.code, 0);
    auto res = result(r);
    EXPECT_NEAR(res["report"]["delta_lower"]["value"].get<double>(), std::log(3.0) / std::log(2.0), 0.05);
    EXPECT_NEAR(res["report"]["delta_upper"]["value"].get<double>(), std::log(6.0) / std::log(3.0), 0.05);
    EXPECT_EQ(res["closed_form"]["method"], "run-growth");
}

TEST(Dims, Deterministic) {
    const std::string a = "dims --spec vicsek --depth 2000";
    auto x = tandim(a), y = tandim(a);
    EXPECT_EQ(x.code, 0);
    EXPECT_EQ(x.out, y.out);
    EXPECT_NE(x.out, tandim("dims --spec vicsek --depth 2001").out);
}

TEST(Dims, ShallowDepthIsRangeError) { EXPECT_EQ(tandim("dims --spec sierpinski --depth 30").code, 3); }

TEST(Dims, SvgPlot) {
    auto r = tandim("dims --spec sierpinski --depth 2000 --format svg");
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("<svg"), std::string::npos);
    EXPECT_NE(r.out.find("<polyline"), std::string::npos);
    EXPECT_NE(r.out.find("delta_upper"), std::string::npos);
}

TEST(Tangents, ConstantScheduleIsOneCluster) {
    auto r = tandim("tangents --spec sierpinski:2 --depth 10");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(result(r)["clusters"]["candidates"].size(), 1u);
}

TEST(Tangents, CounterexampleHasSeveralClusters) {
    auto r = tandim("tangents --spec counterexample:3");
    ASSERT_EQ(r.code, 0);
    EXPECT_GE(result(r)["clusters"]["candidates"].size(), 3u);
}

TEST(Tangents, EmptyInputIsInputError) {
    EXPECT_EQ(tandim("tangents --spec " + temp_file("empty.json", "")).code, 2);
    EXPECT_EQ(tandim("tangents --spec " + temp_file("nopoints.json", "{\"points\": []}")).code, 2);
}

TEST(Tangents, BudgetExhaustionKeepsPartialOutput) {
    auto r = tandim("tangents --spec counterexample:3 --budget 10");
    EXPECT_EQ(r.code, 4);
    EXPECT_TRUE(result(r)["partial"].get<bool>());
}

TEST(Verify, PassingAndFailingSuites) {
    auto r = tandim("verify counting-inequalities counterexample");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(result(r)["suites"].size(), 2u);
    EXPECT_NE(tandim("verify number-ineq").code, 0);
    EXPECT_EQ(tandim("verify nosuch").code, 2);
}

TEST(Report, FiniteSpaceCarriesAssumption) {
    auto r = tandim("report --spec '{\"points\":[[0],[0.5],[0.25],[0.125],[0.0625],[1]]}'");
    ASSERT_EQ(r.code, 0);
    auto res = result(r);
    EXPECT_TRUE(res["report"].contains("assumption"));
    EXPECT_TRUE(res.contains("chain"));
}
