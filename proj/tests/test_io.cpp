#include <cmath>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include <shrinkt/bench.hpp>
#include <shrinkt/csv.hpp>
#include <shrinkt/json_io.hpp>

using namespace shrinkt;

TEST(Csv, NumbersRoundTripExactly) {
    for (double x : {0.1, -1.0 / 3, 1e-300, 6.02214076e23, 0.0, 5e-324}) {
        EXPECT_EQ(csv::parse_double(csv::format_double(x)), x);
    }
    EXPECT_TRUE(std::isnan(csv::parse_double("NA")));
    EXPECT_EQ(csv::parse_double("Inf"), kInf);
    EXPECT_EQ(csv::parse_double("-Inf"), -kInf);
    EXPECT_EQ(csv::format_double(std::nan("")), "NA");
    EXPECT_THROW(csv::parse_double("1.5x"), DataError);
    EXPECT_THROW(csv::parse_double(""), DataError);
}

TEST(Csv, WriteReadWriteIsByteIdentical) {
    const std::string text = "id,beta_hat,se_hat,df\ng1,0.5,1,4\ng2,-2.25,0.125,Inf\ng3,NA,1e-10,3\n";
    std::istringstream in(text);
    const auto t = csv::read(in);
    std::ostringstream out;
    csv::write(out, t);
    EXPECT_EQ(out.str(), text);
    EXPECT_EQ(t.column("se_hat"), 2u);
    EXPECT_TRUE(t.has_column("df"));
    EXPECT_FALSE(t.has_column("qvalue"));
}

TEST(Csv, ErrorsNameLineAndColumn) {
    std::istringstream ragged("a,b\n1,2\n3\n");
    try {
        csv::read(ragged);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }

    std::istringstream bad_cell("a,b\n1,2\n3,x\n");
    const auto t = csv::read(bad_cell);
    try {
        t.number(1, 1);
        FAIL();
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("line 3"), std::string::npos);
        EXPECT_NE(msg.find("'b'"), std::string::npos);
    }
    EXPECT_THROW(t.column("c"), DataError);

    std::istringstream empty("");
    EXPECT_THROW(csv::read(empty), DataError);
}

TEST(Csv, WindowsLineEndingsAndBlankLines) {
    std::istringstream in("a,b\r\n1,2\r\n\r\n3,4\r\n");
    const auto t = csv::read(in);
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[1][1], "4");
}

TEST(BenchJson, OverlaysKnownKeys) {
    BenchConfig config;
    apply_bench_json(nlohmann::json::parse(R"({"scenarios":["spiky"],"n":[4],"replicates":3,"seed":9,"mode":"counts","pi0":0.5,"penalty":5})"),
                     config);
    EXPECT_EQ(config.scenarios, std::vector<std::string>{"spiky"});
    EXPECT_EQ(config.n_per_group, std::vector<size_t>{4});
    EXPECT_EQ(config.replicates, 3u);
    EXPECT_EQ(config.seed, 9u);
    EXPECT_EQ(config.mode, SimulationMode::counts);
    EXPECT_EQ(config.pi0, 0.5);
    EXPECT_EQ(config.options.fit.penalty, 5);
    EXPECT_EQ(config.n_genes, 2000u);

    EXPECT_THROW(apply_bench_json(nlohmann::json::parse(R"({"mode":"other"})"), config), DataError);
    EXPECT_THROW(apply_bench_json(nlohmann::json::parse(R"({"replicates":"many"})"), config), DataError);
    EXPECT_THROW(apply_bench_json(nlohmann::json::parse(R"({"scenarios":["nope"]})"), config), DomainError);
}

TEST(BenchTables, ResultsRoundTripThroughCsv) {
    BenchConfig config;
    config.scenarios = {"spiky"};
    config.n_per_group = {4};
    config.replicates = 2;
    config.n_genes = 200;
    config.threads = 1;
    const auto rows = run_bench(config);
    ASSERT_EQ(rows.size(), 2 * kAllPipelines.size());
    const auto table = results_table(rows);
    const auto back = rows_from_table(table);
    std::ostringstream a, b;
    csv::write(a, table);
    csv::write(b, results_table(back));
    EXPECT_EQ(a.str(), b.str());

    const auto tables = reproduce_tables(rows);
    EXPECT_EQ(tables.size(), 5u);
    EXPECT_EQ(tables.at("coverage.csv").rows.size(), 3 * rows.size());
}
