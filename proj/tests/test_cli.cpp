#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "support/random.hpp"
#include "wextrap_cli.hpp"

using namespace wextrap;
namespace fs = std::filesystem;

namespace
{

struct Result
{
    int code = 0;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "wextrap");
    std::vector<const char*> argv;
    for (const std::string& a : args)
    {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    Result r;
    r.code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

class CliTest : public ::testing::Test
{
protected:
    void SetUp() override
    {
        dir = fs::temp_directory_path() /
              ("wextrap_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
        Matrix t = Matrix::Zero(2, 2);
        t(0, 0) = 0.5;
        t(1, 1) = 0.25;
        io::write_matrix_market(path("T.mtx"), SparseMatrix(t.sparseView()));
        io::write_vector(path("d.vec"), (Vector(2) << 0.5, 0.75).finished());
        io::write_sequence(path("stag.txt"), make_mpe_failure_sequence(3).vectors());
    }

    void TearDown() override { fs::remove_all(dir); }

    std::string path(const std::string& name) const { return (dir / name).string(); }

    fs::path dir;
};

} // namespace

TEST_F(CliTest, AccelerateWritesOneRecordPerStage)
{
    testgen::Rng rng(601);
    io::write_matrix_market(path("T6.mtx"), testgen::random_sparse_contraction(rng, 6));
    io::write_vector(path("d6.vec"), rng.vector(6));
    const Result r = invoke({"accelerate", "--linear", path("T6.mtx"), path("d6.vec"), "--x0", "zero", "--iters", "10",
                          "--k-max", "4", "--methods", "both", "--output", path("h.json"), "--csv", path("h.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    const io::json j = io::load_json(path("h.json"));
    EXPECT_EQ(j.at("records").size(), 5u);
    EXPECT_EQ(j.at("status"), "completed");
    std::istringstream csv(slurp(path("h.csv")));
    std::string line;
    int lines = 0;
    while (std::getline(csv, line))
    {
        ++lines;
    }
    EXPECT_EQ(lines, 6);
}

TEST_F(CliTest, AccelerateWeightedSequence)
{
    std::ofstream(path("w.txt")) << "1 2 3\n";
    const Result r = invoke({"accelerate", "--sequence", path("stag.txt"), "--weight", "diag:" + path("w.txt"),
                          "--k-max", "1", "--output", path("h.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(io::load_json(path("h.json")).at("weight"), "diag:" + path("w.txt"));
}

TEST_F(CliTest, StagnationRow)
{
    const Result r = invoke({"accelerate", "--sequence", path("stag.txt"), "--k-max", "1", "--output", path("h.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("1    no          MPE: \xe2\x80\x94  RRE: (stagnated)"), std::string::npos) << r.out;
}

TEST_F(CliTest, AccelerateDeterministicJson)
{
    const std::vector<std::string> base = {"accelerate", "--linear", path("T.mtx"), path("d.vec"), "--k-max", "2"};
    auto a = base;
    a.insert(a.end(), {"--output", path("a.json")});
    auto b = base;
    b.insert(b.end(), {"--output", path("b.json")});
    ASSERT_EQ(invoke(a).code, 0);
    ASSERT_EQ(invoke(b).code, 0);
    EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
    EXPECT_FALSE(slurp(path("a.json")).empty());
}

TEST_F(CliTest, OutputDirectoryFromEnvironment)
{
    ::setenv("WEXTRAP_OUTPUT_DIR", dir.c_str(), 1);
    const Result r = invoke({"accelerate", "--linear", path("T.mtx"), path("d.vec"), "--k-max", "1", "--quiet"});
    ::unsetenv("WEXTRAP_OUTPUT_DIR");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir / "history.json"));
    EXPECT_TRUE(r.out.empty());
}

TEST_F(CliTest, VerifyLinearDemo)
{
    const Result r = invoke({"verify-relations", "--linear", path("T.mtx"), path("d.vec"), "--k-max", "2"});
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    EXPECT_NE(r.out.find("PASS"), std::string::npos);
}

TEST_F(CliTest, VerifyStagnationFixture)
{
    const Result r = invoke({"verify-relations", "--sequence", path("stag.txt"), "--k-max", "1", "--output", path("rep.json")});
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    EXPECT_NE(r.out.find("n/a"), std::string::npos);
    const io::json rep = io::load_json(path("rep.json"));
    EXPECT_TRUE(rep.at("entries")[1].at("inverse_square").is_null());
    EXPECT_TRUE(rep.at("passed").get<bool>());
}

TEST_F(CliTest, VerifyCorruptedHistory)
{
    ASSERT_EQ(invoke({"accelerate", "--linear", path("T.mtx"), path("d.vec"), "--k-max", "1", "--output", path("h.json")})
                  .code,
              0);
    io::json j = io::load_json(path("h.json"));
    EXPECT_EQ(invoke({"verify-relations", "--history", path("h.json")}).code, 0);
    const double phi = j["records"][1]["rre"]["phi"].get<double>();
    j["records"][1]["rre"]["phi"] = phi * 1.001;
    io::save_json(path("bad.json"), j);
    const Result r = invoke({"verify-relations", "--history", path("bad.json")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("FAIL inverse-square identity at k=1"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("worst offender"), std::string::npos);
}

TEST_F(CliTest, KrylovCompare)
{
    EXPECT_EQ(invoke({"krylov-compare", "--linear", path("T.mtx"), path("d.vec"), "--k-max", "2"}).code, 0);
    const Result nl = invoke({"krylov-compare", "--nonlinear", "cosine", "--dim", "3"});
    EXPECT_EQ(nl.code, 4);
    EXPECT_EQ(invoke({"krylov-compare", "--sequence", path("stag.txt")}).code, 4);
}

TEST_F(CliTest, KrylovCompareRandomSparse)
{
    testgen::Rng rng(602);
    io::write_matrix_market(path("T30.mtx"), testgen::random_sparse_contraction(rng, 30));
    io::write_vector(path("d30.vec"), rng.vector(30));
    const Result r = invoke({"krylov-compare", "--linear", path("T30.mtx"), path("d30.vec"), "--k-max", "6",
                          "--output", path("k.json")});
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    EXPECT_TRUE(io::load_json(path("k.json")).at("nonexistence_aligned").get<bool>());
}

TEST_F(CliTest, QrWritesFactors)
{
    testgen::Rng rng(603);
    io::write_matrix_market(path("A.mtx"), rng.matrix(5, 3));
    const Result r = invoke({"qr", "--matrix", path("A.mtx"), "--output-dir", dir.string(), "--check"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir / "Q.mtx"));
    EXPECT_TRUE(fs::exists(dir / "R.mtx"));
    EXPECT_NE(r.out.find("Q*MQ deviation"), std::string::npos);
    const Matrix q(io::read_matrix_market(path("Q.mtx")).matrix);
    EXPECT_EQ(q.rows(), 5);
    EXPECT_EQ(q.cols(), 3);
}

TEST_F(CliTest, QrRankDeficient)
{
    Matrix a(3, 3);
    a << 1, 2, 0, 0, 0, 1, 0, 0, 0;
    io::write_matrix_market(path("A.mtx"), a);
    const Result r = invoke({"qr", "--matrix", path("A.mtx"), "--output-dir", dir.string()});
    EXPECT_EQ(r.code, 5);
    EXPECT_NE(r.err.find("k0 = 1"), std::string::npos) << r.err;
}

TEST_F(CliTest, ErrorExitCodes)
{
    EXPECT_EQ(invoke({"accelerate", "--linear", path("missing.mtx"), path("d.vec")}).code, 2);
    std::ofstream(path("d3.vec")) << "1 2 3\n";
    EXPECT_EQ(invoke({"accelerate", "--linear", path("T.mtx"), path("d3.vec"), "--output", path("h.json")}).code, 3);
    EXPECT_EQ(invoke({"accelerate", "--sequence", path("stag.txt"), "--k-max", "5", "--output", path("h.json")}).code, 3);
    EXPECT_EQ(invoke({"accelerate", "--bogus"}).code, 2);
    EXPECT_EQ(invoke({}).code, 2);
    std::ofstream(path("broken.mtx")) << "%%MatrixMarket matrix lines real general\n";
    const Result r = invoke({"qr", "--matrix", path("broken.mtx")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("broken.mtx:1:"), std::string::npos);
    EXPECT_EQ(invoke({"accelerate", "--linear", path("T.mtx"), path("d.vec"), "--methods", "tea"}).code, 2);
}

TEST_F(CliTest, Help)
{
    const Result r = invoke({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("accelerate"), std::string::npos);
}
