#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "descobs/cli.hpp"
#include "descobs/io.hpp"
#include "support.hpp"

using namespace descobs;
using testsupport::Rng;
namespace fs = std::filesystem;

namespace {

const Tolerances tol;

struct Run {
    int code;
    std::string out, err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "descobs");
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string fx(const char* name) { return testsupport::fixture(name); }

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "descobs_test_io_cli";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("round12 keeps twelve significant digits") {
    CHECK(round12(1.0 / 3.0) == 0.333333333333);
    CHECK(round12(2.0) == 2.0);
    CHECK(std::signbit(round12(-0.0)) == false);
    CHECK(round12(-1e-20) == -1e-20);
}

TEST_CASE("matrix JSON round trip") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const Mat M = testsupport::gauss_matrix(rng, rng.integer(1, 5), rng.integer(1, 5));
        const Mat back = matrix_from_json(matrix_to_json(M), "M");
        CHECK((back - M).cwiseAbs().maxCoeff() <= 1e-11 * std::max(1.0, M.cwiseAbs().maxCoeff()));
    }
    CHECK(matrix_from_json(json::array(), "B", 3, 0).rows() == 3);
    CHECK(matrix_from_json(json::parse("[]"), "C", -1, 4).cols() == 4);
    CHECK_THROWS_AS(matrix_from_json(json::array(), "A", 2, 2), InputError);
    CHECK_THROWS_AS(matrix_from_json(json::parse("[[1,2],[3]]"), "X"), InputError);
    CHECK_THROWS_AS(matrix_from_json(json::parse("[[1,\"a\"]]"), "X"), InputError);
    CHECK_THROWS_AS(matrix_from_json(json::parse("[[1,2]]"), "X", 2, 2), InputError);
}

TEST_CASE("system files") {
    const auto sys = load_system(fx("descriptor_example.json"));
    CHECK(sys.m() == 6);
    CHECK(sys.n() == 5);
    CHECK(sys.k() == 1);
    CHECK(sys.p() == 1);
    CHECK(sys.r() == 1);
    const auto back = system_from_json(system_to_json(sys));
    CHECK((back.E - sys.E).norm() == 0.0);
    CHECK((back.A - sys.A).norm() == 0.0);
    CHECK((back.B - sys.B).norm() == 0.0);
    CHECK((back.K - sys.K).norm() == 0.0);

    const auto bare = system_from_json(json::parse(R"({"E": [[1]], "A": [[-1]], "K": [[1]]})"));
    CHECK(bare.k() == 0);
    CHECK(bare.p() == 0);
    CHECK_THROWS_AS(system_from_json(json::parse(R"({"E": [[1]], "A": [[-1]]})")), InputError);
    CHECK_THROWS(system_from_json(json::parse(R"({"E": [[1]], "A": [[-1, 0]], "K": [[1]]})")));
}

TEST_CASE("reduced system and observer round trips") {
    const auto red = reduced_from_json(read_json_file(fx("descriptor_example_reduced.json")));
    CHECK(red.h == 2);
    CHECK(red.n_f2 == 1);
    const auto red2 = reduced_from_json(reduced_to_json(red));
    CHECK((red2.J_sig - red.J_sig).norm() == 0.0);
    CHECK((red2.B_eta2 - red.B_eta2).norm() == 0.0);
    CHECK(red2.h == red.h);

    const auto obs = synthesize_reduced(red, {}, tol).first;
    const auto obs2 = observer_from_json(observer_to_json(obs));
    CHECK(obs2.l == obs.l);
    CHECK(obs2.h == obs.h);
    CHECK((obs2.N - obs.N).norm() <= 1e-11);
    CHECK((obs2.H - obs.H).norm() <= 1e-11);
    CHECK((obs2.R - obs.R).norm() <= 1e-11);
    REQUIRE(obs2.M.size() == obs.M.size());
    for (std::size_t i = 0; i < obs.M.size(); ++i) CHECK((obs2.M[i] - obs.M[i]).norm() <= 1e-11);
    CHECK(obs2.L.rows() == obs.L.rows());
    CHECK(obs2.L.cols() == obs.L.cols());
}

TEST_CASE("signal files") {
    const auto sig = signal_from_json(read_json_file(fx("sin_cos_signal.json")));
    REQUIRE(sig.channels() == 2);
    CHECK(sig.eval(0.5)(0) == doctest::Approx(std::sin(0.5)));
    CHECK(sig.eval(0.5)(1) == doctest::Approx(std::cos(0.5)));
    const auto again = signal_from_json(signal_to_json(sig));
    CHECK((again.eval(1.3, 2) - sig.eval(1.3, 2)).norm() == 0.0);

    const auto wrapped = signal_from_json(json::parse(
        R"({"channels": [{"type": "polynomial", "coeffs": [0, 1]}, {"type": "constant", "value": 2, "max_order": 0}]})"));
    CHECK(wrapped.max_order() == 0);
    CHECK(wrapped.eval(3.0)(0) == 3.0);
    CHECK_THROWS_AS(signal_from_json(json::parse(R"([{"type": "square"}])")), InputError);
}

TEST_CASE("check exit codes") {
    CHECK(cli({"check", fx("descriptor_example.json")}).code == kExitOk);
    CHECK(cli({"check", fx("descriptor_example.json"), "--method", "all"}).code == kExitOk);
    const auto j = cli({"check", fx("jordan_counterexample.json"), "--method", "all"});
    CHECK(j.code == kExitNegative);
    // E = I: the state-space tests are reported together with the difference between them.
    CHECK(j.out.find("legacy") != std::string::npos);
    for (const char* m : {"rank", "wong", "qkf"})
        CHECK(cli({"check", fx("jordan_counterexample.json"), "--method", m}).code == kExitNegative);
    CHECK(cli({"check", fx("derivative_gap.json")}).code == kExitOk);
    CHECK(cli({"check", fx("descriptor_example.json"), "--method", "nope"}).code == kExitError);
    CHECK(cli({"check", "/nonexistent/system.json"}).code == kExitError);
    CHECK(cli({}).code == kExitError);
    CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("check --json is parseable and deterministic") {
    const auto a = cli({"check", fx("descriptor_example.json"), "--method", "all", "--json"});
    const auto b = cli({"check", fx("descriptor_example.json"), "--method", "all", "--json"});
    CHECK(a.out == b.out);
    const auto j = json::parse(a.out);
    CHECK(j.is_object());
}

TEST_CASE("malformed inputs exit with 2") {
    const auto truncated = scratch("truncated.json");
    const std::string text = slurp(fx("descriptor_example.json"));
    spit(truncated, text.substr(0, text.size() / 2));
    for (const char* cmd : {"check", "qkf", "synthesize"}) {
        const auto r = cli({cmd, truncated.string()});
        CHECK(r.code == kExitError);
        CHECK_FALSE(r.err.empty());
    }
    const auto bad_dims = scratch("bad_dims.json");
    spit(bad_dims, R"({"E": [[1, 0]], "A": [[1]], "K": [[1]]})");
    CHECK(cli({"check", bad_dims.string()}).code == kExitError);
    CHECK(cli({"check", fx("descriptor_example.json"), "--tol", "-1"}).code == kExitError);
}

TEST_CASE("qkf command") {
    const auto r = cli({"qkf", fx("descriptor_example.json"), "--json"});
    REQUIRE(r.code == kExitOk);
    const auto j = json::parse(r.out);
    CHECK(j.contains("finite_spectrum"));
    CHECK(cli({"qkf", fx("descriptor_example.json")}).out == cli({"qkf", fx("descriptor_example.json")}).out);
}

TEST_CASE("synthesize exit codes and outputs") {
    CHECK(cli({"synthesize", fx("descriptor_example.json")}).code == kExitOk);
    CHECK(cli({"synthesize", fx("descriptor_example_reduced.json")}).code == kExitOk);
    CHECK(cli({"synthesize", fx("derivative_gap.json")}).code == kExitAsymptotic);
    CHECK(cli({"synthesize", fx("jordan_counterexample.json")}).code == kExitNegative);
    CHECK(cli({"synthesize", fx("derivative_gap.json"), "--poles", "1"}).code == kExitError);
    CHECK(cli({"synthesize", fx("derivative_gap.json"), "--poles", "-1:1"}).code == kExitError);
    CHECK(cli({"synthesize", fx("derivative_gap.json"), "--poles", "-2"}).code == kExitError);
    CHECK(cli({"synthesize", fx("derivative_gap.json"), "--poles", "-2,-3"}).code == kExitAsymptotic);
    CHECK(cli({"synthesize", fx("derivative_gap.json"), "--poles", "-1:2,-1:-2"}).code == kExitAsymptotic);

    const auto out1 = scratch("obs1.json"), out2 = scratch("obs2.json");
    REQUIRE(cli({"synthesize", fx("descriptor_example.json"), "--out", out1.string()}).code == kExitOk);
    REQUIRE(cli({"synthesize", fx("descriptor_example.json"), "--out", out2.string()}).code == kExitOk);
    CHECK(slurp(out1) == slurp(out2));
    const auto obs = observer_from_json(read_json_file(out1.string()));
    CHECK(obs.l == 2);

    const auto js = cli({"synthesize", fx("derivative_gap.json"), "--json"});
    const auto j = json::parse(js.out);
    CHECK(j.at("exact") == false);
    CHECK(j.at("stable") == true);
}

TEST_CASE("synthesize then simulate") {
    const auto obsPath = scratch("pipeline_obs.json"), redPath = scratch("pipeline_red.json");
    const auto csv = scratch("pipeline.csv");
    REQUIRE(cli({"synthesize", fx("descriptor_example.json"), "--out", obsPath.string(), "--reduced-out",
                 redPath.string()})
                .code == kExitOk);
    const auto r = cli({"simulate", redPath.string(), obsPath.string(), fx("sin_cos_signal.json"), "--init-f2", "1",
                        "--init-eta", "2", "--init-w", "3,6", "--out", csv.string(), "--json"});
    REQUIRE(r.code == kExitOk);
    const auto j = json::parse(r.out);
    CHECK(j.at("final_error").get<double>() < 1e-3);
    std::istringstream lines(slurp(csv));
    std::string header;
    std::getline(lines, header);
    CHECK(header == "t,x_f2_0,x_eta_0,w_0,w_1,z_0,zhat_0,e_0,res_alg");
    int rows = 0;
    for (std::string line; std::getline(lines, line);) ++rows;
    CHECK(rows == 10001);

    // The original system file works as well, reduced on the fly.
    const auto direct = cli({"simulate", fx("descriptor_example.json"), obsPath.string(), fx("sin_cos_signal.json"),
                             "--horizon", "1", "--json"});
    CHECK(direct.code == kExitOk);

    const auto again = scratch("pipeline_again.csv");
    cli({"simulate", redPath.string(), obsPath.string(), fx("sin_cos_signal.json"), "--init-f2", "1", "--init-eta",
         "2", "--init-w", "3,6", "--out", again.string()});
    CHECK(slurp(csv) == slurp(again));
}

TEST_CASE("simulate rejects inputs that are not smooth enough") {
    const auto obsPath = scratch("smooth_obs.json");
    REQUIRE(cli({"synthesize", fx("descriptor_example.json"), "--out", obsPath.string()}).code == kExitOk);
    const auto rough = scratch("rough.json");
    spit(rough, R"([{"type": "constant", "value": 1, "max_order": 0}, {"type": "constant", "value": 0}])");
    const auto r = cli({"simulate", fx("descriptor_example.json"), obsPath.string(), rough.string()});
    CHECK(r.code == kExitError);
    CHECK(r.err.find("h = 2") != std::string::npos);

    const auto wrong = scratch("wrong_width.json");
    spit(wrong, R"([{"type": "constant", "value": 1}])");
    CHECK(cli({"simulate", fx("descriptor_example.json"), obsPath.string(), wrong.string()}).code == kExitError);
    CHECK(cli({"simulate", fx("descriptor_example.json"), obsPath.string(), fx("sin_cos_signal.json"), "--dt", "0"})
              .code == kExitError);
}

TEST_CASE("installed binary reports the same exit codes") {
    const std::string exe = DESCOBS_CLI_PATH;
    auto status = [&](const std::string& tail) {
        const int s = std::system((exe + " " + tail + " > /dev/null 2>&1").c_str());
        return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    };
    CHECK(status("check " + fx("descriptor_example.json")) == 0);
    CHECK(status("check " + fx("jordan_counterexample.json")) == 1);
    CHECK(status("synthesize " + fx("derivative_gap.json")) == 4);
    CHECK(status("check /nonexistent.json") == 2);
}
