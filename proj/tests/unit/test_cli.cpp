#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "cli/commands.hpp"
#include "cli/io.hpp"
#include "helpers.hpp"

namespace fs = std::filesystem;
using namespace svf;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path study_json() { return test::data_dir() / "study" / "study.json"; }

std::string simulate_config(std::size_t length, bool shocked) {
    nlohmann::json j = {{"seed", 99},
                        {"length", length},
                        {"params", {{"omega", 0.2}, {"alpha", 0.1}, {"beta", 0.82}}}};
    if (shocked) {
        j["covariates"] = {{"p", 2}, {"mean", 1.0}, {"sd", 0.5}};
        j["shock"] = {{"t_star", length / 2}, {"len_vol", 2}, {"mu_omega_star", 0.5},
                      {"delta", {0.3, 0.6}}, {"sigma_u", 0.1}};
    }
    return j.dump();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("simulate writes a reproducible path") {
    const auto dir = test::scratch_dir("cli_sim");
    test::write_file(dir / "plain.json", simulate_config(200, false));
    const auto a = invoke({"simulate", "--config", (dir / "plain.json").string()});
    REQUIRE(a.code == 0);
    CHECK(a.err.find("seed 99") != std::string::npos);
    CHECK(a.out.rfind("t,return,sigma2,omega_star\n", 0) == 0);
    CHECK(count_lines(a.out) == 201);
    // No shock: the omega_star column is identically zero.
    std::istringstream rows(a.out);
    std::string line;
    std::getline(rows, line);
    while (std::getline(rows, line)) CHECK(line.substr(line.rfind(',') + 1) == "0");

    const auto b = invoke({"simulate", "--config", (dir / "plain.json").string()});
    CHECK(a.out == b.out);
    const auto c = invoke({"simulate", "--config", (dir / "plain.json").string(), "--seed", "100"});
    CHECK(c.out != a.out);

    test::write_file(dir / "shock.json", simulate_config(300, true));
    const auto f1 = dir / "s1.csv", f2 = dir / "s2.csv";
    const auto s1 = invoke({"simulate", "--config", (dir / "shock.json").string(), "--out", f1.string()});
    const auto s2 = invoke({"simulate", "--config", (dir / "shock.json").string(), "--out", f2.string()});
    REQUIRE(s1.code == 0);
    CHECK(s1.out.find("seed 99") != std::string::npos);
    CHECK(test::read_file(f1) == test::read_file(f2));
    CHECK(test::read_file(f1).rfind("t,return,sigma2,omega_star,v1,v2\n", 0) == 0);

    const auto js = invoke({"simulate", "--config", (dir / "plain.json").string(), "--format", "json"});
    REQUIRE(js.code == 0);
    const auto doc = nlohmann::json::parse(js.out);
    CHECK(doc["return"].size() == 200);
    CHECK(doc["seed"] == 99);
}

TEST_CASE("simulate rejects a path shorter than the recursion needs") {
    const auto dir = test::scratch_dir("cli_short");
    test::write_file(dir / "c.json", simulate_config(1, false));
    const auto r = invoke({"simulate", "--config", (dir / "c.json").string()});
    CHECK(r.code == cli::kValidation);
    CHECK(r.err.find("length") != std::string::npos);
}

TEST_CASE("fit recovers the fixture parameters") {
    const auto r = invoke({"fit", "--returns", (test::data_dir() / "garch11_T5000_seed7.csv").string(), "--format", "json"});
    REQUIRE(r.code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(std::abs(doc["params"]["alpha"][0].get<double>() - 0.1) < 0.05);
    CHECK(std::abs(doc["params"]["beta"][0].get<double>() - 0.82) < 0.1);
    CHECK(doc["observations"] == 5000);
    CHECK(doc["omega_star_hat"].is_null());
}

TEST_CASE("fit on prices matches fit on the implied returns") {
    const auto dir = test::scratch_dir("cli_prices");
    const cli::ReturnSeries rs = cli::load_returns(test::data_dir() / "garch11_T5000_seed7.csv");
    std::string prices = "date,price\n0,100\n";
    std::string returns = "t,return\n";
    double p = 100.0;
    for (std::size_t t = 0; t < 1500; ++t) {
        p *= std::exp(rs.returns[t] / 100.0);
        prices += std::to_string(t + 1) + "," + cli::format_full(p) + "\n";
    }
    test::write_file(dir / "prices.csv", prices);
    const cli::ReturnSeries from_prices = cli::load_returns(dir / "prices.csv");
    CHECK(from_prices.from_prices);
    REQUIRE(from_prices.returns.size() == 1500);
    for (double r : from_prices.returns) returns += "0," + cli::format_full(r) + "\n";
    test::write_file(dir / "returns.csv", returns);

    const auto a = invoke({"fit", "--returns", (dir / "prices.csv").string(), "--t-star", "1400", "--format", "json"});
    const auto b = invoke({"fit", "--returns", (dir / "returns.csv").string(), "--t-star", "1400", "--format", "json"});
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    const auto ja = nlohmann::json::parse(a.out), jb = nlohmann::json::parse(b.out);
    CHECK(std::abs(ja["params"]["omega"].get<double>() - jb["params"]["omega"].get<double>()) <= 1e-10);
    CHECK(std::abs(ja["params"]["alpha"][0].get<double>() - jb["params"]["alpha"][0].get<double>()) <= 1e-10);
    CHECK(std::abs(ja["omega_star_hat"].get<double>() - jb["omega_star_hat"].get<double>()) <= 1e-10);
}

TEST_CASE("fit rejects a shock index past the end of the series") {
    const auto r = invoke({"fit", "--returns", (test::data_dir() / "garch11_T5000_seed7.csv").string(), "--t-star", "6000"});
    CHECK(r.code == cli::kValidation);
    CHECK(!r.err.empty());
}

TEST_CASE("forecast on the study fixture") {
    const auto r = invoke({"forecast", "--config", study_json().string(), "--format", "json"});
    REQUIRE(r.code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc["donors"].size() == 4);
    CHECK(doc["losses"]["adjusted"]["ql"].get<double>() < doc["losses"]["unadjusted"]["ql"].get<double>());

    // The machine output round-trips the library result exactly.
    const cli::Bundle b = cli::load_bundle(study_json());
    const ForecastReport rep = run_forecast(b.target, b.donors, b.covariate_names, b.config, b.ground_truth);
    CHECK(doc["adjusted"][0].get<double>() == rep.adjustment.adjusted.variance.front());
    CHECK(doc["unadjusted"][0].get<double>() == rep.target.unadjusted.variance.front());
    CHECK(doc["omega_star_hat"].get<double>() == rep.adjustment.omega_star_hat);
    for (std::size_t j = 0; j < 4; ++j)
        CHECK(doc["donors"][j]["weight"].get<double>() == rep.adjustment.weights.weights[static_cast<Eigen::Index>(j)]);

    const auto human = invoke({"forecast", "--config", study_json().string()});
    REQUIRE(human.code == 0);
    CHECK(human.out.find("donor_a") != std::string::npos);
    const auto csv = invoke({"forecast", "--config", study_json().string(), "--format", "csv"});
    CHECK(csv.out.rfind("key,value\n", 0) == 0);
}

TEST_CASE("a single-donor bundle adds that donor's effect") {
    auto doc = cli::load_json(study_json());
    doc["donors"] = nlohmann::json::array({doc["donors"][1]});
    const auto dir = test::scratch_dir("cli_single");
    for (const auto& e : fs::directory_iterator(test::data_dir() / "study")) fs::copy(e.path(), dir / e.path().filename());
    test::write_file(dir / "one.json", doc.dump());
    const auto r = invoke({"forecast", "--config", (dir / "one.json").string(), "--format", "json"});
    REQUIRE(r.code == 0);
    const auto o = nlohmann::json::parse(r.out);
    CHECK(o["donors"][0]["weight"].get<double>() == 1.0);
    CHECK(o["adjusted"][0].get<double>() ==
          o["unadjusted"][0].get<double>() + o["donors"][0]["omega_star_hat"].get<double>());
}

TEST_CASE("a missing covariate cell is reported with its location") {
    const auto dir = test::scratch_dir("cli_missing");
    for (const auto& e : fs::directory_iterator(test::data_dir() / "study")) fs::copy(e.path(), dir / e.path().filename());
    const std::string text = test::read_file(dir / "target_covariates.csv");
    const std::size_t at = text.find("\n2014-04-21,");
    REQUIRE(at != std::string::npos);
    const std::size_t line = static_cast<std::size_t>(std::count(text.begin(), text.begin() + at + 1, '\n')) + 1;
    // Blank the d_iv field on that row.
    const std::size_t c1 = text.find(',', at + 1), c2 = text.find(',', c1 + 1), c3 = text.find(',', c2 + 1);
    const std::string broken = text.substr(0, c2 + 1) + text.substr(c3);
    test::write_file(dir / "target_covariates.csv", broken);
    const auto r = invoke({"forecast", "--config", (dir / "study.json").string()});
    CHECK(r.code == cli::kValidation);
    CHECK(r.err.find("target_covariates.csv:" + std::to_string(line)) != std::string::npos);
    CHECK(r.err.find("'d_iv'") != std::string::npos);
}

TEST_CASE("malformed configuration and arguments") {
    const auto dir = test::scratch_dir("cli_bad");
    test::write_file(dir / "bad.json", "{\n  \"length\": 10,\n  oops\n}\n");
    const auto r = invoke({"simulate", "--config", (dir / "bad.json").string()});
    CHECK(r.code == cli::kValidation);
    CHECK(r.err.find("bad.json:3") != std::string::npos);
    CHECK(invoke({"frobnicate"}).code == cli::kValidation);
    CHECK(invoke({}).code == cli::kValidation);
    CHECK(invoke({"forecast"}).code == cli::kValidation);
    CHECK(invoke({"forecast", "--config", (dir / "absent.json").string()}).code == cli::kValidation);
    CHECK(invoke({"fit", "--returns", (test::data_dir() / "garch11_T5000_seed7.csv").string(), "--format", "xml"}).code ==
          cli::kValidation);
}

TEST_CASE("mc-grid with a single cell") {
    const auto dir = test::scratch_dir("cli_grid");
    const nlohmann::json cfg = {{"axis1", {{"name", "mu_delta"}, {"values", {0.5}}}},
                                {"axis2", {{"name", "sigma_u"}, {"values", {0.125}}}},
                                {"replications", 4},
                                {"T_range", {756, 900}}};
    test::write_file(dir / "g.json", cfg.dump());
    const auto a = invoke({"mc-grid", "--config", (dir / "g.json").string(), "--format", "csv", "--seed", "5"});
    REQUIRE(a.code == 0);
    CHECK(count_lines(a.out) == 2);
    CHECK(a.out.rfind("mu_delta,sigma_u,win_fraction", 0) == 0);
    const auto b = invoke({"mc-grid", "--config", (dir / "g.json").string(), "--format", "csv", "--seed", "5"});
    CHECK(a.out == b.out);

    auto bad = cfg;
    bad["axis1"]["name"] = "omega";
    test::write_file(dir / "bad.json", bad.dump());
    CHECK(invoke({"mc-grid", "--config", (dir / "bad.json").string()}).code == cli::kValidation);
}

TEST_CASE("multiverse over the study fixture") {
    const auto dir = test::scratch_dir("cli_mv");
    const auto out = dir / "mv.csv";
    const auto r = invoke({"multiverse", "--config", study_json().string(), "--out", out.string()});
    REQUIRE(r.code == 0);
    const std::string csv = test::read_file(out);
    CHECK(count_lines(csv) == 1 + 50 + 3);
    CHECK(csv.rfind("QL,omitted_covariate,omitted_donor,kind", 0) == 0);
    CHECK(r.out.find("Unadjusted") != std::string::npos);

    const auto js = invoke({"multiverse", "--config", study_json().string(), "--format", "json"});
    REQUIRE(js.code == 0);
    const auto doc = nlohmann::json::parse(js.out);
    CHECK(doc["rows"].size() == 53);

    auto cfg = cli::load_json(study_json());
    cfg.erase("ground_truth");
    for (const auto& e : fs::directory_iterator(test::data_dir() / "study")) fs::copy(e.path(), dir / e.path().filename());
    test::write_file(dir / "nogt.json", cfg.dump());
    CHECK(invoke({"multiverse", "--config", (dir / "nogt.json").string()}).code == cli::kValidation);
}
