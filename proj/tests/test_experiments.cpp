#include <catch_amalgamated.hpp>
#include <cavheat/experiments.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cavheat;
using nlohmann::json;

namespace {

std::filesystem::path temp_dir() {
    auto p = std::filesystem::temp_directory_path() / "cavheat_test";
    std::filesystem::create_directories(p);
    return p;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json minimal_flsim_config(const std::string& out) {
    return json{
        {"geometry",
         {{"shape", {{"kind", "unit_sphere"}}},
          {"refinement", 1},
          {"cluster",
           {{"kind", "explicit"},
            {"eps", 0.05},
            {"centers", {{0.0, 0.0, 0.0}}}}}}},
        {"source", {{"kind", "point"}, {"z_star", {1.0, 0.0, 0.0}}}},
        {"time", {{"T", 0.5}, {"n_steps", 40}}},
        {"solver", {{"kind", "flsim"}}},
        {"output",
         {{"samples", {{-1.0, 0.0, 0.0, 0.25}, {-1.0, 0.0, 0.0, 0.5}}},
          {"field_csv", out}}}};
}

}  // namespace

TEST_CASE("config validation") {
    SECTION("minimal flsim config parses and runs") {
        const auto out = (temp_dir() / "field_min.csv").string();
        const ExperimentConfig cfg = parse_config(minimal_flsim_config(out));
        const RunResult res = run_config(cfg);
        REQUIRE(res.files.size() == 1);
        const std::string text = slurp(out);
        CHECK(text.rfind("x,y,z,t,u\n", 0) == 0);
        CHECK(res.sample_values.size() == 2);
        CHECK(res.sample_values[1] > 0.0);
    }
    SECTION("z* inside a cavity rejected before any solve") {
        json j = minimal_flsim_config("unused.csv");
        j["source"]["z_star"] = {0.0, 0.0, 0.01};
        CHECK_THROWS_MATCHES(parse_config(j), ConfigError,
                             Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring(
                                 "source point inside a cavity")));
    }
    SECTION("sample inside a cavity rejected with its index") {
        json j = minimal_flsim_config("unused.csv");
        j["output"]["samples"] = {{0.0, 0.0, 0.0, 0.25}};
        try {
            parse_config(j);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("/output/samples/0") != std::string::npos);
        }
    }
    SECTION("missing keys are reported with JSON-pointer paths") {
        json j = minimal_flsim_config("unused.csv");
        j.erase("time");
        try {
            parse_config(j);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("/time") != std::string::npos);
        }
        j = minimal_flsim_config("unused.csv");
        j["geometry"]["cluster"].erase("eps");
        try {
            parse_config(j);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("/geometry/cluster") != std::string::npos);
        }
    }
    SECTION("lattice separation violation carries the cluster path") {
        json j = minimal_flsim_config("unused.csv");
        j["geometry"]["cluster"] = {{"kind", "lattice"},
                                    {"a", 0.1},
                                    {"d0", 0.5},
                                    {"omega",
                                     {{"lo", {0.0, 0.0, 0.0}}, {"hi", {1.0, 1.0, 1.0}}}}};
        j["source"]["z_star"] = {3.0, 0.0, 0.0};
        j["output"]["samples"] = {{-2.0, 0.5, 0.5, 0.5}};
        try {
            parse_config(j);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            const std::string w = e.what();
            CHECK(w.find("/geometry/cluster") != std::string::npos);
            CHECK(w.find("violates separation condition") != std::string::npos);
        }
    }
    SECTION("effmed rejects sources inside Omega") {
        json j = minimal_flsim_config("unused.csv");
        j["solver"] = {{"kind", "effmed"},
                       {"omega", {{"lo", {0.0, 0.0, 0.0}}, {"hi", {1.0, 1.0, 1.0}}}},
                       {"grid_dims", {4, 4, 4}},
                       {"c_bar", 1.0}};
        j["source"]["z_star"] = {0.5, 0.5, 0.5};
        try {
            parse_config(j);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("source inside effective domain") !=
                  std::string::npos);
        }
    }
}

TEST_CASE("reruns are byte-identical") {
    const auto out1 = (temp_dir() / "det_run1.csv").string();
    const auto out2 = (temp_dir() / "det_run2.csv").string();
    json j = minimal_flsim_config(out1);
    run_config(parse_config(j));
    j["output"]["field_csv"] = out2;
    run_config(parse_config(j));
    CHECK(slurp(out1) == slurp(out2));
    CHECK(!slurp(out1).empty());
}

TEST_CASE("sigma run writes the grid schema") {
    const auto out = (temp_dir() / "sigma_small.csv").string();
    const json j{
        {"time", {{"T", 1.0}, {"n_steps", 1}}},
        {"solver",
         {{"kind", "sigma"},
          {"omega", {{"lo", {0.0, 0.0, 0.0}}, {"hi", {1.0, 1.0, 1.0}}}},
          {"grid_dims", {4, 4, 4}},
          {"c_bar", 2.0}}},
        {"output", {{"sigma_csv", out}}}};
    run_config(parse_config(j));
    std::ifstream in(out);
    std::string header;
    std::getline(in, header);
    CHECK(header == "i,j,k,x,y,z,sigma,gamma");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 64);
}

TEST_CASE("alphas dump schema") {
    const auto field = (temp_dir() / "field_a.csv").string();
    const auto alphas = (temp_dir() / "alphas_a.csv").string();
    json j = minimal_flsim_config(field);
    j["output"]["alphas_csv"] = alphas;
    run_config(parse_config(j));
    std::ifstream in(alphas);
    std::string header;
    std::getline(in, header);
    CHECK(header == "i,t,alpha");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 41);  // one cavity, 41 nodes
}

TEST_CASE("log-log slope fit recovers exact power laws") {
    RateReport rep;
    rep.parameters = {0.2, 0.1, 0.05, 0.025};
    rep.errors.clear();
    for (double p : rep.parameters) rep.errors.push_back(3.7 * p * p);
    cavheat::detail::fit_loglog(rep);
    CHECK(rep.slope == Catch::Approx(2.0).epsilon(1e-12));
    CHECK(rep.slope_half_width <= 1e-12);
    CHECK(rep.strictly_decreasing);
}

TEST_CASE("timestep study shows second order") {
    const RateReport rep =
        rate_study(StudyKind::timestep_order2, {50.0, 100.0, 200.0});
    INFO("slope = " << rep.slope << " +- " << rep.slope_half_width);
    CHECK(rep.slope >= 1.7);
    CHECK(rep.slope <= 2.3);
    CHECK(rep.parameters.size() == 3);
    // reported parameters are the time steps themselves
    CHECK(rep.parameters[0] == Catch::Approx(1.0 / 50.0));
}

TEST_CASE("rate studies need at least 3 levels") {
    CHECK_THROWS(rate_study(StudyKind::timestep_order2, {50.0, 100.0}));
}
