#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "finslerfill/io.hpp"

using namespace finsler;
using finsler::io::json;

namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("finslerfill_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run_binary(const std::string& args) {
    std::string cmd = std::string(FINSLERFILL_BIN) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("metric spec json round-trips") {
    std::vector<MetricSpec> specs = {
        euclidean_spec(1.4),
        hemisphere_spec(),
        conformal_bump_spec(ConformalBase::Flat, {{3.0, {0.3, 0.0}, 0.15}}, 1.0, "bubble"),
        randers_spec({0.3, -0.1}, 1.2),
        minkowski_spec(4.0, 1.1, 0.2, 0.0, 0.9),
    };
    for (const auto& s : specs) {
        json j = io::metric_spec_to_json(s);
        MetricSpec back = io::metric_spec_from_json(j);
        INFO(j.dump());
        CHECK(back.name == s.name);
        CHECK(back.family == s.family);
        Metric ma(s), mb(back);
        CHECK(ma.reversible() == mb.reversible());
        // same norm everywhere
        for (int k = 0; k < 8; ++k) {
            Vec2 v = unit_dir(kTwoPi * k / 8.0 + 0.2);
            CHECK(ma.phi({0.3, -0.2}, v) == doctest::Approx(mb.phi({0.3, -0.2}, v)).epsilon(1e-12));
        }
        CHECK(j.contains("reversible"));
    }
}

TEST_CASE("config parsing validates its ranges") {
    json base = {{"metric", {{"family", "euclidean"}}}};
    CHECK_NOTHROW(io::parse_config(base));

    auto with = [&](const char* key, json v) {
        json j = base;
        j[key] = std::move(v);
        return j;
    };
    CHECK_THROWS_AS(io::parse_config(json::array()), io::ConfigError);
    CHECK_THROWS_AS(io::parse_config(json::object()), io::ConfigError);
    CHECK_THROWS_AS(io::parse_config(with("mesh", {{"h", 0.5}})), io::ConfigError);
    CHECK_THROWS_AS(io::parse_config(with("mesh", {{"R", 7}})), io::ConfigError);
    CHECK_THROWS_AS(io::parse_config(with("n", 1)), io::ConfigError);
    CHECK_THROWS_AS(io::parse_config(with("m", 4)), io::ConfigError);
    CHECK_THROWS_AS(io::parse_config(with("n_schedule", {4, 9999})), io::ConfigError);
    CHECK_THROWS_AS(io::parse_config(with("metric", {{"family", "unknown"}})), io::ConfigError);
    CHECK_THROWS_AS(io::load_config("/nonexistent/path.json"), io::ConfigError);

    auto cfg = io::parse_config({{"metric", {{"family", "hemisphere"}}},
                                 {"mesh", {{"h", 0.1}, {"R", 2}}},
                                 {"n", 12},
                                 {"seed", 7}});
    CHECK(cfg.h == 0.1);
    CHECK(cfg.stencil_radius == 2);
    CHECK(cfg.n == 12);
    CHECK(cfg.seed == 7);
}

TEST_CASE("config hash is stable and content-sensitive") {
    json a = {{"metric", {{"family", "euclidean"}}}, {"n", 8}};
    json b = {{"metric", {{"family", "euclidean"}}}, {"n", 9}};
    CHECK(io::config_hash(a) == io::config_hash(a));
    CHECK(io::config_hash(a) != io::config_hash(b));
}

TEST_CASE("area command writes the expected value") {
    auto dir = fresh_dir("area");
    json j = {{"metric", {{"family", "euclidean"}}},
              {"mesh", {{"h", 0.05}, {"R", 3}}},
              {"m", 128},
              {"out", dir.string()}};
    auto cfg = io::parse_config(j);
    CHECK(io::cmd_area(cfg) == 0);
    json out = json::parse(slurp(dir / "area.json"));
    CHECK(out.at("ht_area").get<double>() == doctest::Approx(kPi).epsilon(0.01));
    CHECK(out.at("busemann_area").get<double>() == doctest::Approx(kPi).epsilon(0.01));
    CHECK(out.at("tool_version") == io::kToolVersion);
    CHECK(out.contains("config_hash"));
}

TEST_CASE("lowerbound command is deterministic and writes a certificate") {
    auto dir1 = fresh_dir("lb1");
    auto dir2 = fresh_dir("lb2");
    json j = {{"metric", {{"family", "euclidean"}}},
              {"mesh", {{"h", 0.1}, {"R", 2}}},
              {"n_schedule", {4, 8}},
              {"seed", 2024}};
    for (const auto& dir : {dir1, dir2}) {
        auto cfg = io::parse_config(j);
        cfg.out_dir = dir.string();  // identical embedded config, different target
        CHECK(io::cmd_lowerbound(cfg) == 0);
    }
    // byte-identical outputs for the same seed and config
    CHECK(slurp(dir1 / "certificate.json") == slurp(dir2 / "certificate.json"));
    CHECK(slurp(dir1 / "convergence.csv") == slurp(dir2 / "convergence.csv"));

    json cert = json::parse(slurp(dir1 / "certificate.json"));
    CHECK(cert.at("verdict") == "bound-holds");
    CHECK(cert.at("n") == 8);
    CHECK(cert.at("metrics").size() == 2);
    CHECK(cert.at("mesh").at("h") == 0.1);
    CHECK(cert.at("I").get<double>() - cert.at("error_bar").get<double>() <=
          cert.at("ht_area").get<double>());
    CHECK(cert.at("config").at("seed") == 2024);

    std::string csv = slurp(dir1 / "convergence.csv");
    CHECK(csv.rfind("n,I_interior,I_interior_bar,I_boundary,I_boundary_bar\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("distance command writes a square csv") {
    auto dir = fresh_dir("dist");
    json j = {{"metric", {{"family", "euclidean"}}},
              {"mesh", {{"h", 0.1}, {"R", 2}}},
              {"n", 5},
              {"out", dir.string()}};
    CHECK(io::cmd_distance(io::parse_config(j)) == 0);
    std::string csv = slurp(dir / "distance_matrix.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);  // header + 5 rows
}

TEST_CASE("render command writes svg and rejects unknown targets") {
    auto dir = fresh_dir("render");
    json j = {{"metric", {{"family", "minkowski"}, {"params", {{"p", 4.0}}}}},
              {"render", "indicatrices"},
              {"out", dir.string()}};
    CHECK(io::cmd_render(io::parse_config(j)) == 0);
    std::string svg = slurp(dir / "render_indicatrices.svg");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    json bad = j;
    bad["render"] = "nonsense";
    CHECK_THROWS_AS(io::cmd_render(io::parse_config(bad)), io::ConfigError);
}

TEST_CASE("binary exit codes") {
    auto dir = fresh_dir("bin");
    SUBCASE("usage errors exit 1") {
        CHECK(run_binary("") == 1);
        CHECK(run_binary("area --config /nonexistent.json") == 1);
        json j = {{"metric", {{"family", "euclidean"}}}, {"n", 0}};
        auto cfgpath = dir / "bad.json";
        io::write_text(cfgpath.string(), j.dump());
        CHECK(run_binary("area --config " + cfgpath.string()) == 1);
    }
    SUBCASE("a good run exits 0 and honors overrides") {
        json j = {{"metric", {{"family", "euclidean"}}}};
        auto cfgpath = dir / "ok.json";
        io::write_text(cfgpath.string(), j.dump());
        CHECK(run_binary("area --config " + cfgpath.string() + " --h 0.1 --R 2 --m 64 --out " +
                         (dir / "out").string()) == 0);
        json out = json::parse(slurp(dir / "out" / "area.json"));
        CHECK(out.at("ht_area").get<double>() == doctest::Approx(kPi).epsilon(0.02));
        CHECK(out.at("mesh").at("h") == 0.1);
    }
    SUBCASE("pu on a non-glueable metric exits 2") {
        json j = {{"metric",
                   {{"family", "conformal"},
                    {"params",
                     {{"base", "hemisphere"},
                      {"bumps",
                       {{{"amplitude", 1.0}, {"center", {0.9, 0.0}}, {"sigma", 0.3}}}}}}}},
                  {"mesh", {{"h", 0.1}, {"R", 2}}}};
        auto cfgpath = dir / "pu.json";
        io::write_text(cfgpath.string(), j.dump());
        CHECK(run_binary("pu --config " + cfgpath.string() + " --out " + (dir / "puout").string()) == 2);
    }
    SUBCASE("verify with a shrunken target exits 2") {
        json j = {{"metrics",
                   {{{"family", "euclidean"}},
                    {{"family", "euclidean"}, {"params", {{"scale", 0.5}}}, {"name", "half"}}}},
                  {"mesh", {{"h", 0.1}, {"R", 2}}},
                  {"n", 4}};
        auto cfgpath = dir / "verify.json";
        io::write_text(cfgpath.string(), j.dump());
        CHECK(run_binary("verify --config " + cfgpath.string() + " --out " +
                         (dir / "vout").string()) == 2);
    }
}
