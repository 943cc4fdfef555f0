#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "ilab/errors.hpp"
#include "ilab/io.hpp"
#include "ilab/qtm.hpp"
#include "ilab/scenario.hpp"

namespace fs = std::filesystem;
using namespace ilab;
using namespace ilab::scenario;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "ilab_cli_io_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cli(std::vector<std::string> args, std::string* err_text = nullptr) {
    args.insert(args.begin(), "ilab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (err_text) *err_text = err.str();
    return rc;
}

std::string config_error_key(std::string_view text, Kind kind) {
    try {
        parse_config(text, kind);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "";
}

}  // namespace

TEST_CASE("number formatting is shortest round-trip") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 1e-320, 0.0}) {
        const std::string s = io::format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(io::format_double(0.1) == "0.1");
    CHECK(io::format_double(2.0) == "2");
    CHECK(io::format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(io::format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("CSV tables follow RFC 4180") {
    io::CsvTable t({"x [m]", "a,b", "say \"hi\""});
    t.add_row({1.5, -2.0, 0.25});
    CHECK(t.text() == "x [m],\"a,b\",\"say \"\"hi\"\"\"\r\n1.5,-2,0.25\r\n");
    CHECK(t.rows() == 1);
    CHECK_THROWS_AS(t.add_row({1.0}), DomainError);
    CHECK_THROWS_AS(io::CsvTable({}), DomainError);
}

TEST_CASE("sha-256") {
    CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(io::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    const auto dir = scratch("sha");
    io::write_file_atomic(dir / "f.txt", "abc");
    CHECK(io::sha256_file(dir / "f.txt") == io::sha256_hex("abc"));
    CHECK(!fs::exists(dir / "f.txt.tmp"));
}

TEST_CASE("heatmap encoding") {
    SUBCASE("single pixel") {
        const std::vector<double> v{3.5};
        const auto h = io::encode_heatmap(v, 1, 1);
        CHECK(h.scale.min == 3.5);
        CHECK(h.scale.max == 3.5);
        CHECK(h.pgm == std::string("P5\n1 1\n65535\n") + char(0x80) + char(0x00));
    }
    SUBCASE("all equal -> mid-scale") {
        const std::vector<double> v(12, -1.0);
        for (auto p : io::encode_heatmap(v, 4, 3).pixels) CHECK(p == io::degenerate_pixel);
    }
    SUBCASE("linear scaling, big-endian samples, masks at minimum") {
        const std::vector<double> v{0.0, 1.0, 2.0, std::nan(""), 4.0, 100.0};
        const std::vector<std::uint8_t> m{0, 0, 0, 0, 0, 1};
        const auto h = io::encode_heatmap(v, 3, 2, m);
        CHECK(h.scale.min == 0.0);
        CHECK(h.scale.max == 4.0);
        CHECK(h.scale.mask_count == 2);
        CHECK(h.pixels == std::vector<std::uint16_t>{0, 16384, 32768, 0, 65535, 0});
        const std::string body = h.pgm.substr(h.pgm.size() - 12);
        CHECK(static_cast<unsigned char>(body[2]) == 0x40);
        CHECK(static_cast<unsigned char>(body[3]) == 0x00);
        const auto side = nlohmann::json::parse(io::scale_sidecar_json(h.scale));
        CHECK(side["min"] == 0.0);
        CHECK(side["max"] == 4.0);
        CHECK(side["mask_count"] == 2);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(io::encode_heatmap(std::vector<double>{}, 0, 0), DomainError);
        CHECK_THROWS_AS(io::encode_heatmap(std::vector<double>(5), 2, 2), DomainError);
    }
    SUBCASE("symmetric Q surface gives palindromic rows") {
        const qtm::TwoSlitState st(qtm::TwoSlitSetup{});
        const auto xs = Grid1D::spanning(-20.0, 20.0, 321);
        const auto ts = Grid1D::spanning(0.0, 40.0, 21);
        const auto s = qtm::quantum_potential_surface(st, xs, ts);
        const auto h = io::encode_heatmap(s.field.values, xs.size(), ts.size(), s.mask);
        for (std::size_t r = 0; r < ts.size(); ++r)
            for (std::size_t c = 0; c < xs.size(); ++c)
                CHECK(h.pixels[r * xs.size() + c] == h.pixels[r * xs.size() + xs.size() - 1 - c]);
        const auto dir = scratch("heat");
        const auto files = io::emit_heatmap(s.field.values, xs.size(), ts.size(), dir / "q.pgm", s.mask);
        REQUIRE(files.size() == 2);
        CHECK(files[1].filename() == "q.scale.json");
        CHECK(slurp(files[0]) == h.pgm);
    }
}

TEST_CASE("strict configuration parsing") {
    CHECK(config_error_key("[fraunhofer]\nkk = 1\n", Kind::Fraunhofer) == "fraunhofer.kk");
    CHECK(config_error_key("bogus = 1\n", Kind::Fraunhofer) == "bogus");
    CHECK(config_error_key("[kirchhoff]\nk = 1\n", Kind::Fraunhofer) == "kirchhoff");
    CHECK(config_error_key("[fraunhofer]\nk = \"ten\"\n", Kind::Fraunhofer) == "fraunhofer.k");
    CHECK(config_error_key("[fraunhofer]\nk = -1\n", Kind::Fraunhofer) == "fraunhofer.k");
    CHECK(config_error_key("[qtm]\nsigma0 = 0\n", Kind::QtmPotential) == "qtm");
    CHECK(config_error_key("[accumulate]\ncount = 10\ncheckpoints = [5, 50]\n", Kind::QtmAccumulate) ==
          "accumulate.checkpoints");
    CHECK(config_error_key("[[kirchhoff.opening]]\nhalf_x = 1\nhalf_y = 1\n[[kirchhoff.opening]]\ncx = 1\nhalf_x = 1\n"
                           "half_y = 1\n",
                           Kind::Kirchhoff) == "kirchhoff.opening");
    CHECK(config_error_key("[kirchhoff]\nsource_z = 5\n", Kind::Kirchhoff) == "kirchhoff.source_z");
    CHECK(config_error_key("[ensemble]\ntotal_energy = 0\nmode = \"unit\"\n", Kind::Ensemble) == "ensemble.mode");
    CHECK(config_error_key("scenario = \"kirchhoff\"\n", Kind::Fraunhofer) == "scenario");
    CHECK(config_error_key("[output]\nformats = [\"png\"]\n", Kind::Fraunhofer) == "output.formats");
    CHECK(config_error_key("x = [\n", Kind::Fraunhofer) == "<toml>");

    const auto cfg = parse_config("seed = 12\n[fraunhofer]\nalpha_over_pi = [0, 0.25, 0.5]\ntheta_count = 11\n",
                                  Kind::Fraunhofer);
    CHECK(cfg.seed == 12);
    const auto& p = std::get<FraunhoferParams>(cfg.params);
    CHECK(p.alpha.size() == 3);
    CHECK(p.alpha[2] == doctest::Approx(std::numbers::pi / 2));
    // resolved parameters include defaults
    CHECK(cfg.resolved()["fraunhofer"]["k"] == 10.0);
    CHECK(default_config(Kind::QtmAccumulate).resolved()["accumulate"]["checkpoints"] ==
          nlohmann::json::array({100, 3000, 20000, 70000}));
    CHECK(parse_kind("qtm-potential") == Kind::QtmPotential);
    CHECK(!parse_kind("qtm"));
}

TEST_CASE("fraunhofer scenario: alpha = pi/2 column is zero") {
    auto cfg = parse_config("[fraunhofer]\nalpha_over_pi = [0, 0.25, 0.5]\n", Kind::Fraunhofer);
    cfg.output.dir = scratch("fraun");
    const auto rep = run_scenario(cfg);
    const std::string csv = slurp(cfg.output.dir / "phase_scan.csv");
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        CHECK(line.substr(line.rfind(',') + 1) == "0");
        ++rows;
    }
    CHECK(rows == 401);
    CHECK(fs::exists(cfg.output.dir / "phase_scan.pgm"));
    CHECK(fs::exists(cfg.output.dir / "phase_scan.scale.json"));
    CHECK(verify_manifest(rep.manifest).empty());
    // tampering is detected
    io::write_file_atomic(cfg.output.dir / "phase_scan.csv", "x");
    CHECK(verify_manifest(rep.manifest) == std::vector<std::string>{"phase_scan.csv"});
}

TEST_CASE("accumulate scenario names histograms by checkpoint") {
    auto cfg = parse_config("seed = 3\n[accumulate]\ncount = 3000\ncheckpoints = [100, 3000]\n", Kind::QtmAccumulate);
    cfg.output.dir = scratch("acc");
    run_scenario(cfg);
    CHECK(fs::exists(cfg.output.dir / "hits_000100.csv"));
    CHECK(fs::exists(cfg.output.dir / "hits_003000.csv"));
    CHECK(fs::exists(cfg.output.dir / "accumulation_summary.csv"));
    const auto manifest = nlohmann::json::parse(slurp(cfg.output.dir / "manifest.json"));
    CHECK(manifest["seed"] == 3);
    CHECK(manifest["scenario"] == "qtm-accumulate");
    CHECK(manifest["files"].size() == 3);
    CHECK(manifest["version"] == ILAB_VERSION);
}

TEST_CASE("runs are byte-identical for identical config and seed") {
    for (auto [kind, text] : {std::pair{Kind::QtmTrajectories, "seed = 4\n[trajectories]\ncount = 9\nseeding = \"random\"\n"},
                              {Kind::QtmPotential, "[potential]\nt_count = 11\nmethod = \"fd\"\n"},
                              {Kind::Ensemble, ""}}) {
        auto a = parse_config(text, kind), b = a;
        a.output.dir = scratch("rep_a");
        b.output.dir = scratch("rep_b");
        const auto ra = run_scenario(a, 1), rb = run_scenario(b, 2);
        REQUIRE(ra.files.size() == rb.files.size());
        for (std::size_t i = 0; i < ra.files.size(); ++i) CHECK(slurp(ra.files[i]) == slurp(rb.files[i]));
        CHECK(slurp(ra.manifest) == slurp(rb.manifest));
    }
}

TEST_CASE("command line exit codes") {
    const auto dir = scratch("cli");
    io::write_file_atomic(dir / "ok.toml", "[fraunhofer]\ntheta_count = 21\n");
    io::write_file_atomic(dir / "bad.toml", "[fraunhofer]\nwat = 1\n");
    io::write_file_atomic(dir / "diverge.toml",
                          "[kirchhoff]\nquadrature_order = 2\nmax_refinement = 0\nrel_tol = 1e-12\nscreen_count = 3\n");
    std::string err;
    CHECK(cli({"fraunhofer", "--config", (dir / "ok.toml").string(), "--out", (dir / "o").string(), "--seed", "7"}) == 0);
    CHECK(nlohmann::json::parse(slurp(dir / "o" / "manifest.json"))["seed"] == 7);
    CHECK(cli({"fraunhofer", "--config", (dir / "bad.toml").string(), "--out", (dir / "b").string()}, &err) == 1);
    CHECK(err.find("fraunhofer.wat") != std::string::npos);
    CHECK(cli({"fraunhofer", "--config", (dir / "missing.toml").string()}) == 1);
    CHECK(cli({"nonsense", "--config", (dir / "ok.toml").string()}) == 1);
    CHECK(cli({"kirchhoff", "--config", (dir / "diverge.toml").string(), "--out", (dir / "d").string()}, &err) == 2);
    CHECK(err.find("numerical") != std::string::npos);
    CHECK(cli({"fraunhofer", "--config", (dir / "ok.toml").string(), "--out", (dir / "t").string(), "--threads", "2"}) ==
          0);
    ::setenv("ILAB_THREADS", "many", 1);
    CHECK(cli({"fraunhofer", "--config", (dir / "ok.toml").string(), "--out", (dir / "e").string()}) == 1);
    ::setenv("ILAB_THREADS", "2", 1);
    CHECK(cli({"fraunhofer", "--config", (dir / "ok.toml").string(), "--out", (dir / "e").string()}) == 0);
    ::unsetenv("ILAB_THREADS");
}
