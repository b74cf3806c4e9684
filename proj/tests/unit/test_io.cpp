#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "structsim/io.hpp"
#include "structsim/params.hpp"

using namespace structsim;

TEST_CASE("doubles print in shortest round-trip form") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(7e6) == "7e+06");
    double x = 1.2974868047460129;
    CHECK(std::strtod(format_double(x).c_str(), nullptr) == x);
}

TEST_CASE("csv text has a header and one line per row") {
    CsvTable t;
    t.header = {"t", "i_h"};
    t.add_row({0.0, 1.5});
    t.add_row({0.5, 2.25});
    CHECK(t.text() == "t,i_h\n0,1.5\n0.5,2.25\n");
}

TEST_CASE("sha256 of known strings") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    auto path = std::filesystem::temp_directory_path() / "structsim_io_test.txt";
    write_text(path, "abc");
    CHECK(sha256_file(path) == sha256_hex("abc"));
    std::filesystem::remove(path);
}

TEST_CASE("svg output holds one polyline per series and drops non-positive log values") {
    SvgPlot plot;
    plot.title = "test";
    plot.log_y = true;
    plot.series.push_back({"a", {0.0, 1.0, 2.0}, {1.0, 10.0, 100.0}});
    plot.series.push_back({"b", {0.0, 1.0, 2.0}, {0.0, -1.0, 5.0}});
    std::string svg = render_svg(plot);
    CHECK(svg.find("<svg") != std::string::npos);
    std::size_t count = 0;
    for (std::size_t at = svg.find("<polyline"); at != std::string::npos; at = svg.find("<polyline", at + 1)) ++count;
    CHECK(count >= 1);
    CHECK(svg.find(">a<") != std::string::npos);
}

TEST_CASE("manifest json lists inputs and outputs with a stable digest") {
    RunManifest m;
    m.command_line = "structsim r0 --preset forward";
    m.preset = "forward";
    m.config_text = to_config_text(preset("forward"));
    m.grid = default_grid(preset("forward"));
    m.tool_version = "test";
    m.outputs.push_back({"r0.csv", sha256_hex("x")});
    auto j = nlohmann::json::parse(m.json());
    CHECK(j["preset"] == "forward");
    CHECK(j["outputs"].size() == 1);
    CHECK(j["input_digest"] == m.input_digest());
    CHECK(j["grid"]["delta"] == 0.005);
    RunManifest other = m;
    other.wall_time_s = 99.0;
    CHECK(other.input_digest() == m.input_digest());
    other.command_line += " --delta 0.01";
    CHECK(other.input_digest() != m.input_digest());
}
