#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "structsim/grid.hpp"
#include "structsim/params.hpp"

namespace structsim {

// Shortest round-trip decimal text of a double.
std::string format_double(double x);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(const std::vector<double>& values);
    std::string text() const;
};

void write_text(const std::filesystem::path& path, const std::string& text);

struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct SvgPlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    std::vector<SvgSeries> series;
};

// Polylines with axes and decade or linear ticks; non-positive values are dropped on log axes.
std::string render_svg(const SvgPlot& plot);

std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::filesystem::path& path);

struct OutputDigest {
    std::string path;
    std::string sha256;
};

struct RunManifest {
    std::string command_line;
    std::string preset;
    std::string config_text;  // resolved parameters and grid in config syntax
    Grid grid;
    std::string tool_version;
    double wall_time_s = 0.0;
    std::vector<OutputDigest> outputs;

    std::string input_digest() const;  // covers command line, config text and grid
    std::string json() const;
};

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

}  // namespace structsim
