#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "petto/field_io.hpp"

using namespace petto;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_SUITE_BEGIN("field_io");

TEST_CASE("a zero field writes the documented header and values") {
    const Grid g = Grid::make2d(3, 3, 1.0, 1.0);
    const std::string path = temp_path("petto_zero.csv");
    write_field_csv(g, std::vector<double>(9, 0.0), path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header.find("nx=3") != std::string::npos);
    CHECK(header.find("ny=3") != std::string::npos);
    CHECK(header.find("dx=0.5") != std::string::npos);
    int zeros = 0;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) {
            CHECK(cell == "0");
            ++zeros;
        }
    }
    CHECK(zeros == 9);
}

TEST_CASE("csv write/read reproduces doubles exactly") {
    const Grid g = Grid::make2d(7, 5, 2.0, 1.0);
    std::vector<double> values(static_cast<std::size_t>(g.num_nodes()));
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> dist(-1e3, 1e3);
    for (double& v : values) v = dist(rng) * std::exp(dist(rng) / 500.0);
    const std::string path = temp_path("petto_roundtrip.csv");
    write_field_csv(g, values, path);
    const CsvField back = read_field_csv(path);
    CHECK(back.nx == 7);
    CHECK(back.ny == 5);
    CHECK(back.dx == g.spacing[0]);
    REQUIRE(back.values.size() == values.size());
    for (std::size_t i = 0; i < values.size(); ++i) CHECK(back.values[i] == values[i]);
}

TEST_CASE("pgm output carries the raster header and scaling sidecar") {
    const Grid g = Grid::make2d(4, 3, 1.0, 1.0);
    std::vector<double> values(12);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<double>(i);
    const std::string path = temp_path("petto_field.pgm");
    write_pgm(g, values, path);

    std::ifstream in(path, std::ios::binary);
    std::string magic;
    int w = 0, h = 0, maxv = 0;
    in >> magic >> w >> h >> maxv;
    CHECK(magic == "P5");
    CHECK(w == 4);
    CHECK(h == 3);
    CHECK(maxv == 255);
    in.get(); // single whitespace after the header
    std::vector<unsigned char> pixels(12);
    in.read(reinterpret_cast<char*>(pixels.data()), 12);
    CHECK(in.gcount() == 12);
    // top image row is the y-high grid row; max value maps to 255
    CHECK(pixels[3] == 255);
    CHECK(pixels[8] == 0); // bottom-left grid node holds the minimum

    std::ifstream side(path + ".scale.txt");
    std::string text((std::istreambuf_iterator<char>(side)), {});
    CHECK(text.find("min = 0") != std::string::npos);
    CHECK(text.find("max = 11") != std::string::npos);
}

TEST_CASE("vtk structured points output passes a grammar check") {
    const Grid g = Grid::make3d(4, 4, 4, 1.0, 1.0, 1.0);
    std::vector<double> a(64, 1.0), b(64, 2.0);
    const std::string path = temp_path("petto_field.vtk");
    write_vtk_structured_points(g, {{"phase_0", a}, {"modulus", b}}, path);

    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "# vtk DataFile Version 3.0");
    std::getline(in, line); // title
    std::getline(in, line);
    CHECK(line == "ASCII");
    std::getline(in, line);
    CHECK(line == "DATASET STRUCTURED_POINTS");
    long nx = 0, ny = 0, nz = 0;
    std::getline(in, line);
    CHECK(std::sscanf(line.c_str(), "DIMENSIONS %ld %ld %ld", &nx, &ny, &nz) == 3);
    CHECK(nx * ny * nz == 64);
    std::getline(in, line);
    CHECK(line.rfind("ORIGIN", 0) == 0);
    std::getline(in, line);
    CHECK(line.rfind("SPACING", 0) == 0);
    long npoints = 0;
    std::getline(in, line);
    CHECK(std::sscanf(line.c_str(), "POINT_DATA %ld", &npoints) == 1);
    CHECK(npoints == 64);

    int arrays = 0;
    long values = 0;
    while (std::getline(in, line)) {
        if (line.rfind("SCALARS", 0) == 0) {
            ++arrays;
            std::getline(in, line);
            CHECK(line == "LOOKUP_TABLE default");
        } else if (!line.empty()) {
            ++values;
        }
    }
    CHECK(arrays == 2);
    CHECK(values == 2 * npoints);
}

TEST_CASE("history csv has one row per record") {
    std::vector<HistoryRecord> records(3);
    for (std::size_t i = 0; i < records.size(); ++i) {
        records[i].loop = static_cast<long>(i + 1);
        records[i].compliance = 1.0 + static_cast<double>(i);
        records[i].volume_fractions = {0.3, 0.7};
        records[i].wall_seconds = 1e9; // must never appear in the file
    }
    const std::string path = temp_path("petto_history.csv");
    write_history_csv(records, path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("loop,", 0) == 0);
    CHECK(line.find("volfrac_1") != std::string::npos);
    CHECK(line.find("wall") == std::string::npos);
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 3);
}

TEST_CASE("io failures surface the path") {
    const Grid g = Grid::make2d(3, 3, 1.0, 1.0);
    CHECK_THROWS_WITH_AS(write_field_csv(g, std::vector<double>(9, 0.0),
                                         "/nonexistent_dir/f.csv"),
                         doctest::Contains("/nonexistent_dir/f.csv"), IoError);
    CHECK_THROWS_AS(read_field_csv("/nonexistent_dir/f.csv"), IoError);
}

TEST_SUITE_END();
