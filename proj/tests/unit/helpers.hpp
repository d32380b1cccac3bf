#pragma once

#include "dml/core.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

namespace testing {

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("dml_unit_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline dml::MatrixXd gaussian(dml::Index rows, dml::Index cols, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> n;
    dml::MatrixXd m(rows, cols);
    for (dml::Index j = 0; j < cols; ++j)
        for (dml::Index i = 0; i < rows; ++i) m(i, j) = n(gen);
    return m;
}

template <typename F>
dml::ErrorCode error_code_of(F&& f) {
    try {
        f();
    } catch (const dml::Error& e) {
        return e.code();
    }
    FAIL("expected a dml::Error");
    return dml::ErrorCode::InvalidArgument;
}

}  // namespace testing
