#ifndef TESTS_HELPERS_HPP
#define TESTS_HELPERS_HPP

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "ipdl/synthgen.hpp"

namespace testutil {

// Fresh scratch directory under the system temp dir, removed on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               (tag + "-" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    f << text;
}

inline std::string read_text(const std::string& path) {
    std::ifstream f(path);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// Small exact-share dataset used across suites: 5 origins x 4 destinations,
// 2 segments, real-valued trips.
inline ipdl::GenerationResult small_exact(std::uint64_t seed = 42) {
    ipdl::GenerationSpec spec;
    spec.seed = seed;
    spec.round_trips = false;
    return ipdl::generate(spec);
}

} // namespace testutil

#endif
