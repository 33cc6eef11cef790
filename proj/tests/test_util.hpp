#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "bec/mdp.hpp"

namespace bec::test {

/// Random row-stochastic matrix with strictly positive entries.
inline Matrix random_stochastic(std::mt19937_64& gen, Eigen::Index n) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Matrix p(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) p(i, j) = u(gen);
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

inline Vector random_vector(std::mt19937_64& gen, Eigen::Index n, double scale = 10.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = u(gen);
    return v;
}

inline Vector random_distribution(std::mt19937_64& gen, Eigen::Index n) {
    std::uniform_real_distribution<double> u(0.01, 1.0);
    Vector d(n);
    for (Eigen::Index i = 0; i < n; ++i) d[i] = u(gen);
    return d / d.sum();
}

struct CommandResult {
    int exit_code = -1;
    std::string out;
};

/// Runs a shell command, capturing stdout. stderr is folded in when
/// `merge_stderr` is set.
inline CommandResult run_command(const std::string& cmd, bool merge_stderr = false) {
    CommandResult r;
    const std::string full = merge_stderr ? cmd + " 2>&1" : cmd + " 2>/dev/null";
    FILE* pipe = popen(full.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << text;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("bec_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace bec::test
