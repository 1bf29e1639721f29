#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace neuroembed {

// Dense storage is row-major throughout: one row per node / sample.
template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using MatD = Mat<double>;
using VecD = Vec<double>;

using Rng = std::mt19937_64;

// Error hierarchy. The category decides the CLI exit code.
enum class ErrorKind { usage, data, numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what): std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ArgumentError : Error {
    explicit ArgumentError(const std::string& what): Error(ErrorKind::usage, what) {}
};

struct ParseError : Error {
    ParseError(const std::string& what, std::size_t line):
        Error(ErrorKind::data, "line " + std::to_string(line) + ": " + what), line(line) {}
    std::size_t line;
};

struct EmptyInputError : Error {
    explicit EmptyInputError(const std::string& what): Error(ErrorKind::data, what) {}
};

struct StructuralError : Error {
    explicit StructuralError(const std::string& what): Error(ErrorKind::data, what) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what): Error(ErrorKind::data, what) {}
};

struct VersionError : Error {
    explicit VersionError(const std::string& what): Error(ErrorKind::data, what) {}
};

struct NumericError : Error {
    explicit NumericError(const std::string& what): Error(ErrorKind::numeric, what) {}
};

// splitmix64 finalizer; used to derive independent stream seeds from tuples.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t a) { return mix64(a); }

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b, Rest... rest) {
    return derive_seed(mix64(a) ^ (b + 0x632be59bd9b4e019ULL), static_cast<std::uint64_t>(rest)...);
}

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline double normal(Rng& rng, double sigma) {
    if (sigma == 0.0) return 0.0;
    return std::normal_distribution<double>(0.0, sigma)(rng);
}

} // namespace neuroembed
