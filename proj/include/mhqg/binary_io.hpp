#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

// Little-endian-on-this-host binary primitives shared by the checkpoint formats.
namespace mhqg::binary {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline void write_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void write_doubles(std::ostream& out, const std::vector<double>& v) {
    write_u64(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

inline void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    write_u64(out, static_cast<std::uint64_t>(m.rows()));
    write_u64(out, static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

inline void check(std::istream& in) {
    if (!in) {
        throw FormatError("truncated or unreadable binary data");
    }
}

inline std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    check(in);
    return v;
}

inline double read_f64(std::istream& in) {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    check(in);
    return v;
}

inline std::string read_string(std::istream& in) {
    auto n = read_u64(in);
    if (n > (1ULL << 34)) {
        throw FormatError("implausible string length in binary data");
    }
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    check(in);
    return s;
}

inline std::vector<double> read_doubles(std::istream& in) {
    auto n = read_u64(in);
    if (n > (1ULL << 34)) {
        throw FormatError("implausible array length in binary data");
    }
    std::vector<double> v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    check(in);
    return v;
}

inline Eigen::MatrixXd read_matrix(std::istream& in) {
    auto rows = read_u64(in);
    auto cols = read_u64(in);
    if (rows * cols > (1ULL << 32)) {
        throw FormatError("implausible matrix shape in binary data");
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    check(in);
    return m;
}

}  // namespace mhqg::binary
