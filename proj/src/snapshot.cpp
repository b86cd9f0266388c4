#include "qcurv/snapshot.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace qcurv {

namespace {

constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& os, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("snapshot truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("snapshot truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
}

}  // namespace

void write_snapshot(const std::string& path, const ScalarField& u, double lambda) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os.write("QC4F", 4);
    put_u32(os, kVersion);
    put_u32(os, std::uint32_t(u.spec.n));
    put_f64(os, lambda);
    for (double x : u.values) put_f64(os, x);
    if (!os) throw std::runtime_error("write failed: " + path);
}

Snapshot read_snapshot(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "QC4F", 4) != 0)
        throw std::runtime_error(path + ": bad magic, not a QC4F snapshot");
    std::uint32_t version = get_u32(is);
    if (version != kVersion) throw std::runtime_error(path + ": unsupported snapshot version");
    int n = int(get_u32(is));
    double lambda = get_f64(is);
    GridSpec spec(n);
    ScalarField u(spec);
    for (std::size_t i = 0; i < spec.size(); ++i) u[i] = get_f64(is);
    return {std::move(u), lambda};
}

}  // namespace qcurv
