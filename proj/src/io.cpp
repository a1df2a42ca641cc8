#include "dfa2/io.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace dfa2 {
namespace {

// Payload is written as raw host scalars; this targets little-endian hosts.
static_assert(sizeof(float) == 4 && sizeof(double) == 8);

constexpr char kMagic[4] = {'D', 'F', 'A', '2'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_u64(std::ostream& out, uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

uint32_t read_u32(std::istream& in) {
    uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
        throw IoError("truncated DFA2 header");
    return v;
}

uint64_t read_u64(std::istream& in) {
    uint64_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
        throw IoError("truncated DFA2 header");
    return v;
}

} // namespace

void write_dfa2(std::ostream& out, const Tensor& tensor) {
    out.write(kMagic, sizeof kMagic);
    write_u32(out, kVersion);
    write_u32(out, static_cast<uint32_t>(tensor.dtype()));
    write_u32(out, static_cast<uint32_t>(tensor.ndim()));
    for (int64_t d : tensor.shape())
        write_u64(out, static_cast<uint64_t>(d));
    if (tensor.dtype() == Dtype::f32)
        out.write(reinterpret_cast<const char*>(tensor.f32()),
                  static_cast<std::streamsize>(tensor.numel() * sizeof(float)));
    else
        out.write(reinterpret_cast<const char*>(tensor.f64()),
                  static_cast<std::streamsize>(tensor.numel() * sizeof(double)));
    if (!out)
        throw IoError("failed writing DFA2 payload");
}

Tensor read_dfa2(std::istream& in) {
    char magic[4];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("bad DFA2 magic");
    const uint32_t version = read_u32(in);
    if (version != kVersion)
        throw IoError("unsupported DFA2 version " + std::to_string(version));
    const uint32_t dtype_code = read_u32(in);
    if (dtype_code > 1)
        throw IoError("unknown DFA2 dtype code " + std::to_string(dtype_code));
    const uint32_t ndim = read_u32(in);
    if (ndim > 16)
        throw IoError("implausible DFA2 rank " + std::to_string(ndim));
    std::vector<int64_t> shape(ndim);
    uint64_t numel = 1;
    for (uint32_t i = 0; i < ndim; ++i) {
        const uint64_t d = read_u64(in);
        if (d > (1ull << 40) || (d != 0 && numel > (1ull << 40) / d))
            throw IoError("implausible DFA2 dimensions");
        shape[i] = static_cast<int64_t>(d);
        numel *= d;
    }
    Tensor t = Tensor::zeros(shape, static_cast<Dtype>(dtype_code));
    const std::streamsize bytes = static_cast<std::streamsize>(
        numel * (dtype_code == 0 ? sizeof(float) : sizeof(double)));
    char* dst = dtype_code == 0 ? reinterpret_cast<char*>(t.f32())
                                : reinterpret_cast<char*>(t.f64());
    if (bytes > 0 && !in.read(dst, bytes))
        throw IoError("truncated DFA2 payload");
    return t;
}

void save_dfa2(const Tensor& tensor, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    write_dfa2(out, tensor);
}

Tensor load_dfa2(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    return read_dfa2(in);
}

} // namespace dfa2
