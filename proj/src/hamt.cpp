#include "ham/tensor.hpp"

#include <cstdio>
#include <cstring>
#include <memory>

namespace ham {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_u32le(std::FILE* f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    if (std::fwrite(b, 1, 4, f) != 4) throw IoError("HAMT: short write");
}

std::uint32_t read_u32le(std::FILE* f) {
    unsigned char b[4];
    if (std::fread(b, 1, 4, f) != 4) throw IoError("HAMT: truncated header");
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
           (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

} // namespace

void save_hamt(const std::string& path, const Tensor& t) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw IoError("HAMT: cannot open for write: " + path);
    if (std::fwrite("HAMT", 1, 4, f.get()) != 4) throw IoError("HAMT: short write");
    write_u32le(f.get(), static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape)
        write_u32le(f.get(), static_cast<std::uint32_t>(d));
    for (float v : t.data) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        write_u32le(f.get(), bits);
    }
}

Tensor load_hamt(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw IoError("HAMT: cannot open: " + path);
    char magic[4];
    if (std::fread(magic, 1, 4, f.get()) != 4 || std::memcmp(magic, "HAMT", 4) != 0)
        throw IoError("HAMT: bad magic in " + path);
    const std::uint32_t rank = read_u32le(f.get());
    if (rank > 8) throw IoError("HAMT: implausible rank in " + path);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) {
        d = read_u32le(f.get());
        if (d == 0) throw IoError("HAMT: zero dimension in " + path);
    }
    Tensor t(shape);
    for (auto& v : t.data) {
        const std::uint32_t bits = read_u32le(f.get());
        std::memcpy(&v, &bits, 4);
    }
    return t;
}

} // namespace ham
