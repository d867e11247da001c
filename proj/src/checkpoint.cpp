#include "grid2seq/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "grid2seq/error.hpp"

namespace g2s {

namespace {

constexpr char kMagic[4] = {'G', '2', 'S', '1'};

void put_u32(std::ostream& out, std::uint32_t x) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = (x >> (8 * i)) & 0xff;
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t x) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = (x >> (8 * i)) & 0xff;
    out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

bool get_bytes(std::istream& in, unsigned char* b, std::size_t n) {
    in.read(reinterpret_cast<char*>(b), std::streamsize(n));
    return std::size_t(in.gcount()) == n;
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!get_bytes(in, b, 4)) fail_format("checkpoint: truncated file");
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= std::uint32_t(b[i]) << (8 * i);
    return x;
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    if (!get_bytes(in, b, 8)) fail_format("checkpoint: truncated file");
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= std::uint64_t(b[i]) << (8 * i);
    return x;
}

double get_f64(std::istream& in) {
    std::uint64_t bits = get_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

} // namespace

const Tensor* CheckpointData::find(const std::string& name) const {
    for (const auto& [n, t] : records)
        if (n == name) return &t;
    return nullptr;
}

const Tensor& CheckpointData::require(const std::string& name) const {
    const Tensor* t = find(name);
    if (!t) fail_format("checkpoint: missing record '" + name + "'");
    return *t;
}

void write_checkpoint(const std::string& path, const CheckpointData& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail_io("cannot write checkpoint: " + path);
    out.write(kMagic, 4);
    put_u64(out, data.config_hash);
    put_u64(out, data.step);
    for (const auto& [name, tensor] : data.records) {
        put_u32(out, std::uint32_t(name.size()));
        out.write(name.data(), std::streamsize(name.size()));
        put_u32(out, std::uint32_t(tensor.rank()));
        for (std::size_t a = 0; a < tensor.rank(); ++a) put_u64(out, tensor.extent(a));
        for (std::size_t i = 0; i < tensor.numel(); ++i) put_f64(out, tensor[i]);
    }
    if (!out) fail_io("write failed: " + path);
}

CheckpointData read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io("cannot open checkpoint: " + path);
    char magic[4];
    if (!get_bytes(in, reinterpret_cast<unsigned char*>(magic), 4) ||
        std::memcmp(magic, kMagic, 4) != 0)
        fail_format("checkpoint: bad magic in " + path);

    CheckpointData data;
    data.config_hash = get_u64(in);
    data.step = get_u64(in);
    while (true) {
        unsigned char probe[4];
        in.read(reinterpret_cast<char*>(probe), 4);
        if (in.gcount() == 0) break;
        if (in.gcount() != 4) fail_format("checkpoint: truncated record header");
        std::uint32_t name_len = 0;
        for (int i = 0; i < 4; ++i) name_len |= std::uint32_t(probe[i]) << (8 * i);

        std::string name(name_len, '\0');
        if (!get_bytes(in, reinterpret_cast<unsigned char*>(name.data()), name_len))
            fail_format("checkpoint: truncated record name");
        const std::uint32_t rank = get_u32(in);
        std::vector<std::size_t> shape;
        std::size_t numel = 1;
        for (std::uint32_t a = 0; a < rank; ++a) {
            shape.push_back(std::size_t(get_u64(in)));
            numel *= shape.back();
        }
        Tensor t(shape);
        for (std::size_t i = 0; i < numel; ++i) t[i] = get_f64(in);
        data.records.emplace_back(std::move(name), std::move(t));
    }
    return data;
}

void pack_u64(std::uint64_t x, double& hi, double& lo) {
    hi = double(x >> 32);
    lo = double(x & 0xffffffffull);
}

std::uint64_t unpack_u64(double hi, double lo) {
    return (std::uint64_t(hi) << 32) | std::uint64_t(lo);
}

} // namespace g2s
