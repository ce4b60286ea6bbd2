#include "lckasr/param_store.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "lckasr/common.hpp"

namespace lckasr {

void ParamStore::add(std::string name, std::vector<std::uint32_t> dims, Tensor tensor) {
    if (index_.count(name))
        throw ConfigError("parameter '" + name + "' registered twice");
    std::size_t prod = 1;
    for (auto d : dims) prod *= d;
    if (prod != tensor.size())
        throw ConfigError("parameter '" + name + "' dims do not match tensor size");
    index_.emplace(name, entries_.size());
    entries_.push_back(ParamEntry{std::move(name), std::move(dims), std::move(tensor)});
}

const Tensor& ParamStore::tensor(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return entries_[it->second].tensor;
}

Tensor& ParamStore::tensor(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return entries_[it->second].tensor;
}

std::size_t ParamStore::total_scalars() const {
    std::size_t total = 0;
    for (const auto& e : entries_) total += e.tensor.size();
    return total;
}

void ParamStore::validate_finite() const {
    for (const auto& e : entries_)
        for (std::size_t i = 0; i < e.tensor.size(); ++i)
            if (!std::isfinite(e.tensor[i]))
                throw NumericError("parameter '" + e.name + "' contains a non-finite value");
}

namespace {

constexpr char kMagic[4] = {'L', 'C', 'W', '1'};

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw DataError("cannot open '" + path + "' for writing");
    }
    void u16(std::uint16_t v) { raw_le(v); }
    void u32(std::uint32_t v) { raw_le(v); }
    void u64(std::uint64_t v) { raw_le(v); }
    void bytes(const void* p, std::size_t len) {
        out_.write(static_cast<const char*>(p), std::streamsize(len));
    }
    void f32_array(const float* p, std::size_t count) {
        static_assert(sizeof(float) == 4);
        // IEEE-754 single; byte order handled like the integer fields
        for (std::size_t i = 0; i < count; ++i) {
            std::uint32_t bits;
            std::memcpy(&bits, &p[i], 4);
            u32(bits);
        }
    }
    bool good() const { return bool(out_); }

private:
    template <typename U>
    void raw_le(U v) {
        unsigned char buf[sizeof(U)];
        for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = (unsigned char)(v >> (8 * i));
        bytes(buf, sizeof(U));
    }
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
        if (!in_) throw DataError("cannot open '" + path + "' for reading");
    }
    std::uint16_t u16() { return raw_le<std::uint16_t>(); }
    std::uint32_t u32() { return raw_le<std::uint32_t>(); }
    std::uint64_t u64() { return raw_le<std::uint64_t>(); }
    void bytes(void* p, std::size_t len) {
        in_.read(static_cast<char*>(p), std::streamsize(len));
        if (std::size_t(in_.gcount()) != len)
            throw FormatError("weight file truncated", offset_ + std::size_t(in_.gcount()));
        offset_ += len;
    }
    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    bool at_eof() {
        in_.peek();
        return in_.eof();
    }
    std::uint64_t offset() const { return offset_; }

private:
    template <typename U>
    U raw_le() {
        unsigned char buf[sizeof(U)];
        bytes(buf, sizeof(U));
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) v |= U(buf[i]) << (8 * i);
        return v;
    }
    std::ifstream in_;
    std::uint64_t offset_ = 0;
};

}  // namespace

void save_param_store(const ParamStore& store, const std::string& path) {
    store.validate_finite();
    const std::string tmp = path + ".tmp";
    {
        Writer w(tmp);
        w.bytes(kMagic, 4);
        w.u32(store.format_version);
        w.u64(store.fingerprint);
        w.u32(std::uint32_t(store.count()));
        for (const auto& e : store.entries()) {
            if (e.name.size() > 0xffff) throw ConfigError("parameter name too long");
            w.u16(std::uint16_t(e.name.size()));
            w.bytes(e.name.data(), e.name.size());
            w.bytes("", 0);
            const std::uint8_t rank = std::uint8_t(e.dims.size());
            w.bytes(&rank, 1);
            for (auto d : e.dims) w.u32(d);
            w.f32_array(e.tensor.data(), e.tensor.size());
        }
        if (!w.good()) throw DataError("write to '" + tmp + "' failed");
    }
    std::filesystem::rename(tmp, path);
}

ParamStore load_param_store(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad magic, not a weight file", 0);
    ParamStore store;
    store.format_version = r.u32();
    if (store.format_version != 1)
        throw FormatError("unsupported format version " + std::to_string(store.format_version),
                          4);
    store.fingerprint = r.u64();
    const std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint16_t name_len = r.u16();
        std::string name(name_len, '\0');
        r.bytes(name.data(), name_len);
        std::uint8_t rank;
        r.bytes(&rank, 1);
        if (rank != 1 && rank != 4)
            throw FormatError("unsupported tensor rank " + std::to_string(int(rank)),
                              r.offset() - 1);
        std::vector<std::uint32_t> dims(rank);
        std::size_t total = 1;
        for (auto& d : dims) {
            d = r.u32();
            total *= d;
        }
        Shape4 shape = rank == 4 ? Shape4{int(dims[0]), int(dims[1]), int(dims[2]), int(dims[3])}
                                 : Shape4{1, int(dims[0]), 1, 1};
        if (shape.count() != total || total == 0)
            throw FormatError("invalid dims for parameter '" + name + "'", r.offset());
        Tensor t(shape);
        for (std::size_t j = 0; j < total; ++j) t[j] = r.f32();
        store.add(std::move(name), std::move(dims), std::move(t));
    }
    if (!r.at_eof()) throw FormatError("trailing bytes after last entry", r.offset());
    return store;
}

}  // namespace lckasr
