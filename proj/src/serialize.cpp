#include "hrst/serialize.hpp"

#include <cstring>
#include <fstream>

#include <openssl/evp.h>

#include "hrst/errors.hpp"

namespace hrst::serialize {

namespace {

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw CorruptCheckpoint("truncated container file");
    return v;
}

void put_string(std::ostream& os, const std::string& s) {
    put<std::uint64_t>(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
    const auto n = get<std::uint64_t>(is);
    if (n > (1ull << 32)) throw CorruptCheckpoint("implausible string length");
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    if (!is) throw CorruptCheckpoint("truncated container file");
    return s;
}

} // namespace

void write_container(const std::string& path, const Container& c, Payload p) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw RuntimeFailure("cannot open for writing: " + path);
    os.write(kMagic, 4);
    put<std::uint32_t>(os, kVersion);
    put<std::uint8_t>(os, static_cast<std::uint8_t>(p));
    put_string(os, c.metadata_json);
    put<std::uint64_t>(os, c.tensors.size());
    for (const auto& nt : c.tensors) {
        put_string(os, nt.name);
        put<std::uint32_t>(os, static_cast<std::uint32_t>(nt.tensor.rank()));
        for (int d : nt.tensor.shape()) put<std::int32_t>(os, d);
        if (p == Payload::Float64) {
            os.write(reinterpret_cast<const char*>(nt.tensor.data()),
                     static_cast<std::streamsize>(nt.tensor.size() * sizeof(double)));
        } else {
            std::vector<float> tmp(static_cast<std::size_t>(nt.tensor.size()));
            for (std::int64_t i = 0; i < nt.tensor.size(); ++i)
                tmp[static_cast<std::size_t>(i)] = static_cast<float>(nt.tensor[i]);
            os.write(reinterpret_cast<const char*>(tmp.data()),
                     static_cast<std::streamsize>(tmp.size() * sizeof(float)));
        }
    }
    if (!os) throw RuntimeFailure("write failed: " + path);
}

Container read_container(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CorruptCheckpoint("cannot open container file: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw CorruptCheckpoint("bad magic in container file: " + path);
    const auto version = get<std::uint32_t>(is);
    if (version != kVersion)
        throw CorruptCheckpoint("unsupported container version " + std::to_string(version));
    const auto payload = static_cast<Payload>(get<std::uint8_t>(is));
    Container c;
    c.metadata_json = get_string(is);
    const auto count = get<std::uint64_t>(is);
    for (std::uint64_t i = 0; i < count; ++i) {
        NamedTensor nt;
        nt.name = get_string(is);
        const auto rank = get<std::uint32_t>(is);
        if (rank > 8) throw CorruptCheckpoint("implausible tensor rank");
        std::vector<int> shape(rank);
        for (auto& d : shape) d = get<std::int32_t>(is);
        nt.tensor = Tensor(shape);
        if (payload == Payload::Float64) {
            is.read(reinterpret_cast<char*>(nt.tensor.data()),
                    static_cast<std::streamsize>(nt.tensor.size() * sizeof(double)));
        } else {
            std::vector<float> tmp(static_cast<std::size_t>(nt.tensor.size()));
            is.read(reinterpret_cast<char*>(tmp.data()),
                    static_cast<std::streamsize>(tmp.size() * sizeof(float)));
            for (std::int64_t j = 0; j < nt.tensor.size(); ++j)
                nt.tensor[j] = tmp[static_cast<std::size_t>(j)];
        }
        if (!is) throw CorruptCheckpoint("truncated tensor payload in " + path);
        c.tensors.push_back(std::move(nt));
    }
    return c;
}

std::string sha256_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw UnreadableFile("cannot open for hashing: " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (is) {
        is.read(buf, sizeof(buf));
        EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(is.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

} // namespace hrst::serialize
