#include "avsim/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "avsim/errors.hpp"

namespace avsim {

namespace {

constexpr char kMagic[4] = {'A', 'V', 'C', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw Error(ErrorKind::Io, "checkpoint: truncated file");
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::string& manifest_json,
                     const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorKind::Io, "checkpoint: cannot open '" + path + "' for writing");
    os.write(kMagic, 4);
    write_raw(os, kVersion);
    write_raw(os, static_cast<std::uint64_t>(manifest_json.size()));
    os.write(manifest_json.data(), static_cast<std::streamsize>(manifest_json.size()));
    write_raw(os, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        write_raw(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_raw(os, static_cast<std::uint32_t>(t->shape.size()));
        for (std::size_t d : t->shape) write_raw(os, static_cast<std::uint64_t>(d));
        os.write(reinterpret_cast<const char*>(t->data.data()),
                 static_cast<std::streamsize>(t->data.size() * sizeof(double)));
    }
    if (!os) throw Error(ErrorKind::Io, "checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(ErrorKind::Io, "checkpoint: cannot open '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw Error(ErrorKind::Io, "checkpoint: bad magic in '" + path + "'");
    }
    const auto version = read_raw<std::uint32_t>(is);
    if (version != kVersion) throw Error(ErrorKind::Io, "checkpoint: unsupported version");

    Checkpoint out;
    const auto mlen = read_raw<std::uint64_t>(is);
    out.manifest_json.resize(mlen);
    is.read(out.manifest_json.data(), static_cast<std::streamsize>(mlen));
    const auto count = read_raw<std::uint32_t>(is);
    for (std::uint32_t k = 0; k < count; ++k) {
        const auto nlen = read_raw<std::uint32_t>(is);
        std::string name(nlen, '\0');
        is.read(name.data(), nlen);
        const auto ndim = read_raw<std::uint32_t>(is);
        std::vector<std::size_t> shape;
        for (std::uint32_t i = 0; i < ndim; ++i) {
            shape.push_back(static_cast<std::size_t>(read_raw<std::uint64_t>(is)));
        }
        Tensor t(shape);
        is.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        if (!is) throw Error(ErrorKind::Io, "checkpoint: truncated tensor data");
        out.tensors.emplace(std::move(name), std::move(t));
    }
    return out;
}

}  // namespace avsim
