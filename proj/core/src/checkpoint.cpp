#include "qtrade/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "qtrade/errors.hpp"

namespace qtrade {

namespace {

constexpr char kMagic[8] = {'Q', 'N', 'E', 'T', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const NetworkParams& params, const NetConfig& config) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());

    out.write(kMagic, sizeof kMagic);
    write_u32(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(config.market_features));
    write_u32(out, static_cast<std::uint32_t>(config.lstm1));
    write_u32(out, static_cast<std::uint32_t>(config.lstm2));
    write_u32(out, static_cast<std::uint32_t>(config.pos_branch));
    write_u32(out, static_cast<std::uint32_t>(config.merge1));
    write_u32(out, static_cast<std::uint32_t>(config.merge2));
    write_u32(out, config.head == HeadActivation::softmax ? 1 : 0);

    auto refs = param_refs(const_cast<NetworkParams&>(params));
    write_u32(out, static_cast<std::uint32_t>(refs.size()));
    for (const ParamRef& ref : refs) {
        write_u32(out, static_cast<std::uint32_t>(ref.name.size()));
        out.write(ref.name.data(),
                  static_cast<std::streamsize>(ref.name.size()));
        write_u64(out, static_cast<std::uint64_t>(ref.rows));
        write_u64(out, static_cast<std::uint64_t>(ref.cols));
        // Doubles as raw IEEE-754 bits, little-endian hosts assumed.
        out.write(reinterpret_cast<const char*>(ref.data),
                  static_cast<std::streamsize>(ref.size * 8));
    }
    if (!out) throw IoError("short write to checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());

    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw ParseError("not a checkpoint file: " + path.string());
    const std::uint32_t version = read_u32(in);
    if (version != kVersion)
        throw ParseError("unsupported checkpoint version " +
                         std::to_string(version));

    NetConfig config;
    config.market_features = static_cast<int>(read_u32(in));
    config.lstm1 = static_cast<int>(read_u32(in));
    config.lstm2 = static_cast<int>(read_u32(in));
    config.pos_branch = static_cast<int>(read_u32(in));
    config.merge1 = static_cast<int>(read_u32(in));
    config.merge2 = static_cast<int>(read_u32(in));
    config.head =
        read_u32(in) == 1 ? HeadActivation::softmax : HeadActivation::linear;

    NetworkParams params = init_params(config, 0);
    auto refs = param_refs(params);
    const std::uint32_t count = read_u32(in);
    if (count != refs.size())
        throw ParseError("checkpoint array count mismatch in " + path.string());

    for (ParamRef& ref : refs) {
        const std::uint32_t name_len = read_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const std::uint64_t rows = read_u64(in);
        const std::uint64_t cols = read_u64(in);
        if (name != ref.name || rows != static_cast<std::uint64_t>(ref.rows) ||
            cols != static_cast<std::uint64_t>(ref.cols))
            throw ParseError("checkpoint layout mismatch at array '" + name +
                             "' in " + path.string());
        in.read(reinterpret_cast<char*>(ref.data),
                static_cast<std::streamsize>(ref.size * 8));
    }
    if (!in) throw ParseError("truncated checkpoint " + path.string());
    return Checkpoint{std::move(params), config};
}

}  // namespace qtrade
