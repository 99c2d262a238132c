#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "devae/errors.hpp"
#include "devae/model.hpp"

namespace devae {

namespace {

constexpr char kMagic[] = {'D', 'E', 'V', 'A', 'E'};
constexpr std::size_t kMagicSize = sizeof(kMagic);
constexpr std::size_t kHeaderSize = kMagicSize + 1 + 4;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_f64(std::string& out, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint64_t get_le(const std::string& in, std::size_t offset, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
    }
    return v;
}

}  // namespace

std::string serialize_checkpoint(const Model& model) {
    const std::string cfg = model.config().to_text();
    std::string out(kMagic, kMagicSize);
    out.push_back(static_cast<char>(kCheckpointVersion));
    put_u32(out, static_cast<std::uint32_t>(cfg.size()));
    out += cfg;
    out.reserve(out.size() + 8 * model.parameter_count());
    for (const auto& p : model.parameters()) {
        for (double v : p.values()) put_f64(out, v);
    }
    return out;
}

Model parse_checkpoint(const std::string& bytes) {
    if (bytes.size() < kMagicSize || std::memcmp(bytes.data(), kMagic, kMagicSize) != 0) {
        throw CheckpointError("bad magic: not a DEVAE checkpoint");
    }
    if (bytes.size() < kHeaderSize) {
        throw CheckpointError("truncated checkpoint: header needs " + std::to_string(kHeaderSize) +
                              " bytes, file has " + std::to_string(bytes.size()));
    }
    const auto version = static_cast<unsigned char>(bytes[kMagicSize]);
    if (version != kCheckpointVersion) {
        throw CheckpointError("unsupported version " + std::to_string(version) + " (expected " +
                              std::to_string(kCheckpointVersion) + ")");
    }
    const std::size_t cfg_len = get_le(bytes, kMagicSize + 1, 4);
    if (bytes.size() < kHeaderSize + cfg_len) {
        throw CheckpointError("truncated checkpoint: config needs " + std::to_string(cfg_len) + " bytes at offset " +
                              std::to_string(kHeaderSize));
    }
    Model model(ModelConfig::from_text(bytes.substr(kHeaderSize, cfg_len)));

    std::size_t offset = kHeaderSize + cfg_len;
    const std::size_t expected = offset + 8 * model.parameter_count();
    if (bytes.size() < expected) {
        throw CheckpointError("truncated checkpoint: expected " + std::to_string(expected) + " bytes, got " +
                              std::to_string(bytes.size()));
    }
    if (bytes.size() > expected) {
        throw CheckpointError("checkpoint has " + std::to_string(bytes.size() - expected) + " trailing bytes");
    }
    for (auto& p : model.parameters()) {
        for (auto& v : p.mutable_values()) {
            v = std::bit_cast<double>(get_le(bytes, offset, 8));
            offset += 8;
        }
    }
    return model;
}

void save_checkpoint(const Model& model, const std::string& path) {
    const std::string bytes = serialize_checkpoint(model);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("failed writing '" + path + "'");
}

Model load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_checkpoint(ss.str());
}

}  // namespace devae
