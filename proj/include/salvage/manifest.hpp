#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "salvage/core.hpp"

namespace salvage {

inline constexpr const char* kToolVersion = "0.1.0";

/// FNV-1a over the raw bytes; stable across runs and platforms.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

inline std::string digest_hex(std::string_view bytes) {
    static const char* hex = "0123456789abcdef";
    std::uint64_t h = fnv1a64(bytes);
    std::string out = "fnv1a64:";
    for (int shift = 60; shift >= 0; shift -= 4)
        out += hex[(h >> shift) & 0xF];
    return out;
}

inline std::string digest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open for digest: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return digest_hex(buf.str());
}

/// Reproducibility record written next to command outputs.
struct RunManifest {
    std::string command;
    std::string config_digest;
    std::uint64_t seed = 0;
    std::string tool_version = kToolVersion;
    std::vector<std::string> outputs;
};

inline nlohmann::json to_json(const RunManifest& m) {
    return {{"command", m.command},
            {"config_digest", m.config_digest},
            {"seed", m.seed},
            {"tool_version", m.tool_version},
            {"outputs", m.outputs}};
}

inline void write_manifest(const RunManifest& m, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot open for writing: " + path);
    out << to_json(m).dump(2) << '\n';
}

} // namespace salvage
