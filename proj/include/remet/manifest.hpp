#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace remet {

// Provenance record written next to every artifact a CLI subcommand
// produces, as "<artifact>.manifest.json". Digests are 64-bit FNV-1a over
// the file bytes (non-cryptographic; meant for idempotence checks and
// diffing, not integrity).
struct RunManifest {
    std::string tool;
    std::string version;
    std::string subcommand;
    std::string command_line;
    std::optional<uint64_t> seed;
    std::string config_hash;
    std::vector<std::pair<std::string, std::string>> inputs;   // path, digest
    std::vector<std::pair<std::string, std::string>> outputs;  // path, digest
    double wall_clock_ms = 0;
};

std::string file_digest_hex(const std::string& path);

// Writes "<artifact_path>.manifest.json".
void write_manifest(const RunManifest& manifest, const std::string& artifact_path);

}  // namespace remet
