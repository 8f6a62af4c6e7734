#include "remet/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "remet/errors.hpp"
#include "remet/rng.hpp"

namespace remet {

using ordered_json = nlohmann::ordered_json;

std::string file_digest_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for digesting");
    std::ostringstream buf;
    buf << in.rdbuf();
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(buf.str())));
    return out;
}

void write_manifest(const RunManifest& manifest, const std::string& artifact_path) {
    ordered_json j;
    j["tool"] = manifest.tool;
    j["version"] = manifest.version;
    j["subcommand"] = manifest.subcommand;
    j["command_line"] = manifest.command_line;
    if (manifest.seed) j["seed"] = *manifest.seed;
    j["config_hash"] = manifest.config_hash;
    auto files = [](const std::vector<std::pair<std::string, std::string>>& entries) {
        ordered_json arr = ordered_json::array();
        for (const auto& [path, digest] : entries)
            arr.push_back({{"path", path}, {"digest", digest}});
        return arr;
    };
    j["inputs"] = files(manifest.inputs);
    j["outputs"] = files(manifest.outputs);
    j["wall_clock_ms"] = manifest.wall_clock_ms;

    const std::string path = artifact_path + ".manifest.json";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest '" + path + "'");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing manifest '" + path + "'");
}

}  // namespace remet
