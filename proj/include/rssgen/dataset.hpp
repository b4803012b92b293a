#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rssgen/channel.hpp"

namespace rssgen {

/// One dataset frame: flattened multi-modal features plus the oracle RSS map
/// and its decomposition. Serialized as one JSON object per line.
struct Record {
    int frame_id = 0;
    int bs_id = 0;
    std::vector<double> features;
    RssMap truth;
    std::string scene_hash;

    std::string to_json_line(const std::string& config_hash) const;
    static Record from_json_line(const std::string& line);
};

using Dataset = std::vector<Record>;

void write_jsonl(const Dataset& data, const std::string& path, const std::string& config_hash);
Dataset read_jsonl(const std::string& path);

/// FNV-1a 64-bit hash of a string, hex-encoded; used for config and scene
/// fingerprints embedded in every emitted file.
std::string fnv1a_hex(const std::string& text);

} // namespace rssgen
