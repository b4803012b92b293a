#include "rssgen/dataset.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace rssgen {

using nlohmann::json;

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    static const char* digits = "0123456789abcdef";
    for (int i = 0; i < 16; ++i) buf[15 - i] = digits[(h >> (4 * i)) & 0xf];
    buf[16] = '\0';
    return buf;
}

std::string Record::to_json_line(const std::string& config_hash) const {
    json j;
    j["schema"] = 1;
    j["frame_id"] = frame_id;
    j["bs_id"] = bs_id;
    j["features"] = features;
    j["rss_dbm"] = truth.rss_dbm;
    json mask = json::array();
    for (bool b : truth.los_mask) mask.push_back(b ? 1 : 0);
    j["los_mask"] = mask;
    j["r_los_dbm"] = truth.r_los_dbm;
    j["r_reflection_db"] = truth.r_reflection_db;
    j["r_blockage_db"] = truth.r_blockage_db;
    j["scene_hash"] = scene_hash;
    j["config_hash"] = config_hash;
    return j.dump();
}

Record Record::from_json_line(const std::string& line) {
    json j = json::parse(line);
    if (j.at("schema").get<int>() != 1) throw std::runtime_error("Record: unsupported schema");
    Record r;
    r.frame_id = j.at("frame_id").get<int>();
    r.bs_id = j.at("bs_id").get<int>();
    r.features = j.at("features").get<std::vector<double>>();
    r.truth.rss_dbm = j.at("rss_dbm").get<std::vector<double>>();
    for (const json& m : j.at("los_mask")) r.truth.los_mask.push_back(m.get<int>() != 0);
    r.truth.r_los_dbm = j.at("r_los_dbm").get<std::vector<double>>();
    r.truth.r_reflection_db = j.at("r_reflection_db").get<std::vector<double>>();
    r.truth.r_blockage_db = j.at("r_blockage_db").get<std::vector<double>>();
    r.scene_hash = j.at("scene_hash").get<std::string>();
    return r;
}

void write_jsonl(const Dataset& data, const std::string& path, const std::string& config_hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_jsonl: cannot open " + path);
    for (const Record& r : data) {
        out << r.to_json_line(config_hash) << '\n';
    }
    if (!out) throw std::runtime_error("write_jsonl: write failed for " + path);
}

Dataset read_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_jsonl: cannot open " + path + " (run gen first)");
    Dataset data;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        data.push_back(Record::from_json_line(line));
    }
    return data;
}

} // namespace rssgen
