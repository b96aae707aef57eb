#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "geocount/classes.hpp"
#include "geocount/geo.hpp"
#include "geocount/jsonl.hpp"
#include "geocount/raster.hpp"

namespace geocount {

/// One detected object: class, box b(r) and confidence w(r).
struct Region {
    int class_id = 0;
    PixelBox box;
    double score = 0.0;

    [[nodiscard]] bool valid() const { return box.valid() && score >= 0.0 && score <= 1.0; }
    friend bool operator==(const Region&, const Region&) = default;
};

/// Lexicographic key used to break score ties deterministically.
inline auto tie_key(const Region& r) {
    return std::tie(r.class_id, r.box.x1, r.box.y1, r.box.x2, r.box.y2);
}

/// Descending score, then ascending (class, x1, y1, x2, y2).
inline bool score_order(const Region& a, const Region& b) {
    if (a.score != b.score) return a.score > b.score;
    return tie_key(a) < tie_key(b);
}

struct DetectionSet {
    std::string roi_id;
    std::string timestamp;
    std::vector<Region> regions;

    [[nodiscard]] std::string key() const { return image_key(roi_id, timestamp); }
};

inline json detection_to_json(const Region& r, const ClassRegistry& reg) {
    json j;
    j["class"] = reg.name(r.class_id);
    j["x1"] = r.box.x1;
    j["y1"] = r.box.y1;
    j["x2"] = r.box.x2;
    j["y2"] = r.box.y2;
    j["score"] = r.score;
    return j;
}

inline Region detection_from_json(const json& j, const ClassRegistry& reg) {
    Region r;
    r.class_id = reg.id(field<std::string>(j, "class"));
    r.box = PixelBox{field<double>(j, "x1"), field<double>(j, "y1"), field<double>(j, "x2"),
                     field<double>(j, "y2")};
    r.score = field<double>(j, "score");
    if (!r.valid()) throw Error(Errc::invalid_argument, "detection has an invalid box or score");
    return r;
}

/// Record/replay line: a detection object plus "roi_id" and "timestamp".
inline std::string write_detection_jsonl(const std::vector<DetectionSet>& sets,
                                         const ClassRegistry& reg) {
    std::string out;
    for (const auto& s : sets) {
        for (const auto& r : s.regions) {
            json j;
            j["roi_id"] = s.roi_id;
            j["timestamp"] = s.timestamp;
            const json d = detection_to_json(r, reg);
            for (auto& [k, v] : d.items()) j[k] = v;
            out += j.dump();
            out += '\n';
        }
    }
    return out;
}

/// Groups record lines by (roi_id, timestamp), preserving first-seen order.
inline std::vector<DetectionSet> parse_detection_records(const std::vector<json>& rows,
                                                         const ClassRegistry& reg) {
    std::vector<DetectionSet> sets;
    std::map<std::pair<std::string, std::string>, std::size_t> index;
    for (const auto& j : rows) {
        auto roi = field<std::string>(j, "roi_id");
        auto ts = field_or<std::string>(j, "timestamp", "");
        auto [it, fresh] = index.try_emplace({roi, ts}, sets.size());
        if (fresh) sets.push_back(DetectionSet{roi, ts, {}});
        sets[it->second].regions.push_back(detection_from_json(j, reg));
    }
    return sets;
}

inline std::vector<DetectionSet> read_detection_jsonl(const std::filesystem::path& path,
                                                      const ClassRegistry& reg) {
    return parse_detection_records(read_jsonl(path), reg);
}

}  // namespace geocount
