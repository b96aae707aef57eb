#pragma once

#include <map>
#include <string>
#include <vector>

#include "geocount/classes.hpp"
#include "geocount/geo.hpp"
#include "geocount/jsonl.hpp"

namespace geocount {

/// Ground-truth object: axis-aligned box plus class.
struct Annotation {
    PixelBox box;
    int class_id = 0;
    friend bool operator==(const Annotation&, const Annotation&) = default;
};

/// image_id -> annotations, in file order.
using AnnotationIndex = std::map<std::string, std::vector<Annotation>>;

inline json annotation_to_json(const std::string& image_id, const Annotation& a,
                               const ClassRegistry& reg) {
    json j;
    j["image_id"] = image_id;
    j["class"] = reg.name(a.class_id);
    j["x1"] = a.box.x1;
    j["y1"] = a.box.y1;
    j["x2"] = a.box.x2;
    j["y2"] = a.box.y2;
    return j;
}

inline AnnotationIndex parse_annotations(const std::vector<json>& rows, const ClassRegistry& reg) {
    AnnotationIndex idx;
    for (const auto& j : rows) {
        Annotation a;
        a.class_id = reg.id(field<std::string>(j, "class"));
        a.box = PixelBox{field<double>(j, "x1"), field<double>(j, "y1"), field<double>(j, "x2"),
                         field<double>(j, "y2")};
        if (!a.box.valid()) throw Error(Errc::invalid_argument, "annotation box is inverted");
        idx[field<std::string>(j, "image_id")].push_back(a);
    }
    return idx;
}

inline AnnotationIndex read_annotation_jsonl(const std::filesystem::path& path,
                                             const ClassRegistry& reg) {
    return parse_annotations(read_jsonl(path), reg);
}

inline std::string write_annotation_jsonl(const AnnotationIndex& idx, const ClassRegistry& reg) {
    std::string out;
    for (const auto& [image_id, anns] : idx)
        for (const auto& a : anns) out += annotation_to_json(image_id, a, reg).dump() + "\n";
    return out;
}

}  // namespace geocount
