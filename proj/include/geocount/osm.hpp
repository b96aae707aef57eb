#pragma once

// OpenStreetMap XML (v0.6 node/way/tag/nd subset) ingestion, strategic tag
// filtering and ROI descriptor emission.

#include <cstdint>
#include <cstring>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <expat.h>

#include "geocount/geo.hpp"
#include "geocount/jsonl.hpp"

namespace geocount {

using Tag = std::pair<std::string, std::string>;

enum class OsmKind { node, way };

struct OsmFeature {
    std::int64_t id = 0;
    OsmKind kind = OsmKind::node;
    std::vector<Tag> tags;
    std::vector<GeoPoint> boundary;
};

struct OsmExtract {
    std::vector<OsmFeature> features;
    std::size_t unresolved_refs = 0;
};

struct TagFilter {
    std::vector<Tag> entries;

    /// Places with a high circulation of people.
    static TagFilter strategic_defaults() {
        return TagFilter{{{"shop", "supermarket"},
                          {"aeroway", "aerodrome"},
                          {"amenity", "hospital"},
                          {"amenity", "university"},
                          {"amenity", "school"},
                          {"shop", "mall"},
                          {"amenity", "place_of_worship"}}};
    }

    /// Parses "key=value" strings.
    static TagFilter parse(const std::vector<std::string>& items) {
        TagFilter f;
        for (const auto& s : items) {
            auto eq = s.find('=');
            if (eq == std::string::npos || eq == 0)
                throw Error(Errc::invalid_argument, "tag filter entry must be key=value: " + s);
            f.entries.emplace_back(s.substr(0, eq), s.substr(eq + 1));
        }
        return f;
    }

    /// First filter entry (in filter order) carried by the tags, if any.
    [[nodiscard]] std::optional<Tag> match(const std::vector<Tag>& tags) const {
        for (const auto& e : entries)
            for (const auto& t : tags)
                if (t == e) return e;
        return std::nullopt;
    }
};

struct RoiDescriptor {
    std::string roi_id;
    std::int64_t source_feature = 0;
    std::string tag_group;
    GeoBox geo;
};

namespace detail {

class OsmXmlHandler {
public:
    OsmExtract parse(std::string_view bytes) {
        std::unique_ptr<XML_ParserStruct, decltype(&XML_ParserFree)> parser(
            XML_ParserCreate("UTF-8"), &XML_ParserFree);
        if (!parser) throw Error(Errc::io, "cannot allocate XML parser");
        parser_ = parser.get();
        XML_SetUserData(parser.get(), this);
        XML_SetElementHandler(parser.get(), &OsmXmlHandler::on_start, &OsmXmlHandler::on_end);

        // expat takes an int length; feed in chunks for large extracts.
        constexpr std::size_t kChunk = 1 << 24;
        std::size_t pos = 0;
        do {
            const std::size_t n = std::min(kChunk, bytes.size() - pos);
            const bool last = pos + n == bytes.size();
            const auto status =
                XML_Parse(parser.get(), bytes.data() + pos, static_cast<int>(n), last);
            if (!error_.empty()) throw ParseError(error_, error_offset_);
            if (status == XML_STATUS_ERROR) {
                throw ParseError(XML_ErrorString(XML_GetErrorCode(parser.get())),
                                 static_cast<std::size_t>(XML_GetCurrentByteIndex(parser.get())));
            }
            pos += n;
        } while (pos < bytes.size());
        parser_ = nullptr;
        return finish();
    }

private:
    struct PendingWay {
        std::int64_t id = 0;
        std::vector<Tag> tags;
        std::vector<std::int64_t> refs;
    };
    // Document-order slot: either a node index or a way index.
    struct Slot {
        OsmKind kind;
        std::size_t index;
    };
    struct NodeRec {
        std::int64_t id;
        GeoPoint pos;
        std::vector<Tag> tags;
    };

    static const char* attr(const char** atts, const char* name) {
        for (int i = 0; atts[i]; i += 2)
            if (std::strcmp(atts[i], name) == 0) return atts[i + 1];
        return nullptr;
    }

    void fail(const std::string& msg) {
        if (!error_.empty()) return;
        error_ = msg;
        error_offset_ = static_cast<std::size_t>(XML_GetCurrentByteIndex(parser_));
        XML_StopParser(parser_, XML_FALSE);
    }

    std::optional<std::int64_t> parse_int(const char* s, const char* what) {
        if (!s) {
            fail(std::string("missing attribute ") + what);
            return std::nullopt;
        }
        try {
            std::size_t used = 0;
            auto v = std::stoll(s, &used);
            if (s[used] != '\0') throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            fail(std::string("bad integer attribute ") + what);
            return std::nullopt;
        }
    }

    std::optional<double> parse_double(const char* s, const char* what) {
        if (!s) {
            fail(std::string("missing attribute ") + what);
            return std::nullopt;
        }
        try {
            std::size_t used = 0;
            auto v = std::stod(s, &used);
            if (s[used] != '\0') throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            fail(std::string("bad numeric attribute ") + what);
            return std::nullopt;
        }
    }

    static void XMLCALL on_start(void* self, const XML_Char* name, const XML_Char** atts) {
        static_cast<OsmXmlHandler*>(self)->start(name, atts);
    }
    static void XMLCALL on_end(void* self, const XML_Char* name) {
        static_cast<OsmXmlHandler*>(self)->end(name);
    }

    void start(const char* name, const char** atts) {
        ++depth_;
        if (std::strcmp(name, "node") == 0 && !in_node_ && !in_way_) {
            auto id = parse_int(attr(atts, "id"), "node id");
            auto lat = parse_double(attr(atts, "lat"), "lat");
            auto lon = parse_double(attr(atts, "lon"), "lon");
            if (!id || !lat || !lon) return;
            GeoPoint p{*lat, *lon};
            if (!p.valid()) return fail("node coordinates out of range");
            nodes_.push_back(NodeRec{*id, p, {}});
            order_.push_back({OsmKind::node, nodes_.size() - 1});
            in_node_ = true;
            element_depth_ = depth_;
        } else if (std::strcmp(name, "way") == 0 && !in_node_ && !in_way_) {
            auto id = parse_int(attr(atts, "id"), "way id");
            if (!id) return;
            ways_.push_back(PendingWay{*id, {}, {}});
            order_.push_back({OsmKind::way, ways_.size() - 1});
            in_way_ = true;
            element_depth_ = depth_;
        } else if (std::strcmp(name, "tag") == 0 && (in_node_ || in_way_)) {
            const char* k = attr(atts, "k");
            const char* v = attr(atts, "v");
            if (!k || !v) return fail("tag without k/v");
            auto& tags = in_node_ ? nodes_.back().tags : ways_.back().tags;
            tags.emplace_back(k, v);
        } else if (std::strcmp(name, "nd") == 0 && in_way_) {
            auto ref = parse_int(attr(atts, "ref"), "nd ref");
            if (ref) ways_.back().refs.push_back(*ref);
        }
        // Anything else (bounds, relation, member, ...) is ignored.
    }

    void end(const char*) {
        if ((in_node_ || in_way_) && depth_ == element_depth_) {
            in_node_ = false;
            in_way_ = false;
        }
        --depth_;
    }

    OsmExtract finish() {
        std::unordered_map<std::int64_t, std::size_t> by_id;
        by_id.reserve(nodes_.size());
        for (std::size_t i = 0; i < nodes_.size(); ++i) by_id.emplace(nodes_[i].id, i);

        OsmExtract out;
        for (const auto& slot : order_) {
            if (slot.kind == OsmKind::node) {
                auto& n = nodes_[slot.index];
                if (n.tags.empty()) continue;
                out.features.push_back(OsmFeature{n.id, OsmKind::node, n.tags, {n.pos}});
            } else {
                auto& w = ways_[slot.index];
                OsmFeature f{w.id, OsmKind::way, std::move(w.tags), {}};
                f.boundary.reserve(w.refs.size());
                for (auto ref : w.refs) {
                    auto it = by_id.find(ref);
                    if (it == by_id.end()) {
                        ++out.unresolved_refs;
                        continue;
                    }
                    f.boundary.push_back(nodes_[it->second].pos);
                }
                out.features.push_back(std::move(f));
            }
        }
        return out;
    }

    XML_Parser parser_ = nullptr;
    std::vector<NodeRec> nodes_;
    std::vector<PendingWay> ways_;
    std::vector<Slot> order_;
    int depth_ = 0;
    int element_depth_ = 0;
    bool in_node_ = false;
    bool in_way_ = false;
    std::string error_;
    std::size_t error_offset_ = 0;
};

}  // namespace detail

/// Parses an OSM XML extract. Tagged nodes become single-point features; ways
/// resolve their node refs in document order, skipping (and counting) refs
/// that do not resolve.
inline OsmExtract parse_osm_xml(std::string_view bytes) {
    detail::OsmXmlHandler handler;
    return handler.parse(bytes);
}

inline std::vector<OsmFeature> filter_strategic(const std::vector<OsmFeature>& features,
                                                const TagFilter& filter) {
    if (filter.entries.empty()) throw Error(Errc::empty_filter, "tag filter has no entries");
    std::vector<OsmFeature> out;
    for (const auto& f : features)
        if (filter.match(f.tags)) out.push_back(f);
    return out;
}

struct SamplingResult {
    std::vector<RoiDescriptor> rois;
    std::size_t skipped_no_contour = 0;
    std::size_t skipped_outside = 0;
    std::size_t skipped_polar = 0;
};

/// Minimum boundary points for a feature to delimit an area.
inline constexpr std::size_t kMinContourPoints = 3;

inline SamplingResult sample_locations(const GeoBox& aoi, const std::vector<OsmFeature>& features,
                                       const TagFilter& filter, double meters) {
    if (filter.entries.empty()) throw Error(Errc::empty_filter, "tag filter has no entries");
    if (!(meters >= 0.0)) throw Error(Errc::invalid_argument, "expansion must be >= 0");
    SamplingResult res;
    for (const auto& f : features) {
        auto group = filter.match(f.tags);
        if (!group) continue;
        if (f.boundary.size() < kMinContourPoints) {
            ++res.skipped_no_contour;
            continue;
        }
        const GeoBox raw = enclosing_geobox(f.boundary);
        if (!raw.intersects(aoi)) {
            ++res.skipped_outside;
            continue;
        }
        GeoBox grown;
        try {
            grown = expand_geobox(raw, meters);
        } catch (const Error& e) {
            if (e.code() != Errc::polar_unsupported) throw;
            ++res.skipped_polar;
            continue;
        }
        std::string tag_group = group->first + "=" + group->second;
        res.rois.push_back(RoiDescriptor{tag_group + "/" + std::to_string(f.id), f.id,
                                         std::move(tag_group), grown});
    }
    return res;
}

inline json to_json(const RoiDescriptor& r) {
    json j;
    j["roi_id"] = r.roi_id;
    j["feature"] = r.source_feature;
    j["tag_group"] = r.tag_group;
    j["min_lat"] = r.geo.min_lat;
    j["min_lon"] = r.geo.min_lon;
    j["max_lat"] = r.geo.max_lat;
    j["max_lon"] = r.geo.max_lon;
    return j;
}

inline RoiDescriptor roi_from_json(const json& j) {
    RoiDescriptor r;
    r.roi_id = field<std::string>(j, "roi_id");
    r.source_feature = field<std::int64_t>(j, "feature");
    r.tag_group = field<std::string>(j, "tag_group");
    r.geo = GeoBox{field<double>(j, "min_lat"), field<double>(j, "min_lon"),
                   field<double>(j, "max_lat"), field<double>(j, "max_lon")};
    if (!r.geo.valid()) throw Error(Errc::invalid_argument, "ROI " + r.roi_id + " has an inverted box");
    return r;
}

inline std::string write_roi_jsonl(const std::vector<RoiDescriptor>& rois) {
    std::string out;
    for (const auto& r : rois) out += to_json(r).dump() + "\n";
    return out;
}

inline std::vector<RoiDescriptor> read_roi_jsonl(const std::filesystem::path& path) {
    std::vector<RoiDescriptor> out;
    for (const auto& j : read_jsonl(path)) out.push_back(roi_from_json(j));
    return out;
}

}  // namespace geocount
