#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <string>

#include "geocount/osm.hpp"

using namespace geocount;

namespace {

const char* kSchoolWay = R"(<?xml version="1.0" encoding="UTF-8"?>
<osm version="0.6">
  <node id="1" lat="-23.5500" lon="-46.6400"/>
  <node id="2" lat="-23.5500" lon="-46.6390"/>
  <node id="3" lat="-23.5490" lon="-46.6390"/>
  <node id="4" lat="-23.5490" lon="-46.6400"/>
  <way id="10">
    <nd ref="1"/><nd ref="2"/><nd ref="3"/><nd ref="4"/>
    <tag k="amenity" v="school"/>
    <tag k="name" v="Escola"/>
  </way>
</osm>)";

OsmFeature way(std::int64_t id, std::vector<Tag> tags, std::vector<GeoPoint> pts) {
    return OsmFeature{id, OsmKind::way, std::move(tags), std::move(pts)};
}

std::vector<GeoPoint> square(double lat, double lon, double d = 0.001) {
    return {{lat, lon}, {lat, lon + d}, {lat + d, lon + d}, {lat + d, lon}};
}

}  // namespace

TEST(ParseOsm, TaggedNodeIsSinglePointFeature) {
    const auto ex = parse_osm_xml(R"(<osm><node id="7" lat="1.5" lon="2.5"><tag k="shop" v="mall"/></node>
                                     <node id="8" lat="0" lon="0"/></osm>)");
    ASSERT_EQ(ex.features.size(), 1u);
    EXPECT_EQ(ex.features[0].id, 7);
    EXPECT_EQ(ex.features[0].kind, OsmKind::node);
    ASSERT_EQ(ex.features[0].boundary.size(), 1u);
    EXPECT_EQ(ex.features[0].boundary[0].lat, 1.5);
}

TEST(ParseOsm, WayResolvesRefsInOrder) {
    const auto ex = parse_osm_xml(kSchoolWay);
    ASSERT_EQ(ex.features.size(), 1u);
    const auto& f = ex.features[0];
    EXPECT_EQ(f.id, 10);
    EXPECT_EQ(f.kind, OsmKind::way);
    ASSERT_EQ(f.boundary.size(), 4u);
    EXPECT_EQ(f.boundary[1].lon, -46.6390);
    EXPECT_EQ(f.boundary[3].lat, -23.5490);
    EXPECT_EQ(f.tags.size(), 2u);
    EXPECT_EQ(ex.unresolved_refs, 0u);
}

TEST(ParseOsm, EmptyDocumentAndUnknownElements) {
    EXPECT_TRUE(parse_osm_xml("<osm/>").features.empty());
    const auto ex = parse_osm_xml(R"(<osm><bounds minlat="0"/><relation id="3"><member ref="1"/>
                                     <tag k="amenity" v="school"/></relation></osm>)");
    EXPECT_TRUE(ex.features.empty());
}

TEST(ParseOsm, UnresolvedRefsSkippedAndCounted) {
    const auto ex = parse_osm_xml(R"(<osm><node id="1" lat="0" lon="0"/>
        <way id="2"><nd ref="1"/><nd ref="99"/><nd ref="98"/><tag k="shop" v="mall"/></way></osm>)");
    ASSERT_EQ(ex.features.size(), 1u);
    EXPECT_EQ(ex.features[0].boundary.size(), 1u);
    EXPECT_EQ(ex.unresolved_refs, 2u);
}

TEST(ParseOsm, WayMayReferenceLaterNodes) {
    const auto ex = parse_osm_xml(R"(<osm><way id="2"><nd ref="1"/><nd ref="3"/><tag k="shop" v="mall"/></way>
        <node id="1" lat="0" lon="0"/><node id="3" lat="1" lon="1"/></osm>)");
    ASSERT_EQ(ex.features.size(), 1u);
    EXPECT_EQ(ex.features[0].boundary.size(), 2u);
}

TEST(ParseOsm, MalformedXmlReportsOffset) {
    const std::string doc = "<osm><node id=\"1\" lat=\"0\" lon=\"0\"></osm>";
    try {
        (void)parse_osm_xml(doc);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.code(), Errc::parse_failure);
        EXPECT_GT(e.byte_offset(), 0u);
        EXPECT_LE(e.byte_offset(), doc.size());
    }
    EXPECT_THROW((void)parse_osm_xml(""), ParseError);
    EXPECT_THROW((void)parse_osm_xml(R"(<osm><node id="x" lat="0" lon="0"/></osm>)"), ParseError);
    EXPECT_THROW((void)parse_osm_xml(R"(<osm><node id="1" lat="91" lon="0"/></osm>)"), ParseError);
}

TEST(FilterStrategic, DefaultTagList) {
    const auto f = TagFilter::strategic_defaults();
    const std::vector<std::string> expected{"shop=supermarket", "aeroway=aerodrome", "amenity=hospital",
                                            "amenity=university", "amenity=school", "shop=mall",
                                            "amenity=place_of_worship"};
    ASSERT_EQ(f.entries.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i)
        EXPECT_EQ(f.entries[i].first + "=" + f.entries[i].second, expected[i]);
}

TEST(FilterStrategic, KeepsMembersInOrder) {
    const std::vector<OsmFeature> in{way(1, {{"shop", "bakery"}}, {}), way(2, {{"shop", "supermarket"}}, {}),
                                     way(3, {{"name", "x"}, {"amenity", "hospital"}}, {})};
    const auto out = filter_strategic(in, TagFilter::strategic_defaults());
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].id, 2);
    EXPECT_EQ(out[1].id, 3);
}

TEST(FilterStrategic, EmptyFilterRejected) {
    try {
        (void)filter_strategic({}, TagFilter{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::empty_filter);
    }
}

TEST(TagFilterParse, KeyValueEntries) {
    const auto f = TagFilter::parse({"amenity=car_rental", "a=b=c"});
    EXPECT_EQ(f.entries[0], (Tag{"amenity", "car_rental"}));
    EXPECT_EQ(f.entries[1], (Tag{"a", "b=c"}));
    EXPECT_THROW((void)TagFilter::parse({"nokey"}), Error);
}

TEST(SampleLocations, HospitalWayBecomesExpandedRoi) {
    const GeoBox aoi{-1, -1, 1, 1};
    const auto pts = square(0.1, 0.2);
    const auto res = sample_locations(aoi, {way(42, {{"amenity", "hospital"}}, pts)},
                                      TagFilter::strategic_defaults(), 100.0);
    ASSERT_EQ(res.rois.size(), 1u);
    const auto& r = res.rois[0];
    EXPECT_EQ(r.roi_id, "amenity=hospital/42");
    EXPECT_EQ(r.tag_group, "amenity=hospital");
    EXPECT_EQ(r.source_feature, 42);
    const GeoBox expect = expand_geobox(enclosing_geobox(pts), 100.0);
    EXPECT_EQ(r.geo.min_lat, expect.min_lat);
    EXPECT_EQ(r.geo.max_lon, expect.max_lon);
    EXPECT_NEAR(r.geo.min_lat, 0.1 - 100.0 / 111320.0, 1e-12);
}

TEST(SampleLocations, SkipsPointsAndOutsideFeatures) {
    const GeoBox aoi{0, 0, 1, 1};
    const auto res = sample_locations(aoi,
                                      {way(1, {{"amenity", "school"}}, {{0.5, 0.5}}),
                                       way(2, {{"amenity", "school"}}, square(5, 5)),
                                       way(3, {{"amenity", "school"}}, {{0.1, 0.1}, {0.2, 0.2}})},
                                      TagFilter::strategic_defaults(), 100.0);
    EXPECT_TRUE(res.rois.empty());
    EXPECT_EQ(res.skipped_no_contour, 2u);
    EXPECT_EQ(res.skipped_outside, 1u);
}

TEST(SampleLocations, MatchesFirstFilterEntryAndKeepsOverlaps) {
    const GeoBox aoi{0, 0, 1, 1};
    const auto f = TagFilter::strategic_defaults();
    const auto res = sample_locations(
        aoi, {way(1, {{"shop", "mall"}, {"shop", "supermarket"}}, square(0.5, 0.5)),
              way(2, {{"shop", "supermarket"}}, square(0.5, 0.5, 0.0001))},
        f, 50.0);
    ASSERT_EQ(res.rois.size(), 2u);
    EXPECT_EQ(res.rois[0].tag_group, "shop=supermarket");
}

TEST(SampleLocations, PropertiesOnRandomFeatures) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> lat(-60, 60), lon(-120, 120), d(0.0001, 0.01);
    std::uniform_int_distribution<int> tag(0, 9), npts(1, 6);
    const auto filter = TagFilter::strategic_defaults();
    const GeoBox aoi{-30, -60, 30, 60};
    std::vector<OsmFeature> feats;
    for (int i = 0; i < 400; ++i) {
        const int t = tag(rng);
        std::vector<Tag> tags;
        if (t < 7) tags.push_back(filter.entries[static_cast<std::size_t>(t)]);
        else tags.emplace_back("shop", "bakery");
        std::vector<GeoPoint> pts;
        const double a = lat(rng), o = lon(rng);
        for (int k = npts(rng); k > 0; --k) pts.push_back({a + d(rng), o + d(rng)});
        feats.push_back(way(i, tags, pts));
    }
    const auto all = sample_locations(aoi, feats, filter, 150.0);
    EXPECT_LE(all.rois.size(), feats.size());
    for (const auto& r : all.rois) {
        const auto& f = feats[static_cast<std::size_t>(r.source_feature)];
        ASSERT_TRUE(filter.match(f.tags));
        EXPECT_TRUE(r.geo.contains(enclosing_geobox(f.boundary)));
    }
    // Per-feature independence: splitting the input and concatenating matches.
    const std::vector<OsmFeature> a(feats.begin(), feats.begin() + 150), b(feats.begin() + 150, feats.end());
    auto ra = sample_locations(aoi, a, filter, 150.0).rois;
    const auto rb = sample_locations(aoi, b, filter, 150.0).rois;
    ra.insert(ra.end(), rb.begin(), rb.end());
    ASSERT_EQ(ra.size(), all.rois.size());
    for (std::size_t i = 0; i < ra.size(); ++i) EXPECT_EQ(ra[i].roi_id, all.rois[i].roi_id);
}

TEST(RoiJson, FieldNamesAndRoundTrip) {
    const RoiDescriptor r{"amenity=school/10", 10, "amenity=school", {1, 2, 3, 4}};
    const json j = to_json(r);
    std::vector<std::string> keys;
    for (auto& [k, v] : j.items()) keys.push_back(k);
    EXPECT_EQ(keys, (std::vector<std::string>{"roi_id", "feature", "tag_group", "min_lat", "min_lon",
                                              "max_lat", "max_lon"}));
    const auto back = roi_from_json(j);
    EXPECT_EQ(back.roi_id, r.roi_id);
    EXPECT_EQ(back.geo.max_lon, 4.0);
}
