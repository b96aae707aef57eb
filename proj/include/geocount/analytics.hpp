#pragma once

// Counting, temporal change summaries, expected-behavior indicator rules and
// inverse-distance-weighted heatmaps.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "geocount/detection.hpp"
#include "geocount/osm.hpp"

namespace geocount {

struct CountRecord {
    std::string roi_id;
    std::string timestamp;
    int class_id = 0;
    std::size_t count = 0;
    friend bool operator==(const CountRecord&, const CountRecord&) = default;
};

/// One record per class present, ascending class id.
inline std::vector<CountRecord> count_by_class(const DetectionSet& ds) {
    std::map<int, std::size_t> tally;
    for (const auto& r : ds.regions) ++tally[r.class_id];
    std::vector<CountRecord> out;
    out.reserve(tally.size());
    for (const auto& [cls, n] : tally) out.push_back({ds.roi_id, ds.timestamp, cls, n});
    return out;
}

/// Stable ascending sort by count.
template <typename Label>
std::vector<std::pair<Label, long long>> sort_samples(std::vector<std::pair<Label, long long>> series) {
    std::stable_sort(series.begin(), series.end(),
                     [](const auto& a, const auto& b) { return a.second < b.second; });
    return series;
}

struct TimeSeries {
    std::string roi_id;
    int class_id = 0;
    std::vector<std::pair<std::string, long long>> points;  ///< (timestamp, count)

    /// Sorts by timestamp and rejects repeated timestamps.
    void normalize() {
        std::sort(points.begin(), points.end());
        for (std::size_t i = 1; i < points.size(); ++i)
            if (points[i].first == points[i - 1].first)
                throw Error(Errc::invalid_argument,
                            "duplicate timestamp " + points[i].first + " in " + roi_id);
    }
};

enum class Trend { increase, decrease, stable };
enum class Variation { small, medium, large };

constexpr std::string_view to_string(Trend t) {
    switch (t) {
        case Trend::increase: return "increase";
        case Trend::decrease: return "decrease";
        case Trend::stable: return "stable";
    }
    return "stable";
}

constexpr std::string_view to_string(Variation v) {
    switch (v) {
        case Variation::small: return "small";
        case Variation::medium: return "medium";
        case Variation::large: return "large";
    }
    return "small";
}

inline Trend parse_trend(std::string_view s) {
    if (s == "increase") return Trend::increase;
    if (s == "decrease") return Trend::decrease;
    if (s == "stable") return Trend::stable;
    throw Error(Errc::invalid_argument, "unknown trend '" + std::string(s) + "'");
}

/// Cutoffs on max - min. The defaults bracket deltas labeled small (12, 25),
/// medium (81, 103) and large (702, 720).
struct VariationThresholds {
    long long small_max = 30;
    long long medium_max = 150;
};

struct ChangeReport {
    std::string roi_id;
    int class_id = 0;
    long long min_count = 0;
    long long max_count = 0;
    long long delta = 0;
    Variation variation = Variation::small;
    Trend trend = Trend::stable;
    long long first = 0;
    long long last = 0;
};

inline ChangeReport change_report(const TimeSeries& ts, const VariationThresholds& th = {}) {
    if (ts.points.size() < 2)
        throw Error(Errc::insufficient_history,
                    ts.roi_id + " has " + std::to_string(ts.points.size()) + " sample(s), need 2");
    ChangeReport r;
    r.roi_id = ts.roi_id;
    r.class_id = ts.class_id;
    auto [mn, mx] = std::minmax_element(ts.points.begin(), ts.points.end(),
                                        [](const auto& a, const auto& b) { return a.second < b.second; });
    r.min_count = mn->second;
    r.max_count = mx->second;
    r.delta = r.max_count - r.min_count;
    r.variation = r.delta <= th.small_max    ? Variation::small
                  : r.delta <= th.medium_max ? Variation::medium
                                             : Variation::large;
    r.first = ts.points.front().second;
    r.last = ts.points.back().second;
    const long long change = r.last - r.first;
    r.trend = std::llabs(change) <= th.small_max ? Trend::stable
              : change > 0                      ? Trend::increase
                                                : Trend::decrease;
    return r;
}

struct IndicatorRule {
    std::string tag_group;
    Trend expected = Trend::stable;
    std::set<Trend> alert_on;

    void validate() const {
        if (alert_on.count(expected))
            throw Error(Errc::invalid_argument, "rule for " + tag_group + " alerts on its expected trend");
    }

    /// Stable supermarkets, shrinking schools, growing rental lots.
    static std::vector<IndicatorRule> defaults() {
        return {
            {"shop=supermarket", Trend::stable, {Trend::increase, Trend::decrease}},
            {"amenity=school", Trend::decrease, {Trend::stable, Trend::increase}},
            {"amenity=car_rental", Trend::increase, {Trend::decrease}},
        };
    }
};

enum class IndicatorStatus { ok, alert };

struct IndicatorResult {
    std::string roi_id;
    IndicatorStatus status = IndicatorStatus::ok;
    std::optional<IndicatorRule> rule;
    std::optional<Trend> observed;
};

/// Status per ROI descriptor. ROIs without a report or without a rule are ok.
inline std::vector<IndicatorResult> evaluate_indicators(const std::vector<ChangeReport>& reports,
                                                        const std::vector<RoiDescriptor>& rois,
                                                        const std::vector<IndicatorRule>& rules) {
    for (const auto& r : rules) r.validate();
    std::map<std::string, const ChangeReport*> by_roi;
    for (const auto& rep : reports) by_roi.emplace(rep.roi_id, &rep);
    std::vector<IndicatorResult> out;
    for (const auto& roi : rois) {
        IndicatorResult res{roi.roi_id, IndicatorStatus::ok, std::nullopt, std::nullopt};
        auto rule = std::find_if(rules.begin(), rules.end(),
                                 [&](const IndicatorRule& r) { return r.tag_group == roi.tag_group; });
        if (rule != rules.end()) res.rule = *rule;
        if (auto it = by_roi.find(roi.roi_id); it != by_roi.end()) {
            res.observed = it->second->trend;
            if (res.rule && res.rule->alert_on.count(*res.observed)) res.status = IndicatorStatus::alert;
        }
        out.push_back(std::move(res));
    }
    return out;
}

struct HeatmapGrid {
    GeoBox geo;
    int rows = 0;
    int cols = 0;
    std::vector<double> values;  ///< row-major, row 0 at max_lat

    [[nodiscard]] double at(int r, int c) const {
        return values[static_cast<std::size_t>(r) * cols + c];
    }
    [[nodiscard]] GeoPoint cell_center(int r, int c) const {
        const double dlat = (geo.max_lat - geo.min_lat) / rows;
        const double dlon = (geo.max_lon - geo.min_lon) / cols;
        return {geo.max_lat - (r + 0.5) * dlat, geo.min_lon + (c + 0.5) * dlon};
    }
};

struct GeoSample {
    GeoPoint pos;
    double value = 0.0;
};

/// Cells closer than this (degrees, per axis) to a sample take its value.
inline constexpr double kCoincidentDeg = 1e-9;

inline HeatmapGrid idw_heatmap(const std::vector<GeoSample>& samples, const GeoBox& geo, int rows,
                               int cols, double power = 2.0) {
    if (samples.empty()) throw Error(Errc::no_samples, "heatmap needs at least one sample");
    if (rows < 1 || cols < 1) throw Error(Errc::invalid_argument, "heatmap grid must be non-empty");
    if (!(power > 0.0)) throw Error(Errc::invalid_argument, "IDW power must be > 0");
    if (!geo.valid()) throw Error(Errc::invalid_argument, "heatmap extent is inverted");
    HeatmapGrid grid{geo, rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols)};
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const GeoPoint p = grid.cell_center(r, c);
            double num = 0.0, den = 0.0;
            std::optional<double> exact;
            for (const auto& s : samples) {
                if (std::abs(s.pos.lat - p.lat) <= kCoincidentDeg &&
                    std::abs(s.pos.lon - p.lon) <= kCoincidentDeg) {
                    exact = s.value;
                    break;
                }
                const double w = std::pow(ground_distance_m(p, s.pos), -power);
                num += w * s.value;
                den += w;
            }
            grid.values[static_cast<std::size_t>(r) * cols + c] = exact ? *exact : num / den;
        }
    }
    return grid;
}

/// Linear min-max normalization to 8-bit; a flat grid renders black.
inline Raster render_heatmap(const HeatmapGrid& g) {
    Raster img(g.cols, g.rows, 1);
    const auto [mn, mx] = std::minmax_element(g.values.begin(), g.values.end());
    const double lo = *mn, span = *mx - *mn;
    for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c)
            img.at(c, r) = span > 0.0
                               ? static_cast<std::uint8_t>(std::lround(255.0 * (g.at(r, c) - lo) / span))
                               : 0;
    return img;
}

}  // namespace geocount
