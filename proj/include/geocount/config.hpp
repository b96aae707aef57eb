#pragma once

// Pipeline configuration: one JSON document. Paths may be overridden through
// GEOCOUNT_PATH_<NAME> environment variables (name upper-cased), e.g.
// GEOCOUNT_PATH_ANNOTATIONS. Relative paths resolve against the config file.

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geocount/analytics.hpp"
#include "geocount/detector.hpp"
#include "geocount/evaluation.hpp"
#include "geocount/jsonl.hpp"
#include "geocount/merge.hpp"
#include "geocount/osm.hpp"

namespace geocount {

inline constexpr double kDefaultExpandMeters = 100.0;
inline constexpr double kTargetGsd = 0.3;
inline constexpr double kAutoUpsampleAbove = 0.4;

struct HeatmapConfig {
    int rows = 32;
    int cols = 32;
    double power = 2.0;
};

struct PipelineConfig {
    std::optional<GeoBox> aoi;
    TagFilter tag_filter = TagFilter::strategic_defaults();
    double expand_m = kDefaultExpandMeters;
    json backends = json::object();
    json ensemble = json::object();
    std::vector<SizeGroup> groups{SizeGroup::small, SizeGroup::medium, SizeGroup::large};
    MergeConfig merge;
    VariationThresholds variation;
    std::vector<IndicatorRule> rules = IndicatorRule::defaults();
    HeatmapConfig heatmap;
    std::string count_class = "small-car";
    double target_gsd = kTargetGsd;
    double auto_upsample_above = kAutoUpsampleAbove;
    double match_iou = kDefaultMatchIou;
    double min_annotations = kDefaultMinAnnotations;
    std::map<std::string, std::filesystem::path> paths;
    std::filesystem::path base_dir = ".";

    [[nodiscard]] std::optional<std::filesystem::path> path(const std::string& name) const {
        std::string env = "GEOCOUNT_PATH_" + name;
        for (auto& c : env) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (const char* v = std::getenv(env.c_str()); v && *v) return resolve(v);
        if (auto it = paths.find(name); it != paths.end()) return resolve(it->second);
        return std::nullopt;
    }

    [[nodiscard]] std::filesystem::path resolve(const std::filesystem::path& p) const {
        return p.is_absolute() ? p : base_dir / p;
    }
};

namespace detail {

inline GeoBox geobox_from_json(const json& j) {
    GeoBox b{field<double>(j, "min_lat"), field<double>(j, "min_lon"), field<double>(j, "max_lat"),
             field<double>(j, "max_lon")};
    if (!b.valid()) throw Error(Errc::invalid_argument, "box has min > max");
    return b;
}

inline IntRange int_range(const json& j, const char* key, IntRange fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (it->is_number_integer()) {
        const int v = it->get<int>();
        return {v, v};
    }
    auto v = it->get<std::vector<int>>();
    if (v.size() != 2) throw Error(Errc::invalid_argument, std::string(key) + " must be [lo, hi]");
    return {v[0], v[1]};
}

inline DoubleRange double_range(const json& j, const char* key, DoubleRange fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (it->is_number()) {
        const double v = it->get<double>();
        return {v, v};
    }
    auto v = it->get<std::vector<double>>();
    if (v.size() != 2) throw Error(Errc::invalid_argument, std::string(key) + " must be [lo, hi]");
    return {v[0], v[1]};
}

}  // namespace detail

inline NoiseModel noise_from_json(const json& j, const ClassRegistry& reg) {
    NoiseModel n;
    n.miss_rate = field_or<double>(j, "miss_rate", 0.0);
    n.fp_per_megapixel = field_or<double>(j, "fp_per_megapixel", 0.0);
    n.jitter_sigma = field_or<double>(j, "jitter_sigma", 0.0);
    n.score_tp = detail::double_range(j, "score_tp", n.score_tp);
    n.score_fp = detail::double_range(j, "score_fp", n.score_fp);
    n.fp_size = detail::int_range(j, "fp_size", n.fp_size);
    if (auto c = field_or<std::string>(j, "fp_class", ""); !c.empty()) n.fp_class = reg.id(c);
    n.validate();
    return n;
}

inline SceneSpec scene_spec_from_json(const json& j, const ClassRegistry& reg) {
    SceneSpec s;
    s.width = field_or<int>(j, "width", s.width);
    s.height = field_or<int>(j, "height", s.height);
    s.channels = field_or<int>(j, "channels", s.channels);
    s.background = static_cast<std::uint8_t>(field_or<int>(j, "background", s.background));
    s.min_separation = field_or<int>(j, "min_separation", s.min_separation);
    s.timestamps = field_or<std::vector<std::string>>(j, "timestamps", {});
    for (const auto& o : field_or<json>(j, "objects", json::array())) {
        ObjectSpec spec;
        spec.class_id = reg.id(field<std::string>(o, "class"));
        spec.count = detail::int_range(o, "count", {0, 0});
        spec.width = detail::int_range(o, "width", {10, 18});
        spec.height = detail::int_range(o, "height", {6, 12});
        spec.value = static_cast<std::uint8_t>(field_or<int>(o, "value", 200));
        s.objects.push_back(spec);
    }
    s.validate();
    return s;
}

inline PipelineConfig parse_config(const json& j, const std::filesystem::path& base_dir = ".") {
    PipelineConfig c;
    c.base_dir = base_dir;
    if (auto it = j.find("aoi"); it != j.end() && !it->is_null()) c.aoi = detail::geobox_from_json(*it);
    if (auto it = j.find("tag_filter"); it != j.end())
        c.tag_filter = TagFilter::parse(it->get<std::vector<std::string>>());
    c.expand_m = field_or<double>(j, "expand_m", c.expand_m);
    c.backends = field_or<json>(j, "backends", json::object());
    c.ensemble = field_or<json>(j, "ensemble", json::object());
    if (auto it = j.find("groups"); it != j.end()) {
        c.groups.clear();
        for (const auto& g : *it) c.groups.push_back(parse_size_group(g.get<std::string>()));
    }
    if (auto it = j.find("merge"); it != j.end()) {
        c.merge.sigma = field_or<double>(*it, "sigma", c.merge.sigma);
        c.merge.class_aware = field_or<bool>(*it, "class_aware", c.merge.class_aware);
    }
    c.merge.validate();
    if (auto it = j.find("variation"); it != j.end()) {
        c.variation.small_max = field_or<long long>(*it, "small_max", c.variation.small_max);
        c.variation.medium_max = field_or<long long>(*it, "medium_max", c.variation.medium_max);
    }
    if (auto it = j.find("indicator_rules"); it != j.end()) {
        c.rules.clear();
        for (const auto& r : *it) {
            IndicatorRule rule{field<std::string>(r, "tag_group"), parse_trend(field<std::string>(r, "expected")), {}};
            for (const auto& t : field_or<std::vector<std::string>>(r, "alert_on", {}))
                rule.alert_on.insert(parse_trend(t));
            rule.validate();
            c.rules.push_back(std::move(rule));
        }
    }
    if (auto it = j.find("heatmap"); it != j.end()) {
        c.heatmap.rows = field_or<int>(*it, "rows", c.heatmap.rows);
        c.heatmap.cols = field_or<int>(*it, "cols", c.heatmap.cols);
        c.heatmap.power = field_or<double>(*it, "power", c.heatmap.power);
    }
    c.count_class = field_or<std::string>(j, "count_class", c.count_class);
    if (auto it = j.find("gsd"); it != j.end()) {
        c.target_gsd = field_or<double>(*it, "target", c.target_gsd);
        c.auto_upsample_above = field_or<double>(*it, "auto_above", c.auto_upsample_above);
    }
    if (auto it = j.find("evaluation"); it != j.end()) {
        c.match_iou = field_or<double>(*it, "iou", c.match_iou);
        c.min_annotations = field_or<double>(*it, "min_annotations", c.min_annotations);
    }
    const json paths = field_or<json>(j, "paths", json::object());
    for (auto& [k, v] : paths.items()) c.paths[k] = v.get<std::string>();
    return c;
}

inline PipelineConfig load_config(const std::optional<std::filesystem::path>& path) {
    if (!path) return parse_config(json::object());
    json j;
    try {
        j = json::parse(read_file(*path));
    } catch (const json::parse_error& e) {
        throw ParseError(path->string() + ": " + e.what(), e.byte);
    }
    return parse_config(j, path->has_parent_path() ? path->parent_path() : ".");
}

inline std::shared_ptr<DetectorBackend> make_backend(const json& spec, const PipelineConfig& cfg,
                                                     std::shared_ptr<const ClassRegistry> reg,
                                                     int workers) {
    const auto type = field<std::string>(spec, "type");
    if (type == "mock") {
        AnnotationIndex truth;
        if (auto p = field_or<std::string>(spec, "annotations", ""); !p.empty())
            truth = read_annotation_jsonl(cfg.resolve(p), *reg);
        else if (auto ap = cfg.path("annotations"))
            truth = read_annotation_jsonl(*ap, *reg);
        const NoiseModel noise = noise_from_json(field_or<json>(spec, "noise", json::object()), *reg);
        return std::make_shared<OracleBackend>(std::move(truth), noise,
                                               field_or<std::uint64_t>(spec, "seed", 0),
                                               field_or<double>(spec, "min_visible", 1.0));
    }
    if (type == "replay") {
        return ReplayBackend::from_records(read_jsonl(cfg.resolve(field<std::string>(spec, "path"))), *reg,
                                           field_or<std::string>(spec, "detector", ""),
                                           field_or<double>(spec, "min_visible", 1.0));
    }
    if (type == "external") {
        auto cmd = field<std::vector<std::string>>(spec, "command");
        return std::make_shared<ExternalProcessBackend>(
            std::move(cmd), std::move(reg), field_or<int>(spec, "instances", std::max(1, workers)));
    }
    throw Error(Errc::invalid_argument, "unknown backend type '" + type + "'");
}

/// Builds the ensemble. Without explicit "detectors" the five-pass preset is
/// used, wired to backends named "vanilla" and "multires".
inline EnsembleConfig build_ensemble(const PipelineConfig& cfg, int workers) {
    auto reg = std::shared_ptr<const ClassRegistry>(&ClassRegistry::xview(), [](const ClassRegistry*) {});
    std::map<std::string, std::shared_ptr<DetectorBackend>> backends;
    for (auto& [name, spec] : cfg.backends.items()) backends[name] = make_backend(spec, cfg, reg, workers);
    auto lookup = [&](const std::string& name) {
        auto it = backends.find(name);
        if (it == backends.end()) throw Error(Errc::invalid_argument, "no backend named '" + name + "'");
        return it->second;
    };

    EnsembleConfig ens;
    const int block = field_or<int>(cfg.ensemble, "block", kDefaultBlock);
    if (auto it = cfg.ensemble.find("detectors"); it != cfg.ensemble.end()) {
        for (const auto& d : *it) {
            DetectorConfig dc;
            dc.name = field<std::string>(d, "name");
            dc.scale = field_or<double>(d, "scale", 1.0);
            dc.overlap = field_or<int>(d, "overlap", 0);
            dc.threshold = field<double>(d, "threshold");
            dc.backend_name = field<std::string>(d, "backend");
            dc.backend = lookup(dc.backend_name);
            for (const auto& g : field<std::vector<std::string>>(d, "size_groups"))
                dc.size_groups.push_back(parse_size_group(g));
            dc.block = field_or<int>(d, "block", block);
            ens.detectors.push_back(std::move(dc));
        }
    } else {
        ens = preset_ensemble(lookup("vanilla"), lookup("multires"));
        for (auto& d : ens.detectors) d.block = block;
    }
    ens.registry = reg;
    ens.validate();
    return ens;
}

}  // namespace geocount
