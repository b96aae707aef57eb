#pragma once

// Pipeline stages as callable commands. Each reads the previous stage's files
// and writes its own; the CLI is a thin argument layer over these.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "geocount/analytics.hpp"
#include "geocount/config.hpp"
#include "geocount/detector.hpp"
#include "geocount/evaluation.hpp"
#include "geocount/image_io.hpp"
#include "geocount/osm.hpp"
#include "geocount/parallel.hpp"
#include "geocount/random.hpp"
#include "geocount/synth.hpp"

namespace geocount {

namespace fs = std::filesystem;

enum class ExitCode : int { ok = 0, input_error = 2, insufficient_data = 3, backend_failure = 4 };

inline ExitCode exit_code_for(Errc e) {
    switch (e) {
        case Errc::insufficient_history:
        case Errc::no_samples:
        case Errc::no_eligible_images: return ExitCode::insufficient_data;
        case Errc::backend_failure: return ExitCode::backend_failure;
        default: return ExitCode::input_error;
    }
}

/// One ROI image on disk, as listed in a manifest line.
struct ManifestEntry {
    std::string roi_id;
    std::string timestamp;
    fs::path image;  ///< resolved against the manifest's directory
    GeoTransform transform;

    [[nodiscard]] std::string key() const { return image_key(roi_id, timestamp); }
};

inline json to_json(const ManifestEntry& m, const fs::path& relative_to) {
    json j;
    j["roi_id"] = m.roi_id;
    j["timestamp"] = m.timestamp;
    j["image"] = m.image.lexically_relative(relative_to).generic_string();
    j["origin_lat"] = m.transform.origin.lat;
    j["origin_lon"] = m.transform.origin.lon;
    j["gsd"] = m.transform.gsd_x;
    return j;
}

inline std::vector<ManifestEntry> read_manifest(const fs::path& path) {
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    std::vector<ManifestEntry> out;
    for (const auto& j : read_jsonl(path)) {
        ManifestEntry m;
        m.roi_id = field<std::string>(j, "roi_id");
        m.timestamp = field_or<std::string>(j, "timestamp", "");
        const fs::path img = field<std::string>(j, "image");
        m.image = img.is_absolute() ? img : dir / img;
        m.transform.origin = {field<double>(j, "origin_lat"), field<double>(j, "origin_lon")};
        m.transform.gsd_x = m.transform.gsd_y = field<double>(j, "gsd");
        if (!(m.transform.gsd_x > 0.0)) throw Error(Errc::invalid_argument, "gsd must be > 0 for " + m.key());
        out.push_back(std::move(m));
    }
    return out;
}

/// File-name-safe form of an image key.
inline std::string file_stem(const std::string& key) {
    std::string s = key;
    for (auto& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.') c = '_';
    return s;
}

// ---------------------------------------------------------------- sample

inline SamplingResult cmd_sample(const PipelineConfig& cfg, const fs::path& osm_path, const fs::path& out) {
    const OsmExtract extract = parse_osm_xml(read_file(osm_path));
    const auto strategic = filter_strategic(extract.features, cfg.tag_filter);
    const GeoBox world{-90.0, -180.0, 90.0, 180.0};
    SamplingResult res = sample_locations(cfg.aoi.value_or(world), strategic, cfg.tag_filter, cfg.expand_m);
    write_file(out, write_roi_jsonl(res.rois));
    return res;
}

// ---------------------------------------------------------------- extract

struct ExtractResult {
    std::vector<ManifestEntry> entries;
    std::size_t skipped_outside = 0;
};

/// Pixel window covering a geographic box under `t`, clamped to nothing.
inline PixelWindow window_for(const GeoTransform& t, const GeoBox& b) {
    const auto [x1, y1] = geo_to_pixel(t, {b.max_lat, b.min_lon});
    const auto [x2, y2] = geo_to_pixel(t, {b.min_lat, b.max_lon});
    return {static_cast<int>(std::floor(x1)), static_cast<int>(std::floor(y1)),
            static_cast<int>(std::ceil(x2)), static_cast<int>(std::ceil(y2))};
}

/// Crops every ROI from a georeferenced scene. The georef sidecar holds
/// origin_lat, origin_lon (top-left corner), gsd and an optional timestamp.
inline ExtractResult cmd_extract(const fs::path& scene_path, const fs::path& georef_path,
                                 const fs::path& rois_path, const fs::path& out_dir) {
    json g;
    try {
        g = json::parse(read_file(georef_path));
    } catch (const json::parse_error& e) {
        throw ParseError(georef_path.string() + ": " + e.what(), e.byte);
    }
    GeoTransform t;
    t.origin = {field<double>(g, "origin_lat"), field<double>(g, "origin_lon")};
    t.gsd_x = t.gsd_y = field<double>(g, "gsd");
    if (!(t.gsd_x > 0.0)) throw Error(Errc::invalid_argument, "gsd must be > 0");
    const std::string ts = field_or<std::string>(g, "timestamp", "");

    const Raster scene = read_raster(scene_path);
    ExtractResult res;
    for (const auto& roi : read_roi_jsonl(rois_path)) {
        PixelWindow w = window_for(t, roi.geo);
        w.x1 = std::clamp(w.x1, 0, scene.width());
        w.x2 = std::clamp(w.x2, 0, scene.width());
        w.y1 = std::clamp(w.y1, 0, scene.height());
        w.y2 = std::clamp(w.y2, 0, scene.height());
        if (w.width() <= 0 || w.height() <= 0) {
            ++res.skipped_outside;
            continue;
        }
        ManifestEntry m;
        m.roi_id = roi.roi_id;
        m.timestamp = ts;
        m.transform = t;
        m.transform.origin = pixel_to_geo(t, w.x1, w.y1);
        m.image = out_dir / (file_stem(m.key()) + ".png");
        write_raster(m.image, crop(scene, w));
        res.entries.push_back(std::move(m));
    }
    std::string manifest;
    for (const auto& m : res.entries) manifest += to_json(m, out_dir).dump() + "\n";
    write_file(out_dir / "manifest.jsonl", manifest);
    return res;
}

// ---------------------------------------------------------------- detect

struct DetectCommandOptions {
    int workers = 1;
    std::optional<double> threshold_override;
    std::optional<double> sigma;
};

/// Fused detections for every manifest entry, in manifest order. ROIs whose
/// GSD exceeds the auto-upsample limit are resampled to the target GSD and
/// get the raised upsampled-imagery threshold as a floor.
inline std::vector<DetectionSet> run_detect(const PipelineConfig& cfg, const std::vector<ManifestEntry>& entries,
                                            const DetectCommandOptions& opt) {
    if (entries.empty()) return {};
    const EnsembleConfig ens = build_ensemble(cfg, opt.workers);
    MergeConfig merge = cfg.merge;
    if (opt.sigma) merge.sigma = *opt.sigma;
    merge.validate();

    const int workers = std::max(1, opt.workers);
    const bool per_roi = entries.size() > 1;
    std::vector<DetectionSet> out(entries.size());
    parallel_for(entries.size(), per_roi ? workers : 1, [&](std::size_t i) {
        const auto& m = entries[i];
        RoiImage img{m.roi_id, m.timestamp, read_raster(m.image), m.transform};
        DetectOptions d;
        d.workers = per_roi ? 1 : workers;
        d.threshold_override = opt.threshold_override;
        if (m.transform.gsd_x > cfg.auto_upsample_above) {
            d.extra_scale = gsd_scale(m.transform.gsd_x, cfg.target_gsd);
            d.threshold_override = std::max(opt.threshold_override.value_or(0.0), kUpsampledThreshold);
        }
        out[i] = DetectionSet{m.roi_id, m.timestamp, detect_roi(img, ens, merge, cfg.groups, d)};
    });
    return out;
}

inline std::vector<DetectionSet> cmd_detect(const PipelineConfig& cfg, const fs::path& manifest_path,
                                            const fs::path& out, const DetectCommandOptions& opt) {
    auto sets = run_detect(cfg, read_manifest(manifest_path), opt);
    write_file(out, write_detection_jsonl(sets, ClassRegistry::xview()));
    return sets;
}

// ---------------------------------------------------------------- report

/// Counts keyed by (roi, timestamp, class).
using CountTable = std::map<std::tuple<std::string, std::string, int>, long long>;

inline CountTable counts_from_detections(const std::vector<DetectionSet>& sets) {
    CountTable t;
    for (const auto& s : sets)
        for (const auto& c : count_by_class(s)) t[{c.roi_id, c.timestamp, c.class_id}] += c.count;
    return t;
}

/// Reads "roi_id,timestamp,class,count" rows (header required).
inline CountTable read_counts_csv(const fs::path& path, const ClassRegistry& reg) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line) || line.rfind("roi_id,timestamp,class,count", 0) != 0)
        throw ParseError(path.string() + ": expected header roi_id,timestamp,class,count", 0);
    CountTable t;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        if (f.size() != 4)
            throw Error(Errc::parse_failure, path.string() + " line " + std::to_string(line_no) + ": need 4 fields");
        long long n = 0;
        try {
            std::size_t used = 0;
            n = std::stoll(f[3], &used);
            if (used != f[3].size() || n < 0) throw std::invalid_argument("count");
        } catch (const std::exception&) {
            throw Error(Errc::parse_failure, path.string() + " line " + std::to_string(line_no) + ": bad count");
        }
        t[{f[0], f[1], reg.id(f[2])}] += n;
    }
    return t;
}

inline std::string write_counts_csv(const CountTable& t, const ClassRegistry& reg) {
    std::string out = "roi_id,timestamp,class,count\n";
    for (const auto& [k, n] : t) {
        const auto& [roi, ts, cls] = k;
        out += roi + "," + ts + "," + reg.name(cls) + "," + std::to_string(n) + "\n";
    }
    return out;
}

inline json to_json(const ChangeReport& r, const ClassRegistry& reg) {
    json j;
    j["roi_id"] = r.roi_id;
    j["class"] = reg.name(r.class_id);
    j["min"] = r.min_count;
    j["max"] = r.max_count;
    j["delta"] = r.delta;
    j["variation"] = to_string(r.variation);
    j["trend"] = to_string(r.trend);
    j["first"] = r.first;
    j["last"] = r.last;
    return j;
}

struct ReportInputs {
    fs::path counts;                    ///< detection JSONL or counts CSV (by .csv extension)
    std::optional<fs::path> manifest;   ///< zero-fills images without detections
    std::optional<fs::path> rois;       ///< enables indicators and the heatmap
};

struct ReportResult {
    CountTable counts;
    std::vector<ChangeReport> changes;
    std::vector<IndicatorResult> indicators;
    std::optional<HeatmapGrid> heatmap;
};

/// Writes counts.csv, changes.jsonl and, with ROI descriptors,
/// indicators.jsonl, heatmap.json and heatmap.png into `out_dir`.
/// Series with one timestamp are left out of the change report; if none has
/// two, InsufficientHistory is raised after counts.csv is written.
inline ReportResult cmd_report(const PipelineConfig& cfg, const ReportInputs& in, const fs::path& out_dir) {
    const auto& reg = ClassRegistry::xview();
    ReportResult res;
    res.counts = in.counts.extension() == ".csv" ? read_counts_csv(in.counts, reg)
                                                  : counts_from_detections(read_detection_jsonl(in.counts, reg));

    // Timestamps per ROI and classes per ROI; missing cells are zero counts.
    std::map<std::string, std::set<std::string>> stamps;
    std::map<std::string, std::set<int>> classes;
    for (const auto& [k, n] : res.counts) {
        stamps[std::get<0>(k)].insert(std::get<1>(k));
        classes[std::get<0>(k)].insert(std::get<2>(k));
    }
    if (in.manifest)
        for (const auto& m : read_manifest(*in.manifest)) stamps[m.roi_id].insert(m.timestamp);
    for (const auto& [roi, cls_set] : classes)
        for (const auto& ts : stamps[roi])
            for (int cls : cls_set) res.counts.try_emplace({roi, ts, cls}, 0);
    write_file(out_dir / "counts.csv", write_counts_csv(res.counts, reg));

    for (const auto& [roi, cls_set] : classes) {
        if (stamps[roi].size() < 2) continue;
        for (int cls : cls_set) {
            TimeSeries s{roi, cls, {}};
            for (const auto& ts : stamps[roi]) s.points.emplace_back(ts, res.counts.at({roi, ts, cls}));
            s.normalize();
            res.changes.push_back(change_report(s, cfg.variation));
        }
    }
    if (res.changes.empty())
        throw Error(Errc::insufficient_history, "no ROI has counts at two or more timestamps");
    std::string changes;
    for (const auto& c : res.changes) changes += to_json(c, reg).dump() + "\n";
    write_file(out_dir / "changes.jsonl", changes);

    if (!in.rois) return res;
    const auto rois = read_roi_jsonl(*in.rois);
    const int count_cls = reg.id(cfg.count_class);
    std::vector<ChangeReport> tracked;
    for (const auto& c : res.changes)
        if (c.class_id == count_cls) tracked.push_back(c);

    res.indicators = evaluate_indicators(tracked, rois, cfg.rules);
    std::string ind;
    for (const auto& r : res.indicators) {
        json j;
        j["roi_id"] = r.roi_id;
        j["status"] = r.status == IndicatorStatus::alert ? "alert" : "ok";
        j["expected"] = r.rule ? json(to_string(r.rule->expected)) : json(nullptr);
        j["observed"] = r.observed ? json(to_string(*r.observed)) : json(nullptr);
        ind += j.dump() + "\n";
    }
    write_file(out_dir / "indicators.jsonl", ind);

    std::map<std::string, const RoiDescriptor*> by_id;
    for (const auto& r : rois) by_id.emplace(r.roi_id, &r);
    std::vector<GeoSample> samples;
    std::vector<GeoPoint> corners;
    for (const auto& c : tracked) {
        auto it = by_id.find(c.roi_id);
        if (it == by_id.end()) continue;
        samples.push_back({it->second->geo.center(), static_cast<double>(c.delta)});
        corners.push_back({it->second->geo.min_lat, it->second->geo.min_lon});
        corners.push_back({it->second->geo.max_lat, it->second->geo.max_lon});
    }
    if (samples.empty())
        throw Error(Errc::no_samples, "no " + cfg.count_class + " change maps to a known ROI");
    const GeoBox extent = cfg.aoi ? *cfg.aoi : enclosing_geobox(corners);
    res.heatmap = idw_heatmap(samples, extent, cfg.heatmap.rows, cfg.heatmap.cols, cfg.heatmap.power);
    json h;
    h["min_lat"] = extent.min_lat;
    h["min_lon"] = extent.min_lon;
    h["max_lat"] = extent.max_lat;
    h["max_lon"] = extent.max_lon;
    h["rows"] = res.heatmap->rows;
    h["cols"] = res.heatmap->cols;
    h["class"] = cfg.count_class;
    h["values"] = res.heatmap->values;
    write_file(out_dir / "heatmap.json", h.dump() + "\n");
    write_raster(out_dir / "heatmap.png", render_heatmap(*res.heatmap));
    return res;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateInputs {
    std::optional<fs::path> detections;
    std::optional<fs::path> annotations;
    std::optional<fs::path> count_pairs;  ///< CSV "gt,det" rows; replaces image-derived pairs
};

inline std::vector<CountPair> read_count_pairs(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::vector<CountPair> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || (line_no == 1 && !std::isdigit(static_cast<unsigned char>(line[0])))) continue;
        const auto comma = line.find(',');
        try {
            if (comma == std::string::npos) throw std::invalid_argument("comma");
            out.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
        } catch (const std::exception&) {
            throw Error(Errc::parse_failure, path.string() + " line " + std::to_string(line_no) + ": expected gt,det");
        }
    }
    return out;
}

/// Report JSON: per-class AP, the Small/Medium/Large/Score group summary and
/// MAPE over images with more than `min_annotations` of the count class.
/// Metrics without data are null.
inline json cmd_evaluate(const PipelineConfig& cfg, const EvaluateInputs& in, const fs::path& out) {
    const auto& reg = ClassRegistry::xview();
    auto opt_json = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json report;
    report["iou"] = cfg.match_iou;

    std::vector<CountPair> pairs;
    if (in.detections && in.annotations) {
        const AnnotationIndex gt = read_annotation_jsonl(*in.annotations, reg);
        std::map<std::string, std::vector<Region>> dets;
        for (auto& s : read_detection_jsonl(*in.detections, reg)) {
            auto& v = dets[s.key()];
            v.insert(v.end(), s.regions.begin(), s.regions.end());
        }
        const auto ap = per_class_ap(dets, gt, cfg.match_iou);
        json per_class = json::object();
        for (const auto& [cls, v] : ap) per_class[reg.name(cls)] = v;
        report["per_class"] = per_class;
        const GroupReport g = map_by_group(ap, reg);
        report["groups"] = {{"Small", opt_json(g.small)},
                            {"Medium", opt_json(g.medium)},
                            {"Large", opt_json(g.large)},
                            {"Score", opt_json(g.overall)}};

        const int cls = reg.id(cfg.count_class);
        for (const auto& [img, anns] : gt) {
            CountPair p;
            p.gt = static_cast<double>(std::count_if(anns.begin(), anns.end(),
                                                     [&](const Annotation& a) { return a.class_id == cls; }));
            if (auto it = dets.find(img); it != dets.end())
                p.det = static_cast<double>(std::count_if(it->second.begin(), it->second.end(),
                                                          [&](const Region& r) { return r.class_id == cls; }));
            pairs.push_back(p);
        }
    } else if (in.detections || in.annotations) {
        throw Error(Errc::invalid_argument, "detections and annotations must be given together");
    }
    if (in.count_pairs) pairs = read_count_pairs(*in.count_pairs);

    report["count_class"] = cfg.count_class;
    const auto eligible = std::count_if(pairs.begin(), pairs.end(),
                                        [&](const CountPair& p) { return p.gt > cfg.min_annotations; });
    report["mape_images"] = eligible;
    report["mape"] = eligible > 0 ? json(mape(pairs, cfg.min_annotations)) : json(nullptr);
    write_file(out, report.dump(2) + "\n");
    return report;
}

// ---------------------------------------------------------------- synth

struct SynthResult {
    std::vector<ManifestEntry> entries;
    AnnotationIndex annotations;
};

/// Scene spec JSON: the scene fields plus "scenes" (count), "roi_prefix",
/// "origin_lat", "origin_lon" and "gsd". Writes one PNG per (scene,
/// timestamp), manifest.jsonl and annotations.jsonl into `out_dir`.
inline SynthResult cmd_synth(const fs::path& spec_path, const fs::path& out_dir, std::uint64_t seed,
                             int workers) {
    const auto& reg = ClassRegistry::xview();
    json j;
    try {
        j = json::parse(read_file(spec_path));
    } catch (const json::parse_error& e) {
        throw ParseError(spec_path.string() + ": " + e.what(), e.byte);
    }
    const SceneSpec spec = scene_spec_from_json(j, reg);
    const int scenes = field_or<int>(j, "scenes", 1);
    if (scenes < 0) throw Error(Errc::invalid_argument, "scenes must be >= 0");
    const auto prefix = field_or<std::string>(j, "roi_prefix", "scene");
    GeoTransform t;
    t.origin = {field_or<double>(j, "origin_lat", 0.0), field_or<double>(j, "origin_lon", 0.0)};
    t.gsd_x = t.gsd_y = field_or<double>(j, "gsd", kTargetGsd);

    std::vector<ManifestEntry> entries;
    const auto stamps = spec.timestamps.empty() ? std::vector<std::string>{""} : spec.timestamps;
    for (int s = 0; s < scenes; ++s)
        for (const auto& ts : stamps) {
            ManifestEntry m;
            m.roi_id = prefix + "-" + std::to_string(s);
            m.timestamp = ts;
            m.transform = t;
            m.image = out_dir / (file_stem(m.key()) + ".png");
            entries.push_back(std::move(m));
        }

    std::vector<std::vector<Annotation>> anns(entries.size());
    parallel_for(entries.size(), std::max(1, workers), [&](std::size_t i) {
        Scene scene = generate_scene(mix_seed(seed, entries[i].key()), spec);
        write_raster(entries[i].image, scene.raster);
        anns[i] = std::move(scene.annotations);
    });

    SynthResult res;
    std::string manifest;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        manifest += to_json(entries[i], out_dir).dump() + "\n";
        res.annotations[entries[i].key()] = std::move(anns[i]);
    }
    write_file(out_dir / "manifest.jsonl", manifest);
    write_file(out_dir / "annotations.jsonl", write_annotation_jsonl(res.annotations, reg));
    res.entries = std::move(entries);
    return res;
}

}  // namespace geocount
