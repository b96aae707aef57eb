#pragma once

// Detection quality: greedy IoU matching, all-point interpolated average
// precision pooled across images, per-size-group means, and counting MAPE.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include "geocount/annotation.hpp"
#include "geocount/classes.hpp"
#include "geocount/detection.hpp"

namespace geocount {

inline constexpr double kDefaultMatchIou = 0.5;
inline constexpr int kDefaultMinAnnotations = 100;

struct ScoredIndex {
    std::size_t detection = 0;
    double score = 0.0;
};

struct MatchSet {
    std::vector<ScoredIndex> true_positives;
    std::vector<ScoredIndex> false_positives;
    std::size_t false_negatives = 0;
};

/// Matches one image's detections of one class against its ground truth.
/// Detections are visited in descending score order (index breaks ties); each
/// takes the unmatched annotation with the highest IoU and counts as a true
/// positive when that IoU exceeds `iou_thr`.
inline MatchSet match_detections(const std::vector<Region>& dets, const std::vector<Annotation>& gts,
                                 double iou_thr = kDefaultMatchIou) {
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

    MatchSet m;
    std::vector<char> used(gts.size(), 0);
    for (std::size_t d : order) {
        double best = 0.0;
        std::size_t best_gt = gts.size();
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (used[g]) continue;
            const double v = iou(dets[d].box, gts[g].box);
            if (best_gt == gts.size() || v > best) {
                best = v;
                best_gt = g;
            }
        }
        if (best_gt < gts.size() && best > iou_thr) {
            used[best_gt] = 1;
            m.true_positives.push_back({d, dets[d].score});
        } else {
            m.false_positives.push_back({d, dets[d].score});
        }
    }
    m.false_negatives = static_cast<std::size_t>(std::count(used.begin(), used.end(), 0));
    return m;
}

/// All-point interpolated AP over matches pooled from any number of images.
/// Detections sharing a score enter the PR curve together as one operating
/// point. Returns nullopt when there is no ground truth to recall.
inline std::optional<double> average_precision(const std::vector<MatchSet>& matches) {
    std::size_t n_gt = 0;
    std::vector<std::pair<double, bool>> scored;  // (score, is_tp)
    for (const auto& m : matches) {
        n_gt += m.true_positives.size() + m.false_negatives;
        for (const auto& t : m.true_positives) scored.emplace_back(t.score, true);
        for (const auto& f : m.false_positives) scored.emplace_back(f.score, false);
    }
    if (n_gt == 0) return std::nullopt;
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    std::vector<double> recall, precision;
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < scored.size();) {
        std::size_t j = i;
        while (j < scored.size() && scored[j].first == scored[i].first) {
            (scored[j].second ? tp : fp)++;
            ++j;
        }
        recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
        precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
        i = j;
    }
    // Precision envelope: max precision at any recall >= the current one.
    for (std::size_t i = precision.size(); i-- > 1;)
        precision[i - 1] = std::max(precision[i - 1], precision[i]);
    double ap = 0.0, prev_r = 0.0;
    for (std::size_t i = 0; i < recall.size(); ++i) {
        ap += (recall[i] - prev_r) * precision[i];
        prev_r = recall[i];
    }
    return ap;
}

/// Table-style summary: mean AP per size group plus the overall score.
struct GroupReport {
    std::optional<double> small;
    std::optional<double> medium;
    std::optional<double> large;
    std::optional<double> overall;
};

inline GroupReport map_by_group(const std::map<int, double>& per_class_ap, const ClassRegistry& reg) {
    auto mean = [](const std::vector<double>& v) -> std::optional<double> {
        if (v.empty()) return std::nullopt;
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    std::vector<double> s, m, l, all;
    for (const auto& [cls, ap] : per_class_ap) {
        all.push_back(ap);
        switch (reg.group(cls)) {
            case SizeGroup::small: s.push_back(ap); break;
            case SizeGroup::medium: m.push_back(ap); break;
            case SizeGroup::large: l.push_back(ap); break;
        }
    }
    return GroupReport{mean(s), mean(m), mean(l), mean(all)};
}

struct CountPair {
    double gt = 0.0;
    double det = 0.0;
};

/// Mean absolute percentage error (in percent) over pairs with gt > min_annotations.
inline double mape(const std::vector<CountPair>& pairs, double min_annotations = kDefaultMinAnnotations) {
    double sum = 0.0;
    std::size_t kept = 0;
    for (const auto& p : pairs) {
        if (!(p.gt > min_annotations)) continue;
        sum += std::abs(p.det - p.gt) / p.gt;
        ++kept;
    }
    if (kept == 0)
        throw Error(Errc::no_eligible_images,
                    "no image has more than " + std::to_string(min_annotations) + " annotations");
    return 100.0 * sum / static_cast<double>(kept);
}

/// Per-class AP pooled over every image in `gt`. Classes without ground truth
/// are left out; detections on images without annotations count as false alarms.
inline std::map<int, double> per_class_ap(const std::map<std::string, std::vector<Region>>& dets,
                                          const AnnotationIndex& gt, double iou_thr = kDefaultMatchIou) {
    std::map<int, std::vector<MatchSet>> by_class;
    std::map<std::string, std::map<int, std::vector<Region>>> det_split;
    std::map<std::string, std::map<int, std::vector<Annotation>>> gt_split;
    for (const auto& [img, rs] : dets)
        for (const auto& r : rs) det_split[img][r.class_id].push_back(r);
    for (const auto& [img, as] : gt)
        for (const auto& a : as) gt_split[img][a.class_id].push_back(a);

    std::map<std::string, std::vector<int>> classes_per_image;
    auto note = [&](const std::string& img, int cls) { classes_per_image[img].push_back(cls); };
    for (const auto& [img, m] : det_split)
        for (const auto& [cls, _] : m) note(img, cls);
    for (const auto& [img, m] : gt_split)
        for (const auto& [cls, _] : m) note(img, cls);

    static const std::vector<Region> kNoDets;
    static const std::vector<Annotation> kNoGts;
    for (auto& [img, classes] : classes_per_image) {
        std::sort(classes.begin(), classes.end());
        classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
        for (int cls : classes) {
            const auto* d = &kNoDets;
            const auto* g = &kNoGts;
            if (auto it = det_split.find(img); it != det_split.end())
                if (auto jt = it->second.find(cls); jt != it->second.end()) d = &jt->second;
            if (auto it = gt_split.find(img); it != gt_split.end())
                if (auto jt = it->second.find(cls); jt != it->second.end()) g = &jt->second;
            by_class[cls].push_back(match_detections(*d, *g, iou_thr));
        }
    }
    std::map<int, double> out;
    for (const auto& [cls, ms] : by_class)
        if (auto ap = average_precision(ms)) out[cls] = *ap;
    return out;
}

}  // namespace geocount
