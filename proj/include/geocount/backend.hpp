#pragma once

// Detection backends. A backend sees one fixed-size block at a time and
// returns regions in block coordinates.
//
//  * OracleBackend   - reports stored ground-truth boxes that are visible in
//                      the block, optionally through the noisy channel.
//  * ReplayBackend   - same visibility rule over recorded detections, keeping
//                      their classes and scores.
//  * ExternalProcessBackend - newline-delimited JSON over a child process's
//                      stdin/stdout, for real CNN runtimes.

#include <chrono>
#include <condition_variable>
#include <csignal>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <boost/process.hpp>

#include "geocount/annotation.hpp"
#include "geocount/base64.hpp"
#include "geocount/detection.hpp"
#include "geocount/random.hpp"
#include "geocount/synth.hpp"
#include "geocount/tiler.hpp"

namespace geocount {

struct TileContext {
    std::string image_key;
    std::string detector;
    std::size_t tile_index = 0;
    int offset_x = 0;
    int offset_y = 0;
    double scale = 1.0;  ///< original ROI pixels -> scaled image pixels
    int block = kDefaultBlock;
    int scaled_width = 0;
    int scaled_height = 0;

    [[nodiscard]] std::string tile_id() const {
        return image_key + "#" + detector + "#" + std::to_string(tile_index);
    }
};

class DetectorBackend {
public:
    virtual ~DetectorBackend() = default;
    /// Must be safe to call concurrently.
    virtual std::vector<Region> detect(const Raster& tile, const TileContext& ctx) = 0;
};

/// Part of an ROI-space box visible in the block, or nullopt when less than
/// `min_visible` of its area is inside.
inline std::optional<PixelBox> visible_in_tile(const PixelBox& roi_box, const TileContext& ctx,
                                               double min_visible) {
    const PixelBox tb = map_to_tile(roi_box, ctx.offset_x, ctx.offset_y, ctx.scale);
    const PixelBox seen = intersection(
        tb, PixelBox{0.0, 0.0, double(std::min(ctx.block, ctx.scaled_width - ctx.offset_x)),
                     double(std::min(ctx.block, ctx.scaled_height - ctx.offset_y))});
    const double full = tb.area();
    if (full <= 0.0 || seen.area() <= 0.0) return std::nullopt;
    // Tolerance absorbs rounding from the scale round trip at block edges.
    if (seen.area() / full < min_visible - 1e-9) return std::nullopt;
    return seen;
}

class OracleBackend : public DetectorBackend {
public:
    OracleBackend(AnnotationIndex truth, NoiseModel noise = {}, std::uint64_t seed = 0,
                  double min_visible = 1.0)
        : truth_(std::move(truth)), noise_(noise), seed_(seed), min_visible_(min_visible) {
        noise_.validate();
        if (!(min_visible_ > 0.0 && min_visible_ <= 1.0))
            throw Error(Errc::invalid_argument, "min_visible must be in (0, 1]");
    }

    std::vector<Region> detect(const Raster&, const TileContext& ctx) override {
        auto it = truth_.find(ctx.image_key);
        if (it == truth_.end()) return {};
        std::vector<Annotation> seen;
        for (const auto& a : it->second)
            if (auto b = visible_in_tile(a.box, ctx, min_visible_)) seen.push_back({*b, a.class_id});
        if (seen.empty() && noise_.fp_per_megapixel == 0.0) return {};
        return simulate_detector(seen, noise_, mix_seed(seed_, ctx.tile_id()), ctx.block, ctx.block);
    }

private:
    AnnotationIndex truth_;
    NoiseModel noise_;
    std::uint64_t seed_;
    double min_visible_;
};

class ReplayBackend : public DetectorBackend {
public:
    /// `records` maps image key -> recorded regions in ROI coordinates.
    explicit ReplayBackend(std::map<std::string, std::vector<Region>> records, double min_visible = 1.0)
        : records_(std::move(records)), min_visible_(min_visible) {}

    /// Loads a record file; lines with a "detector" field only replay for that detector.
    static std::shared_ptr<ReplayBackend> from_records(const std::vector<json>& rows,
                                                       const ClassRegistry& reg,
                                                       const std::string& detector = {},
                                                       double min_visible = 1.0) {
        std::map<std::string, std::vector<Region>> recs;
        for (const auto& j : rows) {
            auto only = field_or<std::string>(j, "detector", "");
            if (!only.empty() && !detector.empty() && only != detector) continue;
            recs[image_key(field<std::string>(j, "roi_id"), field_or<std::string>(j, "timestamp", ""))]
                .push_back(detection_from_json(j, reg));
        }
        return std::make_shared<ReplayBackend>(std::move(recs), min_visible);
    }

    std::vector<Region> detect(const Raster&, const TileContext& ctx) override {
        auto it = records_.find(ctx.image_key);
        if (it == records_.end()) return {};
        std::vector<Region> out;
        for (const auto& r : it->second)
            if (auto b = visible_in_tile(r.box, ctx, min_visible_)) out.push_back({r.class_id, *b, r.score});
        return out;
    }

private:
    std::map<std::string, std::vector<Region>> records_;
    double min_visible_;
};

inline json make_tile_request(const std::string& id, const Raster& tile) {
    json j;
    j["id"] = id;
    j["width"] = tile.width();
    j["height"] = tile.height();
    j["channels"] = tile.channels();
    j["pixels_b64"] = base64_encode(tile.pixels());
    return j;
}

/// Parses a response line; throws plain Error on protocol violations.
inline std::vector<Region> parse_tile_response(const std::string& line, const std::string& expected_id,
                                               const ClassRegistry& reg, int block) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw Error(Errc::parse_failure, std::string("malformed response: ") + e.what());
    }
    if (field<std::string>(j, "id") != expected_id)
        throw Error(Errc::parse_failure, "response id does not match request " + expected_id);
    std::vector<Region> out;
    for (const auto& d : field<json>(j, "detections")) {
        const auto cls = reg.find(field<std::string>(d, "class"));
        if (!cls) throw Error(Errc::unknown_class, "backend returned unknown class '" +
                                                       field<std::string>(d, "class") + "'");
        Region r{*cls,
                 PixelBox{field<double>(d, "x1"), field<double>(d, "y1"), field<double>(d, "x2"),
                          field<double>(d, "y2")},
                 field<double>(d, "score")};
        if (!r.valid()) throw Error(Errc::invalid_argument, "backend returned an invalid region");
        r.box = clip(r.box, block, block);
        out.push_back(r);
    }
    return out;
}

class ExternalProcessBackend : public DetectorBackend {
public:
    /// Spawns `instances` copies of `command` (argv form, argv[0] resolved via PATH
    /// when it has no slash).
    ExternalProcessBackend(std::vector<std::string> command, std::shared_ptr<const ClassRegistry> registry,
                           int instances = 1)
        : registry_(std::move(registry)) {
        namespace bp = boost::process;
        if (command.empty()) throw Error(Errc::invalid_argument, "external backend needs a command");
        // A child that dies mid-request must surface as an error, not kill us.
        std::signal(SIGPIPE, SIG_IGN);
        auto exe = command.front().find('/') == std::string::npos ? bp::search_path(command.front())
                                                                  : boost::filesystem::path(command.front());
        if (exe.empty()) throw Error(Errc::backend_failure, "cannot find executable " + command.front());
        std::vector<std::string> args(command.begin() + 1, command.end());
        for (int i = 0; i < std::max(1, instances); ++i) {
            auto inst = std::make_unique<Instance>();
            try {
                inst->child = bp::child(exe, bp::args(args), bp::std_in < inst->to_child,
                                        bp::std_out > inst->from_child);
            } catch (const std::exception& e) {
                throw Error(Errc::backend_failure, "cannot start " + command.front() + ": " + e.what());
            }
            instances_.push_back(std::move(inst));
        }
        busy_.assign(instances_.size(), false);
    }

    ExternalProcessBackend(const ExternalProcessBackend&) = delete;
    ExternalProcessBackend& operator=(const ExternalProcessBackend&) = delete;

    ~ExternalProcessBackend() override {
        for (auto& inst : instances_) {
            try {
                inst->to_child.close();
                inst->to_child.pipe().close();
                if (inst->child.valid() && !inst->child.wait_for(std::chrono::seconds(2)))
                    inst->child.terminate();
            } catch (...) {
            }
        }
    }

    std::vector<Region> detect(const Raster& tile, const TileContext& ctx) override {
        const std::size_t slot = acquire();
        struct Release {
            ExternalProcessBackend* self;
            std::size_t slot;
            ~Release() { self->release(slot); }
        } release{this, slot};

        auto& inst = *instances_[slot];
        const std::string id = ctx.tile_id();
        inst.to_child << make_tile_request(id, tile).dump() << '\n' << std::flush;
        std::string line;
        if (!inst.to_child || !std::getline(inst.from_child, line))
            throw BackendError(ctx.detector, id, "external process closed its pipe");
        try {
            return parse_tile_response(line, id, *registry_, ctx.block);
        } catch (const Error& e) {
            throw BackendError(ctx.detector, id, e.what());
        }
    }

private:
    struct Instance {
        boost::process::opstream to_child;
        boost::process::ipstream from_child;
        boost::process::child child;
    };

    std::size_t acquire() {
        std::unique_lock lock(mu_);
        std::size_t slot = 0;
        cv_.wait(lock, [&] {
            for (std::size_t i = 0; i < busy_.size(); ++i)
                if (!busy_[i]) {
                    slot = i;
                    return true;
                }
            return false;
        });
        busy_[slot] = true;
        return slot;
    }

    void release(std::size_t slot) {
        {
            std::lock_guard lock(mu_);
            busy_[slot] = false;
        }
        cv_.notify_one();
    }

    std::shared_ptr<const ClassRegistry> registry_;
    std::vector<std::unique_ptr<Instance>> instances_;
    std::vector<bool> busy_;
    std::mutex mu_;
    std::condition_variable cv_;
};

}  // namespace geocount
