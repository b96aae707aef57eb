#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "geocount/geocount.hpp"

namespace {

using namespace geocount;

int report_error(const std::exception& e, ExitCode code) {
    std::cerr << "geocount: " << e.what() << '\n';
    return static_cast<int>(code);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Object counts and activity indicators from satellite ROIs"};
    app.require_subcommand(1);

    std::optional<std::string> config_path;
    int workers = default_workers();
    std::optional<double> threshold_override;
    std::optional<double> sigma;
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "Pipeline configuration JSON")->check(CLI::ExistingFile);
    app.add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--threshold-override", threshold_override, "Floor on every pass threshold")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--sigma", sigma, "Fusion IoU gate")->check(CLI::Range(0.0, 1.0));
    app.add_option("--seed", seed, "Seed for synthetic data");

    std::string osm, out, scene, georef, rois, manifest, detections, annotations, count_pairs, spec;
    std::optional<std::string> opt_manifest, opt_rois, opt_dets, opt_anns, opt_pairs;

    auto* sample = app.add_subcommand("sample", "Strategic locations from an OSM XML extract");
    sample->add_option("osm", osm, "OSM XML file")->required();
    sample->add_option("-o,--out", out, "ROI descriptor JSONL")->required();

    auto* extract = app.add_subcommand("extract", "Crop ROIs from a georeferenced scene");
    extract->add_option("scene", scene, "Scene image (.png or .raw)")->required();
    extract->add_option("--georef", georef, "Georeference JSON")->required();
    extract->add_option("--rois", rois, "ROI descriptor JSONL")->required();
    extract->add_option("-o,--out", out, "Output directory")->required();

    auto* detect = app.add_subcommand("detect", "Ensemble detection and fusion");
    detect->add_option("manifest", manifest, "ROI image manifest JSONL")->required();
    detect->add_option("-o,--out", out, "Fused detection JSONL")->required();

    auto* report = app.add_subcommand("report", "Counts, changes, indicators and heatmap");
    report->add_option("counts", detections, "Detection JSONL or counts CSV")->required();
    report->add_option("--manifest", opt_manifest, "Manifest used to zero-fill counts");
    report->add_option("--rois", opt_rois, "ROI descriptors for indicators and heatmap");
    report->add_option("-o,--out", out, "Output directory")->required();

    auto* evaluate = app.add_subcommand("evaluate", "AP, group summary and count MAPE");
    evaluate->add_option("--detections", opt_dets, "Detection JSONL");
    evaluate->add_option("--annotations", opt_anns, "Annotation JSONL");
    evaluate->add_option("--count-pairs", opt_pairs, "CSV of gt,det count pairs");
    evaluate->add_option("-o,--out", out, "Report JSON")->required();

    auto* synth = app.add_subcommand("synth", "Synthetic scenes with ground truth");
    synth->add_option("spec", spec, "Scene spec JSON")->required();
    synth->add_option("-o,--out", out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::input_error);
    }

    try {
        const PipelineConfig cfg = load_config(config_path ? std::optional<fs::path>(*config_path) : std::nullopt);
        if (*sample) {
            const auto r = cmd_sample(cfg, osm, out);
            std::cerr << r.rois.size() << " ROIs (" << r.skipped_no_contour << " without contour, "
                      << r.skipped_outside << " outside AOI, " << r.skipped_polar << " polar)\n";
        } else if (*extract) {
            const auto r = cmd_extract(scene, georef, rois, out);
            std::cerr << r.entries.size() << " ROI images, " << r.skipped_outside << " outside the scene\n";
        } else if (*detect) {
            cmd_detect(cfg, manifest, out, {workers, threshold_override, sigma});
        } else if (*report) {
            ReportInputs in{detections, {}, {}};
            if (opt_manifest) in.manifest = *opt_manifest;
            if (opt_rois) in.rois = *opt_rois;
            cmd_report(cfg, in, out);
        } else if (*evaluate) {
            EvaluateInputs in;
            if (opt_dets) in.detections = *opt_dets;
            if (opt_anns) in.annotations = *opt_anns;
            if (opt_pairs) in.count_pairs = *opt_pairs;
            cmd_evaluate(cfg, in, out);
        } else if (*synth) {
            const auto r = cmd_synth(spec, out, seed, workers);
            std::cerr << r.entries.size() << " images\n";
        }
    } catch (const Error& e) {
        return report_error(e, exit_code_for(e.code()));
    } catch (const json::exception& e) {
        return report_error(e, ExitCode::input_error);
    } catch (const fs::filesystem_error& e) {
        return report_error(e, ExitCode::input_error);
    }
    return 0;
}
