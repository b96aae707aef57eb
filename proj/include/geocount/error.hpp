#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace geocount {

enum class Errc {
    invalid_argument,
    io,
    empty_boundary,
    polar_unsupported,
    parse_failure,
    empty_filter,
    empty_crop,
    degenerate_resize,
    excessive_upsample,
    backend_failure,
    unknown_class,
    insufficient_history,
    no_samples,
    no_eligible_images,
    packing_failed,
};

constexpr std::string_view to_string(Errc e) {
    switch (e) {
        case Errc::invalid_argument: return "InvalidArgument";
        case Errc::io: return "IoError";
        case Errc::empty_boundary: return "EmptyBoundary";
        case Errc::polar_unsupported: return "PolarUnsupported";
        case Errc::parse_failure: return "ParseFailure";
        case Errc::empty_filter: return "EmptyFilter";
        case Errc::empty_crop: return "EmptyCrop";
        case Errc::degenerate_resize: return "DegenerateResize";
        case Errc::excessive_upsample: return "ExcessiveUpsample";
        case Errc::backend_failure: return "BackendFailure";
        case Errc::unknown_class: return "UnknownClass";
        case Errc::insufficient_history: return "InsufficientHistory";
        case Errc::no_samples: return "NoSamples";
        case Errc::no_eligible_images: return "NoEligibleImages";
        case Errc::packing_failed: return "PackingFailed";
    }
    return "Unknown";
}

/// Exception carrying a machine-readable error kind. The message is prefixed
/// with the kind name so logs stay greppable.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

/// ParseFailure with the byte offset where the input stopped making sense.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t byte_offset)
        : Error(Errc::parse_failure, message + " at byte " + std::to_string(byte_offset)),
          offset_(byte_offset) {}

    [[nodiscard]] std::size_t byte_offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// BackendFailure tagged with the detector and tile that failed.
class BackendError : public Error {
public:
    BackendError(std::string detector, std::string tile_id, const std::string& reason)
        : Error(Errc::backend_failure, detector + " on tile " + tile_id + ": " + reason),
          detector_(std::move(detector)), tile_id_(std::move(tile_id)) {}

    [[nodiscard]] const std::string& detector() const noexcept { return detector_; }
    [[nodiscard]] const std::string& tile_id() const noexcept { return tile_id_; }

private:
    std::string detector_;
    std::string tile_id_;
};

}  // namespace geocount
