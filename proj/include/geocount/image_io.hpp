#pragma once

// PNG (8-bit gray/RGB) through libpng's simplified API, plus a headerless raw
// format whose dimensions live in a JSON sidecar ("<file>.json").

#include <filesystem>
#include <string>
#include <vector>

#include <png.h>

#include "geocount/jsonl.hpp"
#include "geocount/raster.hpp"

namespace geocount {

inline Raster decode_png(const std::string& bytes, const std::string& origin = "png") {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw Error(Errc::io, origin + ": " + image.message);
    const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
    image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    const int channels = gray ? 1 : 3;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw Error(Errc::io, origin + ": " + msg);
    }
    return Raster(static_cast<int>(image.width), static_cast<int>(image.height), channels,
                  std::move(buf));
}

inline std::string encode_png(const Raster& r) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(r.width());
    image.height = static_cast<png_uint_32>(r.height());
    image.format = r.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, r.pixels().data(), 0, nullptr))
        throw Error(Errc::io, std::string("png encode: ") + image.message);
    std::string out(size, '\0');
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, r.pixels().data(), 0, nullptr))
        throw Error(Errc::io, std::string("png encode: ") + image.message);
    out.resize(size);
    return out;
}

inline std::filesystem::path raw_sidecar(const std::filesystem::path& raw) {
    return std::filesystem::path(raw.string() + ".json");
}

inline Raster read_raster(const std::filesystem::path& path) {
    if (path.extension() == ".raw") {
        const json meta = json::parse(read_file(raw_sidecar(path)));
        std::string bytes = read_file(path);
        return Raster(field<int>(meta, "width"), field<int>(meta, "height"),
                      field<int>(meta, "channels"),
                      std::vector<std::uint8_t>(bytes.begin(), bytes.end()));
    }
    return decode_png(read_file(path), path.string());
}

inline void write_raster(const std::filesystem::path& path, const Raster& r) {
    if (path.extension() == ".raw") {
        json meta{{"width", r.width()}, {"height", r.height()}, {"channels", r.channels()}};
        write_file(raw_sidecar(path), meta.dump() + "\n");
        write_file(path, std::string_view(reinterpret_cast<const char*>(r.pixels().data()),
                                          r.pixels().size()));
        return;
    }
    write_file(path, encode_png(r));
}

}  // namespace geocount
