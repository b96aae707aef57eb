#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "geocount/error.hpp"

namespace geocount {

enum class SizeGroup { small, medium, large };

inline constexpr std::array<SizeGroup, 3> kAllSizeGroups{SizeGroup::small, SizeGroup::medium,
                                                          SizeGroup::large};

constexpr std::string_view to_string(SizeGroup g) {
    switch (g) {
        case SizeGroup::small: return "small";
        case SizeGroup::medium: return "medium";
        case SizeGroup::large: return "large";
    }
    return "small";
}

inline SizeGroup parse_size_group(std::string_view s) {
    if (s == "small" || s == "Small") return SizeGroup::small;
    if (s == "medium" || s == "Medium") return SizeGroup::medium;
    if (s == "large" || s == "Large") return SizeGroup::large;
    throw Error(Errc::invalid_argument, "unknown size group '" + std::string(s) + "'");
}

struct ClassInfo {
    std::string name;
    SizeGroup group = SizeGroup::small;
};

/// Ordered class names; a class id is the index into this list.
class ClassRegistry {
public:
    ClassRegistry() = default;
    explicit ClassRegistry(std::vector<ClassInfo> classes) : classes_(std::move(classes)) {
        for (std::size_t i = 0; i < classes_.size(); ++i) {
            if (!by_name_.emplace(classes_[i].name, static_cast<int>(i)).second)
                throw Error(Errc::invalid_argument, "duplicate class name '" + classes_[i].name + "'");
        }
    }

    /// The 60 xView classes, grouped by physical footprint at 0.3 m GSD.
    static const ClassRegistry& xview() {
        static const ClassRegistry reg = [] {
            using enum SizeGroup;
            return ClassRegistry({
                {"fixed-wing-aircraft", medium}, {"small-aircraft", small},
                {"cargo-plane", large},          {"helicopter", small},
                {"passenger-vehicle", small},    {"small-car", small},
                {"bus", medium},                 {"pickup-truck", small},
                {"utility-truck", small},        {"truck", small},
                {"cargo-truck", small},          {"truck-w/box", small},
                {"truck-tractor", small},        {"trailer", small},
                {"truck-w/flatbed", small},      {"truck-w/liquid", small},
                {"crane-truck", small},          {"railway-vehicle", medium},
                {"passenger-car", medium},       {"cargo-car", medium},
                {"flat-car", medium},            {"tank-car", medium},
                {"locomotive", medium},          {"maritime-vessel", medium},
                {"motorboat", small},            {"sailboat", small},
                {"tugboat", medium},             {"barge", medium},
                {"fishing-vessel", medium},      {"ferry", large},
                {"yacht", medium},               {"container-ship", large},
                {"oil-tanker", large},           {"engineering-vehicle", small},
                {"tower-crane", medium},         {"container-crane", medium},
                {"reach-stacker", small},        {"straddle-carrier", small},
                {"mobile-crane", small},         {"dump-truck", small},
                {"haul-truck", small},           {"scraper/tractor", small},
                {"front-loader/bulldozer", small}, {"excavator", small},
                {"cement-mixer", small},         {"ground-grader", small},
                {"hut/tent", small},             {"shed", medium},
                {"building", medium},            {"aircraft-hangar", large},
                {"damaged-building", medium},    {"facility", large},
                {"construction-site", large},    {"vehicle-lot", large},
                {"helipad", medium},             {"storage-tank", medium},
                {"shipping-container-lot", large}, {"shipping-container", small},
                {"pylon", small},                {"tower", medium},
            });
        }();
        return reg;
    }

    [[nodiscard]] std::size_t size() const noexcept { return classes_.size(); }
    [[nodiscard]] const std::vector<ClassInfo>& classes() const noexcept { return classes_; }

    [[nodiscard]] std::optional<int> find(std::string_view name) const {
        auto it = by_name_.find(std::string(name));
        if (it == by_name_.end()) return std::nullopt;
        return it->second;
    }

    [[nodiscard]] int id(std::string_view name) const {
        if (auto id = find(name)) return *id;
        throw Error(Errc::unknown_class, "class '" + std::string(name) + "' is not in the registry");
    }

    [[nodiscard]] const std::string& name(int id) const { return info(id).name; }
    [[nodiscard]] SizeGroup group(int id) const { return info(id).group; }

    void set_group(int id, SizeGroup g) {
        const_cast<ClassInfo&>(info(id)).group = g;
    }

private:
    [[nodiscard]] const ClassInfo& info(int id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= classes_.size())
            throw Error(Errc::unknown_class, "class id " + std::to_string(id) + " out of range");
        return classes_[static_cast<std::size_t>(id)];
    }

    std::vector<ClassInfo> classes_;
    std::unordered_map<std::string, int> by_name_;
};

}  // namespace geocount
