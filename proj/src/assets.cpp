#include "debris/assets.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "debris/errors.hpp"

namespace debris {

using nlohmann::json;

const DebrisAsset* AssetCatalog::find(const std::string& asset_id) const {
    for (const auto& a : assets) {
        if (a.asset_id == asset_id) return &a;
    }
    return nullptr;
}

void validate_asset(const DebrisAsset& asset) {
    auto fail = [&](const std::string& why) {
        throw DataError("asset '" + asset.asset_id + "': " + why);
    };
    if (asset.asset_id.empty()) throw DataError("asset with empty id");
    if (asset.sprite.channels != 3) fail("sprite must be RGB");
    if (asset.mask.channels != 1) fail("mask must be grayscale");
    if (asset.sprite.width != asset.mask.width || asset.sprite.height != asset.mask.height) {
        fail("mask size differs from sprite size");
    }
    const bool any_fg = std::any_of(asset.mask.pixels.begin(), asset.mask.pixels.end(),
                                    [](std::uint8_t v) { return v >= 128; });
    if (!any_fg) fail("empty mask");
    if (asset.dims.l <= 0 || asset.dims.w <= 0 || asset.dims.h <= 0) fail("non-positive dims");
    if (asset.dims.l > 20 || asset.dims.w > 20 || asset.dims.h > 20) {
        fail("dims exceed 20 m");
    }
}

AssetCatalog load_catalog(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw IoError("asset catalog directory not found: " + dir.string());
    }
    std::vector<std::filesystem::path> subdirs;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_directory()) subdirs.push_back(entry.path());
    }
    std::sort(subdirs.begin(), subdirs.end());

    AssetCatalog catalog;
    std::vector<std::string> seen;
    for (const auto& sub : subdirs) {
        const auto meta_path = sub / "meta.json";
        std::ifstream meta_in(meta_path);
        if (!meta_in) throw IoError("cannot open " + meta_path.string());
        json meta;
        try {
            meta = json::parse(meta_in);
        } catch (const json::exception& e) {
            throw DataError("bad meta.json in " + sub.string() + ": " + e.what());
        }

        DebrisAsset asset;
        try {
            asset.asset_id = meta.at("asset_id").get<std::string>();
            asset.class_name = meta.at("class_name").get<std::string>();
            const json& d = meta.at("dims_m");
            asset.dims = Dims3{d.at(0).get<double>(), d.at(1).get<double>(), d.at(2).get<double>()};
            asset.native_yaw = meta.at("native_yaw").get<double>();
            asset.time_of_day = time_of_day_from_string(meta.at("time_of_day").get<std::string>());
            asset.weather = weather_from_string(meta.at("weather").get<std::string>());
        } catch (const json::exception& e) {
            throw DataError("bad meta.json in " + sub.string() + ": " + e.what());
        }
        asset.sprite = read_png_rgb(sub / "sprite.png");
        asset.mask = read_png_gray(sub / "mask.png");
        validate_asset(asset);
        if (std::find(seen.begin(), seen.end(), asset.asset_id) != seen.end()) {
            throw DataError("duplicate asset_id '" + asset.asset_id + "'");
        }
        seen.push_back(asset.asset_id);
        catalog.assets.push_back(std::move(asset));
    }
    return catalog;
}

void save_catalog(const std::filesystem::path& dir, const AssetCatalog& catalog) {
    std::filesystem::create_directories(dir);
    for (const auto& asset : catalog.assets) {
        const auto sub = dir / asset.asset_id;
        std::filesystem::create_directories(sub);
        write_png(sub / "sprite.png", asset.sprite);
        write_png(sub / "mask.png", asset.mask);
        json meta;
        meta["asset_id"] = asset.asset_id;
        meta["class_name"] = asset.class_name;
        meta["dims_m"] = {asset.dims.l, asset.dims.w, asset.dims.h};
        meta["native_yaw"] = asset.native_yaw;
        meta["time_of_day"] = to_string(asset.time_of_day);
        meta["weather"] = to_string(asset.weather);
        std::ofstream out(sub / "meta.json");
        if (!out) throw IoError("cannot write meta.json under " + sub.string());
        out << meta.dump(2) << '\n';
    }
}

namespace {

std::vector<std::size_t> matching_indices(const AssetCatalog& catalog, const EnvTags& env) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < catalog.assets.size(); ++i) {
        const auto& a = catalog.assets[i];
        if (a.time_of_day == env.time_of_day && a.weather == env.weather) idx.push_back(i);
    }
    return idx;
}

} // namespace

AssetSelection select_asset(const AssetCatalog& catalog, const EnvTags& env, Rng& rng) {
    if (catalog.empty()) throw DataError("select_asset: empty catalog");
    std::vector<std::size_t> pool = matching_indices(catalog, env);
    AssetSelection sel;
    if (pool.empty()) {
        sel.env_mismatch = true;
        pool.resize(catalog.assets.size());
        std::iota(pool.begin(), pool.end(), 0);
    }
    sel.asset = &catalog.assets[pool[rng.uniform_index(pool.size())]];
    return sel;
}

AssetSelection select_asset_weighted(const AssetCatalog& catalog, const EnvTags& env,
                                     const std::vector<double>& weights, Rng& rng) {
    if (catalog.empty()) throw DataError("select_asset: empty catalog");
    std::vector<std::size_t> pool = matching_indices(catalog, env);
    AssetSelection sel;
    if (pool.empty()) {
        sel.env_mismatch = true;
        pool.resize(catalog.assets.size());
        std::iota(pool.begin(), pool.end(), 0);
    }
    double total = 0.0;
    for (std::size_t i : pool) total += i < weights.size() ? weights[i] : 1.0;
    if (total <= 0.0) throw DataError("select_asset: non-positive total weight");
    double x = rng.uniform01() * total;
    for (std::size_t i : pool) {
        const double w = i < weights.size() ? weights[i] : 1.0;
        if (x < w || i == pool.back()) {
            sel.asset = &catalog.assets[i];
            return sel;
        }
        x -= w;
    }
    sel.asset = &catalog.assets[pool.back()];
    return sel;
}

} // namespace debris
