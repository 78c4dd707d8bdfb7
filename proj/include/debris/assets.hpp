#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "debris/camera.hpp"
#include "debris/image.hpp"
#include "debris/rng.hpp"
#include "debris/scene.hpp"

namespace debris {

// One pre-rendered debris sprite with its segmentation mask and physical
// metadata, as produced by an external simulator.
struct DebrisAsset {
    std::string asset_id;
    std::string class_name;
    ImageU8 sprite;    // RGB
    ImageU8 mask;      // gray, foreground = 255
    Dims3 dims;        // meters
    double native_yaw = 0.0;
    TimeOfDay time_of_day = TimeOfDay::day;
    Weather weather = Weather::clear;
};

struct AssetCatalog {
    std::vector<DebrisAsset> assets;

    bool empty() const { return assets.empty(); }
    const DebrisAsset* find(const std::string& asset_id) const;
};

// Throws DataError naming the offending asset when an invariant fails.
void validate_asset(const DebrisAsset& asset);

// Directory of per-asset subdirectories, each holding sprite.png, mask.png
// and meta.json. Subdirectories are visited in sorted order.
AssetCatalog load_catalog(const std::filesystem::path& dir);
void save_catalog(const std::filesystem::path& dir, const AssetCatalog& catalog);

struct AssetSelection {
    const DebrisAsset* asset = nullptr;
    bool env_mismatch = false; // no asset matched {time_of_day, weather}
};

// Uniform over assets matching the scene's {time_of_day, weather}; falls back
// to uniform over the whole catalog (flagged) when nothing matches.
AssetSelection select_asset(const AssetCatalog& catalog, const EnvTags& env, Rng& rng);

// Same match/fallback rule but draws proportionally to per-asset weights
// (missing entries weigh 1). Used by the failure-mining cycle.
AssetSelection select_asset_weighted(const AssetCatalog& catalog, const EnvTags& env,
                                     const std::vector<double>& weights, Rng& rng);

} // namespace debris
