#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "debris/assets.hpp"
#include "debris/image.hpp"
#include "debris/randomizer.hpp"
#include "debris/scene.hpp"

namespace debris {

enum class RejectReason { off_road, in_sky, implausible_occlusion, too_small, too_far, overlap_forbidden };

const char* to_string(RejectReason r);

struct ProvenanceEntry {
    std::string asset_id;
    bool accepted = false;
    std::optional<RejectReason> reject_reason;
    bool env_mismatch = false;
    std::uint64_t seed_used = 0;
    std::optional<PlacementSample> sample;
};

struct AugmentationResult {
    ImageU8 image;
    std::vector<GtObject> added_labels; // class = debris, source = "synthetic"
    std::vector<ProvenanceEntry> provenance;
};

// Semantic placement test for a candidate debris bbox against one scene:
// bottom-below-horizon, on-lane ground contact, plausible occlusion against
// GT (candidate bottom strictly below any overlapped object's bottom), and no
// overlap at all with pedestrians or bikes. Returns empty when accepted.
std::optional<RejectReason> check_semantic(const SceneRecord& record, const BoxF& bbox,
                                           const GroundPose& pose);

// Mean color of the top 10% of image rows; haze proxy for fog blending.
std::array<double, 3> scene_fog_color(const ImageU8& image);

// Pastes the sprite into `image` at `bbox`: rotate in-plane by
// (pose.yaw - native_yaw), bilinear-resample to bbox size, apply channel
// gains, blend toward fog_color with t = 1 - exp(-fog_beta * forward), write
// only mask-foreground pixels.
void composite(ImageU8& image, const DebrisAsset& asset, const BoxF& bbox,
               const PlacementSample& sample, const std::array<double, 3>& fog_color);

// Full per-record augmentation: n_objects slots, each select -> sample ->
// semantic check; accepted sprites are painted far-to-near. Accepted debris
// joins the GT set seen by later slots. Deterministic in
// (dataset_seed, record.id).
AugmentationResult augment_record(const SceneRecord& record, const ImageU8& image,
                                  const AssetCatalog& catalog, const RandomizationConfig& config,
                                  int n_objects, std::uint64_t dataset_seed,
                                  const std::vector<double>* asset_weights = nullptr);

} // namespace debris
