#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "debris/assets.hpp"
#include "debris/camera.hpp"
#include "debris/rng.hpp"
#include "debris/scene.hpp"

namespace debris {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool valid() const;
    bool contains(double v) const { return v >= lo && v <= hi; }
};

// Placement acceptance: `both` requires distance <= max_distance_m AND bbox
// height >= min_bbox_height_px; `either` accepts when one of the two holds
// (draws then extend past max_distance_m so the mode is not vacuous).
enum class DistanceBoundMode { both, either };

struct RandomizationConfig {
    double max_distance_m = 300.0;
    double min_forward_m = 5.0;
    int min_bbox_height_px = 10;
    Interval yaw_range{-M_PI, M_PI};
    Interval pitch_range{-0.26, 0.26};
    Interval roll_range{-0.26, 0.26};
    Interval gain_range{0.7, 1.3};
    Interval fog_beta_range{0.0, 0.02};
    int max_attempts = 50;
    DistanceBoundMode bound_mode = DistanceBoundMode::both;

    void validate() const; // throws DataError
};

// One accepted domain-randomized draw.
struct PlacementSample {
    GroundPose pose;
    double gain_r = 1.0;
    double gain_g = 1.0;
    double gain_b = 1.0;
    double fog_beta = 0.0;
    std::string asset_id;
    std::uint64_t seed_used = 0;
    BoxF bbox; // projected cuboid bbox at pose
};

// Stable across runs and platforms; equal triples always map to equal seeds.
std::uint64_t derive_seed(std::uint64_t dataset_seed, const std::string& record_id,
                          std::uint64_t attempt);

enum class ExhaustReason { none, off_road, too_small, too_far, out_of_view };

struct PlacementOutcome {
    std::optional<PlacementSample> sample;
    ExhaustReason exhaust_reason = ExhaustReason::none; // set when sample is empty
    int attempts_used = 0;
};

// Rejection-samples pose and appearance up to max_attempts. Forward is drawn
// uniformly, lateral uniformly inside the lane footprint recovered at that
// forward distance, angles uniformly in their ranges with pitch/roll clamped
// to +-15 degrees (ground snap). Accepts only placements whose projected bbox
// satisfies the distance/height bound.
PlacementOutcome sample_placement(const RandomizationConfig& config, const CameraCalib& calib,
                                  const LaneSet& lanes, const DebrisAsset& asset, Rng& rng,
                                  int image_width, int image_height);

} // namespace debris
