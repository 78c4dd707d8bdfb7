#include "debris/randomizer.hpp"

#include <algorithm>
#include <cmath>

#include "debris/errors.hpp"

namespace debris {

namespace {
constexpr double k_ground_snap_limit = 15.0 * M_PI / 180.0;
// Either-mode draws reach past the distance cap so the height bound can bind.
constexpr double k_either_mode_draw_factor = 4.0;
} // namespace

bool Interval::valid() const { return std::isfinite(lo) && std::isfinite(hi) && lo <= hi; }

void RandomizationConfig::validate() const {
    if (max_distance_m <= 0) throw DataError("max_distance_m must be > 0");
    if (min_forward_m <= 0 || min_forward_m >= max_distance_m) {
        throw DataError("min_forward_m must be in (0, max_distance_m)");
    }
    if (min_bbox_height_px < 1) throw DataError("min_bbox_height_px must be >= 1");
    if (max_attempts < 1) throw DataError("max_attempts must be >= 1");
    if (!yaw_range.valid() || !pitch_range.valid() || !roll_range.valid()) {
        throw DataError("angle ranges must be finite with lo <= hi");
    }
    if (!gain_range.valid() || gain_range.lo < 0) throw DataError("bad gain_range");
    if (!fog_beta_range.valid() || fog_beta_range.lo < 0) throw DataError("bad fog_beta_range");
}

std::uint64_t derive_seed(std::uint64_t dataset_seed, const std::string& record_id,
                          std::uint64_t attempt) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv1a64_u64(dataset_seed, h);
    h = fnv1a64(record_id, h);
    h = fnv1a64_u64(attempt, h);
    return mix64(h);
}

namespace {

// Lateral ground extent of the lane polygons at a fixed forward distance:
// the lanes' interior on the image row where that depth appears, mapped back
// to meters.
std::vector<std::pair<double, double>> lane_lateral_intervals(const CameraCalib& calib,
                                                              const LaneSet& lanes,
                                                              double forward) {
    const double row = ground_row_at_forward(calib, forward);
    if (row <= horizon_row(calib)) return {};
    std::vector<std::pair<double, double>> spans = polygon_row_intervals(lanes.ego, row);
    if (lanes.left) {
        auto extra = polygon_row_intervals(*lanes.left, row);
        spans.insert(spans.end(), extra.begin(), extra.end());
    }
    if (lanes.right) {
        auto extra = polygon_row_intervals(*lanes.right, row);
        spans.insert(spans.end(), extra.begin(), extra.end());
    }
    spans = merge_intervals(std::move(spans));
    std::vector<std::pair<double, double>> lateral;
    for (const auto& [u0, u1] : spans) {
        lateral.emplace_back(lateral_at(calib, forward, u0), lateral_at(calib, forward, u1));
    }
    return lateral;
}

} // namespace

PlacementOutcome sample_placement(const RandomizationConfig& config, const CameraCalib& calib,
                                  const LaneSet& lanes, const DebrisAsset& asset, Rng& rng,
                                  int image_width, int image_height) {
    config.validate();
    if (!calib.valid()) throw DataError("sample_placement: invalid camera calibration");

    const double draw_max = config.bound_mode == DistanceBoundMode::both
                                ? config.max_distance_m
                                : config.max_distance_m * k_either_mode_draw_factor;

    PlacementOutcome outcome;
    ExhaustReason last_reason = ExhaustReason::off_road;
    for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
        outcome.attempts_used = attempt + 1;
        const double forward = rng.uniform(config.min_forward_m, draw_max);

        const auto spans = lane_lateral_intervals(calib, lanes, forward);
        double total = 0.0;
        for (const auto& [lo, hi] : spans) total += hi - lo;
        if (total <= 0.0) {
            last_reason = ExhaustReason::off_road;
            continue;
        }
        double x = rng.uniform01() * total;
        double lateral = spans.back().second;
        for (const auto& [lo, hi] : spans) {
            if (x <= hi - lo) {
                lateral = lo + x;
                break;
            }
            x -= hi - lo;
        }

        GroundPose pose;
        pose.forward = forward;
        pose.lateral = lateral;
        pose.yaw = rng.uniform(config.yaw_range.lo, config.yaw_range.hi);
        pose.obj_pitch = std::clamp(rng.uniform(config.pitch_range.lo, config.pitch_range.hi),
                                    -k_ground_snap_limit, k_ground_snap_limit);
        pose.roll = std::clamp(rng.uniform(config.roll_range.lo, config.roll_range.hi),
                               -k_ground_snap_limit, k_ground_snap_limit);

        PlacementSample sample;
        sample.pose = pose;
        sample.gain_r = rng.uniform(config.gain_range.lo, config.gain_range.hi);
        sample.gain_g = rng.uniform(config.gain_range.lo, config.gain_range.hi);
        sample.gain_b = rng.uniform(config.gain_range.lo, config.gain_range.hi);
        sample.fog_beta = rng.uniform(config.fog_beta_range.lo, config.fog_beta_range.hi);
        sample.asset_id = asset.asset_id;

        const auto bbox = project_cuboid_bbox(calib, pose, asset.dims, image_width, image_height);
        if (!bbox) {
            last_reason = ExhaustReason::out_of_view;
            continue;
        }
        const bool tall_enough = bbox->height() >= config.min_bbox_height_px;
        const bool near_enough = forward <= config.max_distance_m;
        const bool accepted = config.bound_mode == DistanceBoundMode::both
                                  ? (tall_enough && near_enough)
                                  : (tall_enough || near_enough);
        if (!accepted) {
            last_reason = !tall_enough ? ExhaustReason::too_small : ExhaustReason::too_far;
            continue;
        }
        sample.bbox = *bbox;
        outcome.sample = std::move(sample);
        return outcome;
    }
    outcome.exhaust_reason = last_reason;
    return outcome;
}

} // namespace debris
