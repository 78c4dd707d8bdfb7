#include "debris/augmentor.hpp"

#include <algorithm>
#include <cmath>

#include "debris/errors.hpp"

namespace debris {

const char* to_string(RejectReason r) {
    switch (r) {
        case RejectReason::off_road: return "off_road";
        case RejectReason::in_sky: return "in_sky";
        case RejectReason::implausible_occlusion: return "implausible_occlusion";
        case RejectReason::too_small: return "too_small";
        case RejectReason::too_far: return "too_far";
        case RejectReason::overlap_forbidden: return "overlap_forbidden";
    }
    return "?";
}

std::optional<RejectReason> check_semantic(const SceneRecord& record, const BoxF& bbox,
                                           const GroundPose& pose) {
    (void)pose;

    // Sky: ground contact must project strictly below the vanishing line.
    if (bbox.y_max <= horizon_row(record.camera)) return RejectReason::in_sky;

    // Road membership is tested at the ground-contact point.
    const Vec2 bottom_center{(bbox.x_min + bbox.x_max) * 0.5, bbox.y_max};
    bool on_road = point_in_polygon(record.lanes.ego, bottom_center);
    if (!on_road && record.lanes.left) on_road = point_in_polygon(*record.lanes.left, bottom_center);
    if (!on_road && record.lanes.right) {
        on_road = point_in_polygon(*record.lanes.right, bottom_center);
    }
    if (!on_road) return RejectReason::off_road;

    for (const auto& gt : record.gt_objects) {
        if (!boxes_overlap(bbox, gt.bbox)) continue;
        if (gt.cls == ObjectClass::pedestrian || gt.cls == ObjectClass::bike) {
            return RejectReason::overlap_forbidden;
        }
        // The debris may occlude an object only when it is nearer, i.e. its
        // bottom edge is strictly below the object's. Equal bottoms reject.
        if (!(bbox.y_max > gt.bbox.y_max)) return RejectReason::implausible_occlusion;
    }
    return std::nullopt;
}

std::array<double, 3> scene_fog_color(const ImageU8& image) {
    const int rows = std::max(1, image.height / 10);
    double acc[3] = {0, 0, 0};
    for (int y = 0; y < rows; ++y) {
        for (int x = 0; x < image.width; ++x) {
            for (int c = 0; c < 3; ++c) acc[c] += image.at(x, y, c);
        }
    }
    const double n = static_cast<double>(rows) * image.width;
    return {acc[0] / n, acc[1] / n, acc[2] / n};
}

void composite(ImageU8& image, const DebrisAsset& asset, const BoxF& bbox,
               const PlacementSample& sample, const std::array<double, 3>& fog_color) {
    if (!bbox.valid()) throw DataError("composite: degenerate bbox");
    if (bbox.x_min < 0 || bbox.y_min < 0 || bbox.x_max > image.width ||
        bbox.y_max > image.height) {
        throw DataError("composite: bbox outside image");
    }

    const double delta = sample.pose.yaw - asset.native_yaw;
    const double cd = std::cos(delta), sd = std::sin(delta);
    const double sw = asset.sprite.width, sh = asset.sprite.height;
    // Rotated sprite occupies this canvas; the canvas is what gets scaled to
    // the bbox. For delta = 0 it equals the sprite, so the path reduces to a
    // plain bilinear resize.
    const double cw = std::abs(sw * cd) + std::abs(sh * sd);
    const double ch = std::abs(sw * sd) + std::abs(sh * cd);

    const double t_fog = 1.0 - std::exp(-sample.fog_beta * sample.pose.forward);
    const double gains[3] = {sample.gain_r, sample.gain_g, sample.gain_b};

    const int px0 = static_cast<int>(std::floor(bbox.x_min));
    const int py0 = static_cast<int>(std::floor(bbox.y_min));
    const int px1 = static_cast<int>(std::ceil(bbox.x_max));
    const int py1 = static_cast<int>(std::ceil(bbox.y_max));

    for (int py = std::max(0, py0); py < std::min(image.height, py1); ++py) {
        for (int px = std::max(0, px0); px < std::min(image.width, px1); ++px) {
            const double u = px + 0.5, v = py + 0.5;
            if (u < bbox.x_min || u >= bbox.x_max || v < bbox.y_min || v >= bbox.y_max) continue;
            // bbox -> canvas -> (inverse rotation) -> sprite, continuous coords.
            const double dxc = (u - bbox.x_min) / bbox.width() * cw - cw / 2;
            const double dyc = (v - bbox.y_min) / bbox.height() * ch - ch / 2;
            const double sx = cd * dxc + sd * dyc + sw / 2;
            const double sy = -sd * dxc + cd * dyc + sh / 2;
            if (sx < 0 || sx >= sw || sy < 0 || sy >= sh) continue;
            if (bilinear_sample(asset.mask, sx - 0.5, sy - 0.5, 0) < 127.5) continue;
            for (int c = 0; c < 3; ++c) {
                double value = bilinear_sample(asset.sprite, sx - 0.5, sy - 0.5, c) * gains[c];
                value = t_fog * fog_color[c] + (1.0 - t_fog) * value;
                image.at(px, py, c) =
                    static_cast<std::uint8_t>(std::clamp<long>(std::llround(value), 0, 255));
            }
        }
    }
}

namespace {

RejectReason reject_from_exhaust(ExhaustReason r) {
    switch (r) {
        case ExhaustReason::too_small: return RejectReason::too_small;
        case ExhaustReason::too_far: return RejectReason::too_far;
        case ExhaustReason::off_road:
        case ExhaustReason::out_of_view:
        case ExhaustReason::none: break;
    }
    return RejectReason::off_road;
}

} // namespace

AugmentationResult augment_record(const SceneRecord& record, const ImageU8& image,
                                  const AssetCatalog& catalog, const RandomizationConfig& config,
                                  int n_objects, std::uint64_t dataset_seed,
                                  const std::vector<double>* asset_weights) {
    if (n_objects < 1) throw DataError("augment_record: n_objects must be >= 1");
    if (catalog.empty()) throw DataError("augment_record: empty catalog");
    if (image.width != record.width || image.height != record.height || image.channels != 3) {
        throw DataError("augment_record: image does not match record dimensions");
    }

    AugmentationResult result;
    result.image = image;
    const auto fog_color = scene_fog_color(image);

    // Later slots must treat earlier acceptances as scene objects.
    SceneRecord working = record;

    std::vector<std::size_t> accepted_entries;
    for (int k = 0; k < n_objects; ++k) {
        const std::uint64_t seed = derive_seed(dataset_seed, record.id, static_cast<std::uint64_t>(k));
        Rng rng(seed);

        const AssetSelection sel =
            asset_weights ? select_asset_weighted(catalog, record.env, *asset_weights, rng)
                          : select_asset(catalog, record.env, rng);

        ProvenanceEntry entry;
        entry.asset_id = sel.asset->asset_id;
        entry.env_mismatch = sel.env_mismatch;
        entry.seed_used = seed;

        PlacementOutcome outcome = sample_placement(config, record.camera, record.lanes,
                                                    *sel.asset, rng, record.width, record.height);
        if (!outcome.sample) {
            entry.reject_reason = reject_from_exhaust(outcome.exhaust_reason);
            result.provenance.push_back(std::move(entry));
            continue;
        }
        outcome.sample->seed_used = seed;

        const auto reject = check_semantic(working, outcome.sample->bbox, outcome.sample->pose);
        if (reject) {
            entry.reject_reason = *reject;
            entry.sample = std::move(outcome.sample);
            result.provenance.push_back(std::move(entry));
            continue;
        }

        GtObject label;
        label.bbox = outcome.sample->bbox;
        label.cls = ObjectClass::debris;
        label.distance_m = outcome.sample->pose.forward;
        label.size_3d = sel.asset->dims;
        label.source = "synthetic";
        working.gt_objects.push_back(label);
        result.added_labels.push_back(std::move(label));

        entry.accepted = true;
        entry.sample = std::move(outcome.sample);
        result.provenance.push_back(std::move(entry));
        accepted_entries.push_back(result.provenance.size() - 1);
    }

    // Far-to-near paint order so nearer debris over-paints farther debris.
    std::sort(accepted_entries.begin(), accepted_entries.end(),
              [&](std::size_t a, std::size_t b) {
                  return result.provenance[a].sample->pose.forward >
                         result.provenance[b].sample->pose.forward;
              });
    for (std::size_t idx : accepted_entries) {
        const ProvenanceEntry& entry = result.provenance[idx];
        composite(result.image, *catalog.find(entry.asset_id), entry.sample->bbox, *entry.sample,
                  fog_color);
    }
    return result;
}

} // namespace debris
