#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "debris/assets.hpp"
#include "debris/detection.hpp"
#include "debris/scene.hpp"

namespace debris {

// GT size buckets on bbox pixel height: small [8,25), medium [25,100),
// large [100,inf). Heights below 8 px are not scored at all.
enum class SizeBucket { small, medium, large };

const char* to_string(SizeBucket b);
std::optional<SizeBucket> bucket_of_height(double height_px);
double bucket_weight(SizeBucket b); // 0.5 / 1 / 5

struct MatchResult {
    std::vector<std::pair<Detection, GtObject>> true_positives;
    std::vector<Detection> false_positives;
    std::vector<GtObject> false_negatives;
};

// Greedy confidence-ordered one-to-one matching at the IoU threshold.
// GTs under 8 px height are invisible: never matched, never counted.
MatchResult match_detections(const std::vector<Detection>& dets,
                             const std::vector<GtObject>& gts, double iou_threshold = 0.5);

// Dataset-level instances keyed by image id.
struct GtInstance {
    std::string image_id;
    GtObject obj;
};

enum class ApWeighting { per_bucket, per_instance };

// Area under the all-point interpolated PR curve, in percent. Under a bucket
// filter, GTs of other buckets are ignore regions: detections matching them
// are dropped from scoring. Absent when the filter leaves no scorable GT.
std::optional<double> average_precision(const std::vector<ImageDetection>& dets,
                                        const std::vector<GtInstance>& gts,
                                        std::optional<SizeBucket> bucket_filter,
                                        ApWeighting weighting, double iou_threshold = 0.5);

struct BucketApSet {
    std::optional<double> small;
    std::optional<double> medium;
    std::optional<double> large;
};

// (0.5*AP_s + 1*AP_m + 5*AP_l) / sum of weights of present buckets.
std::optional<double> weighted_map_per_bucket(const BucketApSet& aps);

struct PrPoint {
    double confidence = 0.0;
    double recall = 0.0;
    double precision = 0.0;
};

// The PR staircase underlying average_precision (unfiltered form exported for
// curve output), one point per distinct confidence.
std::vector<PrPoint> pr_curve(const std::vector<ImageDetection>& dets,
                              const std::vector<GtInstance>& gts, ApWeighting weighting,
                              double iou_threshold = 0.5);

struct RocPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    std::optional<double> tpr; // absent when there are no positive cells
};

struct RocResult {
    std::vector<RocPoint> points;
    std::int64_t negatives = 0;
    std::int64_t positives = 0;
};

// Cell-level ROC over paired grids: negatives are t=0 cells, FP counts cells
// with t=0 and p >= threshold.
RocResult roc_and_fpr(const std::vector<DetectionGrid>& pred_grids,
                      const std::vector<DetectionGrid>& target_grids,
                      const std::vector<double>& thresholds);

double fpr_at_threshold(const std::vector<DetectionGrid>& pred_grids,
                        const std::vector<DetectionGrid>& target_grids, double threshold);

// Confidence threshold maximizing F1 over the candidate set (all detection
// confidences plus the 0.05 grid); ties break toward the larger threshold.
double select_threshold(const std::vector<ImageDetection>& dets,
                        const std::vector<GtInstance>& gts, double iou_threshold = 0.5);

// One evaluation failure, serialized to failures.jsonl.
struct FailureInstance {
    std::string image_id;
    std::string kind; // "fn" or "fp"
    BoxF bbox;
    std::optional<double> confidence; // fp only
    std::optional<Dims3> size_3d;     // fn only, when the GT carries it
    EnvTags env;
};

enum class RequestKind { synthetic_debris, hard_negative };

struct AugmentationRequest {
    RequestKind kind = RequestKind::synthetic_debris;
    std::optional<std::string> asset_id;       // nearest-volume catalog match
    std::optional<Dims3> dims_m;               // dims of that asset
    std::optional<SizeBucket> pixel_bucket;    // fallback key
    EnvTags env;
    int count = 0;
    std::vector<std::string> scene_ids; // hard negatives: scenes to re-augment with zero debris
};

// FN -> synthetic-debris request keyed by (nearest catalog asset within 25%
// relative volume, env), falling back to the pixel-height bucket; FP ->
// hard-negative request for the same scene. Aggregated with counts.
std::vector<AugmentationRequest> mine_failures(const std::vector<FailureInstance>& failures,
                                               const AssetCatalog& catalog);

struct BucketCounts {
    int gt_small = 0;
    int gt_medium = 0;
    int gt_large = 0;
    int tp = 0;
    int fp = 0;
    int fn = 0;
};

struct EvalReport {
    std::optional<double> ap_small;
    std::optional<double> ap_medium;
    std::optional<double> ap_large;
    std::optional<double> map_all;
    std::string weighting_mode; // aggregation used for map_all
    std::optional<double> map_per_bucket;
    std::optional<double> map_per_instance;
    std::vector<PrPoint> pr_points;
    std::vector<RocPoint> roc_points;
    double chosen_threshold = 0.0;
    double fpr = 0.0;
    BucketCounts counts;
};

void write_report_json(const std::filesystem::path& path, const EvalReport& report,
                       std::uint64_t dataset_seed, const std::string& config_hash);
void write_pr_csv(const std::filesystem::path& path, const std::vector<PrPoint>& points);
void write_roc_csv(const std::filesystem::path& path, const std::vector<RocPoint>& points);
void write_failures_jsonl(const std::filesystem::path& path,
                          const std::vector<FailureInstance>& failures);
std::vector<FailureInstance> read_failures_jsonl(const std::filesystem::path& path);
void write_requests_jsonl(const std::filesystem::path& path,
                          const std::vector<AugmentationRequest>& requests);
std::vector<AugmentationRequest> read_requests_jsonl(const std::filesystem::path& path);

} // namespace debris
