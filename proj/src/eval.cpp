#include "debris/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "debris/errors.hpp"
#include "debris/version.hpp"

namespace debris {

using nlohmann::json;

const char* to_string(SizeBucket b) {
    switch (b) {
        case SizeBucket::small: return "small";
        case SizeBucket::medium: return "medium";
        case SizeBucket::large: return "large";
    }
    return "?";
}

std::optional<SizeBucket> bucket_of_height(double height_px) {
    if (height_px < 8.0) return std::nullopt;
    if (height_px < 25.0) return SizeBucket::small;
    if (height_px < 100.0) return SizeBucket::medium;
    return SizeBucket::large;
}

double bucket_weight(SizeBucket b) {
    switch (b) {
        case SizeBucket::small: return 0.5;
        case SizeBucket::medium: return 1.0;
        case SizeBucket::large: return 5.0;
    }
    return 1.0;
}

namespace {

bool det_order(const Detection& a, const Detection& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.bbox.area() != b.bbox.area()) return a.bbox.area() < b.bbox.area();
    const auto key = [](const BoxF& x) {
        return std::array<double, 4>{x.x_min, x.y_min, x.x_max, x.y_max};
    };
    return key(a.bbox) < key(b.bbox);
}

enum class DetLabel { tp, fp, ignored };

struct LabeledDet {
    Detection det;
    DetLabel label = DetLabel::fp;
    int gt_index = -1; // into the scorable list, for tp
};

// Greedy confidence-ordered matching of one image. Scorable GTs are >= 8 px
// and inside the bucket filter; GTs of other buckets are ignore regions whose
// matched detections drop out of scoring; GTs under 8 px are invisible.
struct ImageMatch {
    std::vector<LabeledDet> dets;
    std::vector<GtObject> scorable_gts;
    std::vector<bool> gt_matched;
};

ImageMatch greedy_match(std::vector<Detection> dets, const std::vector<GtObject>& gts,
                        double iou_threshold, std::optional<SizeBucket> bucket_filter) {
    ImageMatch m;
    std::vector<GtObject> ignore_gts;
    for (const auto& gt : gts) {
        const auto bucket = bucket_of_height(gt.bbox.height());
        if (!bucket) continue;
        if (bucket_filter && *bucket != *bucket_filter) {
            ignore_gts.push_back(gt);
        } else {
            m.scorable_gts.push_back(gt);
        }
    }
    m.gt_matched.assign(m.scorable_gts.size(), false);

    std::sort(dets.begin(), dets.end(), det_order);
    for (auto& det : dets) {
        int best = -1;
        double best_iou = 0.0;
        for (std::size_t g = 0; g < m.scorable_gts.size(); ++g) {
            if (m.gt_matched[g]) continue;
            const double v = iou(det.bbox, m.scorable_gts[g].bbox);
            if (v >= iou_threshold && v > best_iou) {
                best_iou = v;
                best = static_cast<int>(g);
            }
        }
        LabeledDet labeled{det, DetLabel::fp, -1};
        if (best >= 0) {
            m.gt_matched[best] = true;
            labeled.label = DetLabel::tp;
            labeled.gt_index = best;
        } else {
            for (const auto& ig : ignore_gts) {
                if (iou(det.bbox, ig.bbox) >= iou_threshold) {
                    labeled.label = DetLabel::ignored;
                    break;
                }
            }
        }
        m.dets.push_back(std::move(labeled));
    }
    return m;
}

} // namespace

MatchResult match_detections(const std::vector<Detection>& dets, const std::vector<GtObject>& gts,
                             double iou_threshold) {
    const ImageMatch m = greedy_match(dets, gts, iou_threshold, std::nullopt);
    MatchResult result;
    for (const auto& ld : m.dets) {
        if (ld.label == DetLabel::tp) {
            result.true_positives.emplace_back(ld.det, m.scorable_gts[ld.gt_index]);
        } else {
            result.false_positives.push_back(ld.det);
        }
    }
    for (std::size_t g = 0; g < m.scorable_gts.size(); ++g) {
        if (!m.gt_matched[g]) result.false_negatives.push_back(m.scorable_gts[g]);
    }
    return result;
}

namespace {

struct ScoredDet {
    double confidence = 0.0;
    bool tp = false;
    double weight = 1.0; // matched GT's bucket weight for TPs
};

struct SweepInput {
    std::vector<ScoredDet> dets; // sorted by descending confidence
    double total_gt_weight = 0.0;
    std::int64_t scorable_gt_count = 0;
};

SweepInput build_sweep(const std::vector<ImageDetection>& dets, const std::vector<GtInstance>& gts,
                       std::optional<SizeBucket> bucket_filter, ApWeighting weighting,
                       double iou_threshold) {
    std::map<std::string, std::vector<Detection>> dets_by_image;
    for (const auto& d : dets) dets_by_image[d.image_id].push_back(d.det);
    std::map<std::string, std::vector<GtObject>> gts_by_image;
    for (const auto& g : gts) gts_by_image[g.image_id].push_back(g.obj);

    const auto weight_of = [&](const GtObject& gt) {
        if (weighting == ApWeighting::per_bucket) return 1.0;
        const auto bucket = bucket_of_height(gt.bbox.height());
        return bucket ? bucket_weight(*bucket) : 0.0;
    };

    SweepInput sweep;
    std::set<std::string> image_ids;
    for (const auto& [id, _] : dets_by_image) image_ids.insert(id);
    for (const auto& [id, _] : gts_by_image) image_ids.insert(id);

    for (const auto& id : image_ids) {
        const auto dit = dets_by_image.find(id);
        const auto git = gts_by_image.find(id);
        const std::vector<Detection> image_dets =
            dit == dets_by_image.end() ? std::vector<Detection>{} : dit->second;
        const std::vector<GtObject> image_gts =
            git == gts_by_image.end() ? std::vector<GtObject>{} : git->second;

        const ImageMatch m = greedy_match(image_dets, image_gts, iou_threshold, bucket_filter);
        for (const auto& gt : m.scorable_gts) {
            sweep.total_gt_weight += weight_of(gt);
            ++sweep.scorable_gt_count;
        }
        for (const auto& ld : m.dets) {
            if (ld.label == DetLabel::ignored) continue;
            ScoredDet s;
            s.confidence = ld.det.confidence;
            s.tp = ld.label == DetLabel::tp;
            s.weight = s.tp ? weight_of(m.scorable_gts[ld.gt_index]) : 1.0;
            sweep.dets.push_back(s);
        }
    }
    std::sort(sweep.dets.begin(), sweep.dets.end(),
              [](const ScoredDet& a, const ScoredDet& b) { return a.confidence > b.confidence; });
    return sweep;
}

// PR staircase, one point per distinct confidence. All detections tied at a
// confidence enter the curve together.
std::vector<PrPoint> sweep_to_points(const SweepInput& sweep) {
    std::vector<PrPoint> points;
    double tp_weight = 0.0;
    std::int64_t fp_count = 0;
    for (std::size_t i = 0; i < sweep.dets.size(); ++i) {
        const ScoredDet& s = sweep.dets[i];
        if (s.tp) {
            tp_weight += s.weight;
        } else {
            ++fp_count;
        }
        const bool group_end =
            i + 1 == sweep.dets.size() || sweep.dets[i + 1].confidence != s.confidence;
        if (!group_end) continue;
        PrPoint pt;
        pt.confidence = s.confidence;
        pt.recall = sweep.total_gt_weight > 0 ? tp_weight / sweep.total_gt_weight : 0.0;
        const double denom = tp_weight + static_cast<double>(fp_count);
        pt.precision = denom > 0 ? tp_weight / denom : 0.0;
        points.push_back(pt);
    }
    return points;
}

double all_point_area(const std::vector<PrPoint>& points) {
    // Right-to-left precision envelope, then rectangle sum.
    std::vector<double> envelope(points.size());
    double running = 0.0;
    for (std::size_t i = points.size(); i-- > 0;) {
        running = std::max(running, points[i].precision);
        envelope[i] = running;
    }
    double area = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        area += (points[i].recall - prev_recall) * envelope[i];
        prev_recall = points[i].recall;
    }
    return area;
}

} // namespace

std::optional<double> average_precision(const std::vector<ImageDetection>& dets,
                                        const std::vector<GtInstance>& gts,
                                        std::optional<SizeBucket> bucket_filter,
                                        ApWeighting weighting, double iou_threshold) {
    const SweepInput sweep = build_sweep(dets, gts, bucket_filter, weighting, iou_threshold);
    if (sweep.scorable_gt_count == 0) return std::nullopt;
    return all_point_area(sweep_to_points(sweep)) * 100.0;
}

std::vector<PrPoint> pr_curve(const std::vector<ImageDetection>& dets,
                              const std::vector<GtInstance>& gts, ApWeighting weighting,
                              double iou_threshold) {
    return sweep_to_points(build_sweep(dets, gts, std::nullopt, weighting, iou_threshold));
}

std::optional<double> weighted_map_per_bucket(const BucketApSet& aps) {
    double num = 0.0;
    double denom = 0.0;
    if (aps.small) {
        num += 0.5 * *aps.small;
        denom += 0.5;
    }
    if (aps.medium) {
        num += 1.0 * *aps.medium;
        denom += 1.0;
    }
    if (aps.large) {
        num += 5.0 * *aps.large;
        denom += 5.0;
    }
    if (denom == 0.0) return std::nullopt;
    return num / denom;
}

RocResult roc_and_fpr(const std::vector<DetectionGrid>& pred_grids,
                      const std::vector<DetectionGrid>& target_grids,
                      const std::vector<double>& thresholds) {
    if (pred_grids.size() != target_grids.size()) throw DataError("roc: grid count mismatch");
    std::vector<double> neg_p;
    std::vector<double> pos_p;
    for (std::size_t i = 0; i < pred_grids.size(); ++i) {
        const DetectionGrid& pred = pred_grids[i];
        const DetectionGrid& target = target_grids[i];
        if (!pred.same_shape(target)) throw DataError("roc: grid shape mismatch");
        for (int y = 0; y < pred.height; ++y) {
            for (int x = 0; x < pred.width; ++x) {
                (target.at(x, y, 0) == 1.0f ? pos_p : neg_p)
                    .push_back(static_cast<double>(pred.at(x, y, 0)));
            }
        }
    }
    std::sort(neg_p.begin(), neg_p.end());
    std::sort(pos_p.begin(), pos_p.end());

    RocResult result;
    result.negatives = static_cast<std::int64_t>(neg_p.size());
    result.positives = static_cast<std::int64_t>(pos_p.size());
    for (double theta : thresholds) {
        RocPoint pt;
        pt.threshold = theta;
        const auto fp = neg_p.end() - std::lower_bound(neg_p.begin(), neg_p.end(), theta);
        pt.fpr = neg_p.empty() ? 0.0 : static_cast<double>(fp) / static_cast<double>(neg_p.size());
        if (!pos_p.empty()) {
            const auto tp = pos_p.end() - std::lower_bound(pos_p.begin(), pos_p.end(), theta);
            pt.tpr = static_cast<double>(tp) / static_cast<double>(pos_p.size());
        }
        result.points.push_back(pt);
    }
    return result;
}

double fpr_at_threshold(const std::vector<DetectionGrid>& pred_grids,
                        const std::vector<DetectionGrid>& target_grids, double threshold) {
    return roc_and_fpr(pred_grids, target_grids, {threshold}).points.front().fpr;
}

double select_threshold(const std::vector<ImageDetection>& dets,
                        const std::vector<GtInstance>& gts, double iou_threshold) {
    if (gts.empty()) throw DataError("select_threshold: empty validation set");

    std::set<double> candidate_set;
    for (int k = 0; k <= 20; ++k) candidate_set.insert(0.05 * k);
    for (const auto& d : dets) candidate_set.insert(d.det.confidence);

    double best_theta = 0.0;
    double best_f1 = -1.0;
    for (double theta : candidate_set) {
        std::vector<ImageDetection> kept;
        for (const auto& d : dets) {
            if (d.det.confidence >= theta) kept.push_back(d);
        }
        const SweepInput sweep = build_sweep(kept, gts, std::nullopt, ApWeighting::per_bucket,
                                             iou_threshold);
        std::int64_t tp = 0, fp = 0;
        for (const auto& s : sweep.dets) (s.tp ? tp : fp) += 1;
        const double precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        const double recall = sweep.scorable_gt_count > 0
                                  ? static_cast<double>(tp) / sweep.scorable_gt_count
                                  : 0.0;
        const double f1 =
            precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        if (f1 >= best_f1) { // >= ties break toward the larger threshold
            best_f1 = f1;
            best_theta = theta;
        }
    }
    return best_theta;
}

std::vector<AugmentationRequest> mine_failures(const std::vector<FailureInstance>& failures,
                                               const AssetCatalog& catalog) {
    // key: (asset_id or "", bucket index or -1, env key) -> request
    std::map<std::tuple<std::string, int, std::array<int, 4>>, AugmentationRequest> synth;
    std::map<std::string, AugmentationRequest> hard_neg; // by scene id

    for (const auto& f : failures) {
        if (f.kind == "fp") {
            auto& req = hard_neg[f.image_id];
            if (req.count == 0) {
                req.kind = RequestKind::hard_negative;
                req.env = f.env;
                req.scene_ids = {f.image_id};
            }
            ++req.count;
            continue;
        }

        const DebrisAsset* nearest = nullptr;
        if (f.size_3d) {
            const double v = f.size_3d->volume();
            double best_diff = std::numeric_limits<double>::infinity();
            for (const auto& asset : catalog.assets) {
                const double diff = std::abs(asset.dims.volume() - v);
                if (diff < best_diff) {
                    best_diff = diff;
                    nearest = &asset;
                }
            }
            if (nearest && v > 0 && best_diff / v > 0.25) nearest = nullptr;
        }

        std::tuple<std::string, int, std::array<int, 4>> key;
        AugmentationRequest req;
        req.kind = RequestKind::synthetic_debris;
        req.env = f.env;
        if (nearest) {
            req.asset_id = nearest->asset_id;
            req.dims_m = nearest->dims;
            key = {nearest->asset_id, -1, f.env.key()};
        } else {
            req.pixel_bucket = bucket_of_height(f.bbox.height()).value_or(SizeBucket::small);
            key = {"", static_cast<int>(*req.pixel_bucket), f.env.key()};
        }
        auto [it, inserted] = synth.emplace(key, std::move(req));
        ++it->second.count;
    }

    std::vector<AugmentationRequest> requests;
    for (auto& [_, req] : synth) requests.push_back(std::move(req));
    for (auto& [_, req] : hard_neg) requests.push_back(std::move(req));
    return requests;
}

namespace {

json env_to_json(const EnvTags& env) {
    return {{"road_type", to_string(env.road_type)},
            {"time_of_day", to_string(env.time_of_day)},
            {"weather", to_string(env.weather)},
            {"traffic_level", to_string(env.traffic_level)}};
}

EnvTags env_from_json(const json& j) {
    EnvTags env;
    env.road_type = road_type_from_string(j.at("road_type").get<std::string>());
    env.time_of_day = time_of_day_from_string(j.at("time_of_day").get<std::string>());
    env.weather = weather_from_string(j.at("weather").get<std::string>());
    env.traffic_level = traffic_level_from_string(j.at("traffic_level").get<std::string>());
    return env;
}

json optional_to_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

} // namespace

void write_report_json(const std::filesystem::path& path, const EvalReport& report,
                       std::uint64_t dataset_seed, const std::string& config_hash) {
    json j;
    j["tool_version"] = k_tool_version;
    j["dataset_seed"] = dataset_seed;
    j["config_hash"] = config_hash;
    j["weighting_mode"] = report.weighting_mode;
    j["ap_small"] = optional_to_json(report.ap_small);
    j["ap_medium"] = optional_to_json(report.ap_medium);
    j["ap_large"] = optional_to_json(report.ap_large);
    j["map_all"] = optional_to_json(report.map_all);
    j["map_per_bucket"] = optional_to_json(report.map_per_bucket);
    j["map_per_instance"] = optional_to_json(report.map_per_instance);
    j["chosen_threshold"] = report.chosen_threshold;
    j["fpr_at_threshold"] = report.fpr;
    j["counts"] = {{"gt_small", report.counts.gt_small}, {"gt_medium", report.counts.gt_medium},
                   {"gt_large", report.counts.gt_large}, {"tp", report.counts.tp},
                   {"fp", report.counts.fp},             {"fn", report.counts.fn}};
    j["failure_count"] = report.counts.fp + report.counts.fn;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report: " + path.string());
    out << j.dump(2) << '\n';
}

void write_pr_csv(const std::filesystem::path& path, const std::vector<PrPoint>& points) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write csv: " + path.string());
    out << "confidence,recall,precision\n";
    char buf[128];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g\n", p.confidence, p.recall,
                      p.precision);
        out << buf;
    }
}

void write_roc_csv(const std::filesystem::path& path, const std::vector<RocPoint>& points) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write csv: " + path.string());
    out << "threshold,fpr,tpr\n";
    char buf[128];
    for (const auto& p : points) {
        if (p.tpr) {
            std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g\n", p.threshold, p.fpr, *p.tpr);
        } else {
            std::snprintf(buf, sizeof(buf), "%.10g,%.10g,\n", p.threshold, p.fpr);
        }
        out << buf;
    }
}

void write_failures_jsonl(const std::filesystem::path& path,
                          const std::vector<FailureInstance>& failures) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write failures: " + path.string());
    for (const auto& f : failures) {
        json j;
        j["image_id"] = f.image_id;
        j["kind"] = f.kind;
        j["bbox"] = {f.bbox.x_min, f.bbox.y_min, f.bbox.x_max, f.bbox.y_max};
        if (f.confidence) j["confidence"] = *f.confidence;
        if (f.size_3d) j["size_3d"] = {f.size_3d->l, f.size_3d->w, f.size_3d->h};
        j["env"] = env_to_json(f.env);
        out << j.dump() << '\n';
    }
}

std::vector<FailureInstance> read_failures_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open failures: " + path.string());
    std::vector<FailureInstance> failures;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            FailureInstance f;
            f.image_id = j.at("image_id").get<std::string>();
            f.kind = j.at("kind").get<std::string>();
            if (f.kind != "fp" && f.kind != "fn") throw DataError("kind must be fp or fn");
            const json& b = j.at("bbox");
            f.bbox = BoxF{b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                          b.at(3).get<double>()};
            if (j.contains("confidence")) f.confidence = j.at("confidence").get<double>();
            if (j.contains("size_3d")) {
                const json& s = j.at("size_3d");
                f.size_3d =
                    Dims3{s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>()};
            }
            f.env = env_from_json(j.at("env"));
            failures.push_back(std::move(f));
        } catch (const json::exception& e) {
            throw DataError("failures parse error at line " + std::to_string(line_no) + ": " +
                            e.what());
        }
    }
    return failures;
}

void write_requests_jsonl(const std::filesystem::path& path,
                          const std::vector<AugmentationRequest>& requests) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write requests: " + path.string());
    for (const auto& r : requests) {
        json j;
        j["kind"] = r.kind == RequestKind::synthetic_debris ? "synthetic_debris" : "hard_negative";
        if (r.asset_id) j["asset_id"] = *r.asset_id;
        if (r.dims_m) j["dims_m"] = {r.dims_m->l, r.dims_m->w, r.dims_m->h};
        if (r.pixel_bucket) j["pixel_bucket"] = to_string(*r.pixel_bucket);
        j["env"] = env_to_json(r.env);
        j["count"] = r.count;
        if (!r.scene_ids.empty()) j["scene_ids"] = r.scene_ids;
        out << j.dump() << '\n';
    }
}

std::vector<AugmentationRequest> read_requests_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open requests: " + path.string());
    std::vector<AugmentationRequest> requests;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            AugmentationRequest r;
            const std::string kind = j.at("kind").get<std::string>();
            if (kind == "synthetic_debris") {
                r.kind = RequestKind::synthetic_debris;
            } else if (kind == "hard_negative") {
                r.kind = RequestKind::hard_negative;
            } else {
                throw DataError("unknown request kind '" + kind + "'");
            }
            if (j.contains("asset_id")) r.asset_id = j.at("asset_id").get<std::string>();
            if (j.contains("dims_m")) {
                const json& s = j.at("dims_m");
                r.dims_m =
                    Dims3{s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>()};
            }
            if (j.contains("pixel_bucket")) {
                const std::string b = j.at("pixel_bucket").get<std::string>();
                if (b == "small") r.pixel_bucket = SizeBucket::small;
                else if (b == "medium") r.pixel_bucket = SizeBucket::medium;
                else if (b == "large") r.pixel_bucket = SizeBucket::large;
                else throw DataError("unknown pixel_bucket '" + b + "'");
            }
            r.env = env_from_json(j.at("env"));
            r.count = j.at("count").get<int>();
            if (j.contains("scene_ids")) {
                r.scene_ids = j.at("scene_ids").get<std::vector<std::string>>();
            }
            requests.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw DataError("requests parse error at line " + std::to_string(line_no) + ": " +
                            e.what());
        }
    }
    return requests;
}

} // namespace debris
