#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "debris/geometry.hpp"

namespace debris {

// Dense detector head tensor: one confidence channel plus four box channels
// (x_c, y_c, w/2, h/2 normalized by image width/height) per cell. Stored
// row-major (y, x, channel) in float32.
struct DetectionGrid {
    int width = 120;
    int height = 68;
    static constexpr int k_channels = 5;
    std::vector<float> cells;

    DetectionGrid() : cells(static_cast<std::size_t>(width) * height * k_channels, 0.0f) {}
    DetectionGrid(int w, int h)
        : width(w), height(h), cells(static_cast<std::size_t>(w) * h * k_channels, 0.0f) {}

    float& at(int x, int y, int c) {
        return cells[(static_cast<std::size_t>(y) * width + x) * k_channels + c];
    }
    float at(int x, int y, int c) const {
        return cells[(static_cast<std::size_t>(y) * width + x) * k_channels + c];
    }
    bool same_shape(const DetectionGrid& o) const { return width == o.width && height == o.height; }
};

struct LossConfig {
    double epsilon = 1e-7;

    void validate() const; // epsilon in (0, 1e-3)
};

struct Detection {
    BoxF bbox;
    double confidence = 0.0;
};

struct EncodeResult {
    DetectionGrid grid;
    int cell_collisions = 0; // boxes whose center cell was already hot
};

// One hot cell per box: the cell containing the box center gets t=1 and the
// normalized box channels; later boxes overwrite earlier ones on collision.
EncodeResult encode_targets(const std::vector<BoxF>& boxes, int image_width, int image_height,
                            int grid_width, int grid_height);

// Mean over all cells of -[t*log(p+eps) + (1-t)*log(1-p+eps)]. Finite for
// every p in [0,1], including the boundaries.
double bce_loss(const DetectionGrid& target, const DetectionGrid& pred, const LossConfig& cfg);

// Sum of the 4-channel L1 differences over cells with t=1, divided by
// max(1, hot cell count). Cells with t=0 contribute nothing.
double l1_loss(const DetectionGrid& target, const DetectionGrid& pred);

// Analytic gradients of the two losses w.r.t. one prediction entry; used by
// the finite-difference verification.
double bce_loss_grad(const DetectionGrid& target, const DetectionGrid& pred, const LossConfig& cfg,
                     int x, int y);
double l1_loss_grad(const DetectionGrid& target, const DetectionGrid& pred, int x, int y,
                    int channel);

// Cells with p >= threshold become detections, de-normalized by inverting the
// encoding; sorted by descending confidence.
std::vector<Detection> decode_grid(const DetectionGrid& pred, int image_width, int image_height,
                                   double conf_threshold);

double iou(const BoxF& a, const BoxF& b);

// Greedy NMS: keep the highest-confidence remaining detection, drop everything
// with iou >= threshold against it. Ties break toward smaller area, then
// lexicographic bbox.
std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold);

// Flat binary grid file: magic "HZGD", little-endian u32 {W, H, C=5}, then
// float32 row-major (y, x, channel) data.
void write_grid(const std::filesystem::path& path, const DetectionGrid& grid);
DetectionGrid read_grid(const std::filesystem::path& path);

// Detections JSONL: {image_id, bbox:[x_min,y_min,x_max,y_max], confidence}.
struct ImageDetection {
    std::string image_id;
    Detection det;
};
void write_detections_jsonl(const std::filesystem::path& path,
                            const std::vector<ImageDetection>& dets);
std::vector<ImageDetection> read_detections_jsonl(const std::filesystem::path& path);

} // namespace debris
