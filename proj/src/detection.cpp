#include "debris/detection.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "debris/errors.hpp"

namespace debris {

using nlohmann::json;

void LossConfig::validate() const {
    if (!(epsilon > 0.0 && epsilon < 1e-3)) throw DataError("epsilon must be in (0, 1e-3)");
}

EncodeResult encode_targets(const std::vector<BoxF>& boxes, int image_width, int image_height,
                            int grid_width, int grid_height) {
    if (image_width <= 0 || image_height <= 0 || grid_width <= 0 || grid_height <= 0) {
        throw DataError("encode_targets: non-positive dimensions");
    }
    EncodeResult result;
    result.grid = DetectionGrid(grid_width, grid_height);
    const double stride_x = static_cast<double>(image_width) / grid_width;
    const double stride_y = static_cast<double>(image_height) / grid_height;

    for (const auto& box : boxes) {
        if (!box.valid() || box.x_min < 0 || box.y_min < 0 || box.x_max > image_width ||
            box.y_max > image_height) {
            throw DataError("encode_targets: box outside image");
        }
        const Vec2 c = box.center();
        const int gx = std::min(grid_width - 1, static_cast<int>(std::floor(c.x / stride_x)));
        const int gy = std::min(grid_height - 1, static_cast<int>(std::floor(c.y / stride_y)));
        if (result.grid.at(gx, gy, 0) == 1.0f) ++result.cell_collisions;
        result.grid.at(gx, gy, 0) = 1.0f;
        result.grid.at(gx, gy, 1) = static_cast<float>(c.x / image_width);
        result.grid.at(gx, gy, 2) = static_cast<float>(c.y / image_height);
        result.grid.at(gx, gy, 3) = static_cast<float>(box.width() / (2.0 * image_width));
        result.grid.at(gx, gy, 4) = static_cast<float>(box.height() / (2.0 * image_height));
    }
    return result;
}

double bce_loss(const DetectionGrid& target, const DetectionGrid& pred, const LossConfig& cfg) {
    cfg.validate();
    if (!target.same_shape(pred)) throw DataError("bce_loss: shape mismatch");
    double acc = 0.0;
    for (int y = 0; y < target.height; ++y) {
        for (int x = 0; x < target.width; ++x) {
            const double t = target.at(x, y, 0);
            const double p = pred.at(x, y, 0);
            acc -= t * std::log(p + cfg.epsilon) + (1.0 - t) * std::log(1.0 - p + cfg.epsilon);
        }
    }
    return acc / (static_cast<double>(target.width) * target.height);
}

double bce_loss_grad(const DetectionGrid& target, const DetectionGrid& pred, const LossConfig& cfg,
                     int x, int y) {
    const double t = target.at(x, y, 0);
    const double p = pred.at(x, y, 0);
    const double n = static_cast<double>(target.width) * target.height;
    return -(t / (p + cfg.epsilon) - (1.0 - t) / (1.0 - p + cfg.epsilon)) / n;
}

namespace {

int count_hot(const DetectionGrid& target) {
    int hot = 0;
    for (int y = 0; y < target.height; ++y) {
        for (int x = 0; x < target.width; ++x) {
            if (target.at(x, y, 0) == 1.0f) ++hot;
        }
    }
    return hot;
}

} // namespace

double l1_loss(const DetectionGrid& target, const DetectionGrid& pred) {
    if (!target.same_shape(pred)) throw DataError("l1_loss: shape mismatch");
    double acc = 0.0;
    int hot = 0;
    for (int y = 0; y < target.height; ++y) {
        for (int x = 0; x < target.width; ++x) {
            if (target.at(x, y, 0) != 1.0f) continue;
            ++hot;
            for (int c = 1; c < DetectionGrid::k_channels; ++c) {
                acc += std::abs(static_cast<double>(target.at(x, y, c)) - pred.at(x, y, c));
            }
        }
    }
    return acc / std::max(1, hot);
}

double l1_loss_grad(const DetectionGrid& target, const DetectionGrid& pred, int x, int y,
                    int channel) {
    if (target.at(x, y, 0) != 1.0f) return 0.0;
    const double diff = static_cast<double>(pred.at(x, y, channel)) - target.at(x, y, channel);
    const double sign = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
    return sign / std::max(1, count_hot(target));
}

std::vector<Detection> decode_grid(const DetectionGrid& pred, int image_width, int image_height,
                                   double conf_threshold) {
    if (conf_threshold < 0.0 || conf_threshold > 1.0) {
        throw DataError("decode_grid: threshold must be in [0,1]");
    }
    std::vector<Detection> dets;
    for (int y = 0; y < pred.height; ++y) {
        for (int x = 0; x < pred.width; ++x) {
            const double p = pred.at(x, y, 0);
            if (p < conf_threshold) continue;
            const double cx = static_cast<double>(pred.at(x, y, 1)) * image_width;
            const double cy = static_cast<double>(pred.at(x, y, 2)) * image_height;
            const double half_w = static_cast<double>(pred.at(x, y, 3)) * image_width;
            const double half_h = static_cast<double>(pred.at(x, y, 4)) * image_height;
            dets.push_back({BoxF{cx - half_w, cy - half_h, cx + half_w, cy + half_h}, p});
        }
    }
    std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
        return a.confidence > b.confidence;
    });
    return dets;
}

double iou(const BoxF& a, const BoxF& b) {
    const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

namespace {

bool nms_order(const Detection& a, const Detection& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.bbox.area() != b.bbox.area()) return a.bbox.area() < b.bbox.area();
    const auto key = [](const BoxF& x) {
        return std::array<double, 4>{x.x_min, x.y_min, x.x_max, x.y_max};
    };
    return key(a.bbox) < key(b.bbox);
}

} // namespace

std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold) {
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
        throw DataError("nms: threshold must be in (0,1]");
    }
    std::sort(dets.begin(), dets.end(), nms_order);
    std::vector<Detection> kept;
    for (const auto& d : dets) {
        bool suppressed = false;
        for (const auto& k : kept) {
            if (iou(d.bbox, k.bbox) >= iou_threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

namespace {

constexpr char k_grid_magic[4] = {'H', 'Z', 'G', 'D'};

void put_u32le(std::ostream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                           static_cast<char>((v >> 16) & 0xff),
                           static_cast<char>((v >> 24) & 0xff)};
    out.write(bytes, 4);
}

std::uint32_t get_u32le(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) |
           (static_cast<std::uint32_t>(bytes[3]) << 24);
}

} // namespace

void write_grid(const std::filesystem::path& path, const DetectionGrid& grid) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write grid file: " + path.string());
    out.write(k_grid_magic, 4);
    put_u32le(out, static_cast<std::uint32_t>(grid.width));
    put_u32le(out, static_cast<std::uint32_t>(grid.height));
    put_u32le(out, DetectionGrid::k_channels);
    for (float v : grid.cells) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_u32le(out, bits);
    }
    if (!out) throw IoError("write failed: " + path.string());
}

DetectionGrid read_grid(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open grid file: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, k_grid_magic, 4) != 0) {
        throw DataError("bad grid magic in " + path.string());
    }
    const std::uint32_t w = get_u32le(in);
    const std::uint32_t h = get_u32le(in);
    const std::uint32_t c = get_u32le(in);
    if (!in || c != DetectionGrid::k_channels || w == 0 || h == 0 || w > 1 << 16 || h > 1 << 16) {
        throw DataError("bad grid header in " + path.string());
    }
    DetectionGrid grid(static_cast<int>(w), static_cast<int>(h));
    for (float& v : grid.cells) {
        const std::uint32_t bits = get_u32le(in);
        std::memcpy(&v, &bits, 4);
    }
    if (!in) throw DataError("truncated grid file: " + path.string());
    return grid;
}

void write_detections_jsonl(const std::filesystem::path& path,
                            const std::vector<ImageDetection>& dets) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write detections file: " + path.string());
    for (const auto& d : dets) {
        json j;
        j["image_id"] = d.image_id;
        j["bbox"] = {d.det.bbox.x_min, d.det.bbox.y_min, d.det.bbox.x_max, d.det.bbox.y_max};
        j["confidence"] = d.det.confidence;
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<ImageDetection> read_detections_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open detections file: " + path.string());
    std::vector<ImageDetection> dets;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            ImageDetection d;
            d.image_id = j.at("image_id").get<std::string>();
            const json& b = j.at("bbox");
            d.det.bbox = BoxF{b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                              b.at(3).get<double>()};
            d.det.confidence = j.at("confidence").get<double>();
            if (d.det.confidence < 0.0 || d.det.confidence > 1.0) {
                throw DataError("confidence out of [0,1]");
            }
            dets.push_back(std::move(d));
        } catch (const json::exception& e) {
            throw DataError("detections parse error at line " + std::to_string(line_no) + ": " +
                            e.what());
        } catch (const DataError& e) {
            throw DataError("detections line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return dets;
}

} // namespace debris
