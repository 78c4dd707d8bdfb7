#include "debris/camera.hpp"

#include <algorithm>
#include <cmath>

namespace debris {

bool CameraCalib::valid() const {
    return fx > 0.0 && fy > 0.0 && cam_height > 0.0 && std::abs(pitch) < M_PI / 2.0 &&
           std::isfinite(cx) && std::isfinite(cy);
}

namespace {

// Camera-frame coordinates (x right, y down, z along the optical axis) of a
// world point. With pitch t, the optical axis is (0, cos t, -sin t).
struct CamPoint {
    double x, y, z;
};

CamPoint to_camera(const CameraCalib& calib, double lateral, double forward, double up) {
    const double s = std::sin(calib.pitch);
    const double c = std::cos(calib.pitch);
    const double dz = up - calib.cam_height;
    return {lateral, -forward * s - dz * c, forward * c - dz * s};
}

} // namespace

std::optional<Vec2> ground_to_image(const CameraCalib& calib, double forward, double lateral,
                                    double up) {
    const CamPoint p = to_camera(calib, lateral, forward, up);
    if (p.z <= 0.0) return std::nullopt;
    return Vec2{calib.cx + calib.fx * p.x / p.z, calib.cy + calib.fy * p.y / p.z};
}

double horizon_row(const CameraCalib& calib) {
    return calib.cy - calib.fy * std::tan(calib.pitch);
}

std::optional<BoxF> project_cuboid_bbox(const CameraCalib& calib, const GroundPose& pose,
                                        const Dims3& dims, int image_width, int image_height) {
    // Local object frame: x width, y length, z up; base center at the origin.
    const std::array<std::array<double, 3>, 8> corners = {{
        {-dims.w / 2, -dims.l / 2, 0},
        {+dims.w / 2, -dims.l / 2, 0},
        {-dims.w / 2, +dims.l / 2, 0},
        {+dims.w / 2, +dims.l / 2, 0},
        {-dims.w / 2, -dims.l / 2, dims.h},
        {+dims.w / 2, -dims.l / 2, dims.h},
        {-dims.w / 2, +dims.l / 2, dims.h},
        {+dims.w / 2, +dims.l / 2, dims.h},
    }};

    const double cy_ = std::cos(pose.yaw), sy_ = std::sin(pose.yaw);
    const double cp = std::cos(pose.obj_pitch), sp = std::sin(pose.obj_pitch);
    const double cr = std::cos(pose.roll), sr = std::sin(pose.roll);

    BoxF hull{1e30, 1e30, -1e30, -1e30};
    for (const auto& corner : corners) {
        // roll about local y, then pitch about local x, then yaw about z.
        double x = corner[0] * cr + corner[2] * sr;
        double y = corner[1];
        double z = -corner[0] * sr + corner[2] * cr;
        const double y2 = y * cp - z * sp;
        const double z2 = y * sp + z * cp;
        y = y2;
        z = z2;
        const double wx = x * cy_ - y * sy_ + pose.lateral;
        const double wy = x * sy_ + y * cy_ + pose.forward;
        const auto px = ground_to_image(calib, wy, wx, z);
        if (!px) return std::nullopt;
        hull.x_min = std::min(hull.x_min, px->x);
        hull.y_min = std::min(hull.y_min, px->y);
        hull.x_max = std::max(hull.x_max, px->x);
        hull.y_max = std::max(hull.y_max, px->y);
    }

    BoxF clipped{std::max(hull.x_min, 0.0), std::max(hull.y_min, 0.0),
                 std::min(hull.x_max, static_cast<double>(image_width)),
                 std::min(hull.y_max, static_cast<double>(image_height))};
    if (!clipped.valid()) return std::nullopt;
    return clipped;
}

std::optional<Vec2> image_to_ground(const CameraCalib& calib, double u, double v) {
    const double s = std::sin(calib.pitch);
    const double c = std::cos(calib.pitch);
    const double a = (v - calib.cy) / calib.fy;
    const double denom = a * c + s;
    if (denom <= 0.0) return std::nullopt; // at or above the horizon
    const double forward = calib.cam_height * (c - a * s) / denom;
    if (forward <= 0.0) return std::nullopt;
    const double depth = forward * c + calib.cam_height * s;
    const double lateral = (u - calib.cx) / calib.fx * depth;
    return Vec2{lateral, forward};
}

double ground_row_at_forward(const CameraCalib& calib, double forward) {
    const double s = std::sin(calib.pitch);
    const double c = std::cos(calib.pitch);
    const double depth = forward * c + calib.cam_height * s;
    return calib.cy + calib.fy * (-forward * s + calib.cam_height * c) / depth;
}

double lateral_at(const CameraCalib& calib, double forward, double u) {
    const double s = std::sin(calib.pitch);
    const double c = std::cos(calib.pitch);
    const double depth = forward * c + calib.cam_height * s;
    return (u - calib.cx) / calib.fx * depth;
}

} // namespace debris
