#pragma once

#include <array>
#include <optional>

#include "debris/geometry.hpp"

namespace debris {

// Pinhole camera over a flat ground plane. World frame sits at the camera's
// ground foot: x lateral (right positive), y forward along the optical ground
// axis, z up. The camera is at (0, 0, cam_height), pitched down by `pitch`.
struct CameraCalib {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    double cam_height = 0.0; // meters above ground
    double pitch = 0.0;      // radians, downward positive

    bool valid() const;
};

struct GroundPose {
    double forward = 0.0; // meters, > 0
    double lateral = 0.0; // meters, right positive
    double yaw = 0.0;
    double obj_pitch = 0.0;
    double roll = 0.0;
};

// Object extents in meters: length along the object's forward axis, width
// lateral, height up.
struct Dims3 {
    double l = 0.0;
    double w = 0.0;
    double h = 0.0;

    double volume() const { return l * w * h; }
};

// Projects a world point; empty when the camera-frame depth is <= 0.
std::optional<Vec2> ground_to_image(const CameraCalib& calib, double forward, double lateral,
                                    double up);

// Image row of the flat-ground vanishing line. Ground-contact boxes must have
// y_max strictly below (numerically greater than) this row.
double horizon_row(const CameraCalib& calib);

// AABB of the projected upright cuboid, clipped to [0,w]x[0,h]. Empty when a
// corner is behind the camera or the hull misses the image.
std::optional<BoxF> project_cuboid_bbox(const CameraCalib& calib, const GroundPose& pose,
                                        const Dims3& dims, int image_width, int image_height);

// Inverse of ground_to_image for ground points (up = 0). Empty at or above the
// horizon row.
std::optional<Vec2> image_to_ground(const CameraCalib& calib, double u, double v);

// Image row where the lateral ground line at depth `forward` appears, and the
// lateral offset of image column u on that line. The row is independent of
// lateral position for a roll-free camera.
double ground_row_at_forward(const CameraCalib& calib, double forward);
double lateral_at(const CameraCalib& calib, double forward, double u);

} // namespace debris
