#pragma once

#include <optional>

#include "arts/body_model.hpp"
#include "arts/types.hpp"

namespace arts {

// Errors in millimeters; inputs in meters.
struct MetricReport {
    double mpjpe = 0.0;
    double pa_mpjpe = 0.0;
    double mpvpe = 0.0;
    double accel = 0.0;  // mm/frame^2, or mm/s^2 when fps is given
};

// Mean joint distance after subtracting each set's root joint (row 0).
double mpjpe(const Points& pred, const Points& gt);

// Mean joint distance after similarity-aligning pred onto gt.
double pa_mpjpe(const Points& pred, const Points& gt);

// Mean vertex distance after subtracting each mesh's regressed root joint.
double mpvpe(const Points& pred_vertices, const Points& gt_vertices, const MiniBodyModel& model);
// Same, with explicit root positions.
double mpvpe(const Points& pred_vertices, const Points& gt_vertices, const Vec3& pred_root, const Vec3& gt_root);

// Mean over interior frames and joints of |a_pred - a_gt|, a_t the second
// difference J_{t+1} - 2 J_t + J_{t-1}. Requires T >= 3.
double accel_error(const PointSequence& pred, const PointSequence& gt, std::optional<double> fps = std::nullopt);

}  // namespace arts
