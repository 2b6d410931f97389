#include "arts/metrics.hpp"

#include <cmath>

#include "arts/error.hpp"
#include "arts/rotations.hpp"

namespace arts {

namespace {

constexpr double kMillimeters = 1000.0;

void check_pair(const Points& a, const Points& b, const char* what) {
    require(a.rows() == b.rows(), ErrorKind::shape_mismatch, std::string(what) + ": point counts differ");
    require(a.rows() > 0, ErrorKind::invalid_argument, std::string(what) + ": empty input");
}

// Neumaier compensated sum, so means stay within an ulp or so of exact.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

double mean_distance(const Points& a, const Points& b) {
    CompensatedSum total;
    for (Eigen::Index i = 0; i < a.rows(); ++i) total.add((a.row(i) - b.row(i)).norm());
    return total.value() / static_cast<double>(a.rows()) * kMillimeters;
}

}  // namespace

double mpjpe(const Points& pred, const Points& gt) {
    check_pair(pred, gt, "mpjpe");
    return mean_distance(pred.rowwise() - pred.row(0), gt.rowwise() - gt.row(0));
}

double pa_mpjpe(const Points& pred, const Points& gt) {
    check_pair(pred, gt, "pa_mpjpe");
    require(pred.rows() >= 3, ErrorKind::invalid_argument, "pa_mpjpe: at least 3 joints are required");
    return mean_distance(similarity_procrustes(pred, gt).apply(pred), gt);
}

double mpvpe(const Points& pred_vertices, const Points& gt_vertices, const Vec3& pred_root, const Vec3& gt_root) {
    check_pair(pred_vertices, gt_vertices, "mpvpe");
    return mean_distance(pred_vertices.rowwise() - pred_root.transpose(), gt_vertices.rowwise() - gt_root.transpose());
}

double mpvpe(const Points& pred_vertices, const Points& gt_vertices, const MiniBodyModel& model) {
    check_pair(pred_vertices, gt_vertices, "mpvpe");
    const Vec3 pred_root = (model.joint_regressor.row(0) * pred_vertices).transpose();
    const Vec3 gt_root = (model.joint_regressor.row(0) * gt_vertices).transpose();
    return mpvpe(pred_vertices, gt_vertices, pred_root, gt_root);
}

double accel_error(const PointSequence& pred, const PointSequence& gt, std::optional<double> fps) {
    require(pred.size() == gt.size(), ErrorKind::shape_mismatch, "accel_error: frame counts differ");
    require(pred.size() >= 3, ErrorKind::invalid_argument, "accel_error: at least 3 frames are required");
    CompensatedSum total;
    long count = 0;
    for (size_t t = 1; t + 1 < pred.size(); ++t) {
        check_pair(pred[t], gt[t], "accel_error");
        const Points ap = pred[t + 1] - 2.0 * pred[t] + pred[t - 1];
        const Points ag = gt[t + 1] - 2.0 * gt[t] + gt[t - 1];
        for (Eigen::Index j = 0; j < ap.rows(); ++j) total.add((ap.row(j) - ag.row(j)).norm());
        count += ap.rows();
    }
    double out = total.value() / static_cast<double>(count) * kMillimeters;
    if (fps) {
        require(*fps > 0.0, ErrorKind::invalid_argument, "accel_error: fps must be positive");
        out *= *fps * *fps;
    }
    return out;
}

}  // namespace arts
