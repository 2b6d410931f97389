#include "arts/kinematics.hpp"

#include <string>

#include "arts/error.hpp"

namespace arts {

IkSolution analytic_ik(const Points& joints, const Points& rest, const KinematicTree& tree,
                       std::span<const double> twist_angles) {
    const int n = tree.size();
    require(joints.rows() == n && rest.rows() == n, ErrorKind::shape_mismatch, "analytic_ik: joint count mismatch");
    require(twist_angles.empty() || static_cast<int>(twist_angles.size()) == n, ErrorKind::shape_mismatch,
            "analytic_ik: twist angle count mismatch");
    IkSolution out;
    out.swings.assign(n, Rotation::identity());
    out.local.assign(n, Rotation::identity());
    std::vector<Mat3> world(n, Mat3::Identity());

    const auto offset = [](const Points& p, int from, int to) -> Vec3 {
        return p.row(to).transpose() - p.row(from).transpose();
    };

    for (int j : tree.order()) {
        const int p = tree.parent(j);
        const Mat3 parent_world = p < 0 ? Mat3::Identity() : world[p];
        const auto& children = tree.children(j);
        const double twist = (p < 0 || twist_angles.empty()) ? 0.0 : twist_angles[j];

        for (int c : children) {
            require(offset(rest, j, c).norm() > 1e-9 && offset(joints, j, c).norm() > 1e-9, ErrorKind::degenerate,
                    "analytic_ik: zero-length bone " + std::to_string(j) + "-" + std::to_string(c));
        }

        if (children.size() >= 2) {
            Points from(children.size(), 3), to(children.size(), 3);
            for (size_t i = 0; i < children.size(); ++i) {
                from.row(i) = offset(rest, j, children[i]).normalized().transpose();
                to.row(i) = (parent_world.transpose() * offset(joints, j, children[i])).normalized().transpose();
            }
            const Rotation fit = kabsch_directions(from, to);
            if (p < 0) {
                out.swings[j] = fit;
                out.local[j] = fit;
            } else {
                const Vec3 axis = tree.twist_axis(rest, j);
                out.swings[j] = swing_twist_decompose(fit, axis).swing;
                out.local[j] = out.swings[j] * Rotation::about(axis, twist);
            }
        } else if (children.size() == 1) {
            const int c = children.front();
            out.swings[j] = swing_between(offset(rest, j, c), parent_world.transpose() * offset(joints, j, c));
            out.local[j] = p < 0 ? out.swings[j] : out.swings[j] * Rotation::about(tree.twist_axis(rest, j), twist);
        } else if (p >= 0) {
            out.local[j] = Rotation::about(tree.twist_axis(rest, j), twist);
        }
        world[j] = parent_world * out.local[j].matrix();
    }
    return out;
}

std::vector<Rotation> analytic_swing(const Points& joints, const Points& rest, const KinematicTree& tree) {
    return analytic_ik(joints, rest, tree).swings;
}

std::vector<double> twist_targets(std::span<const Rotation> local, const Points& rest, const KinematicTree& tree) {
    const int n = tree.size();
    require(static_cast<int>(local.size()) == n, ErrorKind::shape_mismatch, "twist_targets: rotation count mismatch");
    std::vector<double> out(n, 0.0);
    for (int j = 1; j < n; ++j) out[j] = swing_twist_decompose(local[j], tree.twist_axis(rest, j)).twist_angle;
    return out;
}

}  // namespace arts
