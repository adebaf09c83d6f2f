#include "nmrt/kinematics.hpp"

#include <cmath>

#include "nmrt/errors.hpp"

namespace nmrt {

namespace {

constexpr double kDegenerate = 1e-12;

Quat safe_normalized(const Quat& q) {
  const double n = q.norm();
  if (n < kDegenerate) return Quat::identity();
  return Quat{q.w / n, q.x / n, q.y / n, q.z / n};
}

}  // namespace

std::vector<Vec3> forward_kinematics(const Skeleton& skel, const Pose& pose, bool root_local) {
  const size_t j_count = skel.joints.size();
  if (pose.rotations.size() != j_count)
    fail(ErrKind::LengthMismatch, "pose has " + std::to_string(pose.rotations.size()) +
                                     " rotations for " + std::to_string(j_count) + " joints");
  std::vector<Quat> global(j_count);
  std::vector<Vec3> pos(j_count);
  for (size_t j = 0; j < j_count; ++j) {
    const Joint& joint = skel.joints[j];
    const Quat local = joint.kind == JointKind::Actuated ? safe_normalized(pose.rotations[j])
                                                         : Quat::identity();
    if (joint.parent < 0) {
      global[j] = local;
      pos[j] = root_local ? Vec3{} : pose.root_translation;
    } else {
      const Quat& qp = global[static_cast<size_t>(joint.parent)];
      global[j] = qp * local;
      pos[j] = pos[static_cast<size_t>(joint.parent)] + qp.rotate(joint.offset);
    }
  }
  return pos;
}

std::vector<std::vector<Vec3>> motion_positions(const Skeleton& skel, const MotionClip& clip,
                                                bool root_local) {
  std::vector<std::vector<Vec3>> out;
  out.reserve(clip.frames.size());
  for (const Pose& pose : clip.frames) out.push_back(forward_kinematics(skel, pose, root_local));
  return out;
}

int pose_row_count(const Skeleton& skel) { return 4 * static_cast<int>(skel.joints.size()) + 3; }

Tensor pose_to_rows(const Skeleton& skel, const Pose& pose) {
  const int j_count = static_cast<int>(skel.joints.size());
  if (pose.rotations.size() != static_cast<size_t>(j_count))
    fail(ErrKind::LengthMismatch, "pose has " + std::to_string(pose.rotations.size()) +
                                     " rotations for " + std::to_string(j_count) + " joints");
  std::vector<double> rows(static_cast<size_t>(4 * j_count + 3));
  for (int j = 0; j < j_count; ++j) {
    const Quat& q = pose.rotations[static_cast<size_t>(j)];
    rows[static_cast<size_t>(4 * j + 0)] = q.w;
    rows[static_cast<size_t>(4 * j + 1)] = q.x;
    rows[static_cast<size_t>(4 * j + 2)] = q.y;
    rows[static_cast<size_t>(4 * j + 3)] = q.z;
  }
  rows[static_cast<size_t>(4 * j_count + 0)] = pose.root_translation.x;
  rows[static_cast<size_t>(4 * j_count + 1)] = pose.root_translation.y;
  rows[static_cast<size_t>(4 * j_count + 2)] = pose.root_translation.z;
  return Tensor({4 * j_count + 3}, std::move(rows));
}

Tensor fk_positions(const Skeleton& skel, const Tensor& pose_rows, bool root_local) {
  const int j_count = static_cast<int>(skel.joints.size());
  const int rows_needed = 4 * j_count + 3;
  long rows = 0, cols = 0;
  if (pose_rows.rank() == 1) {
    rows = pose_rows.dim(0);
    cols = 1;
  } else if (pose_rows.rank() == 2) {
    rows = pose_rows.dim(0);
    cols = pose_rows.dim(1);
  } else {
    fail(ErrKind::ShapeMismatch, "fk_positions: expected rank 1 or 2, got " +
                                     shape_name(pose_rows.shape()));
  }
  if (rows != rows_needed)
    fail(ErrKind::LengthMismatch, "fk_positions: " + std::to_string(j_count) + " joints need " +
                                     std::to_string(rows_needed) + " rows, got " +
                                     std::to_string(rows));

  std::vector<int> parent(static_cast<size_t>(j_count));
  std::vector<Vec3> offset(static_cast<size_t>(j_count));
  std::vector<char> actuated(static_cast<size_t>(j_count));
  for (int j = 0; j < j_count; ++j) {
    const Joint& joint = skel.joints[static_cast<size_t>(j)];
    parent[static_cast<size_t>(j)] = joint.parent;
    offset[static_cast<size_t>(j)] = joint.offset;
    actuated[static_cast<size_t>(j)] = joint.kind == JointKind::Actuated ? 1 : 0;
  }

  const int t_len = static_cast<int>(cols);
  Tensor out(pose_rows.rank() == 1 ? std::vector<int>{3 * j_count}
                                   : std::vector<int>{3 * j_count, t_len});

  // Snapshots for backward: local (normalized) and global quaternions plus
  // the pre-normalization norm per (joint, column). A norm of 0 flags a
  // degenerate input quaternion whose gradient is dropped.
  std::vector<double> qloc(static_cast<size_t>(4 * j_count) * static_cast<size_t>(t_len));
  std::vector<double> qglob(qloc.size());
  std::vector<double> norms(static_cast<size_t>(j_count) * static_cast<size_t>(t_len), 0.0);

  const double* px = pose_rows.data();
  double* po = out.data();
  auto col = [t_len](int row, int t) { return static_cast<size_t>(row) * static_cast<size_t>(t_len) + static_cast<size_t>(t); };

  for (int t = 0; t < t_len; ++t) {
    for (int j = 0; j < j_count; ++j) {
      Quat local = Quat::identity();
      if (actuated[static_cast<size_t>(j)]) {
        Quat raw{px[col(4 * j + 0, t)], px[col(4 * j + 1, t)], px[col(4 * j + 2, t)],
                 px[col(4 * j + 3, t)]};
        const double nrm = raw.norm();
        if (nrm >= kDegenerate) {
          local = Quat{raw.w / nrm, raw.x / nrm, raw.y / nrm, raw.z / nrm};
          norms[static_cast<size_t>(j) * static_cast<size_t>(t_len) + static_cast<size_t>(t)] = nrm;
        }
      }
      qloc[col(4 * j + 0, t)] = local.w;
      qloc[col(4 * j + 1, t)] = local.x;
      qloc[col(4 * j + 2, t)] = local.y;
      qloc[col(4 * j + 3, t)] = local.z;

      Quat g;
      Vec3 p;
      const int par = parent[static_cast<size_t>(j)];
      if (par < 0) {
        g = local;
        p = root_local ? Vec3{}
                       : Vec3{px[col(4 * j_count + 0, t)], px[col(4 * j_count + 1, t)],
                              px[col(4 * j_count + 2, t)]};
      } else {
        const Quat qp{qglob[col(4 * par + 0, t)], qglob[col(4 * par + 1, t)],
                      qglob[col(4 * par + 2, t)], qglob[col(4 * par + 3, t)]};
        g = qp * local;
        const Vec3 pp{po[col(3 * par + 0, t)], po[col(3 * par + 1, t)], po[col(3 * par + 2, t)]};
        p = pp + qp.rotate(offset[static_cast<size_t>(j)]);
      }
      qglob[col(4 * j + 0, t)] = g.w;
      qglob[col(4 * j + 1, t)] = g.x;
      qglob[col(4 * j + 2, t)] = g.y;
      qglob[col(4 * j + 3, t)] = g.z;
      po[col(3 * j + 0, t)] = p.x;
      po[col(3 * j + 1, t)] = p.y;
      po[col(3 * j + 2, t)] = p.z;
    }
  }

  Tape* tape = TapeScope::current();
  if (tape && tape->should_record({&pose_rows})) {
    tape->record(
        out, {&pose_rows},
        [j_count, t_len, root_local, parent = std::move(parent), offset = std::move(offset),
         actuated = std::move(actuated), qloc = std::move(qloc), qglob = std::move(qglob),
         norms = std::move(norms)](std::span<const double> gout,
                                   std::span<std::span<double>> gin) {
          if (gin[0].empty()) return;
          auto col = [t_len](int row, int t) {
            return static_cast<size_t>(row) * static_cast<size_t>(t_len) + static_cast<size_t>(t);
          };
          std::vector<Vec3> gp(static_cast<size_t>(j_count));
          std::vector<double> gq(static_cast<size_t>(4 * j_count));
          for (int t = 0; t < t_len; ++t) {
            for (int j = 0; j < j_count; ++j) {
              gp[static_cast<size_t>(j)] =
                  Vec3{gout[col(3 * j + 0, t)], gout[col(3 * j + 1, t)], gout[col(3 * j + 2, t)]};
            }
            std::fill(gq.begin(), gq.end(), 0.0);
            for (int j = j_count - 1; j >= 0; --j) {
              const Vec3 gpj = gp[static_cast<size_t>(j)];
              const double grw = gq[static_cast<size_t>(4 * j + 0)];
              const Vec3 grv{gq[static_cast<size_t>(4 * j + 1)], gq[static_cast<size_t>(4 * j + 2)],
                             gq[static_cast<size_t>(4 * j + 3)]};
              double glw = 0.0;
              Vec3 glv{};
              const int par = parent[static_cast<size_t>(j)];
              if (par >= 0) {
                // p_j = p_par + R(q_par) * offset_j
                gp[static_cast<size_t>(par)] = gp[static_cast<size_t>(par)] + gpj;
                const Quat qp{qglob[col(4 * par + 0, t)], qglob[col(4 * par + 1, t)],
                              qglob[col(4 * par + 2, t)], qglob[col(4 * par + 3, t)]};
                const Vec3 u{qp.x, qp.y, qp.z};
                const Vec3 v = offset[static_cast<size_t>(j)];
                const Vec3 uxv = cross(u, v);
                gq[static_cast<size_t>(4 * par + 0)] += 2.0 * dot(uxv, gpj);
                const Vec3 gu = (cross(v, gpj) * qp.w + cross(uxv, gpj) + cross(v, cross(gpj, u))) * 2.0;
                gq[static_cast<size_t>(4 * par + 1)] += gu.x;
                gq[static_cast<size_t>(4 * par + 2)] += gu.y;
                gq[static_cast<size_t>(4 * par + 3)] += gu.z;
                // q_global_j = q_par * q_local_j
                const Quat b{qloc[col(4 * j + 0, t)], qloc[col(4 * j + 1, t)],
                             qloc[col(4 * j + 2, t)], qloc[col(4 * j + 3, t)]};
                const Vec3 bv{b.x, b.y, b.z};
                const Vec3 av{qp.x, qp.y, qp.z};
                gq[static_cast<size_t>(4 * par + 0)] += grw * b.w + dot(grv, bv);
                const Vec3 gav = bv * (-grw) + grv * b.w + cross(bv, grv);
                gq[static_cast<size_t>(4 * par + 1)] += gav.x;
                gq[static_cast<size_t>(4 * par + 2)] += gav.y;
                gq[static_cast<size_t>(4 * par + 3)] += gav.z;
                glw = grw * qp.w + dot(grv, av);
                glv = av * (-grw) + grv * qp.w + cross(grv, av);
              } else {
                glw = grw;
                glv = grv;
                if (!root_local) {
                  gin[0][col(4 * j_count + 0, t)] += gpj.x;
                  gin[0][col(4 * j_count + 1, t)] += gpj.y;
                  gin[0][col(4 * j_count + 2, t)] += gpj.z;
                }
              }
              if (actuated[static_cast<size_t>(j)]) {
                const double nrm =
                    norms[static_cast<size_t>(j) * static_cast<size_t>(t_len) + static_cast<size_t>(t)];
                if (nrm <= 0.0) continue;  // degenerate input, gradient dropped
                const double yw = qloc[col(4 * j + 0, t)];
                const Vec3 yv{qloc[col(4 * j + 1, t)], qloc[col(4 * j + 2, t)],
                              qloc[col(4 * j + 3, t)]};
                const double d = glw * yw + dot(glv, yv);
                gin[0][col(4 * j + 0, t)] += (glw - yw * d) / nrm;
                gin[0][col(4 * j + 1, t)] += (glv.x - yv.x * d) / nrm;
                gin[0][col(4 * j + 2, t)] += (glv.y - yv.y * d) / nrm;
                gin[0][col(4 * j + 3, t)] += (glv.z - yv.z * d) / nrm;
              }
            }
          }
        });
  }
  return out;
}

}  // namespace nmrt
