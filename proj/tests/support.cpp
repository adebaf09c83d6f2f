#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <sstream>

#include "nmrt/errors.hpp"

namespace nmrt::test {

namespace {

std::string deep_chain_text(int joints) {
  std::ostringstream os;
  os << "HIERARCHY\nROOT link0\n{\n";
  os << "  OFFSET 0 0 0\n";
  os << "  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation\n";
  std::string indent = "  ";
  for (int i = 1; i < joints; ++i) {
    os << indent << "JOINT link" << i << "\n" << indent << "{\n";
    indent += "  ";
    os << indent << "OFFSET 0 " << (1.0 + 0.1 * i) << " 0\n";
    os << indent << "CHANNELS 3 Zrotation Xrotation Yrotation\n";
  }
  os << indent << "End Site\n" << indent << "{\n";
  os << indent << "  OFFSET 0 0.5 0\n";
  os << indent << "}\n";
  for (int i = 1; i < joints; ++i) {
    indent.resize(indent.size() - 2);
    os << indent << "}\n";
  }
  os << "}\nMOTION\nFrames: 2\nFrame Time: 0.02\n";
  for (int f = 0; f < 2; ++f) {
    for (int c = 0; c < 6 + 3 * (joints - 1); ++c) {
      if (c) os << " ";
      os << (0.25 * f + 0.125 * c - 3.0);
    }
    os << "\n";
  }
  return os.str();
}

struct Mat4 {
  std::array<std::array<double, 4>, 4> m{};
  static Mat4 identity() {
    Mat4 r;
    for (int i = 0; i < 4; ++i) r.m[i][i] = 1.0;
    return r;
  }
  static Mat4 translation(const Vec3& t) {
    Mat4 r = identity();
    r.m[0][3] = t.x;
    r.m[1][3] = t.y;
    r.m[2][3] = t.z;
    return r;
  }
  static Mat4 rotation(const Mat3& rot) {
    Mat4 r = identity();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = rot[i][j];
    return r;
  }
  Mat4 operator*(const Mat4& o) const {
    Mat4 r;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        double s = 0.0;
        for (int k = 0; k < 4; ++k) s += m[i][k] * o.m[k][j];
        r.m[i][j] = s;
      }
    return r;
  }
  Vec3 origin() const { return {m[0][3], m[1][3], m[2][3]}; }
};

}  // namespace

std::vector<std::pair<std::string, std::string>> bvh_corpus() {
  std::vector<std::pair<std::string, std::string>> out;

  out.emplace_back("minimal_two_joint",
                   "HIERARCHY\n"
                   "ROOT root\n"
                   "{\n"
                   "  OFFSET 0 0 0\n"
                   "  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation\n"
                   "  JOINT child\n"
                   "  {\n"
                   "    OFFSET 0 10 0\n"
                   "    CHANNELS 3 Zrotation Xrotation Yrotation\n"
                   "  }\n"
                   "}\n"
                   "MOTION\n"
                   "Frames: 1\n"
                   "Frame Time: 0.02\n"
                   "0 0 0 0 0 0 0 0 0\n");

  out.emplace_back("branched_zxy",
                   "HIERARCHY\n"
                   "ROOT hips\n"
                   "{\n"
                   "  OFFSET 0 0 0\n"
                   "  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation\n"
                   "  JOINT spine\n"
                   "  {\n"
                   "    OFFSET 0 12 0\n"
                   "    CHANNELS 3 Zrotation Xrotation Yrotation\n"
                   "    JOINT head\n"
                   "    {\n"
                   "      OFFSET 0 9 0\n"
                   "      CHANNELS 3 Zrotation Xrotation Yrotation\n"
                   "      End Site\n"
                   "      {\n"
                   "        OFFSET 0 4 0\n"
                   "      }\n"
                   "    }\n"
                   "    JOINT l_arm\n"
                   "    {\n"
                   "      OFFSET 3 7 0\n"
                   "      CHANNELS 3 Zrotation Xrotation Yrotation\n"
                   "      End Site\n"
                   "      {\n"
                   "        OFFSET 5 0 0\n"
                   "      }\n"
                   "    }\n"
                   "    JOINT r_arm\n"
                   "    {\n"
                   "      OFFSET -3 7 0\n"
                   "      CHANNELS 3 Zrotation Xrotation Yrotation\n"
                   "      End Site\n"
                   "      {\n"
                   "        OFFSET -5 0 0\n"
                   "      }\n"
                   "    }\n"
                   "  }\n"
                   "  JOINT l_leg\n"
                   "  {\n"
                   "    OFFSET 2 -1 0\n"
                   "    CHANNELS 3 Zrotation Xrotation Yrotation\n"
                   "    End Site\n"
                   "    {\n"
                   "      OFFSET 0 -14 0\n"
                   "    }\n"
                   "  }\n"
                   "  JOINT r_leg\n"
                   "  {\n"
                   "    OFFSET -2 -1 0\n"
                   "    CHANNELS 3 Zrotation Xrotation Yrotation\n"
                   "    End Site\n"
                   "    {\n"
                   "      OFFSET 0 -14 0\n"
                   "    }\n"
                   "  }\n"
                   "}\n"
                   "MOTION\n"
                   "Frames: 2\n"
                   "Frame Time: 0.02\n"
                   "1.5 90.25 -0.5 10 -20 30 5 0 -5 12 6 -9 0 45 0 -8 3 11 22 -14 7 9 -1 4\n"
                   "1.25 90 0 -10 15 5 0 30 0 -6 12 4 90 0 0 2 -2 2 -30 8 16 -7 5 -3\n");

  out.emplace_back("chain_xyz",
                   "HIERARCHY\n"
                   "ROOT base\n"
                   "{\n"
                   "  OFFSET 0 0 0\n"
                   "  CHANNELS 6 Xposition Yposition Zposition Xrotation Yrotation Zrotation\n"
                   "  JOINT mid\n"
                   "  {\n"
                   "    OFFSET 0 5 0\n"
                   "    CHANNELS 3 Xrotation Yrotation Zrotation\n"
                   "    End Site\n"
                   "    {\n"
                   "      OFFSET 0 5 0\n"
                   "    }\n"
                   "  }\n"
                   "}\n"
                   "MOTION\n"
                   "Frames: 3\n"
                   "Frame Time: 0.01\n"
                   "0 0 0 30 0 0 0 0 0\n"
                   "0.5 0.25 -0.75 15 45 -30 10 20 30\n"
                   "-1 2 -3 0 90 0 -45 0 45\n");

  out.emplace_back("chain_zyx",
                   "HIERARCHY\n"
                   "ROOT pelvis\n"
                   "{\n"
                   "  OFFSET 0 0 0\n"
                   "  CHANNELS 6 Xposition Yposition Zposition Zrotation Yrotation Xrotation\n"
                   "  JOINT torso\n"
                   "  {\n"
                   "    OFFSET 0 4 1\n"
                   "    CHANNELS 3 Zrotation Yrotation Xrotation\n"
                   "    JOINT neck\n"
                   "    {\n"
                   "      OFFSET 0 3 -0.5\n"
                   "      CHANNELS 3 Zrotation Yrotation Xrotation\n"
                   "      End Site\n"
                   "      {\n"
                   "        OFFSET 0 1.5 0\n"
                   "      }\n"
                   "    }\n"
                   "  }\n"
                   "}\n"
                   "MOTION\n"
                   "Frames: 2\n"
                   "Frame Time: 0.04\n"
                   "0 0 0 12 -7 33 -4 19 8 27 -31 6\n"
                   "3 1 -2 0 0 0 90 0 0 -12 60 -5\n");

  out.emplace_back("zero_frames",
                   "HIERARCHY\n"
                   "ROOT stub\n"
                   "{\n"
                   "  OFFSET 0 0 0\n"
                   "  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation\n"
                   "  JOINT tip\n"
                   "  {\n"
                   "    OFFSET 0 2 0\n"
                   "    CHANNELS 3 Zrotation Xrotation Yrotation\n"
                   "    End Site\n"
                   "    {\n"
                   "      OFFSET 0 1 0\n"
                   "    }\n"
                   "  }\n"
                   "}\n"
                   "MOTION\n"
                   "Frames: 0\n"
                   "Frame Time: 0.02\n");

  out.emplace_back("six_channel_kinds",
                   "HIERARCHY\n"
                   "ROOT a\n"
                   "{\n"
                   "  OFFSET 0 0 0\n"
                   "  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation\n"
                   "  JOINT b\n"
                   "  {\n"
                   "    OFFSET 1 2 3\n"
                   "    CHANNELS 6 Xposition Yposition Zposition Zrotation Yrotation Xrotation\n"
                   "    End Site\n"
                   "    {\n"
                   "      OFFSET 0 1 0\n"
                   "    }\n"
                   "  }\n"
                   "}\n"
                   "MOTION\n"
                   "Frames: 1\n"
                   "Frame Time: 0.02\n"
                   "0.5 1.5 -2.5 10 20 30 0.1 0.2 0.3 5 -5 15\n");

  out.emplace_back("scientific",
                   "HIERARCHY\n"
                   "ROOT sci\n"
                   "{\n"
                   "  OFFSET 0.0 1e1 0\n"
                   "  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation\n"
                   "  JOINT tip\n"
                   "  {\n"
                   "    OFFSET 0 1.5E+1 0\n"
                   "    CHANNELS 3 Zrotation Xrotation Yrotation\n"
                   "    End Site\n"
                   "    {\n"
                   "      OFFSET 0 2e0 0\n"
                   "    }\n"
                   "  }\n"
                   "}\n"
                   "MOTION\n"
                   "Frames: 2\n"
                   "Frame Time: 2e-2\n"
                   "1e-3 0 0 -1.5e1 0 0 0 0 2.5E-1\n"
                   "0 1E0 0 0 0 0 1e2 0 0\n");

  out.emplace_back("deep_chain", deep_chain_text(10));
  return out;
}

Mat3 axis_matrix(Axis axis, double deg) {
  const double r = deg * (3.14159265358979323846 / 180.0);
  const double c = std::cos(r), s = std::sin(r);
  Mat3 m{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  switch (axis) {
    case Axis::X:
      m = {{{1, 0, 0}, {0, c, -s}, {0, s, c}}};
      break;
    case Axis::Y:
      m = {{{c, 0, s}, {0, 1, 0}, {-s, 0, c}}};
      break;
    case Axis::Z:
      m = {{{c, -s, 0}, {s, c, 0}, {0, 0, 1}}};
      break;
  }
  return m;
}

Mat3 mat3_mul(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a[i][k] * b[k][j];
      r[i][j] = s;
    }
  return r;
}

Mat3 quat_matrix(const Quat& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
           {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
           {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
}

double mat3_max_abs_diff(const Mat3& a, const Mat3& b) {
  double worst = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) worst = std::max(worst, std::abs(a[i][j] - b[i][j]));
  return worst;
}

std::vector<Vec3> fk_oracle(const Skeleton& skel, const Pose& pose, bool root_local) {
  const size_t n = skel.joints.size();
  if (pose.rotations.size() != n) fail(ErrKind::LengthMismatch, "oracle pose size");
  std::vector<Mat4> world(n);
  std::vector<Vec3> out(n);
  for (size_t j = 0; j < n; ++j) {
    const Joint& joint = skel.joints[j];
    Mat4 local = Mat4::identity();
    if (joint.parent < 0) {
      local = Mat4::translation(pose.root_translation);
    } else {
      local = Mat4::translation(joint.offset);
    }
    if (joint.kind == JointKind::Actuated)
      local = local * Mat4::rotation(quat_matrix(pose.rotations[j].normalized()));
    world[j] = joint.parent < 0 ? local : world[static_cast<size_t>(joint.parent)] * local;
    out[j] = world[j].origin();
    if (root_local) out[j] = out[j] - pose.root_translation;
  }
  return out;
}

Quat random_quat(Rng& rng) {
  while (true) {
    Quat q{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
           rng.uniform(-1.0, 1.0)};
    const double n = q.norm();
    if (n < 0.1 || n > 1.0) continue;  // rejection keeps the direction uniform
    return q.normalized();
  }
}

Pose random_pose(Rng& rng, const Skeleton& skel) {
  Pose pose;
  pose.root_translation = {rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0),
                           rng.uniform(-5.0, 5.0)};
  pose.rotations.reserve(skel.joints.size());
  for (size_t j = 0; j < skel.joints.size(); ++j) pose.rotations.push_back(random_quat(rng));
  return pose;
}

Skeleton make_chain(const std::vector<ChainJoint>& spec) {
  Skeleton skel;
  for (size_t i = 0; i < spec.size(); ++i) {
    const ChainJoint& cj = spec[i];
    Joint joint;
    joint.name = cj.name;
    joint.parent = i == 0 ? -1 : static_cast<int>(i) - 1;
    joint.offset = cj.offset;
    joint.kind = cj.kind;
    if (cj.kind == JointKind::EndEffector && i + 1 == spec.size()) {
      joint.end_site = true;  // channel-less leaf, mirrors a materialized End Site
    } else {
      if (i == 0)
        joint.channels = {ChannelKind::Xposition, ChannelKind::Yposition, ChannelKind::Zposition};
      AxisTriple order = parse_axis_order(cj.order);
      for (Axis a : order)
        joint.channels.push_back(a == Axis::X   ? ChannelKind::Xrotation
                                 : a == Axis::Y ? ChannelKind::Yrotation
                                                : ChannelKind::Zrotation);
      joint.rotation_order = order;
    }
    skel.joints.push_back(joint);
  }
  skel.validate();
  return skel;
}

Skeleton mixed_chain6() {
  return make_chain({{"pelvis", JointKind::Actuated, {0, 0, 0}, "ZXY"},
                     {"torso", JointKind::Fixed, {0, 1.0, 0}, "XYZ"},
                     {"chest", JointKind::Actuated, {0, 0.8, 0.1}, "ZYX"},
                     {"shoulder", JointKind::Actuated, {0.4, 0.3, 0}, "ZXY"},
                     {"elbow", JointKind::Actuated, {0.7, 0, 0}, "XYZ"},
                     {"wrist_end", JointKind::EndEffector, {0.6, 0, 0}, "ZXY"}});
}

DomainSpec tiny_human_spec() {
  const Skeleton skel = make_chain({{"root", JointKind::Fixed, {0, 0, 0}, "ZXY"},
                                    {"a", JointKind::Actuated, {0, 0.4, 0}, "ZXY"},
                                    {"b", JointKind::Actuated, {0, 0.4, 0}, "ZXY"},
                                    {"tip_end", JointKind::EndEffector, {0, 0.4, 0}, "ZXY"}});
  SkeletonConfig cfg;
  cfg.kinds = {{"root", JointKind::Fixed},
               {"a", JointKind::Actuated},
               {"b", JointKind::Actuated},
               {"tip_end", JointKind::EndEffector}};
  cfg.parts = {{"root", 0}, {"a", 0}, {"b", 1}, {"tip_end", 1}};
  cfg.end_effectors = {"tip_end", "tip_end", "tip_end"};
  cfg.height = 1.0;
  cfg.chest = "a";
  return DomainSpec(skel, cfg);
}

DomainSpec tiny_robot_spec() {
  const Skeleton skel = make_chain({{"base", JointKind::Fixed, {0, 0, 0}, "ZXY"},
                                    {"j1", JointKind::Actuated, {0, 0.5, 0}, "ZXY"},
                                    {"j2", JointKind::Actuated, {0, 0.5, 0}, "ZXY"},
                                    {"j3", JointKind::Actuated, {0.5, 0, 0}, "ZXY"},
                                    {"ee_end", JointKind::EndEffector, {0.5, 0, 0}, "ZXY"}});
  SkeletonConfig cfg;
  cfg.kinds = {{"base", JointKind::Fixed},
               {"j1", JointKind::Actuated},
               {"j2", JointKind::Actuated},
               {"j3", JointKind::Actuated},
               {"ee_end", JointKind::EndEffector}};
  cfg.parts = {{"base", 0}, {"j1", 0}, {"j2", 1}, {"j3", 1}, {"ee_end", 1}};
  cfg.end_effectors = {"ee_end", "ee_end", "ee_end"};
  cfg.height = 1.5;
  cfg.chest = "j1";
  return DomainSpec(skel, cfg);
}

ModelConfig tiny_model_config() {
  ModelConfig cfg;
  cfg.latent = 4;
  cfg.kernel = 3;
  cfg.disc_channels = 4;
  return cfg;
}

RetargetModel tiny_world_model(unsigned long long seed) {
  Rng rng(seed);
  return RetargetModel(tiny_human_spec(), tiny_robot_spec(), tiny_model_config(), rng);
}

MotionClip sine_clip(const Skeleton& skeleton, const std::string& name, int frames,
                     unsigned long long seed) {
  Rng rng(seed);
  const double pi = 3.14159265358979323846;
  struct Channel {
    Axis axis;
    double amp, freq, phase;
  };
  std::vector<Channel> channels;
  for (size_t j = 0; j < skeleton.joints.size(); ++j) {
    channels.push_back({static_cast<Axis>(rng.uniform_int(3)), rng.uniform(5.0, 25.0),
                        rng.uniform(0.5, 2.0), rng.uniform(0.0, 2.0 * pi)});
  }
  const Channel root_path{Axis::X, rng.uniform(0.05, 0.3), rng.uniform(0.25, 1.0),
                          rng.uniform(0.0, 2.0 * pi)};

  MotionClip clip{name, 0.02, {}};
  for (int f = 0; f < frames; ++f) {
    const double t = f * clip.frame_time;
    Pose pose;
    pose.root_translation = {root_path.amp * std::sin(2.0 * pi * root_path.freq * t + root_path.phase),
                             0.9 + 0.05 * std::sin(2.0 * pi * 0.5 * t), 0.0};
    for (size_t j = 0; j < skeleton.joints.size(); ++j) {
      const Channel& c = channels[j];
      pose.rotations.push_back(Quat::axis_angle_deg(
          c.axis, c.amp * std::sin(2.0 * pi * c.freq * t + c.phase)));
    }
    clip.frames.push_back(std::move(pose));
  }
  return clip;
}

std::string make_temp_dir(const std::string& tag) {
  namespace fs = std::filesystem;
  static std::uint64_t counter = 0;
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  fs::path dir = fs::temp_directory_path() /
                 ("nmrt_test_" + tag + "_" + std::to_string(stamp) + "_" +
                  std::to_string(counter++));
  fs::create_directories(dir);
  return dir.string();
}

}  // namespace nmrt::test
