#include "nmrt/fixtures.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "nmrt/bvh.hpp"
#include "nmrt/errors.hpp"
#include "nmrt/rng.hpp"

namespace nmrt {
namespace {

using nlohmann::json;

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

Joint make_joint(std::string name, int parent, Vec3 offset, bool rotation_channels,
                 bool root_position = false) {
  Joint j;
  j.name = std::move(name);
  j.parent = parent;
  j.offset = offset;
  if (root_position) {
    j.channels = {ChannelKind::Xposition, ChannelKind::Yposition, ChannelKind::Zposition};
  }
  if (rotation_channels) {
    j.channels.insert(j.channels.end(),
                      {ChannelKind::Zrotation, ChannelKind::Xrotation, ChannelKind::Yrotation});
    j.rotation_order = parse_axis_order("ZXY");
  }
  j.end_site = !rotation_channels && !root_position;
  return j;
}

}  // namespace

Skeleton fixture_human_skeleton() {
  Skeleton sk;
  sk.joints = {
      make_joint("root", -1, {0.0, 0.0, 0.0}, true, true),
      make_joint("chest", 0, {0.0, 0.5, 0.0}, true),
      make_joint("neck", 1, {0.0, 0.5, 0.0}, true),
      make_joint("neck_end", 2, {0.0, 0.5, 0.0}, false),
      make_joint("l_shoulder", 1, {0.5, 0.0, 0.0}, true),
      make_joint("l_elbow", 4, {1.0, 0.0, 0.0}, true),
      make_joint("l_elbow_end", 5, {1.0, 0.0, 0.0}, false),
      make_joint("r_shoulder", 1, {-0.5, 0.0, 0.0}, true),
      make_joint("r_elbow", 7, {-1.0, 0.0, 0.0}, true),
      make_joint("r_elbow_end", 8, {-1.0, 0.0, 0.0}, false),
  };
  sk.root_index = 0;
  sk.validate();
  return sk;
}

Skeleton fixture_robot_skeleton(double limb_scale) {
  const double s = limb_scale;
  Skeleton sk;
  sk.joints = {
      make_joint("root", -1, {0.0, 0.0, 0.0}, true, true),
      make_joint("chest", 0, {0.0, 0.5 * s, 0.0}, true),
      make_joint("neck", 1, {0.0, 0.5 * s, 0.0}, true),
      make_joint("neck_end", 2, {0.0, 0.5 * s, 0.0}, false),
      make_joint("l_shoulder", 1, {0.5 * s, 0.0, 0.0}, true),
      make_joint("l_elbow", 4, {1.0 * s, 0.0, 0.0}, true),
      // The human forearm link, split in half by an extra actuated wrist.
      make_joint("l_wrist", 5, {0.5 * s, 0.0, 0.0}, true),
      make_joint("l_wrist_end", 6, {0.5 * s, 0.0, 0.0}, false),
      make_joint("r_shoulder", 1, {-0.5 * s, 0.0, 0.0}, true),
      make_joint("r_elbow", 8, {-1.0 * s, 0.0, 0.0}, true),
      make_joint("r_wrist", 9, {-0.5 * s, 0.0, 0.0}, true),
      make_joint("r_wrist_end", 10, {-0.5 * s, 0.0, 0.0}, false),
  };
  sk.root_index = 0;
  sk.validate();
  return sk;
}

SkeletonConfig fixture_human_config() {
  SkeletonConfig cfg;
  cfg.kinds = {{"root", JointKind::Fixed},        {"chest", JointKind::Fixed},
               {"neck", JointKind::Actuated},     {"neck_end", JointKind::EndEffector},
               {"l_shoulder", JointKind::Actuated}, {"l_elbow", JointKind::Actuated},
               {"l_elbow_end", JointKind::EndEffector}, {"r_shoulder", JointKind::Actuated},
               {"r_elbow", JointKind::Actuated},  {"r_elbow_end", JointKind::EndEffector}};
  cfg.parts = {{"root", 0},      {"chest", 0},      {"neck", 1},       {"neck_end", 1},
               {"l_shoulder", 2}, {"l_elbow", 2},   {"l_elbow_end", 2}, {"r_shoulder", 3},
               {"r_elbow", 3},   {"r_elbow_end", 3}};
  cfg.end_effectors = {"neck_end", "l_elbow_end", "r_elbow_end"};
  cfg.height = 1.5;
  cfg.chest = "chest";
  return cfg;
}

SkeletonConfig fixture_robot_config() {
  SkeletonConfig cfg;
  cfg.kinds = {{"root", JointKind::Fixed},        {"chest", JointKind::Fixed},
               {"neck", JointKind::Actuated},     {"neck_end", JointKind::EndEffector},
               {"l_shoulder", JointKind::Actuated}, {"l_elbow", JointKind::Actuated},
               {"l_wrist", JointKind::Actuated},  {"l_wrist_end", JointKind::EndEffector},
               {"r_shoulder", JointKind::Actuated}, {"r_elbow", JointKind::Actuated},
               {"r_wrist", JointKind::Actuated},  {"r_wrist_end", JointKind::EndEffector}};
  cfg.parts = {{"root", 0},      {"chest", 0},     {"neck", 1},     {"neck_end", 1},
               {"l_shoulder", 2}, {"l_elbow", 2},  {"l_wrist", 2},  {"l_wrist_end", 2},
               {"r_shoulder", 3}, {"r_elbow", 3},  {"r_wrist", 3},  {"r_wrist_end", 3}};
  cfg.end_effectors = {"neck_end", "l_wrist_end", "r_wrist_end"};
  cfg.height = 1.5 * 1.3;
  cfg.chest = "chest";
  return cfg;
}

void FixtureSpec::validate() const {
  if (limb_scale <= 0.0) fail(ErrKind::ConfigInvalid, "limb_scale must be > 0");
  if (motions < 1) fail(ErrKind::ConfigInvalid, "motions must be >= 1");
  if (frames < 1) fail(ErrKind::ConfigInvalid, "frames must be >= 1");
  if (frame_rate <= 0.0) fail(ErrKind::ConfigInvalid, "frame_rate must be > 0");
  if (freq_lo <= 0.0 || freq_hi < freq_lo)
    fail(ErrKind::ConfigInvalid, "need 0 < freq_lo <= freq_hi");
  if (freq_hi >= frame_rate / 2.0)
    fail(ErrKind::ConfigInvalid, "freq_hi must stay below the Nyquist rate " +
                                     std::to_string(frame_rate / 2.0));
  if (amp_lo_deg < 0.0 || amp_hi_deg < amp_lo_deg)
    fail(ErrKind::ConfigInvalid, "need 0 <= amp_lo_deg <= amp_hi_deg");
  if (amp_hi_deg > 25.0)
    fail(ErrKind::ConfigInvalid,
         "amp_hi_deg above 25 risks quaternion sign flips between frames");
}

FixtureSpec fixture_spec_from_json_text(const std::string& text) {
  json js;
  try {
    js = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrKind::SchemaError, std::string("fixture spec is not valid JSON: ") + e.what());
  }
  if (!js.is_object()) fail(ErrKind::SchemaError, "fixture spec must be a JSON object");
  FixtureSpec spec;
  try {
    for (const auto& [key, value] : js.items()) {
      if (key == "seed") spec.seed = value.get<unsigned long long>();
      else if (key == "motions") spec.motions = value.get<int>();
      else if (key == "frames") spec.frames = value.get<int>();
      else if (key == "limb_scale") spec.limb_scale = value.get<double>();
      else if (key == "frame_rate") spec.frame_rate = value.get<double>();
      else if (key == "freq_lo") spec.freq_lo = value.get<double>();
      else if (key == "freq_hi") spec.freq_hi = value.get<double>();
      else if (key == "amp_lo_deg") spec.amp_lo_deg = value.get<double>();
      else if (key == "amp_hi_deg") spec.amp_hi_deg = value.get<double>();
      else fail(ErrKind::SchemaError, "unknown fixture spec key \"" + key + "\"");
    }
  } catch (const json::exception& e) {
    fail(ErrKind::SchemaError, std::string("fixture spec field has wrong type: ") + e.what());
  }
  spec.validate();
  return spec;
}

FixtureSpec load_fixture_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrKind::IoError, "cannot open fixture spec " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fixture_spec_from_json_text(text);
}

std::string fixture_spec_to_json_text(const FixtureSpec& spec) {
  json js{{"seed", spec.seed},         {"motions", spec.motions},
          {"frames", spec.frames},     {"limb_scale", spec.limb_scale},
          {"frame_rate", spec.frame_rate}, {"freq_lo", spec.freq_lo},
          {"freq_hi", spec.freq_hi},   {"amp_lo_deg", spec.amp_lo_deg},
          {"amp_hi_deg", spec.amp_hi_deg}};
  return js.dump(2);
}

namespace {

struct Sinusoid {
  double amp[2];
  double freq[2];
  double phase[2];

  double eval(double t) const {
    return amp[0] * std::sin(kTwoPi * freq[0] * t + phase[0]) +
           amp[1] * std::sin(kTwoPi * freq[1] * t + phase[1]);
  }
};

Sinusoid draw_sinusoid(Rng& rng, const FixtureSpec& spec, double amp_scale) {
  Sinusoid s;
  for (int k = 0; k < 2; ++k) {
    // Halved so the two-term sum stays inside [amp_lo, amp_hi].
    s.amp[k] = rng.uniform(spec.amp_lo_deg, spec.amp_hi_deg) * 0.5 * amp_scale;
    s.freq[k] = rng.uniform(spec.freq_lo, spec.freq_hi);
    s.phase[k] = rng.uniform(0.0, kTwoPi);
  }
  return s;
}

std::vector<MotionClip> make_clips(const Skeleton& bound, const FixtureSpec& spec, Rng& rng,
                                   double translation_scale) {
  std::vector<MotionClip> clips;
  clips.reserve(static_cast<size_t>(spec.motions));
  const double dt = 1.0 / spec.frame_rate;
  for (int m = 0; m < spec.motions; ++m) {
    MotionClip clip;
    char name[32];
    std::snprintf(name, sizeof name, "motion_%02d", m);
    clip.name = name;
    clip.frame_time = dt;

    // Channel trajectories drawn joint-major so the stream is reproducible.
    Sinusoid trans[3];
    for (Sinusoid& s : trans) s = draw_sinusoid(rng, spec, translation_scale / 100.0);
    std::vector<std::array<Sinusoid, 3>> rot(static_cast<size_t>(bound.joint_count()));
    for (int j = 0; j < bound.joint_count(); ++j)
      if (bound.joints[static_cast<size_t>(j)].kind == JointKind::Actuated)
        for (int c = 0; c < 3; ++c) rot[static_cast<size_t>(j)][static_cast<size_t>(c)] =
            draw_sinusoid(rng, spec, 1.0);

    clip.frames.resize(static_cast<size_t>(spec.frames));
    for (int f = 0; f < spec.frames; ++f) {
      const double t = f * dt;
      Pose& pose = clip.frames[static_cast<size_t>(f)];
      pose.root_translation = {trans[0].eval(t), trans[1].eval(t), trans[2].eval(t)};
      pose.rotations.assign(static_cast<size_t>(bound.joint_count()), Quat::identity());
      for (int j = 0; j < bound.joint_count(); ++j) {
        const Joint& joint = bound.joints[static_cast<size_t>(j)];
        if (joint.kind != JointKind::Actuated || !joint.rotation_order) continue;
        const std::array<Sinusoid, 3>& sj = rot[static_cast<size_t>(j)];
        pose.rotations[static_cast<size_t>(j)] = euler_to_quaternion(
            {sj[0].eval(t), sj[1].eval(t), sj[2].eval(t)}, *joint.rotation_order);
      }
    }
    clips.push_back(std::move(clip));
  }
  return clips;
}

}  // namespace

Fixture make_fixture(const FixtureSpec& spec) {
  spec.validate();
  Fixture fx;
  fx.human.skeleton = fixture_human_skeleton();
  fx.human.config = fixture_human_config();
  fx.robot.skeleton = fixture_robot_skeleton(spec.limb_scale);
  fx.robot.config = fixture_robot_config();
  fx.robot.config.height = fx.human.config.height * spec.limb_scale;

  Rng rng(spec.seed);
  fx.human.clips =
      make_clips(bind_config(fx.human.skeleton, fx.human.config), spec, rng, 1.0);
  fx.robot.clips = make_clips(bind_config(fx.robot.skeleton, fx.robot.config), spec, rng,
                              spec.limb_scale);
  return fx;
}

void write_fixture(const Fixture& fixture, const std::string& out_dir) {
  for (const auto* domain : {&fixture.human, &fixture.robot}) {
    const std::string dir =
        out_dir + "/" + (domain == &fixture.human ? "human" : "robot");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrKind::DiskWrite, "cannot create fixture directory " + dir);
    for (const MotionClip& clip : domain->clips) {
      BvhDocument doc = document_from_clip(domain->skeleton, clip);
      write_bvh_file(doc, dir + "/" + clip.name + ".bvh");
    }
    std::ofstream cfg(dir + "/skeleton_config.json", std::ios::trunc);
    if (!cfg) fail(ErrKind::DiskWrite, "cannot write " + dir + "/skeleton_config.json");
    cfg << skeleton_config_to_json_text(domain->config) << "\n";
    if (!cfg) fail(ErrKind::DiskWrite, "failed writing " + dir + "/skeleton_config.json");
  }
}

}  // namespace nmrt
