// Command-line front end for the motion retargeting pipeline:
//   train        fit the cycle model on paired BVH corpora
//   retarget     map one BVH clip across domains with a trained checkpoint
//   cycle-eval   score cycle reconstructions over a motion directory
//   compare      score two motion directories against each other
//   fk           dump root-local joint positions for one frame as CSV
//   validate     lint a skeleton against the T-pose layout guidelines
//   gradcheck    run the finite-difference gradient suite
//   make-fixture generate the deterministic synthetic corpus
//
// Exit codes: 0 success, 2 config/usage, 3 data/skeleton, 4 checkpoint,
// 5 internal.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nmrt/bvh.hpp"
#include "nmrt/checkpoint.hpp"
#include "nmrt/errors.hpp"
#include "nmrt/evaluation.hpp"
#include "nmrt/fixtures.hpp"
#include "nmrt/gradcheck.hpp"
#include "nmrt/kinematics.hpp"
#include "nmrt/motion.hpp"
#include "nmrt/retarget_net.hpp"
#include "nmrt/skeleton.hpp"
#include "nmrt/training.hpp"

namespace {

using namespace nmrt;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitCheckpoint = 4;
constexpr int kExitInternal = 5;

int exit_code_for(ErrKind kind) {
  switch (kind) {
    case ErrKind::ConfigInvalid:
    case ErrKind::SchemaError:
      return kExitConfig;
    case ErrKind::MissingSection:
    case ErrKind::ChannelMismatch:
    case ErrKind::MalformedNumber:
    case ErrKind::UnbalancedBraces:
    case ErrKind::BadEncoding:
    case ErrKind::SkeletonMismatch:
    case ErrKind::FrameCountMismatch:
    case ErrKind::UnknownJoint:
    case ErrKind::MissingChest:
    case ErrKind::LengthMismatch:
    case ErrKind::EmptyCorpus:
    case ErrKind::UnknownEndEffector:
    case ErrKind::IoError:
      return kExitData;
    case ErrKind::BadMagic:
    case ErrKind::VersionUnsupported:
    case ErrKind::PayloadTruncated:
    case ErrKind::HeaderShapeMismatch:
      return kExitCheckpoint;
    default:
      return kExitInternal;
  }
}

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

/// Runs a config-loading step; any failure there is a usage/config error.
template <typename Fn>
auto config_phase(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    std::exit(kExitConfig);
  }
}

Domain domain_from_flag(const std::string& s) {
  return s == "h" ? Domain::Human : Domain::Robot;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

std::string compact_json(const std::string& text) {
  return nlohmann::json::parse(text).dump();
}

std::string aggregate_line(const MetricsReport& report) {
  std::ostringstream os;
  os << "aggregate: mjpe " << format_double(report.aggregate.mjpe_mm) << " mm, frames "
     << report.aggregate.frames;
  if (!report.aggregate.ee_cm.empty()) {
    os << ", ee[cm]";
    for (const auto& [key, v] : report.aggregate.ee_cm) os << " " << key << "=" << format_double(v);
  }
  return os.str();
}

DomainSpec domain_spec_from_dir(const std::string& skeleton_bvh, const std::string& motion_dir) {
  const Skeleton skeleton = parse_bvh_file(skeleton_bvh).skeleton;
  const SkeletonConfig config =
      load_skeleton_config((std::filesystem::path(motion_dir) / "skeleton_config.json").string());
  return DomainSpec(skeleton, config);
}

// --- train -----------------------------------------------------------------

struct TrainFlags {
  std::string config_path;
  std::string human_dir, robot_dir;
  std::string human_skel, robot_skel;
  std::string out_dir;
  unsigned long long seed = 42;
  bool seed_set = false;
  std::vector<std::string> overrides;
};

int cmd_train(const TrainFlags& flags) {
  TrainConfig config = config_phase([&] {
    TrainConfig c = flags.config_path.empty() ? TrainConfig{} : load_train_config(flags.config_path);
    if (flags.seed_set) c.seed = flags.seed;
    for (const std::string& kv : flags.overrides) {
      const size_t eq = kv.find('=');
      if (eq == std::string::npos || eq == 0)
        fail(ErrKind::ConfigInvalid, "override must be key=value, got \"" + kv + "\"");
      apply_config_override(&c, kv.substr(0, eq), kv.substr(eq + 1));
    }
    c.validate();
    return c;
  });
  std::cout << "effective config: " << compact_json(train_config_to_json_text(config)) << "\n";

  const DomainSpec human = domain_spec_from_dir(flags.human_skel, flags.human_dir);
  const DomainSpec robot = domain_spec_from_dir(flags.robot_skel, flags.robot_dir);
  MotionDirResult human_motions = load_motion_dir(flags.human_dir, human.skeleton());
  MotionDirResult robot_motions = load_motion_dir(flags.robot_dir, robot.skeleton());
  print_warnings(human_motions.warnings);
  print_warnings(robot_motions.warnings);

  TrainResult result;
  train(config, human, human_motions.clips, robot, robot_motions.clips, flags.out_dir, &result,
        &std::cerr);

  std::ifstream losses(result.losses_path);
  std::string header, row, last;
  std::getline(losses, header);
  while (std::getline(losses, row))
    if (!row.empty()) last = row;
  std::cout << "final [" << header << "]: " << last << "\n";
  std::cout << "checkpoint: " << result.checkpoint_path << "\n";
  return 0;
}

// --- retarget ----------------------------------------------------------------

int cmd_retarget(const std::string& ckpt, const std::string& input, const std::string& from_flag,
                 const std::string& output) {
  const RetargetModel model = load_checkpoint(ckpt);
  const Domain from = domain_from_flag(from_flag);
  const Domain to = from == Domain::Human ? Domain::Robot : Domain::Human;

  const BvhDocument doc = parse_bvh_file(input);
  std::string why;
  if (!Skeleton::topology_equal(doc.skeleton, model.spec(from).skeleton(), &why))
    fail(ErrKind::SkeletonMismatch,
         "input skeleton does not match the checkpoint's " +
             std::string(domain_name(from)) + " domain: " + why);

  const MotionClip clip = clip_from_document(doc, std::filesystem::path(input).stem().string());
  const MotionClip out = retarget_clip(model, from, clip);
  write_bvh_file(document_from_clip(model.spec(to).skeleton(), out), output);
  std::cout << "wrote " << output << " (" << out.frame_count() << " frames, "
            << domain_name(to) << " domain)\n";
  return 0;
}

// --- cycle-eval --------------------------------------------------------------

int cmd_cycle_eval(const std::string& ckpt, const std::string& input_dir,
                   const std::string& report_path, const std::string& home_flag, int window,
                   double unit_scale_mm) {
  const RetargetModel model = load_checkpoint(ckpt);
  const Domain home = domain_from_flag(home_flag);

  MotionDirResult motions = load_motion_dir(input_dir, model.spec(home).skeleton());
  print_warnings(motions.warnings);

  std::vector<std::string> warnings;
  const MetricsReport report =
      cycle_evaluate(model, home, motions.clips, window, unit_scale_mm, &warnings);
  print_warnings(warnings);

  write_report(report, report_path);
  std::cout << aggregate_line(report) << "\n";
  return 0;
}

// --- compare -----------------------------------------------------------------

std::vector<EeMapEntry> load_ee_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrKind::IoError, "cannot open end-effector map " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::vector<EeMapEntry> entries;
  try {
    const nlohmann::json js = nlohmann::json::parse(buf.str());
    if (!js.is_object()) fail(ErrKind::SchemaError, "end-effector map must be a JSON object");
    for (const auto& [key, pair] : js.items())
      entries.push_back({key, pair.at("a").get<std::string>(), pair.at("b").get<std::string>()});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrKind::SchemaError, "end-effector map " + path + ": " + e.what());
  }
  return entries;
}

int cmd_compare(const std::string& a_dir, const std::string& b_dir, const std::string& skel_a_path,
                const std::string& skel_b_path, const std::string& ee_map_path,
                const std::string& report_path, double unit_scale_mm) {
  const Skeleton skel_a = parse_bvh_file(skel_a_path).skeleton;
  const Skeleton skel_b = parse_bvh_file(skel_b_path).skeleton;
  const std::vector<EeMapEntry> ee_map =
      ee_map_path.empty() ? std::vector<EeMapEntry>{}
                          : config_phase([&] { return load_ee_map(ee_map_path); });

  MotionDirResult a = load_motion_dir(a_dir, skel_a);
  MotionDirResult b = load_motion_dir(b_dir, skel_b);
  print_warnings(a.warnings);
  print_warnings(b.warnings);
  if (a.clips.size() != b.clips.size())
    fail(ErrKind::LengthMismatch, "clip counts differ: " + std::to_string(a.clips.size()) +
                                      " in " + a_dir + " vs " + std::to_string(b.clips.size()) +
                                      " in " + b_dir);

  std::string why;
  const bool same_topology = Skeleton::topology_equal(skel_a, skel_b, &why);
  if (!same_topology)
    std::cerr << "note: skeletons differ (" << why
              << "); joint-level error is reported as 0 and only end-effector"
                 " distances are compared\n";

  MetricsReport report;
  report.unit_scale_mm = unit_scale_mm;
  for (size_t i = 0; i < a.clips.size(); ++i) {
    MotionClip ca = a.clips[i];
    MotionClip cb = b.clips[i];
    const int frames = std::min(ca.frame_count(), cb.frame_count());
    if (ca.frame_count() != frames) ca = resample_nearest(ca, frames);
    if (cb.frame_count() != frames) cb = resample_nearest(cb, frames);

    MotionMetrics m;
    m.name = ca.name;
    m.frames = frames;
    if (same_topology) m.mjpe_mm = mean_joint_position_error(skel_a, ca, cb, unit_scale_mm);
    if (!ee_map.empty())
      m.ee_cm = end_effector_errors(skel_a, ca, skel_b, cb, ee_map, unit_scale_mm / 10.0);
    report.per_motion.push_back(std::move(m));
  }
  report.aggregate = pool_metrics(report.per_motion);

  write_report(report, report_path);
  std::cout << aggregate_line(report) << "\n";
  return 0;
}

// --- fk ----------------------------------------------------------------------

int cmd_fk(const std::string& input, int frame) {
  const BvhDocument doc = parse_bvh_file(input);
  const MotionClip clip = clip_from_document(doc, "fk");
  if (frame < 0 || frame >= clip.frame_count())
    fail(ErrKind::LengthMismatch, "frame " + std::to_string(frame) + " out of range; clip has " +
                                      std::to_string(clip.frame_count()) + " frames");
  const std::vector<Vec3> positions =
      forward_kinematics(doc.skeleton, clip.frames[static_cast<size_t>(frame)], true);
  std::cout << "frame,joint,x,y,z\n";
  for (size_t j = 0; j < positions.size(); ++j)
    std::cout << frame << "," << doc.skeleton.joints[j].name << ","
              << format_double(positions[j].x) << "," << format_double(positions[j].y) << ","
              << format_double(positions[j].z) << "\n";
  return 0;
}

// --- validate ------------------------------------------------------------------

const char* guideline_name(Guideline g) {
  switch (g) {
    case Guideline::G1: return "G1";
    case Guideline::G2: return "G2";
    default: return "G3";
  }
}

int cmd_validate(const std::string& input, const std::string& config_path,
                 const std::string& reference_path) {
  const Skeleton skeleton = parse_bvh_file(input).skeleton;
  const SkeletonConfig config = config_phase([&] { return load_skeleton_config(config_path); });
  const Skeleton reference =
      reference_path.empty() ? skeleton : parse_bvh_file(reference_path).skeleton;

  const std::vector<Finding> findings =
      check_tpose_guidelines(bind_config(skeleton, config), config, reference);
  for (const Finding& f : findings)
    std::cout << guideline_name(f.guideline) << " " << f.joint_name << ": " << f.message << "\n";
  std::cout << findings.size() << " finding(s)\n";
  return 0;
}

// --- gradcheck -------------------------------------------------------------------

int cmd_gradcheck(unsigned long long seed, int draws) {
  const std::vector<GradCheckResult> results = run_gradcheck_suite(seed, draws, &std::cout);
  for (const GradCheckResult& r : results)
    if (!r.passed) return 1;
  std::cout << "all " << results.size() << " checks passed\n";
  return 0;
}

// --- make-fixture ------------------------------------------------------------------

int cmd_make_fixture(const std::string& spec_path, const std::string& out_dir,
                     unsigned long long seed, bool seed_set) {
  FixtureSpec spec = config_phase([&] {
    FixtureSpec s = spec_path.empty() ? FixtureSpec{} : load_fixture_spec(spec_path);
    if (seed_set) s.seed = seed;
    s.validate();
    return s;
  });
  write_fixture(make_fixture(spec), out_dir);
  std::cout << "wrote fixture: 2x" << spec.motions << " motions, " << spec.frames
            << " frames each, to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised human-to-robot motion retargeting toolkit"};
  app.require_subcommand(1);

  // train
  TrainFlags tf;
  CLI::App* train_cmd = app.add_subcommand("train", "Train the retargeting model");
  train_cmd->add_option("--config", tf.config_path, "Training config JSON (defaults when omitted)");
  train_cmd->add_option("--human-dir", tf.human_dir, "Human BVH corpus directory")->required();
  train_cmd->add_option("--robot-dir", tf.robot_dir, "Robot BVH corpus directory")->required();
  train_cmd->add_option("--human-skel", tf.human_skel, "BVH carrying the human hierarchy")
      ->required();
  train_cmd->add_option("--robot-skel", tf.robot_skel, "BVH carrying the robot hierarchy")
      ->required();
  train_cmd->add_option("--out", tf.out_dir, "Output directory for losses.csv and checkpoints")
      ->required();
  CLI::Option* train_seed = train_cmd->add_option("--seed", tf.seed, "Random seed (default 42)");
  train_cmd->add_option("--set", tf.overrides, "Config override key=value (repeatable)");

  // retarget
  std::string rt_ckpt, rt_input, rt_from, rt_output;
  CLI::App* retarget_cmd = app.add_subcommand("retarget", "Retarget one BVH clip across domains");
  retarget_cmd->add_option("--ckpt", rt_ckpt, "Model checkpoint")->required();
  retarget_cmd->add_option("--input", rt_input, "Source BVH file")->required();
  retarget_cmd->add_option("--from", rt_from, "Source domain: h or r")
      ->required()
      ->check(CLI::IsMember({"h", "r"}));
  retarget_cmd->add_option("--output", rt_output, "Destination BVH file")->required();

  // cycle-eval
  std::string ce_ckpt, ce_dir, ce_report, ce_home = "h";
  int ce_window = 64;
  double ce_scale = 10.0;
  CLI::App* cycle_cmd = app.add_subcommand("cycle-eval", "Score cycle reconstructions");
  cycle_cmd->add_option("--ckpt", ce_ckpt, "Model checkpoint")->required();
  cycle_cmd->add_option("--input-dir", ce_dir, "Motion directory (home domain)")->required();
  cycle_cmd->add_option("--report", ce_report, "Report JSON output path")->required();
  cycle_cmd->add_option("--home", ce_home, "Home domain: h or r (default h)")
      ->check(CLI::IsMember({"h", "r"}));
  cycle_cmd->add_option("--window", ce_window, "Evaluation window length (default 64)");
  cycle_cmd->add_option("--unit-scale-mm", ce_scale, "Millimeters per length unit (default 10)");

  // compare
  std::string cp_a, cp_b, cp_skel_a, cp_skel_b, cp_map, cp_report;
  double cp_scale = 10.0;
  CLI::App* compare_cmd = app.add_subcommand("compare", "Compare two motion directories");
  compare_cmd->add_option("--a-dir", cp_a, "First motion directory")->required();
  compare_cmd->add_option("--b-dir", cp_b, "Second motion directory")->required();
  compare_cmd->add_option("--skel-a", cp_skel_a, "BVH carrying the first hierarchy")->required();
  compare_cmd->add_option("--skel-b", cp_skel_b, "BVH carrying the second hierarchy")->required();
  compare_cmd->add_option("--ee-map", cp_map,
                          "End-effector map JSON: {key: {\"a\": joint, \"b\": joint}}");
  compare_cmd->add_option("--report", cp_report, "Report JSON output path")->required();
  compare_cmd->add_option("--unit-scale-mm", cp_scale, "Millimeters per length unit (default 10)");

  // fk
  std::string fk_input;
  int fk_frame = 0;
  CLI::App* fk_cmd = app.add_subcommand("fk", "Dump root-local joint positions as CSV");
  fk_cmd->add_option("--input", fk_input, "BVH file")->required();
  fk_cmd->add_option("--frame", fk_frame, "Frame index (default 0)");

  // validate
  std::string va_input, va_skel, va_config, va_reference;
  CLI::App* validate_cmd = app.add_subcommand("validate", "Check T-pose layout guidelines");
  CLI::Option* va_input_opt =
      validate_cmd->add_option("--input", va_input, "BVH file to lint");
  validate_cmd->add_option("--skel", va_skel, "BVH carrying the hierarchy to lint")
      ->excludes(va_input_opt);
  validate_cmd->add_option("--config", va_config, "Skeleton config JSON")->required();
  validate_cmd->add_option("--reference", va_reference,
                           "Reference BVH for chest-link orientations (default: self)");

  // gradcheck
  unsigned long long gc_seed = 42;
  int gc_draws = 100;
  CLI::App* gradcheck_cmd = app.add_subcommand("gradcheck", "Run the gradient-check suite");
  gradcheck_cmd->add_option("--seed", gc_seed, "Random seed (default 42)");
  gradcheck_cmd->add_option("--draws", gc_draws, "Draws per check (default 100)")
      ->check(CLI::PositiveNumber);

  // make-fixture
  std::string mf_spec, mf_out;
  unsigned long long mf_seed = 42;
  CLI::App* fixture_cmd =
      app.add_subcommand("make-fixture", "Generate the synthetic paired corpus");
  fixture_cmd->add_option("--spec", mf_spec, "Fixture spec JSON (defaults when omitted)");
  fixture_cmd->add_option("--out", mf_out, "Output directory")->required();
  CLI::Option* mf_seed_opt = fixture_cmd->add_option("--seed", mf_seed, "Random seed (default 42)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  tf.seed_set = train_seed->count() > 0;
  if (train_cmd->parsed()) return run_guarded([&] { return cmd_train(tf); });
  if (retarget_cmd->parsed())
    return run_guarded([&] { return cmd_retarget(rt_ckpt, rt_input, rt_from, rt_output); });
  if (cycle_cmd->parsed())
    return run_guarded(
        [&] { return cmd_cycle_eval(ce_ckpt, ce_dir, ce_report, ce_home, ce_window, ce_scale); });
  if (compare_cmd->parsed())
    return run_guarded(
        [&] { return cmd_compare(cp_a, cp_b, cp_skel_a, cp_skel_b, cp_map, cp_report, cp_scale); });
  if (fk_cmd->parsed()) return run_guarded([&] { return cmd_fk(fk_input, fk_frame); });
  if (validate_cmd->parsed()) {
    if (va_input.empty() && va_skel.empty()) {
      std::cerr << "error: validate needs --input or --skel\n";
      return kExitConfig;
    }
    return run_guarded(
        [&] { return cmd_validate(va_input.empty() ? va_skel : va_input, va_config, va_reference); });
  }
  if (gradcheck_cmd->parsed()) return run_guarded([&] { return cmd_gradcheck(gc_seed, gc_draws); });
  if (fixture_cmd->parsed())
    return run_guarded(
        [&] { return cmd_make_fixture(mf_spec, mf_out, mf_seed, mf_seed_opt->count() > 0); });
  return kExitConfig;
}
