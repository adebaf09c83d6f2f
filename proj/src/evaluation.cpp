#include "nmrt/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nmrt/errors.hpp"
#include "nmrt/kinematics.hpp"

namespace nmrt {
namespace {

using nlohmann::json;

void check_clip_fits(const Skeleton& skel, const MotionClip& clip, const char* which) {
  for (const Pose& p : clip.frames)
    if (static_cast<int>(p.rotations.size()) != skel.joint_count())
      fail(ErrKind::SkeletonMismatch,
           std::string(which) + " clip \"" + clip.name + "\" carries " +
               std::to_string(p.rotations.size()) + " rotations per frame, skeleton has " +
               std::to_string(skel.joint_count()) + " joints");
}

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

double mean_joint_position_error(const Skeleton& skel, const MotionClip& a, const MotionClip& b,
                                 double unit_scale_mm) {
  if (a.frames.size() != b.frames.size())
    fail(ErrKind::FrameCountMismatch, "clips have " + std::to_string(a.frames.size()) + " vs " +
                                          std::to_string(b.frames.size()) + " frames");
  check_clip_fits(skel, a, "first");
  check_clip_fits(skel, b, "second");
  if (a.frames.empty() || skel.joint_count() < 2) return 0.0;

  double sum = 0.0;
  for (size_t f = 0; f < a.frames.size(); ++f) {
    const std::vector<Vec3> pa = forward_kinematics(skel, a.frames[f], /*root_local=*/true);
    const std::vector<Vec3> pb = forward_kinematics(skel, b.frames[f], /*root_local=*/true);
    for (int j = 0; j < skel.joint_count(); ++j) {
      if (j == skel.root_index) continue;
      sum += distance(pa[static_cast<size_t>(j)], pb[static_cast<size_t>(j)]);
    }
  }
  const double n = static_cast<double>(a.frames.size()) * (skel.joint_count() - 1);
  return sum / n * unit_scale_mm;
}

std::vector<EeMapEntry> ee_map_from_configs(const SkeletonConfig& a, const SkeletonConfig& b) {
  return {{"head", a.end_effectors.head, b.end_effectors.head},
          {"left_hand", a.end_effectors.left_hand, b.end_effectors.left_hand},
          {"right_hand", a.end_effectors.right_hand, b.end_effectors.right_hand}};
}

std::map<std::string, double> end_effector_errors(const Skeleton& skel_a, const MotionClip& a,
                                                  const Skeleton& skel_b, const MotionClip& b,
                                                  const std::vector<EeMapEntry>& ee_map,
                                                  double unit_scale_cm) {
  if (a.frames.size() != b.frames.size())
    fail(ErrKind::FrameCountMismatch, "clips have " + std::to_string(a.frames.size()) + " vs " +
                                          std::to_string(b.frames.size()) + " frames");
  check_clip_fits(skel_a, a, "first");
  check_clip_fits(skel_b, b, "second");

  std::vector<int> idx_a, idx_b;
  for (const EeMapEntry& e : ee_map) {
    const int ja = skel_a.find_joint(e.joint_a);
    const int jb = skel_b.find_joint(e.joint_b);
    if (ja < 0)
      fail(ErrKind::UnknownEndEffector, e.key + ": no joint \"" + e.joint_a + "\" in skeleton a");
    if (jb < 0)
      fail(ErrKind::UnknownEndEffector, e.key + ": no joint \"" + e.joint_b + "\" in skeleton b");
    idx_a.push_back(ja);
    idx_b.push_back(jb);
  }

  std::vector<double> sums(ee_map.size(), 0.0);
  for (size_t f = 0; f < a.frames.size(); ++f) {
    const std::vector<Vec3> pa = forward_kinematics(skel_a, a.frames[f], /*root_local=*/true);
    const std::vector<Vec3> pb = forward_kinematics(skel_b, b.frames[f], /*root_local=*/true);
    for (size_t e = 0; e < ee_map.size(); ++e)
      sums[e] += distance(pa[static_cast<size_t>(idx_a[e])], pb[static_cast<size_t>(idx_b[e])]);
  }
  std::map<std::string, double> out;
  const double n = a.frames.empty() ? 1.0 : static_cast<double>(a.frames.size());
  for (size_t e = 0; e < ee_map.size(); ++e) out[ee_map[e].key] = sums[e] / n * unit_scale_cm;
  return out;
}

MotionClip resample_nearest(const MotionClip& clip, int frames) {
  if (frames < 1) fail(ErrKind::ConfigInvalid, "resample target must be >= 1 frame");
  if (clip.frames.empty()) fail(ErrKind::FrameCountMismatch, "cannot resample an empty clip");
  const int n = static_cast<int>(clip.frames.size());
  MotionClip out;
  out.name = clip.name;
  out.frame_time = clip.frame_time * static_cast<double>(n) / frames;
  out.frames.reserve(static_cast<size_t>(frames));
  for (int i = 0; i < frames; ++i) {
    const int src = frames == 1
                        ? 0
                        : static_cast<int>(std::llround(static_cast<double>(i) * (n - 1) /
                                                        (frames - 1)));
    out.frames.push_back(clip.frames[static_cast<size_t>(src)]);
  }
  return out;
}

std::string reference_constants_json() {
  json ref;
  ref["cycle_mjpe_mm"] = {{"ours", 14.7}, {"ik_baseline", 32.3}};
  ref["ee_mean_gap_cm"] = {{"open", 9.4}, {"wipe", 15.4}};
  ref["table1_ee_cm"] = json::array(
      {json{{"name", "Open"},
            {"ours", {{"head", 10.7}, {"left_hand", 26.1}, {"right_hand", 17.8}}},
            {"ik_baseline", {{"head", 11.2}, {"left_hand", 24.2}, {"right_hand", 22.5}}}},
       json{{"name", "Wipe"},
            {"ours", {{"head", 3.8}, {"left_hand", 31.9}, {"right_hand", 16.2}}},
            {"ik_baseline", {{"head", 12.9}, {"left_hand", 32.2}, {"right_hand", 36.5}}}}});
  return ref.dump();
}

MotionClip cycle_reconstruct(const RetargetModel& model, Domain home, const MotionClip& clip,
                             int window) {
  if (window < 8 || window % 2 != 0)
    fail(ErrKind::ConfigInvalid, "evaluation window must be even and >= 8");
  const DomainSpec& sp = model.spec(home);
  const int n = static_cast<int>(clip.frames.size());
  if (n < window)
    fail(ErrKind::ShapeMismatch, "clip \"" + clip.name + "\" has " + std::to_string(n) +
                                     " frames, shorter than the evaluation window " +
                                     std::to_string(window));

  std::vector<int> starts;
  for (int s = 0; s + window <= n; s += window) starts.push_back(s);
  if (starts.back() + window < n) starts.push_back(n - window);  // end-aligned tail

  Tensor out({sp.feature_rows(), n});
  double* po = out.data();
  for (int s : starts) {
    Tensor win = sp.features_from_frames(clip, s, window);
    Tensor cyc = model.cycle_window(home, win);
    const double* pc = cyc.data();
    for (int r = 0; r < sp.feature_rows(); ++r)
      for (int t = 0; t < window; ++t)
        po[static_cast<long>(r) * n + s + t] = pc[static_cast<long>(r) * window + t];
  }
  return sp.clip_from_features(out, clip.name, clip.frame_time);
}

MotionClip retarget_clip(const RetargetModel& model, Domain from, const MotionClip& clip) {
  const DomainSpec& sp_from = model.spec(from);
  const Domain to = from == Domain::Human ? Domain::Robot : Domain::Human;
  const DomainSpec& sp_to = model.spec(to);
  const int n = static_cast<int>(clip.frames.size());
  if (model.identity_double())
    return sp_to.clip_from_features(model.retarget_window(from, sp_from.features_from_clip(clip)),
                                    clip.name, clip.frame_time);
  if (n < 8)
    fail(ErrKind::LengthMismatch, "clip \"" + clip.name + "\" has " + std::to_string(n) +
                                      " frames; retargeting needs at least 8");
  const int window = n - n % 2;
  Tensor out({sp_to.feature_rows(), n});
  double* po = out.data();
  for (int s = 0; s <= n - window; ++s) {  // {0} when n even, {0, 1} when odd
    Tensor ret = model.retarget_window(from, sp_from.features_from_frames(clip, s, window));
    const double* pr = ret.data();
    for (int r = 0; r < sp_to.feature_rows(); ++r)
      for (int t = 0; t < window; ++t)
        po[static_cast<long>(r) * n + s + t] = pr[static_cast<long>(r) * window + t];
  }
  return sp_to.clip_from_features(out, clip.name, clip.frame_time);
}

MotionMetrics pool_metrics(const std::vector<MotionMetrics>& rows) {
  MotionMetrics agg;
  agg.name = "aggregate";
  double mjpe_weighted = 0.0;
  std::map<std::string, double> ee_weighted;
  for (const MotionMetrics& m : rows) {
    mjpe_weighted += m.mjpe_mm * static_cast<double>(m.frames);
    for (const auto& [key, v] : m.ee_cm) ee_weighted[key] += v * static_cast<double>(m.frames);
    agg.frames += m.frames;
  }
  if (agg.frames > 0) {
    agg.mjpe_mm = mjpe_weighted / static_cast<double>(agg.frames);
    for (const auto& [key, v] : ee_weighted)
      agg.ee_cm[key] = v / static_cast<double>(agg.frames);
  }
  return agg;
}

MetricsReport cycle_evaluate(const RetargetModel& model, Domain home,
                             const std::vector<MotionClip>& clips, int window,
                             double unit_scale_mm, std::vector<std::string>* warnings) {
  const DomainSpec& sp = model.spec(home);
  const std::vector<EeMapEntry> ee_map = ee_map_from_configs(sp.config(), sp.config());

  MetricsReport report;
  report.unit_scale_mm = unit_scale_mm;

  for (const MotionClip& clip : clips) {
    if (static_cast<int>(clip.frames.size()) < window) {
      if (warnings)
        warnings->push_back("clip \"" + clip.name + "\" has " +
                            std::to_string(clip.frames.size()) +
                            " frames, shorter than the evaluation window; skipped");
      continue;
    }
    const MotionClip recon = cycle_reconstruct(model, home, clip, window);
    MotionMetrics m;
    m.name = clip.name;
    m.frames = static_cast<long>(clip.frames.size());
    m.mjpe_mm = mean_joint_position_error(sp.skeleton(), clip, recon, unit_scale_mm);
    m.ee_cm = end_effector_errors(sp.skeleton(), clip, sp.skeleton(), recon, ee_map,
                                  unit_scale_mm / 10.0);
    report.per_motion.push_back(std::move(m));
  }

  report.aggregate = pool_metrics(report.per_motion);
  return report;
}

std::string report_to_json_text(const MetricsReport& report) {
  json js;
  js["aggregate"] = {{"mjpe_mm", report.aggregate.mjpe_mm},
                     {"ee_cm", report.aggregate.ee_cm}};
  json per = json::array();
  for (const MotionMetrics& m : report.per_motion)
    per.push_back({{"name", m.name},
                   {"frames", m.frames},
                   {"mjpe_mm", m.mjpe_mm},
                   {"ee_cm", m.ee_cm}});
  js["per_motion"] = per;
  js["unit_scale_mm"] = report.unit_scale_mm;
  if (!report.reference_json.empty()) js["reference"] = json::parse(report.reference_json);
  return js.dump(2);
}

MetricsReport report_from_json_text(const std::string& text) {
  json js;
  try {
    js = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrKind::SchemaError, std::string("report is not valid JSON: ") + e.what());
  }
  MetricsReport report;
  try {
    report.aggregate.name = "aggregate";
    report.aggregate.mjpe_mm = js.at("aggregate").at("mjpe_mm").get<double>();
    report.aggregate.ee_cm =
        js.at("aggregate").at("ee_cm").get<std::map<std::string, double>>();
    for (const json& jm : js.at("per_motion")) {
      MotionMetrics m;
      m.name = jm.at("name").get<std::string>();
      m.frames = jm.at("frames").get<long>();
      m.mjpe_mm = jm.at("mjpe_mm").get<double>();
      m.ee_cm = jm.at("ee_cm").get<std::map<std::string, double>>();
      report.aggregate.frames += m.frames;
      report.per_motion.push_back(std::move(m));
    }
    report.unit_scale_mm = js.at("unit_scale_mm").get<double>();
    if (js.contains("reference")) report.reference_json = js.at("reference").dump();
  } catch (const json::exception& e) {
    fail(ErrKind::SchemaError, std::string("report JSON misses required fields: ") + e.what());
  }
  return report;
}

void write_report(const MetricsReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrKind::DiskWrite, "cannot open " + path + " for writing");
  out << report_to_json_text(report) << "\n";
  out.flush();
  if (!out) fail(ErrKind::DiskWrite, "failed writing report to " + path);
}

MetricsReport read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrKind::IoError, "cannot open report " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return report_from_json_text(text);
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

double ee_or_zero(const std::map<std::string, double>& m, const char* key) {
  auto it = m.find(key);
  return it == m.end() ? 0.0 : it->second;
}

void append_row(std::string* out, const std::vector<std::string>& cells,
                const std::vector<size_t>& widths) {
  for (size_t i = 0; i < cells.size(); ++i) {
    std::string cell = cells[i];
    if (cell.size() < widths[i]) cell.resize(widths[i], ' ');
    *out += cell;
    if (i + 1 < cells.size()) *out += "  ";
  }
  while (!out->empty() && out->back() == ' ') out->pop_back();
  *out += "\n";
}

}  // namespace

std::string render_report_table(const MetricsReport& report) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"motion", "frames", "MJPE[mm]", "Head[cm]", "L.Hand[cm]", "R.Hand[cm]"});
  auto metric_row = [](const MotionMetrics& m) {
    return std::vector<std::string>{m.name,
                                    std::to_string(m.frames),
                                    fmt(m.mjpe_mm),
                                    fmt(ee_or_zero(m.ee_cm, "head")),
                                    fmt(ee_or_zero(m.ee_cm, "left_hand")),
                                    fmt(ee_or_zero(m.ee_cm, "right_hand"))};
  };
  for (const MotionMetrics& m : report.per_motion) rows.push_back(metric_row(m));
  rows.push_back(metric_row(report.aggregate));

  std::vector<size_t> widths(rows[0].size(), 0);
  for (const auto& row : rows)
    for (size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
  std::string out;
  for (const auto& row : rows) append_row(&out, row, widths);

  if (!report.reference_json.empty()) {
    const json ref = json::parse(report.reference_json);
    out += "\npublished full-scale reference\n";
    if (ref.contains("cycle_mjpe_mm"))
      out += "cycle MJPE [mm]: ours " + fmt(ref["cycle_mjpe_mm"]["ours"].get<double>()) +
             ", ik_baseline " + fmt(ref["cycle_mjpe_mm"]["ik_baseline"].get<double>()) + "\n";
    if (ref.contains("table1_ee_cm")) {
      std::vector<std::vector<std::string>> rrows;
      rrows.push_back({"motion", "ours:Head", "L.Hand", "R.Hand", "ik:Head", "L.Hand", "R.Hand"});
      for (const json& jm : ref["table1_ee_cm"]) {
        auto cell = [&jm](const char* method, const char* key) {
          return fmt(jm[method][key].get<double>());
        };
        rrows.push_back({jm["name"].get<std::string>(), cell("ours", "head"),
                         cell("ours", "left_hand"), cell("ours", "right_hand"),
                         cell("ik_baseline", "head"), cell("ik_baseline", "left_hand"),
                         cell("ik_baseline", "right_hand")});
      }
      std::vector<size_t> rwidths(rrows[0].size(), 0);
      for (const auto& row : rrows)
        for (size_t i = 0; i < row.size(); ++i) rwidths[i] = std::max(rwidths[i], row[i].size());
      for (const auto& row : rrows) append_row(&out, row, rwidths);
    }
  }
  return out;
}

}  // namespace nmrt
