#include "nmrt/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nmrt/errors.hpp"

namespace nmrt {
namespace {

using nlohmann::json;

json vec3_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3)
    fail(ErrKind::HeaderShapeMismatch, "offset must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json skeleton_to_json(const Skeleton& skel) {
  json joints = json::array();
  for (const Joint& j : skel.joints) {
    json jj;
    jj["name"] = j.name;
    jj["parent"] = j.parent;
    jj["offset"] = vec3_to_json(j.offset);
    jj["kind"] = joint_kind_name(j.kind);
    json ch = json::array();
    for (ChannelKind c : j.channels) ch.push_back(channel_kind_name(c));
    jj["channels"] = ch;
    if (j.rotation_order) jj["rotation_order"] = axis_order_name(*j.rotation_order);
    jj["end_site"] = j.end_site;
    joints.push_back(jj);
  }
  return json{{"joints", joints}, {"root_index", skel.root_index}};
}

Skeleton skeleton_from_json(const json& js) {
  Skeleton skel;
  skel.root_index = js.at("root_index").get<int>();
  for (const json& jj : js.at("joints")) {
    Joint j;
    j.name = jj.at("name").get<std::string>();
    j.parent = jj.at("parent").get<int>();
    j.offset = vec3_from_json(jj.at("offset"));
    j.kind = joint_kind_from_name(jj.at("kind").get<std::string>());
    for (const json& c : jj.at("channels"))
      j.channels.push_back(channel_kind_from_name(c.get<std::string>()));
    if (jj.contains("rotation_order"))
      j.rotation_order = parse_axis_order(jj.at("rotation_order").get<std::string>());
    j.end_site = jj.at("end_site").get<bool>();
    skel.joints.push_back(std::move(j));
  }
  skel.validate();
  return skel;
}

json stats_to_json(const DomainStats& st) {
  return json{{"mean", st.mean}, {"std", st.stdev}};
}

DomainStats stats_from_json(const json& js) {
  DomainStats st;
  st.mean = js.at("mean").get<std::vector<double>>();
  st.stdev = js.at("std").get<std::vector<double>>();
  return st;
}

json header_json(const RetargetModel& model) {
  const ModelConfig& cfg = model.model_config();
  json header;
  header["version"] = kCheckpointVersion;
  header["model"] = {{"latent", cfg.latent},
                     {"kernel", cfg.kernel},
                     {"disc_channels", cfg.disc_channels},
                     {"padding", cfg.padding == PadMode::Reflect ? "reflect" : "zero"},
                     {"identity_double", model.identity_double()}};
  json domains = json::array();
  for (Domain d : {Domain::Human, Domain::Robot}) {
    const DomainSpec& sp = model.spec(d);
    domains.push_back({{"name", domain_name(d)},
                       {"skeleton", skeleton_to_json(sp.skeleton())},
                       {"config", json::parse(skeleton_config_to_json_text(sp.config()))},
                       {"stats", stats_to_json(model.stats(d))}});
  }
  header["domains"] = domains;
  json params = json::array();
  const std::vector<std::string>& names = model.param_names();
  const std::vector<Tensor>& tensors = model.params();
  for (size_t i = 0; i < tensors.size(); ++i)
    params.push_back({{"name", names[i]}, {"shape", tensors[i].shape()}});
  header["params"] = params;
  return header;
}

void append_f64_le(std::string* out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  for (int b = 0; b < 8; ++b) out->push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

double read_f64_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

}  // namespace

std::string checkpoint_header_json(const RetargetModel& model) {
  return header_json(model).dump();
}

void save_checkpoint(const RetargetModel& model, const std::string& path) {
  const std::string header = checkpoint_header_json(model);
  std::string blob;
  blob.append(kCheckpointMagic, 4);
  blob.push_back(static_cast<char>(kCheckpointVersion));
  const std::uint32_t hlen = static_cast<std::uint32_t>(header.size());
  for (int b = 0; b < 4; ++b) blob.push_back(static_cast<char>((hlen >> (8 * b)) & 0xff));
  blob += header;
  for (const Tensor& t : model.params()) {
    const double* p = t.data();
    for (long i = 0; i < t.numel(); ++i) append_f64_le(&blob, p[i]);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrKind::DiskWrite, "cannot open " + path + " for writing");
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  out.flush();
  if (!out) fail(ErrKind::DiskWrite, "failed writing checkpoint to " + path);
}

RetargetModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrKind::IoError, "cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string blob = ss.str();

  if (blob.size() < 9 || std::memcmp(blob.data(), kCheckpointMagic, 4) != 0)
    fail(ErrKind::BadMagic, path + " does not start with the NMRT magic");
  const std::uint8_t version = static_cast<std::uint8_t>(blob[4]);
  if (version != kCheckpointVersion)
    fail(ErrKind::VersionUnsupported,
         "checkpoint version " + std::to_string(version) + ", expected " +
             std::to_string(kCheckpointVersion));
  std::uint32_t hlen = 0;
  for (int b = 0; b < 4; ++b)
    hlen |= static_cast<std::uint32_t>(static_cast<unsigned char>(blob[5 + b])) << (8 * b);
  if (blob.size() < 9 + static_cast<size_t>(hlen))
    fail(ErrKind::PayloadTruncated, "checkpoint header extends past end of file");

  json header;
  try {
    header = json::parse(blob.substr(9, hlen));
  } catch (const json::exception& e) {
    fail(ErrKind::HeaderShapeMismatch, std::string("malformed checkpoint header: ") + e.what());
  }

  ModelConfig cfg;
  DomainSpec specs[2];
  DomainStats stats[2];
  bool identity_double = false;
  try {
    const json& jm = header.at("model");
    cfg.latent = jm.at("latent").get<int>();
    cfg.kernel = jm.at("kernel").get<int>();
    cfg.disc_channels = jm.at("disc_channels").get<int>();
    cfg.padding = jm.at("padding").get<std::string>() == "zero" ? PadMode::Zero : PadMode::Reflect;
    identity_double = jm.at("identity_double").get<bool>();
    const json& jd = header.at("domains");
    if (!jd.is_array() || jd.size() != 2)
      fail(ErrKind::HeaderShapeMismatch, "checkpoint must describe exactly two domains");
    for (int d = 0; d < 2; ++d) {
      const json& dom = jd[static_cast<size_t>(d)];
      Skeleton skel = skeleton_from_json(dom.at("skeleton"));
      SkeletonConfig config = skeleton_config_from_json_text(dom.at("config").dump());
      specs[d] = DomainSpec(skel, config);
      stats[d] = stats_from_json(dom.at("stats"));
    }
  } catch (const json::exception& e) {
    fail(ErrKind::HeaderShapeMismatch, std::string("incomplete checkpoint header: ") + e.what());
  }

  Rng rng(0);
  RetargetModel model(std::move(specs[0]), std::move(specs[1]), cfg, rng);
  model.set_stats(Domain::Human, std::move(stats[0]));
  model.set_stats(Domain::Robot, std::move(stats[1]));
  model.set_identity_double(identity_double);

  const json& jp = header.at("params");
  const std::vector<std::string>& names = model.param_names();
  std::vector<Tensor>& tensors = model.params();
  if (jp.size() != tensors.size())
    fail(ErrKind::HeaderShapeMismatch, "checkpoint lists " + std::to_string(jp.size()) +
                                           " parameters, model has " +
                                           std::to_string(tensors.size()));
  size_t offset = 9 + static_cast<size_t>(hlen);
  for (size_t i = 0; i < tensors.size(); ++i) {
    const json& entry = jp[i];
    const std::string name = entry.at("name").get<std::string>();
    const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
    if (name != names[i] || shape != tensors[i].shape())
      fail(ErrKind::HeaderShapeMismatch,
           "parameter " + std::to_string(i) + " is " + name + shape_name(shape) +
               " in the header but " + names[i] + shape_name(tensors[i].shape()) +
               " in the model");
    const size_t bytes = static_cast<size_t>(tensors[i].numel()) * 8;
    if (offset + bytes > blob.size())
      fail(ErrKind::PayloadTruncated, "checkpoint payload ends inside parameter " + name);
    double* p = tensors[i].data();
    const unsigned char* src = reinterpret_cast<const unsigned char*>(blob.data()) + offset;
    for (long k = 0; k < tensors[i].numel(); ++k) p[k] = read_f64_le(src + 8 * k);
    offset += bytes;
  }
  if (offset != blob.size())
    fail(ErrKind::PayloadTruncated, "checkpoint has " + std::to_string(blob.size() - offset) +
                                        " trailing bytes after the last parameter");
  return model;
}

}  // namespace nmrt
