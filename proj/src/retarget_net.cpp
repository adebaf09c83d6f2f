#include "nmrt/retarget_net.hpp"

#include <cmath>

#include "nmrt/errors.hpp"

namespace nmrt {

const char* domain_name(Domain d) { return d == Domain::Human ? "human" : "robot"; }

DomainSpec::DomainSpec(const Skeleton& skeleton, const SkeletonConfig& config)
    : skel_(bind_config(skeleton, config)), config_(config) {
  if (config_.height <= 0.0)
    fail(ErrKind::ConfigInvalid, "character height must be positive");
  const int j_count = skel_.joint_count();
  const int part_total = config_.part_count();
  unit_of_joint_.assign(static_cast<size_t>(j_count), -1);
  const int root_part = skel_.joints[static_cast<size_t>(skel_.root_index)].part;

  int row = 0;
  for (int p = 0; p < part_total; ++p) {
    PartBlock blk;
    blk.row = row;
    blk.unit_begin = static_cast<int>(units_.size());
    for (int j = 0; j < j_count; ++j) {
      const Joint& joint = skel_.joints[static_cast<size_t>(j)];
      if (joint.part != p || joint.kind != JointKind::Actuated) continue;
      unit_of_joint_[static_cast<size_t>(j)] = static_cast<int>(units_.size());
      units_.push_back({j, row, 4});
      row += 4;
    }
    if (p == root_part) {
      translation_row_ = row;
      units_.push_back({-1, row, 3});
      row += 3;
    }
    blk.unit_count = static_cast<int>(units_.size()) - blk.unit_begin;
    blk.width = row - blk.row;
    if (blk.unit_count == 0)
      fail(ErrKind::ConfigInvalid,
           "body part " + std::to_string(p) + " has no actuated joints to carry features");
    parts_.push_back(blk);
  }
  feature_rows_ = row;
}

std::vector<RowSpan> DomainSpec::quat_spans() const {
  std::vector<RowSpan> spans;
  for (const FeatureUnit& u : units_)
    if (u.joint >= 0) spans.emplace_back(u.row, 4);
  return spans;
}

Tensor DomainSpec::features_from_frames(const MotionClip& clip, int begin, int len) const {
  const int n = static_cast<int>(clip.frames.size());
  if (begin < 0 || len < 1 || begin + len > n)
    fail(ErrKind::ShapeMismatch, "window [" + std::to_string(begin) + "," +
                                     std::to_string(begin + len) + ") outside clip of " +
                                     std::to_string(n) + " frames");
  Tensor out({feature_rows_, len});
  double* po = out.data();
  for (int t = 0; t < len; ++t) {
    const Pose& pose = clip.frames[static_cast<size_t>(begin + t)];
    if (static_cast<int>(pose.rotations.size()) != skel_.joint_count())
      fail(ErrKind::LengthMismatch, "pose joint count does not match skeleton");
    for (const FeatureUnit& u : units_) {
      const long base = static_cast<long>(u.row) * len + t;
      if (u.joint >= 0) {
        const Quat& q = pose.rotations[static_cast<size_t>(u.joint)];
        po[base] = q.w;
        po[base + len] = q.x;
        po[base + 2L * len] = q.y;
        po[base + 3L * len] = q.z;
      } else {
        po[base] = pose.root_translation.x;
        po[base + len] = pose.root_translation.y;
        po[base + 2L * len] = pose.root_translation.z;
      }
    }
  }
  return out;
}

Tensor DomainSpec::features_from_clip(const MotionClip& clip) const {
  return features_from_frames(clip, 0, static_cast<int>(clip.frames.size()));
}

std::vector<Pose> DomainSpec::poses_from_features(const Tensor& features) const {
  if (features.rank() != 2 || features.dim(0) != feature_rows_)
    fail(ErrKind::ShapeMismatch, "features " + shape_name(features.shape()) + " do not match " +
                                     std::to_string(feature_rows_) + " channel rows");
  const int len = features.dim(1);
  const double* pf = features.data();
  std::vector<Pose> poses(static_cast<size_t>(len));
  for (int t = 0; t < len; ++t) {
    Pose& pose = poses[static_cast<size_t>(t)];
    pose.rotations.assign(static_cast<size_t>(skel_.joint_count()), Quat::identity());
    for (const FeatureUnit& u : units_) {
      const long base = static_cast<long>(u.row) * len + t;
      if (u.joint >= 0) {
        Quat q{pf[base], pf[base + len], pf[base + 2L * len], pf[base + 3L * len]};
        const double n = q.norm();
        pose.rotations[static_cast<size_t>(u.joint)] =
            n < 1e-12 ? Quat::identity()
                      : Quat{q.w / n, q.x / n, q.y / n, q.z / n}.canonical();
      } else {
        pose.root_translation = {pf[base], pf[base + len], pf[base + 2L * len]};
      }
    }
  }
  return poses;
}

MotionClip DomainSpec::clip_from_features(const Tensor& features, std::string name,
                                          double frame_time) const {
  MotionClip clip;
  clip.name = std::move(name);
  clip.frame_time = frame_time;
  clip.frames = poses_from_features(features);
  return clip;
}

Tensor DomainSpec::pose_rows_from_features(const Tensor& features) const {
  if (features.rank() != 2 || features.dim(0) != feature_rows_)
    fail(ErrKind::ShapeMismatch, "features " + shape_name(features.shape()) + " do not match " +
                                     std::to_string(feature_rows_) + " channel rows");
  const int len = features.dim(1);
  std::vector<Tensor> pieces;
  pieces.reserve(static_cast<size_t>(skel_.joint_count()) + 1);
  for (int j = 0; j < skel_.joint_count(); ++j) {
    const int u = unit_of_joint_[static_cast<size_t>(j)];
    if (u >= 0) {
      pieces.push_back(slice_rows(features, units_[static_cast<size_t>(u)].row, 4));
    } else {
      Tensor ident({4, len});
      double* pi = ident.data();
      for (int t = 0; t < len; ++t) pi[t] = 1.0;  // unit w row
      pieces.push_back(std::move(ident));
    }
  }
  pieces.push_back(slice_rows(features, translation_row_, 3));
  return concat(pieces, 0);
}

DomainStats compute_norm_stats(const DomainSpec& spec, const std::vector<MotionClip>& clips) {
  const int rows = spec.feature_rows();
  long total = 0;
  for (const MotionClip& c : clips) total += static_cast<long>(c.frames.size());
  if (total == 0) fail(ErrKind::EmptyCorpus, "no frames to compute normalization stats from");

  std::vector<double> mean(static_cast<size_t>(rows), 0.0);
  for (const MotionClip& c : clips) {
    if (c.frames.empty()) continue;
    Tensor f = spec.features_from_clip(c);
    const int len = f.dim(1);
    const double* pf = f.data();
    for (int r = 0; r < rows; ++r)
      for (int t = 0; t < len; ++t) mean[static_cast<size_t>(r)] += pf[static_cast<long>(r) * len + t];
  }
  for (double& m : mean) m /= static_cast<double>(total);

  std::vector<double> var(static_cast<size_t>(rows), 0.0);
  for (const MotionClip& c : clips) {
    if (c.frames.empty()) continue;
    Tensor f = spec.features_from_clip(c);
    const int len = f.dim(1);
    const double* pf = f.data();
    for (int r = 0; r < rows; ++r)
      for (int t = 0; t < len; ++t) {
        const double d = pf[static_cast<long>(r) * len + t] - mean[static_cast<size_t>(r)];
        var[static_cast<size_t>(r)] += d * d;
      }
  }
  DomainStats stats;
  stats.mean = std::move(mean);
  stats.stdev.resize(static_cast<size_t>(rows));
  for (int r = 0; r < rows; ++r)
    stats.stdev[static_cast<size_t>(r)] =
        std::max(std::sqrt(var[static_cast<size_t>(r)] / static_cast<double>(total)), 1e-6);
  return stats;
}

Tensor normalize_features(const Tensor& x, const DomainStats& stats) {
  const size_t rows = stats.mean.size();
  std::vector<double> scale(rows), shift(rows);
  for (size_t r = 0; r < rows; ++r) {
    scale[r] = 1.0 / stats.stdev[r];
    shift[r] = -stats.mean[r] / stats.stdev[r];
  }
  return channel_affine(x, scale, shift);
}

Tensor ParamStore::add(const std::string& name, Tensor t) {
  t.set_requires_grad(true);
  names.push_back(name);
  tensors.push_back(t);
  return t;
}

GroupedConv1d::GroupedConv1d(const std::string& prefix, const std::vector<Group>& groups,
                             int kernel, int stride, PadMode mode, ParamStore& store, Rng& rng)
    : groups_(groups), kernel_(kernel), stride_(stride), mode_(mode) {
  for (size_t g = 0; g < groups_.size(); ++g) {
    const Group& gr = groups_[g];
    if (gr.in_count <= 0 || gr.out_count <= 0)
      fail(ErrKind::ConfigInvalid, prefix + ": conv group " + std::to_string(g) + " is empty");
    const double bound = 1.0 / std::sqrt(static_cast<double>(gr.in_count) * kernel);
    Tensor w({gr.out_count, gr.in_count, kernel});
    double* pw = w.data();
    for (long i = 0; i < w.numel(); ++i) pw[i] = (2.0 * rng.uniform() - 1.0) * bound;
    const std::string gname = prefix + ".g" + std::to_string(g);
    weights_.push_back(store.add(gname + ".w", std::move(w)));
    biases_.push_back(store.add(gname + ".b", Tensor({gr.out_count})));
  }
}

Tensor GroupedConv1d::forward(const Tensor& x) const {
  Conv1dOptions opt;
  opt.stride = stride_;
  opt.pad = (kernel_ - 1) / 2;
  opt.mode = mode_;
  std::vector<Tensor> outs;
  outs.reserve(groups_.size());
  for (size_t g = 0; g < groups_.size(); ++g) {
    const Group& gr = groups_[g];
    Tensor xs = slice_rows(x, gr.in_begin, gr.in_count);
    outs.push_back(bias_add(conv1d(xs, weights_[g], opt), biases_[g]));
  }
  return outs.size() == 1 ? outs[0] : concat(outs, 0);
}

int GroupedConv1d::out_rows() const {
  int n = 0;
  for (const Group& g : groups_) n += g.out_count;
  return n;
}

namespace {

constexpr double kLeakySlope = 0.2;

/// Pool [P*L, U*L]: mean over each part's unit L-blocks; unpool [U*L, P*L]:
/// copy the part block to each member unit. pool * unpool = identity.
void build_pool_matrices(const DomainSpec& spec, int latent, Tensor* pool, Tensor* unpool) {
  const int u_total = static_cast<int>(spec.units().size());
  const int p_total = spec.part_count();
  Tensor m_pool({p_total * latent, u_total * latent});
  Tensor m_unpool({u_total * latent, p_total * latent});
  double* pp = m_pool.data();
  double* pu = m_unpool.data();
  const long pool_cols = static_cast<long>(u_total) * latent;
  const long unpool_cols = static_cast<long>(p_total) * latent;
  for (int p = 0; p < p_total; ++p) {
    const PartBlock& blk = spec.parts()[static_cast<size_t>(p)];
    const double inv = 1.0 / blk.unit_count;
    for (int u = blk.unit_begin; u < blk.unit_begin + blk.unit_count; ++u)
      for (int l = 0; l < latent; ++l) {
        pp[(static_cast<long>(p) * latent + l) * pool_cols + static_cast<long>(u) * latent + l] = inv;
        pu[(static_cast<long>(u) * latent + l) * unpool_cols + static_cast<long>(p) * latent + l] = 1.0;
      }
  }
  *pool = std::move(m_pool);
  *unpool = std::move(m_unpool);
}

}  // namespace

RetargetModel::RetargetModel(DomainSpec human, DomainSpec robot, ModelConfig cfg, Rng& rng)
    : cfg_(cfg) {
  spec_[0] = std::move(human);
  spec_[1] = std::move(robot);
  if (spec_[0].part_count() != spec_[1].part_count())
    fail(ErrKind::ConfigInvalid,
         "domains declare different body-part counts: " + std::to_string(spec_[0].part_count()) +
             " vs " + std::to_string(spec_[1].part_count()));
  if (cfg_.latent < 1 || cfg_.disc_channels < 1)
    fail(ErrKind::ConfigInvalid, "latent width and discriminator channels must be >= 1");
  if (cfg_.kernel < 1 || cfg_.kernel % 2 == 0)
    fail(ErrKind::ConfigInvalid, "temporal kernel size must be odd and >= 1");

  const int latent = cfg_.latent;
  const int kernel = cfg_.kernel;
  for (int d = 0; d < 2; ++d) {
    const DomainSpec& sp = spec_[d];
    stats_[d].mean.assign(static_cast<size_t>(sp.feature_rows()), 0.0);
    stats_[d].stdev.assign(static_cast<size_t>(sp.feature_rows()), 1.0);

    const std::string dn = d == 0 ? "h" : "r";
    const int p_total = sp.part_count();
    std::vector<GroupedConv1d::Group> enc1, enc2, dec1, dec2;
    for (int p = 0; p < p_total; ++p) {
      const PartBlock& blk = sp.parts()[static_cast<size_t>(p)];
      enc1.push_back({blk.row, blk.width, blk.unit_count * latent});
      enc2.push_back({p * latent, latent, latent});
      dec1.push_back({blk.unit_begin * latent, blk.unit_count * latent, blk.unit_count * latent});
      dec2.push_back({blk.unit_begin * latent, blk.unit_count * latent, blk.width});
    }
    Codec& codec = codec_[d];
    codec.enc1 = GroupedConv1d("enc_" + dn + ".c1", enc1, kernel, 1, cfg_.padding, store_, rng);
    codec.enc2 = GroupedConv1d("enc_" + dn + ".c2", enc2, kernel, 2, cfg_.padding, store_, rng);
    codec.dec1 = GroupedConv1d("dec_" + dn + ".c1", dec1, kernel, 1, cfg_.padding, store_, rng);
    codec.dec2 = GroupedConv1d("dec_" + dn + ".c2", dec2, kernel, 1, cfg_.padding, store_, rng);
    build_pool_matrices(sp, latent, &codec.pool, &codec.unpool);
  }
  gen_param_count_ = store_.tensors.size();

  const int dc = cfg_.disc_channels;
  for (int d = 0; d < 2; ++d) {
    const DomainSpec& sp = spec_[d];
    const std::string dn = d == 0 ? "h" : "r";
    const int p_total = sp.part_count();
    std::vector<GroupedConv1d::Group> c1, c2, c3;
    for (int p = 0; p < p_total; ++p) {
      const PartBlock& blk = sp.parts()[static_cast<size_t>(p)];
      c1.push_back({blk.row, blk.width, dc});
      c2.push_back({p * dc, dc, dc});
      c3.push_back({p * dc, dc, dc});
    }
    disc_begin_[d] = store_.tensors.size();
    Disc& disc = disc_[d];
    disc.c1 = GroupedConv1d("disc_" + dn + ".c1", c1, kernel, 2, cfg_.padding, store_, rng);
    disc.c2 = GroupedConv1d("disc_" + dn + ".c2", c2, kernel, 2, cfg_.padding, store_, rng);
    disc.c3 = GroupedConv1d("disc_" + dn + ".c3", c3, kernel, 2, cfg_.padding, store_, rng);
    const int head_in = p_total * dc;
    Tensor hw({1, head_in});
    const double bound = 1.0 / std::sqrt(static_cast<double>(head_in));
    for (long i = 0; i < hw.numel(); ++i) hw.data()[i] = (2.0 * rng.uniform() - 1.0) * bound;
    disc.head_w = store_.add("disc_" + dn + ".head.w", std::move(hw));
    disc.head_b = store_.add("disc_" + dn + ".head.b", Tensor({1}));
    disc_count_[d] = store_.tensors.size() - disc_begin_[d];
  }
}

void RetargetModel::set_stats(Domain d, DomainStats stats) {
  const size_t rows = static_cast<size_t>(spec(d).feature_rows());
  if (stats.mean.size() != rows || stats.stdev.size() != rows)
    fail(ErrKind::ShapeMismatch, "stats cover " + std::to_string(stats.mean.size()) +
                                     " channels, domain has " + std::to_string(rows));
  for (double& s : stats.stdev) s = std::max(s, 1e-6);
  stats_[idx(d)] = std::move(stats);
}

int RetargetModel::latent_rows() const { return spec_[0].part_count() * cfg_.latent; }

void RetargetModel::check_window(Domain d, const Tensor& w, bool require_min_len) const {
  if (w.rank() != 2 || w.dim(0) != spec(d).feature_rows())
    fail(ErrKind::ShapeMismatch, "window " + shape_name(w.shape()) + " does not match the " +
                                     domain_name(d) + " feature width " +
                                     std::to_string(spec(d).feature_rows()));
  if (require_min_len && (w.dim(1) < 8 || w.dim(1) % 2 != 0))
    fail(ErrKind::ShapeMismatch,
         "window length must be even and >= 8, got " + std::to_string(w.dim(1)));
}

Tensor RetargetModel::encode(Domain d, const Tensor& window) const {
  check_window(d, window, true);
  const Codec& codec = codec_[idx(d)];
  Tensor h = leaky_relu(codec.enc1.forward(window), kLeakySlope);
  h = matmul(codec.pool, h);
  h = leaky_relu(codec.enc2.forward(h), kLeakySlope);
  return h;
}

Tensor RetargetModel::decode(Domain d, const Tensor& latent) const {
  if (latent.rank() != 2 || latent.dim(0) != latent_rows())
    fail(ErrKind::ShapeMismatch, "latent " + shape_name(latent.shape()) + " does not match [" +
                                     std::to_string(latent_rows()) + ", T/2]");
  const Codec& codec = codec_[idx(d)];
  const DomainSpec& sp = spec(d);
  Tensor h = matmul(codec.unpool, latent);
  h = leaky_relu(codec.dec1.forward(h), kLeakySlope);
  h = upsample1d(h, 2);
  h = codec.dec2.forward(h);
  h = normalize_l2_spans(h, sp.quat_spans());
  // Quaternion rows pass through; translation rows leave normalized space.
  const DomainStats& st = stats_[idx(d)];
  std::vector<double> scale(static_cast<size_t>(sp.feature_rows()), 1.0);
  std::vector<double> shift(static_cast<size_t>(sp.feature_rows()), 0.0);
  for (int r = sp.translation_row(); r < sp.translation_row() + 3; ++r) {
    scale[static_cast<size_t>(r)] = st.stdev[static_cast<size_t>(r)];
    shift[static_cast<size_t>(r)] = st.mean[static_cast<size_t>(r)];
  }
  return channel_affine(h, scale, shift);
}

Tensor RetargetModel::discriminate(Domain d, const Tensor& window) const {
  check_window(d, window, false);
  const Disc& disc = disc_[idx(d)];
  Tensor h = normalize_features(window, stats_[idx(d)]);
  h = leaky_relu(disc.c1.forward(h), kLeakySlope);
  h = leaky_relu(disc.c2.forward(h), kLeakySlope);
  h = leaky_relu(disc.c3.forward(h), kLeakySlope);
  const int t_len = h.dim(1);
  Tensor ones = Tensor::full({t_len}, 1.0 / t_len);
  h = matmul(h, ones);  // temporal mean -> [C]
  Tensor score = bias_add(matmul(disc.head_w, h), disc.head_b);
  return reshape(score, {});
}

Tensor RetargetModel::retarget_window(Domain from, const Tensor& window) const {
  const Domain to = other_domain(from);
  if (identity_double_) {
    // The pass-through double has no architectural length floor, so only the
    // shape is validated; this keeps identity retargets exact at any length.
    check_window(from, window, false);
    if (spec(from).feature_rows() != spec(to).feature_rows())
      fail(ErrKind::ShapeMismatch, "identity test-double needs matching feature widths");
    return reshape(window, window.shape());
  }
  check_window(from, window, true);
  Tensor x = normalize_features(window, stats_[idx(from)]);
  Tensor y = decode(to, encode(from, x));
  const double ratio = spec(to).height() / spec(from).height();
  const DomainSpec& sp = spec(to);
  std::vector<double> scale(static_cast<size_t>(sp.feature_rows()), 1.0);
  std::vector<double> shift(static_cast<size_t>(sp.feature_rows()), 0.0);
  for (int r = sp.translation_row(); r < sp.translation_row() + 3; ++r)
    scale[static_cast<size_t>(r)] = ratio;
  return channel_affine(y, scale, shift);
}

Tensor RetargetModel::cycle_window(Domain home, const Tensor& window) const {
  return retarget_window(other_domain(home), retarget_window(home, window));
}

std::vector<Tensor> RetargetModel::generator_params() const {
  return {store_.tensors.begin(), store_.tensors.begin() + static_cast<long>(gen_param_count_)};
}

std::vector<Tensor> RetargetModel::discriminator_params(Domain d) const {
  const size_t b = disc_begin_[idx(d)];
  return {store_.tensors.begin() + static_cast<long>(b),
          store_.tensors.begin() + static_cast<long>(b + disc_count_[idx(d)])};
}

}  // namespace nmrt
