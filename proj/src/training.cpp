#include "nmrt/training.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "nmrt/adam.hpp"
#include "nmrt/checkpoint.hpp"
#include "nmrt/errors.hpp"
#include "nmrt/kinematics.hpp"

namespace nmrt {
namespace {

using nlohmann::json;

PadMode pad_mode_from_name(const std::string& s) {
  if (s == "reflect") return PadMode::Reflect;
  if (s == "zero") return PadMode::Zero;
  fail(ErrKind::SchemaError, "padding must be \"reflect\" or \"zero\", got \"" + s + "\"");
}

const char* pad_mode_name(PadMode m) { return m == PadMode::Reflect ? "reflect" : "zero"; }

double parse_double_value(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail(ErrKind::MalformedNumber, "override " + key + "=" + value + " is not a number");
  }
}

long parse_int_value(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail(ErrKind::MalformedNumber, "override " + key + "=" + value + " is not an integer");
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (window < 8 || window % 2 != 0)
    fail(ErrKind::ConfigInvalid, "window must be even and >= 8, got " + std::to_string(window));
  if (stride < 1) fail(ErrKind::ConfigInvalid, "stride must be >= 1");
  if (batch < 1) fail(ErrKind::ConfigInvalid, "batch must be >= 1");
  if (epochs < 1) fail(ErrKind::ConfigInvalid, "epochs must be >= 1");
  if (lr_gen <= 0.0 || lr_disc <= 0.0) fail(ErrKind::ConfigInvalid, "learning rates must be > 0");
  if (w_adv < 0.0 || w_cycle < 0.0 || w_fk < 0.0 || w_latent < 0.0)
    fail(ErrKind::ConfigInvalid, "loss weights must be >= 0");
  if (checkpoint_interval < 0) fail(ErrKind::ConfigInvalid, "checkpoint_interval must be >= 0");
  if (max_steps < 0) fail(ErrKind::ConfigInvalid, "max_steps must be >= 0");
}

TrainConfig train_config_from_json_text(const std::string& text) {
  json js;
  try {
    js = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrKind::SchemaError, std::string("train config is not valid JSON: ") + e.what());
  }
  if (!js.is_object()) fail(ErrKind::SchemaError, "train config must be a JSON object");
  TrainConfig cfg;
  try {
    for (const auto& [key, value] : js.items()) {
      if (key == "seed") cfg.seed = value.get<unsigned long long>();
      else if (key == "window") cfg.window = value.get<int>();
      else if (key == "stride") cfg.stride = value.get<int>();
      else if (key == "batch") cfg.batch = value.get<int>();
      else if (key == "epochs") cfg.epochs = value.get<int>();
      else if (key == "lr_gen") cfg.lr_gen = value.get<double>();
      else if (key == "lr_disc") cfg.lr_disc = value.get<double>();
      else if (key == "w_adv") cfg.w_adv = value.get<double>();
      else if (key == "w_cycle") cfg.w_cycle = value.get<double>();
      else if (key == "w_fk") cfg.w_fk = value.get<double>();
      else if (key == "w_latent") cfg.w_latent = value.get<double>();
      else if (key == "padding") cfg.padding = pad_mode_from_name(value.get<std::string>());
      else if (key == "checkpoint_interval") cfg.checkpoint_interval = value.get<int>();
      else if (key == "max_steps") cfg.max_steps = value.get<int>();
      else fail(ErrKind::SchemaError, "unknown train config key \"" + key + "\"");
    }
  } catch (const json::exception& e) {
    fail(ErrKind::SchemaError, std::string("train config field has wrong type: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrKind::IoError, "cannot open train config " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return train_config_from_json_text(text);
}

std::string train_config_to_json_text(const TrainConfig& cfg) {
  json js{{"seed", cfg.seed},
          {"window", cfg.window},
          {"stride", cfg.stride},
          {"batch", cfg.batch},
          {"epochs", cfg.epochs},
          {"lr_gen", cfg.lr_gen},
          {"lr_disc", cfg.lr_disc},
          {"w_adv", cfg.w_adv},
          {"w_cycle", cfg.w_cycle},
          {"w_fk", cfg.w_fk},
          {"w_latent", cfg.w_latent},
          {"padding", pad_mode_name(cfg.padding)},
          {"checkpoint_interval", cfg.checkpoint_interval},
          {"max_steps", cfg.max_steps}};
  return js.dump(2);
}

void apply_config_override(TrainConfig* cfg, const std::string& key, const std::string& value) {
  if (key == "seed") cfg->seed = static_cast<unsigned long long>(parse_int_value(key, value));
  else if (key == "window" || key == "window.T") cfg->window = static_cast<int>(parse_int_value(key, value));
  else if (key == "stride") cfg->stride = static_cast<int>(parse_int_value(key, value));
  else if (key == "batch") cfg->batch = static_cast<int>(parse_int_value(key, value));
  else if (key == "epochs") cfg->epochs = static_cast<int>(parse_int_value(key, value));
  else if (key == "lr_gen") cfg->lr_gen = parse_double_value(key, value);
  else if (key == "lr_disc") cfg->lr_disc = parse_double_value(key, value);
  else if (key == "w_adv") cfg->w_adv = parse_double_value(key, value);
  else if (key == "w_cycle") cfg->w_cycle = parse_double_value(key, value);
  else if (key == "w_fk") cfg->w_fk = parse_double_value(key, value);
  else if (key == "w_latent") cfg->w_latent = parse_double_value(key, value);
  else if (key == "padding") cfg->padding = pad_mode_from_name(value);
  else if (key == "checkpoint_interval") cfg->checkpoint_interval = static_cast<int>(parse_int_value(key, value));
  else if (key == "max_steps") cfg->max_steps = static_cast<int>(parse_int_value(key, value));
  else fail(ErrKind::SchemaError, "unknown config override key \"" + key + "\"");
}

std::vector<WindowRef> make_windows(const std::vector<MotionClip>& clips, int T, int stride,
                                    std::vector<std::string>* warnings) {
  if (T < 1 || stride < 1) fail(ErrKind::ConfigInvalid, "window length and stride must be >= 1");
  std::vector<WindowRef> out;
  for (size_t c = 0; c < clips.size(); ++c) {
    const int n = static_cast<int>(clips[c].frames.size());
    if (n < T) {
      if (warnings)
        warnings->push_back("clip \"" + clips[c].name + "\" has " + std::to_string(n) +
                            " frames, shorter than the " + std::to_string(T) +
                            "-frame window; skipped");
      continue;
    }
    for (int s = 0; s + T <= n; s += stride) out.push_back({static_cast<int>(c), s});
  }
  return out;
}

DatasetView build_dataset(const DomainSpec& human, const std::vector<MotionClip>& human_clips,
                          const DomainSpec& robot, const std::vector<MotionClip>& robot_clips,
                          int T, int stride, std::vector<std::string>* warnings) {
  DatasetView view;
  view.windows[0] = make_windows(human_clips, T, stride, warnings);
  view.windows[1] = make_windows(robot_clips, T, stride, warnings);
  view.stats[0] = compute_norm_stats(human, human_clips);
  view.stats[1] = compute_norm_stats(robot, robot_clips);
  return view;
}

namespace {

/// acc starts as a plain zero scalar; adding keeps the graph linear.
Tensor accumulate(const Tensor& acc, const Tensor& v) { return add(acc, v); }

}  // namespace

GenLossTerms generator_loss(const RetargetModel& model, const std::vector<Tensor>& batch_h,
                            const std::vector<Tensor>& batch_r, double w_adv, double w_cycle,
                            double w_fk, double w_latent) {
  if (batch_h.empty() || batch_h.size() != batch_r.size())
    fail(ErrKind::ShapeMismatch, "generator batches must be non-empty and equally sized");
  const int b = static_cast<int>(batch_h.size());
  const DomainSpec& sh = model.spec(Domain::Human);
  const DomainSpec& sr = model.spec(Domain::Robot);
  const std::vector<RowSpan> spans_h = sh.quat_spans();
  const std::vector<RowSpan> spans_r = sr.quat_spans();
  const double jh = static_cast<double>(sh.skeleton().joint_count());
  const double jr = static_cast<double>(sr.skeleton().joint_count());

  Tensor adv_sum = Tensor::scalar(0.0);
  Tensor cyc_sum = Tensor::scalar(0.0);
  Tensor fk_sum = Tensor::scalar(0.0);
  Tensor lat_sum = Tensor::scalar(0.0);
  for (int i = 0; i < b; ++i) {
    const Tensor& xh = batch_h[i];
    const Tensor& xr = batch_r[i];
    const int t = xh.dim(1);

    Tensor xhr = model.retarget_window(Domain::Human, xh);
    Tensor xrh = model.retarget_window(Domain::Robot, xr);
    Tensor cyc_h = model.retarget_window(Domain::Robot, xhr);
    Tensor cyc_r = model.retarget_window(Domain::Human, xrh);

    Tensor a = add(square(add_scalar(model.discriminate(Domain::Robot, xhr), -1.0)),
                   square(add_scalar(model.discriminate(Domain::Human, xrh), -1.0)));
    adv_sum = accumulate(adv_sum, a);

    const double cyc_elems =
        static_cast<double>(sh.feature_rows() + sr.feature_rows()) * static_cast<double>(t);
    Tensor c = add(sign_folded_sqdiff(cyc_h, xh, spans_h), sign_folded_sqdiff(cyc_r, xr, spans_r));
    cyc_sum = accumulate(cyc_sum, mul_scalar(c, 1.0 / cyc_elems));

    // FK targets never touch the tape: the source windows carry no gradient.
    Tensor pos_h = fk_positions(sh.skeleton(), sh.pose_rows_from_features(cyc_h), true);
    Tensor ref_h = fk_positions(sh.skeleton(), sh.pose_rows_from_features(xh), true);
    Tensor pos_r = fk_positions(sr.skeleton(), sr.pose_rows_from_features(cyc_r), true);
    Tensor ref_r = fk_positions(sr.skeleton(), sr.pose_rows_from_features(xr), true);
    Tensor f = add(mul_scalar(sum_all(square(sub(pos_h, ref_h))), 1.0 / (jh * t)),
                   mul_scalar(sum_all(square(sub(pos_r, ref_r))), 1.0 / (jr * t)));
    fk_sum = accumulate(fk_sum, f);

    Tensor e_src = model.encode(Domain::Human, normalize_features(xh, model.stats(Domain::Human)));
    Tensor e_cyc =
        model.encode(Domain::Human, normalize_features(cyc_h, model.stats(Domain::Human)));
    Tensor l = mul_scalar(sum_all(square(sub(e_src, e_cyc))),
                          1.0 / static_cast<double>(e_src.numel()));
    lat_sum = accumulate(lat_sum, l);
  }

  GenLossTerms terms;
  Tensor adv = mul_scalar(adv_sum, w_adv / b);
  Tensor cyc = mul_scalar(cyc_sum, w_cycle / b);
  Tensor fk = mul_scalar(fk_sum, w_fk / b);
  Tensor lat = mul_scalar(lat_sum, w_latent / b);
  terms.total = add(add(adv, cyc), add(fk, lat));
  terms.adv = adv.value();
  terms.cycle = cyc.value();
  terms.fk = fk.value();
  terms.latent = lat.value();
  return terms;
}

Tensor discriminator_loss(const RetargetModel& model, Domain d, const std::vector<Tensor>& real,
                          const std::vector<Tensor>& fake) {
  if (real.empty() || fake.empty())
    fail(ErrKind::ShapeMismatch, "discriminator batches must be non-empty");
  Tensor rsum = Tensor::scalar(0.0);
  for (const Tensor& x : real)
    rsum = accumulate(rsum, square(add_scalar(model.discriminate(d, x), -1.0)));
  Tensor fsum = Tensor::scalar(0.0);
  for (const Tensor& x : fake) fsum = accumulate(fsum, square(model.discriminate(d, x)));
  return add(mul_scalar(rsum, 1.0 / static_cast<double>(real.size())),
             mul_scalar(fsum, 1.0 / static_cast<double>(fake.size())));
}

std::string format_double(double v) {
  char buf[40];
  const std::to_chars_result res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

RetargetModel train(const TrainConfig& config, const DomainSpec& human,
                    const std::vector<MotionClip>& human_clips, const DomainSpec& robot,
                    const std::vector<MotionClip>& robot_clips, const std::string& out_dir,
                    TrainResult* result, std::ostream* log) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrKind::DiskWrite, "cannot create output directory " + out_dir);

  Rng rng(config.seed);
  ModelConfig mcfg;
  mcfg.padding = config.padding;
  RetargetModel model(human, robot, mcfg, rng);

  std::vector<std::string> warnings;
  DatasetView data = build_dataset(model.spec(Domain::Human), human_clips,
                                   model.spec(Domain::Robot), robot_clips, config.window,
                                   config.stride, &warnings);
  if (log)
    for (const std::string& w : warnings) *log << "warning: " << w << "\n";
  const size_t n_h = data.windows[0].size();
  const size_t n_r = data.windows[1].size();
  if (n_h == 0 || n_r == 0)
    fail(ErrKind::EmptyCorpus, "after windowing: " + std::to_string(n_h) + " human / " +
                                   std::to_string(n_r) + " robot windows");
  model.set_stats(Domain::Human, data.stats[0]);
  model.set_stats(Domain::Robot, data.stats[1]);

  const std::string losses_path = out_dir + "/losses.csv";
  std::ofstream csv(losses_path, std::ios::trunc);
  if (!csv) fail(ErrKind::DiskWrite, "cannot open " + losses_path);
  csv << "step,d_h,d_r,g_total,g_adv,g_cycle,g_fk,g_latent\n";

  Adam opt_g({config.lr_gen});
  Adam opt_dh({config.lr_disc});
  Adam opt_dr({config.lr_disc});
  std::vector<Tensor> gen_params = model.generator_params();
  std::vector<Tensor> dh_params = model.discriminator_params(Domain::Human);
  std::vector<Tensor> dr_params = model.discriminator_params(Domain::Robot);

  std::vector<size_t> order_h(n_h), order_r(n_r);
  const size_t steps_per_epoch = (std::max(n_h, n_r) + config.batch - 1) / config.batch;
  int step = 0;
  bool stop = false;
  for (int epoch = 0; epoch < config.epochs && !stop; ++epoch) {
    for (size_t i = 0; i < n_h; ++i) order_h[i] = i;
    for (size_t i = 0; i < n_r; ++i) order_r[i] = i;
    rng.shuffle(order_h);
    rng.shuffle(order_r);

    for (size_t s = 0; s < steps_per_epoch && !stop; ++s) {
      std::vector<Tensor> batch_h, batch_r;
      batch_h.reserve(static_cast<size_t>(config.batch));
      batch_r.reserve(static_cast<size_t>(config.batch));
      for (int k = 0; k < config.batch; ++k) {
        const WindowRef wh = data.windows[0][order_h[(s * config.batch + k) % n_h]];
        const WindowRef wr = data.windows[1][order_r[(s * config.batch + k) % n_r]];
        batch_h.push_back(model.spec(Domain::Human)
                              .features_from_frames(human_clips[static_cast<size_t>(wh.clip)],
                                                    wh.start, config.window));
        batch_r.push_back(model.spec(Domain::Robot)
                              .features_from_frames(robot_clips[static_cast<size_t>(wr.clip)],
                                                    wr.start, config.window));
      }

      // Fakes for the discriminators, built outside any tape: detached.
      std::vector<Tensor> fake_h, fake_r;
      fake_h.reserve(batch_r.size());
      fake_r.reserve(batch_h.size());
      for (const Tensor& xr : batch_r) fake_h.push_back(model.retarget_window(Domain::Robot, xr));
      for (const Tensor& xh : batch_h) fake_r.push_back(model.retarget_window(Domain::Human, xh));

      double d_h, d_r;
      {
        Tape tape;
        TapeScope scope(&tape);
        Tensor loss = discriminator_loss(model, Domain::Human, batch_h, fake_h);
        d_h = loss.value();
        tape.backward(loss);
        opt_dh.step(dh_params, tape);
      }
      {
        Tape tape;
        TapeScope scope(&tape);
        Tensor loss = discriminator_loss(model, Domain::Robot, batch_r, fake_r);
        d_r = loss.value();
        tape.backward(loss);
        opt_dr.step(dr_params, tape);
      }
      GenLossTerms g;
      {
        Tape tape;
        TapeScope scope(&tape);
        g = generator_loss(model, batch_h, batch_r, config.w_adv, config.w_cycle, config.w_fk,
                           config.w_latent);
        tape.backward(g.total);
        opt_g.step(gen_params, tape);
      }

      ++step;
      csv << step << ',' << format_double(d_h) << ',' << format_double(d_r) << ','
          << format_double(g.total.value()) << ',' << format_double(g.adv) << ','
          << format_double(g.cycle) << ',' << format_double(g.fk) << ','
          << format_double(g.latent) << '\n';
      if (!csv) fail(ErrKind::DiskWrite, "failed writing " + losses_path);

      if (config.checkpoint_interval > 0 && step % config.checkpoint_interval == 0)
        save_checkpoint(model, out_dir + "/ckpt_" + std::to_string(step) + ".nmrt");
      if (log && step % 100 == 0)
        *log << "step " << step << "  d_h " << d_h << "  d_r " << d_r << "  g "
             << g.total.value() << "\n";
      if (config.max_steps > 0 && step >= config.max_steps) stop = true;
    }
  }
  csv.flush();
  if (!csv) fail(ErrKind::DiskWrite, "failed writing " + losses_path);

  const std::string final_path = out_dir + "/final.nmrt";
  save_checkpoint(model, final_path);
  if (result) {
    result->steps = step;
    result->losses_path = losses_path;
    result->checkpoint_path = final_path;
  }
  return model;
}

}  // namespace nmrt
