#include "nmrt/bvh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nmrt/errors.hpp"

namespace nmrt {

void BvhDocument::validate() const {
  skeleton.validate();
  int declared = 0;
  for (const Joint& j : skeleton.joints) declared += static_cast<int>(j.channels.size());
  if (declared != channel_count())
    fail(ErrKind::ChannelMismatch, "channel table does not match joint declarations");
  for (const std::vector<double>& row : frames) {
    if (static_cast<int>(row.size()) != channel_count())
      fail(ErrKind::ChannelMismatch, "frame row width does not match declared channels");
  }
  if (!(frame_time > 0.0)) fail(ErrKind::ChannelMismatch, "frame time must be positive");
}

namespace {

bool valid_utf8(const std::string& s) {
  size_t i = 0, n = s.size();
  while (i < n) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (c == 0) return false;
    size_t extra;
    if (c < 0x80) extra = 0;
    else if ((c & 0xE0) == 0xC0) extra = 1;
    else if ((c & 0xF0) == 0xE0) extra = 2;
    else if ((c & 0xF8) == 0xF0) extra = 3;
    else return false;
    if (i + extra >= n) return false;
    for (size_t k = 1; k <= extra; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
    }
    i += extra + 1;
  }
  return true;
}

struct Token {
  std::string text;
  int line;
};

std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> out;
  int line = 1;
  size_t i = 0, n = text.size();
  while (i < n) {
    char c = text[i];
    if (c == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f') {
      ++i;
      continue;
    }
    if (c == '{' || c == '}') {
      out.push_back({std::string(1, c), line});
      ++i;
      continue;
    }
    size_t start = i;
    while (i < n && text[i] != '\n' && text[i] != ' ' && text[i] != '\t' && text[i] != '\r' &&
           text[i] != '{' && text[i] != '}')
      ++i;
    out.push_back({text.substr(start, i - start), line});
  }
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  BvhDocument parse() {
    expect_keyword("HIERARCHY", ErrKind::MissingSection, "no HIERARCHY section");
    expect_keyword("ROOT", ErrKind::MissingSection, "no ROOT joint");
    doc_.skeleton.root_index = 0;
    parse_joint(-1, next_or_fail("joint name").text);
    if (brace_depth_ != 0) fail(ErrKind::UnbalancedBraces, "hierarchy braces left open");
    expect_keyword("MOTION", ErrKind::MissingSection, "no MOTION section");
    parse_motion();
    doc_.validate();
    return std::move(doc_);
  }

 private:
  const Token* peek() const { return pos_ < tokens_.size() ? &tokens_[pos_] : nullptr; }

  Token next_or_fail(const std::string& what) {
    if (pos_ >= tokens_.size())
      fail(ErrKind::MissingSection, "unexpected end of file while reading " + what);
    return tokens_[pos_++];
  }

  void expect_keyword(const std::string& kw, ErrKind kind, const std::string& msg) {
    const Token* t = peek();
    if (!t || t->text != kw) fail(kind, msg);
    ++pos_;
  }

  void open_brace() {
    Token t = next_or_fail("'{'");
    if (t.text != "{")
      fail(ErrKind::UnbalancedBraces, "expected '{' at line " + std::to_string(t.line));
    ++brace_depth_;
  }

  void close_brace() {
    Token t = next_or_fail("'}'");
    if (t.text != "}")
      fail(ErrKind::UnbalancedBraces, "expected '}' at line " + std::to_string(t.line));
    --brace_depth_;
  }

  double parse_number(const Token& t) {
    double v = 0.0;
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || p != last)
      fail(ErrKind::MalformedNumber,
           "'" + t.text + "' at line " + std::to_string(t.line) + " is not a number");
    return v;
  }

  Vec3 parse_offset() {
    expect_keyword("OFFSET", ErrKind::MissingSection, "joint block missing OFFSET");
    double x = parse_number(next_or_fail("offset x"));
    double y = parse_number(next_or_fail("offset y"));
    double z = parse_number(next_or_fail("offset z"));
    return {x, y, z};
  }

  std::string unique_name(std::string base) {
    std::string name = base;
    int suffix = 2;
    while (doc_.skeleton.find_joint(name) >= 0) name = base + "_" + std::to_string(suffix++);
    return name;
  }

  void parse_joint(int parent, const std::string& name) {
    int index = static_cast<int>(doc_.skeleton.joints.size());
    Joint joint;
    joint.name = unique_name(name);
    joint.parent = parent;
    doc_.skeleton.joints.push_back(joint);

    open_brace();
    doc_.skeleton.joints[static_cast<size_t>(index)].offset = parse_offset();

    while (true) {
      Token t = next_or_fail("joint body");
      if (t.text == "}") {
        --brace_depth_;
        break;
      }
      if (t.text == "CHANNELS") {
        parse_channels(index, t.line);
      } else if (t.text == "JOINT") {
        parse_joint(index, next_or_fail("joint name").text);
      } else if (t.text == "End") {
        Token site = next_or_fail("'Site'");
        if (site.text != "Site")
          fail(ErrKind::MissingSection, "expected 'Site' after 'End' at line " + std::to_string(site.line));
        parse_end_site(index);
      } else if (t.text == "{") {
        fail(ErrKind::UnbalancedBraces, "unexpected '{' at line " + std::to_string(t.line));
      } else {
        fail(ErrKind::MissingSection,
             "unexpected token '" + t.text + "' at line " + std::to_string(t.line));
      }
    }

    Joint& j = doc_.skeleton.joints[static_cast<size_t>(index)];
    int nrot = 0;
    for (ChannelKind c : j.channels) nrot += is_rotation_channel(c) ? 1 : 0;
    j.kind = nrot > 0 ? JointKind::Actuated : JointKind::Fixed;
  }

  void parse_end_site(int parent) {
    int index = static_cast<int>(doc_.skeleton.joints.size());
    Joint joint;
    joint.name = unique_name(doc_.skeleton.joints[static_cast<size_t>(parent)].name + "_end");
    joint.parent = parent;
    joint.kind = JointKind::EndEffector;
    joint.end_site = true;
    doc_.skeleton.joints.push_back(joint);
    open_brace();
    doc_.skeleton.joints[static_cast<size_t>(index)].offset = parse_offset();
    close_brace();
  }

  void parse_channels(int joint_index, int line) {
    Token count_tok = next_or_fail("channel count");
    double count_val = parse_number(count_tok);
    int count = static_cast<int>(count_val);
    if (count < 0 || count > 6 || count != count_val)
      fail(ErrKind::ChannelMismatch, "bad channel count at line " + std::to_string(line));
    Joint& j = doc_.skeleton.joints[static_cast<size_t>(joint_index)];
    std::vector<Axis> rot_axes;
    for (int i = 0; i < count; ++i) {
      Token t = next_or_fail("channel name");
      ChannelKind kind;
      if (t.text == "Xposition") kind = ChannelKind::Xposition;
      else if (t.text == "Yposition") kind = ChannelKind::Yposition;
      else if (t.text == "Zposition") kind = ChannelKind::Zposition;
      else if (t.text == "Xrotation") kind = ChannelKind::Xrotation;
      else if (t.text == "Yrotation") kind = ChannelKind::Yrotation;
      else if (t.text == "Zrotation") kind = ChannelKind::Zrotation;
      else
        fail(ErrKind::ChannelMismatch,
             "unknown channel '" + t.text + "' at line " + std::to_string(t.line));
      j.channels.push_back(kind);
      doc_.channels.push_back({joint_index, kind});
      if (kind == ChannelKind::Xrotation) rot_axes.push_back(Axis::X);
      if (kind == ChannelKind::Yrotation) rot_axes.push_back(Axis::Y);
      if (kind == ChannelKind::Zrotation) rot_axes.push_back(Axis::Z);
    }
    if (!rot_axes.empty() && rot_axes.size() != 3)
      fail(ErrKind::ChannelMismatch, "joint '" + j.name + "' declares " +
                                         std::to_string(rot_axes.size()) +
                                         " rotation channels; expected 0 or 3");
    if (rot_axes.size() == 3) {
      if (rot_axes[0] == rot_axes[1] || rot_axes[0] == rot_axes[2] || rot_axes[1] == rot_axes[2])
        fail(ErrKind::ChannelMismatch, "joint '" + j.name + "' repeats a rotation axis");
      j.rotation_order = AxisTriple{rot_axes[0], rot_axes[1], rot_axes[2]};
    }
  }

  void parse_motion() {
    expect_keyword("Frames:", ErrKind::MissingSection, "MOTION section missing 'Frames:'");
    Token frames_tok = next_or_fail("frame count");
    double frames_val = parse_number(frames_tok);
    long declared_frames = static_cast<long>(frames_val);
    if (declared_frames < 0 || declared_frames != frames_val)
      fail(ErrKind::MalformedNumber, "bad frame count at line " + std::to_string(frames_tok.line));
    expect_keyword("Frame", ErrKind::MissingSection, "MOTION section missing 'Frame Time:'");
    expect_keyword("Time:", ErrKind::MissingSection, "MOTION section missing 'Frame Time:'");
    doc_.frame_time = parse_number(next_or_fail("frame time"));
    if (!(doc_.frame_time > 0.0))
      fail(ErrKind::MalformedNumber, "frame time must be positive");

    int expected = doc_.channel_count();
    // Data rows are line-structured: one frame per line.
    while (pos_ < tokens_.size()) {
      int line = tokens_[pos_].line;
      std::vector<double> row;
      row.reserve(static_cast<size_t>(expected));
      while (pos_ < tokens_.size() && tokens_[pos_].line == line) {
        if (tokens_[pos_].text == "{" || tokens_[pos_].text == "}")
          fail(ErrKind::UnbalancedBraces, "unexpected brace at line " + std::to_string(line));
        row.push_back(parse_number(tokens_[pos_]));
        ++pos_;
      }
      if (static_cast<int>(row.size()) != expected)
        fail(ErrKind::ChannelMismatch, "line " + std::to_string(line) + " has " +
                                           std::to_string(row.size()) + " values but " +
                                           std::to_string(expected) + " channels are declared");
      doc_.frames.push_back(std::move(row));
    }
    if (static_cast<long>(doc_.frames.size()) != declared_frames)
      fail(ErrKind::ChannelMismatch,
           "file declares " + std::to_string(declared_frames) + " frames but contains " +
               std::to_string(doc_.frames.size()));
  }

  std::vector<Token> tokens_;
  size_t pos_ = 0;
  int brace_depth_ = 0;
  BvhDocument doc_;
};

}  // namespace

BvhDocument parse_bvh(const std::string& text) {
  std::string body = text;
  if (body.size() >= 3 && static_cast<unsigned char>(body[0]) == 0xEF &&
      static_cast<unsigned char>(body[1]) == 0xBB && static_cast<unsigned char>(body[2]) == 0xBF)
    body = body.substr(3);  // UTF-8 BOM
  if (!valid_utf8(body)) fail(ErrKind::BadEncoding, "input is not valid UTF-8");
  return Parser(tokenize(body)).parse();
}

BvhDocument parse_bvh_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrKind::IoError, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_bvh(ss.str());
}

namespace {

std::string shortest_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

std::string fixed_double(double v, int precision) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return std::string(buf);
}

void write_joint(std::ostringstream& out, const BvhDocument& doc, int index, int depth) {
  const Joint& j = doc.skeleton.joints[static_cast<size_t>(index)];
  std::string indent(static_cast<size_t>(depth) * 2, ' ');
  if (j.end_site) {
    out << indent << "End Site\n" << indent << "{\n";
    out << indent << "  OFFSET " << shortest_double(j.offset.x) << ' '
        << shortest_double(j.offset.y) << ' ' << shortest_double(j.offset.z) << '\n';
    out << indent << "}\n";
    return;
  }
  out << indent << (j.parent < 0 ? "ROOT " : "JOINT ") << j.name << '\n' << indent << "{\n";
  out << indent << "  OFFSET " << shortest_double(j.offset.x) << ' ' << shortest_double(j.offset.y)
      << ' ' << shortest_double(j.offset.z) << '\n';
  if (!j.channels.empty()) {
    out << indent << "  CHANNELS " << j.channels.size();
    for (ChannelKind c : j.channels) out << ' ' << channel_kind_name(c);
    out << '\n';
  }
  for (size_t c = 0; c < doc.skeleton.joints.size(); ++c) {
    if (doc.skeleton.joints[c].parent == index) write_joint(out, doc, static_cast<int>(c), depth + 1);
  }
  out << indent << "}\n";
}

}  // namespace

std::string write_bvh(const BvhDocument& doc, int precision) {
  doc.validate();
  std::ostringstream out;
  out << "HIERARCHY\n";
  write_joint(out, doc, doc.skeleton.root_index, 0);
  out << "MOTION\n";
  out << "Frames: " << doc.frame_count() << '\n';
  out << "Frame Time: " << shortest_double(doc.frame_time) << '\n';
  for (const std::vector<double>& row : doc.frames) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ' ';
      out << fixed_double(row[i], precision);
    }
    out << '\n';
  }
  return out.str();
}

void write_bvh_file(const BvhDocument& doc, const std::string& path, int precision) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrKind::DiskWrite, "cannot open '" + path + "' for writing");
  out << write_bvh(doc, precision);
  if (!out) fail(ErrKind::DiskWrite, "failed writing '" + path + "'");
}

MotionClip clip_from_document(const BvhDocument& doc, const std::string& name) {
  doc.validate();
  const Skeleton& sk = doc.skeleton;
  MotionClip clip;
  clip.name = name;
  clip.frame_time = doc.frame_time;
  clip.frames.reserve(doc.frames.size());

  for (const std::vector<double>& row : doc.frames) {
    Pose pose;
    pose.rotations.assign(sk.joints.size(), Quat::identity());
    std::vector<std::array<double, 3>> degrees(sk.joints.size(), {0.0, 0.0, 0.0});
    std::vector<int> rot_seen(sk.joints.size(), 0);
    for (size_t c = 0; c < doc.channels.size(); ++c) {
      const ChannelSpec& spec = doc.channels[c];
      double v = row[c];
      size_t ji = static_cast<size_t>(spec.joint_index);
      bool is_root = spec.joint_index == sk.root_index;
      switch (spec.kind) {
        case ChannelKind::Xposition: if (is_root) pose.root_translation.x = v; break;
        case ChannelKind::Yposition: if (is_root) pose.root_translation.y = v; break;
        case ChannelKind::Zposition: if (is_root) pose.root_translation.z = v; break;
        case ChannelKind::Xrotation:
        case ChannelKind::Yrotation:
        case ChannelKind::Zrotation:
          degrees[ji][static_cast<size_t>(rot_seen[ji]++)] = v;
          break;
      }
    }
    for (size_t ji = 0; ji < sk.joints.size(); ++ji) {
      if (sk.joints[ji].rotation_order)
        pose.rotations[ji] = euler_to_quaternion(degrees[ji], *sk.joints[ji].rotation_order);
    }
    clip.frames.push_back(std::move(pose));
  }
  return clip;
}

BvhDocument document_from_clip(const Skeleton& skeleton, const MotionClip& clip) {
  skeleton.validate();
  BvhDocument doc;
  doc.skeleton = skeleton;
  doc.frame_time = clip.frame_time;
  for (size_t ji = 0; ji < skeleton.joints.size(); ++ji) {
    for (ChannelKind c : skeleton.joints[ji].channels)
      doc.channels.push_back({static_cast<int>(ji), c});
  }
  for (const Pose& pose : clip.frames) {
    if (pose.rotations.size() != skeleton.joints.size())
      fail(ErrKind::LengthMismatch, "pose rotation count does not match skeleton");
    std::vector<double> row;
    row.reserve(doc.channels.size());
    std::vector<std::array<double, 3>> degrees(skeleton.joints.size(), {0.0, 0.0, 0.0});
    for (size_t ji = 0; ji < skeleton.joints.size(); ++ji) {
      if (skeleton.joints[ji].rotation_order)
        degrees[ji] =
            quaternion_to_euler(pose.rotations[ji], *skeleton.joints[ji].rotation_order).deg;
    }
    std::vector<int> rot_seen(skeleton.joints.size(), 0);
    for (const ChannelSpec& spec : doc.channels) {
      size_t ji = static_cast<size_t>(spec.joint_index);
      switch (spec.kind) {
        case ChannelKind::Xposition: row.push_back(pose.root_translation.x); break;
        case ChannelKind::Yposition: row.push_back(pose.root_translation.y); break;
        case ChannelKind::Zposition: row.push_back(pose.root_translation.z); break;
        case ChannelKind::Xrotation:
        case ChannelKind::Yrotation:
        case ChannelKind::Zrotation:
          row.push_back(degrees[ji][static_cast<size_t>(rot_seen[ji]++)]);
          break;
      }
    }
    doc.frames.push_back(std::move(row));
  }
  doc.validate();
  return doc;
}

MotionDirResult load_motion_dir(const std::string& path, const Skeleton& expected) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(path)) fail(ErrKind::IoError, "'" + path + "' is not a directory");

  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".bvh")
      files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());

  MotionDirResult result;
  constexpr double kOffsetTolerance = 1e-4;
  for (const std::string& file : files) {
    BvhDocument doc;
    try {
      doc = parse_bvh_file(file);
    } catch (const Error& e) {
      throw Error(e.kind(), file + ": " + e.what());
    }
    std::string why;
    if (!Skeleton::topology_equal(doc.skeleton, expected, &why))
      fail(ErrKind::SkeletonMismatch, file + ": " + why);
    for (size_t ji = 0; ji < expected.joints.size(); ++ji) {
      Vec3 d = doc.skeleton.joints[ji].offset - expected.joints[ji].offset;
      double dev = std::max({std::abs(d.x), std::abs(d.y), std::abs(d.z)});
      if (dev > kOffsetTolerance)
        fail(ErrKind::SkeletonMismatch,
             file + ": joint '" + expected.joints[ji].name + "' offset deviates by " +
                 std::to_string(dev));
      if (dev > 0.0)
        result.warnings.push_back(file + ": joint '" + expected.joints[ji].name +
                                  "' offset deviates by " + std::to_string(dev));
    }
    std::string stem = fs::path(file).stem().string();
    result.clips.push_back(clip_from_document(doc, stem));
  }
  return result;
}

}  // namespace nmrt
