#include "ubtrack/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ubtrack/rng.hpp"

namespace ubtrack {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Atomic write: temp file in the same directory, then rename.
void write_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp);
    out << contents;
    if (!out) throw DataError("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw DataError("rename failed: " + path);
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

double parse_double(const std::string& s, int line_no, const std::string& path) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParseError(path + ":" + std::to_string(line_no) +
                     ": not a number: '" + s + "'");
  }
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  auto e = s.find_last_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

}  // namespace

SkeletonRecording load_skeleton_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open skeleton file: " + path);
  SkeletonRecording rec;
  std::map<int, SkeletonFrame> frames;
  std::map<int, int> joints_seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      auto eq = t.find("fps=");
      if (eq != std::string::npos) {
        rec.fps = parse_double(trim(t.substr(eq + 4)), line_no, path);
      }
      continue;
    }
    auto fields = split_csv(t);
    if (fields.size() != 5) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected 5 fields (frame,joint,x,y,z)");
    }
    if (trim(fields[0]) == "frame") continue;  // header
    int frame = static_cast<int>(parse_double(trim(fields[0]), line_no, path));
    std::string jname = trim(fields[1]);
    int jidx = body_joint_index(jname);
    if (jidx < 0) {
      throw MissingJoint(path + ":" + std::to_string(line_no) +
                         ": unknown joint '" + jname + "'");
    }
    Joint3D j;
    j.x = parse_double(trim(fields[2]), line_no, path);
    j.y = parse_double(trim(fields[3]), line_no, path);
    j.z = parse_double(trim(fields[4]), line_no, path);
    frames[frame].joints[static_cast<std::size_t>(jidx)] = j;
    joints_seen[frame] |= 1 << jidx;
  }
  const int full = (1 << kNumBodyJoints) - 1;
  for (const auto& [frame, mask] : joints_seen) {
    if (mask != full) {
      for (std::size_t i = 0; i < kNumBodyJoints; ++i) {
        if (!(mask & (1 << i))) {
          throw MissingJoint(path + ": frame " + std::to_string(frame) +
                             " missing joint '" + kBodyJointNames[i] + "'");
        }
      }
    }
  }
  for (auto& [frame, sf] : frames) rec.frames.push_back(sf);
  if (rec.frames.empty()) throw ParseError(path + ": no frames");
  return rec;
}

void save_skeleton_csv(const SkeletonRecording& rec, const std::string& path) {
  std::ostringstream out;
  out << "# fps=" << fmt17(rec.fps) << "\n";
  out << "frame,joint,x,y,z\n";
  for (std::size_t f = 0; f < rec.frames.size(); ++f) {
    for (std::size_t j = 0; j < kNumBodyJoints; ++j) {
      const Joint3D& p = rec.frames[f].joints[j];
      out << f << ',' << kBodyJointNames[j] << ',' << fmt17(p.x) << ','
          << fmt17(p.y) << ',' << fmt17(p.z) << "\n";
    }
  }
  write_atomic(path, out.str());
}

MeasurementSequence load_measurements_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open measurement file: " + path);
  MeasurementSequence seq;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    try {
    if (!have_header) {
      if (!j.contains("schema_version")) {
        throw ParseError(path + ":1: missing header with schema_version");
      }
      if (j["schema_version"].get<int>() != kSchemaVersion) {
        throw ParseError(path + ": unsupported schema_version");
      }
      const auto& cam = j.at("camera");
      seq.intrinsics.fx = cam.at("fx").get<double>();
      seq.intrinsics.fy = cam.at("fy").get<double>();
      seq.intrinsics.cx = cam.at("cx").get<double>();
      seq.intrinsics.cy = cam.at("cy").get<double>();
      seq.camera_pose.tx = cam.value("tx", 0.0);
      seq.camera_pose.ty = cam.value("ty", 0.0);
      seq.camera_pose.tz = cam.value("tz", 0.0);
      seq.camera_pose.alpha = cam.value("alpha", 0.0);
      seq.camera_pose.beta = cam.value("beta", 0.0);
      seq.camera_pose.gamma = cam.value("gamma", 0.0);
      seq.measured_joints = j.at("joints").get<std::vector<std::string>>();
      for (const auto& name : seq.measured_joints) {
        if (body_joint_index(name) < 0) {
          throw MissingJoint(path + ": unknown measured joint '" + name + "'");
        }
      }
      seq.provenance = j.value("provenance", "");
      have_header = true;
      continue;
    }
    MeasurementFrame frame;
    frame.t = j.at("t").get<int>();
    for (const auto& [name, obj] : j.at("joints").items()) {
      int idx = body_joint_index(name);
      if (idx < 0) {
        throw MissingJoint(path + ":" + std::to_string(line_no) +
                           ": unknown joint '" + name + "'");
      }
      auto& jm = frame.joints[static_cast<std::size_t>(idx)];
      jm.u = obj.at("u").get<double>();
      jm.v = obj.at("v").get<double>();
      jm.visible = obj.value("visible", true);
      if (jm.visible && (!std::isfinite(jm.u) || !std::isfinite(jm.v))) {
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": non-finite visible measurement");
      }
    }
    seq.frames.push_back(frame);
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw ParseError(path + ": empty file");
  return seq;
}

void save_measurements_jsonl(const MeasurementSequence& seq, const std::string& path) {
  std::ostringstream out;
  json header;
  header["schema_version"] = kSchemaVersion;
  header["camera"] = {{"fx", seq.intrinsics.fx}, {"fy", seq.intrinsics.fy},
                      {"cx", seq.intrinsics.cx}, {"cy", seq.intrinsics.cy},
                      {"tx", seq.camera_pose.tx}, {"ty", seq.camera_pose.ty},
                      {"tz", seq.camera_pose.tz}, {"alpha", seq.camera_pose.alpha},
                      {"beta", seq.camera_pose.beta}, {"gamma", seq.camera_pose.gamma}};
  header["joints"] = seq.measured_joints;
  if (!seq.provenance.empty()) header["provenance"] = seq.provenance;
  out << header.dump() << "\n";
  for (const auto& frame : seq.frames) {
    json j;
    j["t"] = frame.t;
    json joints = json::object();
    for (const auto& name : seq.measured_joints) {
      const auto& jm = frame.joints[static_cast<std::size_t>(body_joint_index(name))];
      joints[name] = {{"u", jm.u}, {"v", jm.v}, {"visible", jm.visible}};
    }
    j["joints"] = joints;
    out << j.dump() << "\n";
  }
  write_atomic(path, out.str());
}

PriorFile load_prior_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open prior file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (j.value("schema_version", -1) != kSchemaVersion) {
    throw ParseError(path + ": unsupported schema_version");
  }
  const Eigen::Index d = j.at("dimension").get<Eigen::Index>();
  StateLayout layout;
  layout.side = j.at("layout").at("side").get<std::string>() == "right"
                    ? Side::Right
                    : Side::Left;
  layout.joints = j.at("layout").at("joints").get<std::vector<std::string>>();
  if (layout.dim() != d) {
    throw ParseError(path + ": stated dimension " + std::to_string(d) +
                     " does not match joint layout dimension " +
                     std::to_string(layout.dim()));
  }
  auto weights_v = j.at("weights").get<std::vector<double>>();
  auto means_v = j.at("means").get<std::vector<std::vector<double>>>();
  auto covs_v = j.at("covariances").get<std::vector<std::vector<double>>>();
  if (means_v.size() != weights_v.size() || covs_v.size() != weights_v.size()) {
    throw ParseError(path + ": component count mismatch");
  }
  Eigen::VectorXd weights(static_cast<Eigen::Index>(weights_v.size()));
  std::vector<Gaussian> comps;
  for (std::size_t i = 0; i < weights_v.size(); ++i) {
    weights(static_cast<Eigen::Index>(i)) = weights_v[i];
    if (static_cast<Eigen::Index>(means_v[i].size()) != d ||
        static_cast<Eigen::Index>(covs_v[i].size()) != d * d) {
      throw ParseError(path + ": component " + std::to_string(i) + " has wrong size");
    }
    Eigen::VectorXd mu = Eigen::Map<const Eigen::VectorXd>(means_v[i].data(), d);
    Eigen::MatrixXd cov =
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>(covs_v[i].data(), d, d);
    comps.emplace_back(mu, cov);
  }
  return PriorFile{GaussianMixture(weights, std::move(comps)), layout};
}

void save_prior_json(const PriorFile& prior, const std::string& path) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["dimension"] = prior.layout.dim();
  j["layout"] = {{"side", prior.layout.side == Side::Right ? "right" : "left"},
                 {"joints", prior.layout.joints}};
  const auto& m = prior.mixture;
  std::vector<double> weights(m.weights().data(), m.weights().data() + m.size());
  j["weights"] = weights;
  json means = json::array(), covs = json::array();
  for (const auto& g : m.components()) {
    means.push_back(std::vector<double>(g.mean().data(), g.mean().data() + g.dim()));
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = g.cov();
    covs.push_back(std::vector<double>(rm.data(), rm.data() + rm.size()));
  }
  j["means"] = means;
  j["covariances"] = covs;
  write_atomic(path, j.dump(2) + "\n");
}

std::vector<EdgeSegment> load_edges_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge file: " + path);
  std::vector<EdgeSegment> edges;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto fields = split_csv(t);
    if (fields.size() != 4) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected 4 fields (frame,mid_x,mid_y,orientation_radians)");
    }
    if (trim(fields[0]) == "frame") continue;
    EdgeSegment e;
    e.frame = static_cast<int>(parse_double(trim(fields[0]), line_no, path));
    e.x = parse_double(trim(fields[1]), line_no, path);
    e.y = parse_double(trim(fields[2]), line_no, path);
    e.orientation = parse_double(trim(fields[3]), line_no, path);
    e.orientation = std::fmod(e.orientation, M_PI);
    if (e.orientation < 0) e.orientation += M_PI;
    edges.push_back(e);
  }
  return edges;
}

void save_edges_csv(const std::vector<EdgeSegment>& edges, const std::string& path) {
  std::ostringstream out;
  out << "frame,mid_x,mid_y,orientation_radians\n";
  for (const auto& e : edges) {
    out << e.frame << ',' << fmt17(e.x) << ',' << fmt17(e.y) << ','
        << fmt17(e.orientation) << "\n";
  }
  write_atomic(path, out.str());
}

void save_estimates_csv(const std::vector<FullBodyEstimate>& estimates,
                        const std::vector<FrameDiagnostics>& diagnostics,
                        const std::string& path) {
  std::ostringstream out;
  out << "frame";
  for (std::size_t j = 0; j < kNumBodyJoints; ++j) {
    out << ',' << kBodyJointNames[j] << "_u," << kBodyJointNames[j] << "_v,"
        << kBodyJointNames[j] << "_lambda";
  }
  out << ",neff_left,neff_right,resampled,iter_time_seconds\n";
  for (std::size_t f = 0; f < estimates.size(); ++f) {
    out << f;
    for (std::size_t j = 0; j < kNumBodyJoints; ++j) {
      const Eigen::Vector3d& v = estimates[f].joints[j];
      out << ',' << fmt17(v(0)) << ',' << fmt17(v(1)) << ',' << fmt17(v(2));
    }
    if (f < diagnostics.size()) {
      const auto& d = diagnostics[f];
      out << ',' << fmt17(d.neff_left) << ',' << fmt17(d.neff_right) << ','
          << ((d.resampled_left || d.resampled_right) ? 1 : 0) << ','
          << fmt17(d.iter_seconds);
    } else {
      out << ",0,0,0,0";
    }
    out << "\n";
  }
  write_atomic(path, out.str());
}

std::vector<FullBodyEstimate> load_estimates_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open estimates file: " + path);
  std::vector<FullBodyEstimate> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t.rfind("frame", 0) == 0) continue;
    auto fields = split_csv(t);
    if (fields.size() < 1 + 3 * kNumBodyJoints) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": short row");
    }
    FullBodyEstimate est;
    for (std::size_t j = 0; j < kNumBodyJoints; ++j) {
      est.joints[j] = Eigen::Vector3d(
          parse_double(trim(fields[1 + 3 * j]), line_no, path),
          parse_double(trim(fields[2 + 3 * j]), line_no, path),
          parse_double(trim(fields[3 + 3 * j]), line_no, path));
    }
    out.push_back(est);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic skeleton motion

namespace {

// Body proportions in metres; y points down (image convention), z away from
// the camera. The torso sits ~2.5 m in front of the origin.
struct BodyDims {
  Eigen::Vector3d neck{0.0, 0.0, 2.5};
  double head_up = 0.25;
  double shoulder_out = 0.22;
  double upper_arm = 0.30;
  double forearm = 0.28;
};

// Two-link IK: elbow placed so both bone lengths are exact; target clamped
// into the reachable annulus.
void solve_arm(const Eigen::Vector3d& shoulder, Eigen::Vector3d target,
               double l1, double l2, Eigen::Vector3d* elbow,
               Eigen::Vector3d* hand) {
  Eigen::Vector3d delta = target - shoulder;
  double d = delta.norm();
  const double d_min = std::abs(l1 - l2) + 1e-3;
  const double d_max = l1 + l2 - 1e-3;
  if (d < 1e-9) {
    delta = Eigen::Vector3d(0, 1, 0) * d_min;
    d = d_min;
  } else if (d < d_min) {
    delta *= d_min / d;
    d = d_min;
  } else if (d > d_max) {
    delta *= d_max / d;
    d = d_max;
  }
  target = shoulder + delta;
  Eigen::Vector3d u = delta / d;
  const double a = (l1 * l1 - l2 * l2 + d * d) / (2.0 * d);
  const double r = std::sqrt(std::max(0.0, l1 * l1 - a * a));
  // Bend towards the camera (negative z), orthogonalised against the axis.
  Eigen::Vector3d bend = Eigen::Vector3d(0, 0, -1) - u * u.dot(Eigen::Vector3d(0, 0, -1));
  if (bend.norm() < 1e-6) bend = Eigen::Vector3d(1, 0, 0) - u * u.x();
  bend.normalize();
  *elbow = shoulder + a * u + r * bend;
  *hand = target;
}

}  // namespace

SkeletonRecording synth_skeleton(const MotionSpec& spec, int n_frames,
                                 std::uint64_t rng_seed) {
  BodyDims dims;
  SkeletonRecording rec;
  rec.fps = spec.fps;
  rec.frames.resize(static_cast<std::size_t>(n_frames));

  const Eigen::Vector3d neck = dims.neck;
  const Eigen::Vector3d head = neck + Eigen::Vector3d(0, -dims.head_up, 0);
  const Eigen::Vector3d sh_l = neck + Eigen::Vector3d(-dims.shoulder_out, 0, 0);
  const Eigen::Vector3d sh_r = neck + Eigen::Vector3d(dims.shoulder_out, 0, 0);
  const Eigen::Vector3d rest_l = sh_l + Eigen::Vector3d(-0.05, 0.50, -0.08);
  const Eigen::Vector3d rest_r = sh_r + Eigen::Vector3d(0.05, 0.50, -0.08);
  const Eigen::Vector3d chest = neck + Eigen::Vector3d(0, 0.25, -0.25);

  // Smooth random target motion: a few sinusoids with seeded phases.
  auto rng = substream(rng_seed, 0x736b656cULL);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> freq(0.5, 2.0);
  std::array<double, 12> ph{}, fr{};
  for (auto& p : ph) p = phase(rng);
  for (auto& f : fr) f = freq(rng);

  const double period = std::max(spec.period_frames, 1.0);

  for (int t = 0; t < n_frames; ++t) {
    const double s = static_cast<double>(t) / period;  // cycles elapsed
    Eigen::Vector3d target_l = rest_l, target_r = rest_r;

    if (spec.primitive == "neutral") {
      // rest pose
    } else if (spec.primitive == "wave") {
      target_r = sh_r + Eigen::Vector3d(0.25 + 0.15 * std::sin(2.0 * M_PI * 3.0 * s),
                                        -0.35, -0.10);
    } else if (spec.primitive == "reach") {
      const double c = 0.5 - 0.5 * std::cos(2.0 * M_PI * s);
      target_l = rest_l + c * Eigen::Vector3d(0.05, -0.55, -0.35);
      target_r = rest_r + c * Eigen::Vector3d(-0.05, -0.55, -0.35);
    } else if (spec.primitive == "crossed") {
      target_l = sh_r + Eigen::Vector3d(0.12, 0.35, -0.18);
      target_r = sh_l + Eigen::Vector3d(-0.12, 0.35, -0.18);
    } else if (spec.primitive == "clap") {
      const double c = 0.5 - 0.5 * std::cos(2.0 * M_PI * s);  // 1 at apex
      target_l = rest_l + c * (chest - rest_l);
      target_r = rest_r + c * (chest - rest_r);
    } else {  // random
      auto wob = [&](int base, double amp) {
        return amp * std::sin(2.0 * M_PI * fr[base] * s + ph[base]);
      };
      target_l = rest_l + Eigen::Vector3d(wob(0, 0.15), wob(1, 0.25), wob(2, 0.15));
      target_r = rest_r + Eigen::Vector3d(wob(3, 0.15), wob(4, 0.25), wob(5, 0.15));
    }

    SkeletonFrame& f = rec.frames[static_cast<std::size_t>(t)];
    f.joints[static_cast<std::size_t>(BodyJoint::Head)] = {head.x(), head.y(), head.z()};
    f.joints[static_cast<std::size_t>(BodyJoint::Neck)] = {neck.x(), neck.y(), neck.z()};
    f.joints[static_cast<std::size_t>(BodyJoint::ShoulderL)] = {sh_l.x(), sh_l.y(), sh_l.z()};
    f.joints[static_cast<std::size_t>(BodyJoint::ShoulderR)] = {sh_r.x(), sh_r.y(), sh_r.z()};
    Eigen::Vector3d elbow, hand;
    solve_arm(sh_l, target_l, dims.upper_arm, dims.forearm, &elbow, &hand);
    f.joints[static_cast<std::size_t>(BodyJoint::ElbowL)] = {elbow.x(), elbow.y(), elbow.z()};
    f.joints[static_cast<std::size_t>(BodyJoint::HandL)] = {hand.x(), hand.y(), hand.z()};
    solve_arm(sh_r, target_r, dims.upper_arm, dims.forearm, &elbow, &hand);
    f.joints[static_cast<std::size_t>(BodyJoint::ElbowR)] = {elbow.x(), elbow.y(), elbow.z()};
    f.joints[static_cast<std::size_t>(BodyJoint::HandR)] = {hand.x(), hand.y(), hand.z()};
  }
  return rec;
}

std::vector<std::string> default_measured_joints() {
  return {"head", "neck", "hand_l", "hand_r"};
}

MeasurementSequence make_measurements(const SkeletonRecording& rec,
                                      const CameraIntrinsics& intr,
                                      const CameraPose& pose,
                                      const std::vector<std::string>& subset,
                                      std::uint64_t rng_seed) {
  (void)rng_seed;  // deterministic; corruption is a separate pass
  MeasurementSequence seq;
  seq.intrinsics = intr;
  seq.camera_pose = pose;
  seq.measured_joints = subset.empty() ? default_measured_joints() : subset;
  seq.provenance = "make_measurements";
  ProjectionMatrix pm = build_projection(intr, pose);
  for (std::size_t f = 0; f < rec.frames.size(); ++f) {
    MeasurementFrame frame;
    frame.t = static_cast<int>(f);
    for (const auto& name : seq.measured_joints) {
      int idx = body_joint_index(name);
      if (idx < 0) throw MissingJoint("make_measurements: unknown joint " + name);
      JointImage ji;
      try {
        ji = project(pm, rec.frames[f].joints[static_cast<std::size_t>(idx)]);
      } catch (const DegenerateProjection&) {
        throw DegenerateProjection("make_measurements: degenerate projection at frame " +
                                   std::to_string(f));
      }
      auto& jm = frame.joints[static_cast<std::size_t>(idx)];
      jm.u = ji.u_over_lambda;
      jm.v = ji.v_over_lambda;
      jm.visible = true;
    }
    seq.frames.push_back(frame);
  }
  return seq;
}

JointTrack2D project_recording(const SkeletonRecording& rec,
                               const ProjectionMatrix& pm) {
  JointTrack2D out(rec.frames.size());
  for (std::size_t f = 0; f < rec.frames.size(); ++f) {
    for (std::size_t j = 0; j < kNumBodyJoints; ++j) {
      JointImage ji = project(pm, rec.frames[f].joints[j]);
      out[f][j] = Eigen::Vector2d(ji.u_over_lambda, ji.v_over_lambda);
    }
  }
  return out;
}

JointTrack2D estimates_to_track2d(const std::vector<FullBodyEstimate>& est) {
  JointTrack2D out(est.size());
  for (std::size_t f = 0; f < est.size(); ++f) {
    for (std::size_t j = 0; j < kNumBodyJoints; ++j) {
      out[f][j] = est[f].joints[j].head<2>();
    }
  }
  return out;
}

}  // namespace ubtrack
