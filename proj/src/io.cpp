#include "spindoe/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace spindoe {

namespace {

using nlohmann::json;

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, std::size_t line, const std::string& column) {
  if (s.empty()) parse_error(line, "empty value in column '" + column + "'");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
    parse_error(line, "bad number '" + s + "' in column '" + column + "'");
  }
  return v;
}

int parse_int(const std::string& s, std::size_t line, const std::string& column) {
  const double v = parse_double(s, line, column);
  if (v != std::floor(v) || std::abs(v) > 2e9) parse_error(line, "column '" + column + "' must be an integer");
  return static_cast<int>(v);
}

/// Reads a header line and maps column names to positions.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {
    std::string header;
    while (std::getline(in_, header)) {
      ++line_;
      if (header.find_first_not_of(" \t\r") != std::string::npos) break;
    }
    const auto names = split(header);
    for (std::size_t i = 0; i < names.size(); ++i) columns_[names[i]] = i;
    width_ = names.size();
    header_line_ = line_;
    if (width_ == 0) parse_error(line_, "missing header");
  }

  bool has(const std::string& name) const { return columns_.count(name) > 0; }

  void require(const std::vector<std::string>& names) const {
    for (const auto& n : names) {
      if (!has(n)) parse_error(header_line_, "header lacks column '" + n + "'");
    }
  }

  /// Next non-blank row; false at end of input.
  bool next() {
    std::string text;
    while (std::getline(in_, text)) {
      ++line_;
      if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
      row_ = split(text);
      if (row_.size() != width_) {
        parse_error(line_, "expected " + std::to_string(width_) + " fields, found " + std::to_string(row_.size()));
      }
      return true;
    }
    return false;
  }

  const std::string& field(const std::string& name) const { return row_[columns_.at(name)]; }
  double number(const std::string& name) const { return parse_double(field(name), line_, name); }
  int integer(const std::string& name) const { return parse_int(field(name), line_, name); }
  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::map<std::string, std::size_t> columns_;
  std::size_t width_ = 0;
  std::size_t header_line_ = 0;
  std::vector<std::string> row_;
  std::size_t line_ = 0;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path);
  return in;
}

Rotationd read_quaternion(const CsvReader& reader) {
  const Rotationd q(reader.number("qw"), reader.number("qx"), reader.number("qy"), reader.number("qz"));
  if (!(q.norm() > 1e-9)) parse_error(reader.line(), "quaternion has zero norm");
  return is_unit(q.coeffs()) ? q : q.normalized();
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string pattern_to_json(const DotPattern& pattern) {
  json dots = json::array();
  for (Eigen::Index i = 0; i < pattern.dots.cols(); ++i) {
    dots.push_back({pattern.dots(0, i), pattern.dots(1, i), pattern.dots(2, i)});
  }
  return json{{"n", pattern.size()}, {"dots", dots}, {"id", pattern.id}}.dump(2) + "\n";
}

DotPattern pattern_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("pattern file: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("dots") || !doc["dots"].is_array()) {
    throw Error(ErrorCode::ParseError, "pattern file needs a 'dots' array");
  }
  const auto& arr = doc["dots"];
  Matrix3Xd dots(3, static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& d = arr[i];
    if (!d.is_array() || d.size() != 3 || !d[0].is_number() || !d[1].is_number() || !d[2].is_number()) {
      throw Error(ErrorCode::ParseError, "pattern dot " + std::to_string(i) + " is not [x, y, z]");
    }
    const Vector3d v(d[0].get<double>(), d[1].get<double>(), d[2].get<double>());
    if (std::abs(v.norm() - 1.0) > 1e-6) {
      throw Error(ErrorCode::ParseError, "pattern dot " + std::to_string(i) + " is not a unit vector");
    }
    dots.col(static_cast<Eigen::Index>(i)) = v;
  }
  if (doc.contains("n") && (!doc["n"].is_number_integer() || doc["n"].get<std::size_t>() != arr.size())) {
    throw Error(ErrorCode::ParseError, "pattern 'n' does not match the number of dots");
  }
  DotPattern pattern = DotPattern::from_dots(dots);
  if (doc.contains("id") && doc["id"].is_string() && !doc["id"].get<std::string>().empty()) {
    pattern.id = doc["id"].get<std::string>();
  }
  return pattern;
}

void save_pattern(const std::string& path, const DotPattern& pattern) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  out << pattern_to_json(pattern);
}

DotPattern load_pattern(const std::string& path) {
  std::ifstream in = open_input(path);
  std::ostringstream text;
  text << in.rdbuf();
  return pattern_from_json(text.str());
}

std::vector<ObservationFrame> read_observations(std::istream& in) {
  CsvReader reader(in);
  reader.require({"frame", "t"});
  const bool lifted = reader.has("X") && reader.has("Y") && reader.has("Z");
  if (!lifted) reader.require({"x", "y"});
  const bool has_conf = reader.has("conf");
  const std::vector<std::string> coords = lifted ? std::vector<std::string>{"X", "Y", "Z"}
                                                 : std::vector<std::string>{"x", "y"};

  struct Pending {
    int frame;
    double t;
    std::vector<Vector3d> dots;
    std::vector<double> conf;
  };
  std::vector<Pending> frames;
  std::map<int, std::size_t> slot;

  while (reader.next()) {
    const int frame = reader.integer("frame");
    const double t = reader.number("t");
    auto it = slot.find(frame);
    if (it == slot.end()) {
      it = slot.emplace(frame, frames.size()).first;
      frames.push_back({frame, t, {}, {}});
    } else if (frames[it->second].t != t) {
      parse_error(reader.line(), "frame " + std::to_string(frame) + " has inconsistent t");
    }
    Pending& p = frames[it->second];

    bool all_empty = true;
    for (const auto& c : coords) all_empty = all_empty && reader.field(c).empty();
    if (all_empty) continue;

    Vector3d dot;
    if (lifted) {
      dot = Vector3d(reader.number("X"), reader.number("Y"), reader.number("Z"));
      if (!(dot.norm() > 1e-9)) parse_error(reader.line(), "dot has zero length");
      if (!is_unit(dot)) dot.normalize();
    } else {
      try {
        dot = lift_to_sphere(Eigen::Vector2d(reader.number("x"), reader.number("y")));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::OutsideDisk) throw;
        parse_error(reader.line(), "image point lies outside the ball disk");
      }
    }
    p.dots.push_back(dot);
    if (has_conf) p.conf.push_back(reader.number("conf"));
  }

  std::vector<ObservationFrame> out;
  out.reserve(frames.size());
  for (auto& p : frames) {
    ObservationFrame f;
    f.frame = p.frame;
    f.observed.t = p.t;
    f.observed.dots.resize(3, static_cast<Eigen::Index>(p.dots.size()));
    for (std::size_t k = 0; k < p.dots.size(); ++k) f.observed.dots.col(static_cast<Eigen::Index>(k)) = p.dots[k];
    f.conf = std::move(p.conf);
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<ObservationFrame> read_observations_file(const std::string& path) {
  std::ifstream in = open_input(path);
  return read_observations(in);
}

void write_observations(std::ostream& out, const std::vector<ObservationFrame>& frames) {
  bool conf = false;
  for (const auto& f : frames) conf = conf || !f.conf.empty();
  out << "frame,t,X,Y,Z" << (conf ? ",conf" : "") << "\n";
  for (const auto& f : frames) {
    const std::string prefix = std::to_string(f.frame) + "," + format_double(f.observed.t) + ",";
    if (f.observed.dots.cols() == 0) {
      out << prefix << ",," << (conf ? "," : "") << "\n";
      continue;
    }
    for (Eigen::Index i = 0; i < f.observed.dots.cols(); ++i) {
      out << prefix << format_double(f.observed.dots(0, i)) << "," << format_double(f.observed.dots(1, i)) << ","
          << format_double(f.observed.dots(2, i));
      if (conf) {
        out << "," << (static_cast<std::size_t>(i) < f.conf.size() ? format_double(f.conf[static_cast<std::size_t>(i)]) : "1");
      }
      out << "\n";
    }
  }
}

void write_recognition_results(std::ostream& out, const std::vector<RecognitionRow>& rows) {
  out << "frame,t,qw,qx,qy,qz,rmse,n_dots,n_matched,status\n";
  for (const auto& r : rows) {
    out << r.frame << "," << format_double(r.t) << ",";
    if (r.status == "ok") {
      out << format_double(r.q.w()) << "," << format_double(r.q.x()) << "," << format_double(r.q.y()) << ","
          << format_double(r.q.z()) << "," << format_double(r.rmse);
    } else {
      out << ",,,,";
    }
    out << "," << r.n_dots << "," << r.n_matched << "," << r.status << "\n";
  }
}

std::vector<OrientationSample> read_orientations(std::istream& in) {
  CsvReader reader(in);
  reader.require({"t", "qw", "qx", "qy", "qz"});
  const bool has_status = reader.has("status");
  const bool has_rmse = reader.has("rmse");
  std::vector<OrientationSample> out;
  while (reader.next()) {
    if (has_status && reader.field("status") != "ok") continue;
    OrientationSample s;
    s.t = reader.number("t");
    s.q = read_quaternion(reader);
    if (has_rmse && !reader.field("rmse").empty()) s.quality = reader.number("rmse");
    if (!out.empty() && !(s.t > out.back().t)) parse_error(reader.line(), "timestamps must be strictly increasing");
    out.push_back(s);
  }
  return out;
}

std::vector<OrientationSample> read_orientations_file(const std::string& path) {
  std::ifstream in = open_input(path);
  return read_orientations(in);
}

void write_orientations(std::ostream& out, const std::vector<OrientationSample>& samples) {
  bool rmse = false;
  for (const auto& s : samples) rmse = rmse || s.quality.has_value();
  out << "t,qw,qx,qy,qz" << (rmse ? ",rmse" : "") << "\n";
  for (const auto& s : samples) {
    out << format_double(s.t) << "," << format_double(s.q.w()) << "," << format_double(s.q.x()) << ","
        << format_double(s.q.y()) << "," << format_double(s.q.z());
    if (rmse) out << "," << (s.quality ? format_double(*s.quality) : "");
    out << "\n";
  }
}

void write_spin(std::ostream& out, const SpinEstimate& estimate, const std::string& status) {
  out << "wx,wy,wz,mag_rps,n_inliers,residual_rms,status\n";
  out << format_double(estimate.omega.x()) << "," << format_double(estimate.omega.y()) << ","
      << format_double(estimate.omega.z()) << "," << format_double(estimate.omega.norm() / (2.0 * kPi)) << ","
      << estimate.inliers.size() << "," << format_double(estimate.residual_rms) << "," << status << "\n";
}

void read_norm_series(std::istream& in, std::vector<double>& t, std::vector<double>& norms) {
  CsvReader reader(in);
  reader.require({"t", "omega"});
  t.clear();
  norms.clear();
  while (reader.next()) {
    t.push_back(reader.number("t"));
    norms.push_back(reader.number("omega"));
  }
}

std::string dampening_to_json(const DampeningFit& fit) {
  return json{{"coefficient", fit.coefficient},
              {"omega0_rps", fit.omega0 / (2.0 * kPi)},
              {"r2", fit.r2},
              {"n", fit.n}}
      .dump(2);
}

void write_ground_truth(std::ostream& out, const std::vector<GroundTruthFrame>& frames) {
  out << "t,qw,qx,qy,qz,visible_ids\n";
  for (const auto& f : frames) {
    out << format_double(f.t) << "," << format_double(f.q_true.w()) << "," << format_double(f.q_true.x()) << ","
        << format_double(f.q_true.y()) << "," << format_double(f.q_true.z()) << ",";
    for (std::size_t k = 0; k < f.visible_ids.size(); ++k) out << (k ? ";" : "") << f.visible_ids[k];
    out << "\n";
  }
}

std::vector<ObservationFrame> to_observation_frames(const std::vector<GroundTruthFrame>& frames) {
  std::vector<ObservationFrame> out;
  out.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    ObservationFrame f;
    f.frame = static_cast<int>(i);
    f.observed = frames[i].observed;
    f.observed.t = frames[i].t;
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace spindoe
