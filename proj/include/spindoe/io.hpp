#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "spindoe/hashing.hpp"
#include "spindoe/spin.hpp"
#include "spindoe/synth.hpp"

namespace spindoe {

// Every reader throws ParseError whose message starts with "line N:" for
// malformed content. Numbers are written with 17 significant digits so that
// files round-trip exactly.

std::string format_double(double v);

/// {"n": int, "dots": [[x, y, z], ...], "id": string}
std::string pattern_to_json(const DotPattern& pattern);
DotPattern pattern_from_json(const std::string& text);
void save_pattern(const std::string& path, const DotPattern& pattern);
DotPattern load_pattern(const std::string& path);

/// One frame of an observation file; `conf` is empty unless the file has a
/// conf column.
struct ObservationFrame {
  int frame = 0;
  ObservedDotSet observed;
  std::vector<double> conf;
};

/// Header `frame,t,x,y` (image plane, units of ball radii, lifted onto the
/// sphere) or `frame,t,X,Y,Z`, optionally followed by `conf`. One row per
/// dot; a row whose coordinates are all empty declares a frame without dots.
std::vector<ObservationFrame> read_observations(std::istream& in);
std::vector<ObservationFrame> read_observations_file(const std::string& path);
void write_observations(std::ostream& out, const std::vector<ObservationFrame>& frames);

struct RecognitionRow {
  int frame = 0;
  double t = 0.0;
  Rotationd q = Rotationd::Identity();
  double rmse = 0.0;
  int n_dots = 0;
  int n_matched = 0;
  std::string status;  // ok, too_few_dots, no_consensus
};

/// `frame,t,qw,qx,qy,qz,rmse,n_dots,n_matched,status`; quaternion and rmse
/// are left empty on rows whose status is not ok.
void write_recognition_results(std::ostream& out, const std::vector<RecognitionRow>& rows);

/// Header `t,qw,qx,qy,qz[,rmse]`. A recognition result file is accepted too;
/// rows whose status is not ok are skipped.
std::vector<OrientationSample> read_orientations(std::istream& in);
std::vector<OrientationSample> read_orientations_file(const std::string& path);
void write_orientations(std::ostream& out, const std::vector<OrientationSample>& samples);

/// `wx,wy,wz,mag_rps,n_inliers,residual_rms,status`; a failed fit writes
/// zeros and the failure status.
void write_spin(std::ostream& out, const SpinEstimate& estimate, const std::string& status);

/// Header `t,omega` with omega in rad/s.
void read_norm_series(std::istream& in, std::vector<double>& t, std::vector<double>& norms);

/// {coefficient, omega0_rps, r2, n}
std::string dampening_to_json(const DampeningFit& fit);

/// `t,qw,qx,qy,qz,visible_ids` with ids separated by ';'.
void write_ground_truth(std::ostream& out, const std::vector<GroundTruthFrame>& frames);

std::vector<ObservationFrame> to_observation_frames(const std::vector<GroundTruthFrame>& frames);

}  // namespace spindoe
