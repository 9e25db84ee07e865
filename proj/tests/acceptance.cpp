// Acceptance suite. Prints one PASS/FAIL line per criterion with the measured
// values and the pinned tolerances, and exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "spindoe/hashing.hpp"
#include "spindoe/kent.hpp"
#include "spindoe/pattern.hpp"
#include "spindoe/spin.hpp"
#include "spindoe/synth.hpp"

using namespace spindoe;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;
// ctest hides the output of passing tests, so the lines also go to a file.
std::FILE* report_file = nullptr;

void line(const std::string& text) {
  std::printf("%s\n", text.c_str());
  std::fflush(stdout);
  if (report_file) {
    std::fprintf(report_file, "%s\n", text.c_str());
    std::fflush(report_file);
  }
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

void report(const char* id, bool pass, const std::string& title, const std::string& detail) {
  line(fmt("%-5s %s  %s | %s", id, pass ? "PASS" : "FAIL", title.c_str(), detail.c_str()));
  if (!pass) ++failures;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  return v[static_cast<std::size_t>(p * static_cast<double>(v.size() - 1))];
}

// Fixed inputs shared by several criteria.
constexpr std::uint64_t kPatternSeed = 1;  // same as `spindoe pattern gen --n 20 --seed 1`
constexpr std::uint64_t kEvalSeed = 2024;
const std::vector<std::uint64_t> kRandomSeeds{101, 102, 103, 104, 105};

std::vector<OrientationSample> constant_spin(const Rotationd& q0, const Vector3d& omega, double fps, int n) {
  std::vector<OrientationSample> s;
  for (int i = 0; i < n; ++i) s.push_back({i / fps, propagate_orientation(q0, omega, i / fps), {}});
  return s;
}

void ac1(const DotPattern& pattern) {
  const auto start = Clock::now();
  const HashTable table = HashTable::build(pattern);
  const double t = seconds_since(start);
  const auto expected = static_cast<std::size_t>(20 * 19 * 18 - table.skipped_bases() * 18);
  const bool pass = table.entries().size() == expected && table.skipped_bases() == 0 && t < 1.0;
  report("AC1", pass, "hash-table count identity",
         fmt("entries=%zu expected=6840 skipped_bases=%d build=%.3fs (exact count, 0 skips, <1s)",
             table.entries().size(), table.skipped_bases(), t));
}

void ac2(const HashTable& table) {
  const auto start = Clock::now();
  Rng rng(derive_rng(kEvalSeed, 2));
  int evaluated = 0, recognized = 0;
  double max_error = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Rotationd truth = random_rotation(rng);
    const VisibleDots v = visible_dots(table.pattern(), truth);
    if (v.ids.size() < 3) continue;
    ++evaluated;
    try {
      const double e = geodesic_angle(recognize(table, {v.dots, 0.0}).orientation, truth);
      max_error = std::max(max_error, e);
      if (e < 1e-6) ++recognized;
    } catch (const Error&) {
      max_error = kPi;
    }
  }
  const double t = seconds_since(start);
  report("AC2", recognized == evaluated && max_error < 1e-6 && t < 60.0, "clean round trip",
         fmt("recognized=%d/%d max_error=%.3g rad time=%.2fs (100%%, <1e-6 rad, <60s)", recognized, evaluated,
             max_error, t));
}

void ac3(const HashTable& table, double optimize_seconds) {
  const auto start = Clock::now();
  EvaluationConfig cfg;
  cfg.seed = kEvalSeed;
  const double sigma = deg2rad(3.0);
  const PatternEvalReport opt = evaluate_pattern(table, 10000, sigma, cfg);
  std::vector<double> random_rates;
  std::string per_seed;
  for (std::uint64_t seed : kRandomSeeds) {
    Rng rng(seed);
    const PatternEvalReport r = evaluate_pattern(random_pattern(20, 0.0, rng), 10000, sigma, cfg);
    random_rates.push_back(r.success_rate);
    per_seed += fmt("%s%.4f", per_seed.empty() ? "" : ",", r.success_rate);
  }
  const double random_median = median(random_rates);
  const double t = seconds_since(start);
  const bool pass = opt.success_rate >= 0.95 && opt.success_rate > random_median && t + optimize_seconds < 600.0;
  report("AC3", pass, "pattern robustness at 3 deg",
         fmt("optimized=%.4f (insufficient=%d) random=[%s] median=%.4f eval=%.1fs optimize=%.1fs "
             "(>=0.95, > random median, <600s)",
             opt.success_rate, opt.insufficient_dots, per_seed.c_str(), random_median, t, optimize_seconds));
}

void ac4(const HashTable& table) {
  EvaluationConfig cfg;
  cfg.seed = kEvalSeed + 4;
  std::vector<double> rates;
  std::string list;
  for (double deg : {0.0, 1.0, 3.0, 5.0, 8.0}) {
    rates.push_back(evaluate_pattern(table, 5000, deg2rad(deg), cfg).success_rate);
    list += fmt("%s%g:%.4f", list.empty() ? "" : " ", deg, rates.back());
  }
  bool monotone = true;
  for (std::size_t i = 1; i < rates.size(); ++i) monotone = monotone && rates[i] <= rates[i - 1];
  report("AC4", monotone, "sensitivity curve shape",
         fmt("sigma_deg:success %s, 5000 trials each (non-increasing)", list.c_str()));
}

void ac5() {
  double worst = 0.0;
  std::string list;
  for (double k : {1.0, 10.0, 100.0, 500.0}) {
    // log(4 pi sinh k / k) written to stay finite at k = 500.
    const double closed = std::log(2.0 * kPi / k) + k + std::log1p(-std::exp(-2.0 * k));
    const double rel = std::abs(std::expm1(log_kent_normalizer(k, 0.0) - closed));
    worst = std::max(worst, rel);
    list += fmt("%s%g:%.2e", list.empty() ? "" : " ", k, rel);
  }
  report("AC5", worst < 1e-10, "Kent normalizer vs vMF closed form",
         fmt("kappa:rel_error %s (<1e-10 relative)", list.c_str()));
}

void ac6() {
  const KentParams kent = KentParams::centred_on(Vector3d(0.2, 0.3, 0.93).normalized(), 500.0, 0.0);
  const ProjectionParams proj;
  const Matrix3d basis = hash_basis(Vector3d::UnitX(), Vector3d(0.5, std::sqrt(3.0) / 2.0, 0.0));
  const Matrix3d inverse = basis.inverse();
  const double log_det = std::log(std::abs(basis.determinant()));
  const double log_c = log_kent_normalizer(kent.kappa, kent.beta);
  // x-space mass of p_d: the integral of r^2 n(r) dr.
  const double mass = 1.0 + proj.alpha * proj.alpha;
  auto p_phi = [&](const Vector3d& h) {
    const Vector3d x = basis * h;
    return std::exp(projection_log_likelihood(proj.alpha, x) + kent_log_pdf(kent, x / x.norm(), log_c) + log_det);
  };

  // Push-forward: samples x = r u (u ~ Kent, r ~ r^2 n(r)) mapped through B^-1.
  Rng rng(derive_rng(kEvalSeed, 6));
  const int n = 1000000;
  const Matrix3Xd dirs = kent_sample(kent, n, rng);
  std::normal_distribution<double> radial(1.0, proj.alpha);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double rmax = 1.0 + 6.0 * proj.alpha;
  Matrix3Xd h(3, n);
  for (int i = 0; i < n; ++i) {
    double r;
    do r = radial(rng);
    while (uniform(rng) * rmax * rmax > r * r);
    h.col(i) = inverse * (r * dirs.col(i));
  }
  const Vector3d mean = h.rowwise().mean();
  const Vector3d spread = ((h.colwise() - mean).array().square().rowwise().mean()).sqrt();

  // Box of +-1 standard deviation around the sample mean: MC mass fraction
  // versus midpoint quadrature of p_phi over the same box.
  const Vector3d lo = mean - spread, hi = mean + spread;
  int inside = 0;
  for (int i = 0; i < n; ++i) inside += (h.col(i).array() >= lo.array()).all() && (h.col(i).array() <= hi.array()).all();
  const double mc = static_cast<double>(inside) / n;
  const int g = 100;
  const Vector3d step = (hi - lo) / g;
  double box = 0.0;
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j)
      for (int m = 0; m < g; ++m) box += p_phi(lo + step.cwiseProduct(Vector3d(i + 0.5, j + 0.5, m + 0.5)));
  box *= step.prod() / mass;
  const double push_rel = std::abs(mc / box - 1.0);

  // Volume: integral of p_phi over a box covering the support equals the
  // x-space mass of p_d.
  const Vector3d wide_lo = mean - 8.0 * spread.cwiseMax(Vector3d::Constant(1e-3));
  const Vector3d wide_hi = mean + 8.0 * spread.cwiseMax(Vector3d::Constant(1e-3));
  const int gw = 140;
  const Vector3d wstep = (wide_hi - wide_lo) / gw;
  double total = 0.0;
  for (int i = 0; i < gw; ++i)
    for (int j = 0; j < gw; ++j)
      for (int m = 0; m < gw; ++m) total += p_phi(wide_lo + wstep.cwiseProduct(Vector3d(i + 0.5, j + 0.5, m + 0.5)));
  total *= wstep.prod();
  const double volume_rel = std::abs(total / mass - 1.0);

  report("AC6", push_rel < 0.02 && volume_rel < 0.02, "hash-space change of variable",
         fmt("push-forward box mass mc=%.4f quadrature=%.4f rel=%.4f; volume %.5f vs %.5f rel=%.4f (<2%% each)", mc,
             box, push_rel, total, mass, volume_rel));
}

void ac7() {
  Rng rng(derive_rng(kEvalSeed, 7));
  double worst = 0.0;
  for (double rps : {1.0, 10.0, 50.0, 100.0, 150.0, 170.0, 174.0}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Vector3d w = 2 * kPi * rps * random_unit_vector(rng);
      const SpinEstimate e = quatera_fit(constant_spin(random_rotation(rng), w, 350.0, 10));
      worst = std::max(worst, (e.omega - w).norm() / w.norm());
    }
  }
  const Vector3d axis = random_unit_vector(rng);
  const SpinEstimate alias = quatera_fit(constant_spin(random_rotation(rng), 2 * kPi * 176.0 * axis, 350.0, 10));
  const double along = alias.omega.dot(axis) / (2 * kPi);
  const bool aliased = std::abs(along + 174.0) < 1e-6 * 174.0;
  report("AC7", worst < 1e-6 && aliased, "spin exactness below Nyquist",
         fmt("max rel error=%.2e over 1..174 rps (<1e-6); 176 rps estimates %.6f rps along the axis "
             "(expected alias -174)",
             worst, along));
}

void ac8() {
  Rng rng(derive_rng(kEvalSeed, 8));
  int good = 0;
  const int trials = 500;
  for (int trial = 0; trial < trials; ++trial) {
    const double rps = std::uniform_real_distribution<double>(5.0, 170.0)(rng);
    const Vector3d w = 2 * kPi * rps * random_unit_vector(rng);
    auto samples = constant_spin(random_rotation(rng), w, 350.0, 10);
    std::vector<int> idx{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<int> expected;
    for (int i = 0; i < 10; ++i) {
      if (i != idx[0] && i != idx[1]) expected.push_back(i);
    }
    samples[static_cast<std::size_t>(idx[0])].q = random_rotation(rng);
    samples[static_cast<std::size_t>(idx[1])].q = random_rotation(rng);
    RansacConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(trial);
    try {
      const SpinEstimate e = ransac_spin(samples, cfg);
      if ((e.omega - w).norm() / w.norm() < 0.01 && e.inliers == expected) ++good;
    } catch (const Error&) {
    }
  }
  const double rate = static_cast<double>(good) / trials;
  report("AC8", rate >= 0.95, "robust spin with 2 of 10 outliers",
         fmt("exact outlier set and |dw|/|w|<1%% in %d/%d trials = %.3f (>=0.95)", good, trials, rate));
}

void ac9() {
  // Rotation noise whose mean angle is 2.3 deg: |N(0, s)| has mean s sqrt(2/pi).
  const double sigma = deg2rad(2.3) / std::sqrt(2.0 / kPi);
  const Vector3d base = 2 * kPi * 50.0 * Vector3d::UnitX();
  std::vector<double> rel;
  int failed = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Rng rng = derive_rng(kEvalSeed + 9, static_cast<std::uint64_t>(trial));
    const Rotationd q0 = random_rotation(rng);
    const Vector3d w = random_rotation(rng) * base;
    std::vector<OrientationSample> s;
    for (int i = 0; i < 10; ++i) {
      const double t = i / 350.0;
      s.push_back({t, perturb_rotation(propagate_orientation(q0, w, t), sigma, rng), {}});
    }
    RansacConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(trial);
    try {
      rel.push_back((ransac_spin(s, cfg).omega - w).norm() / w.norm());
    } catch (const Error&) {
      rel.push_back(1.0);
      ++failed;
    }
  }
  const double med = median(rel);
  report("AC9", med <= 0.05, "noisy spin at 2.3 deg orientation noise",
         fmt("median rel error=%.4f (<=0.05) p90=%.4f (90%% expected below 0.20) max=%.4f failed_fits=%d", med,
             quantile(rel, 0.9), quantile(rel, 1.0), failed));
}

void ac10() {
  const double k = 0.091, fps = 145.0;
  // Direct norm series.
  std::vector<double> t, w;
  for (int i = 0; i <= 290; ++i) {
    t.push_back(i / fps);
    w.push_back(2 * kPi * 30.0 * std::exp(-k * t.back()));
  }
  const double direct = dampening_fit(t, w).coefficient;

  // Through a dampened orientation sequence and successive differences.
  Rng rng(derive_rng(kEvalSeed, 10));
  const Rotationd q0 = random_rotation(rng);
  const Vector3d omega0 = 2 * kPi * 30.0 * random_unit_vector(rng);
  std::vector<double> tm, norms;
  for (int i = 1; i <= 290; ++i) {
    const OrientationSample a{(i - 1) / fps, sequence_orientation(q0, omega0, (i - 1) / fps, k), {}};
    const OrientationSample b{i / fps, sequence_orientation(q0, omega0, i / fps, k), {}};
    tm.push_back(0.5 * (a.t + b.t));
    norms.push_back(finite_difference_spin(a, b).norm());
  }
  const double sequence = dampening_fit(tm, norms).coefficient;
  const double theory = theoretical_dampening(1.81e-5, 0.02, 0.0027);
  const bool pass = std::abs(direct / k - 1.0) < 0.02 && std::abs(sequence / k - 1.0) < 0.02 &&
                    std::abs(theory - 0.00505) <= 1e-5;
  report("AC10", pass, "dampening coefficient",
         fmt("direct=%.6f sequence=%.6f (0.091 within 2%%); theoretical=%.6f (0.00505 +- 1e-5)", direct, sequence,
             theory));
}

void ac11(const DotPattern& pattern) {
  Rng rng(derive_rng(kEvalSeed, 11));
  double total = 0.0;
  int fewer = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t v = visible_dots(pattern, random_rotation(rng)).ids.size();
    total += static_cast<double>(v);
    fewer += v < 3;
  }
  const double mean = total / 10000;
  report("AC11", mean > 3.0, "visibility coverage",
         fmt("mean visible dots=%.3f (>3), rotations with <3 visible=%d of 10000", mean, fewer));
}

void ac12(const HashTable& table) {
  Rng rng(derive_rng(kEvalSeed, 12));
  NoiseConfig noise;
  noise.sigma = deg2rad(3.0);
  std::vector<GroundTruthFrame> frames;
  while (frames.size() < 1000) {
    GroundTruthFrame f = generate_observation(table.pattern(), random_rotation(rng), noise, rng);
    if (f.observed.size() >= 3) frames.push_back(std::move(f));
  }
  double worst_frame = 0.0;
  const auto start = Clock::now();
  for (const auto& f : frames) {
    const auto s = Clock::now();
    try {
      recognize(table, f.observed);
    } catch (const Error&) {
    }
    worst_frame = std::max(worst_frame, seconds_since(s));
  }
  const double per_frame = seconds_since(start) / static_cast<double>(frames.size());

  std::vector<std::vector<OrientationSample>> sequences;
  for (int i = 0; i < 200; ++i) {
    const Rotationd q0 = random_rotation(rng);
    const Vector3d w = 2 * kPi * 80.0 * random_unit_vector(rng);
    auto s = constant_spin(q0, w, 350.0, 10);
    for (auto& x : s) x.q = perturb_rotation(x.q, deg2rad(2.0), rng);
    s[3].q = random_rotation(rng);
    sequences.push_back(std::move(s));
  }
  const auto rstart = Clock::now();
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    RansacConfig cfg;
    cfg.seed = i;
    try {
      ransac_spin(sequences[i], cfg);
    } catch (const Error&) {
    }
  }
  const double per_fit = seconds_since(rstart) / static_cast<double>(sequences.size());
  report("AC12", per_frame <= 0.005 && per_fit <= 0.020, "performance sanity",
         fmt("recognize mean=%.3f ms (worst %.3f ms) over %zu noisy frames (<=5 ms); ransac_spin mean=%.3f ms "
             "over 10 frames with an outlier (<=20 ms); single thread",
             per_frame * 1e3, worst_frame * 1e3, frames.size(), per_fit * 1e3));
}

}  // namespace

int main(int argc, char** argv) {
  report_file = std::fopen(argc > 1 ? argv[1] : "acceptance_report.txt", "w");
  line(fmt("Acceptance suite (pattern seed %llu, evaluation seed %llu)", static_cast<unsigned long long>(kPatternSeed),
           static_cast<unsigned long long>(kEvalSeed)));
  const auto start = Clock::now();
  Rng rng(kPatternSeed);
  const DotPattern pattern = optimize_pattern(20, OptimizeConfig{}, rng);
  const double optimize_seconds = seconds_since(start);
  line(fmt("optimized 20-dot pattern %s in %.1fs", pattern.id.c_str(), optimize_seconds));
  const HashTable table = HashTable::build(pattern);

  const std::vector<std::pair<const char*, std::function<void()>>> criteria{
      {"AC1", [&] { ac1(pattern); }},
      {"AC2", [&] { ac2(table); }},
      {"AC3", [&] { ac3(table, optimize_seconds); }},
      {"AC4", [&] { ac4(table); }},
      {"AC5", [] { ac5(); }},
      {"AC6", [] { ac6(); }},
      {"AC7", [] { ac7(); }},
      {"AC8", [] { ac8(); }},
      {"AC9", [] { ac9(); }},
      {"AC10", [] { ac10(); }},
      {"AC11", [&] { ac11(pattern); }},
      {"AC12", [&] { ac12(table); }},
  };
  for (const auto& [id, run] : criteria) {
    try {
      run();
    } catch (const std::exception& e) {
      report(id, false, "criterion threw", e.what());
    }
  }
  line(fmt("%d of %zu criteria failed, total %.1fs", failures, criteria.size(), seconds_since(start)));
  if (report_file) std::fclose(report_file);
  return failures == 0 ? 0 : 1;
}
