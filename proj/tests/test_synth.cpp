#include <doctest.h>

#include <cmath>
#include <sstream>

#include "spindoe/io.hpp"
#include "spindoe/pattern.hpp"
#include "spindoe/spin.hpp"
#include "spindoe/synth.hpp"

using namespace spindoe;

namespace {

DotPattern test_pattern(std::uint64_t seed = 1) {
  Rng rng(seed);
  return random_pattern(20, deg2rad(5.0), rng);
}

std::string serialize(const std::vector<GroundTruthFrame>& frames) {
  std::ostringstream out;
  write_observations(out, to_observation_frames(frames));
  write_ground_truth(out, frames);
  return out.str();
}

}  // namespace

TEST_CASE("clean observation equals the visible rotated dots") {
  const DotPattern p = test_pattern();
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const Rotationd q = random_rotation(rng);
    const GroundTruthFrame f = generate_observation(p, q, NoiseConfig::clean(), rng);
    const VisibleDots v = visible_dots(p, q);
    CHECK(f.visible_ids == v.ids);
    CHECK(f.source_ids == v.ids);
    CHECK((f.observed.dots - v.dots).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(geodesic_angle(f.q_true, q) < 1e-15);
  }
}

TEST_CASE("full dropout leaves only spurious dots") {
  const DotPattern p = test_pattern();
  NoiseConfig noise = NoiseConfig::clean();
  noise.dropout_prob = 1.0;
  noise.spurious_rate = 2.0;
  Rng rng(3);
  int spurious = 0;
  for (int i = 0; i < 500; ++i) {
    const GroundTruthFrame f = generate_observation(p, random_rotation(rng), noise, rng);
    for (int id : f.source_ids) CHECK(id == -1);
    for (Eigen::Index k = 0; k < f.observed.size(); ++k) {
      CHECK(f.observed.dots(2, k) > 0.0);
      CHECK(std::abs(f.observed.dots.col(k).norm() - 1.0) < 1e-12);
    }
    spurious += static_cast<int>(f.observed.size());
  }
  // Poisson(2) over 500 frames: mean 1000, standard deviation ~32.
  CHECK(std::abs(spurious - 1000) < 4 * 32);
}

TEST_CASE("spurious dots are uniform on the visible cap") {
  NoiseConfig noise = NoiseConfig::clean();
  noise.dropout_prob = 1.0;
  noise.spurious_rate = 5.0;
  noise.visibility_threshold = 0.2;
  const DotPattern p = test_pattern();
  Rng rng(4);
  int above = 0, total = 0;
  for (int i = 0; i < 2000; ++i) {
    const GroundTruthFrame f = generate_observation(p, random_rotation(rng), noise, rng);
    for (Eigen::Index k = 0; k < f.observed.size(); ++k) {
      CHECK(f.observed.dots(2, k) > 0.2);
      above += f.observed.dots(2, k) > 0.6;
      ++total;
    }
  }
  // Area fraction of the cap z > 0.6 within z > 0.2 is (1 - 0.6) / (1 - 0.2).
  const double frac = static_cast<double>(above) / total;
  CHECK(std::abs(frac - 0.5) < 3 * std::sqrt(0.25 / total));
}

TEST_CASE("dot noise has the half-normal mean displacement") {
  const DotPattern p = test_pattern();
  NoiseConfig noise = NoiseConfig::clean();
  noise.sigma = deg2rad(3.0);
  Rng rng(5);
  double sum = 0.0;
  int count = 0;
  for (int i = 0; i < 10000; ++i) {
    const Rotationd q = random_rotation(rng);
    const GroundTruthFrame f = generate_observation(p, q, noise, rng);
    for (Eigen::Index k = 0; k < f.observed.size(); ++k) {
      const Vector3d truth = q * p.dots.col(f.source_ids[static_cast<std::size_t>(k)]);
      sum += angle_between(f.observed.dots.col(k), truth);
      ++count;
    }
  }
  CHECK(sum / count == doctest::Approx(deg2rad(3.0) * std::sqrt(2.0 / kPi)).epsilon(0.02));
}

TEST_CASE("empirical dropout fraction") {
  const DotPattern p = test_pattern();
  NoiseConfig noise = NoiseConfig::clean();
  noise.dropout_prob = 0.05;
  Rng rng(6);
  long visible = 0, kept = 0;
  for (int i = 0; i < 10000; ++i) {
    const GroundTruthFrame f = generate_observation(p, random_rotation(rng), noise, rng);
    visible += static_cast<long>(f.visible_ids.size());
    kept += f.observed.size();
  }
  const double frac = 1.0 - static_cast<double>(kept) / static_cast<double>(visible);
  const double se = std::sqrt(0.05 * 0.95 / static_cast<double>(visible));
  CHECK(std::abs(frac - 0.05) < 3 * se);
}

TEST_CASE("ground truth matches the noisy observation") {
  const DotPattern p = test_pattern();
  NoiseConfig noise;
  noise.sigma = deg2rad(2.0);
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const GroundTruthFrame f = generate_observation(p, random_rotation(rng), noise, rng);
    REQUIRE(f.source_ids.size() == static_cast<std::size_t>(f.observed.size()));
    for (Eigen::Index k = 0; k < f.observed.size(); ++k) {
      const int id = f.source_ids[static_cast<std::size_t>(k)];
      if (id < 0) continue;
      CHECK(std::find(f.visible_ids.begin(), f.visible_ids.end(), id) != f.visible_ids.end());
      CHECK(angle_between(f.observed.dots.col(k), Vector3d(f.q_true * p.dots.col(id))) < 5 * noise.sigma);
    }
  }
}

TEST_CASE("clean frames are recognized at their true orientation") {
  const DotPattern p = test_pattern(8);
  const HashTable table = HashTable::build(p);
  Rng rng(9);
  const auto frames = generate_sequence(p, random_rotation(rng), Vector3d(30, -50, 80), 350.0, 200, NoiseConfig::clean());
  for (const auto& f : frames) {
    if (f.observed.size() < 3) continue;
    CHECK(geodesic_angle(recognize(table, f.observed).orientation, f.q_true) < 1e-6);
  }
}

TEST_CASE("generate_sequence") {
  const DotPattern p = test_pattern();
  Rng rng(10);
  const Rotationd q0 = random_rotation(rng);
  const auto single = generate_sequence(p, q0, Vector3d(1, 2, 3), 350.0, 1, NoiseConfig::clean());
  REQUIRE(single.size() == 1u);
  CHECK(single[0].t == 0.0);
  CHECK(geodesic_angle(single[0].q_true, q0) < 1e-15);

  const Vector3d omega(4, -2, 7);
  const auto frames = generate_sequence(p, q0, omega, 100.0, 50, NoiseConfig::clean());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    CHECK(frames[i].t == static_cast<double>(i) / 100.0);
    CHECK(geodesic_angle(frames[i].q_true, propagate_orientation(q0, omega, frames[i].t)) < 1e-12);
  }
  CHECK_THROWS_AS(generate_sequence(p, q0, omega, 0.0, 5, NoiseConfig::clean()), Error);
  CHECK_THROWS_AS(generate_sequence(p, q0, omega, 100.0, 0, NoiseConfig::clean()), Error);
}

TEST_CASE("sequences are deterministic in serialized form") {
  const DotPattern p = test_pattern();
  NoiseConfig noise;
  noise.sigma = deg2rad(2.0);
  noise.seed = 77;
  Rng rng(11);
  const Rotationd q0 = random_rotation(rng);
  const auto a = serialize(generate_sequence(p, q0, Vector3d(100, 0, 50), 350.0, 30, noise));
  const auto b = serialize(generate_sequence(p, q0, Vector3d(100, 0, 50), 350.0, 30, noise));
  CHECK(a == b);
  noise.seed = 78;
  CHECK(serialize(generate_sequence(p, q0, Vector3d(100, 0, 50), 350.0, 30, noise)) != a);
}

TEST_CASE("clean pipeline recovers the spin") {
  const DotPattern p = test_pattern(12);
  const HashTable table = HashTable::build(p);
  Rng rng(13);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Vector3d omega = 2 * kPi * 50.0 * Vector3d::UnitX();
    const auto frames = generate_sequence(p, random_rotation(rng), omega, 350.0, 10, NoiseConfig::clean());
    std::vector<OrientationSample> samples;
    for (const auto& f : frames) {
      if (f.observed.size() >= 3) samples.push_back({f.t, recognize(table, f.observed).orientation, {}});
    }
    if (samples.size() < 3) continue;
    ++checked;
    CHECK((quatera_fit(samples).omega - omega).norm() < 1e-6 * omega.norm());
  }
  CHECK(checked > 15);
}

TEST_CASE("dampened sequence: finite-difference norms decay at the set rate") {
  const DotPattern p = test_pattern();
  Rng rng(14);
  const double fps = 145.0;
  const Vector3d omega0 = 2 * kPi * 30.0 * random_unit_vector(rng);
  const auto frames = generate_sequence(p, random_rotation(rng), omega0, fps, 291, NoiseConfig::clean(), 0.091);
  CHECK(frames.back().t == doctest::Approx(2.0));
  std::vector<double> t, norms;
  for (std::size_t i = 1; i < frames.size(); ++i) {
    const Vector3d w = finite_difference_spin({frames[i - 1].t, frames[i - 1].q_true, {}}, {frames[i].t, frames[i].q_true, {}});
    CHECK(w.normalized().dot(omega0.normalized()) == doctest::Approx(1.0));
    t.push_back(0.5 * (frames[i - 1].t + frames[i].t));
    norms.push_back(w.norm());
  }
  for (std::size_t i = 1; i < norms.size(); ++i) CHECK(norms[i] < norms[i - 1]);
  CHECK(dampening_fit(t, norms).coefficient == doctest::Approx(0.091).epsilon(0.02));
}

TEST_CASE("perturb_rotation") {
  Rng rng(15);
  const Rotationd q = random_rotation(rng);
  CHECK(geodesic_angle(perturb_rotation(q, 0.0, rng), q) < 1e-15);
  double sum = 0.0;
  for (int i = 0; i < 50000; ++i) sum += geodesic_angle(perturb_rotation(q, deg2rad(2.0), rng), q);
  CHECK(sum / 50000 == doctest::Approx(deg2rad(2.0) * std::sqrt(2.0 / kPi)).epsilon(0.02));
}

TEST_CASE("noise configuration is validated") {
  const DotPattern p = test_pattern();
  Rng rng(16);
  NoiseConfig bad;
  bad.dropout_prob = 1.5;
  CHECK_THROWS_AS(generate_observation(p, Rotationd::Identity(), bad, rng), Error);
  bad = NoiseConfig{};
  bad.sigma = -1.0;
  CHECK_THROWS_AS(generate_observation(p, Rotationd::Identity(), bad, rng), Error);
  bad = NoiseConfig{};
  bad.spurious_rate = -0.1;
  CHECK_THROWS_AS(bad.validate(), Error);
}
