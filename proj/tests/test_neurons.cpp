#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "silif/neurons.hpp"

using namespace silif;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
// suppresses spiking without the inf*0 = nan hazard in subtractive resets
constexpr double kQuietTheta = 1e300;
}

TEST_CASE("silif decays at zero log parameters") {
  SiLifParams p;  // lambda logs 0, dt_log 0
  auto [alpha, beta] = silif_decays(p);
  CHECK(alpha == doctest::Approx(0.36787944117144233).epsilon(1e-16));
  CHECK(beta == alpha);
}

TEST_CASE("silif dt_log rescales both decays") {
  SiLifParams p;
  p.dt_log = std::log(2.0);
  auto [alpha, beta] = silif_decays(p);
  // exp(-exp(0) * 2) = e^-2
  CHECK(alpha == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
  CHECK(beta == alpha);
}

TEST_CASE("silif step updates w first, then u against the fresh w") {
  SiLifParams p;
  p.lambda_alpha_log = 0.0;                       // alpha = e^-1
  p.lambda_beta_log = -0.36651292058166435;       // log(ln 2), beta = 1/2
  p.a = 0.5;
  p.b = 1.0;
  NeuronState st{0.8, 0.2, 1.0};
  NeuronState out = silif_step(p, st, 1.5);
  CHECK(out.w == doctest::Approx(1.5).epsilon(1e-15));
  // u = alpha*(0.8 - 1) + (1-alpha)*(1.5 - 1.5) = -0.2 e^-1
  CHECK(out.u == doctest::Approx(-0.07357588823428847).epsilon(1e-15));
  CHECK(out.s == 0.0);
}

TEST_CASE("silif threshold fires at exactly theta") {
  SiLifParams p;
  p.lambda_alpha_log = -30.0;  // alpha ~ 1 - 1e-13, nearly no leak
  p.lambda_beta_log = -30.0;
  NeuronState st{2.0, 0.0, 0.0};
  NeuronState out = silif_step(p, st, 0.0);
  CHECK(out.s == 1.0);  // u stays near 2
  NeuronState sub = silif_step(p, {0.5, 0.0, 0.0}, 0.0);
  CHECK(sub.s == 0.0);
}

TEST_CASE("silif couplings clamp inside the step") {
  SiLifParams p;
  p.lambda_beta_log = 30.0;  // beta ~ 0
  p.a = 5.0;                 // clamps to 1
  p.b = -3.0;                // clamps to 0
  NeuronState st{1.0, 0.0, 1.0};
  NeuronState out = silif_step(p, st, 0.0);
  CHECK(out.w == doctest::Approx(1.0).epsilon(1e-12));  // a*u only
}

TEST_CASE("silif init stability: sampled decays stay inside (0, 1)") {
  Rng rng(11, stream::kNeuron);
  auto ps = init_silif(rng, 10000);
  for (const auto& p : ps) {
    auto [alpha, beta] = silif_decays(p);
    CHECK(alpha > 0.0);
    CHECK(alpha < 1.0);
    CHECK(beta > 0.0);
    CHECK(beta < 1.0);
    // dt0 = 1 with rates in [1/25, 1/5] pins them into [e^-1/5, e^-1/25]
    CHECK(alpha >= std::exp(-1.0 / 5.0) - 1e-12);
    CHECK(alpha <= std::exp(-1.0 / 25.0) + 1e-12);
    CHECK(p.a >= 0.0);
    CHECK(p.a <= 1.0);
    CHECK(p.b >= 0.0);
    CHECK(p.b <= 2.0);
  }
  CHECK_THROWS_AS(init_silif(rng, -1), ParameterRangeError);
}

TEST_CASE("csilif default transition") {
  CSiLifParams p;  // lambda = -0.5 + i pi at dt = 1
  Complex64 alpha = csilif_alpha(p);
  CHECK(alpha.real() == doctest::Approx(-0.6065306597126334).epsilon(1e-15));
  CHECK(std::abs(alpha.imag()) < 1e-15);
  CHECK(std::abs(alpha) < 1.0);
}

TEST_CASE("csilif step with a real half transition") {
  CSiLifParams p;
  p.lambda_real_log = std::log(std::log(2.0));  // exp(-ln 2) = 1/2
  p.lambda_img = 0.0;
  p.b = 0.5;
  CSiLifState st{{0.4, 0.2}, 1.0};
  CSiLifState out = csilif_step(p, st, 2.0);
  CHECK(out.u.real() == doctest::Approx(0.95).epsilon(1e-15));
  CHECK(out.u.imag() == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(out.s == 1.0);  // 2 * 0.95 >= 1
}

TEST_CASE("csilif readout gain doubles the real part before the threshold") {
  CSiLifParams p;
  p.lambda_img = 0.0;
  p.b = 1.0;
  CSiLifState st;
  CSiLifState out = csilif_step(p, st, 0.51);
  CHECK(out.u.real() == doctest::Approx(0.51));
  CHECK(out.s == 1.0);  // 1.02 >= theta even though Re(u) < theta
  CSiLifState quiet = csilif_step(p, st, 0.49);
  CHECK(quiet.s == 0.0);
}

TEST_CASE("csilif init stability: |alpha| < 1 over 10^4 draws") {
  Rng rng(13, stream::kNeuron);
  auto ps = init_csilif(rng, 10000, 0.01, 0.5);
  for (const auto& p : ps) {
    CHECK(std::abs(csilif_alpha(p)) < 1.0);
    CHECK(p.b >= 0.0);
    CHECK(p.b <= 1.0);
    const double dt = std::exp(p.dt_log);
    CHECK(dt >= 0.01 - 1e-12);
    CHECK(dt <= 0.5 + 1e-12);
  }
  CHECK_THROWS_AS(init_csilif(rng, 4, 0.0, 0.5), ParameterRangeError);
  CHECK_THROWS_AS(init_csilif(rng, 4, 0.5, 0.01), ParameterRangeError);
}

TEST_CASE("adlif step reads the previous w and subtracts theta on reset") {
  AdLifParams p;
  p.alpha = 0.9;
  p.beta = 0.8;
  p.a = 0.5;
  p.b = 1.0;
  NeuronState quiet{1.0, 0.5, 0.0};
  NeuronState out = adlif_step(p, quiet, 1.0);
  CHECK(out.u == doctest::Approx(0.95).epsilon(1e-15));  // old w, not fresh
  CHECK(out.w == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(out.s == 0.0);
  NeuronState fired{1.0, 0.5, 1.0};
  NeuronState out2 = adlif_step(p, fired, 1.0);
  CHECK(out2.u == doctest::Approx(-0.05).epsilon(1e-14));  // 0.95 - theta
  CHECK(out2.w == doctest::Approx(1.9).epsilon(1e-15));    // + b*s
}

TEST_CASE("adlif clamps: decays into their bands, a sign split by variant") {
  AdLifParams p;
  p.alpha = 2.0;  // -> 0.96
  p.beta = 0.1;   // -> 0.36
  p.a = -5.0;     // -> -1 unconstrained
  NeuronState st{1.0, 1.0, 0.0};
  NeuronState out = adlif_step(p, st, 0.0);
  CHECK(out.u == doctest::Approx(0.96 * 1.0 + 0.04 * (0.0 - 1.0)).epsilon(1e-15));
  CHECK(out.w == doctest::Approx(0.36 * 1.0 - 1.0).epsilon(1e-15));
  AdLifParams c = cadlif_defaults();
  c.alpha = 0.9;
  c.beta = 0.36;
  c.a = -5.0;  // constrained variant floors a at 0
  NeuronState outc = adlif_step(c, {1.0, 1.0, 0.0}, 0.0);
  CHECK(outc.w == doctest::Approx(0.36).epsilon(1e-15));
}

TEST_CASE("adlif init respects the variant's coupling range") {
  Rng rng(17, stream::kNeuron);
  for (const auto& p : init_adlif(rng, 2000, false)) {
    CHECK(p.alpha >= 0.36);
    CHECK(p.alpha <= 0.96);
    CHECK(p.beta >= 0.36);
    CHECK(p.beta <= 0.98);
    CHECK(p.a >= -1.0);
    CHECK(p.a <= 1.0);
  }
  bool saw_negative = false;
  Rng rng2(17, stream::kNeuron);
  for (const auto& p : init_adlif(rng2, 2000, true)) {
    CHECK(p.a >= 0.0);
    saw_negative |= p.a < 0.0;
  }
  CHECK_FALSE(saw_negative);
}

TEST_CASE("rf step and transition") {
  RfParams p{-1.0, 2.0, 0.5};
  RfState st{{1.0, 1.0}, 1.0};
  RfState out = rf_step(p, st, 3.0);
  // u + dt*(alpha*u + i) - theta*s with alpha*u = -3 + i
  CHECK(out.u.real() == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(out.u.imag() == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(out.s == 0.0);
  Complex64 tr = rf_transition(p);
  CHECK(tr == Complex64(0.5, 1.0));
}

TEST_CASE("rf spikes on the real part only") {
  RfParams p{0.0, 0.0, 1.0};
  RfState st{{0.0, 5.0}, 0.0};
  RfState out = rf_step(p, st, 1.0);
  CHECK(out.u.real() == doctest::Approx(1.0));
  CHECK(out.s == 1.0);
  RfState imag_only = rf_step(p, {{0.0, 5.0}, 0.0}, 0.0);
  CHECK(imag_only.s == 0.0);
}

TEST_CASE("rf init ranges") {
  Rng rng(19, stream::kNeuron);
  for (const auto& p : init_rf(rng, 2000)) {
    CHECK(p.alpha_real >= -1.0);
    CHECK(p.alpha_real <= -0.1);
    CHECK(p.alpha_img >= 0.0);
    CHECK(p.alpha_img <= std::numbers::pi);
    CHECK(p.dt == 0.04);
  }
  CHECK_THROWS_AS(init_rf(rng, 4, 0.0), ParameterRangeError);
}

TEST_CASE("adlif subthreshold export reads off the update rows") {
  AdLifParams p;
  p.alpha = 0.9;
  p.beta = 0.8;
  p.a = 0.5;
  SsmMatrices m = subthreshold_matrices(p);
  Eigen::Matrix2d want;
  want << 0.9, -0.1, 0.5, 0.8;
  CHECK((m.a_bar - want).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(m.b_bar(0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(m.b_bar(1) == 0.0);
  CHECK(m.c_bar(0) == 1.0);
  CHECK(m.c_bar(1) == 0.0);
  CHECK(m.d_bar == 0.0);
}

TEST_CASE("silif subthreshold export folds the in-step w update") {
  SiLifParams p;
  p.a = 0.5;
  auto [alpha, beta] = silif_decays(p);
  SsmMatrices m = subthreshold_matrices(p);
  CHECK(m.a_bar(0, 0) == doctest::Approx(alpha - (1 - alpha) * 0.5).epsilon(1e-15));
  CHECK(m.a_bar(0, 1) == doctest::Approx(-(1 - alpha) * beta).epsilon(1e-15));
  CHECK(m.a_bar(1, 0) == 0.5);
  CHECK(m.a_bar(1, 1) == doctest::Approx(beta).epsilon(1e-15));
}

TEST_CASE("subthreshold ssm replays the silif recursion exactly") {
  Rng rng(23, stream::kNeuron);
  auto ps = init_silif(rng, 16);
  Rng drive(23, stream::kSynthesis);
  for (const auto& p : ps) {
    SsmMatrices m = subthreshold_matrices(p);
    std::vector<double> input(200);
    for (auto& x : input) x = drive.uniform(-1.0, 1.0);
    auto y = ssm_run(m, input);
    NeuronState st;
    double worst = 0.0;
    for (std::size_t t = 0; t < input.size(); ++t) {
      st = silif_step(p, st, input[t], kQuietTheta);
      REQUIRE(std::isfinite(st.u));
      worst = std::max(worst, std::abs(st.u - y[t]));
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("subthreshold ssm replays the adlif recursion exactly") {
  // a finite far-away threshold: theta = inf would turn the -theta*s reset
  // into inf*0 = nan, and max(0, nan) keeps 0, silently comparing nothing.
  // the error is relative because a < 0 draws can be subthreshold-unstable
  // (spectral radius above one), so trajectories grow and roundoff grows
  // with them; silif above holds an absolute bound since its a >= 0 keeps
  // the coupled system contractive.
  Rng rng(29, stream::kNeuron);
  auto ps = init_adlif(rng, 16);
  Rng drive(29, stream::kSynthesis);
  for (const auto& p : ps) {
    SsmMatrices m = subthreshold_matrices(p);
    std::vector<double> input(200);
    for (auto& x : input) x = drive.uniform(-1.0, 1.0);
    auto y = ssm_run(m, input);
    NeuronState st;
    double worst = 0.0;
    for (std::size_t t = 0; t < input.size(); ++t) {
      st = adlif_step(p, st, input[t], kQuietTheta);
      REQUIRE(std::isfinite(st.u));
      worst = std::max(worst, std::abs(st.u - y[t]) / std::max(1.0, std::abs(y[t])));
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("coupled transition layout") {
  Eigen::Matrix2d m = coupled_transition(0.9, 0.8, 0.5);
  CHECK(m(0, 0) == 0.9);
  CHECK(m(0, 1) == doctest::Approx(-0.1).epsilon(1e-15));
  CHECK(m(1, 0) == 0.5);
  CHECK(m(1, 1) == 0.8);
}

TEST_CASE("complex step equals the rotation-matrix pair") {
  // one csilif draw iterated both as complex arithmetic and as the real
  // 2x2 [[re, -im], [im, re]] acting on (Re u, Im u)
  Rng rng(31, stream::kNeuron);
  auto ps = init_csilif(rng, 8, 0.01, 0.5);
  Rng drive(31, stream::kSynthesis);
  for (const auto& p : ps) {
    const Complex64 alpha = csilif_alpha(p);
    CSiLifState st;
    Eigen::Vector2d v(0.0, 0.0);
    Eigen::Matrix2d rot;
    rot << alpha.real(), -alpha.imag(), alpha.imag(), alpha.real();
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const double x = drive.uniform(-1.0, 1.0);
      st = csilif_step(p, st, x, kInf);
      v = rot * v + Eigen::Vector2d(p.b * x, 0.0);
      worst = std::max({worst, std::abs(st.u.real() - v(0)),
                        std::abs(st.u.imag() - v(1))});
    }
    CHECK(worst < 1e-14);
  }
}
