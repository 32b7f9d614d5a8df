#include "agp/forward_models.hpp"

#include <doctest.h>

#include <cmath>

using namespace agp;

TEST_SUITE_BEGIN("forward_models");

TEST_CASE("synthetic2d closed-form values") {
  ParamPoint origin = VectorXd::Zero(2);
  const VectorXd at0 = eval_synthetic_2d(origin);
  REQUIRE(at0.size() == 3);
  // L(0,0) = 0, phi(0,0) = 0.2 sin(-2)
  for (int i = 0; i < 3; ++i) CHECK(at0[i] == doctest::Approx(-0.18185948536513635).epsilon(1e-12));

  // row k=0 is [1, -1]: cancels at x = y, leaving phi alone
  ParamPoint p(2);
  p << 0.1, 0.1;
  const VectorXd v = eval_synthetic_2d(p);
  const double phi = (std::sin(20 * 0.1 - 2) + std::sin(20 * 0.1 - 2)) / 10.0;
  CHECK(v[0] == doctest::Approx(phi).epsilon(1e-14));

  CHECK_THROWS_AS(eval_synthetic_2d(VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("diffusion3d closed-form values and symmetry") {
  ParamPoint x0 = VectorXd::Zero(3);
  CHECK(eval_diffusion_3d(1.0, Eigen::Vector3d(1, 0, 0), x0) ==
        doctest::Approx(0.017482823917577467).epsilon(1e-12));
  // zero exponent at the source
  ParamPoint src(3);
  src << 0.2, -0.1, 0.3;
  CHECK(eval_diffusion_3d(0.7, Eigen::Vector3d(0.2, -0.1, 0.3), src) ==
        doctest::Approx(std::pow(4.0 * M_PI * 0.7, -1.5)).epsilon(1e-14));
  // symmetric sensors give equal values for x0 = 0
  CHECK(eval_diffusion_3d(0.5, Eigen::Vector3d(0, 1, 0), x0) ==
        doctest::Approx(eval_diffusion_3d(0.5, Eigen::Vector3d(0, -1, 0), x0)));
  CHECK_THROWS_AS(eval_diffusion_3d(0.0, Eigen::Vector3d(1, 0, 0), x0), std::domain_error);
}

TEST_CASE("poisson4d closed-form values, antisymmetry, singularity") {
  const Eigen::Vector2d x(1, 0), zero(0, 0), half(0.5, 0);
  CHECK(eval_poisson_4d(x, zero, half) == doctest::Approx(-std::log(2.0)).epsilon(1e-14));
  // equidistant sources cancel
  CHECK(eval_poisson_4d(x, Eigen::Vector2d(0, 0.3), Eigen::Vector2d(0, -0.3)) ==
        doctest::Approx(0.0));
  // swapping sources negates the field
  CHECK(eval_poisson_4d(x, zero, half) == doctest::Approx(-eval_poisson_4d(x, half, zero)));
  CHECK_THROWS_AS(eval_poisson_4d(x, x, zero), std::domain_error);
}

TEST_CASE("model registry: output dimensions and purity") {
  const struct {
    const char* id;
    int d, m;
  } cases[] = {{"synthetic2d", 2, 3}, {"diffusion3d", 3, 18}, {"poisson4d", 4, 12}};
  for (const auto& c : cases) {
    const ForwardModel fm = make_forward_model(c.id);
    CHECK(fm.dim_param == c.d);
    CHECK(fm.dim_out == c.m);
    const ParamPoint p = 0.25 * VectorXd::Ones(c.d);
    const VectorXd v1 = fm.eval_exact(p);
    const VectorXd v2 = fm.eval_exact(p);
    REQUIRE(v1.size() == c.m);
    CHECK((v1 - v2).norm() == 0.0);
  }
  CHECK_THROWS_AS(make_forward_model("nope"), std::invalid_argument);
  const ForwardModel fm = make_forward_model("synthetic2d");
  CHECK_THROWS_AS(fm.eval_exact(VectorXd::Ones(2)), std::domain_error);
}

TEST_CASE("simulated evaluator: determinism, invalid tolerance, noise statistics") {
  const ForwardModel fm = make_forward_model("synthetic2d");
  ParamPoint p(2);
  p << 0.1, -0.2;

  SimulatedEvaluator e1(fm, 123), e2(fm, 123);
  CHECK((e1.eval_with_tolerance(p, 0.05) - e2.eval_with_tolerance(p, 0.05)).norm() == 0.0);
  CHECK_THROWS_AS(e1.eval_with_tolerance(p, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(e1.eval_with_tolerance(VectorXd::Ones(2), 0.05), std::domain_error);

  // Monte Carlo: componentwise error mean -> 0 at rate tau/sqrt(N) and sample
  // variance -> tau^2, both within 3 standard errors.
  const double tau = 0.05;
  const int n = 100000;
  const VectorXd exact = fm.eval_exact(p);
  SimulatedEvaluator ev(fm, 2024);
  double acc = 0.0, acc2 = 0.0;
  long count = 0;
  for (int i = 0; i < n; ++i) {
    const VectorXd err = ev.eval_with_tolerance(p, tau) - exact;
    for (int j = 0; j < err.size(); ++j) {
      acc += err[j];
      acc2 += err[j] * err[j];
      ++count;
    }
  }
  const double mean = acc / count;
  const double var = acc2 / count - mean * mean;
  CHECK(std::abs(mean) <= 3.0 * tau / std::sqrt(static_cast<double>(count)));
  const double var_se = tau * tau * std::sqrt(2.0 / (count - 1.0));
  CHECK(std::abs(var - tau * tau) <= 3.0 * var_se);
}

TEST_SUITE_END();
