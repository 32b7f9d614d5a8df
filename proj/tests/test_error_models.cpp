#include "agp/error_models.hpp"

#include "agp/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace agp;

TEST_SUITE_BEGIN("error_models");

namespace {

PredictiveDistribution make_pred(const VectorXd& mean, const VectorXd& gamma_diag) {
  PredictiveDistribution p;
  p.mean = mean;
  p.covariance = MatrixXd(gamma_diag.asDiagonal());
  return p;
}

}  // namespace

TEST_CASE("psi_bar arithmetic") {
  Measurement meas;
  meas.noise_std = 1.0;
  meas.y = VectorXd::Zero(1);

  CHECK(psi_bar(meas, make_pred(VectorXd::Zero(1), VectorXd::Zero(1))) == doctest::Approx(0.0));
  CHECK(psi_bar(meas, make_pred(VectorXd::Zero(1), VectorXd::Ones(1))) == doctest::Approx(1.0));
  // tr = 1, residual 2: 1 + 2 * sqrt(1) = 3
  CHECK(psi_bar(meas, make_pred(VectorXd::Constant(1, 2.0), VectorXd::Ones(1))) ==
        doctest::Approx(3.0));
}

TEST_CASE("indicators: zero at zero variance, arithmetic, saturation") {
  Measurement meas;
  meas.noise_std = 1.0;
  meas.y = VectorXd::Zero(1);

  const auto zero = make_pred(VectorXd::Constant(1, 0.5), VectorXd::Zero(1));
  CHECK(indicator(ErrorModelKind::KL, meas, zero) == 0.0);
  CHECK(indicator(ErrorModelKind::L2, meas, zero) == 0.0);

  // psi = 1 at Gamma = 1, ybar = y^m: KL -> e, L2 -> e
  const auto unit = make_pred(VectorXd::Zero(1), VectorXd::Ones(1));
  CHECK(indicator(ErrorModelKind::KL, meas, unit) == doctest::Approx(std::exp(1.0)));
  CHECK(indicator(ErrorModelKind::L2, meas, unit) == doctest::Approx(std::exp(1.0)));

  // overflow guard saturates with a flag
  Measurement tight;
  tight.noise_std = 1e-3;
  tight.y = VectorXd::Zero(1);
  const auto huge = make_pred(VectorXd::Zero(1), VectorXd::Ones(1));
  const IndicatorValue v = indicator_ex(ErrorModelKind::KL, tight, huge);
  CHECK(v.saturated);
  CHECK(std::isfinite(v.value));
  CHECK(v.value > 0.0);
}

TEST_CASE("jacobian: zero-residual form and PSD structure") {
  Measurement meas;
  meas.noise_std = 0.5;
  meas.y = VectorXd::Constant(2, 0.3);
  const auto pred = make_pred(meas.y, VectorXd::Constant(2, 0.1));
  const double psi = psi_bar(meas, pred);
  const MatrixXd jac = indicator_jacobian(ErrorModelKind::KL, meas, pred);
  // residual = 0 kills the sqrt term: exp(psi)(1 + psi) Sigma^{-2}
  const double expected = std::exp(psi) * (1.0 + psi) / (0.5 * 0.5);
  CHECK(jac(0, 0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(jac(0, 1) == 0.0);

  // both Jacobians have nonnegative diagonals (PSD as scalar * Sigma^{-2} + scalar * I)
  RandomStream rng(5);
  for (int t = 0; t < 20; ++t) {
    Measurement m2;
    m2.noise_std = rng.uniform(0.3, 2.0);
    m2.y = rng.normal_vector(3);
    const auto p2 = make_pred(rng.normal_vector(3),
                              VectorXd::Constant(3, rng.uniform(0.01, 1.0)));
    for (auto kind : {ErrorModelKind::KL, ErrorModelKind::L2}) {
      const MatrixXd j = indicator_jacobian(kind, m2, p2);
      for (int a = 0; a < 3; ++a) CHECK(j(a, a) >= 0.0);
    }
  }
}

TEST_CASE("jacobian trace floor handles the Gamma = 0 singularity") {
  Measurement meas;
  meas.noise_std = 1.0;
  meas.y = VectorXd::Constant(1, 1.0);  // nonzero residual
  const auto pred = make_pred(VectorXd::Zero(1), VectorXd::Zero(1));
  const MatrixXd jac = indicator_jacobian(ErrorModelKind::KL, meas, pred);
  CHECK(std::isfinite(jac(0, 0)));
}

TEST_CASE("monotonicity: growing Gamma never decreases the indicators") {
  RandomStream rng(17);
  for (int t = 0; t < 20; ++t) {
    Measurement meas;
    meas.noise_std = rng.uniform(0.5, 1.5);
    meas.y = rng.normal_vector(2);
    const VectorXd mean = rng.normal_vector(2);
    VectorXd g = VectorXd::Constant(2, rng.uniform(0.01, 0.5));
    const VectorXd step = VectorXd::Constant(2, rng.uniform(0.01, 0.2));
    for (auto kind : {ErrorModelKind::KL, ErrorModelKind::L2}) {
      double prev = indicator(kind, meas, make_pred(mean, g));
      for (int k = 1; k <= 4; ++k) {
        const double cur = indicator(kind, meas, make_pred(mean, g + k * step));
        CHECK(cur >= prev - 1e-12);
        prev = cur;
      }
    }
  }
}

TEST_CASE("error model estimate: mean semantics") {
  Kernel k;
  k.lengthscales = VectorXd::Constant(1, 0.5);
  k.component_variances = VectorXd::Constant(1, 1.0);
  TrainingData data;
  ParamPoint p0(1);
  p0 << 0.5;
  data.design.add(p0, 1e-7);
  data.values.push_back(VectorXd::Constant(1, 0.0));
  const SurrogateModel model = SurrogateModel::fit(k, data);
  Measurement meas;
  meas.noise_std = 1.0;
  meas.y = VectorXd::Zero(1);

  // all samples at the (noiseless) training point: Gamma ~ 0 -> estimate ~ 0
  std::vector<ParamPoint> at_point(10, p0);
  CHECK(error_model_estimate(ErrorModelKind::KL, meas, model, at_point) ==
        doctest::Approx(0.0).epsilon(1e-10));

  // duplicating the sample list leaves the mean unchanged
  std::vector<ParamPoint> mixed;
  for (double x : {0.1, 0.45, 0.8}) {
    ParamPoint p(1);
    p << x;
    mixed.push_back(p);
  }
  std::vector<ParamPoint> doubled = mixed;
  doubled.insert(doubled.end(), mixed.begin(), mixed.end());
  const double e1 = error_model_estimate(ErrorModelKind::L2, meas, model, mixed);
  const double e2 = error_model_estimate(ErrorModelKind::L2, meas, model, doubled);
  CHECK(e1 == doctest::Approx(e2).epsilon(1e-14));
  CHECK_THROWS_AS(error_model_estimate(ErrorModelKind::L2, meas, model, {}),
                  std::invalid_argument);
}

TEST_CASE("error model estimate agrees with quadrature on a 1D toy") {
  // E(D) = integral of pi_D * e over the box, estimated by MC over posterior
  // samples versus direct grid quadrature.
  Kernel k;
  k.lengthscales = VectorXd::Constant(1, 0.3);
  k.component_variances = VectorXd::Constant(1, 0.5);
  TrainingData data;
  RandomStream rng(31);
  for (double x : {0.15, 0.5, 0.85}) {
    ParamPoint p(1);
    p << x;
    data.design.add(p, 0.15);
    data.values.push_back(VectorXd::Constant(1, std::sin(3.0 * x)));
  }
  const SurrogateModel model = SurrogateModel::fit(k, data);
  Measurement meas;
  meas.noise_std = 0.4;
  meas.y = VectorXd::Constant(1, 0.6);
  const PriorBox prior{BoxDomain::cube(1, 0.0, 1.0)};

  // quadrature of pi_D-weighted indicator
  const int n = 4001;
  const double h = 1.0 / (n - 1);
  double z = 0.0, integral = 0.0;
  VectorXd mean, var;
  for (int i = 0; i < n; ++i) {
    ParamPoint p(1);
    p << i * h;
    const double w = (i == 0 || i == n - 1 ? 0.5 : 1.0) * h;
    const double dens = std::exp(log_posterior_unnorm(meas, prior, model, p));
    model.predict_diag(p, mean, var);
    PredictiveDistribution pred;
    pred.mean = mean;
    pred.covariance = MatrixXd(var.asDiagonal());
    z += w * dens;
    integral += w * dens * indicator(ErrorModelKind::KL, meas, pred);
  }
  const double quad = integral / z;

  // MC over direct draws from the 1D posterior by inverse-CDF sampling
  const int ns = 10000;
  VectorXd cdf(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    ParamPoint p(1);
    p << i * h;
    acc += std::exp(log_posterior_unnorm(meas, prior, model, p)) * h;
    cdf[i] = acc;
  }
  std::vector<ParamPoint> samples;
  std::vector<double> values;
  for (int s = 0; s < ns; ++s) {
    const double u = rng.uniform01() * acc;
    int lo = 0, hi = n - 1;
    while (lo < hi) {
      const int mid = (lo + hi) / 2;
      if (cdf[mid] < u)
        lo = mid + 1;
      else
        hi = mid;
    }
    ParamPoint p(1);
    p << lo * h;
    samples.push_back(p);
    model.predict_diag(p, mean, var);
    PredictiveDistribution pred;
    pred.mean = mean;
    pred.covariance = MatrixXd(var.asDiagonal());
    values.push_back(indicator(ErrorModelKind::KL, meas, pred));
  }
  const double mc = error_model_estimate(ErrorModelKind::KL, meas, model, samples);
  double var_mc = 0.0, mean_mc = 0.0;
  for (double v : values) mean_mc += v;
  mean_mc /= ns;
  for (double v : values) var_mc += (v - mean_mc) * (v - mean_mc);
  var_mc /= (ns - 1.0);
  const double se = std::sqrt(var_mc / ns);
  CHECK(std::abs(mc - quad) <= 3.0 * se + 1e-12);
}

TEST_CASE("verify_kl_bound: exact surrogate gives zero KL and nonnegative bound") {
  auto forward = [](double p) { return 0.8 * p - 0.2; };
  Measurement meas;
  meas.noise_std = 0.25;
  meas.y = VectorXd::Constant(1, 0.1);

  Kernel k;
  k.lengthscales = VectorXd::Constant(1, 0.4);
  k.component_variances = VectorXd::Constant(1, 1.0);
  TrainingData data;
  for (int i = 0; i <= 12; ++i) {
    ParamPoint p(1);
    p << i / 12.0;
    data.design.add(p, 1e-6);
    data.values.push_back(VectorXd::Constant(1, forward(p[0])));
  }
  const SurrogateModel model = SurrogateModel::fit(k, data);

  KlBoundToy toy;
  toy.forward = forward;
  toy.box = BoxDomain::cube(1, 0.0, 1.0);
  toy.meas = meas;
  toy.model = &model;
  toy.grid_n = 8001;
  toy.lemma_draws = 50000;
  toy.seed = 7;
  const KlBoundReport rep = verify_kl_bound(toy);
  CHECK(rep.bound_holds);
  CHECK(rep.lemma_holds);
  CHECK(rep.kl >= -1e-9);
  CHECK(rep.kl <= 1e-3);  // near-exact surrogate, residual interpolation error
  CHECK(rep.bound >= -1e-9);
  CHECK(rep.alpha == doctest::Approx(1.0).epsilon(0.05));
}

TEST_SUITE_END();
