#include "agp/gp.hpp"

#include "agp/rng.hpp"
#include "agp/serialize.hpp"

#include <doctest.h>

#include <cmath>

using namespace agp;

TEST_SUITE_BEGIN("gp");

namespace {

Kernel simple_kernel(int d, int m, double len = 1.0, double var = 1.0) {
  Kernel k;
  k.lengthscales = VectorXd::Constant(d, len);
  k.component_variances = VectorXd::Constant(m, var);
  return k;
}

TrainingData make_data(RandomStream& rng, const Kernel& k, int s, double tau_lo = 0.05,
                         double tau_hi = 0.5) {
  TrainingData data;
  for (int i = 0; i < s; ++i) {
    ParamPoint p(k.dim());
    for (int a = 0; a < k.dim(); ++a) p[a] = rng.uniform(-1.0, 1.0);
    data.design.add(p, rng.uniform(tau_lo, tau_hi));
    data.values.push_back(rng.normal_vector(k.out_dim()));
  }
  return data;
}

}  // namespace

TEST_CASE("kernel evaluation") {
  const Kernel k = simple_kernel(1, 1);
  ParamPoint a(1), b(1);
  a << 0.0;
  b << 1.0;
  CHECK(kernel_eval(k, a, a)(0, 0) == doctest::Approx(1.0));
  CHECK(kernel_eval(k, a, b)(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  b << 40.0;
  CHECK(kernel_eval(k, a, b)(0, 0) < 1e-300);

  Kernel km = simple_kernel(2, 3, 0.5, 2.0);
  ParamPoint p2 = VectorXd::Zero(2);
  const MatrixXd km_eval = kernel_eval(km, p2, p2);
  CHECK(km_eval.rows() == 3);
  CHECK(km_eval(1, 1) == doctest::Approx(2.0));
  CHECK(km_eval(0, 1) == 0.0);
  CHECK_THROWS_AS(kappa(km, VectorXd::Zero(3), p2), std::invalid_argument);
}

TEST_CASE("design merge semantics") {
  Design d;
  ParamPoint p(2);
  p << 0.3, 0.4;
  const int i0 = d.add(p, 0.5);
  ParamPoint q = p;
  q[0] += 5e-10;  // inside the merge threshold
  const int i1 = d.add(q, 0.2);
  CHECK(i0 == i1);
  CHECK(d.size() == 1);
  CHECK(d.entries[0].tolerance == 0.2);  // keep-best
  CHECK_THROWS_AS(d.add(p, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(d.add(p, kInf), std::invalid_argument);
}

TEST_CASE("empty design predicts the prior") {
  const Kernel k = simple_kernel(2, 2, 1.0, 1.5);
  const SurrogateModel m = SurrogateModel::fit(k, TrainingData{});
  const PredictiveDistribution pred = m.predict(VectorXd::Zero(2));
  CHECK(pred.mean.norm() == 0.0);
  CHECK(pred.covariance(0, 0) == doctest::Approx(1.5));
  CHECK(pred.covariance(1, 1) == doctest::Approx(1.5));
  CHECK(m.mean_pred_std(VectorXd::Zero(2)) == doctest::Approx(std::sqrt(1.5)));
}

TEST_CASE("near-noiseless single point interpolates") {
  const Kernel k = simple_kernel(1, 1);
  TrainingData data;
  ParamPoint p(1);
  p << 0.3;
  data.design.add(p, 1e-7);
  data.values.push_back(VectorXd::Constant(1, 2.5));
  const SurrogateModel m = SurrogateModel::fit(k, data);
  const PredictiveDistribution pred = m.predict(p);
  CHECK(pred.mean[0] == doctest::Approx(2.5).epsilon(1e-10));
  CHECK(pred.covariance(0, 0) < 1e-12);

  // far from the data the prior is recovered
  ParamPoint far(1);
  far << 30.0;
  const PredictiveDistribution prior = m.predict(far);
  CHECK(prior.mean[0] == doctest::Approx(0.0));
  CHECK(prior.covariance(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("random instance matches a dense direct-solve oracle") {
  RandomStream rng(314);
  const Kernel k = simple_kernel(1, 1, 0.8, 1.3);
  TrainingData data = make_data(rng, k, 2);
  const SurrogateModel m = SurrogateModel::fit(k, data);
  ParamPoint p(1);
  p << 0.2;

  const MatrixXd pts = data.design.points_matrix();
  MatrixXd K(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      K(i, j) = 1.3 * kappa(k, pts.row(i).transpose(), pts.row(j).transpose());
  MatrixXd A = K;
  for (int i = 0; i < 2; ++i)
    A(i, i) += data.design.entries[i].tolerance * data.design.entries[i].tolerance;
  VectorXd y(2);
  y << data.values[0][0], data.values[1][0];
  VectorXd kstar(2);
  for (int i = 0; i < 2; ++i) kstar[i] = 1.3 * kappa(k, pts.row(i).transpose(), p);
  const Eigen::FullPivLU<MatrixXd> lu(A);
  const double mean_oracle = kstar.dot(lu.solve(y));
  const double var_oracle = 1.3 - kstar.dot(lu.solve(kstar));

  const PredictiveDistribution pred = m.predict(p);
  CHECK(pred.mean[0] == doctest::Approx(mean_oracle).epsilon(1e-10));
  CHECK(pred.covariance(0, 0) == doctest::Approx(var_oracle).epsilon(1e-10));
}

TEST_CASE("block posterior formulation agrees with the predictive formulas") {
  // Gamma = (K^{-1} + T^{-2})^{-1} over the joint (training + prediction)
  // set, with infinite tolerance on the prediction point.
  RandomStream rng(271);
  const Kernel k = simple_kernel(2, 1, 0.7, 1.4);
  TrainingData data = make_data(rng, k, 3);
  const SurrogateModel m = SurrogateModel::fit(k, data);
  ParamPoint p(2);
  p << 0.15, -0.35;

  MatrixXd joint(4, 2);
  joint.topRows(3) = data.design.points_matrix();
  joint.row(3) = p.transpose();
  MatrixXd K(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      K(i, j) = 1.4 * kappa(k, joint.row(i).transpose(), joint.row(j).transpose());
  MatrixXd t_inv2 = MatrixXd::Zero(4, 4);
  VectorXd y_ext = VectorXd::Zero(4);
  for (int i = 0; i < 3; ++i) {
    const double tau = data.design.entries[i].tolerance;
    t_inv2(i, i) = 1.0 / (tau * tau);
    y_ext[i] = data.values[i][0];
  }
  const MatrixXd gamma_block = (K.inverse() + t_inv2).inverse();
  const VectorXd mean_block = gamma_block * (t_inv2 * y_ext);

  const PredictiveDistribution pred = m.predict(p);
  CHECK(pred.mean[0] == doctest::Approx(mean_block[3]).epsilon(1e-9));
  CHECK(pred.covariance(0, 0) == doctest::Approx(gamma_block(3, 3)).epsilon(1e-9));
}

TEST_CASE("dvariance_dtol: PSD diagonal, kernel decay, finite differences") {
  RandomStream rng(99);
  const Kernel k = simple_kernel(2, 2, 0.6, 1.2);
  TrainingData data = make_data(rng, k, 5);
  const SurrogateModel m = SurrogateModel::fit(k, data);

  ParamPoint p(2);
  p << 0.1, 0.2;
  for (int i = 0; i < 5; ++i) {
    const MatrixXd dv = m.dvariance_dtol(p, i);
    for (int j = 0; j < 2; ++j) CHECK(dv(j, j) >= 0.0);
  }
  CHECK_THROWS_AS(m.dvariance_dtol(p, 7), std::out_of_range);

  ParamPoint far(2);
  far << 50.0, 50.0;
  CHECK(m.dvariance_dtol(far, 0).norm() < 1e-250);

  // central finite differences in tau_i
  const int i = 2;
  const double tau = data.design.entries[i].tolerance;
  const double h = 1e-4 * tau;
  TrainingData up = data, dn = data;
  up.design.entries[i].tolerance = tau + h;
  dn.design.entries[i].tolerance = tau - h;
  VectorXd mu, vu, md, vd;
  SurrogateModel::fit(k, up).predict_diag(p, mu, vu);
  SurrogateModel::fit(k, dn).predict_diag(p, md, vd);
  const MatrixXd dv = m.dvariance_dtol(p, i);
  for (int j = 0; j < 2; ++j) {
    const double fd = (vu[j] - vd[j]) / (2.0 * h);
    CHECK(dv(j, j) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("variance monotonicity in data and tolerances") {
  RandomStream rng(555);
  const Kernel k = simple_kernel(2, 2, 0.7, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    TrainingData data = make_data(rng, k, 4);
    const SurrogateModel before = SurrogateModel::fit(k, data);

    TrainingData more = data;
    ParamPoint extra(2);
    extra << rng.uniform(-1, 1), rng.uniform(-1, 1);
    more.design.add(extra, rng.uniform(0.05, 0.5));
    more.values.push_back(rng.normal_vector(2));
    const SurrogateModel after = SurrogateModel::fit(k, more);

    TrainingData tighter = data;
    const int i = static_cast<int>(rng.uniform_index(4));
    tighter.design.entries[i].tolerance *= 0.5;
    const SurrogateModel refined = SurrogateModel::fit(k, tighter);

    for (int rep = 0; rep < 5; ++rep) {
      ParamPoint p(2);
      p << rng.uniform(-1, 1), rng.uniform(-1, 1);
      VectorXd mean_b, var_b, mean_a, var_a, mean_r, var_r;
      before.predict_diag(p, mean_b, var_b);
      after.predict_diag(p, mean_a, var_a);
      refined.predict_diag(p, mean_r, var_r);
      for (int j = 0; j < 2; ++j) {
        CHECK(var_a[j] <= var_b[j] + 1e-10);
        CHECK(var_r[j] <= var_b[j] + 1e-10);
        CHECK(var_b[j] <= k.component_variances[j]);
        CHECK(var_b[j] >= 0.0);
      }
    }
  }
}

TEST_CASE("hyperparameter tuning: ascent contract and recovery") {
  RandomStream rng(777);
  // sample a GP with lengthscale 0.3 on [0, 1]
  const int s = 40;
  Kernel truth = simple_kernel(1, 1, 0.3, 1.0);
  TrainingData data;
  MatrixXd pts(s, 1);
  RandomStream lhs_rng = rng.child("lhs");
  const MatrixXd lhs = latin_hypercube(BoxDomain::cube(1, 0.0, 1.0), s, lhs_rng);
  for (int i = 0; i < s; ++i) {
    data.design.add(lhs.row(i).transpose(), 0.01);
    pts.row(i) = lhs.row(i);
  }
  MatrixXd K = kappa_matrix(truth, pts);
  K.diagonal().array() += 1e-8;
  const Eigen::LLT<MatrixXd> llt(K);
  const VectorXd z = rng.normal_vector(s);
  const VectorXd y = llt.matrixL() * z;
  for (int i = 0; i < s; ++i) data.values.push_back(VectorXd::Constant(1, y[i] + 0.01 * rng.normal()));

  const Kernel init = simple_kernel(1, 1, 0.08, 0.5);
  const TuneResult res = tune_hyperparameters(data, init);
  CHECK(res.improved);
  CHECK(!res.degenerate);
  CHECK(res.kernel.lengthscales[0] >= 0.15);
  CHECK(res.kernel.lengthscales[0] <= 0.6);
  // ascent never returns something worse than the initial kernel
  CHECK(log_marginal_likelihood(res.kernel, data) >=
        log_marginal_likelihood(init, data) - 1e-9);

  CHECK_THROWS_AS(tune_hyperparameters(TrainingData{}, init), std::invalid_argument);
}

TEST_CASE("tuning scale equivariance: component variance scales quadratically") {
  RandomStream rng(888);
  const Kernel init = simple_kernel(2, 1, 0.4, 1.0);
  TrainingData data = make_data(rng, init, 12, 0.02, 0.1);

  const double c = 3.0;
  TrainingData scaled = data;
  for (auto& v : scaled.values) v *= c;
  for (auto& e : scaled.design.entries) e.tolerance *= c;
  Kernel init_scaled = init;
  init_scaled.component_variances *= c * c;

  const TuneResult base = tune_hyperparameters(data, init);
  const TuneResult scl = tune_hyperparameters(scaled, init_scaled);
  const double ratio = scl.kernel.component_variances[0] / base.kernel.component_variances[0];
  CHECK(ratio == doctest::Approx(c * c).epsilon(0.02));
  for (int a = 0; a < 2; ++a)
    CHECK(scl.kernel.lengthscales[a] ==
          doctest::Approx(base.kernel.lengthscales[a]).epsilon(0.02));
}

TEST_CASE("tuning flags degenerate data") {
  Kernel init = simple_kernel(1, 1);
  TrainingData data;
  ParamPoint p(1);
  p << 0.5;
  data.design.add(p, 0.1);
  data.values.push_back(VectorXd::Constant(1, 1.0));
  ParamPoint q(1);
  q << 0.5 + 2e-9;  // distinct entry, but spread below the degeneracy threshold
  data.design.add(q, 0.1);
  data.values.push_back(VectorXd::Constant(1, 1.1));
  const TuneResult res = tune_hyperparameters(data, init);
  CHECK(res.degenerate);
  CHECK(res.kernel.lengthscales[0] == init.lengthscales[0]);
}

TEST_CASE("kernel, design and training data serialize round-trip") {
  RandomStream rng(123);
  const Kernel k = simple_kernel(2, 3, 0.7, 1.9);
  TrainingData data = make_data(rng, k, 4);
  const Kernel k2 = kernel_from_json(to_json(k));
  CHECK((k2.lengthscales - k.lengthscales).norm() == 0.0);
  CHECK((k2.component_variances - k.component_variances).norm() == 0.0);
  const TrainingData d2 = training_data_from_json(to_json(data));
  REQUIRE(d2.size() == data.size());
  for (int i = 0; i < data.size(); ++i) {
    CHECK((d2.design.entries[i].point - data.design.entries[i].point).norm() == 0.0);
    CHECK(d2.design.entries[i].tolerance == data.design.entries[i].tolerance);
    CHECK((d2.values[i] - data.values[i]).norm() == 0.0);
  }
}

TEST_SUITE_END();
