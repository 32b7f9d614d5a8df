#include "agp/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace agp {

int default_walker_count(int d) { return 2 * std::max(2 * (d + 1), 16); }

namespace {

void validate_ensemble(const Ensemble& e) {
  if (e.count() < 4 || e.count() % 2 != 0)
    throw std::invalid_argument("Ensemble: walker count must be even and >= 4");
}

}  // namespace

Ensemble make_ensemble(const BoxDomain& box, int count, const LogDensity& logpdf,
                       RandomStream rng) {
  Ensemble e;
  e.box = box;
  e.rng = rng;
  e.walkers = latin_hypercube(box, count, e.rng);
  e.log_density.resize(count);
  for (int i = 0; i < count; ++i) e.log_density[i] = logpdf(e.walkers.row(i).transpose());
  validate_ensemble(e);
  return e;
}

Ensemble make_ensemble_at(const BoxDomain& box, const MatrixXd& walkers,
                          const LogDensity& logpdf, RandomStream rng) {
  Ensemble e;
  e.box = box;
  e.rng = rng;
  e.walkers = walkers;
  e.log_density.resize(walkers.rows());
  for (int i = 0; i < walkers.rows(); ++i)
    e.log_density[i] = logpdf(e.walkers.row(i).transpose());
  validate_ensemble(e);
  return e;
}

double stretch_z_density(double z, double a) {
  if (z < 1.0 / a || z > a) return 0.0;
  const double norm = 2.0 * (std::sqrt(a) - 1.0 / std::sqrt(a));
  return 1.0 / (std::sqrt(z) * norm);
}

double stretch_sample_z(RandomStream& rng, double a) {
  const double u = rng.uniform01();
  const double sq = 1.0 / std::sqrt(a) + u * (std::sqrt(a) - 1.0 / std::sqrt(a));
  return sq * sq;
}

double log_accept_stretch(int d, double z, double logp_prop, double logp_cur) {
  return (d - 1) * std::log(z) + logp_prop - logp_cur;
}

double log_accept_metropolis(double logp_prop, double logp_cur) {
  return logp_prop - logp_cur;
}

void ensemble_step(Ensemble& e, const LogDensity& logpdf) {
  validate_ensemble(e);
  const int n = e.count();
  const int d = e.dim();
  const int half = n / 2;
  const double gamma = 2.38 / std::sqrt(2.0 * d);
  bool finite_box = true;
  for (int a = 0; a < d; ++a)
    if (!std::isfinite(e.box.lo[a]) || !std::isfinite(e.box.hi[a])) finite_box = false;

  for (int block = 0; block < 2; ++block) {
    const int lo = block * half;
    const int other = (1 - block) * half;

    // Differential-evolution jitter scale from the frozen complementary half.
    VectorXd span(d);
    for (int a = 0; a < d; ++a) {
      const auto col = e.walkers.col(a).segment(other, half);
      span[a] = std::max(col.maxCoeff() - col.minCoeff(), 1e-12);
    }

    for (int i = lo; i < lo + half; ++i) {
      ++e.proposed;
      const VectorXd x = e.walkers.row(i).transpose();
      VectorXd prop(d);
      double log_accept;

      const double move = e.rng.uniform01();
      if (move < kStretchWeight) {
        const int c = other + static_cast<int>(e.rng.uniform_index(half));
        const VectorXd xc = e.walkers.row(c).transpose();
        const double z = stretch_sample_z(e.rng, kStretchScale);
        prop = xc + z * (x - xc);
        const double lp = e.box.contains(prop) ? logpdf(prop) : -kInf;
        if (std::isnan(lp)) {
          ++e.nan_rejected;
          continue;
        }
        log_accept = log_accept_stretch(d, z, lp, e.log_density[i]);
        if (std::log(e.rng.uniform01() + 1e-300) < log_accept) {
          e.walkers.row(i) = prop.transpose();
          e.log_density[i] = lp;
          ++e.accepted;
        }
      } else if (finite_box && move < kStretchWeight + kIndependenceWeight) {
        // Flat independence proposal: uniform density cancels in the
        // Metropolis-Hastings ratio.
        for (int a = 0; a < d; ++a) prop[a] = e.rng.uniform(e.box.lo[a], e.box.hi[a]);
        const double lp = logpdf(prop);
        if (std::isnan(lp)) {
          ++e.nan_rejected;
          continue;
        }
        log_accept = log_accept_metropolis(lp, e.log_density[i]);
        if (std::log(e.rng.uniform01() + 1e-300) < log_accept) {
          e.walkers.row(i) = prop.transpose();
          e.log_density[i] = lp;
          ++e.accepted;
        }
      } else {
        int r1 = static_cast<int>(e.rng.uniform_index(half));
        int r2 = static_cast<int>(e.rng.uniform_index(half - 1));
        if (r2 >= r1) ++r2;
        const VectorXd diff =
            (e.walkers.row(other + r1) - e.walkers.row(other + r2)).transpose();
        prop = x + gamma * diff;
        for (int a = 0; a < d; ++a) prop[a] += 1e-5 * span[a] * e.rng.normal();
        const double lp = e.box.contains(prop) ? logpdf(prop) : -kInf;
        if (std::isnan(lp)) {
          ++e.nan_rejected;
          continue;
        }
        log_accept = log_accept_metropolis(lp, e.log_density[i]);
        if (std::log(e.rng.uniform01() + 1e-300) < log_accept) {
          e.walkers.row(i) = prop.transpose();
          e.log_density[i] = lp;
          ++e.accepted;
        }
      }
    }
  }
}

std::pair<std::vector<ParamPoint>, Ensemble> draw_from_logpdf(const LogDensity& logpdf,
                                                              Ensemble e, int n,
                                                              int warmup) {
  for (int w = 0; w < warmup; ++w) ensemble_step(e, logpdf);
  std::vector<ParamPoint> out;
  out.reserve(n);
  while (static_cast<int>(out.size()) < n) {
    ensemble_step(e, logpdf);
    for (int i = 0; i < e.count() && static_cast<int>(out.size()) < n; ++i)
      out.push_back(e.walkers.row(i).transpose());
  }
  return {std::move(out), std::move(e)};
}

std::pair<std::vector<ParamPoint>, Ensemble> draw(const Measurement& meas,
                                                  const PriorBox& prior,
                                                  const SurrogateModel& model, int n,
                                                  int warmup, Ensemble e0) {
  LogDensity logpdf = [&meas, &prior, &model](const ParamPoint& p) {
    return log_posterior_unnorm(meas, prior, model, p);
  };
  return draw_from_logpdf(logpdf, std::move(e0), n, warmup);
}

std::vector<ParamPoint> SampleChain::points() const {
  std::vector<ParamPoint> v;
  v.reserve(samples.size());
  for (const auto& s : samples) v.push_back(s.point);
  return v;
}

MatrixXd SampleChain::points_matrix() const {
  if (samples.empty()) return MatrixXd(0, 0);
  MatrixXd m(size(), samples[0].point.size());
  for (int i = 0; i < size(); ++i) m.row(i) = samples[i].point.transpose();
  return m;
}

SampleChain update_chain(SampleChain chain, const std::vector<ParamPoint>& fresh, int h,
                         int iteration, bool* clamped) {
  if (clamped) *clamped = false;
  if (h > chain.size()) {
    h = chain.size();
    if (clamped) *clamped = true;
  }
  chain.samples.erase(chain.samples.begin(), chain.samples.begin() + h);
  for (const auto& p : fresh) chain.samples.push_back({iteration, p});
  return chain;
}

std::pair<int, int> sample_schedule(const SamplingSchedule& s, int j) {
  if (j < 1 || j > s.iterations + 1)
    throw std::out_of_range("sample_schedule: iteration out of range");
  if (s.every == 2 && j % 2 == 0) return {0, 0};
  const double t = static_cast<double>(j - 1) / s.iterations;
  const int n = static_cast<int>(std::llround(s.draw_base + s.draw_growth * t * t));
  int h = static_cast<int>(std::llround(s.discard_base + s.discard_growth * t * t));
  if (j == 1) h = 0;
  return {n, h};
}

SamplingSchedule schedule_for_problem(const std::string& problem_id) {
  SamplingSchedule s;
  if (problem_id == "synthetic2d") {
    s = {13, 1600, 14400, 1600, 6400, 1};
  } else if (problem_id == "diffusion3d") {
    s = {15, 2400, 21600, 2400, 9600, 1};
  } else if (problem_id == "poisson4d") {
    s = {20, 3200, 28800, 3200, 11800, 2};
  } else {
    throw std::invalid_argument("schedule_for_problem: unknown problem " + problem_id);
  }
  return s;
}

}  // namespace agp
