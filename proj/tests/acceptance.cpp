// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 1-7 run the oracle/property checks; 8-11 execute the
// desk-scale 2D experiment and audit its outputs.

#include "agp/harness.hpp"
#include "agp/serialize.hpp"
#include "agp/verification.hpp"
#include "agp/work_model.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace agp;

namespace {

struct Criterion {
  int id;
  bool pass;
  std::string detail;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) return std::string("<missing:") + p.string() + ">";
  return std::string(std::istreambuf_iterator<char>(f), {});
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

ExperimentConfig desk_config() {
  ExperimentConfig cfg = default_config("synthetic2d");
  apply_desk_preset(cfg);
  return cfg;
}

Criterion from_check(int id, const CheckResult& r) { return {id, r.pass, r.name + ": " + r.detail}; }

// Criteria 8-10 evaluate the stored desk records.
std::vector<RunRecord> run_desk(const ExperimentConfig& cfg, const std::string& dir) {
  auto records = run_experiment(cfg, dir);
  write_reports((fs::path(dir) / "runs").string(), (fs::path(dir) / "report").string());
  return records;
}

Criterion criterion_audits(const ExperimentConfig& cfg, const std::vector<RunRecord>& records) {
  Criterion c{8, true, ""};
  int checked = 0;
  for (const auto& r : records) {
    ++checked;
    if (!r.audits_ok) {
      c.pass = false;
      c.detail = r.strategy.label() + " audit: " + r.audit_message;
      return c;
    }
    if (r.rows.empty() || r.rows.back().cumulative_work > r.total_budget + 1e-9) {
      c.pass = false;
      c.detail = r.strategy.label() + " exceeded its budget";
      return c;
    }
    // refinement partial order along the stored designs
    const WorkModel wm(r.strategy.work_exponent);
    for (size_t i = 1; i < r.designs.size(); ++i) {
      Design before, after;
      for (int k = 0; k < r.designs[i - 1].tolerances.size(); ++k)
        before.add(r.designs[i - 1].points.row(k).transpose(), r.designs[i - 1].tolerances[k]);
      for (int k = 0; k < r.designs[i].tolerances.size(); ++k)
        after.add(r.designs[i].points.row(k).transpose(), r.designs[i].tolerances[k]);
      try {
        if (refinement_cost(wm, after, before) < -1e-9) throw std::runtime_error("negative");
      } catch (const std::exception&) {
        c.pass = false;
        c.detail = r.strategy.label() + " violated refinement monotonicity at step " +
                   std::to_string(i);
        return c;
      }
    }
    // exact sliding-window bookkeeping
    long len = 0;
    for (int j = 1; j <= cfg.iterations + 1; ++j) {
      const auto [n, h] = sample_schedule(cfg.sampling, j);
      const long h_act = std::min<long>(h, len);
      if (n > 0) len += n - h_act;
      if (j <= static_cast<int>(r.rows.size()) && r.rows[j - 1].chain_size != len) {
        c.pass = false;
        c.detail = r.strategy.label() + " chain bookkeeping mismatch at iteration " +
                   std::to_string(j);
        return c;
      }
    }
  }
  c.detail = "all " + std::to_string(checked) +
             " desk runs pass refinement, budget and chain-length audits";
  return c;
}

Criterion criterion_direction(const std::vector<RunRecord>& records) {
  Criterion c{9, true, ""};
  std::map<std::string, std::vector<double>> kl, l2;
  for (const auto& r : records) {
    if (r.rows.empty()) continue;
    const std::string key = r.strategy.kind + "/" + to_string(r.strategy.error_kind);
    kl[key].push_back(r.rows.back().metric_kl);
    l2[key].push_back(r.rows.back().metric_l2);
  }
  for (const char* kind : {"KL", "L2"}) {
    const std::string agp = std::string("AGP-const/") + kind;
    const std::string lhs = std::string("LHSGP/") + kind;
    const double agp_kl = median(kl[agp]), lhs_kl = median(kl[lhs]);
    const double agp_l2 = median(l2[agp]), lhs_l2 = median(l2[lhs]);
    c.detail += std::string(kind) + ": KL " + fmt(agp_kl) + " vs " + fmt(lhs_kl) + ", L2 " +
                fmt(agp_l2) + " vs " + fmt(lhs_l2) + "; ";
    if (!(agp_kl < lhs_kl && agp_l2 < lhs_l2)) c.pass = false;
  }
  c.detail = "median final metrics AGP-const vs LHSGP -- " + c.detail;
  return c;
}

Criterion criterion_design_size(const std::vector<RunRecord>& records) {
  Criterion c{10, true, ""};
  std::map<std::string, std::pair<double, int>> sizes;
  for (const auto& r : records) {
    if (r.rows.empty()) continue;
    auto& acc = sizes[r.strategy.kind + "/" + to_string(r.strategy.error_kind)];
    acc.first += r.rows.back().design_size;
    acc.second += 1;
  }
  for (const char* kind : {"KL", "L2"}) {
    const auto agp = sizes[std::string("AGP-const/") + kind];
    const auto pos = sizes[std::string("posAGP/") + kind];
    const double agp_mean = agp.first / std::max(1, agp.second);
    const double pos_mean = pos.first / std::max(1, pos.second);
    c.detail += std::string(kind) + ": " + fmt(agp_mean) + " vs " + fmt(pos_mean) + "; ";
    if (!(agp_mean < pos_mean)) c.pass = false;
  }
  c.detail = "mean final design size AGP-const vs posAGP -- " + c.detail;
  return c;
}

Criterion criterion_determinism(const ExperimentConfig& cfg, const std::string& dir1,
                                const std::string& dir2) {
  Criterion c{11, true, ""};
  run_desk(cfg, dir2);
  int same = 0;
  for (const char* f : {"convergence.csv", "tolerances.csv", "averaged.csv", "summary.csv"}) {
    const std::string a = slurp(fs::path(dir1) / "report" / f);
    const std::string b = slurp(fs::path(dir2) / "report" / f);
    if (a == b && !a.empty()) {
      ++same;
    } else {
      c.pass = false;
      c.detail += std::string(f) + " differs; ";
    }
  }
  if (c.pass) c.detail = "rerun with the same master seed reproduced all 4 report CSVs byte-identically";
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  std::string out_dir = "acceptance_out";
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--out") && i + 1 < argc) out_dir = argv[++i];
    if (!std::strcmp(argv[i], "--criterion") && i + 1 < argc) only = std::atoi(argv[++i]);
  }
  auto wanted = [&](int id) { return only == 0 || only == id; };

  std::vector<Criterion> results;
  const auto t0 = std::chrono::steady_clock::now();

  if (wanted(1)) results.push_back(from_check(1, check_gp_oracle(200)));
  if (wanted(2)) results.push_back(from_check(2, check_derivative_suite(100)));
  if (wanted(3)) results.push_back(from_check(3, check_lemma_mean_deviation(10, 100000)));
  if (wanted(4)) results.push_back(from_check(4, check_theorem_bound(20)));
  if (wanted(5)) results.push_back(from_check(5, check_full_likelihood_identity(10, 100000)));
  if (wanted(6)) {
    const CheckResult moments = check_sampler_moments();
    const CheckResult balance = check_detailed_balance();
    results.push_back({6, moments.pass && balance.pass,
                       moments.name + ": " + moments.detail + " | " + balance.name + ": " +
                           balance.detail});
  }
  if (wanted(7)) results.push_back(from_check(7, check_tolerance_optimizer_oracle()));

  if (wanted(8) || wanted(9) || wanted(10) || wanted(11)) {
    const ExperimentConfig cfg = desk_config();
    const std::string desk1 = (fs::path(out_dir) / "desk1").string();
    const auto desk_t0 = std::chrono::steady_clock::now();
    const auto records = run_desk(cfg, desk1);
    const double desk_minutes =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - desk_t0).count() /
        60.0;
    if (wanted(8)) results.push_back(criterion_audits(cfg, records));
    if (wanted(9)) {
      Criterion c = criterion_direction(records);
      c.detail += "(desk run " + fmt(desk_minutes) + " min)";
      if (desk_minutes > 15.0) c.pass = false;
      results.push_back(c);
    }
    if (wanted(10)) results.push_back(criterion_design_size(records));
    if (wanted(11))
      results.push_back(
          criterion_determinism(cfg, desk1, (fs::path(out_dir) / "desk2").string()));
  }

  std::sort(results.begin(), results.end(),
            [](const Criterion& a, const Criterion& b) { return a.id < b.id; });
  int failures = 0;
  for (const auto& r : results) {
    std::printf("[%s] criterion %d: %s\n", r.pass ? "PASS" : "FAIL", r.id, r.detail.c_str());
    if (!r.pass) ++failures;
  }
  const double total_minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  std::printf("%d/%zu criteria passed in %.1f min\n", static_cast<int>(results.size()) - failures,
              results.size(), total_minutes);
  return failures == 0 ? 0 : 1;
}
