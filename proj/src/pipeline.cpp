#include "varlin/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "varlin/calibration.hpp"
#include "varlin/csv.hpp"
#include "varlin/numeric.hpp"
#include "varlin/diagnostics.hpp"
#include "varlin/errors.hpp"
#include "varlin/expanding.hpp"
#include "varlin/linearize.hpp"
#include "varlin/martingale.hpp"
#include "varlin/mixing.hpp"
#include "varlin/model.hpp"
#include "varlin/oracle.hpp"

namespace varlin {

Stage stage_from_name(const std::string& s) {
  if (s == "validate") return Stage::Validate;
  if (s == "constants") return Stage::Constants;
  if (s == "blocks") return Stage::Blocks;
  if (s == "decompose") return Stage::Decompose;
  if (s == "diagnose") return Stage::Diagnose;
  if (s == "report") return Stage::Report;
  throw ConfigError("unknown stage: " + s);
}

namespace {

bool wants(const ExperimentConfig& cfg, const std::string& d) {
  return std::find(cfg.diagnostics.begin(), cfg.diagnostics.end(), d) != cfg.diagnostics.end();
}

ArrayModel model_for(const ExperimentConfig& cfg, int n) {
  if (cfg.model.rfind("builtin:", 0) == 0) return make_builtin_model(cfg.model.substr(8), n);
  ArrayModel m = load_model(cfg.model);
  if (n > m.n) throw ConfigError("requested n exceeds the model file row length");
  return m;
}

double resolve_l(const ExperimentConfig& cfg, const ArrayModel& m, const GrowthConstants& gc) {
  double cap = gc.sigma * gc.sigma / (18.0 * gc.Q);
  double l = 1.0;
  if (cfg.l_rule == "sigma")
    l = gc.sigma;
  else if (cfg.l_rule == "memory")
    l = 2.0 * std::max(1, m.memory);
  else
    l = parse_double(cfg.l_rule.substr(6));
  return std::max(1.0, std::min(l, std::floor(cap)));
}

}  // namespace

void run_experiment(const ExperimentConfig& cfg, Stage upto) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out);
  const bool strict = cfg.tolerance_profile == "strict";
  const double little_o = strict ? 0.05 : kLittleOFactor;

  struct DkRow {
    int n;
    double sigma, dk;
  };
  std::vector<DkRow> dk_rows;
  std::vector<std::vector<std::string>> const_rows, decomp_rows, qv_rows, mdp_rows, mom_rows,
      bounds_rows, fdd_rows, asip_rows;
  std::vector<std::pair<int, MixingProfile>> profiles;
  std::vector<std::pair<int, VarianceProfile>> var_profiles;
  std::vector<std::pair<int, BlockPartition>> partitions;
  std::vector<std::pair<int, std::vector<CheckRow>>> check_sets;
  struct PathsOut {
    int n;
    PathGrid grid;
    std::vector<PathSample> samples;
  };
  std::vector<PathsOut> paths_out;

  for (int n : cfg.n_grid) {
    ArrayModel model = model_for(cfg, n);
    validate_model(model);
    if (upto == Stage::Validate) continue;
    if (!model.finite_state())
      throw ConfigError("the experiment pipeline needs a finite-state model; expanding-map "
                        "models are sampled through the generator interfaces only");

    MixingProfile profile;
    if (cfg.profile.empty()) {
      profile = dobrushin_phi_profile(model);
    } else {
      profile = load_profile_csv(cfg.profile);
      if (profile.n < n)
        throw ConfigError("declared profile covers fewer lags than the requested n");
      std::vector<ConsistencyIssue> issues = consistency_check(profile);
      if (!issues.empty())
        throw ConfigError("declared profile violates " + issues[0].inequality + " at lag " +
                          fmt_int(issues[0].lag));
    }
    profiles.emplace_back(n, profile);
    VarianceProfile vp = variance_profile(model);
    double sigma_n = std::sqrt(vp.var[size_t(n)]);
    double K = max_l2_norm(model);
    GrowthConstants gc =
        growth_constants(profile, K, sigma_n, 1.0, cfg.p0, cfg.eps0, little_o);
    const_rows.push_back({fmt_int(n), fmt_double(sigma_n), fmt_double(gc.K), fmt_int(gc.r),
                          fmt_double(gc.C), fmt_double(gc.D), fmt_double(gc.Q),
                          gc.qn_floor_ok ? "1" : "0", gc.qn_little_o_ok ? "1" : "0"});
    if (upto == Stage::Constants) continue;

    BlockPartition part = partition_blocks(model, gc, n);
    partitions.emplace_back(n, part);
    var_profiles.emplace_back(n, vp);
    std::vector<CheckRow> checks = verify_partition(model, part, gc);
    check_sets.emplace_back(n, checks);
    for (const CheckRow& c : checks)
      if (!c.pass)
        throw InvariantError("partition certification failed: " + c.id + " lhs " +
                             fmt_double(c.lhs) + " rhs " + fmt_double(c.rhs));
    BetaEstimate beta = estimate_beta(model, gc, part, profile, cfg.p0,
                                      std::min(cfg.replicates, 400), cfg.seed, cfg.threads);
    gc.beta = beta.beta_hat;
    if (upto == Stage::Blocks) continue;

    const bool chain_kind =
        model.kind == ModelKind::IidLattice || model.kind == ModelKind::InhomMarkov;
    CoboundaryDecomp dec;
    if (chain_kind) {
      dec = martingale_differences(model, part, profile, gc, cfg.p0);
      double tel = 0;
      int paths = std::min(cfg.replicates, 100);
      for (int r = 0; r < paths; ++r)
        tel = std::max(tel, telescoping_residual(model, dec, cfg.seed, r));
      if (tel > 1e-10)
        throw InvariantError("telescoping identity residual " + fmt_double(tel));
      decomp_rows.push_back({fmt_int(n), fmt_double(dec.max_abs_cond_mean), fmt_double(tel),
                             fmt_double(dec.R_2_norm), fmt_double(dec.R_p0_norm),
                             fmt_double(dec.mlemma_lhs), fmt_double(dec.mlemma_rhs)});
    }
    if (upto == Stage::Decompose) continue;

    if (wants(cfg, "sample"))
      save_paths_csv(model, n, cfg.seed, std::min(cfg.replicates, 5),
                     cfg.out + "/samples_n" + fmt_int(n) + ".csv");
    if (wants(cfg, "pmf"))
      save_pmf_csv(exact_sum_pmf(model, 1, n), cfg.out + "/pmf_n" + fmt_int(n) + ".csv");
    if (wants(cfg, "dk")) {
      LatticePmf pmf = exact_sum_pmf(model, 1, n);
      dk_rows.push_back({n, sigma_n, kolmogorov_to_normal(pmf, sigma_n)});
    }
    if (wants(cfg, "moments")) {
      LatticePmf pmf = exact_sum_pmf(model, 1, n);
      MomentsCumulants mc = moments_and_cumulants(pmf, 4);
      mom_rows.push_back({fmt_int(n), fmt_double(sigma_n),
                          fmt_double(std::fabs(mc.cumulant[3]) / (sigma_n * sigma_n)),
                          fmt_double(std::fabs(mc.cumulant[4]) / (sigma_n * sigma_n)),
                          fmt_double(moment_gap(pmf, sigma_n, 4))});
    }
    if (wants(cfg, "mdp")) {
      LatticePmf pmf = exact_sum_pmf(model, 1, n);
      double a_n = std::pow(sigma_n, 0.2);
      for (const MdpPoint& pt : mdp_curve(pmf, sigma_n, a_n, {0.5, 1.0, 1.5}))
        mdp_rows.push_back({fmt_int(n), fmt_double(pt.x), fmt_double(pt.value),
                            fmt_double(pt.deviation), pt.dropped ? "1" : "0"});
    }
    if (chain_kind && wants(cfg, "qv")) {
      QuadraticVariation qv =
          quadratic_variation(model, part, dec, profile, gc, std::max(100, cfg.replicates),
                              cfg.grid_size, cfg.seed, cfg.threads);
      qv_rows.push_back({fmt_int(n), fmt_double(qv.e_qv1_mc), fmt_double(qv.e_qv1_exact),
                         fmt_double(qv.ky_fan), fmt_double(qv.qv1_bound),
                         fmt_double(qv.det_gap_sup), fmt_double(qv.det_gap_bound),
                         fmt_double(qv.coupling_w_calw), fmt_double(qv.coupling_calw_m)});
      if (wants(cfg, "paths")) {
        VarianceProfile vpp = variance_profile(model);
        PathsOut po;
        po.n = n;
        po.grid = make_path_grid(vpp, part, std::min(cfg.grid_size, 256));
        for (int r = 0; r < std::min(cfg.replicates, 8); ++r)
          po.samples.push_back(eval_path_functions(model, part, dec, po.grid, cfg.seed, r));
        paths_out.push_back(std::move(po));
      }
    }
    if (chain_kind && wants(cfg, "fdd")) {
      FddResult fr = fdd_check(model, part, dec, {0.25, 0.5, 0.75, 1.0},
                               std::max(100, cfg.replicates), cfg.seed, cfg.threads);
      for (size_t i = 0; i < fr.t.size(); ++i)
        fdd_rows.push_back({fmt_int(n), fmt_double(fr.t[i]), fmt_double(fr.dk[i]),
                            fmt_double(fr.dkw_radius[i]), fmt_double(fr.cov_err)});
    }
    if (wants(cfg, "bounds")) {
      double K_p0 = max_lp_norm(model, cfg.p0);
      SequentialConstants seq = sequential_constants(profile, gc, K_p0, sigma_n, cfg.p0);
      if (chain_kind) {
        Accum ly;
        for (double v : dec.dp0) ly.add(v);
        seq.lyapunov = ly.value() / std::pow(sigma_n, cfg.p0);
      }
      double l_n = resolve_l(cfg, model, gc);
      MemoryCoefficient mc = memory_coefficient(model, profile, gc, cfg.p0, int(l_n / 2.0));
      RateBounds rb = rate_bounds(gc, seq, l_n, cfg.p0, mc.exact_zero ? 0.0 : mc.bound);
      bounds_rows.push_back({fmt_int(n), fmt_double(sigma_n), fmt_double(rb.frak_q),
                             fmt_double(rb.w), fmt_double(rb.rhs_fclt),
                             fmt_double(rb.rhs_fclt_mc), fmt_double(seq.A1),
                             fmt_double(seq.A2), fmt_double(seq.lyapunov)});
    }
  }

  if (upto >= Stage::Diagnose && wants(cfg, "asip") && cfg.n_grid.size() >= 2) {
    ArrayModel seq_model = model_for(cfg, cfg.n_grid.back());
    if (seq_model.finite_state()) {
      SequencePartition sp = sequence_partition(seq_model, cfg.n_grid.back());
      AsipResult ar = asip_residual(seq_model, sp, cfg.n_grid, cfg.replicates, cfg.p0, 0.1,
                                    cfg.seed, cfg.threads);
      for (size_t i = 0; i < ar.n.size(); ++i)
        asip_rows.push_back({fmt_int(ar.n[i]), fmt_double(ar.quantile[i]),
                             fmt_double(ar.normalized[i])});
    }
  }

  // collected tables (written only after every stage succeeded)
  for (auto& pr : profiles)
    save_profile_csv(pr.second, cfg.out + "/profile_n" + fmt_int(pr.first) + ".csv");
  for (auto& vr : var_profiles)
    save_variance_profile_csv(vr.second, cfg.out + "/variance_n" + fmt_int(vr.first) + ".csv");
  for (auto& pp : partitions)
    save_partition_csv(pp.second, cfg.out + "/partition_n" + fmt_int(pp.first) + ".csv");
  for (auto& cs : check_sets)
    save_checks_csv(cs.second, cfg.out + "/checks_n" + fmt_int(cs.first) + ".csv");
  for (auto& po : paths_out) {
    CsvWriter csv(cfg.out + "/paths_n" + fmt_int(po.n) + ".csv", "replicate,t,W,cal_W,M,QV");
    for (size_t r = 0; r < po.samples.size(); ++r)
      for (size_t i = 0; i < po.grid.t.size(); ++i)
        csv.row({fmt_int(int(r)), fmt_double(po.grid.t[i]), fmt_double(po.samples[r].W[i]),
                 fmt_double(po.samples[r].calW[i]), fmt_double(po.samples[r].M[i]),
                 fmt_double(po.samples[r].QV[i])});
  }
  {
    CsvWriter csv(cfg.out + "/constants.csv", "n,sigma,K,r,C,D,Q,qn_floor_ok,qn_little_o_ok");
    for (auto& r : const_rows) csv.row(r);
  }
  if (!decomp_rows.empty()) {
    CsvWriter csv(cfg.out + "/decomp.csv",
                  "n,max_cond_mean,telescope_residual,R2,Rp0,coboundary_norm,coboundary_bound");
    for (auto& r : decomp_rows) csv.row(r);
  }
  if (!dk_rows.empty()) {
    CsvWriter csv(cfg.out + "/dk.csv", "n,sigma,dk");
    for (auto& r : dk_rows) csv.row({fmt_int(r.n), fmt_double(r.sigma), fmt_double(r.dk)});
    if (dk_rows.size() >= 4) {
      RateSeries series;
      for (auto& r : dk_rows) series.push(r.n, r.sigma, r.dk);
      LineFit fit = rate_fit(series, 0.0);
      CsvWriter fitcsv(cfg.out + "/ratefit.csv", "statistic,slope,ci_low,ci_high,residual");
      fitcsv.row({"dk", fmt_double(fit.slope), fmt_double(fit.slope - 2 * fit.slope_se),
                  fmt_double(fit.slope + 2 * fit.slope_se), fmt_double(fit.residual_rms)});
    }
  }
  if (!qv_rows.empty()) {
    CsvWriter csv(cfg.out + "/qv.csv",
                  "n,e_qv1_mc,e_qv1_exact,ky_fan,qv1_bound,det_gap_sup,det_gap_bound,"
                  "coupling_w_calw,coupling_calw_m");
    for (auto& r : qv_rows) csv.row(r);
  }
  if (!mdp_rows.empty()) {
    CsvWriter csv(cfg.out + "/mdp.csv", "n,x,value,deviation,dropped");
    for (auto& r : mdp_rows) csv.row(r);
  }
  if (!mom_rows.empty()) {
    CsvWriter csv(cfg.out + "/moments.csv", "n,sigma,gamma3_norm,gamma4_norm,moment_gap_p4");
    for (auto& r : mom_rows) csv.row(r);
  }
  if (!fdd_rows.empty()) {
    CsvWriter csv(cfg.out + "/fdd.csv", "n,t,dk,dkw_radius,cov_err");
    for (auto& r : fdd_rows) csv.row(r);
  }
  if (!asip_rows.empty()) {
    CsvWriter csv(cfg.out + "/asip.csv", "n,quantile_99,normalized");
    for (auto& r : asip_rows) csv.row(r);
  }
  if (!bounds_rows.empty()) {
    CsvWriter csv(cfg.out + "/bounds.csv",
                  "n,sigma,q_frak,w,rhs_fclt,rhs_fclt_markov,A1,A2,lyapunov");
    for (auto& r : bounds_rows) csv.row(r);
  }

  // manifest: enough to re-run the experiment bit for bit
  std::ofstream man(cfg.out + "/manifest.txt");
  man << "tool = varlin 1.0.0\n";
  man << "seed = " << cfg.seed << "\n";
  man << "model = " << cfg.model << "\n";
  man << "n_grid =";
  for (int n : cfg.n_grid) man << " " << n;
  man << "\n";
  man << "p0 = " << fmt_double(cfg.p0) << "\n";
  man << "l_rule = " << cfg.l_rule << "\n";
  man << "replicates = " << cfg.replicates << "\n";
  man << "threads = " << cfg.threads << "\n";
  man << "tolerance_profile = " << cfg.tolerance_profile << "\n";
  man << "eps0 = " << fmt_double(cfg.eps0) << "\n";
  man << "grid_size = " << cfg.grid_size << "\n";
  man << "calib_peligrad_ceps = " << fmt_double(kPeligradCeps) << "\n";
  man << "calib_time_change_gap = " << fmt_double(kTimeChangeGapC) << "\n";
  man << "calib_qv_gap = " << fmt_double(kQvGapC) << "\n";
  man << "calib_window_q_factor = " << fmt_double(kWindowQFactor) << "\n";
  man << "calib_little_o_factor = " << fmt_double(kLittleOFactor) << "\n";
}

namespace {

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open bundle file: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

void emit_plot_data(const std::string& bundle_dir, const std::string& plot_id,
                    const std::string& out_path) {
  CsvWriter out(out_path, "series,x,y,y_err");
  if (plot_id == "dk_vs_sigma") {
    auto rows = read_csv(bundle_dir + "/dk.csv");
    for (size_t i = 1; i < rows.size(); ++i)
      out.row({"dk", rows[i][1], rows[i][2], "0"});
    return;
  }
  if (plot_id == "mdp_curve") {
    auto rows = read_csv(bundle_dir + "/mdp.csv");
    for (size_t i = 1; i < rows.size(); ++i)
      out.row({"n=" + rows[i][0], rows[i][1], rows[i][2], "0"});
    return;
  }
  if (plot_id == "block_variances") {
    auto consts = read_csv(bundle_dir + "/constants.csv");
    for (size_t ci = 1; ci < consts.size(); ++ci) {
      std::string n = consts[ci][0];
      double Q = parse_double(consts[ci][6]);
      std::string part_path = bundle_dir + "/partition_n" + n + ".csv";
      if (!std::filesystem::exists(part_path)) continue;
      auto rows = read_csv(part_path);
      for (size_t i = 1; i < rows.size(); ++i) {
        out.row({"n=" + n, rows[i][0], rows[i][4], "0"});
        out.row({"n=" + n + "_Q", rows[i][0], fmt_double(Q), "0"});
        out.row({"n=" + n + "_9Q", rows[i][0], fmt_double(9.0 * Q), "0"});
      }
    }
    return;
  }
  throw ConfigError("unknown plot id: " + plot_id);
}

}  // namespace varlin
