#include "hilbex/runner.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace hilbex {

const char* kToolVersion = "hilbex 0.1.0";

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string file_sha1(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha1_hex(data);
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string csv_euler(const EulerSolution& es, int stride) {
  std::string s = "t,x3,rho,u1,u2,u3,T\n";
  for (int step = 0; step < es.steps(); step += stride)
    for (int c = 0; c < es.grid.cells(); ++c) {
      s += fmt(es.times[step]) + "," + fmt(es.grid.centers[c]) + "," + fmt(es.rho.at(step, c)) +
           "," + fmt(es.u1.at(step, c)) + "," + fmt(es.u2.at(step, c)) + "," +
           fmt(es.u3.at(step, c)) + "," + fmt(es.T.at(step, c)) + "\n";
    }
  return s;
}

std::string csv_wall(const EulerSolution& es) {
  std::string s = "t,rho0,u01,u02,T0,d3u1,d3u2,d3u3,d3T,d3p,divu\n";
  for (int step = 0; step < es.steps(); ++step) {
    const WallTrace& w = es.wall[step];
    s += fmt(es.times[step]) + "," + fmt(w.rho0) + "," + fmt(w.u0[0]) + "," + fmt(w.u0[1]) + "," +
         fmt(w.T0) + "," + fmt(w.d3u0[0]) + "," + fmt(w.d3u0[1]) + "," + fmt(w.d3u0[2]) + "," +
         fmt(w.d3T0) + "," + fmt(w.d3p0) + "," + fmt(w.divu0) + "\n";
  }
  return s;
}

std::string csv_interior(const HyperbolicSolution& h, int stride) {
  std::string s = "t,x3,rho,u1,u2,u3,theta\n";
  for (int step = 0; step < h.rho.steps; step += stride)
    for (std::size_t n = 0; n < h.nodes.size(); ++n) {
      const int j = static_cast<int>(n);
      s += fmt(h.times[step]) + "," + fmt(h.nodes[n]) + "," + fmt(h.rho.at(step, j)) + "," +
           fmt(h.u1.at(step, j)) + "," + fmt(h.u2.at(step, j)) + "," + fmt(h.u3.at(step, j)) +
           "," + fmt(h.theta.at(step, j)) + "\n";
    }
  return s;
}

std::string csv_layer(const OrderBundle& b, const std::vector<double>& y, int stride) {
  std::string s = "t,y,u1,u2,theta,u3,p\n";
  for (int step = 0; step < b.layer.u1.steps; step += stride)
    for (std::size_t n = 0; n < y.size(); ++n) {
      const int j = static_cast<int>(n);
      s += fmt(b.layer.times[step]) + "," + fmt(y[n]) + "," + fmt(b.layer.u1.at(step, j)) + "," +
           fmt(b.layer.u2.at(step, j)) + "," + fmt(b.layer.th.at(step, j)) + "," +
           fmt(b.u3_bar.at(step, j)) + "," + fmt(b.p_bar.at(step, j)) + "\n";
    }
  return s;
}

}  // namespace

nlohmann::json RunRecord::to_json() const {
  nlohmann::json j;
  j["manifest"] = manifest;
  j["stages"] = nlohmann::json::array();
  for (const auto& s : stages)
    j["stages"].push_back({{"name", s.name}, {"status", s.status}, {"detail", s.detail}});
  j["files"] = nlohmann::json::array();
  for (const auto& [name, hash] : files) j["files"].push_back({{"name", name}, {"sha1", hash}});
  j["exit_code"] = exit_code;
  return j;
}

RunRecord run_scenario(const Scenario& scenario, const RunOptions& opt) {
  RunRecord rec;
  Scenario sc = scenario;
  if (!opt.out_override.empty()) sc.output_dir = opt.out_override;
  if (opt.threads > 0) sc.expansion.threads = opt.threads;
  sc.expansion.threads = resolve_thread_count(sc.expansion.threads);

  const auto t_start = std::chrono::system_clock::now();
  rec.manifest["tool_version"] = kToolVersion;
  rec.manifest["config"] = sc.echo;
  rec.manifest["config_hash"] = sc.config_hash;
  rec.manifest["deviations"] = nlohmann::json::array(
      {"expansion truncated at N <= 3 with taylor_order <= 3 (desk scale)"});

  if (opt.validate_only) {
    rec.stages.push_back({"validate", "ok", ""});
    return rec;
  }

  namespace fs = std::filesystem;
  fs::create_directories(sc.output_dir);
  const fs::path out(sc.output_dir);
  auto emit = [&](const std::string& name, const std::string& text) {
    write_text(out / name, text);
    rec.files.emplace_back(name, sha1_hex(text));
  };

  ExpansionPipeline pipe(sc.expansion, sc.init.build());
  try {
    pipe.build();
    rec.stages.push_back({"euler", "ok", ""});
    for (int k = 1; k <= sc.expansion.orders; ++k)
      rec.stages.push_back({"order" + std::to_string(k), "ok", ""});
  } catch (const std::exception& ex) {
    rec.stages.push_back({"build", "failed", ex.what()});
    rec.exit_code = 3;
    emit("run_record.json", rec.to_json().dump(2) + "\n");
    return rec;
  }

  const int stride = std::max(1, pipe.euler().steps() / 24);
  emit("euler_fields.csv", csv_euler(pipe.euler(), stride));
  emit("wall_trace.csv", csv_wall(pipe.euler()));
  for (int k = 1; k <= sc.expansion.orders; ++k) {
    const OrderBundle& b = pipe.order(k);
    emit("order" + std::to_string(k) + "_interior.csv", csv_interior(b.interior, stride));
    emit("order" + std::to_string(k) + "_layer.csv", csv_layer(b, pipe.layer_grid().y, stride));
    nlohmann::json meta;
    meta["order"] = k;
    meta["weight_l"] = sc.expansion.weight_l;
    meta["y_max"] = sc.expansion.y_max;
    meta["layer_stability_C"] = b.layer.stability_C;
    meta["normal_velocity_tail"] = b.normal_velocity_tail;
    meta["ghat_micro_defect"] = b.ghat_report.micro_defect;
    meta["ghat_moments"] = b.ghat_report.moments;
    meta["interior_energy_growth"] = b.interior.max_energy_growth;
    emit("order" + std::to_string(k) + "_meta.json", meta.dump(2) + "\n");
  }

  try {
    if (sc.sweep_parameter == SweepParameter::Epsilon) {
      if (sc.sweep_values.size() >= 3) {
        const DefectSweep sweep = pipe.defect_sweep();
        emit("defect_sweep.json", sweep.to_json().dump(2) + "\n");
        std::string csv = "eps,l2_defect,sup_defect\n";
        for (const auto& r : sweep.reports)
          csv += fmt(r.eps) + "," + fmt(r.l2_defect) + "," + fmt(r.sup_defect) + "\n";
        emit("defect_sweep.csv", csv);
        nlohmann::json sj;
        sj["parameter"] = "epsilon";
        sj["values"] = sc.sweep_values;
        std::vector<double> norms;
        for (const auto& r : sweep.reports) norms.push_back(r.l2_defect);
        const SlopeFit fit = fit_slope(sc.sweep_values, norms);
        sj["slope"] = fit.slope;
        sj["r2"] = fit.r2;
        emit("slope_fit.json", sj.dump(2) + "\n");
      } else {
        const ResidualReport r = pipe.evaluate_defect(sc.sweep_values.empty()
                                                          ? sc.expansion.epsilons.front()
                                                          : sc.sweep_values.front());
        emit("defect.json", r.to_json().dump(2) + "\n");
      }
      rec.stages.push_back({"defect", "ok", ""});
    } else {
      const AcousticGapReport rep = acoustic_gap_study(sc.expansion, sc.init.build(),
                                                       sc.sweep_values, sc.acoustic_kinetic);
      emit("delta_sweep.json", rep.to_json().dump(2) + "\n");
      nlohmann::json sj;
      sj["parameter"] = "delta";
      sj["values"] = sc.sweep_values;
      sj["slope"] = rep.fluid_slope.slope;
      sj["r2"] = rep.fluid_slope.r2;
      emit("slope_fit.json", sj.dump(2) + "\n");
      rec.stages.push_back({"delta_sweep", "ok", ""});
    }

    // Knudsen report for the first nontrivial order at a representative step
    for (int k = 2; k <= sc.expansion.orders; ++k) {
      const int s = pipe.euler().steps() / 2;
      const KnudsenSolution* sol = pipe.knudsen_solution(k, s);
      if (!sol) continue;
      nlohmann::json kj;
      kj["order"] = k;
      kj["step"] = s;
      kj["converged"] = sol->converged;
      kj["iterations"] = sol->iterations;
      kj["residual"] = sol->residual;
      kj["zeta"] = sol->zeta;
      kj["wall_relation_defect"] = sol->wall_relation_defect;
      kj["moment_defects"] = pipe.order(k).ghat_report.moments;
      emit("knudsen_order" + std::to_string(k) + ".json", kj.dump(2) + "\n");
      std::string csv = "eta,weighted_sup\n";
      for (std::size_t i = 0; i < sol->eta.size(); ++i)
        csv += fmt(sol->eta[i]) + "," + fmt(sol->profile[i]) + "\n";
      emit("knudsen_order" + std::to_string(k) + "_profile.csv", csv);
      break;
    }

    if (sc.acoustic_enabled && !sc.acoustic_deltas.empty()) {
      const AcousticGapReport rep = acoustic_gap_study(sc.expansion, sc.init.build(),
                                                       sc.acoustic_deltas, sc.acoustic_kinetic);
      emit("acoustic_gap.json", rep.to_json().dump(2) + "\n");
      rec.stages.push_back({"acoustic_gap", "ok", ""});
    }
  } catch (const std::exception& ex) {
    rec.stages.push_back({"reports", "failed", ex.what()});
    rec.exit_code = 3;
  }

  const auto t_end = std::chrono::system_clock::now();
  rec.manifest["started_unix_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(t_start.time_since_epoch()).count();
  rec.manifest["finished_unix_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(t_end.time_since_epoch()).count();
  emit("run_record.json", rec.to_json().dump(2) + "\n");
  // run_record lists every emitted file including itself; recompute its entry
  rec.files.back().second = file_sha1(out / "run_record.json");
  return rec;
}

}  // namespace hilbex
