// finfocal - scenario-driven scans and verification suites for the normal
// exponential map of a submanifold in a Finsler manifold.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "finfocal/report.hpp"

namespace fs = std::filesystem;
using namespace finfocal;

namespace {

struct CommonArgs {
  std::string scenario_path;
  std::string out_dir = ".";
  int threads = 0;
  double tmax_override = 0.0;
  double tol_override = 0.0;
};

Scenario load(const CommonArgs& args) {
  Json j;
  {
    std::ifstream in(args.scenario_path);
    if (!in) throw ConfigError("cannot open scenario file: " + args.scenario_path);
    std::stringstream ss;
    ss << in.rdbuf();
    j = Json::parse(ss.str(), nullptr, true, true);
  }
  if (args.tmax_override > 0.0) j["grid"]["t_max"] = args.tmax_override;
  if (args.tol_override > 0.0) j["tolerances"]["integrator"] = args.tol_override;
  Scenario s = Scenario::from_json(j, args.scenario_path);
  return s;
}

int threads_of(const CommonArgs& args) {
  return args.threads > 0 ? args.threads : hardware_threads();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
}

int run_focal_scan(const CommonArgs& args) {
  Scenario sc = load(args);
  ensure_dir(args.out_dir);
  FocalScanResult scan = focal_scan(sc.grid(), sc.focal_settings(threads_of(args)));
  write_file(args.out_dir + "/" + sc.name() + "_focal.csv", focal_scan_csv(sc, scan));
  Json summary = focal_scan_summary(sc, scan);
  Scenario::validate_summary(summary);
  write_file(args.out_dir + "/" + sc.name() + "_focal_summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << std::endl;
  return 0;
}

int run_cut_scan(const CommonArgs& args) {
  Scenario sc = load(args);
  ensure_dir(args.out_dir);
  CutAnalyzer analyzer(sc.grid(), sc.cut_settings(threads_of(args)));
  std::vector<CutRecord> records = analyzer.scan();
  double spacing = CutAnalyzer::cut_grid_spacing(records, sc.grid());
  double eps = 2.0 * spacing;
  double fraction = CutAnalyzer::closure_fraction(records, eps);
  write_file(args.out_dir + "/" + sc.name() + "_cut.csv", cut_scan_csv(sc, records));
  Json summary = cut_scan_summary(sc, records, eps, fraction);
  Scenario::validate_summary(summary);
  write_file(args.out_dir + "/" + sc.name() + "_cut_summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << std::endl;
  return 0;
}

int run_plot(const CommonArgs& args) {
  Scenario sc = load(args);
  ensure_dir(args.out_dir);
  FocalScanResult scan = focal_scan(sc.grid(), sc.focal_settings(threads_of(args)));
  CutAnalyzer analyzer(sc.grid(), sc.cut_settings(threads_of(args)));
  std::vector<CutRecord> records = analyzer.scan();
  write_file(args.out_dir + "/" + sc.name() + ".svg", render_svg(sc, &scan, &records));
  std::cout << "wrote " << args.out_dir + "/" + sc.name() + ".svg" << std::endl;
  return 0;
}

int run_verify(const CommonArgs& args, const std::string& suite) {
  Scenario sc = load(args);
  const int threads = threads_of(args);
  int failures = 0;
  auto report = [&](const std::string& what, bool pass) {
    std::cout << (pass ? "PASS" : "FAIL") << "  " << what << std::endl;
    if (!pass) ++failures;
  };

  if (suite == "adjoint") {
    const RayGrid& grid = sc.grid();
    double worst = 0.0;
    int step = std::max(1, grid.size() / 24);
    for (int r = 0; r < grid.size(); r += step) {
      RayFrame frame(sc.bundle(), grid.normal(r), sc.t_max(), 1e-10);
      std::vector<NJacobiField> fields;
      for (int i = 0; i < frame.n(); ++i)
        fields.emplace_back(frame, Vec(Vec::Unit(frame.n(), i)));
      for (size_t a = 0; a < fields.size(); ++a)
        for (size_t b = a; b < fields.size(); ++b)
          for (int ti = 1; ti <= 50; ++ti) {
            double t = sc.t_max() * ti / 51.0;
            double defect = std::abs(adjoint_defect(fields[a], fields[b], t));
            FrameState st = frame.state(t);
            Mat G = sc.system().metric_tensor(st.x, st.v);
            auto gn = [&](const Vec& w) { return std::sqrt(w.dot(G * w)); };
            double scale = std::max(
                {gn(fields[a].J(t)) * gn(fields[b].Jdot(t)),
                 gn(fields[a].Jdot(t)) * gn(fields[b].J(t)), 1e-9});
            worst = std::max(worst, defect / scale);
          }
    }
    report("adjoint identity: max relative defect " + format_g17(worst) + " <= 1e-7",
           worst <= 1e-7);
  } else if (suite == "index") {
    const RayGrid& grid = sc.grid();
    bool all = true;
    for (int r = 0; r < grid.size(); r += std::max(1, grid.size() / 6)) {
      RayFrame frame(sc.bundle(), grid.normal(r), sc.t_max(), 1e-10);
      auto times = detect_focal_times(frame, sc.t_max());
      for (double f : {0.35, 0.7}) {
        double T = sc.t_max() * f;
        bool near_focal = false;
        for (auto& [tt, kk] : times)
          if (std::abs(tt - T) < 0.05) near_focal = true;
        if (near_focal) continue;
        int morse = morse_index(times, T);
        int oracle = index_form_negative_count(frame, T, 160);
        int oracle2 = index_form_negative_count(frame, T, 320);
        if (morse != oracle || oracle != oracle2) all = false;
      }
    }
    report("morse index equals discretized index-form negativity (mesh-stable)", all);
  } else if (suite == "warner") {
    FocalScanResult scan = focal_scan(sc.grid(), sc.focal_settings(threads));
    WarnerScanResult wr =
        warner_scan(sc.grid(), scan, 2.0 * sc.grid().spacing(), 1e-10, threads);
    report("warner R1-R3 at " + std::to_string(wr.reports.size()) + " focal records",
           wr.all_pass(1e-6, 1e-6));
  } else if (suite == "closure") {
    CutAnalyzer analyzer(sc.grid(), sc.cut_settings(threads));
    std::vector<CutRecord> records = analyzer.scan();
    double eps = 2.0 * CutAnalyzer::cut_grid_spacing(records, sc.grid());
    double fraction = CutAnalyzer::closure_fraction(records, eps);
    report("closure fraction " + format_g17(fraction) + " == 1.0", fraction == 1.0);
  } else if (suite == "noninjectivity") {
    FocalScanResult scan = focal_scan(sc.grid(), sc.focal_settings(threads));
    auto flat = scan.flat();
    int found = 0, tried = 0;
    size_t step = std::max<size_t>(1, flat.size() / 40);
    for (size_t i = 0; i < flat.size(); i += step) {
      const FocalRecord& rec = flat[i];
      if (!rec.regular) continue;
      ++tried;
      try {
        RayFrame frame(sc.bundle(), sc.grid().normal(rec.ray), sc.t_max(), 1e-10);
        non_injectivity_witness(frame, rec, sc.grid().chart_at(rec.ray),
                                6.0 * sc.grid().spacing(), 1e-3);
        ++found;
      } catch (const WitnessNotFound&) {
      }
    }
    report("non-injectivity witnesses " + std::to_string(found) + "/" +
               std::to_string(tried),
           tried > 0 && found == tried);
  } else if (suite == "derivative-report") {
    const RayGrid& grid = sc.grid();
    std::cout << "ray,fd_dlambda,shape_pairing_dlambda,self_consistency,discrepancy\n";
    for (int r = 0; r < grid.size(); r += std::max(1, grid.size() / 8)) {
      try {
        DerivativeReport rep = focal_derivative(sc.bundle(), grid.normal(r), 1,
                                                Vec(Vec::Unit(1, 0)), sc.t_max());
        std::cout << r << "," << format_g17(rep.fd) << "," << format_g17(rep.shape_pairing)
                  << "," << format_g17(rep.fd_self_consistency) << ","
                  << format_g17(rep.discrepancy) << "\n";
      } catch (const NumericError& e) {
        std::cout << r << ",skipped: " << e.what() << "\n";
      }
    }
    std::cout << "REPORT  derivative comparison is informational by design\n";
    return 0;
  } else {
    throw ConfigError("unknown verify suite: " + suite);
  }
  return failures == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finfocal: focal/cut structure of the normal exponential map"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--scenario", args.scenario_path, "scenario JSON file")->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--threads", args.threads, "worker threads (default: cores)");
    cmd->add_option("--tmax", args.tmax_override, "override grid.t_max");
    cmd->add_option("--tol", args.tol_override, "override integrator tolerance");
  };

  CLI::App* focal_cmd = app.add_subcommand("focal-scan", "scan tangent focal points");
  add_common(focal_cmd);
  CLI::App* cut_cmd = app.add_subcommand("cut-scan", "scan tangent cut points");
  add_common(cut_cmd);
  CLI::App* plot_cmd = app.add_subcommand("plot", "render an SVG of the scan");
  add_common(plot_cmd);
  CLI::App* verify_cmd = app.add_subcommand("verify", "run a verification suite");
  std::string suite;
  verify_cmd->add_option("suite", suite,
                         "adjoint|index|warner|closure|noninjectivity|derivative-report")
      ->required();
  add_common(verify_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (focal_cmd->parsed()) return run_focal_scan(args);
    if (cut_cmd->parsed()) return run_cut_scan(args);
    if (plot_cmd->parsed()) return run_plot(args);
    if (verify_cmd->parsed()) return run_verify(args, suite);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << std::endl;
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 3;
  }
  return 0;
}
