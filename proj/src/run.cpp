#include "cmp/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "cmp/error.hpp"
#include "cmp/io.hpp"
#include "cmp/kernels.hpp"
#include "cmp/verify.hpp"

namespace cmp {
namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

class Runner {
 public:
  Runner(const RunConfig& config, std::ostream& log)
      : config_(config),
        log_(log),
        grid_(build_grid(config.grid_spec())),
        spec_(config.problem()),
        header_(FileHeader::describe(config.hash(), grid_, spec_)) {
    for (const auto& w : grid_.warnings()) log_ << "warning: " << w << '\n';
  }

  void execute() {
    write_file("config.txt", [&](std::ostream& os) {
      header_.write(os);
      os << config_.canonical_text();
    });
    if (config_.exports.grid)
      write_file("grid.csv", [&](std::ostream& os) {
        header_.write(os);
        write_grid_csv(grid_, os);
      });
    switch (config_.subcommand) {
      case Subcommand::solve:
      case Subcommand::plate: solve(); break;
      case Subcommand::oracle: oracle(); break;
      case Subcommand::sweep: sweep(); break;
      case Subcommand::check: check(); break;
    }
  }

 private:
  template <class F>
  void write_file(const std::string& name, F&& body, bool binary = false) {
    const fs::path path = config_.out_dir / name;
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    if (!os) throw InputError("cannot write " + path.string());
    body(os);
    if (!os) throw InputError("failed writing " + path.string());
  }

  void export_solution(const Solution& sol, const StiffnessMatrix& stiffness) {
    if (config_.exports.fields) {
      write_file("density.csv",
                 [&](std::ostream& os) { write_density_csv(os, header_, sol.density, spec_.n); });
      write_file("eigenfunction.csv",
                 [&](std::ostream& os) { write_eigenfunction_csv(os, header_, sol.eigenpair); });
      write_file("partition.txt",
                 [&](std::ostream& os) { write_partition(os, header_, sol.partition); });
    }
    if (config_.exports.trace)
      write_file("trace.jsonl", [&](std::ostream& os) { write_trace(os, header_, sol.trace); });
    if (config_.exports.matrix)
      write_file("stiffness.txt", [&](std::ostream& os) {
        header_.write(os);
        os << "# coordinate format: row col value (0-based)\n";
        stiffness.matrix().write_coordinate(os);
      });
    if (grid_.dimension() == 2) {
      if (config_.exports.contours)
        write_file("contours.csv", [&](std::ostream& os) {
          write_contours_csv(
              os, header_,
              extract_contour(sol.eigenpair.vector, sol.partition.threshold, grid_));
        });
      if (config_.exports.images) {
        write_file("phi.pgm",
                   [&](std::ostream& os) { write_pgm(os, header_, grid_, sol.eigenpair.vector); },
                   true);
        std::vector<double> indicator(static_cast<std::size_t>(grid_.size()), 0.0);
        for (const auto i : sol.partition.low) indicator[i] = 1.0;
        write_file("low_set.pgm",
                   [&](std::ostream& os) { write_pgm(os, header_, grid_, indicator); }, true);
      }
    }
  }

  void solve() {
    const StiffnessMatrix stiffness = assemble_stiffness(grid_, OperatorSpec{spec_.order});
    const InitialDensity init = config_.init == "random"
                                    ? InitialDensity::random(config_.seeds.front())
                                    : InitialDensity::uniform();
    const Solution sol = minimize(grid_, stiffness, spec_, init, config_.solver);
    export_solution(sol, stiffness);
    write_file("summary.txt", [&](std::ostream& os) {
      header_.write(os);
      os << "eigenvalue = " << fmt(sol.eigenpair.eigenvalue) << '\n';
      os << "residual = " << fmt(sol.eigenpair.residual) << '\n';
      os << "status = " << to_string(sol.trace.status) << '\n';
      os << "alternations = " << sol.trace.records.size() << '\n';
      os << "low_nodes = " << sol.partition.low.size() << '\n';
      os << "high_nodes = " << sol.partition.high.size() << '\n';
      os << "fractional = " << sol.partition.fractional << '\n';
      os << "threshold = " << fmt(sol.partition.threshold) << '\n';
      os << "monotone = " << (sol.trace.monotone() ? "true" : "false") << '\n';
      os << "low_components = " << count_components(sol.partition.low, grid_) << '\n';
      os << "high_components = " << count_components(sol.partition.high, grid_) << '\n';
    });
    log_ << to_string(config_.subcommand) << ": mu = " << fmt(sol.eigenpair.eigenvalue) << " ("
         << to_string(sol.trace.status) << " after " << sol.trace.records.size()
         << " alternations)\n";
  }

  void oracle() {
    const OracleResult oracle = enumerate_optimal(grid_, spec_);
    const MultiStartResult ms = multi_start(grid_, spec_, config_.seeds, config_.solver,
                                            config_.threads);
    const double best_ms = ms.runs[ms.best_run()].eigenpair.eigenvalue;
    const double gap = rel_diff(best_ms, oracle.best_eigenvalue());
    const bool match = gap <= 1e-10;
    const SublevelReport sub = sublevel_check(oracle.eigenpair.vector, oracle.partition);
    write_file("oracle_report.txt", [&](std::ostream& os) {
      header_.write(os);
      os << "candidates = " << oracle.ranking.size() << '\n';
      os << "oracle_eigenvalue = " << fmt(oracle.best_eigenvalue()) << '\n';
      os << "multistart_eigenvalue = " << fmt(best_ms) << '\n';
      os << "relative_gap = " << fmt(gap) << '\n';
      os << "sublevel_check = " << (sub.holds ? "pass" : "fail") << " (margin " << fmt(sub.margin)
         << ")\n";
      os << "verdict = " << (match ? "MATCH" : "MISMATCH") << '\n';
      os << "# rank,eigenvalue,high_nodes,fractional\n";
      const std::size_t shown = std::min<std::size_t>(oracle.ranking.size(), 50);
      for (std::size_t r = 0; r < shown; ++r) {
        const auto& c = oracle.ranking[r];
        os << r << ',' << fmt(c.eigenvalue) << ',';
        const auto nodes = c.high_nodes();
        for (std::size_t k = 0; k < nodes.size(); ++k) os << (k ? " " : "") << nodes[k];
        os << ',' << c.fractional << '\n';
      }
    });
    log_ << "oracle: " << (match ? "MATCH" : "MISMATCH") << " (oracle "
         << fmt(oracle.best_eigenvalue()) << ", multi-start " << fmt(best_ms) << ")\n";
  }

  void sweep() {
    std::vector<std::optional<double>> bounds;
    if (config_.sweep_sup_bounds.empty())
      bounds.push_back(config_.sup_bound);
    else
      for (double a : config_.sweep_sup_bounds) bounds.emplace_back(a);

    std::ostringstream rows;
    std::size_t total_classes = 0;
    for (const auto& bound : bounds) {
      const ProblemSpec spec = bound ? config_.problem_for_bound(*bound) : spec_;
      const MultiStartResult ms =
          multi_start(grid_, spec, config_.seeds, config_.solver, config_.threads);
      std::vector<std::size_t> class_of(ms.runs.size());
      for (std::size_t c = 0; c < ms.classes.size(); ++c)
        for (const auto m : ms.classes[c].members) class_of[m] = c;
      total_classes += ms.classes.size();
      for (std::size_t i = 0; i < ms.runs.size(); ++i) {
        const Solution& s = ms.runs[i];
        rows << ms.seeds[i] << ',' << (bound ? fmt(*bound) : std::string("")) << ','
             << fmt(spec.lambda_low) << ',' << fmt(spec.lambda_high) << ','
             << fmt(s.eigenpair.eigenvalue) << ',' << class_of[i] << ',' << ms.classes.size()
             << ',' << s.partition.low.size() << ',' << s.partition.high.size() << ','
             << s.partition.fractional << ',' << s.trace.records.size() << ','
             << to_string(s.trace.status) << '\n';
      }
    }
    write_file("sweep.csv", [&](std::ostream& os) {
      header_.write(os);
      os << "# distinct_classes = " << total_classes << '\n';
      os << "seed,A,lambda_low,lambda_high,eigenvalue,class,classes,low_nodes,high_nodes,"
            "fractional,alternations,status\n";
      os << rows.str();
    });
    log_ << "sweep: " << total_classes << " distinct solution classes\n";
  }

  void check() {
    std::ostringstream rep;
    auto line = [&](const std::string& name, bool ok, const std::string& detail) {
      rep << name << ": " << (ok ? "PASS" : "FAIL") << "  " << detail << '\n';
    };

    const StiffnessMatrix stiffness = assemble_stiffness(grid_, OperatorSpec{spec_.order});
    line("stiffness_symmetry", stiffness.matrix().exactly_symmetric(), "entry-for-entry");

    if (spec_.order == 2) {
      GridSpec flat_spec = grid_.spec();
      flat_spec.background = nullptr;
      const Grid flat = build_grid(flat_spec);
      const StiffnessMatrix flat_a = assemble_stiffness(flat, OperatorSpec{2});
      std::vector<double> rho(static_cast<std::size_t>(grid_.size()),
                              spec_.mass / domain_volume(grid_));
      for (double& r : rho) r = std::clamp(r, spec_.lambda_low, spec_.lambda_high);
      const WeightVector curved_w = assemble_weight(grid_, rho);
      WeightVector flat_w;
      double max_rel = 0.0;
      for (std::int32_t i = 0; i < grid_.size(); ++i) {
        const double e2w = grid_.spec().background
                               ? std::exp(2.0 * grid_.spec().background(grid_.position(i)))
                               : 1.0;
        flat_w.values.push_back(rho[i] * e2w);
        max_rel = std::max(max_rel, rel_diff(flat_w.values[i], curved_w.values[i]));
      }
      const double mu_c = first_eigenpair(stiffness, curved_w, config_.solver).eigenvalue;
      const double mu_f = first_eigenpair(flat_a, flat_w, config_.solver).eigenvalue;
      line("conformal_invariance", stiffness == flat_a && max_rel <= 1e-15 &&
                                       rel_diff(mu_c, mu_f) <= 1e-12,
           "stiffness identical = " + std::string(stiffness == flat_a ? "yes" : "no") +
               ", weight rel diff " + fmt(max_rel) + ", mu rel diff " +
               fmt(rel_diff(mu_c, mu_f)));
    }

    const Solution sol = minimize(grid_, stiffness, spec_, InitialDensity::uniform(),
                                  config_.solver);
    const SublevelReport sub = sublevel_check(sol.eigenpair.vector, sol.partition);
    line("monotone_descent", sol.trace.monotone(), std::to_string(sol.trace.records.size()) +
                                                       " alternations, status " +
                                                       to_string(sol.trace.status));
    line("sublevel_set", sub.holds, "margin " + fmt(sub.margin));
    rep << "components: low " << count_components(sol.partition.low, grid_) << ", high "
        << count_components(sol.partition.high, grid_) << '\n';

    for (int axis = 0; axis < grid_.dimension(); ++axis) {
      const auto map = mirror_map(grid_, axis);
      if (map.empty()) {
        rep << "mirror_axis_" << axis << ": grid not mirror symmetric\n";
        continue;
      }
      const Rearrangement start = random_density(grid_, spec_, config_.seeds.front());
      std::vector<double> mirrored(start.density.rho.size());
      for (std::size_t i = 0; i < map.size(); ++i) mirrored[map[i]] = start.density.rho[i];
      const Solution a = minimize(grid_, stiffness, spec_,
                                  InitialDensity::given(start.density.rho), config_.solver);
      const Solution b =
          minimize(grid_, stiffness, spec_, InitialDensity::given(mirrored), config_.solver);
      std::vector<std::int32_t> reflected;
      for (const auto i : a.partition.low) reflected.push_back(map[i]);
      std::sort(reflected.begin(), reflected.end());
      const std::size_t diff = symmetric_difference(reflected, b.partition.low);
      const double dmu = rel_diff(a.eigenpair.eigenvalue, b.eigenpair.eigenvalue);
      line("mirror_equivariance_axis_" + std::to_string(axis),
           dmu <= 1e-8 && static_cast<double>(diff) <= 0.01 * grid_.size(),
           "mu rel diff " + fmt(dmu) + ", reflected low-set mismatch " + std::to_string(diff));
    }

    if (spec_.order == 2) {
      const RegularityReport reg =
          regularity_trend(grid_.spec(), spec_, config_.check_levels, config_.solver);
      std::string detail = "sup second differences";
      for (double s : reg.sups) detail += ' ' + fmt(s);
      detail += "; ratios";
      for (double r : reg.ratios) detail += ' ' + fmt(r);
      line("regularity_trend", reg.bounded(1.5), detail);
    }

    write_file("check_report.txt", [&](std::ostream& os) {
      header_.write(os);
      os << rep.str();
    });
    log_ << rep.str();
  }

  const RunConfig& config_;
  std::ostream& log_;
  Grid grid_;
  ProblemSpec spec_;
  FileHeader header_;
};

void write_status(const fs::path& dir, const std::string& status) {
  std::ofstream os(dir / "status.txt");
  if (os) os << status << '\n';
}

}  // namespace

int run(const RunConfig& config, std::ostream& log) {
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) {
    log << "error: cannot create output directory " << config.out_dir << ": " << ec.message()
        << '\n';
    return kExitInputError;
  }
  log << "kernels: " << kernels::backend_name(kernels::active_backend()) << '\n';
  try {
    Runner runner(config, log);
    runner.execute();
  } catch (const InputError& e) {
    log << "input error: " << e.what() << '\n';
    write_status(config.out_dir, std::string("incomplete: input error: ") + e.what());
    return kExitInputError;
  } catch (const SolverError& e) {
    log << "solver error: " << e.what() << '\n';
    write_status(config.out_dir, std::string("incomplete: solver error: ") + e.what());
    return kExitSolverError;
  }
  write_status(config.out_dir, "complete");
  return kExitOk;
}

}  // namespace cmp
