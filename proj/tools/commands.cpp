#include "commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "varopt/ais.hpp"
#include "varopt/error.hpp"
#include "varopt/io.hpp"
#include "varopt/oracle.hpp"
#include "varopt/rng.hpp"
#include "varopt/schedule.hpp"
#include "varopt/trainer.hpp"

namespace varopt::cli {

namespace fs = std::filesystem;

namespace {

// Sub-seed tags. The survey pass and the main pass draw from unrelated
// streams so the schedule choice cannot correlate with the main weights.
constexpr std::uint64_t kSurveyPass = 1;
constexpr std::uint64_t kMainPass = 2;

/// Failure inside a named pipeline stage.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct PathOptions {
  std::string model_a;
  std::string model_b;
};

struct SurveyOptions {
  int k_tilde = 1000;
  int n_tilde = 100;
  std::optional<int> half_width;
  bool unweighted = false;
};

struct SolveOptions {
  double tol = 1e-6;
  int max_iter = 200;
  double decel_tol = 1e-6;
};

void add_path_flags(CLI::App* cmd, PathOptions& p) {
  cmd->add_option("--model-a", p.model_a,
                  "Base model JSON (zero weights); default: uniform base with one hidden unit");
  cmd->add_option("--model-b", p.model_b, "Target model JSON")->required();
}

void add_survey_flags(CLI::App* cmd, SurveyOptions& s) {
  cmd->add_option("--k-tilde", s.k_tilde, "Steps of the linear survey AIS pass")
      ->check(CLI::Range(10, 100000000));
  cmd->add_option("--n-tilde", s.n_tilde, "Chains in the survey pass")
      ->check(CLI::Range(10, 100000000));
  cmd->add_option("--smooth-half-width", s.half_width,
                  "Box-filter half width for g (default ceil(k_tilde / 100))")
      ->check(CLI::NonNegativeNumber);
  cmd->add_flag("--unweighted", s.unweighted, "Estimate g without importance weights");
}

GeometricPath load_path(const PathOptions& p) {
  return stage("load-models", [&] {
    RbmParams target = io::read_model(p.model_b);
    RbmParams base = p.model_a.empty()
                         ? RbmParams::factorial(Eigen::VectorXd::Zero(target.n_visible()), 1)
                         : io::read_model(p.model_a);
    return GeometricPath(std::move(base), std::move(target));
  });
}

GTable survey(const GeometricPath& path, const SurveyOptions& s, std::uint64_t seed) {
  GTable raw = stage("estimate-g", [&] {
    return estimate_g_table(path, s.k_tilde, s.n_tilde, seed,
                            s.unweighted ? GWeighting::Unweighted : GWeighting::SelfNormalized);
  });
  return stage("smooth", [&] {
    return dlog_g(smooth(raw, s.half_width.value_or(default_half_width(s.k_tilde))));
  });
}

Schedule solve(const GTable& table, int k_steps, const SolveOptions& o,
               std::optional<double> max_delta) {
  Schedule schedule = stage("de-solve", [&] {
    DeSolveOptions opts;
    opts.k_steps = k_steps;
    opts.tol = o.tol;
    opts.max_iter = o.max_iter;
    return de_solve(table, opts);
  });
  if (max_delta) {
    schedule = stage("decelerate", [&] {
      return decelerate(schedule, DecelerateOptions{*max_delta, o.decel_tol, 10000});
    });
  }
  return schedule;
}

void write_trace(const fs::path& file, const AisResult& result) {
  if (!result.on_the_fly) return;
  std::ofstream out(file, std::ios::binary);
  out << "beta,ess\n";
  for (const auto& s : *result.on_the_fly) {
    out << io::format_double(s.beta) << ',' << io::format_double(s.ess) << '\n';
  }
}

void print_summary(const AisResult& r) {
  std::cout << "log_z_hat " << io::format_double(r.log_z_hat) << "\ness " << r.ess
            << "\nlog_weight_std " << r.log_weight_std << '\n';
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty()) out.push_back(std::stod(cell));
  }
  return out;
}

std::pair<int, int> parse_bars(const std::string& shape) {
  const auto x = shape.find('x');
  if (x == std::string::npos) throw ContractViolation("--bars expects RxC, e.g. 3x4");
  return {std::stoi(shape.substr(0, x)), std::stoi(shape.substr(x + 1))};
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Annealed importance sampling with variance-optimal annealing schedules"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string out_dir = ".";
  PathOptions path_opts;
  SurveyOptions survey_opts;
  SolveOptions solve_opts;
  int k_steps = 1000;
  int n_runs = 1000;
  std::optional<double> dbmax;
  bool trace_ess = false;

  auto seed_flag = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Master seed (required)")->required();
  };
  auto out_flag = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_dir, "Output directory");
  };
  auto k_flag = [&](CLI::App* cmd) {
    cmd->add_option("-K", k_steps, "Number of annealing steps")->check(CLI::PositiveNumber);
  };
  auto n_flag = [&](CLI::App* cmd) {
    cmd->add_option("-N", n_runs, "Number of AIS runs")->check(CLI::Range(2, 100000000));
  };
  auto dbmax_flag = [&](CLI::App* cmd) {
    cmd->add_option("--dbmax", dbmax, "Cap on beta steps (deceleration)")
        ->check(CLI::Range(0.0, 1.0));
  };

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a binary RBM with CD-k or PCD");
  std::string data_file;
  std::string bars = "3x4";
  int n_hidden = 10;
  std::string algorithm = "pcd";
  TrainConfig train_cfg;
  train_cmd->add_option("--data", data_file, "CSV of 0/1 rows (default: bundled bars patterns)");
  train_cmd->add_option("--bars", bars, "Bars image shape RxC for the bundled dataset");
  train_cmd->add_option("--hidden", n_hidden, "Hidden units")->check(CLI::PositiveNumber);
  train_cmd->add_option("--algorithm", algorithm, "cd or pcd")
      ->check(CLI::IsMember({"cd", "pcd"}));
  train_cmd->add_option("--gibbs-steps", train_cfg.gibbs_steps)->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", train_cfg.learning_rate)->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--epochs", train_cfg.epochs)->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch-size", train_cfg.batch_size)->check(CLI::PositiveNumber);
  train_cmd->add_option("--l2", train_cfg.l2)->check(CLI::NonNegativeNumber);
  seed_flag(train_cmd);
  out_flag(train_cmd);

  // ais
  auto* ais_cmd = app.add_subcommand("ais", "Run AIS with a linear or file schedule");
  std::string schedule_file;
  bool dump_log_w = false;
  add_path_flags(ais_cmd, path_opts);
  k_flag(ais_cmd);
  n_flag(ais_cmd);
  ais_cmd->add_option("--schedule", schedule_file, "Schedule CSV (default: linear with -K)");
  ais_cmd->add_flag("--trace-ess", trace_ess, "Record on-the-fly ESS at every step");
  ais_cmd->add_flag("--dump-log-w", dump_log_w, "Write per-run log weights to log_w.csv");
  seed_flag(ais_cmd);
  out_flag(ais_cmd);

  // estimate-g
  auto* est_cmd = app.add_subcommand("estimate-g", "Estimate g(beta) with a linear survey pass");
  add_path_flags(est_cmd, path_opts);
  add_survey_flags(est_cmd, survey_opts);
  seed_flag(est_cmd);
  out_flag(est_cmd);

  // solve-schedule
  auto* solve_cmd = app.add_subcommand("solve-schedule", "Optimal schedule from a g table");
  std::string gtable_file;
  std::string method = "de";
  solve_cmd->add_option("--g-table", gtable_file, "g table CSV")->required();
  solve_cmd->add_option("--method", method, "de (discrete Euler-Lagrange solver) or quadrature")
      ->check(CLI::IsMember({"de", "quadrature"}));
  solve_cmd->add_option("--tol", solve_opts.tol, "Euler-Lagrange residual tolerance");
  solve_cmd->add_option("--max-iter", solve_opts.max_iter)->check(CLI::PositiveNumber);
  solve_cmd->add_option("--decel-tol", solve_opts.decel_tol, "Deceleration tolerance");
  k_flag(solve_cmd);
  dbmax_flag(solve_cmd);
  out_flag(solve_cmd);

  // decelerate
  auto* dec_cmd = app.add_subcommand("decelerate", "Cap the steps of a schedule");
  std::string deltas_text;
  double dec_tol = 1e-6;
  dec_cmd->add_option("--schedule", schedule_file, "Schedule CSV");
  dec_cmd->add_option("--deltas", deltas_text, "Comma-separated beta increments");
  dec_cmd->add_option("--dbmax", dbmax, "Maximum step")->required()->check(CLI::Range(0.0, 1.0));
  dec_cmd->add_option("--tol", dec_tol, "Tolerance on the clipped sum");
  out_flag(dec_cmd);

  // varopt
  auto* var_cmd = app.add_subcommand("varopt", "Survey g, solve the optimal schedule, run AIS");
  add_path_flags(var_cmd, path_opts);
  add_survey_flags(var_cmd, survey_opts);
  k_flag(var_cmd);
  n_flag(var_cmd);
  dbmax_flag(var_cmd);
  var_cmd->add_option("--tol", solve_opts.tol, "Euler-Lagrange residual tolerance");
  var_cmd->add_option("--max-iter", solve_opts.max_iter)->check(CLI::PositiveNumber);
  var_cmd->add_option("--decel-tol", solve_opts.decel_tol, "Deceleration tolerance");
  var_cmd->add_flag("--trace-ess", trace_ess, "Record on-the-fly ESS at every step");
  seed_flag(var_cmd);
  out_flag(var_cmd);

  // exact
  auto* exact_cmd = app.add_subcommand("exact", "Exact log Z by enumeration");
  std::string model_file;
  int cap = kDefaultEnumerationCap;
  exact_cmd->add_option("--model,--model-b", model_file, "Model JSON")->required();
  exact_cmd->add_option("--cap", cap, "Largest layer size to enumerate");

  // compare
  auto* cmp_cmd = app.add_subcommand("compare", "Run AIS under several schedules and K values");
  std::string schedules_text = "linear,varopt";
  std::string ks_text = "1000";
  int replicates = 1;
  add_path_flags(cmp_cmd, path_opts);
  add_survey_flags(cmp_cmd, survey_opts);
  n_flag(cmp_cmd);
  cmp_cmd->add_option("--schedules", schedules_text,
                      "Comma list of linear, varopt, varopt+<dbmax>, file:<csv>");
  cmp_cmd->add_option("--ks", ks_text, "Comma list of K values");
  cmp_cmd->add_option("--replicates", replicates, "Seeds in the ladder")
      ->check(CLI::PositiveNumber);
  cmp_cmd->add_option("--tol", solve_opts.tol, "Euler-Lagrange residual tolerance");
  seed_flag(cmp_cmd);
  out_flag(cmp_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const fs::path out = out_dir;
  try {
    stage("output-dir", [&] { fs::create_directories(out); });
    if (*train_cmd) {
      const BinaryDataset data = stage("load-data", [&] {
        if (!data_file.empty()) return io::read_dataset(data_file);
        const auto [r, c] = parse_bars(bars);
        return bars_dataset(r, c);
      });
      train_cfg.algorithm = algorithm == "cd" ? TrainAlgorithm::CD : TrainAlgorithm::PCD;
      train_cfg.seed = seed;
      Rng rng(seed);
      const RbmParams model = stage("train", [&] { return train(data, n_hidden, train_cfg, rng); });
      stage("write", [&] { io::write_model(out / "model.json", model); });
      std::cout << "wrote " << (out / "model.json").string() << '\n';
    } else if (*ais_cmd) {
      const GeometricPath path = load_path(path_opts);
      const Schedule schedule = stage("schedule", [&] {
        return schedule_file.empty() ? linear_schedule(k_steps) : io::read_schedule(schedule_file);
      });
      AisOptions opts;
      opts.trace = trace_ess;
      const AisResult result = stage("ais", [&] {
        return run_ais(path, schedule, n_runs, derive_seed(seed, kMainPass), opts);
      });
      stage("write", [&] {
        io::write_result(out / "result.json", result);
        if (dump_log_w) io::write_log_weights(out / "log_w.csv", result);
        write_trace(out / "on_the_fly.csv", result);
      });
      print_summary(result);
    } else if (*est_cmd) {
      const GeometricPath path = load_path(path_opts);
      const GTable table = survey(path, survey_opts, derive_seed(seed, kSurveyPass));
      stage("write", [&] { io::write_gtable(out / "g_table.csv", table); });
      std::cout << "wrote " << (out / "g_table.csv").string() << '\n';
    } else if (*solve_cmd) {
      const GTable table = stage("load-g-table", [&] { return io::read_gtable(gtable_file); });
      Schedule schedule = method == "de" ? solve(table, k_steps, solve_opts, dbmax)
                                         : stage("quadrature", [&] {
                                             return quadrature_schedule(table, k_steps);
                                           });
      if (method != "de" && dbmax) {
        schedule = stage("decelerate", [&] {
          return decelerate(schedule, DecelerateOptions{*dbmax, solve_opts.decel_tol, 10000});
        });
      }
      stage("write", [&] { io::write_schedule(out / "schedule.csv", schedule); });
      std::cout << "wrote " << (out / "schedule.csv").string() << '\n';
    } else if (*dec_cmd) {
      const Schedule input = stage("schedule", [&] {
        if (!schedule_file.empty()) return io::read_schedule(schedule_file);
        if (deltas_text.empty()) throw ContractViolation("give --schedule or --deltas");
        std::vector<double> betas{0.0};
        for (double d : parse_list(deltas_text)) betas.push_back(betas.back() + d);
        return Schedule(std::move(betas));
      });
      const Schedule output = stage("decelerate", [&] {
        return decelerate(input, DecelerateOptions{*dbmax, dec_tol, 10000});
      });
      stage("write", [&] { io::write_schedule(out / "schedule.csv", output); });
      for (double b : output.betas()) std::cout << io::format_double(b) << '\n';
    } else if (*var_cmd) {
      nlohmann::json timings;
      const GeometricPath path = load_path(path_opts);
      Stopwatch survey_clock;
      const GTable table = survey(path, survey_opts, derive_seed(seed, kSurveyPass));
      timings["survey_s"] = survey_clock.seconds();
      stage("write", [&] { io::write_gtable(out / "g_table.csv", table); });

      Stopwatch solve_clock;
      const Schedule schedule = solve(table, k_steps, solve_opts, dbmax);
      timings["solve_s"] = solve_clock.seconds();
      stage("write", [&] { io::write_schedule(out / "schedule.csv", schedule); });

      Stopwatch main_clock;
      AisOptions opts;
      opts.trace = trace_ess;
      const AisResult result = stage("ais", [&] {
        return run_ais(path, schedule, n_runs, derive_seed(seed, kMainPass), opts);
      });
      timings["main_ais_s"] = main_clock.seconds();
      stage("write", [&] {
        io::write_result(out / "result.json", result);
        write_trace(out / "on_the_fly.csv", result);
        std::ofstream t(out / "timings.json");
        t << timings.dump(2) << '\n';
      });
      print_summary(result);
      std::cerr << "timings: " << timings.dump() << '\n';
    } else if (*exact_cmd) {
      const RbmParams model = stage("load-models", [&] { return io::read_model(model_file); });
      const ExactSummary s = stage("exact", [&] { return exact_log_z(model, cap); });
      nlohmann::json j;
      j["log_z"] = s.log_z;
      j["n_visible"] = s.n_visible;
      j["n_hidden"] = s.n_hidden;
      j["method"] = s.method == EnumerationMethod::Hidden ? "enumerate_hidden" : "enumerate_visible";
      std::cout << j.dump(2) << '\n';
    } else if (*cmp_cmd) {
      const GeometricPath path = load_path(path_opts);
      std::vector<int> ks;
      for (double k : parse_list(ks_text)) ks.push_back(static_cast<int>(k));
      std::vector<std::string> names;
      {
        std::stringstream ss(schedules_text);
        std::string name;
        while (std::getline(ss, name, ',')) {
          if (!name.empty()) names.push_back(name);
        }
      }
      std::ofstream csv(out / "compare.csv", std::ios::binary);
      csv << "schedule_name,K,N,seed,log_z_hat,ess,log_weight_std,wall_time_s\n";
      for (int r = 0; r < replicates; ++r) {
        const std::uint64_t rep_seed = derive_seed(seed, static_cast<std::uint64_t>(r));
        std::optional<GTable> table;
        for (int k : ks) {
          for (const auto& name : names) {
            Stopwatch clock;
            const Schedule schedule = stage("schedule " + name, [&]() -> Schedule {
              if (name == "linear") return linear_schedule(k);
              if (name.rfind("file:", 0) == 0) return io::read_schedule(name.substr(5));
              if (name.rfind("varopt", 0) == 0) {
                if (!table) table = survey(path, survey_opts, derive_seed(rep_seed, kSurveyPass));
                std::optional<double> cap_delta;
                if (name.size() > 7 && name[6] == '+') cap_delta = std::stod(name.substr(7));
                return solve(*table, k, solve_opts, cap_delta);
              }
              throw ContractViolation("unknown schedule '" + name + "'");
            });
            const AisResult result = stage("ais " + name, [&] {
              return run_ais(path, schedule, n_runs, derive_seed(rep_seed, kMainPass));
            });
            csv << name << ',' << schedule.steps() << ',' << n_runs << ',' << rep_seed << ','
                << io::format_double(result.log_z_hat) << ',' << io::format_double(result.ess)
                << ',' << io::format_double(result.log_weight_std) << ','
                << io::format_double(clock.seconds()) << '\n';
            csv.flush();
          }
        }
      }
      std::cout << "wrote " << (out / "compare.csv").string() << '\n';
    }
  } catch (const StageError& e) {
    std::cerr << "error [" << e.stage() << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace varopt::cli
