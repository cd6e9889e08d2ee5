#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "quattro/datagen.hpp"
#include "quattro/io.hpp"
#include "quattro/mpc.hpp"

namespace quattro::cli {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Options every subcommand accepts.
struct Common {
  std::uint64_t seed = 0;
};

void add_common(CLI::App& app, Common& common) {
  app.set_config("--config", "", "key = value file; flags on the command line win");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.add_option("--seed", common.seed, "Seed for every random choice");
}

const std::vector<std::string> kSystems = {"cartpole", "quadrotor"};

MpcConfig default_mpc(SystemKind kind) {
  return kind == SystemKind::kCartPole ? MpcConfig::cartpole()
                                       : MpcConfig::quadrotor();
}

TransformerConfig default_transformer(SystemKind kind) {
  return kind == SystemKind::kCartPole ? TransformerConfig::cartpole()
                                       : TransformerConfig::quadrotor();
}

int sim_steps_for(double seconds, double dt) {
  if (!(seconds >= 0.0) || !std::isfinite(seconds)) {
    throw ConfigError("sim-seconds must be a non-negative number");
  }
  return static_cast<int>(std::llround(seconds / dt));
}

// Q/R diagonal and Q_f scale overrides on top of the system default.
struct CostOverrides {
  std::vector<double> q;
  std::vector<double> r;
  double qf_scale = 0.0;  // 0 = keep default Q_f

  void add_to(CLI::App& app) {
    app.add_option("--q", q, "State weight diagonal, comma separated")
        ->delimiter(',');
    app.add_option("--r", r, "Control weight diagonal, comma separated")
        ->delimiter(',');
    app.add_option("--qf-scale", qf_scale, "Terminal weight Q_f = scale * Q");
  }

  CostModel apply(const CostModel& base) const {
    const int n = base.state_dim(), m = base.control_dim();
    Mat Q = base.Q(), R = base.R(), Qf = base.Qf();
    if (!q.empty()) {
      if (static_cast<int>(q.size()) != n) {
        throw ConfigError("--q needs " + std::to_string(n) + " entries");
      }
      Q = Eigen::Map<const Vec>(q.data(), n).asDiagonal();
    }
    if (!r.empty()) {
      if (static_cast<int>(r.size()) != m) {
        throw ConfigError("--r needs " + std::to_string(m) + " entries");
      }
      R = Eigen::Map<const Vec>(r.data(), m).asDiagonal();
    }
    if (qf_scale > 0.0) {
      Qf = qf_scale * Q;
    } else if (!q.empty()) {
      Qf = 10.0 * Q;
    }
    return CostModel(Q, R, Qf, base.state_ref(0), base.u_ref());
  }
};

std::shared_ptr<const Transformer> load_or_random(const std::string& path,
                                                  SystemKind kind, int horizon,
                                                  std::uint64_t seed) {
  if (!path.empty()) {
    return std::make_shared<const Transformer>(Transformer::from_file(path));
  }
  TransformerConfig cfg = default_transformer(kind);
  cfg.horizon = horizon;
  return std::make_shared<const Transformer>(cfg, random_weights(cfg, seed));
}

void check_model_fits(const Transformer& tf, const SystemModel& model,
                      int horizon) {
  const auto& c = tf.config();
  if (c.state_dim != model.state_dim() ||
      c.control_dim() != model.control_dim() || c.horizon != horizon) {
    throw ConfigError("weights are for n_x=" + std::to_string(c.state_dim) +
                      ", n_u=" + std::to_string(c.control_dim()) + ", T=" +
                      std::to_string(c.horizon) + " but the problem has n_x=" +
                      std::to_string(model.state_dim()) + ", n_u=" +
                      std::to_string(model.control_dim()) +
                      ", T=" + std::to_string(horizon));
  }
}

// Parses with CLI11; returns an exit code when parsing ends the command.
std::optional<int> parse(CLI::App& app, const std::vector<std::string>& args,
                         std::ostream& out, std::ostream& err) {
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << app.get_name() << ": " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }
  return std::nullopt;
}

// Runs a command body with the shared exception-to-exit-code mapping.
template <typename Fn>
int guarded(const std::string& name, std::ostream& err, Fn&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << name << ": " << e.what() << '\n';
    return kUsageError;
  } catch (const InvalidInputError& e) {
    err << name << ": " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << name << ": " << e.what() << '\n';
    return kRuntimeError;
  }
}

std::string join(const Vec& v) {
  std::ostringstream s;
  s << std::setprecision(6);
  for (Eigen::Index i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
  return s.str();
}

// --- gen-data ----------------------------------------------------------------

int cmd_gen_data(const std::vector<std::string>& args, std::ostream& out,
                 std::ostream& err) {
  CLI::App app("Generate a training dataset from vanilla iLQR MPC runs",
               "quattro gen-data");
  Common common;
  add_common(app, common);
  std::string system_name = "cartpole", sampling, out_path;
  int count = 2000, horizon = 0, interval = 0, max_iters = 0;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  double sim_seconds = -1.0, grid_step = 0.0;
  CostOverrides overrides;
  app.add_option("--system", system_name)->check(CLI::IsMember(kSystems));
  app.add_option("--sampling", sampling, "grid or lhs (default: grid for cartpole, lhs for quadrotor)")
      ->check(CLI::IsMember({"grid", "lhs"}));
  app.add_option("--count", count, "LHS sample count")->check(CLI::PositiveNumber);
  app.add_option("--grid-step", grid_step, "Grid spacing")->check(CLI::PositiveNumber);
  app.add_option("--out", out_path, "Output QDTA file")->required();
  app.add_option("--sim-seconds", sim_seconds, "Simulated time per initial state");
  app.add_option("--horizon", horizon)->check(CLI::PositiveNumber);
  app.add_option("--interval", interval, "Plant steps per MPC solve")->check(CLI::PositiveNumber);
  app.add_option("--max-iters", max_iters)->check(CLI::PositiveNumber);
  app.add_option("--threads", threads)->check(CLI::PositiveNumber);
  overrides.add_to(app);
  if (auto code = parse(app, args, out, err)) return *code;

  return guarded("gen-data", err, [&] {
    const SystemKind kind = parse_system_kind(system_name);
    const auto model = make_system(kind);
    const CostModel cost = overrides.apply(default_cost(kind, *model));

    MpcConfig config = default_mpc(kind);
    config.controller = ControllerKind::kIlqr;
    if (horizon > 0) config.horizon = horizon;
    if (interval > 0) config.control_interval = interval;
    if (max_iters > 0) config.solver.max_iters = max_iters;
    if (sim_seconds >= 0.0) config.sim_steps = sim_steps_for(sim_seconds, model->dt());

    SamplingSpec spec = kind == SystemKind::kCartPole
                            ? SamplingSpec::cartpole_grid()
                            : SamplingSpec::quadrotor_lhs(count, common.seed);
    if (!sampling.empty()) {
      spec.mode = sampling == "grid" ? SamplingMode::kGrid : SamplingMode::kLhs;
    }
    spec.count = count;
    spec.seed = common.seed;
    if (grid_step > 0.0) spec.grid_step = grid_step;

    const std::vector<Vec> states = sample_states(spec);
    const auto records =
        generate_dataset(*model, cost, kind, states, config, out_path, threads);
    out << "wrote " << records << " records from " << states.size()
        << " initial states to " << out_path << '\n';
    return kOk;
  });
}

// --- run ---------------------------------------------------------------------

int cmd_run(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app("Simulate closed-loop MPC", "quattro run");
  Common common;
  add_common(app, common);
  std::string system_name = "cartpole", controller_name = "ilqr", weights,
              split_text, trace_path;
  bool oracle = false;
  int horizon = 0, interval = 0, max_iters = 0;
  double sim_seconds = -1.0, eps_low = -1.0, eps_high = -1.0;
  std::vector<double> x0_values;
  CostOverrides overrides;
  app.add_option("--system", system_name)->check(CLI::IsMember(kSystems));
  app.add_option("--controller", controller_name)
      ->check(CLI::IsMember({"ilqr", "quattro", "blended"}));
  app.add_option("--weights", weights, "QTFW weight file");
  app.add_flag("--oracle", oracle, "Predict gains with a full backward pass instead of weights");
  app.add_option("--split", split_text, "iLQR:transformer steps, e.g. 5:25");
  app.add_option("--horizon", horizon)->check(CLI::PositiveNumber);
  app.add_option("--interval", interval, "Plant steps per MPC solve")->check(CLI::PositiveNumber);
  app.add_option("--max-iters", max_iters)->check(CLI::PositiveNumber);
  app.add_option("--sim-seconds", sim_seconds);
  app.add_option("--x0", x0_values, "Initial state, comma separated")->delimiter(',');
  app.add_option("--trace", trace_path, "Trace CSV output");
  app.add_option("--eps-low", eps_low, "Blend threshold below which LQR takes over");
  app.add_option("--eps-high", eps_high, "Blend threshold above which iLQR-TF takes over");
  overrides.add_to(app);
  if (auto code = parse(app, args, out, err)) return *code;

  return guarded("run", err, [&] {
    const SystemKind kind = parse_system_kind(system_name);
    const auto model = make_system(kind);
    const CostModel cost = overrides.apply(default_cost(kind, *model));

    MpcConfig config = default_mpc(kind);
    config.controller = parse_controller_kind(controller_name);
    if (!split_text.empty()) {
      config.split = SplitSpec::parse(split_text);
      config.split.validate();
      if (horizon == 0) horizon = config.split.horizon;
    }
    if (horizon > 0) {
      config.horizon = horizon;
      if (split_text.empty()) {
        config.split.horizon = horizon;
        config.split.ilqr_steps = std::min(config.split.ilqr_steps, horizon);
      }
    }
    if (interval > 0) config.control_interval = interval;
    if (max_iters > 0) config.solver.max_iters = max_iters;
    if (sim_seconds >= 0.0) config.sim_steps = sim_steps_for(sim_seconds, model->dt());
    if (eps_low >= 0.0) config.blend.eps_low = eps_low;
    if (eps_high >= 0.0) config.blend.eps_high = eps_high;

    std::unique_ptr<GainPredictor> predictor;
    if (config.controller != ControllerKind::kIlqr) {
      if (oracle) {
        predictor = std::make_unique<OraclePredictor>(*model, cost);
      } else if (weights.empty()) {
        throw ConfigError(controller_name + " controller needs --weights (or --oracle)");
      } else {
        auto tf = std::make_shared<const Transformer>(Transformer::from_file(weights));
        check_model_fits(*tf, *model, config.horizon);
        predictor = std::make_unique<TransformerPredictor>(std::move(tf));
      }
    }

    Vec x0 = default_initial_state(kind);
    if (!x0_values.empty()) {
      if (static_cast<int>(x0_values.size()) != model->state_dim()) {
        throw ConfigError("--x0 needs " + std::to_string(model->state_dim()) + " entries");
      }
      x0 = Eigen::Map<const Vec>(x0_values.data(), model->state_dim());
    }

    const SimTrace trace = run_mpc(*model, cost, config, x0, predictor.get());
    if (!trace_path.empty()) write_trace_csv(trace_path, trace);

    int iterations = 0;
    double iter_ms = 0.0;
    for (const auto& s : trace.solves) {
      iterations += s.report.iterations;
      for (const auto& rec : s.report.history) iter_ms += rec.wall_ms;
    }
    const double final_cost = trace.solves.empty() ? 0.0 : trace.solves.back().report.cost;
    out << std::setprecision(9) << "final_cost=" << final_cost
        << " iterations=" << iterations << " mean_iter_ms="
        << (iterations ? iter_ms / iterations : 0.0)
        << " solves=" << trace.solves.size() << " steps=" << trace.rows.size()
        << " final_state=" << join(trace.final_state) << '\n';
    if (trace.truncated) {
      err << "run: " << trace.failure << '\n';
      return kRuntimeError;
    }
    return kOk;
  });
}

// --- eval --------------------------------------------------------------------

int cmd_eval(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  CLI::App app("Compare split-gain and full-gain controls on dataset records",
               "quattro eval");
  Common common;
  add_common(app, common);
  EvalOptions opts;
  std::string split_text, report_path;
  app.add_option("--weights", opts.weights, "QTFW weight file");
  app.add_option("--data", opts.data, "QDTA dataset")->required();
  app.add_option("--split", split_text, "iLQR:transformer steps, e.g. 5:25");
  app.add_option("--report", report_path, "Per-record MSE CSV");
  app.add_flag("--oracle", opts.oracle, "Use exact gains in place of the transformer");
  app.add_option("--max-records", opts.max_records, "Evaluate only the first N records");
  if (auto code = parse(app, args, out, err)) return *code;

  return guarded("eval", err, [&] {
    if (!split_text.empty()) opts.split = SplitSpec::parse(split_text);
    if (!opts.oracle && opts.weights.empty()) {
      throw ConfigError("eval needs --weights (or --oracle)");
    }
    const std::vector<EvalRow> rows = run_eval(opts);
    if (!report_path.empty()) {
      std::ostringstream csv;
      csv << "record,mpc_step,iteration,status,mse\n" << std::setprecision(9);
      for (const auto& r : rows) {
        csv << r.record << ',' << r.mpc_step << ',' << r.iteration << ','
            << int(r.status) << ',' << r.mse << '\n';
      }
      write_file_atomic(report_path, csv.str());
    }
    std::vector<double> mse;
    for (const auto& r : rows) mse.push_back(r.mse);
    const Summary s = summarize(mse);
    out << std::setprecision(6) << "records=" << rows.size()
        << " finite=" << s.count << " min=" << s.min << " q1=" << s.q1
        << " median=" << s.median << " q3=" << s.q3 << " max=" << s.max << '\n';
    return kOk;
  });
}

// --- bench -------------------------------------------------------------------

int cmd_bench(const std::vector<std::string>& args, std::ostream& out,
              std::ostream& err) {
  CLI::App app("Time vanilla and split iLQR iterations", "quattro bench");
  Common common;
  add_common(app, common);
  BenchOptions opts;
  std::string system_name = "quadrotor", split_text, csv_path;
  app.add_option("--system", system_name)->check(CLI::IsMember(kSystems));
  app.add_option("--reps", opts.reps, "Repetitions")->check(CLI::PositiveNumber);
  app.add_option("--split", split_text, "iLQR:transformer steps");
  app.add_option("--weights", opts.weights, "QTFW file (seeded random weights if absent)");
  app.add_option("--csv", csv_path, "Write the table here instead of stdout");
  app.add_flag("--sweep", opts.sweep, "Also time vanilla backward passes at T = 10, 20, 40");
  if (auto code = parse(app, args, out, err)) return *code;

  return guarded("bench", err, [&] {
    opts.system = parse_system_kind(system_name);
    opts.seed = common.seed;
    if (!split_text.empty()) opts.split = SplitSpec::parse(split_text);
    const auto rows = run_bench(opts);
    std::ostringstream csv;
    write_bench_csv(csv, rows);
    if (csv_path.empty()) {
      out << csv.str();
    } else {
      write_file_atomic(csv_path, csv.str());
    }
    return kOk;
  });
}

const char* kUsage =
    "usage: quattro <command> [options]\n"
    "\n"
    "commands:\n"
    "  gen-data   generate a QDTA training dataset with vanilla iLQR MPC\n"
    "  run        simulate a closed-loop controller and write a trace CSV\n"
    "  eval       per-record MSE of split-gain vs full-gain controls\n"
    "  bench      time backward, predict and forward phases\n"
    "\n"
    "Run 'quattro <command> --help' for the options of a command.\n";

}  // namespace

CostModel default_cost(SystemKind kind, const SystemModel& model) {
  if (kind == SystemKind::kCartPole) return default_cartpole_cost();
  const auto* quad = dynamic_cast<const QuadrotorModel*>(&model);
  if (quad == nullptr) throw ConfigError("quadrotor cost needs a quadrotor model");
  return default_quadrotor_cost(quad->hover_thrust());
}

Vec default_initial_state(SystemKind kind) {
  if (kind == SystemKind::kCartPole) {
    Vec x(4);
    x << 0.3, 0.3, 0.0, 0.0;
    return x;
  }
  Vec x = Vec::Zero(12);
  x.head(6) << 0.2, -0.2, 0.4, 0.1, -0.1, 0.3;
  return x;
}

std::vector<BenchRow> run_bench(const BenchOptions& opts) {
  if (opts.reps < 1) throw ConfigError("bench needs at least one repetition");
  const auto model = make_system(opts.system);
  const CostModel cost = default_cost(opts.system, *model);
  const MpcConfig mpc = default_mpc(opts.system);
  const SplitSpec split = opts.split.value_or(mpc.split);
  split.validate();
  const int T = split.horizon;
  const int s = split.ilqr_steps;

  auto tf = load_or_random(opts.weights, opts.system, T, opts.seed);
  check_model_fits(*tf, *model, T);
  const TransformerPredictor predictor(tf);

  const Trajectory nominal =
      rollout(*model, cost, default_initial_state(opts.system),
              ControlTrajectory(size_t(T), model->nominal_control()));
  const double mu = SolverOptions{}.mu_init;

  std::vector<std::vector<double>> samples(7);
  for (int r = 0; r < opts.reps; ++r) {
    auto t0 = Clock::now();
    const auto full = backward_pass(*model, cost, nominal, 0, mu);
    const double vb = ms_since(t0);
    t0 = Clock::now();
    const auto vf = forward_pass(*model, cost, nominal, full.gains, 1.0);
    const double vfw = ms_since(t0);

    t0 = Clock::now();
    const auto part = backward_pass(*model, cost, nominal, T - s, mu);
    const double qb = ms_since(t0);
    double qp = 0.0;
    GainSequence gains = part.gains;
    if (s < T) {
      t0 = Clock::now();
      const GainSequence head = predictor.predict({nominal, part.gains, mu});
      qp = ms_since(t0);
      gains = GainSequence::concat(head, part.gains);
    }
    t0 = Clock::now();
    const auto qf = forward_pass(*model, cost, nominal, gains, 1.0);
    const double qfw = ms_since(t0);
    (void)vf;
    (void)qf;

    samples[0].push_back(vb);
    samples[1].push_back(vfw);
    samples[2].push_back(vb + vfw);
    samples[3].push_back(qb);
    samples[4].push_back(qp);
    samples[5].push_back(qfw);
    samples[6].push_back(qb + qp + qfw);
  }

  auto row = [](std::string phase, const std::vector<double>& v, int steps) {
    BenchRow out{std::move(phase), 0.0, 0.0, steps};
    for (double x : v) out.mean_ms += x;
    out.mean_ms /= double(v.size());
    if (v.size() > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - out.mean_ms) * (x - out.mean_ms);
      out.std_ms = std::sqrt(ss / double(v.size() - 1));
    }
    return out;
  };

  std::vector<BenchRow> rows = {
      row("vanilla_backward", samples[0], T), row("vanilla_forward", samples[1], T),
      row("vanilla_total", samples[2], T),    row("quattro_backward", samples[3], s),
      row("quattro_predict", samples[4], s),  row("quattro_forward", samples[5], s),
      row("quattro_total", samples[6], s)};

  if (opts.sweep) {
    for (int horizon : {10, 20, 40}) {
      const Trajectory nom =
          rollout(*model, cost, default_initial_state(opts.system),
                  ControlTrajectory(size_t(horizon), model->nominal_control()));
      std::vector<double> v;
      for (int r = 0; r < opts.reps; ++r) {
        const auto t0 = Clock::now();
        const auto res = backward_pass(*model, cost, nom, 0, mu);
        v.push_back(ms_since(t0));
        (void)res;
      }
      rows.push_back(row("sweep_backward_T" + std::to_string(horizon), v, horizon));
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "phase,mean_ms,std_ms,steps\n" << std::setprecision(6);
  for (const auto& r : rows) {
    out << r.phase << ',' << r.mean_ms << ',' << r.std_ms << ',' << r.steps << '\n';
  }
}

std::vector<EvalRow> run_eval(const EvalOptions& opts) {
  const Dataset data = read_dataset(opts.data);
  const DatasetHeader& h = data.header;
  const auto kind = static_cast<SystemKind>(h.system_id);
  const auto model = make_system(kind);
  const CostModel cost = default_cost(kind, *model);
  if (int(h.state_dim) != model->state_dim() ||
      int(h.control_dim) != model->control_dim()) {
    throw FormatError("dataset dims do not match system " + to_string(kind));
  }
  const int T = int(h.horizon);
  SplitSpec split = opts.split.value_or(default_mpc(kind).split);
  if (!opts.split) split.horizon = T;
  split.validate();
  if (split.horizon != T) {
    throw ConfigError("split covers " + std::to_string(split.horizon) +
                      " steps but the dataset horizon is " + std::to_string(T));
  }

  std::unique_ptr<GainPredictor> predictor;
  if (opts.oracle) {
    predictor = std::make_unique<OraclePredictor>(*model, cost);
  } else {
    auto tf = std::make_shared<const Transformer>(Transformer::from_file(opts.weights));
    check_model_fits(*tf, *model, T);
    predictor = std::make_unique<TransformerPredictor>(std::move(tf));
  }
  const GainStrategy hybrid = quattro_strategy(*model, cost, *predictor, split);
  const SolverOptions solver;

  std::vector<EvalRow> rows;
  const std::uint64_t limit =
      opts.max_records ? std::min<std::uint64_t>(opts.max_records, data.records.size())
                       : data.records.size();
  for (std::uint64_t i = 0; i < limit; ++i) {
    const DatasetRecord& rec = data.records[i];
    const Trajectory stored = rec.trajectory(h);
    const Trajectory nominal = rollout(*model, cost, stored.X.front(), stored.U);

    // Same regularization for both, raised until the full pass factors.
    double mu = solver.mu_init;
    GainSequence full;
    while (true) {
      try {
        full = backward_pass(*model, cost, nominal, 0, mu).gains;
        break;
      } catch (const NotPositiveDefiniteError&) {
        mu *= solver.mu_increase;
        if (mu > solver.mu_max) throw;
      }
    }
    const GainSequence split_gains = hybrid(nominal, mu).gains;

    EvalRow row{i, rec.mpc_step, rec.iteration, rec.status,
                std::numeric_limits<double>::infinity()};
    const auto a = forward_pass(*model, cost, nominal, full, 1.0);
    const auto b = forward_pass(*model, cost, nominal, split_gains, 1.0);
    if (a && b) row.mse = evaluate_mse(a->U, b->U);
    rows.push_back(row);
  }
  return rows;
}

Summary summarize(std::vector<double> values) {
  std::erase_if(values, [](double v) { return !std::isfinite(v); });
  Summary s;
  s.count = values.size();
  if (values.empty()) {
    s.min = s.q1 = s.median = s.q3 = s.max = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  std::sort(values.begin(), values.end());
  auto at = [&](double q) {
    const double pos = q * double(values.size() - 1);
    const auto lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - double(lo)) * (values[hi] - values[lo]);
  };
  s.min = values.front();
  s.q1 = at(0.25);
  s.median = at(0.5);
  s.q3 = at(0.75);
  s.max = values.back();
  return s;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  if (args.empty()) {
    err << kUsage;
    return kUsageError;
  }
  const std::string& cmd = args.front();
  const std::vector<std::string> rest(args.begin() + 1, args.end());
  if (cmd == "-h" || cmd == "--help" || cmd == "help") {
    out << kUsage;
    return kOk;
  }
  if (cmd == "gen-data") return cmd_gen_data(rest, out, err);
  if (cmd == "run") return cmd_run(rest, out, err);
  if (cmd == "eval") return cmd_eval(rest, out, err);
  if (cmd == "bench") return cmd_bench(rest, out, err);
  err << "unknown command '" << cmd << "'\n\n" << kUsage;
  return kUsageError;
}

}  // namespace quattro::cli
