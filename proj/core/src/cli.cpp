// SPDX-License-Identifier: Apache-2.0

#include "moelever/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "moelever/arch.hpp"
#include "moelever/errors.hpp"
#include "moelever/fit.hpp"
#include "moelever/flops.hpp"
#include "moelever/io.hpp"
#include "moelever/laws.hpp"
#include "moelever/planner.hpp"

namespace moelever {

namespace {

using nlohmann::json;

struct CliState {
  bool pretty = false;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  void emit(const json& j) const { *out << (pretty ? j.dump(2) : j.dump()) << '\n'; }
};

LawBundle resolve_bundle(const std::string& coeffs_path) {
  if (!coeffs_path.empty()) return load_law_bundle(coeffs_path);
  if (const char* env = std::getenv("MOELEVER_COEFFS"); env && *env) return load_law_bundle(env);
  return default_law_bundle();
}

json power_law_json(const PowerLaw& law) { return json{{"k", law.k}, {"p", law.p}}; }

json report_json(const FitReport& r) {
  return json{{"parameters", r.parameters},
              {"objective", r.objective},
              {"converged", r.converged},
              {"train_count", r.train_count},
              {"validation_count", r.validation_count},
              {"validation_relative_error", r.validation_relative_error},
              {"train_relative_error", r.train_relative_error},
              {"notes", r.notes}};
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot open output file: " + path);
  f << text;
}

std::vector<RunRecord> load_runs_checked(const std::string& path, const std::string& format,
                                         std::ostream& err) {
  const RunFormat fmt = format == "json" ? RunFormat::json : RunFormat::csv;
  LoadResult loaded = load_runs(path, fmt);
  for (const auto& e : loaded.errors)
    err << path << ":" << e.line << ": " << e.message << " (row rejected)\n";
  if (loaded.records.empty()) throw ValidationError("no usable records in " + path);
  return loaded.records;
}

void register_commands(CLI::App& app, CliState& state) {
  // flops
  {
    auto* cmd = app.add_subcommand("flops", "FLOPs breakdown of an architecture");
    auto config = std::make_shared<std::string>();
    auto seq = std::make_shared<double>(0);
    auto batch = std::make_shared<double>(1);
    cmd->add_option("--config", *config, "architecture JSON file")->required();
    cmd->add_option("--seq", *seq, "sequence length (default: arch seq field)");
    cmd->add_option("--batch", *batch, "batch size in sequences");
    cmd->callback([&state, config, seq, batch] {
      const MoEArchitecture arch = load_arch_file(*config);
      const double s = *seq > 0 ? *seq : arch.seq;
      const FlopsBreakdown b = forward_flops(arch, *batch, s);
      state.emit(json{{"batch", *batch},
                      {"seq", s},
                      {"attention", b.attention},
                      {"ffn", b.ffn},
                      {"logits", b.logits},
                      {"forward_total", b.forward_total},
                      {"train_total", b.train_total},
                      {"per_token_scale_M", b.per_token_scale_M}});
    });
  }
  // params
  {
    auto* cmd = app.add_subcommand("params", "parameter counts and architectural metrics");
    auto config = std::make_shared<std::string>();
    cmd->add_option("--config", *config, "architecture JSON file")->required();
    cmd->callback([&state, config] {
      const ArchMetrics m = metrics(load_arch_file(*config));
      state.emit(json{{"N", m.N}, {"N_a", m.N_a}, {"A", m.A}, {"G", m.G}, {"S", m.S}});
    });
  }
  // predict-el
  {
    auto* cmd = app.add_subcommand("predict-el", "joint efficiency-leverage prediction");
    auto A = std::make_shared<double>(0);
    auto G = std::make_shared<double>(0);
    auto C = std::make_shared<double>(0);
    auto coeffs = std::make_shared<std::string>();
    cmd->add_option("--activation", *A, "activation ratio in (0, 1]")->required();
    cmd->add_option("--granularity", *G, "expert granularity")->required();
    cmd->add_option("--flops", *C, "compute budget in FLOPs")->required();
    cmd->add_option("--coeffs", *coeffs, "coefficient or law-bundle JSON file");
    cmd->callback([&state, A, G, C, coeffs] {
      const ELCoefficients c = resolve_bundle(*coeffs).el_coefficients;
      state.emit(json{{"A", *A},
                      {"G", *G},
                      {"C", *C},
                      {"A_hat", saturate_activation(*A, c)},
                      {"exponent", el_exponent(*G, *C, c)},
                      {"el", el_joint(*A, *G, *C, c)},
                      {"warnings", el_domain_warnings(*A, *G, *C)}});
    });
  }
  // heatmap
  {
    auto* cmd = app.add_subcommand("heatmap", "EL over an (A, G) grid, written as CSV");
    auto C = std::make_shared<double>(0);
    auto a_min = std::make_shared<double>(0.008);
    auto a_max = std::make_shared<double>(1.0);
    auto g_min = std::make_shared<double>(1.0);
    auto g_max = std::make_shared<double>(16.0);
    auto steps = std::make_shared<int>(16);
    auto out_path = std::make_shared<std::string>();
    auto coeffs = std::make_shared<std::string>();
    cmd->add_option("--flops", *C, "compute budget in FLOPs")->required();
    cmd->add_option("--a-min", *a_min, "lower activation-ratio bound")->required();
    cmd->add_option("--a-max", *a_max, "upper activation-ratio bound")->required();
    cmd->add_option("--g-min", *g_min, "lower granularity bound")->required();
    cmd->add_option("--g-max", *g_max, "upper granularity bound")->required();
    cmd->add_option("--steps", *steps, "grid steps per axis")->required();
    cmd->add_option("--out", *out_path, "output CSV path")->required();
    cmd->add_option("--coeffs", *coeffs, "coefficient or law-bundle JSON file");
    cmd->callback([&state, C, a_min, a_max, g_min, g_max, steps, out_path, coeffs] {
      const ELCoefficients c = resolve_bundle(*coeffs).el_coefficients;
      const HeatmapGrid grid = heatmap_grid(*C, *a_min, *a_max, *g_min, *g_max, *steps, c);
      write_heatmap_csv(grid, *out_path);
      double max_el = grid.el[0][0];
      std::size_t bi = 0, bj = 0;
      for (std::size_t i = 0; i < grid.el.size(); ++i)
        for (std::size_t j = 0; j < grid.el[i].size(); ++j)
          if (grid.el[i][j] > max_el) {
            max_el = grid.el[i][j];
            bi = i;
            bj = j;
          }
      state.emit(json{{"out", *out_path},
                      {"rows", grid.a_values.size()},
                      {"cols", grid.g_values.size()},
                      {"max_el", max_el},
                      {"argmax", json{{"A", grid.a_values[bi]}, {"G", grid.g_values[bj]}}}});
    });
  }
  // fit
  {
    auto* cmd = app.add_subcommand("fit", "fit a law to logged data");
    auto mode = std::make_shared<std::string>();
    auto input = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    auto format = std::make_shared<std::string>("csv");
    auto train_max_el = std::make_shared<double>(6.0);
    auto delta = std::make_shared<double>(1e-3);
    auto max_iter = std::make_shared<int>(500);
    cmd->add_option("mode", *mode, "power | logpoly | el")
        ->required()
        ->check(CLI::IsMember({"power", "logpoly", "el"}));
    cmd->add_option("--input", *input, "input file (run CSV for power, A,G,C,EL CSV otherwise)")
        ->required();
    cmd->add_option("--out", *out_path, "fitted-law JSON output path")->required();
    cmd->add_option("--format", *format, "run-record input format: csv | json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--train-max-el", *train_max_el, "train/validation split threshold (el mode)");
    cmd->add_option("--delta", *delta, "Huber threshold on log residuals");
    cmd->add_option("--max-iter", *max_iter, "optimizer iteration cap per start");
    cmd->callback([&state, mode, input, out_path, format, train_max_el, delta, max_iter] {
      FitOptions opt;
      opt.huber_delta = *delta;
      opt.max_iterations = *max_iter;
      if (*mode == "power") {
        const auto runs = load_runs_checked(*input, *format, *state.err);
        std::vector<std::pair<double, double>> points;
        points.reserve(runs.size());
        for (const auto& r : runs) points.emplace_back(r.C, r.loss);
        const PowerLawFit fit = fit_power_law(points, opt);
        write_text_file(*out_path, power_law_json(fit.law).dump(2) + "\n");
        state.emit(json{{"law", power_law_json(fit.law)}, {"report", report_json(fit.report)}});
      } else if (*mode == "logpoly") {
        const auto obs = load_el_observations(*input);
        std::vector<std::pair<double, double>> points;
        points.reserve(obs.size());
        for (const auto& o : obs) points.emplace_back(o.G, o.EL);
        const LogPolyFit fit = fit_log_polynomial(points, opt);
        const json law{{"a_G", fit.law.a_G}, {"b_G", fit.law.b_G}, {"c_G", fit.law.c_G}};
        write_text_file(*out_path, law.dump(2) + "\n");
        state.emit(json{{"law", law}, {"report", report_json(fit.report)}});
      } else {
        const auto obs = load_el_observations(*input);
        const ELJointFit fit = fit_el_joint(obs, *train_max_el, opt);
        write_text_file(*out_path, el_coefficients_to_json_text(fit.coefficients, true) + "\n");
        state.emit(json{{"coefficients",
                         json::parse(el_coefficients_to_json_text(fit.coefficients))},
                        {"report", report_json(fit.report)}});
      }
    });
  }
  // hyper
  {
    auto* cmd = app.add_subcommand("hyper", "optimal learning rate and batch size for a budget");
    auto C = std::make_shared<double>(0);
    auto coeffs = std::make_shared<std::string>();
    cmd->add_option("--flops", *C, "compute budget in FLOPs")->required();
    cmd->add_option("--coeffs", *coeffs, "law-bundle JSON file");
    cmd->callback([&state, C, coeffs] {
      const LawBundle b = resolve_bundle(*coeffs);
      const HyperParams h = hyperparams_for_budget(*C, b.lr_law, b.batch_law);
      state.emit(json{{"C", *C},
                      {"learning_rate", h.learning_rate},
                      {"batch_tokens", h.batch_tokens}});
    });
  }
  // alloc
  {
    auto* cmd = app.add_subcommand("alloc", "compute-optimal model/data allocation");
    auto C = std::make_shared<double>(0);
    auto family = std::make_shared<std::string>();
    auto coeffs = std::make_shared<std::string>();
    cmd->add_option("--flops", *C, "compute budget in FLOPs")->required();
    cmd->add_option("--family", *family, "dense | moe")
        ->required()
        ->check(CLI::IsMember({"dense", "moe"}));
    cmd->add_option("--coeffs", *coeffs, "law-bundle JSON file");
    cmd->callback([&state, C, family, coeffs] {
      if (!(*C > 0)) throw ValidationError("alloc: --flops must be positive");
      const LawBundle b = resolve_bundle(*coeffs);
      const bool dense = *family == "dense";
      const double M = dense ? b.alloc_dense_M(*C) : b.alloc_moe_M(*C);
      const double D = dense ? b.alloc_dense_D(*C) : b.alloc_moe_D(*C);
      state.emit(json{{"C", *C}, {"family", *family}, {"M_opt", M}, {"D_opt", D}});
    });
  }
  // plan
  {
    auto* cmd = app.add_subcommand("plan", "architecture recommendation for a budget");
    auto C = std::make_shared<double>(0);
    auto a_min = std::make_shared<double>(0.008);
    auto a_max = std::make_shared<double>(1.0);
    auto g_min = std::make_shared<double>(1.0);
    auto g_max = std::make_shared<double>(64.0);
    auto steps = std::make_shared<int>(64);
    auto target_m = std::make_shared<double>(0);
    auto d_model = std::make_shared<int>(0);
    auto coeffs = std::make_shared<std::string>();
    cmd->add_option("--flops", *C, "compute budget in FLOPs")->required();
    cmd->add_option("--a-min", *a_min, "lower activation-ratio bound");
    cmd->add_option("--a-max", *a_max, "upper activation-ratio bound");
    cmd->add_option("--g-min", *g_min, "lower granularity bound");
    cmd->add_option("--g-max", *g_max, "upper granularity bound");
    cmd->add_option("--grid-steps", *steps, "argmax grid steps per axis");
    cmd->add_option("--target-m", *target_m, "per-token scale target (FLOPs/token)");
    cmd->add_option("--d-model", *d_model, "fix the hidden dimension");
    cmd->add_option("--coeffs", *coeffs, "coefficient or law-bundle JSON file");
    cmd->callback([&state, C, a_min, a_max, g_min, g_max, steps, target_m, d_model, coeffs] {
      PlanRequest req;
      req.C = *C;
      req.a_min = *a_min;
      req.a_max = *a_max;
      req.g_min = *g_min;
      req.g_max = *g_max;
      req.grid_steps = *steps;
      req.target_M = *target_m;
      req.d_model = *d_model;
      req.coeffs = resolve_bundle(*coeffs).el_coefficients;
      const PlanResult plan = plan_architecture(req);
      state.emit(json{{"A_opt", plan.A_opt},
                      {"G_opt", plan.G_opt},
                      {"S_opt", plan.S_opt},
                      {"el_predicted", plan.el_predicted},
                      {"layout", json::parse(arch_to_json_text(plan.layout))},
                      {"M", plan.M},
                      {"M_dense_equivalent", plan.M_dense_equivalent},
                      {"allocation",
                       json{{"M_opt", plan.allocation.M_opt}, {"D_opt", plan.allocation.D_opt}}},
                      {"warnings", plan.warnings}});
    });
  }
  // equiv
  {
    auto* cmd = app.add_subcommand("equiv", "dense-equivalence report for an architecture");
    auto config = std::make_shared<std::string>();
    auto C = std::make_shared<double>(0);
    auto coeffs = std::make_shared<std::string>();
    cmd->add_option("--config", *config, "architecture JSON file")->required();
    cmd->add_option("--flops", *C, "compute budget in FLOPs")->required();
    cmd->add_option("--coeffs", *coeffs, "coefficient or law-bundle JSON file");
    cmd->callback([&state, config, C, coeffs] {
      const ELCoefficients c = resolve_bundle(*coeffs).el_coefficients;
      const EquivalenceReport rep = equivalence_report(load_arch_file(*config), *C, c);
      state.emit(json{{"A", rep.arch_metrics.A},
                      {"G", rep.arch_metrics.G},
                      {"S", rep.arch_metrics.S},
                      {"N", rep.arch_metrics.N},
                      {"N_a", rep.arch_metrics.N_a},
                      {"C", rep.C},
                      {"el", rep.el},
                      {"M", rep.M},
                      {"M_dense_equivalent", rep.M_dense_equivalent},
                      {"allocation_dense", json{{"M_opt", rep.allocation_dense.M_opt},
                                                {"D_opt", rep.allocation_dense.D_opt}}},
                      {"allocation_moe", json{{"M_opt", rep.allocation_moe.M_opt},
                                              {"D_opt", rep.allocation_moe.D_opt}}},
                      {"notes", rep.notes}});
    });
  }
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"MoE efficiency-leverage toolkit", "moelever"};
  app.require_subcommand(1);

  CliState state;
  state.out = &out;
  state.err = &err;
  app.add_flag("--pretty", state.pretty, "indent JSON output");

  register_commands(app, state);
  for (auto* sub : app.get_subcommands(nullptr)) sub->fallthrough();

  std::vector<const char*> argv;
  argv.push_back("moelever");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << app.help();
    return 2;
  } catch (const FitError& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == FitError::Kind::non_convergence ? 3 : 2;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace moelever
