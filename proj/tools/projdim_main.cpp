// projdim: attractor clouds, dimension estimates, direction sweeps, energy
// counts, and transversality scans, driven from system files or builtins.
//
// Exit codes: 0 all verdicts pass, 1 a verdict failed, 2 invalid input,
// 3 a budget was exceeded (partial results are scale-limited).

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "projdim/experiments.hpp"

using namespace projdim;

namespace {

std::vector<double> parse_delta_list(const std::string& commas, const std::string& dyadic) {
  std::vector<double> out;
  if (!dyadic.empty()) {
    auto colon = dyadic.find(':');
    if (colon == std::string::npos)
      throw ValidationError("--dyadic expects the form coarse:fine, e.g. 4:8");
    int a = std::stoi(dyadic.substr(0, colon));
    int b = std::stoi(dyadic.substr(colon + 1));
    if (b < a) std::swap(a, b);
    for (int j = a; j <= b; ++j) out.push_back(std::exp2(-j));
    return out;
  }
  std::stringstream ss(commas);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  if (out.empty()) throw ValidationError("empty delta ladder");
  for (std::size_t i = 0; i + 1 < out.size(); ++i)
    if (!(out[i] > out[i + 1]))
      throw ValidationError("delta ladder must be strictly decreasing");
  return out;
}

std::vector<int> parse_int_list(const std::string& commas) {
  std::vector<int> out;
  std::stringstream ss(commas);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoi(tok));
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& commas) {
  std::vector<double> out;
  std::stringstream ss(commas);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

int verdict_code(Verdict v) { return v == Verdict::fail ? 1 : 0; }

void print_verdict(const std::string& name, Verdict v, const std::string& detail) {
  std::printf("VERDICT %s: %s (%s)\n", name.c_str(), to_string(v).c_str(), detail.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"self-similar systems, projection sweeps, and dimension experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  // INI config with one section per subcommand, e.g. [dim] system=... seed=...
  app.set_config("--config", "", "read options from an INI-style file");

  int threads = 0;
  app.add_option("--threads", threads, "worker pool size (default: hardware)");

  // common experiment options, wired into every experiment subcommand
  struct Common {
    std::string system;
    std::string out_dir;
    std::uint64_t seed = 0;
  };
  auto add_common = [](CLI::App* cmd, Common& c, bool needs_system = true) {
    if (needs_system)
      cmd->add_option("--system", c.system, "system file path or builtin:<name>")->required();
    cmd->add_option("--out", c.out_dir, "output directory for CSV/SVG artifacts")
        ->envname("PROJDIM_OUT");
    cmd->add_option("--seed", c.seed, "random seed (mandatory for reproducibility)")->required();
  };

  // dim ----------------------------------------------------------------
  Common dim_common;
  DimOptions dim_opt;
  auto* dim_cmd = app.add_subcommand("dim", "closed-form vs box-regression dimension");
  add_common(dim_cmd, dim_common);
  dim_cmd->add_option("--depth", dim_opt.depth, "cloud depth (delta = ratio^depth * scale)");
  dim_cmd->add_option("--delta", dim_opt.delta, "explicit cloud resolution");
  dim_cmd->add_option("--jitter", dim_opt.jitter, "jittered grids per scale");
  dim_cmd->add_option("--vertex", dim_opt.gd_vertex, "component vertex for graph-directed systems");
  dim_cmd->add_option("--budget", dim_opt.point_budget, "cloud point budget");

  // counting -----------------------------------------------------------
  Common cnt_common;
  CountingOptions cnt_opt;
  std::string cnt_pairs = "2,1;3,1;3,2;4,2";
  std::string cnt_deltas = "", cnt_dyadic = "3:6";
  auto* cnt_cmd = app.add_subcommand("counting", "separated-direction count ratio check");
  add_common(cnt_cmd, cnt_common, false);
  cnt_cmd->add_option("--pairs", cnt_pairs, "Grassmannians as n,k;n,k;...");
  cnt_cmd->add_option("--deltas", cnt_deltas, "comma-separated decreasing ladder");
  cnt_cmd->add_option("--dyadic", cnt_dyadic, "ladder 2^-a..2^-b as a:b");
  cnt_cmd->add_option("--instances", cnt_opt.instances_per_delta, "instances per delta");

  // energy ---------------------------------------------------------------
  Common en_common;
  EnergyOptions en_opt;
  std::string en_deltas = "", en_dyadic = "4:8", en_eta_mode = "fixed";
  auto* en_cmd = app.add_subcommand("energy", "relation-count energy over a delta ladder");
  add_common(en_cmd, en_common);
  en_cmd->add_option("--deltas", en_deltas, "comma-separated decreasing ladder");
  en_cmd->add_option("--dyadic", en_dyadic, "ladder 2^-a..2^-b as a:b");
  en_cmd->add_option("--eta-mode", en_eta_mode, "fixed | asymptotic");
  en_cmd->add_option("--eta-factor", en_opt.eta_factor, "eta = factor * delta (fixed mode)");
  en_cmd->add_option("--s", en_opt.s_for_eta, "s parameter for the asymptotic eta formula");
  en_cmd->add_option("--eps", en_opt.eps_for_eta, "eps parameter for the asymptotic eta formula");
  en_cmd->add_option("--delta2-factor", en_opt.delta2_factor, "net separation = factor * delta");
  en_cmd->add_option("--oversample", en_opt.oversample, "net stall oversample factor");
  en_cmd->add_option("--brute-scales", en_opt.brute_check_scales,
                     "coarsest scales cross-checked against the quadratic oracle");
  en_cmd->add_option("--budget", en_opt.point_budget, "cloud point budget");

  // sweep ----------------------------------------------------------------
  Common sw_common;
  SweepOptions sw_opt;
  std::string sw_deltas = "", sw_dyadic = "5:9";
  auto* sw_cmd = app.add_subcommand("sweep", "projection sweep with exceptional-direction flags");
  add_common(sw_cmd, sw_common);
  sw_cmd->add_option("--deltas", sw_deltas, "comma-separated decreasing ladder");
  sw_cmd->add_option("--dyadic", sw_dyadic, "ladder 2^-a..2^-b as a:b");
  sw_cmd->add_option("--s", sw_opt.s, "projected-dimension threshold exponent");
  sw_cmd->add_option("--delta2-factor", sw_opt.delta2_factor, "net separation = factor * delta");
  sw_cmd->add_option("--oversample", sw_opt.oversample, "net stall oversample factor");
  sw_cmd->add_option("--jitter", sw_opt.jitter, "jittered grids per projected count");
  sw_cmd->add_flag("--with-energy", sw_opt.with_energy, "also count relations per direction");
  sw_cmd->add_option("--eta-factor", sw_opt.eta_factor, "eta = factor * delta for --with-energy");
  sw_cmd->add_option("--budget", sw_opt.point_budget, "cloud point budget");

  // almost-dc --------------------------------------------------------------
  Common adc_common;
  AlmostDcOptions adc_opt;
  std::string adc_axes = "0", adc_grid = "";
  bool adc_have_angle = false;
  double adc_angle = 0.0;
  auto* adc_cmd = app.add_subcommand("almost-dc", "dimension-conservation witness at a direction");
  add_common(adc_cmd, adc_common);
  adc_cmd->add_option("--depth", adc_opt.depth, "cloud depth");
  adc_cmd->add_option("--delta", adc_opt.delta, "explicit cloud resolution");
  adc_cmd->add_option("--axes", adc_axes, "projection onto these coordinate axes (0-based)");
  adc_cmd->add_option("--angle", adc_angle, "planar line angle instead of axes")
      ->each([&](const std::string&) { adc_have_angle = true; });
  adc_cmd->add_option("--Delta", adc_opt.Delta, "fiber-dimension level")->required();
  adc_cmd->add_option("--eps", adc_opt.eps, "almost-conservation slack");
  adc_cmd->add_option("--grid", adc_grid, "also scan this comma-separated Delta grid");
  adc_cmd->add_option("--budget", adc_opt.point_budget, "cloud point budget");

  // transversality ----------------------------------------------------------
  Common tv_common;
  TransversalityOptions tv_opt;
  bool tv_no_self_test = false;
  auto* tv_cmd = app.add_subcommand("transversality", "projected-family transversality scan");
  add_common(tv_cmd, tv_common);
  tv_cmd->add_option("--directions", tv_opt.directions, "direction samples");
  tv_cmd->add_option("--depth", tv_opt.depth, "word depth");
  tv_cmd->add_option("--pair-budget", tv_opt.pair_budget, "word-pair budget");
  tv_cmd->add_flag("--no-self-test", tv_no_self_test, "skip the synthetic violation self-test");

  // systems -------------------------------------------------------------
  std::string emit_dir;
  auto* sys_cmd = app.add_subcommand("systems", "list bundled systems");
  sys_cmd->add_option("--emit", emit_dir, "write the bundled systems as files into this directory");

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) set_thread_count(threads);

  try {
    if (sys_cmd->parsed()) {
      std::printf("%-22s %-5s %-8s %-7s %-10s %s\n", "name", "dim", "maps", "ssc", "dimension",
                  "description");
      for (const auto& b : builtin_systems()) {
        std::size_t parts = b.graph_directed ? b.gd->edges().size() : b.ss->map_count();
        std::printf("%-22s %-5d %-8zu %-7s %-10.6f %s\n", b.name.c_str(),
                    b.graph_directed ? b.gd->ambient_dim() : b.ss->ambient_dim(), parts,
                    b.claims_ssc ? "yes" : "no", b.closed_form_dimension, b.description.c_str());
      }
      if (!emit_dir.empty()) {
        ensure_dir(emit_dir);
        for (const auto& b : builtin_systems())
          save_system(join_path(emit_dir, b.name + ".txt"), to_system_file(b));
        std::printf("wrote %zu system files to %s\n", builtin_systems().size(),
                    emit_dir.c_str());
      }
      return 0;
    }

    if (dim_cmd->parsed()) {
      SystemFile sys = resolve_system(dim_common.system);
      dim_opt.seed = dim_common.seed;
      DimResult res = run_dim(sys, dim_opt, {dim_common.out_dir, "dim"});
      std::ostringstream d;
      d << "closed form " << format_double(res.closed_form) << ", estimate "
        << format_double(res.estimate.value) << " +- " << format_double(res.estimate.std_error)
        << ", points " << res.cloud_points;
      print_verdict("dim", res.verdict, d.str());
      return verdict_code(res.verdict);
    }

    if (cnt_cmd->parsed()) {
      cnt_opt.seed = cnt_common.seed;
      cnt_opt.deltas = parse_delta_list(cnt_deltas, cnt_deltas.empty() ? cnt_dyadic : "");
      cnt_opt.grassmannians.clear();
      std::stringstream ss(cnt_pairs);
      std::string pair;
      while (std::getline(ss, pair, ';')) {
        auto ints = parse_int_list(pair);
        if (ints.size() != 2) throw ValidationError("--pairs expects n,k;n,k;...");
        cnt_opt.grassmannians.push_back({ints[0], ints[1]});
      }
      CountingResult res = run_counting(cnt_opt, {cnt_common.out_dir, "counting"});
      int code = 0;
      for (const auto& p : res.pairs) {
        std::ostringstream d;
        d << "Gr(" << p.n << "," << p.k << ") slope " << format_double(p.slope) << ", max ratio "
          << format_double(p.overall_max);
        print_verdict("counting", p.verdict, d.str());
        code = std::max(code, verdict_code(p.verdict));
      }
      return code;
    }

    if (en_cmd->parsed()) {
      SystemFile sys = resolve_system(en_common.system);
      en_opt.seed = en_common.seed;
      en_opt.deltas = parse_delta_list(en_deltas, en_deltas.empty() ? en_dyadic : "");
      if (en_eta_mode == "asymptotic")
        en_opt.eta_asymptotic = true;
      else if (en_eta_mode != "fixed")
        throw ValidationError("--eta-mode must be fixed or asymptotic");
      EnergyResult res = run_energy(sys, en_opt, {en_common.out_dir, "energy"});
      std::ostringstream d;
      d << "fitted exponent " << format_double(res.fitted_exponent) << " vs bound "
        << format_double(res.bound_exponent) << " + " << format_double(accept::kExponentSlack)
        << ", oracle " << (res.all_brute_match ? "match" : "MISMATCH");
      print_verdict("energy", res.verdict, d.str());
      return verdict_code(res.verdict);
    }

    if (sw_cmd->parsed()) {
      SystemFile sys = resolve_system(sw_common.system);
      sw_opt.seed = sw_common.seed;
      sw_opt.deltas = parse_delta_list(sw_deltas, sw_deltas.empty() ? sw_dyadic : "");
      SweepResult res = run_sweep(sys, sw_opt, {sw_common.out_dir, "sweep"});
      std::ostringstream d;
      d << "s " << format_double(res.s) << ", fitted exponent "
        << format_double(res.fitted_exponent) << " vs bound "
        << format_double(res.bound_exponent) << " + " << format_double(accept::kExponentSlack)
        << ", finest net " << res.net_finest;
      if (res.bound_vacuous) d << ", bound vacuous (s >= k)";
      print_verdict("sweep", res.verdict, d.str());
      return verdict_code(res.verdict);
    }

    if (adc_cmd->parsed()) {
      SystemFile sys = resolve_system(adc_common.system);
      adc_opt.seed = adc_common.seed;
      adc_opt.axes = parse_int_list(adc_axes);
      if (adc_have_angle) adc_opt.angle = adc_angle;
      if (!adc_grid.empty()) adc_opt.delta_grid = parse_double_list(adc_grid);
      AlmostDcExpResult res = run_almost_dc(sys, adc_opt, {adc_common.out_dir, "almost_dc"});
      std::ostringstream d;
      d << (res.check.witness ? "witness" : "refuted at scale") << ", Delta "
        << format_double(res.check.Delta) << ", cloud dim "
        << format_double(res.check.cloud_dim.value) << ", y-set dim "
        << format_double(res.check.yset_dim.value);
      if (!adc_opt.delta_grid.empty()) {
        d << ", grid passing:";
        for (double v : res.grid_passing) d << " " << format_double(v);
      }
      print_verdict("almost-dc", res.verdict, d.str());
      return verdict_code(res.verdict);
    }

    if (tv_cmd->parsed()) {
      SystemFile sys = resolve_system(tv_common.system);
      tv_opt.seed = tv_common.seed;
      tv_opt.self_test = !tv_no_self_test;
      TransversalityExpResult res =
          run_transversality(sys, tv_opt, {tv_common.out_dir, "transversality"});
      std::ostringstream d;
      d << "violations " << res.report.violations << " over " << res.report.close_pairs
        << " close pairs, min margin " << format_double(res.report.min_margin)
        << ", jacobian fd error " << format_double(res.fd_max_rel_error);
      if (tv_opt.self_test)
        d << ", self-test " << (res.self_test_flagged ? "flagged" : "MISSED");
      print_verdict("transversality", res.verdict, d.str());
      return verdict_code(res.verdict);
    }
  } catch (const BudgetError& e) {
    std::fprintf(stderr, "budget exceeded: %s\n", e.what());
    std::printf("VERDICT %s: SCALE-LIMITED (budget exceeded)\n",
                app.get_subcommands().empty() ? "run" : app.get_subcommands()[0]->get_name().c_str());
    return 3;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
