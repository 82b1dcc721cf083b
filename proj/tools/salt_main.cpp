#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "salt/verifier.hpp"

using namespace salt;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path);
  out << content;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

FormulaDoc load_doc(const std::string& path) {
  std::string text = read_file(path);
  if (ends_with(path, ".json")) return doc_from_json(nlohmann::json::parse(text));
  return parse_formula(text);
}

void save_doc(const FormulaDoc& doc, const std::string& path) {
  if (path == "-") {
    std::cout << doc_to_json(doc).dump(2) << "\n";
    return;
  }
  if (ends_with(path, ".saf"))
    write_file(path, serialize_formula(doc) + "\n");
  else
    write_file(path, doc_to_json(doc).dump(2) + "\n");
}

Rational parse_rat(const std::string& text, const std::string& what) {
  auto q = parse_rational(text);
  if (!q) throw UsageError("bad rational for " + what + ": " + text);
  return *q;
}

std::vector<Rational> parse_schedule(const std::string& text) {
  std::vector<Rational> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse_rat(item, "schedule"));
  return out;
}

std::vector<SparsePoly> parse_map(const std::string& text, int arity) {
  std::vector<SparsePoly> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) out.push_back(parse_poly(item, arity));
  if (static_cast<int>(out.size()) != arity)
    throw UsageError("map needs exactly " + std::to_string(arity) + " components");
  return out;
}

std::vector<SparsePoly> identity_map(int arity) {
  std::vector<SparsePoly> out;
  for (int i = 0; i < arity; ++i) out.push_back(SparsePoly::variable(arity, i));
  return out;
}

Box parse_box(const std::string& text, int dim) {
  std::stringstream ss(text);
  std::string lo, hi;
  if (!std::getline(ss, lo, ',') || !std::getline(ss, hi, ','))
    throw UsageError("box must be lo,hi");
  double a = std::stod(lo), b = std::stod(hi);
  return Box::cube(a, b, dim);
}

nlohmann::json format_json(const FormatRecord& rec) {
  nlohmann::json j = {{"s", rec.s},   {"k", rec.k},
                      {"a", rec.a},   {"divfree", rec.divfree},
                      {"naive_used", rec.naive_used}};
  if (rec.d) j["d"] = *rec.d;
  return j;
}

nlohmann::json prediction_json(const FormatPrediction& pred) {
  return {{"p", pred.p},       {"k", pred.k},
          {"a", pred.a},       {"s", pred.s},
          {"d", pred.d},       {"N", pred.N},
          {"M", pred.M},       {"Mprime", pred.Mprime},
          {"degree_bound", pred.degree_bound}};
}

struct GlobalOpts {
  std::uint64_t seed = 0;
  int threads = 1;
  long long resolution = 101;
  std::string box = "-2,2";
  double tau = 0.0;
  bool tau_set = false;

  std::optional<double> tau_opt() const {
    return tau_set ? std::optional<double>(tau) : std::nullopt;
  }
};

void emit_report(const nlohmann::json& j, const std::string& output) {
  if (output.empty() || output == "-")
    std::cout << j.dump(2) << "\n";
  else
    write_file(output, j.dump(2) + "\n");
}

void emit_sidecar(const std::string& output, nlohmann::json j, const GlobalOpts& g) {
  j["seed"] = g.seed;
  if (g.tau_set) j["tau"] = g.tau;
  if (output.empty() || output == "-") return;
  write_file(output + ".provenance.json", j.dump(2) + "\n");
}

int cmd_inspect(const std::string& input) {
  FormulaDoc doc = load_doc(input);
  FormatRecord rec = measure_format(doc);
  std::vector<const Atom*> atoms;
  collect_atoms(doc.root, atoms);
  std::cout << "arity " << doc.arity << (doc.is_family ? " (one-parameter family)" : "")
            << "\n";
  std::cout << "dense format (s,d,k) = (" << rec.s << ","
            << (rec.d ? std::to_string(*rec.d) : std::string("-")) << "," << rec.k << ")\n";
  std::cout << "additive format (a,k) = (" << rec.a << "," << rec.k << ")\n";
  std::cout << "division-free witnesses: " << (rec.divfree ? "yes" : "no")
            << (rec.naive_used ? " (naive fallback counted)" : "") << "\n";
  std::cout << "P-closed: " << (is_pclosed(doc) ? "yes" : "no") << "\n";
  std::cout << "atoms " << atoms.size() << ", table entries " << doc.poly_table.size() << "\n";
  std::cout << serialize_formula(doc) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"real algebraic formula toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts g;
  app.add_option("--seed", g.seed, "random seed recorded in every output");
  app.add_option("--threads", g.threads, "sampling worker cap");
  app.add_option("--resolution", g.resolution, "grid resolution per axis");
  app.add_option("--box", g.box, "sampling cube as lo,hi");
  auto* tau_opt = app.add_option("--tau", g.tau, "equality tolerance (default: automatic)");

  // ---- inspect ------------------------------------------------------------
  auto* inspect = app.add_subcommand("inspect", "print formats and the formula");
  std::string in_inspect;
  inspect->add_option("input", in_inspect, "formula file (.saf text or .json)")->required();

  // ---- transform ----------------------------------------------------------
  auto* transform = app.add_subcommand("transform", "apply a formula transform");
  transform->require_subcommand(1);
  transform->fallthrough();
  std::string t_input, t_output = "-";
  std::string t_P, t_Q, t_map, t_mode = "corrected", t_slp;
  std::string t_R = "2", t_Rp, t_eps = "0";
  int t_p = 1;

  auto add_io = [&](CLI::App* c, bool need_input = true) {
    auto* i = c->add_option("--input", t_input, "input formula file");
    if (need_input) i->required();
    c->add_option("--output", t_output, "output file (- for stdout)");
  };
  auto* tr_lift = transform->add_subcommand("divfree-lift", "one variable per program step");
  add_io(tr_lift);
  auto* tr_quot = transform->add_subcommand("quotient", "split a program into num/den");
  tr_quot->add_option("--slp", t_slp, "program text file")->required();
  tr_quot->add_option("--output", t_output, "output file (- for stdout)");
  auto* tr_limit = transform->add_subcommand("limit-family", "one-parameter family of a quotient");
  tr_limit->add_option("--P", t_P, "numerator polynomial")->required();
  tr_limit->add_option("--Q", t_Q, "denominator polynomial")->required();
  tr_limit->add_option("--R", t_R, "ball radius");
  tr_limit->add_option("--output", t_output, "output file (- for stdout)");
  auto* tr_bar = transform->add_subcommand("bar", "equations-only denominator clearing");
  add_io(tr_bar);
  tr_bar->add_option("--R", t_R, "block ball radius");
  auto* tr_join = transform->add_subcommand("join", "p-fold join");
  add_io(tr_join);
  tr_join->add_option("--p", t_p, "number of extra copies");
  tr_join->add_option("--R", t_R, "copy ball radius");
  auto* tr_fib = transform->add_subcommand("fibered-join", "join fibered over a map");
  add_io(tr_fib);
  tr_fib->add_option("--p", t_p, "number of extra copies");
  tr_fib->add_option("--R", t_R, "copy ball radius");
  tr_fib->add_option("--map", t_map, "semicolon-separated components (default identity)");
  auto* tr_thick = transform->add_subcommand("thickened-join", "eps-thickened fibered join");
  add_io(tr_thick);
  tr_thick->add_option("--p", t_p, "number of extra copies");
  tr_thick->add_option("--R", t_R, "copy ball radius");
  tr_thick->add_option("--eps", t_eps, "thickening");
  tr_thick->add_option("--map", t_map, "semicolon-separated components (default identity)");
  auto* tr_diag = transform->add_subcommand("diagonal", "eps-thickened diagonal");
  add_io(tr_diag);
  tr_diag->add_option("--p", t_p, "number of extra copies");
  tr_diag->add_option("--R", t_R, "copy ball radius");
  tr_diag->add_option("--eps", t_eps, "thickening");
  auto* tr_dag = transform->add_subcommand("dagger", "weak inequalities to equations");
  add_io(tr_dag);
  tr_dag->add_option("--R", t_R, "inner sphere radius");
  tr_dag->add_option("--Rp", t_Rp, "outer sphere radius (default: automatic)");
  tr_dag->add_option("--mode", t_mode, "corrected | paper-literal");
  auto* tr_star = transform->add_subcommand("star", "full equational pipeline");
  add_io(tr_star);
  tr_star->add_option("--p", t_p, "number of extra copies");
  tr_star->add_option("--R", t_R, "inner sphere radius");
  tr_star->add_option("--Rp", t_Rp, "outer sphere radius (default: automatic)");
  tr_star->add_option("--mode", t_mode, "corrected | paper-literal");

  // ---- predict-format -----------------------------------------------------
  auto* predict = app.add_subcommand("predict-format", "closed-form format bounds");
  predict->require_subcommand(1);
  predict->fallthrough();
  int f_p = 1, f_k = 1, f_a = 0, f_s = 1, f_d = 1;
  auto* pr_diag = predict->add_subcommand("diagonal", "thickened diagonal bounds");
  pr_diag->add_option("--p", f_p)->required();
  pr_diag->add_option("--k", f_k)->required();
  pr_diag->add_option("--a", f_a)->required();
  pr_diag->add_option("--s", f_s)->required();
  pr_diag->add_option("--d", f_d)->required();
  auto* pr_star = predict->add_subcommand("star", "equational pipeline bounds");
  pr_star->add_option("--p", f_p)->required();
  pr_star->add_option("--k", f_k)->required();
  pr_star->add_option("--a", f_a)->required();

  // ---- verify -------------------------------------------------------------
  auto* verify = app.add_subcommand("verify", "run a numerical check");
  verify->require_subcommand(1);
  verify->fallthrough();
  std::string v_family, v_target, v_input, v_schedule = "1/10,1/20,1/100", v_output;
  std::string v_map, v_R = "1", v_eps = "1/20";
  double v_eta = -1.0, v_threshold = 3.0;
  long long v_budget = 500;
  int v_p = 1;

  auto* ve_conv = verify->add_subcommand("convergence", "family converges to its limit");
  ve_conv->add_option("--family", v_family, "family file")->required();
  ve_conv->add_option("--target", v_target, "limit formula file")->required();
  ve_conv->add_option("--schedule", v_schedule, "decreasing parameter values");
  ve_conv->add_option("--threshold", v_threshold, "final distance in grid steps");
  ve_conv->add_option("--output", v_output, "report file (default stdout)");
  auto* ve_sand = verify->add_subcommand("sandwich", "join/diagonal inclusion chain");
  ve_sand->add_option("--input", v_input, "base formula file")->required();
  ve_sand->add_option("--map", v_map, "semicolon-separated components (default identity)");
  ve_sand->add_option("--p", v_p, "number of extra copies");
  ve_sand->add_option("--R", v_R, "copy ball radius");
  ve_sand->add_option("--eps", v_eps, "thickening");
  ve_sand->add_option("--eta", v_eta, "distortion bound (default: 2x sampled estimate)");
  ve_sand->add_option("--budget", v_budget, "membership samples");
  ve_sand->add_option("--output", v_output, "report file (default stdout)");
  auto* ve_lift = verify->add_subcommand("lift", "division-free lift round trip");
  ve_lift->add_option("--input", v_input, "formula file with witnesses")->required();
  ve_lift->add_option("--budget", v_budget, "membership samples");
  ve_lift->add_option("--output", v_output, "report file (default stdout)");
  auto* ve_fmt = verify->add_subcommand("formats", "measured formats against bounds");
  ve_fmt->add_option("--input", v_input, "diagonal output file")->required();
  ve_fmt->add_option("--p", f_p)->required();
  ve_fmt->add_option("--k", f_k)->required();
  ve_fmt->add_option("--a", f_a)->required();
  ve_fmt->add_option("--s", f_s)->required();
  ve_fmt->add_option("--d", f_d)->required();
  ve_fmt->add_option("--output", v_output, "report file (default stdout)");

  // ---- export -------------------------------------------------------------
  auto* exportc = app.add_subcommand("export", "point clouds as CSV");
  std::string e_input, e_prefix, e_ts, e_mode = "grid";
  long long e_count = 0;
  exportc->add_option("--input", e_input, "formula or family file")->required();
  exportc->add_option("--output-prefix", e_prefix, "CSV path prefix")->required();
  exportc->add_option("--t", e_ts, "fiber parameter values (family input)");
  exportc->add_option("--mode", e_mode, "grid | random");
  exportc->add_option("--count", e_count, "random sample count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  g.tau_set = tau_opt->count() > 0;

  try {
    if (*inspect) return cmd_inspect(in_inspect);

    if (*transform) {
      nlohmann::json side = {{"tool", "transform"}};
      int exit_code = 0;
      if (*tr_quot) {
        AdditiveRepr r = slp_from_text(read_file(t_slp));
        RationalFunctionPair pair = quotient_form(r);
        nlohmann::json out = {{"num", slp_to_text(pair.num)},
                              {"den", slp_to_text(pair.den)},
                              {"input_length", r.length()},
                              {"num_length", pair.num.length()},
                              {"den_length", pair.den.length()}};
        emit_report(out, t_output == "-" ? "" : t_output);
        return 0;
      }
      FormulaDoc result(0, {}, Formula::make_atom(0, Rel::Eq), false);
      if (*tr_lift) {
        FormulaDoc doc = load_doc(t_input);
        auto [lifted, desc] = divfree_lift(doc);
        result = lifted;
        side["stage"] = "divfree-lift";
        side["base_arity"] = desc.base_arity;
        side["lifted_arity"] = desc.lifted_arity;
      } else if (*tr_limit) {
        SparsePoly P = parse_poly(t_P);
        SparsePoly Q = parse_poly(t_Q, P.arity());
        result = limit_family_single(P, Q, parse_rat(t_R, "R"));
        side["stage"] = "limit-family";
        side["N"] = 2 * Q.degree().value_or(0) + 1;
        side["R"] = t_R;
      } else if (*tr_bar) {
        FormulaDoc doc = load_doc(t_input);
        std::vector<QuotientPair> quotients;
        for (const auto& entry : doc.poly_table)
          quotients.push_back({entry.poly, SparsePoly::constant(doc.arity, 1), entry.repr,
                               std::nullopt});
        std::vector<BarBlock> blocks = {{0, doc.arity, parse_rat(t_R, "R")}};
        result = bar_construction(doc, quotients, blocks);
        side["stage"] = "bar";
        side["R"] = t_R;
      } else if (*tr_join || *tr_fib || *tr_thick || *tr_diag) {
        FormulaDoc doc = load_doc(t_input);
        Rational R = parse_rat(t_R, "R");
        JoinConstruction c;
        if (*tr_join) {
          c = join_formula(doc, t_p, R);
          side["stage"] = "join";
        } else if (*tr_fib) {
          auto f = t_map.empty() ? identity_map(doc.arity) : parse_map(t_map, doc.arity);
          c = fibered_join_formula(doc, f, t_p, R);
          side["stage"] = "fibered-join";
        } else if (*tr_thick) {
          auto f = t_map.empty() ? identity_map(doc.arity) : parse_map(t_map, doc.arity);
          c = thickened_join_formula(doc, f, t_p, R, parse_rat(t_eps, "eps"));
          side["stage"] = "thickened-join";
          side["eps"] = t_eps;
        } else {
          c = thickened_diagonal(doc, t_p, R, parse_rat(t_eps, "eps"));
          side["stage"] = "diagonal";
          side["eps"] = t_eps;
          FormatRecord base = measure_format(doc);
          FormatPrediction pred = predict_diagonal_format(t_p, doc.arity, base.a, base.s,
                                                          base.d.value_or(0));
          BoundReport bounds = verify_format_bounds(c, pred);
          side["prediction"] = prediction_json(pred);
          side["bounds_pass"] = bounds.pass;
          side["bound_failures"] = bounds.failures;
          if (!bounds.pass) exit_code = 1;
        }
        side["p"] = t_p;
        side["R"] = t_R;
        result = c.doc;
      } else if (*tr_dag) {
        FormulaDoc doc = load_doc(t_input);
        Rational R = parse_rat(t_R, "R");
        Rational Rp = t_Rp.empty() ? default_r_prime(doc, R) : parse_rat(t_Rp, "Rp");
        DaggerMode mode = t_mode == "paper-literal" ? DaggerMode::PaperLiteral
                                                    : DaggerMode::Corrected;
        if (t_mode != "corrected" && t_mode != "paper-literal")
          throw UsageError("mode must be corrected or paper-literal");
        DaggerResult dag = dagger(doc, R, Rp, mode);
        result = dag.doc;
        side["stage"] = "dagger";
        side["mode"] = to_string(mode);
        side["R"] = rational_to_string(R);
        side["Rp"] = rational_to_string(Rp);
        side["slack"] = dag.slack;
      } else if (*tr_star) {
        FormulaDoc doc = load_doc(t_input);
        Rational R = parse_rat(t_R, "R");
        Rational Rp = t_Rp.empty() ? default_r_prime(doc, R) : parse_rat(t_Rp, "Rp");
        DaggerMode mode = t_mode == "paper-literal" ? DaggerMode::PaperLiteral
                                                    : DaggerMode::Corrected;
        if (t_mode != "corrected" && t_mode != "paper-literal")
          throw UsageError("mode must be corrected or paper-literal");
        StarResult star = star_formula(doc, t_p, R, Rp, mode);
        result = star.doc;
        side["stage"] = "star";
        side["mode"] = to_string(mode);
        side["p"] = t_p;
        side["R"] = rational_to_string(R);
        side["Rp"] = rational_to_string(Rp);
        nlohmann::json trace = nlohmann::json::array();
        for (const auto& st : star.trace)
          trace.push_back({{"stage", st.stage},
                           {"arity", st.arity},
                           {"format", format_json(st.format)}});
        side["trace"] = trace;
        side["notes"] = star.notes;
      }
      side["measured"] = format_json(measure_format(result));
      save_doc(result, t_output);
      emit_sidecar(t_output, side, g);
      return exit_code;
    }

    if (*predict) {
      if (*pr_diag) {
        emit_report(prediction_json(predict_diagonal_format(f_p, f_k, f_a, f_s, f_d)), "");
      } else {
        StarFormatPrediction pred = predict_star_format(f_p, f_k, f_a);
        emit_report({{"p", pred.p},
                     {"k", pred.k},
                     {"a", pred.a},
                     {"N", pred.N},
                     {"M_prop", pred.M_prop},
                     {"M_inline", pred.M_inline},
                     {"divfree_M", pred.divfree_M},
                     {"divfree_N", pred.divfree_N}},
                    "");
      }
      return 0;
    }

    if (*verify) {
      if (*ve_conv) {
        FamilyDoc family = load_doc(v_family);
        FormulaDoc target = load_doc(v_target);
        ConvergenceReport report = limit_convergence_check(
            family, target, parse_schedule(v_schedule), parse_box(g.box, target.arity),
            g.resolution, g.tau_opt(), v_threshold, g.threads);
        nlohmann::json j = to_json(report);
        j["seed"] = g.seed;
        emit_report(j, v_output);
        return report.pass ? 0 : 1;
      }
      if (*ve_sand) {
        FormulaDoc doc = load_doc(v_input);
        auto f = v_map.empty() ? identity_map(doc.arity) : parse_map(v_map, doc.arity);
        Rational R = parse_rat(v_R, "R");
        Rational eps = parse_rat(v_eps, "eps");
        double eta = v_eta;
        if (eta < 0) {
          SampleCloud cloud =
              sample_realization(doc, Box::cube(-to_double(R), to_double(R), doc.arity),
                                 SampleMode::Grid, g.resolution, g.tau_opt(), g.seed,
                                 g.threads);
          if (cloud.empty_flagged) throw UsageError("base realization sample is empty");
          eta = 2.0 * estimate_eta(v_p, to_double(R), f, cloud).eta;
        }
        CheckReport sandwich = sandwich_check(doc, f, v_p, R, eps, eta, v_budget, g.seed);
        CheckReport monotone =
            monotonicity_check(doc, f, v_p, R, {eps, 2 * eps + 1, 4 * eps + 2}, v_budget,
                               g.seed);
        nlohmann::json j = {{"eta", eta},
                            {"sandwich", to_json(sandwich)},
                            {"monotonicity", to_json(monotone)},
                            {"seed", g.seed}};
        emit_report(j, v_output);
        return sandwich.pass && monotone.pass ? 0 : 1;
      }
      if (*ve_lift) {
        FormulaDoc doc = load_doc(v_input);
        auto [lifted, desc] = divfree_lift(doc);
        CheckReport report = lift_consistency_check(doc, lifted, desc, v_budget, g.seed);
        nlohmann::json j = to_json(report);
        j["seed"] = g.seed;
        emit_report(j, v_output);
        return report.pass ? 0 : 1;
      }
      if (*ve_fmt) {
        FormulaDoc doc = load_doc(v_input);
        FormatPrediction pred = predict_diagonal_format(f_p, f_k, f_a, f_s, f_d);
        FormatRecord rec = measure_format(doc);
        std::vector<std::string> failures;
        if (doc.arity != pred.N) failures.push_back("ambient dimension differs from N");
        if (rec.a > pred.M) failures.push_back("additive format exceeds M");
        if (rec.s > pred.Mprime) failures.push_back("dense count exceeds M'");
        if (rec.d && *rec.d > pred.degree_bound) failures.push_back("degree exceeds bound");
        nlohmann::json j = {{"measured", format_json(rec)},
                            {"prediction", prediction_json(pred)},
                            {"failures", failures},
                            {"pass", failures.empty()}};
        emit_report(j, v_output);
        return failures.empty() ? 0 : 1;
      }
    }

    if (*exportc) {
      FormulaDoc doc = load_doc(e_input);
      SampleMode mode = e_mode == "random" ? SampleMode::Random : SampleMode::Grid;
      if (e_mode != "grid" && e_mode != "random")
        throw UsageError("mode must be grid or random");
      long long amount = mode == SampleMode::Random ? e_count : g.resolution;
      if (mode == SampleMode::Random && e_count <= 0)
        throw UsageError("random export needs a positive --count");
      auto emit = [&](const FormulaDoc& d, const std::string& path,
                      std::optional<double> param) {
        SampleCloud cloud = sample_realization(d, parse_box(g.box, d.arity), mode, amount,
                                               g.tau_opt(), g.seed, g.threads);
        cloud.param_value = param;
        if (cloud.empty_flagged) std::cerr << "warning: empty cloud for " << path << "\n";
        write_file(path, cloud_to_csv(cloud));
      };
      if (!e_ts.empty()) {
        if (!doc.is_family) throw UsageError("--t needs a one-parameter family input");
        for (const Rational& t : parse_schedule(e_ts)) {
          std::string tag = rational_to_string(t);
          std::replace(tag.begin(), tag.end(), '/', '_');
          emit(fix_last_variable(doc, t), e_prefix + "_t" + tag + ".csv", to_double(t));
        }
      } else {
        emit(doc, e_prefix + ".csv", std::nullopt);
      }
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
