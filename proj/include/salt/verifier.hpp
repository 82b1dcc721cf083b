#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "salt/transforms.hpp"

namespace salt {

struct Box {
  std::vector<double> lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  static Box cube(double a, double b, int k);
};

enum class SampleMode { Grid, Random };

std::string to_string(SampleMode mode);

// Finite floating stand-in for a realization. Every point passes the
// tau-relaxed membership test (equalities as |P| <= tau).
struct SampleCloud {
  std::vector<std::vector<double>> points;
  int dim = 0;
  Box box;
  SampleMode mode = SampleMode::Grid;
  long long resolution_or_count = 0;
  std::uint64_t seed = 0;
  double tau = 0.0;        // equality tolerance actually used
  double grid_step = 0.0;  // 0 in random mode
  bool empty_flagged = false;
  std::optional<double> param_value;
};

// Deterministic given (mode, resolution/count, seed, tau); thread count never
// changes the result. tau = nullopt turns on the automatic two-pass choice:
// 2 x grid step x a per-polynomial Lipschitz estimate, re-estimated on the
// accepted points.
SampleCloud sample_realization(const FormulaDoc& doc, const Box& box, SampleMode mode,
                               long long resolution_or_count,
                               std::optional<double> tau = std::nullopt,
                               std::uint64_t seed = 0, int threads = 1);

// CSV with metadata comment lines; one row per point.
std::string cloud_to_csv(const SampleCloud& cloud);

struct HausdorffResult {
  double a_to_b = 0.0;
  double b_to_a = 0.0;
  double symmetric = 0.0;
};

// Brute force over pairs; the spatial-bucket acceleration returns identical
// values (prunes only provably farther candidates).
HausdorffResult hausdorff_distance(const SampleCloud& a, const SampleCloud& b,
                                   bool accelerate = true);

double default_linking_radius(const SampleCloud& cloud);  // 2.5 x grid step

// beta_0 proxy: union-find over the linking-radius neighbor graph.
int connected_components(const SampleCloud& cloud, double linking_radius);

struct EtaEstimate {
  double m = 0.0;    // max over the cloud of |x - f(x)|
  double eta = 0.0;  // p(p+1)(4Rm + 2m^2)
  bool sample_lower_estimate = true;
};

EtaEstimate estimate_eta(int p, double R, const std::vector<SparsePoly>& f,
                         const SampleCloud& cloud);

struct ConvergenceStep {
  double t = 0.0;
  double d_ab = 0.0, d_ba = 0.0, d_sym = 0.0;
  int beta0 = 0;
};

struct ConvergenceReport {
  std::vector<ConvergenceStep> steps;
  int target_beta0 = 0;
  double grid_step = 0.0;
  double linking_radius = 0.0;
  double slack = 0.0;            // allowed increase between steps (one grid step)
  double final_threshold = 0.0;  // admissible final symmetric distance
  bool monotone = false;
  bool final_ok = false;
  bool pass = false;
  std::vector<std::string> messages;
};

// Samples the target once and each fiber of the family along the schedule;
// verdicts: symmetric distance non-increasing within one grid step of slack,
// final distance below threshold_steps grid steps.
ConvergenceReport limit_convergence_check(const FamilyDoc& family, const FormulaDoc& target,
                                          const std::vector<Rational>& schedule, const Box& box,
                                          long long resolution,
                                          std::optional<double> tau = std::nullopt,
                                          double final_threshold_steps = 3.0, int threads = 1);

struct CheckReport {
  bool pass = true;
  bool infeasible = false;  // nothing sampled; reported, not failed
  long long checked = 0;
  long long members = 0;
  long long violations = 0;
  std::vector<std::string> messages;
};

// Membership-level sandwich: structured join points satisfying the thickened
// fibered join at eps must satisfy the thickened diagonal at eps+eta, and
// diagonal members must satisfy the join at eps+2*eta. eta should come from
// estimate_eta, inflated (default elsewhere: 2x).
CheckReport sandwich_check(const FormulaDoc& doc, const std::vector<SparsePoly>& f, int p,
                           const Rational& R, const Rational& eps, double eta,
                           long long budget, std::uint64_t seed = 1);

// Thickened-join membership is monotone along an increasing eps schedule.
CheckReport monotonicity_check(const FormulaDoc& doc, const std::vector<SparsePoly>& f, int p,
                               const Rational& R, const std::vector<Rational>& eps_schedule,
                               long long budget, std::uint64_t seed = 1);

// Sample-level bijection check for the division-free lift.
CheckReport lift_consistency_check(const FormulaDoc& doc, const FormulaDoc& lifted,
                                   const LiftDescriptor& desc, long long budget,
                                   std::uint64_t seed = 2);

struct ProjectionReport {
  double d_sym = 0.0;
  double grid_step = 0.0;
  bool pass = false;
  std::vector<std::string> messages;
};

// Compares doc AND |x|^2 <= R^2 against the projection of the slacked surface
// to the first k variables. The slack block is eliminated exactly: every slot
// equation has the shape G(x) + s V^2 = 0, so fiber feasibility over a grid
// point is decided in rational arithmetic, no sampling in the slack space.
ProjectionReport dagger_projection_check(const FormulaDoc& doc, const Rational& R,
                                         const Rational& Rp, DaggerMode mode,
                                         long long resolution, double pass_factor = 3.0);

nlohmann::json to_json(const ConvergenceReport& r);
nlohmann::json to_json(const CheckReport& r);
nlohmann::json to_json(const ProjectionReport& r);

}  // namespace salt
