#include "salt/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace salt {

namespace {

constexpr double kBorderline = 1e-12;
constexpr long long kGridCap = 200'000'000;

std::vector<int> referenced_polys(const FormulaDoc& doc) {
  std::vector<const Atom*> atoms;
  collect_atoms(doc.root, atoms);
  std::vector<bool> used(doc.poly_table.size(), false);
  for (const Atom* a : atoms) used[a->poly_ref] = true;
  std::vector<int> refs;
  for (std::size_t i = 0; i < used.size(); ++i)
    if (used[i]) refs.push_back(static_cast<int>(i));
  return refs;
}

// Mirrors eval_formula_relaxed with exact arithmetic; only equalities relax.
bool eval_relaxed_exact(const FormulaDoc& doc, const std::vector<Rational>& x,
                        const Rational& tau) {
  struct Walker {
    const FormulaDoc& doc;
    const std::vector<Rational>& x;
    const Rational& tau;
    bool walk(const Formula& f) const {
      switch (f.kind) {
        case Formula::Kind::Atom: {
          Rational v = doc.poly_table[f.atom.poly_ref].poly.eval(x);
          switch (f.atom.rel) {
            case Rel::Eq: return v <= tau && v >= -tau;
            case Rel::Lt: return v < 0;
            case Rel::Gt: return v > 0;
            case Rel::Le: return v <= 0;
            case Rel::Ge: return v >= 0;
          }
          return false;
        }
        case Formula::Kind::Not: return !walk(f.children[0]);
        case Formula::Kind::And:
          for (const auto& c : f.children)
            if (!walk(c)) return false;
          return true;
        case Formula::Kind::Or:
          for (const auto& c : f.children)
            if (walk(c)) return true;
          return false;
      }
      return false;
    }
  };
  return Walker{doc, x, tau}.walk(doc.root);
}

// Accepts x when the relaxed test does; a point this close to a non-relaxed
// atom boundary gets the ambiguity resolved in exact arithmetic.
bool accept_point(const FormulaDoc& doc, const std::vector<int>& refs,
                  const std::vector<const Atom*>& atoms, const std::vector<double>& x,
                  double tau) {
  (void)refs;
  bool verdict = eval_formula_relaxed(doc, x, tau);
  bool borderline = false;
  for (const Atom* a : atoms) {
    if (a->rel == Rel::Eq) continue;
    double v = doc.poly_table[a->poly_ref].poly.eval(x);
    if (std::abs(v) <= kBorderline) {
      borderline = true;
      break;
    }
  }
  if (!borderline) return verdict;
  std::vector<Rational> xr(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) xr[i] = rational_from_double(x[i]);
  return eval_relaxed_exact(doc, xr, rational_from_double(tau));
}

long long grid_total(const Box& box, long long res) {
  long long total = 1;
  for (int i = 0; i < box.dim(); ++i) {
    if (total > kGridCap / res) throw std::invalid_argument("grid too large");
    total *= res;
  }
  return total;
}

std::vector<double> grid_point(const Box& box, long long res, long long index) {
  std::vector<double> x(box.dim());
  for (int i = box.dim() - 1; i >= 0; --i) {
    long long q = index % res;
    index /= res;
    x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * static_cast<double>(q) /
                           static_cast<double>(res - 1);
  }
  return x;
}

double max_grid_step(const Box& box, long long res) {
  double h = 0.0;
  for (int i = 0; i < box.dim(); ++i) h = std::max(h, (box.hi[i] - box.lo[i]) / double(res - 1));
  return h;
}

double gradient_norm(const std::vector<SparsePoly>& grad, const std::vector<double>& x) {
  double s = 0.0;
  for (const auto& g : grad) {
    double v = g.eval(x);
    s += v * v;
  }
  return std::sqrt(s);
}

// Max gradient norm of the equality polynomials over the probe set; the
// automatic tolerance is 2 x grid step x this constant.
double lipschitz_over(const std::vector<std::vector<SparsePoly>>& grads,
                      const std::vector<std::vector<double>>& probes) {
  double L = 0.0;
  for (const auto& grad : grads)
    for (const auto& x : probes) L = std::max(L, gradient_norm(grad, x));
  return L;
}

std::vector<std::vector<double>> coarse_probes(const Box& box, std::uint64_t seed) {
  int dim = box.dim();
  long long per = 9;
  double total = std::pow(static_cast<double>(per), dim);
  std::vector<std::vector<double>> probes;
  if (total <= 65536.0) {
    long long n = 1;
    for (int i = 0; i < dim; ++i) n *= per;
    probes.reserve(n);
    for (long long idx = 0; idx < n; ++idx) probes.push_back(grid_point(box, per, idx));
  } else {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    probes.reserve(4096);
    for (int s = 0; s < 4096; ++s) {
      std::vector<double> x(dim);
      for (int i = 0; i < dim; ++i) {
        std::uniform_real_distribution<double> u(box.lo[i], box.hi[i]);
        x[i] = u(rng);
      }
      probes.push_back(std::move(x));
    }
  }
  return probes;
}

std::vector<std::vector<double>> filter_points(const FormulaDoc& doc,
                                               const std::vector<std::vector<double>>& candidates,
                                               double tau, int threads) {
  std::vector<int> refs = referenced_polys(doc);
  std::vector<const Atom*> atoms;
  collect_atoms(doc.root, atoms);
  long long n = static_cast<long long>(candidates.size());
  threads = static_cast<int>(
      std::min<long long>(std::max(threads, 1), std::max<long long>(1, n)));
  std::vector<std::vector<std::vector<double>>> parts(threads);
  auto work = [&](int t) {
    long long lo = n * t / threads, hi = n * (t + 1) / threads;
    for (long long i = lo; i < hi; ++i)
      if (accept_point(doc, refs, atoms, candidates[i], tau)) parts[t].push_back(candidates[i]);
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  std::vector<std::vector<double>> out;
  for (auto& part : parts)
    for (auto& x : part) out.push_back(std::move(x));
  return out;
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

struct CellHash {
  std::size_t operator()(const std::vector<long long>& c) const {
    std::size_t h = 1469598103934665603ULL;
    for (long long v : c) {
      h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

using CellMap = std::unordered_map<std::vector<long long>, std::vector<int>, CellHash>;

std::vector<long long> cell_of(const std::vector<double>& x, double c) {
  std::vector<long long> cell(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    cell[i] = static_cast<long long>(std::floor(x[i] / c));
  return cell;
}

double directed_brute(const std::vector<std::vector<double>>& A,
                      const std::vector<std::vector<double>>& B) {
  double worst = 0.0;
  for (const auto& a : A) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : B) best = std::min(best, sq_dist(a, b));
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

// Ring search over a spatial hash of B; a cell at Chebyshev distance q from
// the query cell only holds points at Euclidean distance >= (q-1) * cell, so
// rings past that bound cannot improve the minimum.
double directed_bucket(const std::vector<std::vector<double>>& A,
                       const std::vector<std::vector<double>>& B) {
  int dim = static_cast<int>(B[0].size());
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& b : B)
    for (double v : b) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  double extent = hi - lo;
  double cell = extent / 32.0;
  if (!(cell > 0.0) || dim > 4) return directed_brute(A, B);
  CellMap buckets;
  for (int i = 0; i < static_cast<int>(B.size()); ++i)
    buckets[cell_of(B[i], cell)].push_back(i);
  long long max_ring = static_cast<long long>(std::ceil(extent / cell)) + 2;

  double worst = 0.0;
  std::vector<long long> probe(dim);
  for (const auto& a : A) {
    std::vector<long long> home = cell_of(a, cell);
    double best = std::numeric_limits<double>::infinity();
    for (long long r = 0;; ++r) {
      if (best < std::numeric_limits<double>::infinity() &&
          static_cast<double>(r - 1) * cell >= std::sqrt(best))
        break;
      if (r > max_ring) break;
      // Enumerate the shell at Chebyshev distance r.
      std::vector<long long> off(dim, -r);
      while (true) {
        long long cheb = 0;
        for (long long o : off) cheb = std::max(cheb, std::llabs(o));
        if (cheb == r) {
          for (int i = 0; i < dim; ++i) probe[i] = home[i] + off[i];
          auto it = buckets.find(probe);
          if (it != buckets.end())
            for (int idx : it->second) best = std::min(best, sq_dist(a, B[idx]));
        }
        int i = dim - 1;
        while (i >= 0 && off[i] == r) off[i--] = -r;
        if (i < 0) break;
        ++off[i];
      }
    }
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

std::mt19937_64 seeded(std::uint64_t seed) { return std::mt19937_64(seed); }

std::vector<double> random_simplex_point(std::mt19937_64& rng, int p, double zero_prob) {
  std::vector<double> t(p + 1);
  std::exponential_distribution<double> ex(1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int active = 0;
  for (int i = 0; i <= p; ++i) {
    bool off = u(rng) < zero_prob;
    t[i] = off ? 0.0 : ex(rng) + 1e-3;
    if (!off) ++active;
  }
  if (active == 0) t[rng() % (p + 1)] = 1.0;
  double s = 0.0;
  for (double v : t) s += v;
  for (double& v : t) v /= s;
  return t;
}

}  // namespace

Box Box::cube(double a, double b, int k) {
  if (!(a < b) || k <= 0) throw std::invalid_argument("degenerate box");
  Box box;
  box.lo.assign(k, a);
  box.hi.assign(k, b);
  return box;
}

std::string to_string(SampleMode mode) {
  return mode == SampleMode::Grid ? "grid" : "random";
}

SampleCloud sample_realization(const FormulaDoc& doc, const Box& box, SampleMode mode,
                               long long resolution_or_count, std::optional<double> tau,
                               std::uint64_t seed, int threads) {
  if (box.dim() != doc.arity) throw ArityMismatch("box dimension");
  if (mode == SampleMode::Grid && resolution_or_count < 2)
    throw std::invalid_argument("grid resolution must be at least 2");
  if (mode == SampleMode::Random && resolution_or_count < 1)
    throw std::invalid_argument("sample count must be positive");
  for (int i = 0; i < box.dim(); ++i)
    if (!(box.lo[i] < box.hi[i])) throw std::invalid_argument("degenerate box");

  SampleCloud cloud;
  cloud.dim = doc.arity;
  cloud.box = box;
  cloud.mode = mode;
  cloud.resolution_or_count = resolution_or_count;
  cloud.seed = seed;

  std::vector<std::vector<double>> candidates;
  double h = 0.0;
  if (mode == SampleMode::Grid) {
    long long total = grid_total(box, resolution_or_count);
    h = max_grid_step(box, resolution_or_count);
    candidates.reserve(total);
    for (long long idx = 0; idx < total; ++idx)
      candidates.push_back(grid_point(box, resolution_or_count, idx));
    cloud.grid_step = h;
  } else {
    std::mt19937_64 rng = seeded(seed);
    candidates.reserve(resolution_or_count);
    for (long long s = 0; s < resolution_or_count; ++s) {
      std::vector<double> x(box.dim());
      for (int i = 0; i < box.dim(); ++i) {
        std::uniform_real_distribution<double> u(box.lo[i], box.hi[i]);
        x[i] = u(rng);
      }
      candidates.push_back(std::move(x));
    }
    double extent = 0.0;
    for (int i = 0; i < box.dim(); ++i) extent = std::max(extent, box.hi[i] - box.lo[i]);
    h = extent / std::pow(static_cast<double>(resolution_or_count), 1.0 / box.dim());
    cloud.grid_step = 0.0;
  }

  std::vector<int> eq_refs;
  {
    std::vector<const Atom*> atoms;
    collect_atoms(doc.root, atoms);
    std::vector<bool> seen(doc.poly_table.size(), false);
    for (const Atom* a : atoms)
      if (a->rel == Rel::Eq && !seen[a->poly_ref]) {
        seen[a->poly_ref] = true;
        eq_refs.push_back(a->poly_ref);
      }
  }

  double used_tau;
  if (tau) {
    if (*tau < 0) throw std::invalid_argument("negative tau");
    used_tau = *tau;
    cloud.points = filter_points(doc, candidates, used_tau, threads);
  } else if (eq_refs.empty()) {
    used_tau = 0.0;
    cloud.points = filter_points(doc, candidates, used_tau, threads);
  } else {
    std::vector<std::vector<SparsePoly>> grads;
    for (int ref : eq_refs) {
      std::vector<SparsePoly> g;
      for (int v = 0; v < doc.arity; ++v)
        g.push_back(doc.poly_table[ref].poly.derivative(v));
      grads.push_back(std::move(g));
    }
    double L1 = std::max(1e-9, lipschitz_over(grads, coarse_probes(box, seed)));
    double tau1 = 2.0 * h * L1;
    auto pass1 = filter_points(doc, candidates, tau1, threads);
    used_tau = tau1;
    cloud.points = std::move(pass1);
    if (!cloud.points.empty()) {
      double L2 = std::max(1e-9, lipschitz_over(grads, cloud.points));
      double tau2 = 2.0 * h * L2;
      if (tau2 < tau1) {
        auto pass2 = filter_points(doc, candidates, tau2, threads);
        if (!pass2.empty()) {
          used_tau = tau2;
          cloud.points = std::move(pass2);
        }
      }
    }
  }
  cloud.tau = used_tau;
  cloud.empty_flagged = cloud.points.empty();
  return cloud;
}

std::string cloud_to_csv(const SampleCloud& cloud) {
  std::ostringstream out;
  out << "# mode=" << to_string(cloud.mode) << " dim=" << cloud.dim
      << " resolution_or_count=" << cloud.resolution_or_count << " seed=" << cloud.seed
      << "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", cloud.tau);
  out << "# tau=" << buf;
  std::snprintf(buf, sizeof buf, "%.17g", cloud.grid_step);
  out << " grid_step=" << buf << " points=" << cloud.points.size()
      << (cloud.empty_flagged ? " empty=1" : "") << "\n";
  out << "# box=";
  for (int i = 0; i < cloud.dim; ++i) {
    std::snprintf(buf, sizeof buf, "[%.17g,%.17g]", cloud.box.lo[i], cloud.box.hi[i]);
    out << (i ? "x" : "") << buf;
  }
  if (cloud.param_value) {
    std::snprintf(buf, sizeof buf, "%.17g", *cloud.param_value);
    out << " param=" << buf;
  }
  out << "\n";
  for (int i = 0; i < cloud.dim; ++i) out << (i ? "," : "") << "x" << (i + 1);
  out << "\n";
  for (const auto& p : cloud.points) {
    for (int i = 0; i < cloud.dim; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", p[i]);
      out << (i ? "," : "") << buf;
    }
    out << "\n";
  }
  return out.str();
}

HausdorffResult hausdorff_distance(const SampleCloud& a, const SampleCloud& b,
                                   bool accelerate) {
  if (a.points.empty() || b.points.empty())
    throw std::invalid_argument("Hausdorff distance of an empty sample");
  if (a.dim != b.dim) throw ArityMismatch("cloud dimensions differ");
  HausdorffResult r;
  if (accelerate) {
    r.a_to_b = directed_bucket(a.points, b.points);
    r.b_to_a = directed_bucket(b.points, a.points);
  } else {
    r.a_to_b = directed_brute(a.points, b.points);
    r.b_to_a = directed_brute(b.points, a.points);
  }
  r.symmetric = std::max(r.a_to_b, r.b_to_a);
  return r;
}

double default_linking_radius(const SampleCloud& cloud) {
  if (cloud.grid_step > 0.0) return 2.5 * cloud.grid_step;
  // Random clouds: the expected nearest-neighbor scale of the box.
  double extent = 0.0;
  for (int i = 0; i < cloud.dim; ++i)
    extent = std::max(extent, cloud.box.hi[i] - cloud.box.lo[i]);
  double n = std::max<std::size_t>(cloud.points.size(), 1);
  return 2.5 * extent / std::pow(n, 1.0 / std::max(cloud.dim, 1));
}

int connected_components(const SampleCloud& cloud, double linking_radius) {
  if (cloud.points.empty()) return 0;
  if (!(linking_radius > 0.0)) throw std::invalid_argument("linking radius must be positive");
  int n = static_cast<int>(cloud.points.size());
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  auto unite = [&](int i, int j) {
    i = find(i);
    j = find(j);
    if (i != j) parent[i] = j;
  };

  double r2 = linking_radius * linking_radius;
  CellMap buckets;
  for (int i = 0; i < n; ++i) buckets[cell_of(cloud.points[i], linking_radius)].push_back(i);
  int dim = cloud.dim;
  for (const auto& [cell, members] : buckets) {
    std::vector<long long> nb(dim);
    std::vector<long long> off(dim, -1);
    while (true) {
      for (int i = 0; i < dim; ++i) nb[i] = cell[i] + off[i];
      auto it = buckets.find(nb);
      if (it != buckets.end())
        for (int i : members)
          for (int j : it->second)
            if (i < j && sq_dist(cloud.points[i], cloud.points[j]) <= r2) unite(i, j);
      int i = dim - 1;
      while (i >= 0 && off[i] == 1) off[i--] = -1;
      if (i < 0) break;
      ++off[i];
    }
  }
  int comps = 0;
  for (int i = 0; i < n; ++i)
    if (find(i) == i) ++comps;
  return comps;
}

EtaEstimate estimate_eta(int p, double R, const std::vector<SparsePoly>& f,
                         const SampleCloud& cloud) {
  if (p < 0 || !(R > 0.0)) throw std::invalid_argument("eta estimate parameters");
  if (static_cast<int>(f.size()) != cloud.dim) throw ArityMismatch("map component count");
  if (cloud.points.empty()) throw std::invalid_argument("eta estimate needs a nonempty sample");
  double m = 0.0;
  for (const auto& x : cloud.points) {
    double s = 0.0;
    for (int i = 0; i < cloud.dim; ++i) {
      double d = x[i] - f[i].eval(x);
      s += d * d;
    }
    m = std::max(m, std::sqrt(s));
  }
  EtaEstimate e;
  e.m = m;
  e.eta = static_cast<double>(p) * (p + 1) * (4.0 * R * m + 2.0 * m * m);
  return e;
}

ConvergenceReport limit_convergence_check(const FamilyDoc& family, const FormulaDoc& target,
                                          const std::vector<Rational>& schedule, const Box& box,
                                          long long resolution, std::optional<double> tau,
                                          double final_threshold_steps, int threads) {
  if (!family.is_family) throw std::invalid_argument("first document is not a family");
  if (family.arity != target.arity + 1) throw ArityMismatch("family/target arity");
  if (schedule.empty()) throw std::invalid_argument("empty schedule");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i] <= 0) throw std::invalid_argument("schedule values must be positive");
    if (i && schedule[i] >= schedule[i - 1])
      throw std::invalid_argument("schedule must be strictly decreasing");
  }

  ConvergenceReport report;
  SampleCloud target_cloud =
      sample_realization(target, box, SampleMode::Grid, resolution, tau, 0, threads);
  report.grid_step = target_cloud.grid_step;
  report.slack = target_cloud.grid_step;
  report.final_threshold = final_threshold_steps * target_cloud.grid_step;
  report.linking_radius = default_linking_radius(target_cloud);
  if (target_cloud.empty_flagged) {
    report.messages.push_back("target sample is empty");
    return report;
  }
  report.target_beta0 = connected_components(target_cloud, report.linking_radius);

  bool all_sampled = true;
  for (const Rational& t : schedule) {
    FormulaDoc fiber = fix_last_variable(family, t);
    SampleCloud cloud =
        sample_realization(fiber, box, SampleMode::Grid, resolution, tau, 0, threads);
    cloud.param_value = to_double(t);
    ConvergenceStep step;
    step.t = to_double(t);
    if (cloud.empty_flagged) {
      all_sampled = false;
      step.d_ab = step.d_ba = step.d_sym = std::numeric_limits<double>::infinity();
      report.messages.push_back("fiber at t=" + rational_to_string(t) + " is empty");
    } else {
      HausdorffResult h = hausdorff_distance(cloud, target_cloud);
      step.d_ab = h.a_to_b;
      step.d_ba = h.b_to_a;
      step.d_sym = h.symmetric;
      step.beta0 = connected_components(cloud, default_linking_radius(cloud));
    }
    report.steps.push_back(step);
  }

  report.monotone = all_sampled;
  for (std::size_t i = 1; i < report.steps.size(); ++i)
    if (report.steps[i].d_sym > report.steps[i - 1].d_sym + report.slack)
      report.monotone = false;
  report.final_ok = all_sampled && report.steps.back().d_sym <= report.final_threshold;
  report.pass = report.monotone && report.final_ok;
  if (!report.monotone) report.messages.push_back("distance increased beyond one grid step");
  if (all_sampled && !report.final_ok)
    report.messages.push_back("final distance above threshold");
  return report;
}

namespace {

struct JoinSampler {
  int k = 0, p = 0;
  double Rd = 0.0;
  SampleCloud base;
  std::vector<SparsePoly> f;
  double tau = 0.0;

  // Assembles the (x^0..x^p, t, a) point with A pinned to the canonical
  // witness of the requested clause family.
  std::vector<double> assemble(const std::vector<int>& picks, const std::vector<double>& t,
                               bool use_map) const {
    int pairs = pair_count(p);
    std::vector<double> pt((p + 1) * k + (p + 1) + pairs, 0.0);
    for (int i = 0; i <= p; ++i)
      for (int c = 0; c < k; ++c) pt[i * k + c] = base.points[picks[i]][c];
    for (int i = 0; i <= p; ++i) pt[(p + 1) * k + i] = t[i];
    int a0 = (p + 1) * k + (p + 1);
    for (int i = 0; i <= p; ++i)
      for (int j = i + 1; j <= p; ++j) {
        if (t[i] == 0.0 || t[j] == 0.0) continue;
        double s = 0.0;
        for (int c = 0; c < k; ++c) {
          double vi = use_map ? f[c].eval(base.points[picks[i]]) : base.points[picks[i]][c];
          double vj = use_map ? f[c].eval(base.points[picks[j]]) : base.points[picks[j]][c];
          double d = vi - vj;
          s += d * d;
        }
        pt[a0 + pair_index(p, i, j)] = s;
      }
    return pt;
  }
};

JoinSampler make_join_sampler(const FormulaDoc& doc, const std::vector<SparsePoly>& f, int p,
                              const Rational& R, std::uint64_t seed, int threads = 1) {
  if (static_cast<int>(f.size()) != doc.arity) throw ArityMismatch("map component count");
  JoinSampler js;
  js.k = doc.arity;
  js.p = p;
  js.Rd = to_double(R);
  js.f = f;
  long long res = std::max<long long>(
      3, static_cast<long long>(std::floor(std::pow(30000.0, 1.0 / js.k))));
  SampleCloud raw = sample_realization(doc, Box::cube(-js.Rd, js.Rd, js.k), SampleMode::Grid,
                                       res, std::nullopt, seed, threads);
  js.tau = std::max(1e-9, raw.tau * (1.0 + 1e-6));
  js.base = raw;
  js.base.points.clear();
  double r2 = js.Rd * js.Rd * (1.0 + 1e-12);
  for (const auto& x : raw.points) {
    double s = 0.0;
    for (double v : x) s += v * v;
    if (s <= r2) js.base.points.push_back(x);
  }
  js.base.empty_flagged = js.base.points.empty();
  return js;
}

}  // namespace

CheckReport sandwich_check(const FormulaDoc& doc, const std::vector<SparsePoly>& f, int p,
                           const Rational& R, const Rational& eps, double eta,
                           long long budget, std::uint64_t seed) {
  if (p < 0) throw std::invalid_argument("negative p");
  if (eps < 0 || eta < 0) throw std::invalid_argument("negative thickening");
  CheckReport report;
  JoinSampler js = make_join_sampler(doc, f, p, R, seed);
  if (js.base.points.empty()) {
    report.infeasible = true;
    report.pass = false;
    report.messages.push_back("base realization sample is empty");
    return report;
  }

  Rational eta_r = rational_from_double(eta);
  JoinConstruction J0 = thickened_join_formula(doc, f, p, R, eps);
  JoinConstruction D1 = thickened_diagonal(doc, p, R, eps + eta_r);
  JoinConstruction J2 = thickened_join_formula(doc, f, p, R, eps + 2 * eta_r);

  std::mt19937_64 rng = seeded(seed);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(js.base.points.size()) - 1);
  for (long long trial = 0; trial < budget; ++trial) {
    std::vector<int> picks(p + 1);
    for (int& i : picks) i = pick(rng);
    std::vector<double> t = random_simplex_point(rng, p, 0.25);
    std::vector<double> ptJ = js.assemble(picks, t, /*use_map=*/true);
    std::vector<double> ptD = js.assemble(picks, t, /*use_map=*/false);
    ++report.checked;

    bool inJ0 = eval_formula_relaxed(J0.doc, ptJ, js.tau);
    bool inD1 = eval_formula_relaxed(D1.doc, ptD, js.tau);
    bool inJ2 = eval_formula_relaxed(J2.doc, ptJ, js.tau);
    if (inJ0 || inD1) ++report.members;
    if (inJ0 && !inD1) {
      ++report.violations;
      report.messages.push_back("join member escaped the widened diagonal (trial " +
                                std::to_string(trial) + ")");
    }
    if (inD1 && !inJ2) {
      ++report.violations;
      report.messages.push_back("diagonal member escaped the twice-widened join (trial " +
                                std::to_string(trial) + ")");
    }
  }
  report.infeasible = report.members == 0;
  if (report.infeasible) report.messages.push_back("no structured member was generated");
  report.pass = report.violations == 0 && !report.infeasible;
  return report;
}

CheckReport monotonicity_check(const FormulaDoc& doc, const std::vector<SparsePoly>& f, int p,
                               const Rational& R, const std::vector<Rational>& eps_schedule,
                               long long budget, std::uint64_t seed) {
  if (eps_schedule.size() < 2) throw std::invalid_argument("schedule needs two thickenings");
  for (std::size_t i = 0; i < eps_schedule.size(); ++i) {
    if (eps_schedule[i] < 0) throw std::invalid_argument("negative thickening");
    if (i && eps_schedule[i] <= eps_schedule[i - 1])
      throw std::invalid_argument("schedule must be strictly increasing");
  }
  CheckReport report;
  JoinSampler js = make_join_sampler(doc, f, p, R, seed);
  if (js.base.points.empty()) {
    report.infeasible = true;
    report.pass = false;
    report.messages.push_back("base realization sample is empty");
    return report;
  }
  std::vector<JoinConstruction> joins;
  for (const Rational& e : eps_schedule)
    joins.push_back(thickened_join_formula(doc, f, p, R, e));

  std::mt19937_64 rng = seeded(seed);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(js.base.points.size()) - 1);
  for (long long trial = 0; trial < budget; ++trial) {
    std::vector<int> picks(p + 1);
    for (int& i : picks) i = pick(rng);
    std::vector<double> t = random_simplex_point(rng, p, 0.25);
    std::vector<double> pt = js.assemble(picks, t, /*use_map=*/true);
    ++report.checked;
    bool prev = eval_formula_relaxed(joins[0].doc, pt, js.tau);
    if (prev) ++report.members;
    for (std::size_t i = 1; i < joins.size(); ++i) {
      bool cur = eval_formula_relaxed(joins[i].doc, pt, js.tau);
      if (prev && !cur) {
        ++report.violations;
        report.messages.push_back("membership lost when the thickening grew (trial " +
                                  std::to_string(trial) + ")");
      }
      prev = cur;
    }
  }
  report.infeasible = report.members == 0;
  if (report.infeasible) report.messages.push_back("no structured member was generated");
  report.pass = report.violations == 0 && !report.infeasible;
  return report;
}

CheckReport lift_consistency_check(const FormulaDoc& doc, const FormulaDoc& lifted,
                                   const LiftDescriptor& desc, long long budget,
                                   std::uint64_t seed) {
  if (desc.base_arity != doc.arity || desc.lifted_arity != lifted.arity)
    throw ArityMismatch("lift descriptor");
  CheckReport report;
  std::mt19937_64 rng = seeded(seed);
  std::uniform_int_distribution<int> num(-8, 8);
  std::uniform_int_distribution<int> den(1, 8);
  for (long long trial = 0; trial < budget; ++trial) {
    std::vector<Rational> x(doc.arity);
    for (auto& v : x) v = Rational(num(rng), den(rng));
    std::vector<Rational> y = lift_point(desc, x);
    ++report.checked;
    bool base = eval_formula(doc, x);
    bool up = eval_formula(lifted, y);
    if (base) ++report.members;
    if (base != up) {
      ++report.violations;
      report.messages.push_back("lifted membership disagreed (trial " + std::to_string(trial) +
                                ")");
      continue;
    }
    if (lifted.arity > doc.arity) {
      // Off the graph of the step values the lift must reject the point.
      std::vector<Rational> bad = y;
      int idx = doc.arity + static_cast<int>(rng() % (lifted.arity - doc.arity));
      bad[idx] += 1;
      if (eval_formula(lifted, bad)) {
        ++report.violations;
        report.messages.push_back("off-graph point accepted (trial " + std::to_string(trial) +
                                  ")");
      }
    }
  }
  report.pass = report.violations == 0;
  return report;
}

namespace {

// A slot equation G0(x) + s V_i^2 = 0; V_i is the only slack variable in it.
struct SlackSlot {
  int var = 0;           // absolute index of V_i
  SparsePoly g0;         // the V-free part, over the base variables
  Rational sign;         // s, the coefficient of V_i^2
};

// Slack variables only appear squared in the slacked document, so a point is
// evaluated from the base coordinates and the squared slack values.
Rational eval_even(const SparsePoly& poly, const std::vector<Rational>& x,
                   const std::vector<Rational>& sq, int k) {
  Rational total = 0;
  for (const auto& [e, c] : poly.terms()) {
    Rational term = c;
    for (int i = 0; i < k; ++i)
      for (int rep = 0; rep < e[i]; ++rep) term *= x[i];
    for (std::size_t i = k; i < e.size(); ++i) {
      if (e[i] % 2 != 0) throw std::logic_error("odd slack exponent");
      for (int rep = 0; rep < e[i] / 2; ++rep) term *= sq[i - k];
    }
    total += term;
  }
  return total;
}

struct FiberOracle {
  const DaggerResult& dag;
  int k;
  std::vector<SlackSlot> slots;
  std::vector<bool> relax;  // per table entry: equality over base vars only

  explicit FiberOracle(const DaggerResult& d) : dag(d), k(d.k) {
    for (const auto& entry : dag.doc.poly_table) {
      int slack_var = -1, slack_count = 0;
      bool pure_square = true;
      SparsePoly g0(k);
      Rational sign = 0;
      for (const auto& [e, c] : entry.poly.terms()) {
        int sv = -1;
        for (std::size_t i = k; i < e.size(); ++i)
          if (e[i] != 0) sv = static_cast<int>(i);
        if (sv < 0) {
          ExponentVector base(e.begin(), e.begin() + k);
          g0.add_term(base, c);
          continue;
        }
        if (e[sv] != 2 || total_degree(e) != 2) pure_square = false;
        if (slack_var >= 0 && slack_var != sv) ++slack_count;
        slack_var = sv;
        sign = c;
      }
      relax.push_back(slack_var < 0);
      if (slack_var >= 0 && slack_count == 0 && pure_square &&
          slack_var < dag.doc.arity - 2)
        slots.push_back({slack_var, g0, sign});
    }
  }

  bool feasible(const std::vector<Rational>& x, const Rational& tau) const {
    Rational u1sq = dag.R * dag.R;
    for (const Rational& v : x) u1sq -= v * v;
    if (u1sq < 0) return false;
    int m = static_cast<int>(slots.size());
    if (m > 20) throw std::invalid_argument("too many slack slots");
    int nslack = dag.doc.arity - k;
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
      std::vector<Rational> sq(nslack, Rational(0));
      sq[nslack - 2] = u1sq;
      Rational vnorm = 0;
      bool ok = true;
      for (int i = 0; i < m && ok; ++i) {
        if (!(mask & (1u << i))) continue;
        Rational v2 = -slots[i].g0.eval(x) / slots[i].sign;
        if (v2 < 0) {
          ok = false;
          break;
        }
        sq[slots[i].var - k] = v2;
        vnorm += v2;
      }
      if (!ok) continue;
      Rational u2sq = dag.Rp * dag.Rp - vnorm;
      if (u2sq < 0) continue;
      sq[nslack - 1] = u2sq;
      if (holds(dag.doc.root, x, sq, tau)) return true;
    }
    return false;
  }

  bool holds(const Formula& f, const std::vector<Rational>& x, const std::vector<Rational>& sq,
             const Rational& tau) const {
    switch (f.kind) {
      case Formula::Kind::Atom: {
        Rational v = eval_even(dag.doc.poly_table[f.atom.poly_ref].poly, x, sq, k);
        Rational t = (f.atom.rel == Rel::Eq && relax[f.atom.poly_ref]) ? tau : Rational(0);
        switch (f.atom.rel) {
          case Rel::Eq: return v <= t && v >= -t;
          case Rel::Lt: return v < 0;
          case Rel::Gt: return v > 0;
          case Rel::Le: return v <= 0;
          case Rel::Ge: return v >= 0;
        }
        return false;
      }
      case Formula::Kind::Not: return !holds(f.children[0], x, sq, tau);
      case Formula::Kind::And:
        for (const auto& c : f.children)
          if (!holds(c, x, sq, tau)) return false;
        return true;
      case Formula::Kind::Or:
        for (const auto& c : f.children)
          if (holds(c, x, sq, tau)) return true;
        return false;
    }
    return false;
  }
};

}  // namespace

ProjectionReport dagger_projection_check(const FormulaDoc& doc, const Rational& R,
                                         const Rational& Rp, DaggerMode mode,
                                         long long resolution, double pass_factor) {
  ProjectionReport report;
  double Rd = to_double(R);

  FormulaDoc balled = doc;
  SparsePoly ball(doc.arity);
  for (int i = 0; i < doc.arity; ++i) {
    ExponentVector e(doc.arity, 0);
    e[i] = 2;
    ball.add_term(e, 1);
  }
  ball.add_term(ExponentVector(doc.arity, 0), -(R * R));
  int ref = balled.add_poly(ball);
  balled.root = Formula::make_and({balled.root, Formula::make_atom(ref, Rel::Le)});

  Box box = Box::cube(-Rd, Rd, doc.arity);
  SampleCloud base = sample_realization(balled, box, SampleMode::Grid, resolution);
  report.grid_step = base.grid_step;
  if (base.empty_flagged) {
    report.messages.push_back("base sample is empty");
    return report;
  }

  DaggerResult dag = dagger(doc, R, Rp, mode);
  FiberOracle oracle(dag);
  Rational tau = rational_from_double(base.tau);

  SampleCloud feasible = base;
  feasible.points.clear();
  long long total = grid_total(box, resolution);
  for (long long idx = 0; idx < total; ++idx) {
    std::vector<double> x = grid_point(box, resolution, idx);
    std::vector<Rational> xr(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) xr[i] = rational_from_double(x[i]);
    if (oracle.feasible(xr, tau)) feasible.points.push_back(std::move(x));
  }
  if (feasible.points.empty()) {
    report.messages.push_back("projected surface sample is empty");
    return report;
  }

  HausdorffResult h = hausdorff_distance(base, feasible);
  report.d_sym = h.symmetric;
  report.pass = h.symmetric <= pass_factor * report.grid_step;
  report.messages.push_back("directed base->projection " + std::to_string(h.a_to_b) +
                            ", projection->base " + std::to_string(h.b_to_a));
  return report;
}

nlohmann::json to_json(const ConvergenceReport& r) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : r.steps)
    steps.push_back({{"t", s.t},
                     {"d_ab", s.d_ab},
                     {"d_ba", s.d_ba},
                     {"d_sym", s.d_sym},
                     {"beta0", s.beta0}});
  return {{"steps", steps},
          {"target_beta0", r.target_beta0},
          {"grid_step", r.grid_step},
          {"linking_radius", r.linking_radius},
          {"slack", r.slack},
          {"final_threshold", r.final_threshold},
          {"monotone", r.monotone},
          {"final_ok", r.final_ok},
          {"pass", r.pass},
          {"messages", r.messages}};
}

nlohmann::json to_json(const CheckReport& r) {
  return {{"pass", r.pass},
          {"infeasible", r.infeasible},
          {"checked", r.checked},
          {"members", r.members},
          {"violations", r.violations},
          {"messages", r.messages}};
}

nlohmann::json to_json(const ProjectionReport& r) {
  return {{"d_sym", r.d_sym},
          {"grid_step", r.grid_step},
          {"pass", r.pass},
          {"messages", r.messages}};
}

}  // namespace salt
