#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <CLI11.hpp>

#include "pswf/errors.hpp"
#include "pswf/evaluator.hpp"
#include "pswf/expansion_builder.hpp"
#include "pswf/expansion_store.hpp"
#include "pswf/legendre_xr.hpp"

using namespace pswf;

namespace {

enum Exit { ok = 0, usage = 2, domain = 3, failure = 4, io = 5 };

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Clock = std::chrono::steady_clock;

// warm-up call excluded, then the median of five timed calls
template <class F>
std::int64_t median_nanos(F&& f, int batch = 1) {
  f();
  std::int64_t t[5];
  for (auto& v : t) {
    const auto t0 = Clock::now();
    for (int i = 0; i < batch; ++i) f();
    v = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count() / batch;
  }
  std::sort(t, t + 5);
  return std::max<std::int64_t>(t[2], 1);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string table_path(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("PSWF_TABLE")) return env;
  throw usage_error("no table given: pass --table or set PSWF_TABLE");
}

PhaseFunction phase_for(const BivariateTableSet& t, double gamma, long n) {
  return build_phase(query_refined(t, gamma, n), n, gamma);
}

// ---------------------------------------------------------------------------
// build

struct BuildArgs {
  int min_exp = 8, max_exp = 14, order = cheb::default_order, threads = 0;
  double eps = 1e-14;
  std::string out;
};

int cmd_build(const BuildArgs& a) {
  if (a.min_exp > a.max_exp) throw usage_error("--gamma-min-exp must not exceed --gamma-max-exp");
  if (a.min_exp < 8 || a.max_exp > 20) throw usage_error("gamma exponents must lie in [8, 20]");
  if (a.order < 2 || a.order > 64) throw usage_error("--order must lie in [2, 64]");
  if (!(a.eps > 0.0)) throw usage_error("--eps must be positive");
  BuildOptions o;
  o.gamma_min_exp = a.min_exp;
  o.gamma_max_exp = a.max_exp;
  o.order = a.order;
  o.eps = a.eps;
  o.threads = a.threads > 0 ? a.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const auto t0 = Clock::now();
  const auto t = build_tables(o);
  save(t, a.out);
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  std::cerr << "wrote " << a.out << ": " << t.num_gamma_intervals() << " gamma x " << t.num_zeta_intervals()
            << " zeta intervals, " << secs << " s on " << o.threads << " threads\n";
  return ok;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string table, points, method = "phase", kind = "ps", format = "csv";
  double gamma = 0.0;
  long n = -1;
  std::vector<double> xs;
};

int cmd_eval(EvalArgs a) {
  if (!a.points.empty()) {
    std::ifstream in(a.points);
    if (!in) throw io_error("cannot read " + a.points);
    for (double x; in >> x;) a.xs.push_back(x);
    if (!in.eof()) throw usage_error("malformed number in " + a.points);
  }
  if (a.xs.empty()) throw usage_error("no evaluation points: pass --x or --points");
  if (a.method == "xr" && a.kind == "qs") throw usage_error("--method xr evaluates ps only");

  std::vector<std::pair<double, std::int64_t>> rows;
  if (a.method == "phase") {
    const auto t = load(table_path(a.table));
    const auto f = phase_for(t, a.gamma, a.n);
    const bool second = a.kind == "qs";
    for (double x : a.xs) {
      const double v = second ? f.qs(x) : f.ps(x);
      rows.emplace_back(v, median_nanos([&] { (void)(second ? f.qs(x) : f.ps(x)); }));
    }
  } else {
    if (a.n < 0 || !(a.gamma >= 0.0)) throw domain_error("--method xr needs n >= 0 and gamma >= 0");
    const auto e = xr::legendre_coeffs_xr(a.n, a.gamma);
    for (double x : a.xs) {
      if (!(std::abs(x) <= 1.0)) throw domain_error("x must lie in [-1, 1]");
      const double v = xr::ps_xr_eval(e, x);
      rows.emplace_back(v, median_nanos([&] { (void)xr::ps_xr_eval(e, x); }));
    }
  }
  std::cout << "x,value,wall_nanos\n";
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::cout << fmt(a.xs[i]) << ',' << fmt(rows[i].first) << ',' << rows[i].second << '\n';
  return ok;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string suite = "chi", table, out;
  double gamma_lo = 256.0, gamma_hi = 512.0;
  int gammas = 3, ns = 100, points = 100, threads = 1;
  std::uint64_t seed = 1;
};

struct Record {
  double gamma;
  std::optional<long> n;
  std::optional<double> x;
  std::string method;
  double value, error_vs_other;
  std::int64_t wall_nanos;
};

struct Sample {
  double gamma;
  long n;
  std::vector<double> xs;
};

std::vector<double> equispaced(double lo, double hi, int count) {
  if (count == 1) return {lo};
  std::vector<double> g(count);
  for (int i = 0; i < count; ++i) g[i] = lo + (hi - lo) * i / (count - 1);
  return g;
}

// all random draws happen here, in a fixed order, before any parallel work
std::vector<Sample> draw_samples(const BenchArgs& a, int points) {
  std::mt19937_64 rng(a.seed);
  std::vector<Sample> s;
  for (double g : equispaced(a.gamma_lo, a.gamma_hi, a.gammas)) {
    std::uniform_int_distribution<long> un(200, static_cast<long>(std::floor(g)));
    std::uniform_real_distribution<double> ux(-1.0 + 1e-12, 1.0 - 1e-12);
    for (int i = 0; i < a.ns; ++i) {
      Sample smp{g, un(rng), {}};
      for (int j = 0; j < points; ++j) smp.xs.push_back(ux(rng));
      s.push_back(std::move(smp));
    }
  }
  return s;
}

template <class F>
void parallel_for(std::size_t count, int threads, F&& f) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex m;
  auto work = [&] {
    for (std::size_t i; (i = next++) < count;) {
      try {
        f(i);
      } catch (...) {
        std::lock_guard lk(m);
        if (!err) err = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int i = 1; i < threads; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

std::vector<Record> bench_chi(const BivariateTableSet& t, const BenchArgs& a) {
  const auto samples = draw_samples(a, 0);
  std::vector<std::vector<Record>> out(samples.size());
  parallel_for(samples.size(), a.threads, [&](std::size_t i) {
    const auto& s = samples[i];
    const double phase = query(t, s.gamma, s.n).chi;
    const double base = xr::chi_xr(s.n, s.gamma);
    const double err = std::abs(phase - base) / std::abs(base);
    out[i] = {{s.gamma, s.n, {}, "phase", phase, err, median_nanos([&] { (void)query(t, s.gamma, s.n); })},
              {s.gamma, s.n, {}, "xr", base, err, median_nanos([&] { (void)xr::chi_xr(s.n, s.gamma); })}};
  });
  std::vector<Record> r;
  for (auto& v : out) r.insert(r.end(), v.begin(), v.end());
  return r;
}

std::vector<Record> bench_ps(const BivariateTableSet& t, const BenchArgs& a) {
  const auto samples = draw_samples(a, a.points);
  std::vector<std::vector<Record>> out(samples.size());
  parallel_for(samples.size(), a.threads, [&](std::size_t i) {
    const auto& s = samples[i];
    const auto f = phase_for(t, s.gamma, s.n);
    const auto e = xr::legendre_coeffs_xr(s.n, s.gamma);
    for (double x : s.xs) {
      const double p = f.ps(x), b = xr::ps_xr_eval(e, x);
      const double err = std::abs(p - b);
      out[i].push_back({s.gamma, s.n, x, "phase", p, err, median_nanos([&] { (void)f.ps(x); })});
      out[i].push_back({s.gamma, s.n, x, "xr", b, err, median_nanos([&] { (void)xr::ps_xr_eval(e, x); })});
    }
  });
  std::vector<Record> r;
  for (auto& v : out) r.insert(r.end(), v.begin(), v.end());
  return r;
}

// One record per (gamma, n, method): value is the median per-point time in
// seconds over the sample's points, error_vs_other the worst |phase - xr|.
// Runs serially so timings do not contend.
std::vector<Record> bench_timing(const BivariateTableSet& t, const BenchArgs& a) {
  const auto samples = draw_samples(a, a.points);
  std::vector<Record> r;
  for (const auto& s : samples) {
    const auto f = phase_for(t, s.gamma, s.n);
    const auto e = xr::legendre_coeffs_xr(s.n, s.gamma);
    double err = 0.0, sink = 0.0;
    for (double x : s.xs) err = std::max(err, std::abs(f.ps(x) - xr::ps_xr_eval(e, x)));
    const auto np = median_nanos([&] {
      for (double x : s.xs) sink += f.ps(x);
    }) / static_cast<std::int64_t>(s.xs.size());
    const auto nx = median_nanos([&] {
      for (double x : s.xs) sink += xr::ps_xr_eval(e, x);
    }) / static_cast<std::int64_t>(s.xs.size());
    if (!std::isfinite(sink)) throw solver_failure("non-finite value during timing");
    r.push_back({s.gamma, s.n, {}, "phase", 1e-9 * std::max<std::int64_t>(np, 1), err, std::max<std::int64_t>(np, 1)});
    r.push_back({s.gamma, s.n, {}, "xr", 1e-9 * std::max<std::int64_t>(nx, 1), err, std::max<std::int64_t>(nx, 1)});
  }
  return r;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

std::vector<Record> summarize(const std::vector<Record>& r, const BenchArgs& a) {
  std::vector<Record> s;
  double worst = 0.0, tp = 0.0, tx = 0.0;
  std::size_t cp = 0, cx = 0;
  for (const auto& x : r) {
    worst = std::max(worst, x.error_vs_other);
    (x.method == "phase" ? tp : tx) += static_cast<double>(x.wall_nanos);
    ++(x.method == "phase" ? cp : cx);
  }
  const std::string err_name = a.suite == "chi" ? "summary:max_rel_chi_diff" : "summary:max_abs_ps_diff";
  s.push_back({a.gamma_lo, {}, {}, err_name, worst, worst, 1});
  // mean per-call times live in the wall_nanos column; value holds the call count
  auto mean = [](double total, std::size_t c) { return std::max<std::int64_t>(std::llround(total / c), 1); };
  s.push_back({a.gamma_lo, {}, {}, "summary:mean_nanos_phase", static_cast<double>(cp), 0.0, mean(tp, cp)});
  s.push_back({a.gamma_lo, {}, {}, "summary:mean_nanos_xr", static_cast<double>(cx), 0.0, mean(tx, cx)});
  if (a.suite == "timing" && a.gammas > 1) {
    for (const char* m : {"phase", "xr"}) {
      std::vector<double> lo, hi;
      for (const auto& x : r)
        if (x.method == m) {
          if (x.gamma == a.gamma_lo) lo.push_back(x.value);
          if (x.gamma == a.gamma_hi) hi.push_back(x.value);
        }
      const double ratio = median_of(hi) / median_of(lo);
      s.push_back({a.gamma_hi, {}, {}, std::string("summary:time_ratio_") + m, ratio, 0.0, 1});
    }
  }
  return s;
}

void write_csv(std::ostream& os, const std::vector<Record>& r, std::uint64_t seed) {
  os << "gamma,n,x,method,value,error_vs_other,wall_nanos,seed\n";
  for (const auto& x : r)
    os << fmt(x.gamma) << ',' << (x.n ? std::to_string(*x.n) : "") << ',' << (x.x ? fmt(*x.x) : "") << ','
       << x.method << ',' << fmt(x.value) << ',' << fmt(x.error_vs_other) << ',' << x.wall_nanos << ',' << seed
       << '\n';
}

int cmd_bench(const BenchArgs& a) {
  if (!(a.gamma_lo <= a.gamma_hi)) throw usage_error("--gamma-lo must not exceed --gamma-hi");
  if (a.gammas < 1 || a.ns < 1 || a.points < 1 || a.threads < 1)
    throw usage_error("--gammas, --ns, --points and --threads must be positive");
  const auto t = load(table_path(a.table));
  if (a.gamma_lo < t.gamma_min() || a.gamma_hi > t.gamma_max()) {
    std::ostringstream msg;
    msg << "table covers gamma in [" << t.gamma_min() << ", " << t.gamma_max() << "], requested [" << a.gamma_lo
        << ", " << a.gamma_hi << "]";
    throw domain_error(msg.str());
  }
  auto r = a.suite == "chi" ? bench_chi(t, a) : a.suite == "ps" ? bench_ps(t, a) : bench_timing(t, a);
  std::stable_sort(r.begin(), r.end(), [](const Record& p, const Record& q) {
    return std::tie(p.gamma, p.n, p.x) < std::tie(q.gamma, q.n, q.x);
  });
  const auto s = summarize(r, a);
  r.insert(r.end(), s.begin(), s.end());
  if (a.out.empty()) {
    write_csv(std::cout, r, a.seed);
  } else {
    std::ofstream os(a.out);
    if (!os) throw io_error("cannot write " + a.out);
    write_csv(os, r, a.seed);
    if (!os) throw io_error("write failed for " + a.out);
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prolate spheroidal wave functions by nonoscillatory phase functions"};
  app.require_subcommand(1);

  BuildArgs ba;
  auto* build = app.add_subcommand("build", "Precompute the bivariate expansion tables");
  build->add_option("--gamma-min-exp", ba.min_exp, "Smallest gamma is 2^this")->capture_default_str();
  build->add_option("--gamma-max-exp", ba.max_exp, "Largest gamma is 2^this")->capture_default_str();
  build->add_option("--order", ba.order, "Chebyshev order per interval")->capture_default_str();
  build->add_option("--eps", ba.eps, "Adaptive tolerance")->capture_default_str();
  build->add_option("--threads", ba.threads, "Workers (0 = all cores)")->capture_default_str();
  build->add_option("--out", ba.out, "Output table file")->required();

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Evaluate ps or qs at points");
  eval->add_option("--table", ea.table, "Table file (default $PSWF_TABLE)");
  eval->add_option("--gamma", ea.gamma, "Bandlimit")->required();
  eval->add_option("--n", ea.n, "Index")->required();
  eval->add_option("--x", ea.xs, "Points, comma separated")->delimiter(',')->allow_extra_args(false);
  eval->add_option("--points", ea.points, "File of points, whitespace separated");
  eval->add_option("--method", ea.method, "phase or xr")
      ->check(CLI::IsMember({"phase", "xr"}))
      ->capture_default_str();
  eval->add_option("--kind", ea.kind, "ps or qs")->check(CLI::IsMember({"ps", "qs"}))->capture_default_str();
  eval->add_option("--format", ea.format, "Output format")->check(CLI::IsMember({"csv"}))->capture_default_str();

  BenchArgs be;
  auto* bench = app.add_subcommand("bench", "Run a benchmark suite and write CSV");
  bench->add_option("--suite", be.suite, "chi, ps or timing")
      ->check(CLI::IsMember({"chi", "ps", "timing"}))
      ->capture_default_str();
  bench->add_option("--table", be.table, "Table file (default $PSWF_TABLE)");
  bench->add_option("--gamma-lo", be.gamma_lo, "Smallest gamma")->capture_default_str();
  bench->add_option("--gamma-hi", be.gamma_hi, "Largest gamma")->capture_default_str();
  bench->add_option("--gammas", be.gammas, "Number of equispaced gammas")->capture_default_str();
  bench->add_option("--ns", be.ns, "Random n per gamma")->capture_default_str();
  bench->add_option("--points", be.points, "Random x per (gamma, n)")->capture_default_str();
  bench->add_option("--seed", be.seed, "Random seed")->capture_default_str();
  bench->add_option("--threads", be.threads, "Workers")->capture_default_str();
  bench->add_option("--out", be.out, "Output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : usage;
  }

  try {
    if (*build) return cmd_build(ba);
    if (*eval) return cmd_eval(ea);
    return cmd_bench(be);
  } catch (const usage_error& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return usage;
  } catch (const domain_error& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return domain;
  } catch (const format_error& e) {
    std::cerr << "table error: " << e.what() << '\n';
    return io;
  } catch (const io_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return io;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return failure;
  }
}
