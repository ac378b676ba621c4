#pragma once

// The otclimb command line: winf, wp, project and bench.  run() parses the
// arguments, dispatches, and maps failures to exit codes (0 ok, 2 bad input,
// 3 infeasible model).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "otclimb/otclimb.hpp"

namespace otclimb::cli {

using nlohmann::json;

enum ExitCode { exit_ok = 0, exit_input = 2, exit_infeasible = 3 };

struct SolveFlags {
  int divisor = 0;  // 0: the image width
  std::string strategy = "linear";
  double delta = 0;
  std::string cost_table;
};

inline ClimbConfig climb_config(const SolveFlags& f) {
  ClimbConfig cfg;
  cfg.strategy = f.strategy == "bisection" ? SearchStrategy::bisection : SearchStrategy::linear;
  cfg.delta = f.delta;
  return cfg;
}

// Decimal digits only; leading zeros are dropped so nothing reads as octal.
inline std::optional<BigInt> parse_digits(const std::string& text) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
  std::size_t first = std::min(text.find_first_not_of('0'), text.size() - 1);
  return BigInt(text.substr(first));
}

// "0.975" -> 975/1000 and "3/4" -> 3/4, exactly.
inline Rational parse_decimal(const std::string& text) {
  auto bad = [&] { return InputError("not a decimal number: '" + text + "'"); };
  if (auto slash = text.find('/'); slash != std::string::npos) {
    auto num = parse_digits(text.substr(0, slash));
    auto den = parse_digits(text.substr(slash + 1));
    if (!num || !den || *den == 0) throw bad();
    return Rational(*num, *den);
  }
  auto point = text.find('.');
  std::string whole = text.substr(0, point);
  std::string frac = point == std::string::npos ? "" : text.substr(point + 1);
  if (whole.empty() && frac.empty()) throw bad();
  auto digits = parse_digits(whole + frac);
  if (!digits) throw bad();
  BigInt scale = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
  return Rational(*digits, scale);
}

inline std::string rational_string(const Rational& r) { return r.str(); }

// Grid image as read, with the resolution tag set from --divisor.
inline GridImage load_image(const std::string& path, const SolveFlags& f) {
  GridImage img = io::read_grid(path);
  if (f.divisor < 0) throw InputError("--divisor must be positive");
  if (f.divisor > 0) img.resolution_tag = f.divisor;
  return img;
}

inline CostOracle make_oracle(const PointSetPtr& ground, const GridImage& img, const SolveFlags& f) {
  if (!f.cost_table.empty()) {
    return CostOracle::custom(ground, io::parse_cost_table(io::slurp(f.cost_table), ground->size()));
  }
  return CostOracle::scaled_pixel(ground, img.resolution_tag);
}

struct LoadedPair {
  GridImage image;
  DiscreteMeasure mu;
  DiscreteMeasure nu;
};

inline LoadedPair load_pair(const std::string& a, const std::string& b, const SolveFlags& f) {
  GridImage ia = load_image(a, f);
  GridImage ib = load_image(b, f);
  if (ia.width != ib.width || ia.height != ib.height) {
    throw InputError("dimension mismatch: " + std::to_string(ia.width) + "x" + std::to_string(ia.height) + " vs " +
                     std::to_string(ib.width) + "x" + std::to_string(ib.height));
  }
  DiscreteMeasure mu = from_grid(ia, true);
  DiscreteMeasure nb = from_grid(ib, true);
  DiscreteMeasure nu(mu.ground_ptr(), {nb.atoms().begin(), nb.atoms().end()}, nb.unit_scale());
  return {std::move(ia), std::move(mu), std::move(nu)};
}

inline json plan_summary(const std::vector<FlowEdge>& edges, const Rational& unit_scale, const CostOracle& oracle) {
  json w;
  w["edges"] = edges.size();
  double worst = bottleneck_key(edges, oracle);
  w["bottleneck"] = worst < 0 ? 0.0 : oracle.value(worst);
  w["unit_scale"] = rational_string(unit_scale);
  return w;
}

inline json p_json(double p) {
  if (std::isinf(p)) return "inf";
  if (p == std::floor(p)) return static_cast<std::int64_t>(p);
  return p;
}

inline json distance_json(const DistanceResult& r, const CostOracle& oracle) {
  json j;
  j["value"] = r.value;
  j["p"] = p_json(r.p);
  j["method"] = to_string(r.method);
  j["exactness"] = to_string(r.exactness);
  j["runtime_ms"] = r.runtime_ms;
  json w = plan_summary(r.plan.edges, r.plan.unit_scale, oracle);
  if (r.method == Method::climbing) {
    j["rungs"] = r.rungs;
    w["threshold_key"] = *r.threshold_key;
  } else {
    j["objective"] = rational_string(r.objective);
    w["scale_exponent"] = r.exponent;
    if (r.threshold_key) j["truncation"] = oracle.value(*r.threshold_key);
  }
  j["witness_summary"] = w;
  return j;
}

inline json cmd_winf(const std::string& a, const std::string& b, const SolveFlags& f) {
  auto pair = load_pair(a, b, f);
  auto oracle = make_oracle(pair.mu.ground_ptr(), pair.image, f);
  return distance_json(w_infinity(pair.mu, pair.nu, oracle, climb_config(f)), oracle);
}

inline json cmd_wp(const std::string& a, const std::string& b, const std::string& p_text,
                   std::optional<double> trunc, const SolveFlags& f) {
  if (p_text == "inf") {
    if (trunc) throw InputError("--trunc needs a finite p");
    return cmd_winf(a, b, f);
  }
  double p = 0;
  try {
    std::size_t used = 0;
    p = std::stod(p_text, &used);
    if (used != p_text.size()) throw InputError("");
  } catch (const std::exception&) {
    throw InputError("--p must be a number >= 1 or 'inf'");
  }
  auto pair = load_pair(a, b, f);
  auto oracle = make_oracle(pair.mu.ground_ptr(), pair.image, f);
  bool integral = p >= 1 && p == std::floor(p) && p <= 4096;
  if (trunc) {
    if (!integral) throw InputError("--trunc needs an integer p");
    return distance_json(w_p_truncated(pair.mu, pair.nu, oracle, int(p), oracle.key_for_value(*trunc)), oracle);
  }
  if (integral) return distance_json(w_p(pair.mu, pair.nu, oracle, int(p)), oracle);
  return distance_json(w_p_approx(pair.mu, pair.nu, oracle, p), oracle);
}

struct ProjectRequest {
  std::string image;
  std::string theta = "0.975";
  std::string p = "inf";
  std::optional<int> margin;  // default: half the image width
  std::string out;
};

struct ProjectOutcome {
  ProjectionResult result;
  GridImage zeta_image;
  json summary;
};

inline ProjectOutcome run_projection(const GridImage& original, const Rational& theta, const std::string& p,
                                     std::optional<int> margin, const SolveFlags& f) {
  if (p != "1" && p != "inf") throw InputError("--p must be 1 or inf for projections");
  int pad_by = margin.value_or(original.width / 2);
  GridImage padded = pad(original, pad_by);
  DiscreteMeasure mu = from_grid(padded, true);
  DiscreteMeasure cap = cap_from_theta(mu, theta);
  auto oracle = make_oracle(mu.ground_ptr(), padded, f);
  auto r = p == "1" ? project_w1(mu, cap, oracle, climb_config(f)) : project_winf(mu, cap, oracle, climb_config(f));
  r.theta = theta;
  json j;
  j["value"] = r.w_distance;
  j["p"] = p == "1" ? json(1) : json("inf");
  j["method"] = "climbing";
  j["runtime_ms"] = r.runtime_ms;
  j["tau"] = r.tau;
  j["rungs"] = r.rungs;
  j["theta"] = rational_string(theta);
  j["grid"] = {{"width", padded.width}, {"height", padded.height}, {"margin", pad_by},
               {"divisor", padded.resolution_tag}};
  if (p == "1") j["value_exact"] = rational_string(r.w_distance_exact);
  json w = plan_summary(r.witness.edges, r.witness.unit_scale, oracle);
  w["zeta_unit_scale"] = rational_string(r.zeta.unit_scale());
  j["witness_summary"] = w;
  GridImage zeta_image = io::to_image(r.zeta, padded.resolution_tag);
  return {std::move(r), std::move(zeta_image), std::move(j)};
}

inline json cmd_project(const ProjectRequest& req, const SolveFlags& f) {
  GridImage img = load_image(req.image, f);
  auto outcome = run_projection(img, parse_decimal(req.theta), req.p, req.margin, f);
  if (!req.out.empty()) {
    bool pgm = std::filesystem::path(req.out).extension() == ".pgm";
    io::write_file(req.out, pgm ? io::to_pgm(outcome.zeta_image) : io::to_csv(outcome.zeta_image));
    outcome.summary["out"] = req.out;
  }
  return outcome.summary;
}

// ---- bench -----------------------------------------------------------------

inline const std::vector<std::string>& default_thetas() {
  static const std::vector<std::string> t{"0.975", "0.95", "0.925", "0.9", "0.85", "0.8"};
  return t;
}

struct BenchRecord {
  std::string category;
  std::string resolution;
  std::string item;
  std::string other;
  std::string theta;
  std::string status = "ok";
  double value = 0;
  double runtime_ms = 0;
  std::size_t rungs = 0;
};

struct BenchAggregate {
  std::string stat;  // mean | max
  std::string category;
  std::string resolution;
  std::string theta;
  std::size_t count = 0;
  double value = 0;
  double runtime_ms = 0;
  double rungs = 0;
};

struct BenchReport {
  std::vector<BenchRecord> records;
  std::vector<BenchAggregate> aggregates;
  std::vector<std::string> warnings;
};

inline constexpr const char* bench_header = "record,category,resolution,item,other,theta,status,value,runtime_ms,rungs";
inline constexpr const char* bench_schema = "# otclimb-bench v1";

inline std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

// mean and max of value, runtime and rungs over the ok records of each group,
// groups in order of first appearance.
inline std::vector<BenchAggregate> aggregate(const std::vector<BenchRecord>& records) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const BenchRecord*>> groups;
  for (const auto& r : records) {
    if (r.status != "ok") continue;
    std::string key = r.category + '\n' + r.resolution + '\n' + r.theta;
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&r);
  }
  std::vector<BenchAggregate> out;
  for (const auto& key : order) {
    const auto& g = groups[key];
    BenchAggregate mean{"mean", g[0]->category, g[0]->resolution, g[0]->theta, g.size()};
    BenchAggregate max{"max", g[0]->category, g[0]->resolution, g[0]->theta, g.size()};
    for (const auto* r : g) {
      mean.value += r->value;
      mean.runtime_ms += r->runtime_ms;
      mean.rungs += double(r->rungs);
      max.value = std::max(max.value, r->value);
      max.runtime_ms = std::max(max.runtime_ms, r->runtime_ms);
      max.rungs = std::max(max.rungs, double(r->rungs));
    }
    double n = double(g.size());
    mean.value /= n;
    mean.runtime_ms /= n;
    mean.rungs /= n;
    out.push_back(mean);
    out.push_back(max);
  }
  return out;
}

inline std::string bench_csv(const BenchReport& rep) {
  std::ostringstream out;
  out << bench_schema << '\n' << bench_header << '\n';
  for (const auto& r : rep.records) {
    out << (r.other.empty() ? "image," : "pair,") << r.category << ',' << r.resolution << ',' << r.item << ',' << r.other << ',' << r.theta << ','
        << r.status << ',' << format_double(r.value) << ',' << format_double(r.runtime_ms) << ',' << r.rungs << '\n';
  }
  for (const auto& a : rep.aggregates) {
    out << a.stat << ',' << a.category << ',' << a.resolution << ",,," << a.theta << ",n=" << a.count << ','
        << format_double(a.value) << ',' << format_double(a.runtime_ms) << ',' << format_double(a.rungs) << '\n';
  }
  return out.str();
}

struct BenchGroup {
  std::string category;
  std::vector<std::filesystem::path> files;
};

inline bool is_grid_file(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return char(std::tolower(c)); });
  return std::filesystem::is_regular_file(p) && (ext == ".csv" || ext == ".pgm");
}

// Files directly in dir form one category named after dir; each subdirectory
// holding grid files is a category of its own.  Everything sorted by name.
inline std::vector<BenchGroup> discover(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw InputError("not a directory: '" + dir + "'");
  std::vector<fs::path> top;
  std::vector<fs::path> subdirs;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (is_grid_file(e.path())) top.push_back(e.path());
    else if (e.is_directory()) subdirs.push_back(e.path());
  }
  std::sort(top.begin(), top.end());
  std::sort(subdirs.begin(), subdirs.end());
  std::vector<BenchGroup> groups;
  if (!top.empty()) groups.push_back({fs::weakly_canonical(dir).filename().string(), top});
  for (const auto& sd : subdirs) {
    BenchGroup g{sd.filename().string(), {}};
    for (const auto& e : fs::directory_iterator(sd)) {
      if (is_grid_file(e.path())) g.files.push_back(e.path());
    }
    std::sort(g.files.begin(), g.files.end());
    if (!g.files.empty()) groups.push_back(std::move(g));
  }
  if (groups.empty()) throw InputError("no grid files (.csv or .pgm) in '" + dir + "'");
  return groups;
}

inline std::string resolution_label(const GridImage& img) {
  if (img.width == img.height) return std::to_string(img.width);
  return std::to_string(img.width) + "x" + std::to_string(img.height);
}

// Runs tasks[0..n) on `workers` threads; the first non-infeasibility error is
// rethrown after all threads finish.
template <class Task>
void run_pool(std::size_t n, unsigned workers, Task task) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  auto loop = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard<std::mutex> hold(failure_lock);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, unsigned(std::max<std::size_t>(n, 1))));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(loop);
  loop();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

inline BenchReport cmd_bench(const std::string& dir, const std::string& mode, const std::vector<std::string>& thetas,
                             unsigned workers, const SolveFlags& f) {
  if (mode != "pairwise-winf" && mode != "project-sweep") {
    throw InputError("--mode must be pairwise-winf or project-sweep");
  }
  BenchReport rep;
  struct Job {
    std::string category;
    std::filesystem::path a;
    std::filesystem::path b;
    std::string theta;
  };
  std::vector<Job> jobs;
  std::vector<Rational> parsed;
  for (const auto& t : thetas) parsed.push_back(parse_decimal(t));
  for (const auto& g : discover(dir)) {
    if (mode == "pairwise-winf") {
      if (g.files.size() < 2) {
        rep.warnings.push_back("category '" + g.category + "' has fewer than two images; no pairs");
      }
      for (std::size_t i = 0; i < g.files.size(); ++i)
        for (std::size_t j = i + 1; j < g.files.size(); ++j) jobs.push_back({g.category, g.files[i], g.files[j], ""});
    } else {
      for (const auto& file : g.files)
        for (const auto& t : thetas) jobs.push_back({g.category, file, {}, t});
    }
  }
  rep.records.resize(jobs.size());
  run_pool(jobs.size(), workers, [&](std::size_t k) {
    const Job& job = jobs[k];
    BenchRecord& rec = rep.records[k];
    rec.category = job.category;
    rec.item = job.a.filename().string();
    rec.theta = job.theta;
    if (mode == "pairwise-winf") {
      rec.other = job.b.filename().string();
      auto pair = load_pair(job.a.string(), job.b.string(), f);
      rec.resolution = resolution_label(pair.image);
      auto oracle = make_oracle(pair.mu.ground_ptr(), pair.image, f);
      auto r = w_infinity(pair.mu, pair.nu, oracle, climb_config(f));
      rec.value = r.value;
      rec.runtime_ms = r.runtime_ms;
      rec.rungs = r.rungs;
    } else {
      GridImage img = load_image(job.a.string(), f);
      rec.resolution = resolution_label(img);
      try {
        auto theta = parse_decimal(job.theta);
        auto outcome = run_projection(img, theta, "inf", std::nullopt, f);
        rec.value = outcome.result.tau;
        rec.runtime_ms = outcome.result.runtime_ms;
        rec.rungs = outcome.result.rungs;
      } catch (const InfeasibleError&) {
        rec.status = "infeasible";
      }
    }
  });
  rep.aggregates = aggregate(rep.records);
  return rep;
}

// ---- entry point -------------------------------------------------------------

inline void add_solve_flags(CLI::App* sub, SolveFlags& f) {
  sub->add_option("--divisor", f.divisor, "Cost divisor N in the pixel cost (default: image width)");
  sub->add_option("--strategy", f.strategy, "Ladder search: linear or bisection")
      ->check(CLI::IsMember({"linear", "bisection"}));
  sub->add_option("--delta", f.delta, "Mass tolerance (integer units make it 0)");
  sub->add_option("--cost-table", f.cost_table, "CSV of i,j,cost rows replacing the pixel cost")
      ->check(CLI::ExistingFile);
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact discrete Wasserstein distances and projections by threshold climbing", "otclimb"};
  app.require_subcommand(1);
  SolveFlags flags;

  auto* winf = app.add_subcommand("winf", "W_inf between two grid images");
  std::string a, b;
  winf->add_option("a", a, "First grid (CSV or PGM)")->required()->check(CLI::ExistingFile);
  winf->add_option("b", b, "Second grid")->required()->check(CLI::ExistingFile);
  add_solve_flags(winf, flags);

  auto* wp = app.add_subcommand("wp", "W_p or truncated W_p between two grid images");
  std::string p_text = "1";
  std::optional<double> trunc;
  wp->add_option("a", a, "First grid (CSV or PGM)")->required()->check(CLI::ExistingFile);
  wp->add_option("b", b, "Second grid")->required()->check(CLI::ExistingFile);
  wp->add_option("--p", p_text, "Exponent: positive integer, real >= 1, or inf");
  wp->add_option("--trunc", trunc, "Truncate costs at this value");
  add_solve_flags(wp, flags);

  auto* project = app.add_subcommand("project", "Project an image onto the cap set theta * max");
  ProjectRequest req;
  project->add_option("image", req.image, "Grid (CSV or PGM)")->required()->check(CLI::ExistingFile);
  project->add_option("--theta", req.theta, "Cap level in (0, 1), decimal or a/b");
  project->add_option("--p", req.p, "1 or inf")->check(CLI::IsMember({"1", "inf"}));
  project->add_option("--pad-margin", req.margin, "Zero strip around the image (default: width / 2)");
  project->add_option("--out", req.out, "Write the projection as CSV units, or PGM when the name ends in .pgm");
  add_solve_flags(project, flags);

  auto* bench = app.add_subcommand("bench", "Benchmark a directory of same-size grids");
  std::string dir, mode = "pairwise-winf", bench_out;
  std::vector<std::string> thetas = default_thetas();
  unsigned workers = 1;
  bench->add_option("dir", dir, "Directory of grids; subdirectories are categories")->required();
  bench->add_option("--mode", mode, "pairwise-winf or project-sweep")
      ->check(CLI::IsMember({"pairwise-winf", "project-sweep"}));
  bench->add_option("--theta", thetas, "Cap levels for project-sweep")->delimiter(',');
  bench->add_option("--workers", workers, "Parallel solves")->check(CLI::PositiveNumber);
  bench->add_option("--out", bench_out, "CSV destination (default: stdout)");
  add_solve_flags(bench, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_input;
  }

  try {
    if (*winf) {
      out << cmd_winf(a, b, flags).dump(2) << '\n';
    } else if (*wp) {
      out << cmd_wp(a, b, p_text, trunc, flags).dump(2) << '\n';
    } else if (*project) {
      try {
        out << cmd_project(req, flags).dump(2) << '\n';
      } catch (const InfeasibleError& e) {
        // An empty cap set is a bad request, not a solver failure.
        err << "otclimb: " << e.what() << '\n';
        return exit_input;
      }
    } else if (*bench) {
      auto rep = cmd_bench(dir, mode, thetas, workers, flags);
      for (const auto& w : rep.warnings) err << "otclimb: warning: " << w << '\n';
      std::string csv = bench_csv(rep);
      if (bench_out.empty()) out << csv;
      else io::write_file(bench_out, csv);
    }
  } catch (const InputError& e) {
    err << "otclimb: " << e.what() << '\n';
    return exit_input;
  } catch (const InfeasibleError& e) {
    err << "otclimb: " << e.what() << '\n';
    return exit_infeasible;
  }
  return exit_ok;
}

}  // namespace otclimb::cli
