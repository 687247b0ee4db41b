#include "vgbn/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <vector>

#include <CLI11.hpp>

#include "vgbn/io.hpp"
#include "vgbn/oracle.hpp"
#include "vgbn/propagation.hpp"
#include "vgbn/transform.hpp"

namespace vgbn {

namespace {

constexpr double kDefaultOracleTol = 1e-8;

int digits_for(const std::string& precision) {
  if (precision == "full") return io::kFullDigits;
  return std::stoi(precision);
}

double oracle_tolerance() {
  if (const char* env = std::getenv("VGBN_TOL")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end != env && v > 0.0) return v;
  }
  return kDefaultOracleTol;
}

int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err) {
  NetworkSpec net;
  try {
    net = io::parse_network(io::read_file(path));
  } catch (const Error& e) {
    err << path << ": " << e.what() << "\n";
    return kExitParse;
  }
  const ValidationReport report = validate(net);
  out << "file: " << path << "\n" << report.to_text();
  return report.ok() ? kExitOk : kExitInvalid;
}

struct InferOptions {
  std::string path;
  std::string backend = "propagation";
  bool oracle = false;
  bool trace = false;
  std::vector<std::string> queries;
  std::string precision = "12";
};

int cmd_infer(const InferOptions& opt, std::ostream& out, std::ostream& err) {
  NetworkSpec net;
  try {
    net = io::parse_network(io::read_file(opt.path));
  } catch (const Error& e) {
    err << opt.path << ": " << e.what() << "\n";
    return kExitParse;
  }
  const ValidationReport report = validate(net);
  if (!report.ok()) {
    err << opt.path << ": invalid network\n" << report.to_text();
    return kExitInvalid;
  }
  const int digits = digits_for(opt.precision);

  std::vector<std::string> queries = opt.queries;
  if (queries.empty()) queries = topological_order(net);
  for (const auto& q : queries) {
    if (!net.find(q)) {
      err << "unknown query node '" << q << "'\n";
      return kExitUsage;
    }
  }

  std::map<std::string, Gaussian> results;
  std::string current;
  try {
    if (opt.backend == "propagation") {
      const auto beliefs = propagation::propagate(net);
      for (const auto& q : queries) results.emplace(q, beliefs.at(q));
    } else {
      for (const auto& q : queries) {
        current = q;
        auto red = transform::reduce_traced(net, q);
        if (opt.trace) err << "trace for " << q << ":\n" << io::trace_to_json(red.trace);
        results.emplace(q, std::move(red.marginal));
      }
    }
  } catch (const Error& e) {
    err << opt.backend << " backend failed" << (current.empty() ? "" : " on query '" + current + "'") << ": "
        << e.what() << "\n";
    return kExitInference;
  }

  std::map<std::string, Gaussian> exact;
  const double tol = oracle_tolerance();
  double worst = 0.0;
  if (opt.oracle) {
    try {
      exact = oracle::exact_posteriors(net);
    } catch (const Error& e) {
      err << "oracle failed: " << e.what() << "\n";
      return kExitInference;
    }
  }

  for (const auto& q : queries) {
    const Gaussian& g = results.at(q);
    out << q << ":\n";
    if (net.has_evidence(q)) out << "  observed: true\n";
    out << "  mean: " << io::format_vector(g.mean(), digits) << "\n";
    out << "  cov: " << io::format_matrix(g.cov(), digits) << "\n";
    if (opt.oracle) {
      const Gaussian& e = exact.at(q);
      const double dev = std::max(relative_deviation(g.mean(), e.mean()), relative_deviation(g.cov(), e.cov()));
      worst = std::max(worst, dev);
      out << "  oracle_max_rel_dev: " << io::format_number(dev, 3) << "\n";
    }
  }
  if (opt.oracle) {
    const bool ok = worst <= tol;
    out << "oracle: max_rel_dev=" << io::format_number(worst, 3) << " tol=" << io::format_number(tol, 3)
        << " status=" << (ok ? "ok" : "exceeded") << "\n";
    if (!ok) return kExitOracleMismatch;
  }
  return kExitOk;
}

struct KfOptions {
  std::string path;
  std::string mode = "decentralized";
  std::string out_path;
  std::uint64_t seed = 0;
  std::string precision = "12";
};

int cmd_kf(const KfOptions& opt, std::ostream& out, std::ostream& err) {
  io::FilterDocument doc;
  try {
    doc = io::parse_filter(io::read_file(opt.path));
  } catch (const Error& e) {
    err << opt.path << ": " << e.what() << "\n";
    return kExitParse;
  }

  std::string csv;
  try {
    std::optional<std::vector<Vector>> truth = doc.truth;
    if (doc.simulate_steps) {
      auto sim = kalman::simulate(doc.models, doc.inputs, doc.init, *doc.simulate_steps, opt.seed);
      doc.measurements = std::move(sim.measurements);
      truth = std::move(sim.truth);
    }
    const auto mode = opt.mode == "centralized" ? kalman::UpdateMode::Centralized : kalman::UpdateMode::Decentralized;
    const auto trajectory = kalman::run_filter(doc.models, doc.inputs, doc.measurements, doc.init, mode);
    csv = io::trajectory_csv(trajectory, truth, digits_for(opt.precision));
  } catch (const Error& e) {
    err << opt.path << ": " << e.what() << "\n";
    return kExitInference;
  }

  if (opt.out_path.empty() || opt.out_path == "-") {
    out << csv;
  } else {
    std::ofstream f(opt.out_path, std::ios::binary);
    if (!f) {
      err << "cannot write '" << opt.out_path << "'\n";
      return kExitUsage;
    }
    f << csv;
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact inference in singly-connected vector Gaussian belief networks"};
  app.require_subcommand(1);

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check a network document");
  validate_cmd->add_option("path", validate_path, "Network JSON")->required();

  InferOptions infer;
  auto* infer_cmd = app.add_subcommand("infer", "Posterior of query nodes given the document's evidence");
  infer_cmd->add_option("path", infer.path, "Network JSON")->required();
  infer_cmd->add_option("--backend", infer.backend, "propagation | transform")
      ->check(CLI::IsMember({"propagation", "transform"}));
  infer_cmd->add_flag("--oracle", infer.oracle, "Compare against exact joint conditioning (tolerance: VGBN_TOL)");
  infer_cmd->add_option("--query", infer.queries, "Node ids to report (default: all)");
  infer_cmd->add_option("--precision", infer.precision, "Significant digits, or 'full'")
      ->check(CLI::IsMember({"full", "1", "2", "3", "4", "5", "6", "7", "8", "9", "10", "11", "12", "13", "14",
                             "15", "16", "17"}));
  infer_cmd->add_flag("--trace", infer.trace, "Print transform reduction steps to stderr");

  KfOptions kf;
  auto* kf_cmd = app.add_subcommand("kf", "Run the Kalman filter over a filter document");
  kf_cmd->add_option("path", kf.path, "Filter JSON")->required();
  kf_cmd->add_option("--mode", kf.mode, "centralized | decentralized")
      ->check(CLI::IsMember({"centralized", "decentralized"}));
  kf_cmd->add_option("--out", kf.out_path, "CSV output path (default: stdout)");
  kf_cmd->add_option("--seed", kf.seed, "Seed for simulated-truth documents");
  kf_cmd->add_option("--precision", kf.precision, "Significant digits, or 'full'")
      ->check(CLI::IsMember({"full", "1", "2", "3", "4", "5", "6", "7", "8", "9", "10", "11", "12", "13", "14",
                             "15", "16", "17"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*validate_cmd) return cmd_validate(validate_path, out, err);
  if (*infer_cmd) return cmd_infer(infer, out, err);
  return cmd_kf(kf, out, err);
}

}  // namespace vgbn
