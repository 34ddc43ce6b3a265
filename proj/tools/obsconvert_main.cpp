// Command-line surface for the observable-conversion decision library.
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "obsconvert/dispatch.hpp"

namespace {

using namespace obsconvert;

constexpr int kExitFeasible = 0;
constexpr int kExitInfeasible = 1;
constexpr int kExitUndecided = 2;
constexpr int kExitParse = 64;
constexpr int kExitDimension = 65;

std::uint64_t env_seed() {
  if (const char* s = std::getenv("OBSCONVERT_SEED"))
    return std::strtoull(s, nullptr, 10);
  return 0;
}

struct CommonFlags {
  std::string cls;
  double tol = -1.0;
  std::int64_t seed = -1;
  bool json = false;
};

void apply_flags(ProblemFile& p, const CommonFlags& f) {
  if (!f.cls.empty()) p.cls = io_detail::parse_class(f.cls);
  if (f.tol >= 0) p.tol = f.tol;
  if (f.seed >= 0)
    p.seed = static_cast<std::uint64_t>(f.seed);
  else if (p.seed == 0)
    p.seed = env_seed();
}

std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

void print_decision(const Decision& d, bool json) {
  if (json) {
    std::string out = "{\"status\":\"";
    out += status_name(d.status);
    out += "\",\"criterion\":\"" + json_escape(d.criterion) + "\"";
    out += ",\"detail\":\"" + json_escape(d.detail) + "\"";
    if (d.certificate) {
      out += ",\"kraus_count\":" +
             std::to_string(d.certificate->map.ops.size());
      out += ",\"conversion_residual\":" +
             io_detail::fmt_double(d.certificate->conversion_residual);
      out += ",\"side_residual\":" +
             io_detail::fmt_double(d.certificate->side_residual);
    }
    out += "}";
    std::cout << out << "\n";
    return;
  }
  std::cout << "verdict:   " << status_name(d.status) << "\n";
  std::cout << "criterion: " << d.criterion << "\n";
  if (!d.detail.empty()) std::cout << "detail:    " << d.detail << "\n";
  if (d.certificate) {
    std::cout << "certificate: " << d.certificate->map.ops.size()
              << " Kraus operators, conversion residual "
              << d.certificate->conversion_residual << ", side residual "
              << d.certificate->side_residual << "\n";
  }
}

int status_exit(Status s) {
  switch (s) {
    case Status::Feasible: return kExitFeasible;
    case Status::Infeasible: return kExitInfeasible;
    default: return kExitUndecided;
  }
}

int cmd_decide(const std::string& path, const CommonFlags& flags,
               const std::string& criterion, bool oracle,
               const std::string& cert_out) {
  ProblemFile p = load_problem(path);
  apply_flags(p, flags);
  Decision d = dispatch(p, oracle ? "choi-ap" : criterion);
  if (!cert_out.empty() && d.status == Status::Feasible) {
    if (attach_certificate(d, p)) {
      CertificateFile cf;
      cf.cls = p.cls;
      cf.map = d.certificate->map;
      std::ofstream out(cert_out);
      out << serialize_certificate(cf);
    }
  }
  print_decision(d, flags.json);
  return status_exit(d.status);
}

int cmd_certify(const std::string& path, const std::string& cert_path,
                const CommonFlags& flags) {
  ProblemFile p = load_problem(path);
  apply_flags(p, flags);
  const CertificateFile cf = load_certificate(cert_path);
  if (cf.map.din != p.source.dim || cf.map.dout != p.target.dim)
    throw DimensionMismatchError("certificate dimensions do not match problem");
  double conv = 0.0;
  if (cf.map.ops.empty()) {
    for (const auto& m : p.target.ops) conv = std::max(conv, m.norm());
  } else {
    conv = conversion_residual(cf.map, p.source, p.target);
  }
  const double side = side_condition_residual(cf.map, p.cls);
  const bool ok = conv <= p.tol && side <= p.tol;
  if (flags.json) {
    std::cout << "{\"status\":\"" << (ok ? "accepted" : "rejected")
              << "\",\"conversion_residual\":" << io_detail::fmt_double(conv)
              << ",\"side_residual\":" << io_detail::fmt_double(side) << "}\n";
  } else {
    std::cout << (ok ? "accepted" : "rejected") << " (conversion residual "
              << conv << ", side residual " << side << ", tol " << p.tol
              << ")\n";
  }
  return ok ? 0 : 1;
}

int cmd_witness(const std::string& path, const CommonFlags& flags,
                int restarts, const std::string& out_path) {
  ProblemFile p = load_problem(path);
  apply_flags(p, flags);
  ConversionQuery q;
  q.source = p.source;
  q.target = p.target;
  q.cls = p.cls;
  q.tol = p.tol;
  q.seed = p.seed;
  q.witness_restarts = restarts;
  // zero budget means no search at all, not just no random restarts
  const auto w = restarts > 0 ? witness_search(q)
                              : std::optional<RandomizationWitness>();
  if (!w) {
    if (flags.json)
      std::cout << "{\"status\":\"none\"}\n";
    else
      std::cout << "no witness found within budget\n";
    return kExitUndecided;
  }
  WitnessFile wf;
  wf.cls = q.cls;
  wf.theta0 = w->theta0;
  wf.p = w->p;
  wf.x = w->x;
  wf.lhs_upper = w->lhs_upper;
  wf.rhs_lower = w->rhs_lower;
  const std::string body = serialize_witness(wf);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << body;
  }
  if (flags.json)
    std::cout << body;
  else
    std::cout << "witness found: certified payoff gap " << w->lhs_upper
              << " < " << w->rhs_lower << "\n";
  return kExitFeasible;
}

void print_matrix(const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const cplx v = m(r, c);
      std::cout << (c ? "  " : "") << v.real()
                << (v.imag() >= 0 ? "+" : "-") << std::abs(v.imag()) << "i";
    }
    std::cout << "\n";
  }
}

int cmd_gram(const std::string& path, const CommonFlags& flags) {
  ProblemFile p = load_problem(path);
  apply_flags(p, flags);
  const auto u = p.source_vectors ? p.source_vectors
                                  : try_vectors_from_rank1(p.source);
  const auto v = p.target_vectors ? p.target_vectors
                                  : try_vectors_from_rank1(p.target);
  if (!u || !v) {
    std::cerr << "gram: families are not rank-1\n";
    return kExitUndecided;
  }
  std::cout << "source Gram:\n";
  print_matrix(gram(*u));
  std::cout << "target Gram:\n";
  print_matrix(gram(*v));
  return 0;
}

int cmd_algebra(const std::string& path, const CommonFlags& flags) {
  ProblemFile p = load_problem(path);
  apply_flags(p, flags);
  for (const auto* side : {"source", "target"}) {
    const OperatorFamily& fam =
        std::string(side) == "source" ? p.source : p.target;
    const StarAlgebra alg = generate_algebra(fam, p.seed + 7);
    std::cout << side << ": support dim " << alg.support_dim()
              << ", algebra dim " << alg.algebra_dim() << ", blocks";
    for (const auto& b : alg.blocks)
      std::cout << " (n=" << b.n << ",d=" << b.d << ")";
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decide convertibility of positive-operator families"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string problem_path, cert_path, criterion, cert_out, witness_out;
  bool oracle = false;
  int restarts = 32;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("problem", problem_path, "problem file (JSON)")->required();
    cmd->add_option("--class", flags.cls, "override map class");
    cmd->add_option("--tol", flags.tol, "override tolerance");
    cmd->add_option("--seed", flags.seed, "override seed");
    cmd->add_flag("--json", flags.json, "machine-readable output");
  };

  auto* decide_cmd = app.add_subcommand("decide", "decide convertibility");
  add_common(decide_cmd);
  decide_cmd->add_option("--criterion", criterion, "force a criterion");
  decide_cmd->add_flag("--oracle", oracle, "force the Choi engine");
  decide_cmd->add_option("--certificate-out", cert_out,
                         "write a Kraus certificate on Feasible");

  auto* certify_cmd = app.add_subcommand("certify", "re-verify a certificate");
  add_common(certify_cmd);
  certify_cmd->add_option("certificate", cert_path, "certificate file (JSON)")
      ->required();

  auto* witness_cmd =
      app.add_subcommand("witness", "search for a randomization witness");
  add_common(witness_cmd);
  witness_cmd->add_option("--restarts", restarts, "witness search restarts");
  witness_cmd->add_option("--out", witness_out, "witness output file");

  auto* gram_cmd = app.add_subcommand("gram", "print Gram matrices");
  add_common(gram_cmd);

  auto* algebra_cmd =
      app.add_subcommand("algebra", "print generated-algebra block structure");
  add_common(algebra_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (decide_cmd->parsed())
      return cmd_decide(problem_path, flags, criterion, oracle, cert_out);
    if (certify_cmd->parsed())
      return cmd_certify(problem_path, cert_path, flags);
    if (witness_cmd->parsed())
      return cmd_witness(problem_path, flags, restarts, witness_out);
    if (gram_cmd->parsed()) return cmd_gram(problem_path, flags);
    if (algebra_cmd->parsed()) return cmd_algebra(problem_path, flags);
  } catch (const obsconvert::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const obsconvert::DimensionMismatchError& e) {
    std::cerr << "dimension error: " << e.what() << "\n";
    return kExitDimension;
  } catch (const obsconvert::SizeMismatchError& e) {
    std::cerr << "dimension error: " << e.what() << "\n";
    return kExitDimension;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 70;
  }
  return kExitUndecided;
}
