// roq: command-line front end.
//
// Exit codes: 0 read-once or empty answer, 2 valid input that is not
// read-once, 1 input error, 3 oracle mismatch.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "roq/roq.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNotReadOnce = 2;
constexpr int kExitMismatch = 3;

struct CommonArgs {
  std::string instance;
  std::string query;
  std::string plan;
  std::string format = "text";
  std::optional<std::size_t> cap;
};

std::size_t resolve_cap(const CommonArgs& a) {
  if (a.cap) return *a.cap;
  if (const char* env = std::getenv("ROQ_ENUM_CAP")) {
    try {
      long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw roq::Error(roq::ErrorCode::InvalidArgument, "ROQ_ENUM_CAP must be a positive integer");
  }
  return roq::kDefaultEnumerationCap;
}

struct Loaded {
  roq::Query query;
  roq::Instance instance;
  roq::Plan plan;
};

Loaded load(const CommonArgs& a) {
  Loaded out;
  out.query = roq::parse_query(roq::read_text_file(a.query));
  out.instance = roq::load_instance(a.instance);
  out.query.check_against(out.instance);
  out.plan = a.plan.empty() ? roq::default_plan(out.query)
                            : roq::parse_plan(roq::read_text_file(a.plan), out.query);
  return out;
}

json stats_json(const roq::ReportStats& s) {
  return json{{"n", s.n},         {"k", s.k},         {"n_H", s.n_H},
              {"m_H", s.m_H},     {"beta_H", s.beta_H}, {"m_co", s.m_co},
              {"m_C", s.m_C},     {"m_T", s.m_T},     {"depth", s.depth},
              {"row_decomps", s.row_decomps},         {"table_decomps", s.table_decomps}};
}

void print_stats_text(const roq::ReportStats& s) {
  std::cout << "n " << s.n << "\nk " << s.k << "\nn_H " << s.n_H << "\nm_H " << s.m_H
            << "\nbeta_H " << s.beta_H << "\nm_co " << s.m_co << "\nm_C " << s.m_C << "\nm_T "
            << s.m_T << "\ndepth " << s.depth << "\nrow_decomps " << s.row_decomps
            << "\ntable_decomps " << s.table_decomps << '\n';
}

int exit_for(const roq::Report& r) {
  return r.outcome == roq::RoOutcome::NotReadOnce ? kExitNotReadOnce : kExitOk;
}

int run_eval(const CommonArgs& a) {
  Loaded in = load(a);
  roq::EvalOptions opts;
  opts.cap = resolve_cap(a);
  roq::Report r = roq::evaluate(in.query, in.instance, in.plan, opts);
  if (a.format == "json") {
    json j;
    j["read_once"] = r.read_once();
    j["outcome"] = std::string(roq::outcome_name(r.outcome));
    j["expression"] = r.expression ? json(*r.expression) : json(nullptr);
    j["probability"] = r.probability ? json(*r.probability) : json(nullptr);
    j["stats"] = stats_json(r.stats);
    if (r.p4_witness) j["p4_witness"] = *r.p4_witness;
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "outcome " << roq::outcome_name(r.outcome) << '\n';
    if (r.expression) std::cout << "expression " << *r.expression << '\n';
    if (r.probability) std::cout << "probability " << roq::detail::format_probability(*r.probability) << '\n';
    if (r.p4_witness) {
      const auto& w = *r.p4_witness;
      std::cout << "p4_witness " << w[0] << ' ' << w[1] << ' ' << w[2] << ' ' << w[3] << '\n';
    }
    print_stats_text(r.stats);
  }
  return exit_for(r);
}

int run_stats(const CommonArgs& a) {
  Loaded in = load(a);
  roq::EvalOptions opts;
  opts.cap = resolve_cap(a);
  roq::Report r = roq::evaluate(in.query, in.instance, in.plan, opts);
  if (a.format == "json") {
    std::cout << stats_json(r.stats).dump(2) << '\n';
  } else {
    print_stats_text(r.stats);
  }
  return kExitOk;
}

int run_cotable(const CommonArgs& a, const std::string& mode_text) {
  Loaded in = load(a);
  roq::CoGraphMode mode;
  if (mode_text == "cotable") {
    mode = roq::CoGraphMode::CoTable;
  } else if (mode_text == "cooccurrence") {
    mode = roq::CoGraphMode::CoOccurrence;
  } else {
    throw roq::Error(roq::ErrorCode::InvalidArgument, "unknown mode '" + mode_text + "'");
  }
  roq::PlanResult res = roq::eval_plan(in.plan, in.query, in.instance);
  roq::CoGraph g;
  if (!res.empty()) g = roq::comp_cotable(*res.dag, roq::table_adjacency(in.query), mode);
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& [x, y] : g.edges()) {
    std::string nx = in.instance.name_of(x), ny = in.instance.name_of(y);
    if (ny < nx) std::swap(nx, ny);
    edges.emplace_back(nx, ny);
  }
  std::sort(edges.begin(), edges.end());
  if (a.format == "json") {
    json j;
    j["mode"] = std::string(roq::mode_name(mode));
    std::vector<std::string> vertices;
    for (roq::VarId v : g.vertices()) vertices.push_back(in.instance.name_of(v));
    std::sort(vertices.begin(), vertices.end());
    j["vertices"] = vertices;
    j["edges"] = edges;
    std::cout << j.dump(2) << '\n';
  } else {
    for (const auto& [x, y] : edges) std::cout << x << ' ' << y << '\n';
  }
  return kExitOk;
}

int run_oracle(const CommonArgs& a) {
  Loaded in = load(a);
  const std::size_t cap = resolve_cap(a);
  roq::PlanResult res = roq::eval_plan(in.plan, in.query, in.instance);
  std::vector<std::pair<std::string, bool>> checks;
  if (res.empty()) {
    checks.emplace_back("empty_answer", true);
  } else {
    const roq::ProvenanceDag& dag = *res.dag;
    roq::TableAdjacencyGraph gt = roq::table_adjacency(in.query);
    roq::Expr lineage = roq::read_expression(dag);
    roq::Idnf idnf = roq::expand_to_idnf(lineage);
    roq::CoGraph gco = roq::comp_cotable(dag, gt, roq::CoGraphMode::CoOccurrence);
    roq::CoGraph gc = roq::comp_cotable(dag, gt, roq::CoGraphMode::CoTable);
    checks.emplace_back("cooccurrence_matches_idnf",
                        gco.same_graph(roq::cooccurrence_from_idnf(idnf)));
    roq::Instance pruned = in.instance.restrict(dag.variables());
    roq::RoResult ro = roq::comp_ro(in.query, pruned, gc, gt);
    bool success = ro.outcome == roq::RoOutcome::Success;
    checks.emplace_back("read_once_iff_p4_free", success == !roq::has_induced_p4(gco));
    const std::size_t n = dag.variables().size();
    if (success) {
      roq::Expr f = roq::to_expr(*ro.tree);
      bool once = ro.tree->leaf_count() == ro.tree->variables().size() &&
                  ro.tree->variables() == dag.variables();
      checks.emplace_back("each_variable_once", once);
      if (n <= cap) {
        checks.emplace_back("equivalent_on_all_assignments",
                            roq::equivalent_on_all_assignments(f, lineage, cap));
        roq::ProbMap p = in.instance.probabilities();
        double exact = roq::exact_probability(lineage, p, cap);
        double fast = roq::readonce_probability(*ro.tree, p);
        checks.emplace_back("probability_matches_enumeration",
                            std::abs(exact - fast) <= roq::kProbTolerance);
      } else {
        checks.emplace_back("idnf_equal", roq::expand_to_idnf(f) == idnf);
      }
    }
  }
  bool all = true;
  if (a.format == "json") {
    json j = json::object();
    for (const auto& [name, ok] : checks) j[name] = ok;
    std::cout << j.dump(2) << '\n';
  }
  for (const auto& [name, ok] : checks) {
    all = all && ok;
    if (a.format != "json") std::cout << (ok ? "ok   " : "FAIL ") << name << '\n';
  }
  return all ? kExitOk : kExitMismatch;
}

struct GenArgs {
  std::string family = "sample";
  std::size_t n = 1;
  std::size_t k = 3;
  std::size_t arity = 2;
  std::size_t rows = 4;
  std::size_t domain = 3;
  std::uint64_t seed = 0;
  std::optional<double> p;
  std::string out;
};

int run_gen(const GenArgs& g) {
  roq::GenSpec spec;
  spec.uniform_p = g.p;
  if (g.family == "sample") {
    spec.family = roq::family::Sample{};
  } else if (g.family == "blocks") {
    spec.family = roq::family::Blocks{g.n};
  } else if (g.family == "cross") {
    spec.family = roq::family::CrossProduct{g.n};
  } else if (g.family == "star") {
    spec.family = roq::family::Star{g.k, g.n};
  } else if (g.family == "chain") {
    spec.family = roq::family::Chain{g.n};
  } else if (g.family == "random") {
    spec.family = roq::family::Random{g.k, g.arity, g.rows, g.domain, g.seed};
  } else {
    throw roq::Error(roq::ErrorCode::InvalidArgument, "unknown family '" + g.family + "'");
  }
  roq::Generated gen = roq::generate(spec);
  roq::save_instance(gen.instance, g.out);
  std::ofstream q(std::filesystem::path(g.out) / "query.txt", std::ios::binary);
  if (!q) throw roq::Error(roq::ErrorCode::Io, "cannot write query.txt in " + g.out);
  q << gen.query.to_string() << '\n';
  return kExitOk;
}

std::vector<double> parse_chain_probs(const std::string& text, std::size_t n) {
  const std::string uniform = "uniform:";
  if (text.rfind(uniform, 0) == 0) {
    double v = roq::detail::parse_probability(text.substr(uniform.size()), "--p");
    return std::vector<double>(n + 1, v);
  }
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(roq::detail::parse_probability(item, "--p"));
  if (out.size() != n + 1)
    throw roq::Error(roq::ErrorCode::InvalidArgument,
                     "--p needs " + std::to_string(n + 1) + " values for n = " + std::to_string(n));
  return out;
}

void add_common(CLI::App* sub, CommonArgs& a) {
  sub->add_option("--instance", a.instance, "Instance directory of <relation>.tsv files")
      ->required()
      ->check(CLI::ExistingDirectory);
  sub->add_option("--query", a.query, "File holding the boolean query")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--plan", a.plan, "File holding an s-expression plan")->check(CLI::ExistingFile);
  sub->add_option("--format", a.format, "Output format")->check(CLI::IsMember({"text", "json"}));
  sub->add_option("--cap", a.cap, "Enumeration cap in variables")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Read-once evaluation of boolean conjunctive queries over tuple-independent data"};
  app.require_subcommand(1);

  CommonArgs eval_args, cotable_args, oracle_args, stats_args;
  std::string mode = "cotable";
  CLI::App* eval = app.add_subcommand("eval", "Decide read-once and compute the probability");
  add_common(eval, eval_args);
  CLI::App* cotable = app.add_subcommand("cotable", "Print co-table or co-occurrence edges");
  add_common(cotable, cotable_args);
  cotable->add_option("--mode", mode, "cotable or cooccurrence")
      ->check(CLI::IsMember({"cotable", "cooccurrence"}));
  CLI::App* oracle = app.add_subcommand("oracle", "Cross-check against enumeration oracles");
  add_common(oracle, oracle_args);
  CLI::App* stats = app.add_subcommand("stats", "Print instrumentation counters");
  add_common(stats, stats_args);

  GenArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen", "Write a generated instance and query.txt");
  gen->add_option("--family", gen_args.family, "sample, blocks, cross, star, chain, random")
      ->check(CLI::IsMember({"sample", "blocks", "cross", "star", "chain", "random"}));
  gen->add_option("--n", gen_args.n, "Size parameter");
  gen->add_option("--k", gen_args.k, "Relation count (star, random)");
  gen->add_option("--arity", gen_args.arity, "Maximum arity (random)");
  gen->add_option("--rows", gen_args.rows, "Rows per relation (random)");
  gen->add_option("--domain", gen_args.domain, "Domain size (random)");
  gen->add_option("--seed", gen_args.seed, "Seed (random)");
  gen->add_option("--p", gen_args.p, "Uniform tuple probability");
  gen->add_option("--out", gen_args.out, "Output directory")->required();

  std::size_t chain_n = 1;
  std::string chain_p = "uniform:0.5";
  CLI::App* chain = app.add_subcommand("chain", "Probability of the chain x1x2 + ... + xn x(n+1)");
  chain->add_option("--n", chain_n, "Chain length")->check(CLI::PositiveNumber);
  chain->add_option("--p", chain_p, "Comma list of n+1 probabilities or uniform:<v>");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error[" << roq::error_tag(roq::ErrorCode::InvalidArgument) << "]: " << e.what()
              << '\n';
    return kExitInput;
  }

  try {
    if (*eval) return run_eval(eval_args);
    if (*cotable) return run_cotable(cotable_args, mode);
    if (*oracle) return run_oracle(oracle_args);
    if (*stats) return run_stats(stats_args);
    if (*gen) return run_gen(gen_args);
    if (*chain) {
      std::vector<double> p = parse_chain_probs(chain_p, chain_n);
      std::cout << roq::detail::format_probability(roq::chain_probability(p)) << '\n';
      return kExitOk;
    }
  } catch (const roq::Error& e) {
    std::cerr << "error[" << roq::error_tag(e.code()) << "]: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error[E_INTERNAL]: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
