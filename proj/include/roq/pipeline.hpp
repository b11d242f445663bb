#pragma once

// End-to-end evaluation: parse, plan, build the provenance DAG, compute the
// co-table graph, decompose, and compute the answer probability.

#include <array>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "roq/cotable.hpp"
#include "roq/error.hpp"
#include "roq/expr.hpp"
#include "roq/instance.hpp"
#include "roq/provenance.hpp"
#include "roq/query.hpp"
#include "roq/readonce.hpp"

namespace roq {

struct ReportStats {
  std::size_t n = 0;  // tuples contributing to the answer
  std::size_t k = 0;
  std::size_t n_H = 0;
  std::size_t m_H = 0;
  std::size_t beta_H = 0;
  std::size_t m_co = 0;
  std::size_t m_C = 0;
  std::size_t m_T = 0;
  std::size_t depth = 0;
  std::size_t row_decomps = 0;
  std::size_t table_decomps = 0;
};

struct Report {
  RoOutcome outcome = RoOutcome::NotReadOnce;
  std::optional<ReadOnceTree> tree;
  std::optional<std::string> expression;
  std::optional<double> probability;
  /// Induced P4 in the co-occurrence graph, in path order, for answers that
  /// are not read-once and small enough to scan.
  std::optional<std::array<std::string, 4>> p4_witness;
  ReportStats stats;

  bool read_once() const { return outcome != RoOutcome::NotReadOnce; }
};

struct EvalOptions {
  std::size_t cap = kDefaultEnumerationCap;
  bool compute_cooccurrence = true;
  bool verify_exclusion = false;
};

constexpr std::string_view outcome_name(RoOutcome o) {
  switch (o) {
    case RoOutcome::Success: return "success";
    case RoOutcome::NotReadOnce: return "not_read_once";
    case RoOutcome::EmptyResult: return "empty";
  }
  return "unknown";
}

inline Report evaluate(const Query& q, const Instance& inst, const Plan& plan,
                       const EvalOptions& opts = {}) {
  Report report;
  report.stats.k = q.k();
  TableAdjacencyGraph gt = table_adjacency(q);
  report.stats.m_T = gt.m();

  PlanResult result = eval_plan(plan, q, inst);
  if (result.empty()) {
    report.outcome = RoOutcome::EmptyResult;
    report.probability = 0.0;
    return report;
  }
  const ProvenanceDag& dag = *result.dag;
  DagStats ds = dag.stats();
  report.stats.n = ds.n;
  report.stats.n_H = ds.n_H;
  report.stats.m_H = ds.m_H;
  report.stats.beta_H = ds.beta_H;

  CoGraph gc = comp_cotable(dag, gt, CoGraphMode::CoTable);
  report.stats.m_C = gc.m();
  std::optional<CoGraph> gco;
  if (opts.compute_cooccurrence) {
    gco = comp_cotable(dag, gt, CoGraphMode::CoOccurrence);
    report.stats.m_co = gco->m();
  }

  std::vector<VarId> used = dag.variables();
  Instance pruned = inst.restrict(used);
  CompRoOptions ro_opts;
  ro_opts.verify_exclusion = opts.verify_exclusion;
  RoResult ro = comp_ro(q, pruned, gc, gt, ro_opts);
  report.outcome = ro.outcome;
  report.stats.depth = ro.stats.depth;
  report.stats.row_decomps = ro.stats.row_decomps;
  report.stats.table_decomps = ro.stats.table_decomps;

  if (ro.outcome == RoOutcome::Success) {
    report.expression = render(*ro.tree, inst.names());
    report.probability = readonce_probability(*ro.tree, inst.probabilities());
    report.tree = std::move(ro.tree);
  } else if (ro.outcome == RoOutcome::NotReadOnce && gco && ds.n <= opts.cap) {
    if (auto w = find_induced_p4(*gco)) {
      std::array<std::string, 4> names;
      for (std::size_t i = 0; i < 4; ++i) names[i] = inst.name_of((*w)[i]);
      report.p4_witness = names;
    }
  } else if (ro.outcome == RoOutcome::EmptyResult) {
    report.probability = 0.0;
  }
  return report;
}

inline Report evaluate(const Query& q, const Instance& inst, const EvalOptions& opts = {}) {
  return evaluate(q, inst, default_plan(q), opts);
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Evaluates the query in `query_text` over the instance directory, using
/// the plan text if given and the left-deep plan otherwise.
inline Report evaluate(std::string_view query_text, const std::filesystem::path& instance_dir,
                       std::optional<std::string_view> plan_text = std::nullopt,
                       const EvalOptions& opts = {}) {
  Query q = parse_query(query_text);
  Instance inst = load_instance(instance_dir);
  q.check_against(inst);
  Plan plan = plan_text ? parse_plan(*plan_text, q) : default_plan(q);
  return evaluate(q, inst, plan, opts);
}

}  // namespace roq
