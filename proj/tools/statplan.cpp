// statplan: command-line front end for interval estimation, knowledge-base
// maintenance, decisions and scenario runs.
//
// Exit codes: 0 success (Chosen / AdviceChosen / complete plan / all
// assertions passed), 2 Undecided, partial plan or insufficient data,
// 1 any error or failed assertion.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "statplan/statplan.hpp"

namespace {

using namespace statplan;

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kUndecided = 2;

struct Common {
  double alpha = 0.05;
  std::string table_path;
  bool full = false;
  std::unique_ptr<ExactTable> table;

  const ExactTable* exact_table() {
    if (table_path.empty()) return nullptr;
    if (!table) {
      std::ifstream in(table_path);
      if (!in) throw std::runtime_error("cannot read table " + table_path);
      table = std::make_unique<ExactTable>(ExactTable::read(in));
    }
    return table.get();
  }

  int decimals() const { return full ? 10 : 4; }
};

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0) && alpha != 1.0) throw DomainError("alpha must lie in (0, 1]");
}

// "Old=Old-Try" -> ActionSpec; a bare "Old" looks up "Old-Try".
ActionSpec parse_action(const Catalog& catalog, const std::string& spec) {
  const auto eq = spec.find('=');
  const std::string name = eq == std::string::npos ? spec : spec.substr(0, eq);
  const std::string event = eq == std::string::npos ? spec + "-Try" : spec.substr(eq + 1);
  return {name, catalog.at(event)};
}

std::vector<AdviceRule> load_rules(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read rules " + path);
  return parse_rules(in);
}

void print_lines(const std::vector<std::string>& lines) {
  for (const auto& l : lines) std::cout << l << '\n';
}

int cmd_estimate(std::uint64_t y, std::uint64_t n, double alpha, const std::string& method, Common& common) {
  if (n == 0 || y > n) throw DomainError("estimate: need 0 <= y <= n and n >= 1");
  check_alpha(alpha);
  const TrialCounts counts(n, y);
  ProbInterval iv;
  std::string label;
  if (method == "approx") {
    iv = approx_interval(counts, alpha);
    label = "approx";
  } else if (method == "exact") {
    iv = exact_interval(counts, alpha);
    label = "exact";
  } else {
    iv = interval_for(counts, alpha, common.exact_table());
    label = approximation_valid(counts) ? "approx" : "exact";
  }
  std::cout << text::fixed(iv.lo, common.decimals()) << ' ' << text::fixed(iv.hi, common.decimals()) << ' ' << label
            << '\n';
  return kOk;
}

int cmd_table(std::uint64_t n_max, std::vector<double> alphas, const std::string& out_path) {
  if (n_max == 0 || n_max > 1000) throw DomainError("table: n_max must lie in [1, 1000]");
  if (alphas.empty()) alphas = {0.05, 0.01};
  const auto table = ExactTable::generate(n_max, alphas);
  if (out_path.empty()) {
    table.write(std::cout);
    return kOk;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  table.write(out);
  if (!out) throw std::runtime_error("write failed: " + out_path);
  std::cout << "wrote " << table.size() << " rows to " << out_path << '\n';
  return kOk;
}

int cmd_ingest(const std::string& kb_path, const std::string& catalog_path, const std::string& input) {
  OccurrenceStore store;
  if (std::filesystem::exists(kb_path)) {
    store = load(kb_path);
  } else {
    if (catalog_path.empty()) throw std::runtime_error("ingest: " + kb_path + " does not exist; pass --catalog");
    std::ifstream cin_(catalog_path);
    if (!cin_) throw std::runtime_error("cannot read catalog " + catalog_path);
    store = OccurrenceStore(Catalog::parse(cin_));
  }

  std::ifstream file;
  std::istream* in = &std::cin;
  if (!input.empty() && input != "-") {
    file.open(input);
    if (!file) throw std::runtime_error("cannot read " + input);
    in = &file;
  }
  std::string line;
  std::size_t line_no = 0;
  std::size_t added = 0;
  while (std::getline(*in, line)) {
    ++line_no;
    if (text::trim(text::strip_comment(line)).empty()) continue;
    try {
      store.ingest(parse_instance_line(line, line_no));
    } catch (const DomainError& e) {
      throw ParseError(line_no, e.what());
    }
    ++added;
  }
  save(store, kb_path);
  std::cout << "ingested " << added << " instances; log size " << store.log_size() << '\n';
  return kOk;
}

int cmd_query(const std::string& kb_path, const std::string& goal, const std::string& reference,
              const std::string& context, Common& common) {
  check_alpha(common.alpha);
  const auto store = load(kb_path);
  const auto& cat = store.catalog();
  const PcaQuery q{cat.at(goal), cat.at(reference), cat.at(context), common.alpha};
  const std::string label = goal + "|" + reference + "|" + context;
  try {
    const auto r = pca_detail(store, q, common.exact_table());
    std::cout << label << " n=" << r.counts.n << " y=" << r.counts.y << ' '
              << format_interval(r.interval, common.decimals()) << ' ' << to_string(r.interval.method) << '\n';
    return kOk;
  } catch (const InsufficientData&) {
    std::cout << label << " insufficient-data\n";
    return kUndecided;
  }
}

int cmd_decide(const std::string& kb_path, const std::string& rules_path, const std::string& goal,
               const std::string& context, const std::vector<std::string>& action_specs, Common& common) {
  check_alpha(common.alpha);
  const auto store = load(kb_path);
  const auto& cat = store.catalog();
  std::vector<ActionSpec> actions;
  for (const auto& a : action_specs) actions.push_back(parse_action(cat, a));
  const auto rules = load_rules(rules_path);
  const auto d = decide_with_advice(store, cat.at(goal), cat.at(context), common.alpha, actions, rules,
                                    common.exact_table());
  print_lines(format_decision(d, cat.at(goal), cat.at(context), common.alpha));
  return d.decided() ? kOk : kUndecided;
}

int cmd_preconditions(const std::string& kb_path, const std::string& goal, const std::string& family,
                      const std::vector<std::string>& candidate_names, Common& common) {
  check_alpha(common.alpha);
  const auto store = load(kb_path);
  const auto& cat = store.catalog();
  std::vector<Event> candidates;
  for (const auto& c : candidate_names) candidates.push_back(cat.at(c));
  const auto choice =
      select_preconditions(store, cat.at(goal), cat.at(family), candidates, common.alpha, common.exact_table());
  print_lines(format_preconditions(choice, cat.at(goal), cat.at(family), common.alpha));
  return kOk;
}

int cmd_plan(const std::string& kb_path, const std::string& rules_path, const std::string& family,
             const std::string& context, const std::vector<std::string>& action_specs,
             const std::vector<std::string>& subgoals, const std::vector<std::string>& candidates, Common& common) {
  check_alpha(common.alpha);
  const auto store = load(kb_path);
  const auto& cat = store.catalog();
  PlanRequest req;
  req.initial_context = cat.at(context);
  req.alpha = common.alpha;
  for (const auto& a : action_specs) req.actions.push_back(parse_action(cat, a));
  req.family = cat.at(family);
  for (const auto& c : candidates) req.candidates.push_back(cat.at(c));
  for (const auto& g : subgoals) req.subgoals.push_back(cat.at(g));
  req.rules = load_rules(rules_path);
  const auto plan = plan_sequence(store, req, common.exact_table());
  print_lines(format_plan(plan, common.alpha));
  return plan.complete ? kOk : kUndecided;
}

int cmd_simulate(const std::string& path, std::optional<std::uint64_t> seed, const std::string& out_path,
                 Common& common) {
  auto scenario = load_scenario(path);
  if (seed) scenario.model.seed = *seed;
  const auto report = run_scenario(scenario, common.exact_table());
  if (out_path.empty()) {
    std::cout << report.text();
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << report.text();
    std::cout << report.summary() << '\n';
  }
  return report.all_passed() ? kOk : kError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interval-estimation decision planner"};
  app.require_subcommand(1);
  Common common;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--alpha", common.alpha, "Alpha level (default 0.05)");
    sub->add_option("--table", common.table_path, "Precomputed exact-interval table");
    sub->add_flag("--full", common.full, "Print bounds at full precision");
  };

  // estimate
  std::uint64_t est_y = 0, est_n = 0;
  std::optional<double> est_alpha;
  std::string method = "auto";
  auto* estimate = app.add_subcommand("estimate", "Confidence interval for y successes in n trials");
  estimate->add_option("y", est_y, "Successes")->required();
  estimate->add_option("n", est_n, "Trials")->required();
  estimate->add_option("level", est_alpha, "Alpha level (same as --alpha)");
  estimate->add_option("method,--method", method, "auto | approx | exact")
      ->check(CLI::IsMember({"auto", "approx", "exact"}));
  add_common(estimate);

  // table
  std::uint64_t n_max = 40;
  std::vector<double> table_alphas;
  std::string out_path;
  auto* table = app.add_subcommand("table", "Generate the exact-interval table");
  table->add_option("n_max", n_max, "Largest n (default 40, at most 1000)");
  table->add_option("--alpha", table_alphas, "Alpha level; repeatable (default 0.05 and 0.01)");
  table->add_option("--out", out_path, "Output path (default stdout)");

  // ingest
  std::string kb_path, catalog_path, input;
  auto* ingest_cmd = app.add_subcommand("ingest", "Append instance lines to a knowledge base");
  ingest_cmd->add_option("--kb", kb_path, "Knowledge-base file")->required();
  ingest_cmd->add_option("--catalog", catalog_path, "Event catalog used when creating a new knowledge base");
  ingest_cmd->add_option("input", input, "Instance file (default stdin)");

  // query
  std::string goal, reference, context = "Any", family, rules_path;
  auto* query = app.add_subcommand("query", "Probability constraint for goal given reference in context");
  query->add_option("--kb", kb_path)->required();
  query->add_option("--goal", goal)->required();
  query->add_option("--reference", reference)->required();
  query->add_option("--context", context);
  add_common(query);

  // decide
  std::vector<std::string> action_specs;
  auto* decide = app.add_subcommand("decide", "Choose among actions, falling back to advice rules");
  decide->add_option("--kb", kb_path)->required();
  decide->add_option("--rules", rules_path, "Advice-rule file");
  decide->add_option("--goal", goal)->required();
  decide->add_option("--context", context);
  decide->add_option("actions", action_specs, "Action=TryEvent (bare Action means Action-Try)")->required();
  add_common(decide);

  // preconditions
  std::vector<std::string> candidates;
  auto* pre = app.add_subcommand("preconditions", "Choose the context event with the best comparable interval");
  pre->add_option("--kb", kb_path)->required();
  pre->add_option("--goal", goal)->required();
  pre->add_option("--family", family)->required();
  pre->add_option("candidates", candidates, "Candidate precondition events, in order");
  add_common(pre);

  // plan
  std::vector<std::string> subgoals;
  auto* plan = app.add_subcommand("plan", "Choose one action per subgoal");
  plan->add_option("--kb", kb_path)->required();
  plan->add_option("--rules", rules_path);
  plan->add_option("--family", family)->required();
  plan->add_option("--context", context, "Initial context event");
  plan->add_option("--action", action_specs, "Action=TryEvent; repeatable")->required();
  plan->add_option("--subgoal", subgoals, "Subgoal event; repeatable, in order")->required();
  plan->add_option("--candidate", candidates, "Precondition candidate; repeatable");
  add_common(plan);

  // simulate
  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  auto* simulate = app.add_subcommand("simulate", "Run a scenario file and check its assertions");
  simulate->add_option("scenario", scenario_path)->required();
  simulate->add_option("--seed", seed, "Override the scenario's seed");
  simulate->add_option("--out", out_path, "Write the report here instead of stdout");
  add_common(simulate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kError;
  }

  try {
    if (*estimate) return cmd_estimate(est_y, est_n, est_alpha.value_or(common.alpha), method, common);
    if (*table) return cmd_table(n_max, table_alphas, out_path);
    if (*ingest_cmd) return cmd_ingest(kb_path, catalog_path, input);
    if (*query) return cmd_query(kb_path, goal, reference, context, common);
    if (*decide) return cmd_decide(kb_path, rules_path, goal, context, action_specs, common);
    if (*pre) return cmd_preconditions(kb_path, goal, family, candidates, common);
    if (*plan) return cmd_plan(kb_path, rules_path, family, context, action_specs, subgoals, candidates, common);
    if (*simulate) return cmd_simulate(scenario_path, seed, out_path, common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
  return kError;
}
