#pragma once

// Action choice from interval evidence. An action is chosen statistically
// only when its interval lies strictly above every competitor's; otherwise
// ordered advice rules may pick one, provided the pick is not demonstrably
// worse than some alternative.

#include <algorithm>
#include <istream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "statplan/error.hpp"
#include "statplan/event_model.hpp"
#include "statplan/interval_stats.hpp"
#include "statplan/knowledge_base.hpp"
#include "statplan/text.hpp"

namespace statplan {

struct ActionSpec {
  std::string name;
  Event try_event;  // reference event caused by executing the action
};

struct Inspection {
  std::string action;
  TrialCounts counts;
  ProbInterval interval;
};

enum class Verdict { Chosen, AdviceChosen, Undecided };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Chosen: return "Chosen";
    case Verdict::AdviceChosen: return "AdviceChosen";
    case Verdict::Undecided: return "Undecided";
  }
  return "?";
}

struct Decision {
  Verdict verdict = Verdict::Undecided;
  std::string action;   // set unless Undecided
  std::string rule_id;  // set for AdviceChosen
  std::vector<Inspection> justification;  // actions with data, in input order
  std::vector<std::string> missing;       // actions with no trials in context

  bool decided() const { return verdict != Verdict::Undecided; }
};

// Per-action interval, or nullopt when the action has no data.
using IntervalMap = std::map<std::string, std::optional<ProbInterval>>;

inline IntervalMap interval_map(const Decision& d) {
  IntervalMap out;
  for (const auto& i : d.justification) out.emplace(i.action, i.interval);
  for (const auto& m : d.missing) out.emplace(m, std::nullopt);
  return out;
}

struct IncomparableGuard {
  std::string first;
  std::string second;
};

struct MissingGuard {
  std::string action;
};

/// "id: when incomparable(A,B) prefer C" or "id: when missing(A) prefer C".
struct AdviceRule {
  std::string id;
  std::variant<IncomparableGuard, MissingGuard> guard;
  std::string preferred;

  /// incomparable(A,B): both have data and neither interval is below the
  /// other. missing(A): A is among the actions but has no data.
  bool guard_holds(const IntervalMap& intervals) const {
    if (const auto* g = std::get_if<IncomparableGuard>(&guard)) {
      const auto a = intervals.find(g->first);
      const auto b = intervals.find(g->second);
      if (a == intervals.end() || b == intervals.end() || !a->second || !b->second) return false;
      const auto c = compare(*a->second, *b->second);
      return c != Comparison::Less && c != Comparison::Greater;
    }
    const auto& g = std::get<MissingGuard>(guard);
    const auto it = intervals.find(g.action);
    return it != intervals.end() && !it->second;
  }

  std::string describe() const {
    if (const auto* g = std::get_if<IncomparableGuard>(&guard))
      return id + ": when incomparable(" + g->first + "," + g->second + ") prefer " + preferred;
    return id + ": when missing(" + std::get<MissingGuard>(guard).action + ") prefer " + preferred;
  }
};

// Parses one non-blank, comment-free advice rule line.
inline AdviceRule parse_rule_line(const std::string& line, std::size_t line_no) {
  static const std::regex incomparable(
      R"(^([^:\s]+)\s*:\s*when\s+incomparable\(\s*([^,\s)]+)\s*,\s*([^,\s)]+)\s*\)\s+prefer\s+(\S+)$)");
  static const std::regex missing(R"(^([^:\s]+)\s*:\s*when\s+missing\(\s*([^,\s)]+)\s*\)\s+prefer\s+(\S+)$)");
  std::smatch m;
  if (std::regex_match(line, m, incomparable)) return {m[1], IncomparableGuard{m[2], m[3]}, m[4]};
  if (std::regex_match(line, m, missing)) return {m[1], MissingGuard{m[2]}, m[3]};
  throw ParseError(line_no, "malformed advice rule '" + line + "'");
}

// Appends a rule, rejecting duplicate ids.
inline void add_rule(std::vector<AdviceRule>& rules, AdviceRule rule, std::size_t line_no) {
  for (const auto& r : rules)
    if (r.id == rule.id) throw ParseError(line_no, "duplicate rule id '" + rule.id + "'");
  rules.push_back(std::move(rule));
}

inline std::vector<AdviceRule> parse_rules(std::istream& in) {
  std::vector<AdviceRule> rules;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line(text::trim(text::strip_comment(raw)));
    if (!line.empty()) add_rule(rules, parse_rule_line(line, line_no), line_no);
  }
  return rules;
}

namespace detail {

inline void check_actions(std::span<const ActionSpec> actions) {
  if (actions.empty()) throw DomainError("at least one action is required");
  std::set<std::string> names;
  for (const auto& a : actions)
    if (!names.insert(a.name).second) throw DomainError("action '" + a.name + "' listed twice");
}

}  // namespace detail

/// Chosen(a) iff every action has data in this context and every other
/// action's interval is Less than a's. Otherwise Undecided, with everything
/// that was inspected.
inline Decision best_action(const OccurrenceStore& store, const Event& goal, const Event& context, double alpha,
                            std::span<const ActionSpec> actions, const ExactTable* table = nullptr) {
  detail::check_actions(actions);
  Decision d;
  for (const auto& a : actions) {
    try {
      const auto r = pca_detail(store, PcaQuery{goal, a.try_event, context, alpha}, table);
      d.justification.push_back({a.name, r.counts, r.interval});
    } catch (const InsufficientData&) {
      d.missing.push_back(a.name);
    }
  }
  if (d.justification.empty() || !d.missing.empty()) return d;

  for (const auto& candidate : d.justification) {
    const bool dominates = std::all_of(d.justification.begin(), d.justification.end(), [&](const Inspection& other) {
      return &other == &candidate || compare(other.interval, candidate.interval) == Comparison::Less;
    });
    if (dominates) {
      d.verdict = Verdict::Chosen;
      d.action = candidate.action;
      break;
    }
  }
  return d;
}

/// best_action first; when it is Undecided, the first rule whose guard holds
/// and whose preferred action is not Less than any action with data.
inline Decision decide_with_advice(const OccurrenceStore& store, const Event& goal, const Event& context,
                                   double alpha, std::span<const ActionSpec> actions,
                                   std::span<const AdviceRule> rules, const ExactTable* table = nullptr) {
  auto d = best_action(store, goal, context, alpha, actions, table);
  if (d.decided()) return d;

  const auto intervals = interval_map(d);
  for (const auto& rule : rules) {
    const auto pref = intervals.find(rule.preferred);
    if (pref == intervals.end()) continue;
    if (!rule.guard_holds(intervals)) continue;
    const bool contradicted = pref->second && std::any_of(d.justification.begin(), d.justification.end(),
                                                          [&](const Inspection& other) {
                                                            return compare(*pref->second, other.interval) ==
                                                                   Comparison::Less;
                                                          });
    if (contradicted) continue;
    d.verdict = Verdict::AdviceChosen;
    d.action = rule.preferred;
    d.rule_id = rule.id;
    break;
  }
  return d;
}

struct CandidateReport {
  Event candidate;
  std::optional<PcaResult> result;  // nullopt: no data
  std::optional<Comparison> versus_incumbent;
  bool adopted = false;
};

struct PreconditionChoice {
  Event context;
  PcaResult result;
  PcaResult baseline;  // the family under Any
  std::vector<CandidateReport> candidates;
};

/// Greedy strict improvement from Any: a candidate replaces the incumbent
/// only when its interval is Greater. Candidates without data or with
/// overlapping intervals are ignored.
inline PreconditionChoice select_preconditions(const OccurrenceStore& store, const Event& goal, const Event& family,
                                               std::span<const Event> candidates, double alpha,
                                               const ExactTable* table = nullptr) {
  const auto baseline = pca_detail(store, PcaQuery{goal, family, Event::any(), alpha}, table);
  PreconditionChoice choice{Event::any(), baseline, baseline, {}};
  for (const auto& c : candidates) {
    CandidateReport report{c, std::nullopt, std::nullopt, false};
    try {
      report.result = pca_detail(store, PcaQuery{goal, family, c, alpha}, table);
    } catch (const InsufficientData&) {
      choice.candidates.push_back(std::move(report));
      continue;
    }
    report.versus_incumbent = compare(report.result->interval, choice.result.interval);
    if (*report.versus_incumbent == Comparison::Greater) {
      report.adopted = true;
      choice.context = c;
      choice.result = *report.result;
    }
    choice.candidates.push_back(std::move(report));
  }
  return choice;
}

/// True iff some action's interval is Greater than the do-nothing action's.
inline bool single_action_adequate(const OccurrenceStore& store, const Event& goal, const Event& context,
                                   double alpha, std::span<const ActionSpec> actions, const ActionSpec& noop,
                                   const ExactTable* table = nullptr) {
  const auto idle = pca(store, PcaQuery{goal, noop.try_event, context, alpha}, table);
  for (const auto& a : actions) {
    if (a.name == noop.name) continue;
    try {
      if (compare(pca(store, PcaQuery{goal, a.try_event, context, alpha}, table), idle) == Comparison::Greater)
        return true;
    } catch (const InsufficientData&) {
    }
  }
  return false;
}

struct PlanStep {
  Event subgoal;
  Event context;  // preconditions the action was chosen under
  std::optional<std::string> action;
  std::optional<ProbInterval> expected;
  Decision decision;
  bool independence_fallback = false;
};

struct PlanRequest {
  Event initial_context = Event::any();
  double alpha = 0.05;
  std::vector<ActionSpec> actions;
  Event family;                  // reference event for precondition selection
  std::vector<Event> candidates;  // precondition candidates
  std::vector<Event> subgoals;
  std::vector<AdviceRule> rules;
};

struct Plan {
  std::vector<PlanStep> steps;
  bool complete = false;
};

namespace detail {

// Most constrained declared event (other than Any) that subsumes the previous
// subgoal and supports a probability estimate for at least one action.
inline std::optional<Event> hypothetical_context(const OccurrenceStore& store, const Event& previous,
                                                 const Event& subgoal, const PlanRequest& req,
                                                 const ExactTable* table) {
  std::optional<Event> best;
  for (const auto& e : store.catalog().events()) {
    if (e.is_any() || !subsumes(e, previous)) continue;
    if (best && e.features().size() <= best->features().size()) continue;
    const bool supported = std::any_of(req.actions.begin(), req.actions.end(), [&](const ActionSpec& a) {
      try {
        pca_detail(store, PcaQuery{subgoal, a.try_event, e, req.alpha}, table);
        return true;
      } catch (const InsufficientData&) {
        return false;
      }
    });
    if (supported) best = e;
  }
  return best;
}

}  // namespace detail

/// Chooses one action per caller-supplied subgoal. Each later step is chosen
/// relative to a hypothetical event standing for the previous subgoal having
/// been achieved; without statistics for one, the initial context is reused
/// (actions assumed independent). Stops at the first Undecided step and
/// returns the partial plan.
inline Plan plan_sequence(const OccurrenceStore& store, const PlanRequest& req, const ExactTable* table = nullptr) {
  if (req.subgoals.empty()) throw DomainError("plan_sequence: no subgoals");
  detail::check_actions(req.actions);
  if (store.count(req.initial_context) == 0)
    throw InsufficientData("no occurrences of initial context " + req.initial_context.name());

  Plan plan;
  for (std::size_t i = 0; i < req.subgoals.size(); ++i) {
    const auto& subgoal = req.subgoals[i];
    Event working = req.initial_context;
    bool fallback = false;
    if (i > 0) {
      if (auto hyp = detail::hypothetical_context(store, req.subgoals[i - 1], subgoal, req, table)) {
        working = *hyp;
      } else {
        fallback = true;
      }
    }

    std::vector<Event> restricted;
    if (!working.is_any()) restricted.push_back(working);
    for (const auto& c : req.candidates) {
      auto both = intersect(c, working);
      if (!both || same_features(*both, working)) continue;
      restricted.push_back(same_features(*both, c) ? c : *both);
    }
    const auto pre = select_preconditions(store, subgoal, req.family, restricted, req.alpha, table);
    auto decision = decide_with_advice(store, subgoal, pre.context, req.alpha, req.actions, req.rules, table);

    PlanStep step{subgoal, pre.context, std::nullopt, std::nullopt, decision, fallback};
    if (decision.decided()) {
      step.action = decision.action;
      for (const auto& ins : decision.justification)
        if (ins.action == decision.action) step.expected = ins.interval;
    }
    plan.steps.push_back(std::move(step));
    if (!decision.decided()) return plan;
  }
  plan.complete = true;
  return plan;
}

// ---- line-oriented traces -------------------------------------------------

inline std::string format_inspection(const Inspection& i) {
  return i.action + " n=" + std::to_string(i.counts.n) + " y=" + std::to_string(i.counts.y) + " " +
         format_interval(i.interval) + " " + std::string(to_string(i.interval.method));
}

// Last line of a decision trace: "Chosen New", "AdviceChosen New rule:prefer-new", "Undecided".
inline std::string format_verdict(const Decision& d) {
  switch (d.verdict) {
    case Verdict::Chosen: return "Chosen " + d.action;
    case Verdict::AdviceChosen: return "AdviceChosen " + d.action + " rule:" + d.rule_id;
    case Verdict::Undecided: return "Undecided";
  }
  return "?";
}

inline std::vector<std::string> format_decision(const Decision& d, const Event& goal, const Event& context,
                                                double alpha) {
  std::vector<std::string> lines;
  lines.push_back("decide goal=" + goal.name() + " context=" + context.name() + " alpha=" + text::shortest(alpha));
  for (const auto& i : d.justification) lines.push_back("  " + format_inspection(i));
  for (const auto& m : d.missing) lines.push_back("  " + m + " missing");
  lines.push_back(format_verdict(d));
  return lines;
}

inline std::string format_pca(const std::string& label, const PcaResult& r) {
  return label + " n=" + std::to_string(r.counts.n) + " y=" + std::to_string(r.counts.y) + " " +
         format_interval(r.interval) + " " + std::string(to_string(r.interval.method));
}

inline std::vector<std::string> format_preconditions(const PreconditionChoice& c, const Event& goal,
                                                     const Event& family, double alpha) {
  std::vector<std::string> lines;
  lines.push_back("preconditions goal=" + goal.name() + " family=" + family.name() +
                  " alpha=" + text::shortest(alpha));
  lines.push_back("  " + format_pca("Any", c.baseline) + " baseline");
  for (const auto& r : c.candidates) {
    if (!r.result) {
      lines.push_back("  " + r.candidate.name() + " missing ignored");
      continue;
    }
    lines.push_back("  " + format_pca(r.candidate.name(), *r.result) + " " +
                    std::string(to_string(*r.versus_incumbent)) + (r.adopted ? " adopted" : " ignored"));
  }
  lines.push_back(c.context.name() + " " + format_interval(c.result.interval));
  return lines;
}

inline std::vector<std::string> format_plan(const Plan& plan, double alpha) {
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const auto& s = plan.steps[i];
    lines.push_back("step " + std::to_string(i + 1) + " subgoal=" + s.subgoal.name() + " context=" +
                    s.context.name() + (s.independence_fallback ? " independent" : ""));
    for (const auto& l : format_decision(s.decision, s.subgoal, s.context, alpha)) lines.push_back("  " + l);
  }
  lines.push_back(plan.complete ? "plan complete" : "plan partial");
  return lines;
}

}  // namespace statplan
