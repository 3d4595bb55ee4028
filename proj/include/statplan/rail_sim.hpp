#pragma once

// Deterministic railroad-coupling world. Ground-truth success probabilities
// live in the OutcomeModel and are never visible to the planner, which only
// sees the EventInstances the simulator emits.
//
// Randomness comes from std::mt19937_64 (the standard 64-bit Mersenne
// Twister, fully specified by its parameters) with uniforms formed from the
// top 53 bits, so streams are identical across platforms.

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "statplan/decision_engine.hpp"
#include "statplan/error.hpp"
#include "statplan/event_model.hpp"
#include "statplan/interval_stats.hpp"
#include "statplan/knowledge_base.hpp"
#include "statplan/temporal.hpp"
#include "statplan/text.hpp"

namespace statplan {

using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct WorldState {
  std::string engine_city = "Rochester";
  std::string car1_city = "Rochester";
  std::string car2_city = "Rochester";
  bool car1_loaded = false;
  bool car2_loaded = false;
  bool coupled = false;
  Tick clock = 0;

  bool same_city() const { return engine_city == car1_city && car1_city == car2_city; }

  // Observable condition features at the start of an action.
  FeatureMap conditions() const {
    return {{"same-city", same_city() ? "true" : "false"},
            {"car1-loaded", car1_loaded ? "true" : "false"},
            {"car2-loaded", car2_loaded ? "true" : "false"}};
  }

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

struct OutcomeRule {
  std::string action;
  FeatureMap profile;  // empty matches every condition profile
  double probability = 0.0;
};

struct OutcomeModel {
  std::vector<OutcomeRule> rules;  // first match wins
  std::uint64_t seed = 0;
  // When set, each scheduled trial first reshuffles the cars: with this
  // probability both cars sit in the engine's city, otherwise car2 is away.
  std::optional<double> colocation;

  bool binds(std::string_view action) const {
    for (const auto& r : rules)
      if (r.action == action) return true;
    return false;
  }

  double probability(std::string_view action, const FeatureMap& conditions) const {
    bool bound = false;
    for (const auto& r : rules) {
      if (r.action != action) continue;
      bound = true;
      bool match = true;
      for (const auto& [k, v] : r.profile) {
        const auto it = conditions.find(k);
        if (it == conditions.end() || it->second != v) {
          match = false;
          break;
        }
      }
      if (match) return r.probability;
    }
    if (!bound) throw ConfigError("action '" + std::string(action) + "' is not bound in the outcome model");
    throw ConfigError("no outcome rule for action '" + std::string(action) + "' matches the current conditions");
  }
};

struct Execution {
  WorldState world;
  EventInstance instance;
  bool success = false;
};

/// Runs one action over the width-1 interval [clock, clock+1]. Success is
/// sampled from the model (or `forced_probability`); the emitted instance
/// carries the action's stamp, the starting conditions and the derived
/// couple feature: not coupled at the start of the interval, coupled at
/// its end.
inline Execution execute_action(const WorldState& world, const ActionSpec& action, const OutcomeModel& model,
                                Rng& rng, std::optional<double> forced_probability = std::nullopt) {
  const auto conditions = world.conditions();
  const double p = forced_probability ? *forced_probability : model.probability(action.name, conditions);
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("outcome probability outside [0,1]");
  const bool success = uniform01(rng) < p;

  Execution out{world, {}, success};
  const TimeInterval when(world.clock, world.clock + 1);
  const bool before = world.coupled;
  const bool after = before || success;
  out.world.coupled = after;
  out.world.clock = world.clock + 1;

  // Discrete ticks: the pre-action value occupies the interval from its
  // start, the post-action value up to its end.
  const TimeInterval before_state = when;
  const TimeInterval after_state = when;
  const bool couple = !before && after && holds_at_start(before_state, when) && holds_at_end(after_state, when);

  FeatureMap observed = action.try_event.features();
  for (const auto& [k, v] : conditions) {
    if (!observed.emplace(k, v).second) throw ConfigError("action stamp overrides condition feature '" + k + "'");
  }
  if (!observed.emplace("couple", couple ? "true" : "false").second)
    throw ConfigError("action stamp overrides the couple feature");
  out.instance = EventInstance{"t" + std::to_string(world.clock), when, std::move(observed)};
  return out;
}

// Moves car2 in or out of the engine's city for the next trial.
inline void reshuffle(WorldState& world, double colocation, Rng& rng) {
  const bool together = uniform01(rng) < colocation;
  world.car1_city = world.engine_city;
  world.car2_city = together ? world.engine_city : world.engine_city + "-away";
}

// ---- scenarios ------------------------------------------------------------

struct ScheduleStep {
  std::size_t line = 0;
  std::string verb;
  std::vector<std::string> positional;
  std::map<std::string, std::string> args;
  std::string text;
};

struct Scenario {
  std::string name = "scenario";
  WorldState world;
  Catalog catalog;
  std::vector<ActionSpec> actions;
  OutcomeModel model;
  std::vector<AdviceRule> rules;
  std::vector<ScheduleStep> schedule;

  const ActionSpec& action(std::string_view name) const {
    for (const auto& a : actions)
      if (a.name == name) return a;
    throw ConfigError("unknown action '" + std::string(name) + "'");
  }
};

struct AssertionResult {
  std::size_t line = 0;
  std::string command;
  std::string expected;
  std::string actual;
  bool passed = false;
};

struct ScenarioReport {
  std::vector<std::string> lines;
  std::vector<AssertionResult> assertions;

  std::size_t passed() const {
    std::size_t n = 0;
    for (const auto& a : assertions) n += a.passed ? 1 : 0;
    return n;
  }
  std::size_t total() const { return assertions.size(); }
  bool all_passed() const { return passed() == total(); }

  std::string summary() const {
    return std::to_string(passed()) + "/" + std::to_string(total()) + " assertions passed";
  }

  std::string text() const {
    std::string out;
    for (const auto& l : lines) out += l + "\n";
    return out;
  }
};

namespace detail {

inline bool parse_bool(const std::string& v, std::size_t line) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ParseError(line, "expected true or false, got '" + v + "'");
}

inline void set_world_field(WorldState& w, const std::string& key, const std::string& value, std::size_t line) {
  if (key == "engine-city") w.engine_city = value;
  else if (key == "car1-city") w.car1_city = value;
  else if (key == "car2-city") w.car2_city = value;
  else if (key == "car1-loaded") w.car1_loaded = parse_bool(value, line);
  else if (key == "car2-loaded") w.car2_loaded = parse_bool(value, line);
  else if (key == "coupled") w.coupled = parse_bool(value, line);
  else throw ParseError(line, "unknown world field '" + key + "'");
}

inline const std::string& require_arg(const ScheduleStep& s, const std::string& key) {
  const auto it = s.args.find(key);
  if (it == s.args.end()) throw ParseError(s.line, s.verb + ": missing " + key + "=");
  return it->second;
}

inline std::string arg_or(const ScheduleStep& s, const std::string& key, const std::string& fallback) {
  const auto it = s.args.find(key);
  return it == s.args.end() ? fallback : it->second;
}

inline double parse_alpha(const ScheduleStep& s) {
  const auto a = text::parse_double(arg_or(s, "alpha", "0.05"));
  if (!a || !(*a > 0.0 && *a < 1.0)) throw ParseError(s.line, "alpha must lie in (0,1)");
  return *a;
}

inline void validate_step(const Scenario& sc, const ScheduleStep& s) {
  const auto event = [&](const std::string& key, const std::string& fallback = "") {
    const auto name = fallback.empty() ? require_arg(s, key) : arg_or(s, key, fallback);
    if (!sc.catalog.find(name)) throw ParseError(s.line, "unknown event '" + name + "'");
  };
  const auto action_list = [&](const std::string& key) {
    for (const auto& a : text::split(require_arg(s, key), ','))
      if (std::none_of(sc.actions.begin(), sc.actions.end(), [&](const ActionSpec& x) { return x.name == a; }))
        throw ParseError(s.line, "unknown action '" + a + "'");
  };
  const auto known_action = [&](const std::string& a) {
    if (std::none_of(sc.actions.begin(), sc.actions.end(), [&](const ActionSpec& x) { return x.name == a; }))
      throw ParseError(s.line, "unknown action '" + a + "'");
  };

  if (s.verb == "set") {
    WorldState scratch;
    for (const auto& [k, v] : s.args) set_world_field(scratch, k, v, s.line);
  } else if (s.verb == "reset") {
  } else if (s.verb == "trial") {
    if (s.positional.size() != 2 || !text::parse_uint(s.positional[1]))
      throw ParseError(s.line, "usage: trial <action> <count> [outcome=success|failure]");
    known_action(s.positional[0]);
    const auto outcome = arg_or(s, "outcome", "sampled");
    if (outcome != "sampled" && outcome != "success" && outcome != "failure")
      throw ParseError(s.line, "outcome must be success or failure");
    if (outcome == "sampled" && !sc.model.binds(s.positional[0]))
      throw ParseError(s.line, "action '" + s.positional[0] + "' is not bound in the outcome model");
  } else if (s.verb == "pca") {
    event("goal");
    event("reference");
    event("context", "Any");
    parse_alpha(s);
  } else if (s.verb == "decide") {
    event("goal");
    event("context", "Any");
    action_list("actions");
    parse_alpha(s);
  } else if (s.verb == "preconditions") {
    event("goal");
    event("family");
    for (const auto& c : text::split(arg_or(s, "candidates", ""), ','))
      if (!c.empty() && !sc.catalog.find(c)) throw ParseError(s.line, "unknown event '" + c + "'");
    parse_alpha(s);
  } else if (s.verb == "adequate") {
    event("goal");
    event("context", "Any");
    action_list("actions");
    known_action(require_arg(s, "noop"));
    parse_alpha(s);
  } else if (s.verb == "until") {
    if (s.positional.size() != 1) throw ParseError(s.line, "usage: until <action> max=N upper-below=B goal=G ...");
    known_action(s.positional[0]);
    if (!sc.model.binds(s.positional[0]))
      throw ParseError(s.line, "action '" + s.positional[0] + "' is not bound in the outcome model");
    if (!text::parse_uint(require_arg(s, "max"))) throw ParseError(s.line, "max must be a count");
    if (!text::parse_double(require_arg(s, "upper-below"))) throw ParseError(s.line, "upper-below must be numeric");
    event("goal");
    event("reference");
    event("context", "Any");
    parse_alpha(s);
  } else {
    throw ParseError(s.line, "unknown schedule command '" + s.verb + "'");
  }
}

}  // namespace detail

/// Scenario file: [world], [catalog], [actions], [model], [rules] and
/// [schedule] sections. See scenarios/ for annotated examples.
inline Scenario parse_scenario(std::istream& in, std::string name = "scenario") {
  Scenario sc;
  sc.name = std::move(name);
  std::string section;
  std::vector<std::pair<std::size_t, std::string>> action_lines;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line(text::trim(text::strip_comment(raw)));
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = line.substr(1, line.size() - 2);
      if (section != "world" && section != "catalog" && section != "actions" && section != "model" &&
          section != "rules" && section != "schedule")
        throw ParseError(line_no, "unknown section [" + section + "]");
      continue;
    }
    if (section.empty()) throw ParseError(line_no, "content before the first section header");

    if (section == "world") {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ParseError(line_no, "expected field = value");
      detail::set_world_field(sc.world, std::string(text::trim(line.substr(0, eq))),
                              std::string(text::trim(line.substr(eq + 1))), line_no);
    } else if (section == "catalog") {
      sc.catalog.parse_line(line, line_no);
    } else if (section == "actions") {
      action_lines.emplace_back(line_no, line);
    } else if (section == "model") {
      const auto fields = text::split_ws(line);
      if (fields.size() == 3 && fields[1] == "=") {
        if (fields[0] == "seed") {
          const auto s = text::parse_uint(fields[2]);
          if (!s) throw ParseError(line_no, "seed must be an unsigned integer");
          sc.model.seed = *s;
        } else if (fields[0] == "colocation") {
          const auto p = text::parse_double(fields[2]);
          if (!p || *p < 0.0 || *p > 1.0) throw ParseError(line_no, "colocation must lie in [0,1]");
          sc.model.colocation = *p;
        } else {
          throw ParseError(line_no, "unknown model setting '" + fields[0] + "'");
        }
        continue;
      }
      if (fields.size() != 3) throw ParseError(line_no, "expected '<action> <profile|*> <probability>'");
      const auto p = text::parse_double(fields[2]);
      if (!p || *p < 0.0 || *p > 1.0) throw ParseError(line_no, "probability must lie in [0,1]");
      sc.model.rules.push_back(
          {fields[0], fields[1] == "*" ? FeatureMap{} : parse_feature_list(fields[1], line_no), *p});
    } else if (section == "rules") {
      add_rule(sc.rules, parse_rule_line(line, line_no), line_no);
    } else if (section == "schedule") {
      const auto tokens = text::split_ws(line);
      ScheduleStep step{line_no, tokens.front(), {}, {}, line};
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        const auto eq = tokens[i].find('=');
        if (eq == std::string::npos) {
          step.positional.push_back(tokens[i]);
        } else {
          step.args[tokens[i].substr(0, eq)] = tokens[i].substr(eq + 1);
        }
      }
      sc.schedule.push_back(std::move(step));
    }
  }

  for (const auto& [where, line] : action_lines) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw ParseError(where, "expected 'Action: TryEvent'");
    const std::string action(text::trim(std::string_view(line).substr(0, colon)));
    const std::string event(text::trim(std::string_view(line).substr(colon + 1)));
    const auto* e = sc.catalog.find(event);
    if (!e) throw ParseError(where, "unknown event '" + event + "'");
    if (e->is_any()) throw ParseError(where, "an action's reference event must constrain something");
    if (std::any_of(sc.actions.begin(), sc.actions.end(), [&](const ActionSpec& a) { return a.name == action; }))
      throw ParseError(where, "action '" + action + "' declared twice");
    sc.actions.push_back({action, *e});
  }
  for (const auto& s : sc.schedule) detail::validate_step(sc, s);
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  auto stem = path.substr(path.find_last_of('/') == std::string::npos ? 0 : path.find_last_of('/') + 1);
  if (const auto dot = stem.rfind('.'); dot != std::string::npos) stem.resize(dot);
  return parse_scenario(in, stem);
}

/// Executes the schedule against a fresh knowledge base, checking every
/// `expect=` and `until` assertion. Failed assertions are reported and the
/// run continues.
inline ScenarioReport run_scenario(const Scenario& sc, const ExactTable* table = nullptr) {
  ScenarioReport report;
  WorldState world = sc.world;
  OccurrenceStore store(sc.catalog);
  Rng rng(sc.model.seed);
  report.lines.push_back("scenario " + sc.name + " seed=" + std::to_string(sc.model.seed));

  const auto record = [&](const ScheduleStep& s, std::string expected, std::string actual) {
    const bool ok = expected == actual;
    report.assertions.push_back({s.line, s.verb, expected, actual, ok});
    report.lines.push_back("assert line " + std::to_string(s.line) + " " + (ok ? "PASS" : "FAIL") + " " + s.verb +
                           " expected=" + expected + " got=" + actual);
  };
  const auto actions_of = [&](const ScheduleStep& s) {
    std::vector<ActionSpec> out;
    for (const auto& a : text::split(detail::require_arg(s, "actions"), ',')) out.push_back(sc.action(a));
    return out;
  };
  const auto run_trial = [&](const ActionSpec& a, std::optional<double> forced) {
    if (sc.model.colocation) reshuffle(world, *sc.model.colocation, rng);
    world.coupled = false;
    auto ex = execute_action(world, a, sc.model, rng, forced);
    world = ex.world;
    store.ingest(std::move(ex.instance));
    return ex.success;
  };

  for (const auto& s : sc.schedule) {
    const double alpha = detail::parse_alpha(s);
    try {
      if (s.verb == "set") {
        for (const auto& [k, v] : s.args) detail::set_world_field(world, k, v, s.line);
        report.lines.push_back(s.text);
      } else if (s.verb == "reset") {
        store = OccurrenceStore(sc.catalog);
        report.lines.push_back("reset");
      } else if (s.verb == "trial") {
        const auto& a = sc.action(s.positional[0]);
        const auto count = *text::parse_uint(s.positional[1]);
        const auto outcome = detail::arg_or(s, "outcome", "sampled");
        std::optional<double> forced;
        if (outcome == "success") forced = 1.0;
        if (outcome == "failure") forced = 0.0;
        std::uint64_t successes = 0;
        for (std::uint64_t i = 0; i < count; ++i) successes += run_trial(a, forced) ? 1 : 0;
        report.lines.push_back("trial " + a.name + " x" + std::to_string(count) + " " + outcome +
                               " successes=" + std::to_string(successes));
      } else if (s.verb == "pca") {
        const PcaQuery q{sc.catalog.at(detail::require_arg(s, "goal")),
                         sc.catalog.at(detail::require_arg(s, "reference")),
                         sc.catalog.at(detail::arg_or(s, "context", "Any")), alpha};
        std::string got;
        try {
          const auto r = pca_detail(store, q, table);
          report.lines.push_back("pca " + format_pca(q.success.name() + "|" + q.reference.name() + "|" +
                                                         q.context.name(), r));
          got = format_interval(r.interval);
        } catch (const InsufficientData&) {
          report.lines.push_back("pca " + q.success.name() + "|" + q.reference.name() + "|" + q.context.name() +
                                 " insufficient-data");
          got = "insufficient-data";
        }
        if (s.args.contains("expect")) record(s, s.args.at("expect"), got);
      } else if (s.verb == "decide") {
        const auto& goal = sc.catalog.at(detail::require_arg(s, "goal"));
        const auto& context = sc.catalog.at(detail::arg_or(s, "context", "Any"));
        const auto actions = actions_of(s);
        const bool advice = detail::arg_or(s, "advice", "no") == "yes";
        const auto d = advice ? decide_with_advice(store, goal, context, alpha, actions, sc.rules, table)
                              : best_action(store, goal, context, alpha, actions, table);
        for (const auto& l : format_decision(d, goal, context, alpha)) report.lines.push_back(l);
        if (s.args.contains("expect")) {
          std::string got(to_string(d.verdict));
          if (d.decided()) got += ":" + d.action;
          record(s, s.args.at("expect"), got);
        }
      } else if (s.verb == "preconditions") {
        const auto& goal = sc.catalog.at(detail::require_arg(s, "goal"));
        const auto& family = sc.catalog.at(detail::require_arg(s, "family"));
        std::vector<Event> candidates;
        for (const auto& c : text::split(detail::arg_or(s, "candidates", ""), ','))
          if (!c.empty()) candidates.push_back(sc.catalog.at(c));
        const auto choice = select_preconditions(store, goal, family, candidates, alpha, table);
        for (const auto& l : format_preconditions(choice, goal, family, alpha)) report.lines.push_back(l);
        if (s.args.contains("expect")) record(s, s.args.at("expect"), choice.context.name());
      } else if (s.verb == "adequate") {
        const auto& goal = sc.catalog.at(detail::require_arg(s, "goal"));
        const auto& context = sc.catalog.at(detail::arg_or(s, "context", "Any"));
        const bool ok = single_action_adequate(store, goal, context, alpha, actions_of(s),
                                               sc.action(detail::require_arg(s, "noop")), table);
        report.lines.push_back(std::string("adequate ") + (ok ? "true" : "false"));
        if (s.args.contains("expect")) record(s, s.args.at("expect"), ok ? "true" : "false");
      } else if (s.verb == "until") {
        const auto& a = sc.action(s.positional[0]);
        const auto max = *text::parse_uint(detail::require_arg(s, "max"));
        const double bound = *text::parse_double(detail::require_arg(s, "upper-below"));
        const PcaQuery q{sc.catalog.at(detail::require_arg(s, "goal")),
                         sc.catalog.at(detail::require_arg(s, "reference")),
                         sc.catalog.at(detail::arg_or(s, "context", "Any")), alpha};
        std::optional<std::uint64_t> reached;
        std::optional<PcaResult> last;
        for (std::uint64_t i = 1; i <= max && !reached; ++i) {
          run_trial(a, std::nullopt);
          last = pca_detail(store, q, table);
          if (last->interval.hi < bound) reached = i;
        }
        const std::string label = q.success.name() + "|" + q.reference.name() + "|" + q.context.name();
        report.lines.push_back("until " + a.name + " " + (reached ? "reached" : "not reached") + " upper<" +
                               text::shortest(bound) + " after " +
                               std::to_string(reached ? *reached : max) + " trials");
        if (last) report.lines.push_back("  " + format_pca(label, *last));
        record(s, "upper<" + text::shortest(bound) + " within " + std::to_string(max),
               reached ? "upper<" + text::shortest(bound) + " within " + std::to_string(max)
                       : "upper=" + text::fixed(last ? last->interval.hi : 1.0, 4) + " after " + std::to_string(max));
      }
    } catch (const std::exception& e) {
      report.lines.push_back("error line " + std::to_string(s.line) + ": " + e.what());
      if (s.args.contains("expect") || s.verb == "until") record(s, detail::arg_or(s, "expect", "success"), "error");
    }
  }
  report.lines.push_back(report.summary());
  return report;
}

}  // namespace statplan
