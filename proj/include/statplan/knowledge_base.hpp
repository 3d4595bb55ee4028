#pragma once

// Occurrence counting over a declared event catalog, plus the probability
// constraints computed from those counts.

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "statplan/error.hpp"
#include "statplan/event_model.hpp"
#include "statplan/interval_stats.hpp"
#include "statplan/text.hpp"

namespace statplan {

/// "id start end key=value key=value ..."
inline EventInstance parse_instance_line(std::string_view line, std::size_t line_no) {
  const auto fields = text::split_ws(text::trim(text::strip_comment(line)));
  if (fields.size() < 3) throw ParseError(line_no, "expected 'id start end key=value ...'");
  const auto start = text::parse_uint(fields[1]);
  const auto end = text::parse_uint(fields[2]);
  if (!start || !end) throw ParseError(line_no, "non-numeric tick");
  if (!(*start < *end)) throw ParseError(line_no, "instance time requires start < end");
  EventInstance inst{fields[0], TimeInterval(*start, *end), {}};
  for (std::size_t i = 3; i < fields.size(); ++i) {
    const auto eq = fields[i].find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == fields[i].size())
      throw ParseError(line_no, "expected key=value, got '" + fields[i] + "'");
    const auto key = fields[i].substr(0, eq);
    if (!inst.observed.emplace(key, fields[i].substr(eq + 1)).second)
      throw ParseError(line_no, "feature '" + key + "' observed twice");
  }
  return inst;
}

inline std::string format_instance(const EventInstance& inst) {
  std::string out = inst.id + " " + std::to_string(inst.time.start) + " " + std::to_string(inst.time.end);
  for (const auto& [k, v] : inst.observed) out += " " + k + "=" + v;
  return out;
}

class OccurrenceStore {
 public:
  OccurrenceStore() : OccurrenceStore(Catalog{}) {}
  explicit OccurrenceStore(Catalog catalog)
      : catalog_(std::make_shared<const Catalog>(std::move(catalog))), counts_(catalog_->size(), 0) {}

  /// Appends the instance to the log and increments every catalog event it
  /// satisfies. Rejects ids already in the log.
  void ingest(EventInstance instance) {
    catalog_->validate(instance);
    if (ids_.contains(instance.id)) throw DomainError("duplicate instance id '" + instance.id + "'");
    for (const auto i : catalog_->matching(instance)) ++counts_[i];
    ids_.insert(instance.id);
    log_.push_back(std::move(instance));
  }

  const Catalog& catalog() const { return *catalog_; }
  const std::vector<EventInstance>& log() const { return log_; }
  std::size_t log_size() const { return log_.size(); }

  std::uint64_t count(std::string_view event_name) const {
    const auto idx = catalog_->index_of(event_name);
    if (!idx) throw ConfigError("unknown event '" + std::string(event_name) + "'");
    return counts_[*idx];
  }

  /// Occurrences of an arbitrary event. Declared events (matched by feature
  /// set) read the maintained counter; anything else is counted from the log.
  std::uint64_t count(const Event& event) const {
    if (const auto idx = catalog_->index_of_features(event)) return counts_[*idx];
    std::uint64_t n = 0;
    for (const auto& inst : log_)
      if (satisfies(inst, event)) ++n;
    return n;
  }

  std::uint64_t count(const std::optional<Event>& event) const { return event ? count(*event) : 0; }

  // Declared-event counters in catalog order.
  std::vector<std::pair<std::string, std::uint64_t>> counts() const {
    std::vector<std::pair<std::string, std::uint64_t>> out;
    for (std::size_t i = 0; i < catalog_->size(); ++i) out.emplace_back(catalog_->events()[i].name(), counts_[i]);
    return out;
  }

  // Counters recomputed from scratch by replaying the log.
  std::vector<std::uint64_t> replayed_counts() const {
    std::vector<std::uint64_t> out(catalog_->size(), 0);
    for (const auto& inst : log_)
      for (const auto i : catalog_->matching(inst)) ++out[i];
    return out;
  }

  friend bool operator==(const OccurrenceStore& a, const OccurrenceStore& b) {
    return *a.catalog_ == *b.catalog_ && a.counts_ == b.counts_ && a.log_ == b.log_;
  }

 private:
  std::shared_ptr<const Catalog> catalog_;
  std::vector<std::uint64_t> counts_;
  std::vector<EventInstance> log_;
  std::unordered_set<std::string> ids_;
};

inline OccurrenceStore ingest(OccurrenceStore store, EventInstance instance) {
  store.ingest(std::move(instance));
  return store;
}

// Frozen copy for consistent multi-query decisions.
inline OccurrenceStore snapshot(const OccurrenceStore& store) { return store; }

struct PcaQuery {
  Event success;
  Event reference;
  Event context = Event::any();
  double alpha = 0.05;
};

struct PcaResult {
  TrialCounts counts;
  ProbInterval interval;
};

/// Interval for the success event given the reference event in the given
/// context, from n = occurrences(reference & context) and
/// y = occurrences(reference & success & context).
inline PcaResult pca_detail(const OccurrenceStore& store, const PcaQuery& q, const ExactTable* table = nullptr) {
  const auto trials = intersect(q.reference, q.context);
  const std::uint64_t n = store.count(trials);
  if (n == 0)
    throw InsufficientData("no occurrences of " + q.reference.name() + " in context " + q.context.name());
  const auto successes = intersect(*trials, q.success);
  const std::uint64_t y = store.count(successes);
  const TrialCounts counts(n, y);
  return {counts, interval_for(counts, q.alpha, table)};
}

inline ProbInterval pca(const OccurrenceStore& store, const PcaQuery& q, const ExactTable* table = nullptr) {
  return pca_detail(store, q, table).interval;
}

// Single writer, many readers. Readers work on snapshots so they never see a
// half-applied ingest.
class SharedStore {
 public:
  explicit SharedStore(OccurrenceStore store) : store_(std::move(store)) {}

  void ingest(EventInstance instance) {
    std::unique_lock lock(mutex_);
    store_.ingest(std::move(instance));
  }

  OccurrenceStore snapshot() const {
    std::shared_lock lock(mutex_);
    return store_;
  }

 private:
  mutable std::shared_mutex mutex_;
  OccurrenceStore store_;
};

// Knowledge-base file: [catalog], [log] and [counts] sections.
inline void write_store(const OccurrenceStore& store, std::ostream& out) {
  out << "[catalog]\n";
  store.catalog().write(out);
  out << "[log]\n";
  for (const auto& inst : store.log()) out << format_instance(inst) << '\n';
  out << "[counts]\n";
  for (const auto& [name, n] : store.counts()) out << name << ' ' << n << '\n';
}

/// Parses a knowledge-base file and verifies the stored counts against a
/// replay of the log. An empty input yields an empty store.
inline OccurrenceStore read_store(std::istream& in) {
  enum class Section { none, catalog, log, counts };
  Section section = Section::none;
  Catalog catalog;
  std::vector<std::pair<std::size_t, EventInstance>> log;
  std::map<std::string, std::pair<std::size_t, std::uint64_t>> stored;
  bool saw_counts = false;
  bool saw_any_section = false;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::trim(text::strip_comment(raw));
    if (line.empty()) continue;
    if (line == "[catalog]") { section = Section::catalog; saw_any_section = true; continue; }
    if (line == "[log]") { section = Section::log; saw_any_section = true; continue; }
    if (line == "[counts]") { section = Section::counts; saw_any_section = true; saw_counts = true; continue; }
    switch (section) {
      case Section::none:
        throw ParseError(line_no, "content before the first section header");
      case Section::catalog:
        catalog.parse_line(line, line_no);
        break;
      case Section::log:
        log.emplace_back(line_no, parse_instance_line(line, line_no));
        break;
      case Section::counts: {
        const auto fields = text::split_ws(line);
        const auto n = fields.size() == 2 ? text::parse_uint(fields[1]) : std::nullopt;
        if (!n) throw ParseError(line_no, "expected 'EventName count'");
        if (!stored.emplace(fields[0], std::pair{line_no, *n}).second)
          throw ParseError(line_no, "count for '" + fields[0] + "' listed twice");
        break;
      }
    }
  }

  OccurrenceStore store(std::move(catalog));
  for (auto& [where, inst] : log) {
    try {
      store.ingest(std::move(inst));
    } catch (const DomainError& e) {
      throw ParseError(where, e.what());
    }
  }
  if (!saw_any_section) return store;
  if (!saw_counts) throw IntegrityError("knowledge base has no [counts] verification block");

  for (const auto& [name, n] : store.counts()) {
    const auto it = stored.find(name);
    if (it == stored.end()) throw IntegrityError("no stored count for event '" + name + "'");
    if (it->second.second != n)
      throw IntegrityError("line " + std::to_string(it->second.first) + ": stored count " +
                           std::to_string(it->second.second) + " for '" + name + "' but log replay gives " +
                           std::to_string(n));
    stored.erase(it);
  }
  if (!stored.empty()) {
    const auto& [name, where] = *stored.begin();
    throw ParseError(where.first, "count for undeclared event '" + name + "'");
  }
  return store;
}

inline void save(const OccurrenceStore& store, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_store(store, out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline OccurrenceStore load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return read_store(in);
}

}  // namespace statplan
