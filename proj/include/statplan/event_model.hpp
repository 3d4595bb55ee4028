#pragma once

// Events are named conjunctions of ground feature literals (key=value).
// A feature-subset relation gives subsumption: the event with fewer literals
// is the more general one and covers a superset of instances. The empty
// conjunction is Any.

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "statplan/error.hpp"
#include "statplan/temporal.hpp"
#include "statplan/text.hpp"

namespace statplan {

struct Feature {
  std::string key;
  std::string value;

  friend bool operator==(const Feature&, const Feature&) = default;
};

using FeatureMap = std::map<std::string, std::string>;

class Event {
 public:
  Event() : name_("Any") {}

  Event(std::string name, FeatureMap features) : name_(std::move(name)), features_(std::move(features)) {
    if (name_.empty()) throw DomainError("event name must not be empty");
  }

  Event(std::string name, const std::vector<Feature>& features) : Event(std::move(name), FeatureMap{}) {
    for (const auto& f : features) {
      const auto [it, inserted] = features_.emplace(f.key, f.value);
      if (!inserted && it->second != f.value)
        throw DomainError("event '" + name_ + "' binds feature '" + f.key + "' twice");
    }
  }

  static Event any() { return Event(); }

  const std::string& name() const { return name_; }
  const FeatureMap& features() const { return features_; }
  bool is_any() const { return features_.empty(); }

  Event renamed(std::string name) const { return Event(std::move(name), features_); }

  // "Old-Try: kind=try, program=Old"
  std::string describe() const {
    std::string out = name_ + ":";
    bool first = true;
    for (const auto& [k, v] : features_) {
      out += first ? " " : ", ";
      out += k + "=" + v;
      first = false;
    }
    return out;
  }

  friend bool operator==(const Event&, const Event&) = default;

 private:
  std::string name_;
  FeatureMap features_;
};

inline bool same_features(const Event& a, const Event& b) { return a.features() == b.features(); }

/// `general` subsumes `specific` when every literal of `general` also appears
/// in `specific`, so every instance of `specific` is an instance of `general`.
inline bool subsumes(const Event& general, const Event& specific) {
  const auto& spec = specific.features();
  for (const auto& [k, v] : general.features()) {
    const auto it = spec.find(k);
    if (it == spec.end() || it->second != v) return false;
  }
  return true;
}

/// Conjunction of both characterizations, or nullopt when a key is bound to
/// two different values (the empty event, which never occurs).
inline std::optional<Event> intersect(const Event& a, const Event& b) {
  if (subsumes(a, b)) return b;
  if (subsumes(b, a)) return a;
  FeatureMap merged = a.features();
  for (const auto& [k, v] : b.features()) {
    const auto [it, inserted] = merged.emplace(k, v);
    if (!inserted && it->second != v) return std::nullopt;
  }
  return Event(a.name() + "&" + b.name(), std::move(merged));
}

struct EventInstance {
  std::string id;
  TimeInterval time;
  FeatureMap observed;

  friend bool operator==(const EventInstance&, const EventInstance&) = default;
};

inline bool satisfies(const EventInstance& instance, const Event& event) {
  for (const auto& [k, v] : event.features()) {
    const auto it = instance.observed.find(k);
    if (it == instance.observed.end() || it->second != v) return false;
  }
  return true;
}

/// Every event in `catalog` the instance satisfies, in catalog order.
inline std::vector<Event> classify(const EventInstance& instance, std::span<const Event> catalog) {
  std::vector<Event> out;
  for (const auto& e : catalog)
    if (satisfies(instance, e)) out.push_back(e);
  return out;
}

// Features stamped on every instance produced by executing an action.
struct ActionBinding {
  std::string action;
  FeatureMap caused_features;
};

/// Parses "key=value, key=value". Used by the catalog format and elsewhere.
inline FeatureMap parse_feature_list(std::string_view body, std::size_t line_no) {
  FeatureMap out;
  if (text::trim(body).empty()) return out;
  for (const auto& item : text::split(body, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size())
      throw ParseError(line_no, "expected key=value, got '" + item + "'");
    std::string key(text::trim(std::string_view(item).substr(0, eq)));
    std::string value(text::trim(std::string_view(item).substr(eq + 1)));
    const auto [it, inserted] = out.emplace(key, value);
    if (!inserted && it->second != value) throw ParseError(line_no, "feature '" + key + "' bound twice");
  }
  return out;
}

/// Declared events over a feature schema. Any is always present at index 0.
///
/// File format, one declaration per line ('#' starts a comment):
///   @schema key, key, ...          optional; keys every instance must bind
///   Name: key=value, key=value     an event
/// Keys used by events are added to the schema implicitly.
class Catalog {
 public:
  Catalog() { events_.push_back(Event::any()); index_.emplace("Any", 0); }

  std::size_t add(Event event) {
    if (event.name() == "Any") {
      if (!event.is_any()) throw DomainError("the name Any is reserved for the unconstrained event");
      return 0;
    }
    if (index_.contains(event.name())) throw DomainError("event '" + event.name() + "' declared twice");
    for (const auto& [k, v] : event.features()) schema_.insert(k);
    index_.emplace(event.name(), events_.size());
    events_.push_back(std::move(event));
    return events_.size() - 1;
  }

  void declare_key(const std::string& key) { schema_.insert(key); }

  const std::vector<Event>& events() const { return events_; }
  const std::set<std::string>& schema() const { return schema_; }
  std::size_t size() const { return events_.size(); }

  const Event* find(std::string_view name) const {
    const auto it = index_.find(std::string(name));
    return it == index_.end() ? nullptr : &events_[it->second];
  }

  const Event& at(std::string_view name) const {
    if (const auto* e = find(name)) return *e;
    throw ConfigError("unknown event '" + std::string(name) + "'");
  }

  // First declared event with exactly these features.
  std::optional<std::size_t> index_of_features(const Event& e) const {
    for (std::size_t i = 0; i < events_.size(); ++i)
      if (same_features(events_[i], e)) return i;
    return std::nullopt;
  }

  std::optional<std::size_t> index_of(std::string_view name) const {
    const auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  void validate(const EventInstance& instance) const {
    for (const auto& key : schema_)
      if (!instance.observed.contains(key))
        throw DomainError("instance '" + instance.id + "' does not bind schema key '" + key + "'");
  }

  std::vector<std::size_t> matching(const EventInstance& instance) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < events_.size(); ++i)
      if (satisfies(instance, events_[i])) out.push_back(i);
    return out;
  }

  // Parses one declaration; returns false for blank/comment lines.
  bool parse_line(std::string_view raw, std::size_t line_no) {
    const auto line = text::trim(text::strip_comment(raw));
    if (line.empty()) return false;
    if (text::starts_with(line, "@schema")) {
      for (const auto& key : text::split(line.substr(7), ','))
        if (!key.empty()) schema_.insert(key);
      return true;
    }
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) throw ParseError(line_no, "expected 'Name: key=value, ...'");
    const std::string name(text::trim(line.substr(0, colon)));
    if (name.empty()) throw ParseError(line_no, "missing event name");
    try {
      add(Event(name, parse_feature_list(line.substr(colon + 1), line_no)));
    } catch (const DomainError& e) {
      throw ParseError(line_no, e.what());
    }
    return true;
  }

  static Catalog parse(std::istream& in) {
    Catalog catalog;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) catalog.parse_line(line, ++line_no);
    return catalog;
  }

  void write(std::ostream& out) const {
    if (!schema_.empty()) {
      out << "@schema";
      bool first = true;
      for (const auto& k : schema_) {
        out << (first ? " " : ", ") << k;
        first = false;
      }
      out << '\n';
    }
    for (const auto& e : events_)
      if (e.name() != "Any") out << e.describe() << '\n';
  }

  friend bool operator==(const Catalog& a, const Catalog& b) {
    return a.events_ == b.events_ && a.schema_ == b.schema_;
  }

 private:
  std::vector<Event> events_;
  std::unordered_map<std::string, std::size_t> index_;
  std::set<std::string> schema_;
};

}  // namespace statplan
