#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "support.hpp"

using namespace statplan;

namespace {

const Event kAny = Event::any();
const Event kTry("Try", FeatureMap{{"kind", "try"}});
const Event kOld("Old-Try", FeatureMap{{"kind", "try"}, {"program", "Old"}});
const Event kNew("New-Try", FeatureMap{{"kind", "try"}, {"program", "New"}});
const Event kCouple("Couple", FeatureMap{{"couple", "true"}});

EventInstance instance(const std::string& program, bool couple) {
  return {"x", TimeInterval(0, 1), {{"kind", "try"}, {"program", program}, {"couple", couple ? "true" : "false"}}};
}

// Random event over a small schema so overlaps and conflicts are common.
Event random_event(std::mt19937_64& rng, const std::string& name) {
  static const char* keys[] = {"a", "b", "c", "d"};
  FeatureMap f;
  for (const char* k : keys) {
    const auto r = rng() % 4;
    if (r < 2) f.emplace(k, r == 0 ? "0" : "1");
  }
  return Event(name, f);
}

EventInstance random_instance(std::mt19937_64& rng) {
  FeatureMap f;
  for (const char* k : {"a", "b", "c", "d"}) f.emplace(k, rng() % 2 ? "1" : "0");
  return {"r", TimeInterval(0, 1), f};
}

}  // namespace

TEST(Event, AnyIsEmpty) {
  EXPECT_TRUE(kAny.is_any());
  EXPECT_EQ(kAny.name(), "Any");
  EXPECT_EQ(kOld.describe(), "Old-Try: kind=try, program=Old");
  EXPECT_THROW(Event("", FeatureMap{}), DomainError);
  EXPECT_THROW(Event("X", std::vector<Feature>{{"k", "1"}, {"k", "2"}}), DomainError);
}

TEST(Subsumes, Examples) {
  EXPECT_TRUE(subsumes(kAny, kOld));
  EXPECT_TRUE(subsumes(kTry, kOld));
  EXPECT_FALSE(subsumes(kOld, kTry));
  EXPECT_FALSE(subsumes(kOld, kNew));
}

TEST(Intersect, Examples) {
  const auto both = intersect(kCouple, kOld);
  ASSERT_TRUE(both);
  EXPECT_EQ(both->features(), (FeatureMap{{"couple", "true"}, {"kind", "try"}, {"program", "Old"}}));
  EXPECT_EQ(both->name(), "Couple&Old-Try");
  EXPECT_EQ(intersect(kAny, kOld), kOld);
  EXPECT_EQ(intersect(kTry, kOld), kOld);
  EXPECT_FALSE(intersect(kOld, kNew));
}

TEST(Satisfies, Examples) {
  EXPECT_TRUE(satisfies(instance("Old", true), kOld));
  EXPECT_TRUE(satisfies(instance("New", false), kAny));
  EXPECT_FALSE(satisfies(instance("New", true), kOld));
}

TEST(Classify, Examples) {
  const auto both = *intersect(kCouple, kOld);
  const std::vector<Event> catalog{kAny, kTry, kOld, kCouple, both};
  EXPECT_EQ(classify(instance("Old", true), catalog).size(), 5u);
  EXPECT_EQ(classify(instance("Old", false), catalog), (std::vector<Event>{kAny, kTry, kOld}));
  EXPECT_TRUE(classify(instance("Old", true), std::span<const Event>{}).empty());
}

TEST(EventLattice, SubsumptionIsPartialOrder) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 5000; ++i) {
    const auto a = random_event(rng, "A"), b = random_event(rng, "B"), c = random_event(rng, "C");
    EXPECT_TRUE(subsumes(a, a));
    if (subsumes(a, b) && subsumes(b, a)) {
      EXPECT_TRUE(same_features(a, b));
    }
    if (subsumes(a, b) && subsumes(b, c)) {
      EXPECT_TRUE(subsumes(a, c));
    }
  }
}

TEST(EventLattice, IntersectionLaws) {
  std::mt19937_64 rng(12);
  const auto feats = [](const std::optional<Event>& e) { return e ? std::optional(e->features()) : std::nullopt; };
  for (int i = 0; i < 5000; ++i) {
    const auto a = random_event(rng, "A"), b = random_event(rng, "B"), c = random_event(rng, "C");
    EXPECT_EQ(feats(intersect(a, b)), feats(intersect(b, a)));
    EXPECT_EQ(feats(intersect(a, a)), a.features());
    EXPECT_EQ(feats(intersect(kAny, a)), a.features());
    EXPECT_EQ(feats(intersect(a, kAny)), a.features());
    const auto ab = intersect(a, b), bc = intersect(b, c);
    const auto left = ab ? intersect(*ab, c) : std::nullopt;
    const auto right = bc ? intersect(a, *bc) : std::nullopt;
    EXPECT_EQ(feats(left), feats(right));
    // Galois link between the order and the meet.
    EXPECT_EQ(subsumes(a, b), ab && same_features(*ab, b));
  }
}

TEST(EventLattice, ClassificationMonotone) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 2000; ++i) {
    std::vector<Event> catalog{kAny};
    for (int k = 0; k < 8; ++k) catalog.push_back(random_event(rng, "E" + std::to_string(k)));
    const auto inst = random_instance(rng);
    const auto hits = classify(inst, catalog);
    for (const auto& f : catalog)
      for (const auto& e : hits)
        if (subsumes(f, e)) {
          EXPECT_NE(std::find(hits.begin(), hits.end(), f), hits.end());
        }
  }
}

TEST(Catalog, ParseAndWriteRoundTrip) {
  std::istringstream in("# comment\n@schema extra\nTry: kind=try\nOld-Try: kind=try, program=Old  # trailing\n");
  const auto c = Catalog::parse(in);
  EXPECT_EQ(c.size(), 3u);
  EXPECT_EQ(c.events().front(), Event::any());
  EXPECT_EQ(c.at("Old-Try"), kOld);
  EXPECT_EQ(c.schema(), (std::set<std::string>{"extra", "kind", "program"}));
  std::stringstream out;
  c.write(out);
  EXPECT_EQ(Catalog::parse(out), c);
}

TEST(Catalog, Errors) {
  Catalog c;
  c.add(kTry);
  EXPECT_THROW(c.add(kTry), DomainError);
  EXPECT_THROW(c.add(Event("Any", FeatureMap{{"k", "v"}})), DomainError);
  EXPECT_THROW(c.at("Nope"), ConfigError);
  std::istringstream bad("Try: kind=try\nBroken kind=try\n");
  try {
    Catalog::parse(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream twice("X: k=1, k=2\n");
  EXPECT_THROW(Catalog::parse(twice), ParseError);
}

TEST(Catalog, ValidateRequiresSchemaKeys) {
  Catalog c;
  c.add(kOld);
  EXPECT_NO_THROW(c.validate(instance("Old", true)));
  EXPECT_THROW(c.validate({"x", TimeInterval(0, 1), {{"kind", "try"}}}), DomainError);
}
