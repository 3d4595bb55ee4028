#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>
#include <thread>

#include "support.hpp"

using namespace statplan;
using fixture::rail_catalog;
using fixture::store_with;

namespace {

EventInstance random_instance(std::mt19937_64& rng, std::size_t i) {
  const auto pick = [&](std::initializer_list<const char*> v) { return std::string(*(v.begin() + rng() % v.size())); };
  return {"r" + std::to_string(i), TimeInterval(i, i + 1 + rng() % 3),
          {{"kind", pick({"try", "idle"})},
           {"program", pick({"Old", "New", "Noop"})},
           {"couple", pick({"true", "false"})},
           {"same-city", pick({"true", "false"})},
           {"car1-loaded", pick({"true", "false"})},
           {"car2-loaded", pick({"true", "false"})}}};
}

void expect_subsumption_monotone(const OccurrenceStore& s) {
  const auto& events = s.catalog().events();
  for (const auto& f : events)
    for (const auto& e : events)
      if (subsumes(f, e)) {
        ASSERT_GE(s.count(f.name()), s.count(e.name())) << f.name() << " vs " << e.name();
      }
}

}  // namespace

TEST(Ingest, ReferenceCounts) {
  const auto s = store_with({{"Old", 500, 500}});
  EXPECT_EQ(s.count("Old-Try"), 1000u);
  const auto& c = s.catalog();
  EXPECT_EQ(s.count(intersect(c.at("Couple"), c.at("Old-Try"))), 500u);
  EXPECT_EQ(s.count("Any"), 1000u);
}

TEST(Ingest, EmptyStoreAndNonMatchingInstance) {
  OccurrenceStore s(rail_catalog());
  s.ingest({"a", TimeInterval(0, 1),
            {{"kind", "idle"}, {"program", "X"}, {"couple", "false"}, {"same-city", "false"},
             {"car1-loaded", "false"}, {"car2-loaded", "false"}}});
  for (const auto& [name, n] : s.counts()) EXPECT_EQ(n, name == "Any" ? 1u : 0u) << name;
}

TEST(Ingest, RejectsDuplicateIdAndMissingKeys) {
  auto s = store_with({{"Old", 1, 0}});
  auto again = s.log().front();
  EXPECT_THROW(s.ingest(again), DomainError);
  EXPECT_THROW(s.ingest({"b", TimeInterval(0, 1), {{"kind", "try"}}}), DomainError);
  EXPECT_EQ(s.log_size(), 1u);
}

TEST(Ingest, FreeFunctionLeavesInputUntouched) {
  const auto s = store_with({{"Old", 1, 0}});
  auto inst = s.log().front();
  inst.id = "fresh";
  const auto t = ingest(s, inst);
  EXPECT_EQ(s.log_size(), 1u);
  EXPECT_EQ(t.log_size(), 2u);
}

TEST(Count, UndeclaredEventsScanTheLog) {
  const auto s = store_with({{"Old", 3, 2}, {"New", 1, 4}});
  const Event adhoc("adhoc", FeatureMap{{"program", "New"}, {"couple", "false"}});
  EXPECT_EQ(s.count(adhoc), 4u);
  EXPECT_EQ(s.count(std::optional<Event>{}), 0u);
  EXPECT_THROW(s.count("Nope"), ConfigError);
}

TEST(Pca, ReferenceExamples) {
  const auto s = fixture::precondition_store();
  const auto& c = s.catalog();
  const auto old_only = store_with({{"Old", 500, 500}, {"New", 1, 1}});
  EXPECT_EQ(format_interval(pca(old_only, {c.at("Couple"), c.at("Old-Try")})), "[0.4691,0.5309]");
  const auto r = pca_detail(old_only, {c.at("Couple"), c.at("New-Try")});
  EXPECT_EQ(r.counts, TrialCounts(2, 1));
  EXPECT_NEAR(r.interval.lo, 0.025321, 1e-6);

  const auto pre = pca_detail(s, {c.at("Couple"), c.at("Try"), c.at("Pre-Try")});
  EXPECT_EQ(pre.counts, TrialCounts(800, 501));
  EXPECT_EQ(format_interval(pre.interval), "[0.5922,0.6591]");
  const auto pre2 = pca_detail(s, {c.at("Couple"), c.at("Try"), c.at("Pre-Try2")});
  EXPECT_EQ(pre2.counts, TrialCounts(100, 75));
  EXPECT_EQ(format_interval(pre2.interval), "[0.6570,0.8245]");
}

TEST(Pca, NoTrialsIsAnError) {
  const auto s = store_with({{"Old", 5, 5}});
  const auto& c = s.catalog();
  EXPECT_THROW(pca(s, {c.at("Couple"), c.at("New-Try")}), InsufficientData);
  // Contradictory reference and context: the empty event never occurs.
  EXPECT_THROW(pca(s, {c.at("Couple"), c.at("Old-Try"), c.at("New-Try")}), InsufficientData);
}

TEST(Pca, WideningContextNeverShrinksN) {
  const auto s = fixture::precondition_store();
  const auto& c = s.catalog();
  const auto n = [&](const char* ctx) { return pca_detail(s, {c.at("Couple"), c.at("Try"), c.at(ctx)}).counts.n; };
  EXPECT_GE(n("Pre-Try"), n("Pre-Try2"));
  EXPECT_GE(n("Any"), n("Pre-Try"));
}

TEST(Snapshot, IsIsolated) {
  auto s = store_with({{"Old", 2, 2}});
  const auto snap = snapshot(s);
  fixture::add(s, {"Old", 1, 0});
  EXPECT_EQ(snap.count("Old-Try"), 4u);
  EXPECT_EQ(s.count("Old-Try"), 5u);
  EXPECT_EQ(snapshot(s), snapshot(s));
  for (const auto& [name, n] : snapshot(OccurrenceStore(rail_catalog())).counts()) EXPECT_EQ(n, 0u);
}

TEST(Persistence, RoundTrip) {
  const auto s = fixture::precondition_store();
  std::stringstream buf;
  write_store(s, buf);
  EXPECT_EQ(read_store(buf), s);

  const auto path = (std::filesystem::temp_directory_path() / "statplan_kb_roundtrip.txt").string();
  save(s, path);
  EXPECT_EQ(load(path), s);
  std::filesystem::remove(path);
}

TEST(Persistence, EmptyFileGivesEmptyStore) {
  std::istringstream in("");
  const auto s = read_store(in);
  EXPECT_EQ(s.catalog().size(), 1u);
  EXPECT_EQ(s.count("Any"), 0u);
}

TEST(Persistence, TamperedCountIsDetected) {
  std::stringstream buf;
  write_store(store_with({{"Old", 3, 1}}), buf);
  auto text = buf.str();
  const auto at = text.find("Couple 3");
  ASSERT_NE(at, std::string::npos);
  text.replace(at, 8, "Couple 4");
  std::istringstream in(text);
  try {
    read_store(in);
    FAIL() << "expected IntegrityError";
  } catch (const IntegrityError& e) {
    EXPECT_NE(std::string(e.what()).find("stored count 4 for 'Couple' but log replay gives 3"), std::string::npos);
  }
}

TEST(Persistence, StructuralErrors) {
  std::istringstream no_counts("[catalog]\nTry: kind=try\n[log]\n");
  EXPECT_THROW(read_store(no_counts), IntegrityError);
  std::istringstream orphan("Try: kind=try\n");
  EXPECT_THROW(read_store(orphan), ParseError);
  std::istringstream bad_line("[catalog]\nTry: kind=try\n[log]\nx 5 2 kind=try\n[counts]\n");
  try {
    read_store(bad_line);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
  std::istringstream unknown("[catalog]\n[log]\n[counts]\nAny 0\nGhost 1\n");
  EXPECT_THROW(read_store(unknown), ParseError);
}

TEST(InstanceLine, ParseAndFormat) {
  const auto inst = parse_instance_line("t7 7 8 kind=try program=Old  # note", 1);
  EXPECT_EQ(inst.id, "t7");
  EXPECT_EQ(inst.time, TimeInterval(7, 8));
  EXPECT_EQ(format_instance(inst), "t7 7 8 kind=try program=Old");
  EXPECT_THROW(parse_instance_line("t7 7", 1), ParseError);
  EXPECT_THROW(parse_instance_line("t7 x 8", 1), ParseError);
  EXPECT_THROW(parse_instance_line("t7 8 8", 1), ParseError);
  EXPECT_THROW(parse_instance_line("t7 7 8 kind", 1), ParseError);
  EXPECT_THROW(parse_instance_line("t7 7 8 k=1 k=2", 1), ParseError);
}

// ---- properties --------------------------------------------------------

TEST(StoreProperties, CountsMonotoneUnderRandomIngest) {
  std::mt19937_64 rng(21);
  OccurrenceStore s(rail_catalog());
  std::vector<std::uint64_t> previous(s.catalog().size(), 0);
  for (std::size_t i = 0; i < 10000; ++i) {
    s.ingest(random_instance(rng, i));
    const auto now = s.counts();
    for (std::size_t k = 0; k < now.size(); ++k) {
      ASSERT_GE(now[k].second, previous[k]);
      previous[k] = now[k].second;
    }
    if (i % 500 == 0) expect_subsumption_monotone(s);
  }
  expect_subsumption_monotone(s);
  EXPECT_EQ(s.count("Any"), s.log_size());
}

TEST(StoreProperties, ReplayDeterminism) {
  std::mt19937_64 rng(22);
  std::vector<EventInstance> stream;
  for (std::size_t i = 0; i < 3000; ++i) stream.push_back(random_instance(rng, i));
  OccurrenceStore a(rail_catalog()), b(rail_catalog());
  for (const auto& inst : stream) a.ingest(inst);
  for (const auto& inst : stream) b.ingest(inst);
  EXPECT_EQ(a, b);
  std::vector<std::uint64_t> maintained;
  for (const auto& [name, n] : a.counts()) maintained.push_back(n);
  EXPECT_EQ(maintained, a.replayed_counts());
  for (const auto& e : a.catalog().events()) {
    std::uint64_t scanned = 0;
    for (const auto& inst : stream) scanned += satisfies(inst, e) ? 1 : 0;
    EXPECT_EQ(a.count(e.name()), scanned) << e.name();
  }
}

TEST(StoreProperties, RandomRoundTrips) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    OccurrenceStore s(rail_catalog());
    const auto n = rng() % 200;
    for (std::size_t i = 0; i < n; ++i) s.ingest(random_instance(rng, i));
    std::stringstream buf;
    write_store(s, buf);
    EXPECT_EQ(read_store(buf), s);
  }
}

TEST(SharedStore, ReadersSeeConsistentSnapshots) {
  SharedStore shared{OccurrenceStore(rail_catalog())};
  std::atomic<bool> done{false};
  std::atomic<int> violations{0};
  std::thread writer([&] {
    std::mt19937_64 rng(24);
    for (std::size_t i = 0; i < 2000; ++i) shared.ingest(random_instance(rng, i));
    done = true;
  });
  std::vector<std::thread> readers;
  for (int r = 0; r < 3; ++r)
    readers.emplace_back([&] {
      while (!done) {
        const auto snap = shared.snapshot();
        if (snap.count("Any") != snap.log_size()) ++violations;
        std::uint64_t tries = snap.count("Old-Try") + snap.count("New-Try") + snap.count("Noop-Try");
        if (snap.count("Try") != tries) ++violations;
      }
    });
  writer.join();
  for (auto& t : readers) t.join();
  EXPECT_EQ(violations.load(), 0);
  EXPECT_EQ(shared.snapshot().log_size(), 2000u);
}
