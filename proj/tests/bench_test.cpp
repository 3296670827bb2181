#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "generators.hpp"
#include "pbfd/bench.hpp"

namespace pbfd::bench {
namespace {

std::shared_ptr<const Hierarchy> shared_sample() {
  static const auto h = std::make_shared<const Hierarchy>(load_hierarchy(testing::sample_hierarchy_path()));
  return h;
}

TEST(Summarize, HandExamples) {
  const std::vector<std::int64_t> two{2, 4};
  EXPECT_DOUBLE_EQ(summarize(two).mean, 3.0);
  EXPECT_EQ(summarize(two).median, 2);

  std::vector<std::int64_t> hundred(100);
  std::iota(hundred.begin(), hundred.end(), 1);
  std::shuffle(hundred.begin(), hundred.end(), std::mt19937_64(1));
  const Stats s = summarize(hundred);
  EXPECT_EQ(s.p95, 95);
  EXPECT_EQ(s.median, 50);
  EXPECT_EQ(s.min, 1);
  EXPECT_EQ(s.max, 100);

  const std::vector<std::int64_t> one{7};
  EXPECT_DOUBLE_EQ(summarize(one).mean, 7.0);
  EXPECT_EQ(summarize(one).median, 7);
  EXPECT_EQ(summarize(one).p95, 7);

  EXPECT_THROW(summarize(std::vector<std::int64_t>{}), std::invalid_argument);
}

TEST(Summarize, NearestRankSmallSamples) {
  // ceil(0.95 n): n=19 -> 19th, n=20 -> 19th, n=21 -> 20th.
  for (auto [n, rank] : {std::pair{19, 19}, {20, 19}, {21, 20}, {1, 1}, {2, 2}}) {
    std::vector<std::int64_t> v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), 1);
    EXPECT_EQ(summarize(v).p95, rank) << n;
  }
}

TEST(Summarize, OrderingProperty) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::int64_t> v(std::uniform_int_distribution<std::size_t>(1, 200)(rng));
    for (auto& x : v) x = std::uniform_int_distribution<std::int64_t>(0, 1'000'000)(rng);
    const Stats s = summarize(v);
    EXPECT_LE(s.min, s.median);
    EXPECT_LE(s.median, s.p95);
    EXPECT_LE(s.p95, s.max);
    EXPECT_GE(s.mean, static_cast<double>(s.min));
    EXPECT_LE(s.mean, static_cast<double>(s.max));
  }
}

TEST(Workload, DensityExtremes) {
  const Hierarchy& h = *shared_sample();
  for (const Visit& v : generate_workload(h, 1, 20, 0.0).visits) {
    EXPECT_TRUE(v.paths.empty());
    EXPECT_EQ(v.reasons, 0u);
  }
  for (const Visit& v : generate_workload(h, 1, 20, 1.0).visits) {
    EXPECT_EQ(v.paths.size(), h.vertex_count());
    EXPECT_EQ(v.reasons, h.reasons_mask());
  }
  EXPECT_THROW(generate_workload(h, 1, 1, -0.1), std::invalid_argument);
  EXPECT_THROW(generate_workload(h, 1, 1, 1.5), std::invalid_argument);
}

TEST(Workload, DeterministicAndUpwardClosed) {
  const Hierarchy& h = *shared_sample();
  const Workload a = generate_workload(h, 42, 100, 0.5);
  const Workload b = generate_workload(h, 42, 100, 0.5);
  EXPECT_EQ(a.serialize(), b.serialize());
  EXPECT_EQ(a.id(), b.id());
  EXPECT_NE(a.serialize(), generate_workload(h, 43, 100, 0.5).serialize());
  for (const Visit& v : a.visits) EXPECT_TRUE(is_upward_closed(v.paths));
}

TEST(Run, RowCountsAndGate) {
  const auto h = shared_sample();
  const Workload w = generate_workload(*h, 9, 30, 0.5);
  for (BackendKind kind : {BackendKind::pbfd, BackendKind::traditional}) {
    auto target = make_target(kind, h, ":memory:");
    const auto results = run(*target, *h, w);
    ASSERT_EQ(results.size(), 3u);
    EXPECT_EQ(results[0].op, Op::write);
    EXPECT_EQ(results[2].op, Op::report);
    for (const auto& r : results) {
      EXPECT_EQ(r.latencies_ns.size(), 30u);
      ASSERT_TRUE(r.stats.has_value());
      EXPECT_EQ(r.stats->p95, summarize(r.latencies_ns).p95);
    }
  }
}

TEST(Run, WriteRowDeltas) {
  const auto h = shared_sample();
  const Visit visit{{"Asia", "Asia/China", "Europe"}, 0b0110};
  auto wide = make_target(BackendKind::pbfd, h, ":memory:");
  auto trad = make_target(BackendKind::traditional, h, ":memory:");
  EXPECT_EQ(wide->write(wide->add_person("a"), visit), 1);
  EXPECT_EQ(trad->write(trad->add_person("a"), visit), 3 + 2);
  EXPECT_EQ(wide->storage().row_counts.at("VisitedLocation"), 1);
  EXPECT_EQ(trad->storage().row_counts.at("VisitedPlace"), 3);
  EXPECT_EQ(trad->storage().row_counts.at("PlaceReason"), 2);
}

TEST(Run, EmptyWorkloadHasNoStats) {
  const auto h = shared_sample();
  auto target = make_target(BackendKind::pbfd, h, ":memory:");
  const auto results = run(*target, *h, generate_workload(*h, 1, 0, 0.5));
  for (const auto& r : results) {
    EXPECT_TRUE(r.latencies_ns.empty());
    EXPECT_FALSE(r.stats.has_value());
  }
}

TEST(Run, GateCatchesWrongAnswers) {
  class Lossy final : public Target {
   public:
    explicit Lossy(std::unique_ptr<Target> inner) : inner_(std::move(inner)) {}
    BackendKind kind() const override { return inner_->kind(); }
    PersonId add_person(std::string_view n) override { return inner_->add_person(n); }
    int write(PersonId p, const Visit& v) override { return inner_->write(p, v); }
    Visit read(PersonId p) override {
      Visit v = inner_->read(p);
      v.reasons ^= 1;
      return v;
    }
    std::vector<ReportRow> report(PersonId p) override { return inner_->report(p); }
    StorageReport storage() override { return inner_->storage(); }

   private:
    std::unique_ptr<Target> inner_;
  };
  const auto h = shared_sample();
  Lossy lossy(make_target(BackendKind::traditional, h, ":memory:"));
  EXPECT_THROW(run(lossy, *h, generate_workload(*h, 1, 5, 0.5)), CorrectnessError);
}

TEST(Run, ThreadedModeKeepsTheGate) {
  const auto h = shared_sample();
  const Workload w = generate_workload(*h, 5, 64, 0.5);
  auto target = make_target(BackendKind::traditional, h, ":memory:");
  EXPECT_EQ(run(*target, *h, w, 4)[0].latencies_ns.size(), 64u);
}

TEST(Compare, IdenticalLatenciesGiveUnitRatios) {
  const std::vector<std::int64_t> lat{10, 20, 30};
  BenchResult t{BackendKind::traditional, Op::write, "w", lat, summarize(lat), {}};
  BenchResult p = t;
  p.backend = BackendKind::pbfd;
  t.storage.logical_bytes = 500;
  p.storage.logical_bytes = 500;
  const auto report = compare(std::vector{t}, std::vector{p});
  ASSERT_EQ(report.speed.size(), 1u);
  EXPECT_DOUBLE_EQ(report.speed[0].mean, 1.0);
  EXPECT_DOUBLE_EQ(report.speed[0].median, 1.0);
  EXPECT_DOUBLE_EQ(report.speed[0].p95, 1.0);
  EXPECT_DOUBLE_EQ(report.storage_ratio, 1.0);

  p.workload_id = "other";
  EXPECT_THROW(compare(std::vector{t}, std::vector{p}), std::invalid_argument);
}

TEST(Compare, StorageRatioOnHandCountedWorkload) {
  const auto h = shared_sample();
  Workload w;
  w.hierarchy_digest = "hand";
  w.visitors = 2;
  w.visits = {Visit{{"Asia", "Asia/Japan"}, 1}, Visit{{"Europe"}, 0}};
  auto wide = make_target(BackendKind::pbfd, h, ":memory:");
  auto trad = make_target(BackendKind::traditional, h, ":memory:");
  const auto rw = run(*wide, *h, w);
  const auto rt = run(*trad, *h, w);

  // Lookups: 7 + 5+1+5+4+5+3+5 + 4+5 + 3+4 + 3+3 = 57 vertex rows, 4 reasons.
  const std::uint64_t person = 8 + 100;
  const std::uint64_t wide_bytes = 2 * person + 2 * 17 * 8 + (57 + 4) * person;
  // Locations: 57 x (8+8+100+50); visits 3 x 16; reasons 1 x 16 + 4 x 108.
  const std::uint64_t trad_bytes = 2 * person + 57 * 166 + 3 * 16 + 4 * person + 1 * 16;
  EXPECT_EQ(rw[0].storage.logical_bytes, wide_bytes);
  EXPECT_EQ(rt[0].storage.logical_bytes, trad_bytes);
  EXPECT_DOUBLE_EQ(compare(rt, rw).storage_ratio, static_cast<double>(trad_bytes) / static_cast<double>(wide_bytes));
}

TEST(Compare, RenderCitesReferenceRatios) {
  ComparisonReport report;
  report.speed.push_back({Op::write, 2.0, 2.0, 2.0});
  report.storage_ratio = 1.5;
  const std::string text = render(report);
  EXPECT_NE(text.find("7-8x"), std::string::npos);
  EXPECT_NE(text.find("~11x"), std::string::npos);
  EXPECT_NE(text.find("1.50x"), std::string::npos);
}

std::string drop_timing_columns(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (i < 3 || i > 5) out << cells[i] << ',';
    out << '\n';
  }
  return out.str();
}

TEST(Csv, HeaderAndStableNonTimingColumns) {
  const auto h = shared_sample();
  const auto once = [&] {
    const Workload w = generate_workload(*h, 42, 40, 0.5);
    auto trad = make_target(BackendKind::traditional, h, ":memory:");
    auto wide = make_target(BackendKind::pbfd, h, ":memory:");
    auto results = run(*trad, *h, w);
    auto more = run(*wide, *h, w);
    results.insert(results.end(), more.begin(), more.end());
    // physical_bytes of an in-memory database is 0; keep it in the comparison anyway.
    return to_csv(results);
  };
  const std::string a = once();
  EXPECT_EQ(a.substr(0, a.find('\n')), kCsvHeader);
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 7);
  EXPECT_EQ(drop_timing_columns(a), drop_timing_columns(once()));
}

TEST(Csv, EmptyResultsWriteHeaderOnly) {
  const auto file = std::filesystem::temp_directory_path() / "pbfd_bench_empty.csv";
  write_csv({}, file);
  std::ifstream in(file);
  std::stringstream content;
  content << in.rdbuf();
  EXPECT_EQ(content.str(), std::string{kCsvHeader} + "\n");
  std::filesystem::remove(file);
  EXPECT_THROW(write_csv({}, "/nonexistent-dir/x.csv"), std::runtime_error);
}

TEST(Storage, PerVisitorCostShape) {
  // Constant for the wide table; non-decreasing in the visit count for the baseline.
  const auto h = shared_sample();
  std::vector<double> wide_cost, trad_cost;
  for (double density : {0.2, 0.5, 0.8}) {
    const Workload w = generate_workload(*h, 42, 200, density);
    auto wide = make_target(BackendKind::pbfd, h, ":memory:");
    auto trad = make_target(BackendKind::traditional, h, ":memory:");
    const auto empty_wide = wide->storage().logical_bytes;
    const auto empty_trad = trad->storage().logical_bytes;
    run(*wide, *h, w);
    run(*trad, *h, w);
    wide_cost.push_back(static_cast<double>(wide->storage().logical_bytes - empty_wide) / 200.0);
    trad_cost.push_back(static_cast<double>(trad->storage().logical_bytes - empty_trad) / 200.0);
  }
  EXPECT_DOUBLE_EQ(wide_cost[0], wide_cost[1]);
  EXPECT_DOUBLE_EQ(wide_cost[1], wide_cost[2]);
  EXPECT_LE(trad_cost[0], trad_cost[1]);
  EXPECT_LE(trad_cost[1], trad_cost[2]);
}

}  // namespace
}  // namespace pbfd::bench
