#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <thread>

#include "generators.hpp"
#include "pbfd/sqlite.hpp"
#include "pbfd/storage_wide.hpp"

namespace pbfd::wide {
namespace {

using testing::sample_hierarchy;

std::shared_ptr<const Hierarchy> shared_sample() {
  static const auto h = std::make_shared<const Hierarchy>(load_hierarchy(testing::sample_hierarchy_path()));
  return h;
}

enum class PortKind { sqlite, memory };

std::unique_ptr<Store> make_store(PortKind kind, std::shared_ptr<const Hierarchy> h) {
  const Schema schema = build_schema(*h);
  auto port = kind == PortKind::sqlite ? make_sqlite_port(std::make_shared<sql::Database>(":memory:"), schema)
                                       : make_memory_port(schema);
  auto store = std::make_unique<Store>(std::move(h), std::move(port));
  store->initialize();
  return store;
}

TEST(WideSchema, ColumnsFollowBreadthFirstInternalOrder) {
  const Schema schema = build_schema(sample_hierarchy());
  ASSERT_EQ(schema.columns.size(), 2u + 14u + 1u);
  EXPECT_EQ(schema.columns[0].name, "IdVisitedLocation");
  EXPECT_EQ(schema.columns[1].name, "IdPerson");
  EXPECT_EQ(schema.columns[2].name, "IdContinents");
  EXPECT_EQ(schema.columns[3].name, "IdAfricas");
  EXPECT_EQ(schema.columns[10].name, "IdChinas");
  EXPECT_EQ(schema.columns[11].name, "IdUnitedStates");
  EXPECT_EQ(schema.columns.back().name, "IdReasons");
  EXPECT_EQ(schema.cell_columns().size(), 15u);
  EXPECT_EQ(schema.row_width(), 17u * 8u);
  // One lookup per internal vertex plus Reason.
  EXPECT_EQ(schema.lookup_tables.size(), 15u);
  EXPECT_EQ(schema.lookup_tables.front().name, "Continent");
  EXPECT_EQ(schema.lookup_tables.back().name, "Reason");
}

TEST(WideSchema, ViewDdlIsAcceptedBySqlite) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const Hierarchy h = testing::random_hierarchy(rng, {.max_vertices = 500, .max_depth = 7, .max_fanout = 20});
    sql::Database db(":memory:");
    db.execute(emit_schema_ddl(h));
    db.execute(emit_report_view_ddl(h));
    EXPECT_EQ(db.scalar_int64("SELECT COUNT(*) FROM VisitedLocationReport"), 0);
  }
}

class PortConformance : public ::testing::TestWithParam<PortKind> {};

TEST_P(PortConformance, UpsertTouchesOneRowAndReadsBack) {
  auto store = make_store(GetParam(), shared_sample());
  const PersonId p = store->create_person("Ada");
  EXPECT_TRUE(store->has_person(p));
  EXPECT_EQ(store->read_record(p), SelectionRecord{});

  const SelectionRecord r =
      record_from_checked_set({"Asia", "Asia/China", "Asia/China/Hunan", "Europe"}, sample_hierarchy(), 5);
  EXPECT_EQ(store->upsert_record(p, r), 1);
  EXPECT_EQ(store->read_record(p), r);

  const SelectionRecord smaller = record_from_checked_set({"Europe"}, sample_hierarchy());
  EXPECT_EQ(store->upsert_record(p, smaller), 1);
  EXPECT_EQ(store->read_record(p), smaller);
  EXPECT_EQ(store->measure_storage().row_counts.at("VisitedLocation"), 1);
}

TEST_P(PortConformance, RejectsInvalidRecordsAndUnknownPersons) {
  auto store = make_store(GetParam(), shared_sample());
  const PersonId p = store->create_person("Ada");
  SelectionRecord orphan;
  orphan.bitmaps["Europe"] = 1;
  EXPECT_THROW(store->upsert_record(p, orphan), InvalidRecordError);
  EXPECT_THROW(store->upsert_record(PersonId{999}, SelectionRecord{}), NotFoundError);
  EXPECT_EQ(store->read_record(p), SelectionRecord{});
}

TEST_P(PortConformance, RandomRecordsRoundTrip) {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 40; ++i) {
    auto h = std::make_shared<const Hierarchy>(testing::random_hierarchy(rng, {}));
    auto store = make_store(GetParam(), h);
    for (int k = 0; k < 5; ++k) {
      const PersonId p = store->create_person("p");
      const auto r = record_from_checked_set(testing::random_checked_set(*h, rng, 0.5), *h,
                                             testing::random_reasons(*h, rng));
      store->upsert_record(p, r);
      EXPECT_EQ(store->read_record(p), r);
    }
  }
}

TEST_P(PortConformance, ConcurrentModifyIsSerializedPerPerson) {
  auto store = make_store(GetParam(), shared_sample());
  const PersonId p = store->create_person("Ada");
  const Hierarchy& h = sample_hierarchy();
  store->upsert_record(p, record_from_checked_set({"Europe"}, h));
  // Each thread toggles one reason bit many times; lost updates would leave
  // a bit in the wrong state.
  std::vector<std::thread> threads;
  for (Bitmap bit : {Bitmap{1}, Bitmap{2}, Bitmap{4}, Bitmap{8}}) {
    threads.emplace_back([&, bit] {
      for (int i = 0; i < 51; ++i)
        store->modify_record(p, [bit](const SelectionRecord& r) {
          SelectionRecord next = r;
          next.reasons ^= bit;
          return next;
        });
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(store->read_record(p).reasons, 15u);
}

INSTANTIATE_TEST_SUITE_P(Ports, PortConformance, ::testing::Values(PortKind::sqlite, PortKind::memory),
                         [](const auto& info) { return info.param == PortKind::sqlite ? "sqlite" : "memory"; });

TEST(WideStore, ReportViewMatchesOracleOnSample) {
  auto store = make_store(PortKind::sqlite, shared_sample());
  store->create_report_view();
  store->create_report_view();
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const PersonId p = store->create_person("p");
    const PathSet paths = testing::random_checked_set(sample_hierarchy(), rng, 0.5);
    store->upsert_record(p, record_from_checked_set(paths, sample_hierarchy()));
    EXPECT_EQ(testing::sorted_rows(store->query_report_view(p)),
              testing::frontier_rows_oracle(paths, sample_hierarchy().max_depth()));
  }
}

TEST(WideStore, MemoryPortHasNoView) {
  auto store = make_store(PortKind::memory, shared_sample());
  const PersonId p = store->create_person("Ada");
  EXPECT_THROW(store->query_report_view(p), StorageError);
}

TEST(WideStore, StorageIsConstantPerVisitor) {
  auto store = make_store(PortKind::sqlite, shared_sample());
  const auto empty = store->measure_storage();
  const PersonId a = store->create_person("a");
  store->upsert_record(a, SelectionRecord{});
  const auto one = store->measure_storage();
  const PersonId b = store->create_person("b");
  std::mt19937_64 rng(1);
  const PathSet everything = testing::random_checked_set(sample_hierarchy(), rng, 1.0);
  store->upsert_record(b, record_from_checked_set(everything, sample_hierarchy(), 15));
  const auto two = store->measure_storage();
  const std::uint64_t per_visitor = one.logical_bytes - empty.logical_bytes;
  EXPECT_EQ(per_visitor, 17u * 8u + 108u);
  EXPECT_EQ(two.logical_bytes - one.logical_bytes, per_visitor);
}

TEST(WideStore, ReopensAnExistingFile) {
  const auto file = std::filesystem::temp_directory_path() / "pbfd_wide_reopen_test.sqlite";
  for (const char* suffix : {"", "-wal", "-shm"}) std::filesystem::remove(file.string() + suffix);
  const SelectionRecord r = record_from_checked_set({"Asia", "Asia/Japan"}, sample_hierarchy(), 2);
  PersonId p{};
  {
    auto store = open_sqlite_store(shared_sample(), file.string());
    p = store->create_person("Ada");
    store->upsert_record(p, r);
  }
  {
    auto store = open_sqlite_store(shared_sample(), file.string());
    EXPECT_EQ(store->read_record(p), r);
    EXPECT_GT(store->measure_storage().physical_bytes, 0u);
  }
  for (const char* suffix : {"", "-wal", "-shm"}) std::filesystem::remove(file.string() + suffix);
}

}  // namespace
}  // namespace pbfd::wide
