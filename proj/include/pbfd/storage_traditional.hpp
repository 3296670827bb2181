#pragma once

#include <array>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pbfd/hierarchy.hpp"
#include "pbfd/selection.hpp"
#include "pbfd/sqlite.hpp"
#include "pbfd/storage.hpp"

/// Baseline backend: an adjacency-list Location table plus the VisitedPlace
/// and PlaceReason junction tables, one row per checked vertex / reason.
namespace pbfd::traditional {

std::string emit_schema_ddl();

struct Visits {
  PathSet paths;
  Bitmap reasons = 0;

  friend bool operator==(const Visits&, const Visits&) = default;
};

class Store {
 public:
  /// Location ids are breadth-first ordinals, so ordering by IdLocation is
  /// declaration order.
  Store(std::shared_ptr<const Hierarchy> h, std::shared_ptr<sql::Database> db);

  /// Creates the five tables and seeds Reason rows, unless already present.
  void initialize();

  /// One Location row per vertex. Throws StorageError if Location is non-empty.
  void seed_locations();
  std::int64_t location_count();

  const Hierarchy& hierarchy() const { return *hierarchy_; }

  PersonId create_person(std::string_view name);
  bool has_person(PersonId person);

  /// Replaces the person's visits and reasons in one transaction, one
  /// statement per row. Returns the number of rows inserted.
  int write_visits(PersonId person, const PathSet& paths, Bitmap reasons);

  Visits read_visits(PersonId person);

  /// Read-modify-write under the person's write lock.
  Visits modify_visits(PersonId person, const std::function<Visits(const Visits&)>& fn);

  /// Frontier rows computed by a recursive query over Location + VisitedPlace.
  std::vector<ReportRow> report_query(PersonId person);

  StorageReport measure_storage();

 private:
  std::mutex& person_mutex(PersonId person);
  void require_person(PersonId person);
  int write_unlocked(PersonId person, const PathSet& paths, Bitmap reasons);
  Visits read_unlocked(PersonId person);

  std::shared_ptr<const Hierarchy> hierarchy_;
  std::shared_ptr<sql::Database> db_;
  std::array<std::mutex, 64> stripes_;
};

/// Opens (or reopens) a store and seeds Location when it is empty.
std::unique_ptr<Store> open_sqlite_store(std::shared_ptr<const Hierarchy> h, const std::string& dsn);

}  // namespace pbfd::traditional
