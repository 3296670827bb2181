#pragma once

#include <array>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pbfd/hierarchy.hpp"
#include "pbfd/selection.hpp"
#include "pbfd/sqlite.hpp"
#include "pbfd/storage.hpp"

/// Flattened wide-table backend: one VisitedLocation row per person with one
/// bitmap column per internal vertex, lookup tables without foreign keys, and
/// a generated report view that re-expands the bitmaps into paths.
namespace pbfd::wide {

inline constexpr std::string_view kTable = "VisitedLocation";
inline constexpr std::string_view kReportView = "VisitedLocationReport";

struct Column {
  enum class Role { key, domain, reasons };
  std::string name;
  Role role = Role::domain;
  const Vertex* vertex = nullptr;  // domain columns only
};

struct LookupTable {
  std::string name;
  std::string key_column;
  std::vector<std::pair<Bitmap, std::string>> rows;
};

/// Columns are IdVisitedLocation, IdPerson, one domain column per internal
/// vertex in breadth-first order, then IdReasons.
struct Schema {
  std::vector<Column> columns;
  std::vector<LookupTable> lookup_tables;  // per internal vertex, then Reason

  /// Domain columns followed by IdReasons: the cells a row port stores.
  std::vector<const Column*> cell_columns() const;
  std::uint64_t row_width() const { return kBigintBytes * columns.size(); }
};

Schema build_schema(const Hierarchy& h);

std::string emit_schema_ddl(const Hierarchy& h);

/// DDL for the frontier report view: one row per frontier vertex per stored
/// row, one name column per depth. Text only; nothing is executed.
std::string emit_report_view_ddl(const Hierarchy& h);

/// Narrow port onto the physical store.
class RowPort {
 public:
  virtual ~RowPort() = default;

  virtual void execute_ddl(std::string_view ddl) = 0;
  /// True when a table or view of that name exists.
  virtual bool has_table(std::string_view name) = 0;
  virtual PersonId insert_person(std::string_view name) = 0;
  virtual bool person_exists(PersonId person) = 0;
  /// Atomically replaces the person's row with `cells` (Schema::cell_columns
  /// order). Returns the number of rows touched.
  virtual int upsert_row(PersonId person, std::span<const std::int64_t> cells) = 0;
  virtual std::optional<std::vector<std::int64_t>> select_row(PersonId person) = 0;
  virtual std::int64_t row_count(std::string_view table) = 0;
  virtual std::uint64_t file_size() = 0;
  /// Rows of the report view for one person. Ports without a SQL engine throw.
  virtual std::vector<ReportRow> select_report_view(PersonId person, std::size_t depth) = 0;
};

std::unique_ptr<RowPort> make_sqlite_port(std::shared_ptr<sql::Database> db, const Schema& schema);

/// In-memory fake honouring the same contract, minus view execution.
std::unique_ptr<RowPort> make_memory_port(const Schema& schema);

class Store {
 public:
  Store(std::shared_ptr<const Hierarchy> h, std::unique_ptr<RowPort> port);

  /// Creates tables and seeds lookup rows unless VisitedLocation already
  /// exists (reopening a store built from the same hierarchy).
  void initialize();

  const Hierarchy& hierarchy() const { return *hierarchy_; }
  const Schema& schema() const { return schema_; }

  PersonId create_person(std::string_view name);
  bool has_person(PersonId person);

  /// Rejects invalid records before writing. Returns rows touched (always 1).
  int upsert_record(PersonId person, const SelectionRecord& r);

  /// Canonical record; a person without a row reads as the empty record.
  SelectionRecord read_record(PersonId person);

  /// Read-modify-write under the person's write lock.
  SelectionRecord modify_record(PersonId person,
                                const std::function<SelectionRecord(const SelectionRecord&)>& fn);

  /// Executes emit_report_view_ddl. Views are only created on request.
  void create_report_view();
  std::vector<ReportRow> query_report_view(PersonId person);

  StorageReport measure_storage();

 private:
  std::mutex& person_mutex(PersonId person);
  void require_person(PersonId person);
  int write_unlocked(PersonId person, const SelectionRecord& r);
  SelectionRecord read_unlocked(PersonId person);

  std::shared_ptr<const Hierarchy> hierarchy_;
  Schema schema_;
  std::unique_ptr<RowPort> port_;
  std::array<std::mutex, 64> stripes_;
};

std::unique_ptr<Store> open_sqlite_store(std::shared_ptr<const Hierarchy> h, const std::string& dsn);

}  // namespace pbfd::wide
