#include "pbfd/storage_traditional.hpp"

#include <map>

namespace pbfd::traditional {
namespace {

constexpr const char* kReportQuery = R"(WITH RECURSIVE
visited (IdLocation) AS (
  SELECT IdLocation FROM VisitedPlace WHERE IdPerson = ?1
),
frontier (IdLocation) AS (
  SELECT v.IdLocation FROM visited v
  WHERE NOT EXISTS (
    SELECT 1 FROM visited vc JOIN Location c ON c.IdLocation = vc.IdLocation
    WHERE c.IdParent = v.IdLocation)
),
chain (IdFrontier, IdParent, Name, Step) AS (
  SELECT f.IdLocation, l.IdParent, l.Name, 0
  FROM frontier f JOIN Location l ON l.IdLocation = f.IdLocation
  UNION ALL
  SELECT c.IdFrontier, l.IdParent, l.Name, c.Step + 1
  FROM chain c JOIN Location l ON l.IdLocation = c.IdParent
)
SELECT IdFrontier, Name FROM chain ORDER BY IdFrontier, Step DESC)";

}  // namespace

std::string emit_schema_ddl() {
  return R"(CREATE TABLE Person (
  IdPerson BIGINT NOT NULL PRIMARY KEY,
  Name VARCHAR(100) NOT NULL
);

CREATE TABLE Location (
  IdLocation BIGINT NOT NULL PRIMARY KEY,
  IdParent BIGINT NULL,
  Name VARCHAR(100) NOT NULL,
  LevelLabel VARCHAR(50) NOT NULL,
  FOREIGN KEY (IdParent) REFERENCES Location (IdLocation)
);

CREATE TABLE VisitedPlace (
  IdPerson BIGINT NOT NULL,
  IdLocation BIGINT NOT NULL,
  PRIMARY KEY (IdPerson, IdLocation),
  FOREIGN KEY (IdPerson) REFERENCES Person (IdPerson),
  FOREIGN KEY (IdLocation) REFERENCES Location (IdLocation)
);

CREATE INDEX IxVisitedPlaceIdPerson ON VisitedPlace (IdPerson);

CREATE TABLE Reason (
  IdReason BIGINT NOT NULL PRIMARY KEY,
  Name VARCHAR(100) NOT NULL
);

CREATE TABLE PlaceReason (
  IdPerson BIGINT NOT NULL,
  IdReason BIGINT NOT NULL,
  PRIMARY KEY (IdPerson, IdReason),
  FOREIGN KEY (IdPerson) REFERENCES Person (IdPerson),
  FOREIGN KEY (IdReason) REFERENCES Reason (IdReason)
);
)";
}

Store::Store(std::shared_ptr<const Hierarchy> h, std::shared_ptr<sql::Database> db)
    : hierarchy_(std::move(h)), db_(std::move(db)) {}

void Store::initialize() {
  auto guard = db_->lock();
  if (db_->scalar_int64("SELECT COUNT(*) FROM sqlite_master WHERE name = 'PlaceReason'") > 0) return;
  sql::Transaction tx(*db_);
  db_->execute(emit_schema_ddl());
  for (const Reason& r : hierarchy_->reasons())
    db_->prepare("INSERT INTO Reason (IdReason, Name) VALUES (?1, ?2)")
        .bind(1, static_cast<std::int64_t>(r.bit_id))
        .bind(2, r.name)
        .execute();
  tx.commit();
}

void Store::seed_locations() {
  auto guard = db_->lock();
  if (db_->scalar_int64("SELECT COUNT(*) FROM Location") != 0)
    throw StorageError("seed_locations: Location table is not empty");
  sql::Transaction tx(*db_);
  for (const Vertex* v : hierarchy_->breadth_first()) {
    if (v->is_root()) continue;
    auto& stmt = db_->prepare(
        "INSERT INTO Location (IdLocation, IdParent, Name, LevelLabel) VALUES (?1, ?2, ?3, ?4)");
    stmt.bind(1, static_cast<std::int64_t>(v->bfs_index));
    if (v->parent->is_root())
      stmt.bind_null(2);
    else
      stmt.bind(2, static_cast<std::int64_t>(v->parent->bfs_index));
    stmt.bind(3, v->name).bind(4, v->level_label).execute();
  }
  tx.commit();
}

std::int64_t Store::location_count() { return db_->scalar_int64("SELECT COUNT(*) FROM Location"); }

PersonId Store::create_person(std::string_view name) {
  auto guard = db_->lock();
  sql::Transaction tx(*db_);
  const std::int64_t id = db_->scalar_int64("SELECT COALESCE(MAX(IdPerson), 0) + 1 FROM Person");
  db_->prepare("INSERT INTO Person (IdPerson, Name) VALUES (?1, ?2)").bind(1, id).bind(2, name).execute();
  tx.commit();
  return PersonId{id};
}

bool Store::has_person(PersonId person) {
  auto guard = db_->lock();
  auto& stmt = db_->prepare("SELECT 1 FROM Person WHERE IdPerson = ?1");
  stmt.bind(1, to_int(person));
  const bool found = stmt.step();
  stmt.reset();
  return found;
}

std::mutex& Store::person_mutex(PersonId person) {
  return stripes_[static_cast<std::uint64_t>(to_int(person)) % stripes_.size()];
}

void Store::require_person(PersonId person) {
  if (!has_person(person)) throw NotFoundError("unknown person " + std::to_string(to_int(person)));
}

int Store::write_unlocked(PersonId person, const PathSet& paths, Bitmap reasons) {
  std::vector<std::int64_t> location_ids;
  location_ids.reserve(paths.size());
  for (const VertexPath& path : paths) {
    const Vertex& v = vertex_by_path(*hierarchy_, path);
    if (v.is_root()) throw InvalidRecordError("the root cannot be visited");
    if (!v.parent->is_root() && !paths.contains(v.parent->path))
      throw InvalidRecordError("visit set is not upward-closed at '" + path + "'");
    location_ids.push_back(static_cast<std::int64_t>(v.bfs_index));
  }
  if (!is_subset(reasons, hierarchy_->reasons_mask()))
    throw OutOfDomainError("reasons bitmap " + std::to_string(reasons) + " is outside the domain");
  require_person(person);

  auto guard = db_->lock();
  sql::Transaction tx(*db_);
  db_->prepare("DELETE FROM VisitedPlace WHERE IdPerson = ?1").bind(1, to_int(person)).execute();
  db_->prepare("DELETE FROM PlaceReason WHERE IdPerson = ?1").bind(1, to_int(person)).execute();
  int inserted = 0;
  for (std::int64_t id : location_ids)
    inserted += db_->prepare("INSERT INTO VisitedPlace (IdPerson, IdLocation) VALUES (?1, ?2)")
                    .bind(1, to_int(person))
                    .bind(2, id)
                    .execute();
  for (const Reason& r : hierarchy_->reasons()) {
    if ((reasons & r.bit_id) == 0) continue;
    inserted += db_->prepare("INSERT INTO PlaceReason (IdPerson, IdReason) VALUES (?1, ?2)")
                    .bind(1, to_int(person))
                    .bind(2, static_cast<std::int64_t>(r.bit_id))
                    .execute();
  }
  tx.commit();
  return inserted;
}

Visits Store::read_unlocked(PersonId person) {
  require_person(person);
  auto guard = db_->lock();
  Visits visits;
  const auto vertices = hierarchy_->breadth_first();
  auto& places = db_->prepare("SELECT IdLocation FROM VisitedPlace WHERE IdPerson = ?1");
  places.bind(1, to_int(person));
  while (places.step()) {
    const auto id = places.column_int64(0);
    if (id <= 0 || static_cast<std::size_t>(id) >= vertices.size())
      throw StorageError("VisitedPlace references unknown location " + std::to_string(id));
    visits.paths.insert(vertices[static_cast<std::size_t>(id)]->path);
  }
  places.reset();
  auto& reasons = db_->prepare("SELECT IdReason FROM PlaceReason WHERE IdPerson = ?1");
  reasons.bind(1, to_int(person));
  while (reasons.step()) visits.reasons |= static_cast<Bitmap>(reasons.column_int64(0));
  reasons.reset();
  return visits;
}

int Store::write_visits(PersonId person, const PathSet& paths, Bitmap reasons) {
  std::lock_guard guard(person_mutex(person));
  return write_unlocked(person, paths, reasons);
}

Visits Store::read_visits(PersonId person) { return read_unlocked(person); }

Visits Store::modify_visits(PersonId person, const std::function<Visits(const Visits&)>& fn) {
  std::lock_guard guard(person_mutex(person));
  Visits next = fn(read_unlocked(person));
  write_unlocked(person, next.paths, next.reasons);
  return next;
}

std::vector<ReportRow> Store::report_query(PersonId person) {
  require_person(person);
  const std::size_t depth = hierarchy_->max_depth();
  std::vector<ReportRow> rows;
  auto guard = db_->lock();
  auto& stmt = db_->prepare(kReportQuery);
  stmt.bind(1, to_int(person));
  std::int64_t current = -1;
  std::size_t level = 0;
  while (stmt.step()) {
    const std::int64_t frontier = stmt.column_int64(0);
    if (frontier != current) {
      rows.push_back(ReportRow{std::vector<std::optional<std::string>>(depth)});
      current = frontier;
      level = 0;
    }
    if (level < depth) rows.back().cells[level] = stmt.column_text(1);
    ++level;
  }
  stmt.reset();
  return rows;
}

StorageReport Store::measure_storage() {
  StorageReport report;
  const auto count = [&](const std::string& table, std::uint64_t width) {
    const std::int64_t rows = db_->scalar_int64("SELECT COUNT(*) FROM " + table);
    report.row_counts[table] = rows;
    report.logical_bytes += static_cast<std::uint64_t>(rows) * width;
  };
  count("Person", kBigintBytes + kNameBytes);
  count("Location", 2 * kBigintBytes + kNameBytes + kLevelLabelBytes);
  count("VisitedPlace", 2 * kBigintBytes);
  count("Reason", kBigintBytes + kNameBytes);
  count("PlaceReason", 2 * kBigintBytes);
  report.physical_bytes = db_->file_size();
  return report;
}

std::unique_ptr<Store> open_sqlite_store(std::shared_ptr<const Hierarchy> h, const std::string& dsn) {
  auto store = std::make_unique<Store>(std::move(h), std::make_shared<sql::Database>(dsn));
  store->initialize();
  if (store->location_count() == 0) store->seed_locations();
  return store;
}

}  // namespace pbfd::traditional
