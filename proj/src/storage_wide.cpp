#include "pbfd/storage_wide.hpp"

#include <map>
#include <sstream>

namespace pbfd::wide {
namespace {

constexpr std::size_t kBranchesPerCompound = 400;  // SQLite caps compound SELECTs at 500 terms

std::string level_column(std::size_t depth) { return "Level" + std::to_string(depth); }

void emit_lookup(std::ostringstream& out, const LookupTable& table) {
  out << "CREATE TABLE " << table.name << " (\n"
      << "  " << table.key_column << " BIGINT NOT NULL PRIMARY KEY,\n"
      << "  Name VARCHAR(100) NOT NULL\n"
      << ");\n";
  if (table.rows.empty()) return;
  out << "INSERT INTO " << table.name << " (" << table.key_column << ", Name) VALUES\n";
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    out << "  (" << table.rows[i].first << ", " << sql::quote(table.rows[i].second) << ")"
        << (i + 1 < table.rows.size() ? ",\n" : ";\n");
  }
}

// One SELECT producing the path row of `v` whenever v is checked and none of
// its children are.
std::string frontier_branch(const Vertex& v, std::size_t depth) {
  std::vector<const Vertex*> chain;
  for (const Vertex* a = &v; !a->is_root(); a = a->parent) chain.insert(chain.begin(), a);

  std::ostringstream out;
  out << "SELECT vl.IdVisitedLocation, vl.IdPerson";
  for (std::size_t k = 1; k <= depth; ++k) {
    if (k <= chain.size())
      out << ", t" << k << ".Name";
    else
      out << ", CAST(NULL AS VARCHAR(100))";
  }
  out << "\nFROM " << kTable << " vl";
  for (std::size_t k = 1; k <= chain.size(); ++k) {
    const Vertex& parent = *chain[k - 1]->parent;
    out << "\nJOIN " << lookup_table_name(parent) << " t" << k << " ON t" << k << "."
        << lookup_key_column(parent) << " = " << chain[k - 1]->bit_id;
  }
  out << "\nWHERE ";
  for (std::size_t k = 1; k <= chain.size(); ++k) {
    if (k > 1) out << " AND ";
    out << "(vl." << column_name(*chain[k - 1]->parent) << " & " << chain[k - 1]->bit_id << ") <> 0";
  }
  if (!v.is_leaf()) out << " AND vl." << column_name(v) << " = 0";
  return out.str();
}

class SqlitePort final : public RowPort {
 public:
  SqlitePort(std::shared_ptr<sql::Database> db, const Schema& schema) : db_(std::move(db)) {
    std::ostringstream insert, update, select;
    insert << "INSERT INTO " << kTable << " (IdVisitedLocation, IdPerson";
    select << "SELECT ";
    int parameter = 2;
    std::ostringstream values;
    values << "VALUES (?1, ?1";
    bool first = true;
    for (const Column* column : schema.cell_columns()) {
      insert << ", " << column->name;
      values << ", ?" << parameter++;
      update << (first ? "" : ", ") << column->name << " = excluded." << column->name;
      select << (first ? "" : ", ") << column->name;
      first = false;
      ++cell_count_;
    }
    insert << ") " << values.str() << ") ON CONFLICT (IdPerson) DO UPDATE SET " << update.str();
    select << " FROM " << kTable << " WHERE IdPerson = ?1";
    upsert_sql_ = insert.str();
    select_sql_ = select.str();
  }

  void execute_ddl(std::string_view ddl) override { db_->execute(ddl); }

  bool has_table(std::string_view name) override {
    auto guard = db_->lock();
    auto& stmt = db_->prepare("SELECT 1 FROM sqlite_master WHERE type IN ('table', 'view') AND name = ?1");
    stmt.bind(1, name);
    const bool found = stmt.step();
    stmt.reset();
    return found;
  }

  PersonId insert_person(std::string_view name) override {
    auto guard = db_->lock();
    sql::Transaction tx(*db_);
    const std::int64_t id = db_->scalar_int64("SELECT COALESCE(MAX(IdPerson), 0) + 1 FROM Person");
    db_->prepare("INSERT INTO Person (IdPerson, Name) VALUES (?1, ?2)").bind(1, id).bind(2, name).execute();
    tx.commit();
    return PersonId{id};
  }

  bool person_exists(PersonId person) override {
    auto guard = db_->lock();
    auto& stmt = db_->prepare("SELECT 1 FROM Person WHERE IdPerson = ?1");
    stmt.bind(1, to_int(person));
    const bool found = stmt.step();
    stmt.reset();
    return found;
  }

  int upsert_row(PersonId person, std::span<const std::int64_t> cells) override {
    if (cells.size() != cell_count_) throw StorageError("upsert: wrong cell count");
    auto guard = db_->lock();
    sql::Transaction tx(*db_);
    auto& stmt = db_->prepare(upsert_sql_);
    stmt.bind(1, to_int(person));
    for (std::size_t i = 0; i < cells.size(); ++i) stmt.bind(static_cast<int>(i) + 2, cells[i]);
    const int changes = stmt.execute();
    tx.commit();
    return changes;
  }

  std::optional<std::vector<std::int64_t>> select_row(PersonId person) override {
    auto guard = db_->lock();
    auto& stmt = db_->prepare(select_sql_);
    stmt.bind(1, to_int(person));
    if (!stmt.step()) {
      stmt.reset();
      return std::nullopt;
    }
    std::vector<std::int64_t> cells(cell_count_);
    for (std::size_t i = 0; i < cell_count_; ++i) cells[i] = stmt.column_int64(static_cast<int>(i));
    stmt.reset();
    return cells;
  }

  std::int64_t row_count(std::string_view table) override {
    return db_->scalar_int64("SELECT COUNT(*) FROM " + std::string{table});
  }

  std::uint64_t file_size() override { return db_->file_size(); }

  std::vector<ReportRow> select_report_view(PersonId person, std::size_t depth) override {
    std::ostringstream query;
    query << "SELECT ";
    for (std::size_t k = 1; k <= depth; ++k) query << (k > 1 ? ", " : "") << level_column(k);
    query << " FROM " << kReportView << " WHERE IdPerson = ?1";

    auto guard = db_->lock();
    auto& stmt = db_->prepare(query.str());
    stmt.bind(1, to_int(person));
    std::vector<ReportRow> rows;
    while (stmt.step()) {
      ReportRow row;
      for (std::size_t k = 0; k < depth; ++k) row.cells.push_back(stmt.column_text(static_cast<int>(k)));
      rows.push_back(std::move(row));
    }
    stmt.reset();
    return rows;
  }

 private:
  std::shared_ptr<sql::Database> db_;
  std::size_t cell_count_ = 0;
  std::string upsert_sql_;
  std::string select_sql_;
};

class MemoryPort final : public RowPort {
 public:
  explicit MemoryPort(const Schema& schema) : cell_count_(schema.cell_columns().size()) {
    for (const LookupTable& table : schema.lookup_tables)
      lookup_rows_[table.name] = static_cast<std::int64_t>(table.rows.size());
  }

  void execute_ddl(std::string_view ddl) override {
    std::lock_guard guard(mutex_);
    ddl_.emplace_back(ddl);
  }

  bool has_table(std::string_view name) override {
    std::lock_guard guard(mutex_);
    return !ddl_.empty() && (name == "Person" || name == kTable || lookup_rows_.contains(std::string{name}));
  }

  PersonId insert_person(std::string_view name) override {
    std::lock_guard guard(mutex_);
    const std::int64_t id = persons_.empty() ? 1 : persons_.rbegin()->first + 1;
    persons_.emplace(id, std::string{name});
    return PersonId{id};
  }

  bool person_exists(PersonId person) override {
    std::lock_guard guard(mutex_);
    return persons_.contains(to_int(person));
  }

  int upsert_row(PersonId person, std::span<const std::int64_t> cells) override {
    if (cells.size() != cell_count_) throw StorageError("upsert: wrong cell count");
    std::lock_guard guard(mutex_);
    if (!persons_.contains(to_int(person)))
      throw StorageError("upsert: FOREIGN KEY constraint failed");
    rows_[to_int(person)].assign(cells.begin(), cells.end());
    return 1;
  }

  std::optional<std::vector<std::int64_t>> select_row(PersonId person) override {
    std::lock_guard guard(mutex_);
    auto it = rows_.find(to_int(person));
    if (it == rows_.end()) return std::nullopt;
    return it->second;
  }

  std::int64_t row_count(std::string_view table) override {
    std::lock_guard guard(mutex_);
    if (table == "Person") return static_cast<std::int64_t>(persons_.size());
    if (table == kTable) return static_cast<std::int64_t>(rows_.size());
    auto it = lookup_rows_.find(std::string{table});
    if (it == lookup_rows_.end()) throw StorageError("no such table: " + std::string{table});
    return it->second;
  }

  std::uint64_t file_size() override { return 0; }

  std::vector<ReportRow> select_report_view(PersonId, std::size_t) override {
    throw StorageError("the in-memory port cannot execute views");
  }

 private:
  std::mutex mutex_;
  std::size_t cell_count_;
  std::vector<std::string> ddl_;
  std::map<std::int64_t, std::string> persons_;
  std::map<std::int64_t, std::vector<std::int64_t>> rows_;
  std::map<std::string, std::int64_t> lookup_rows_;
};

}  // namespace

std::vector<const Column*> Schema::cell_columns() const {
  std::vector<const Column*> out;
  for (const Column& column : columns)
    if (column.role != Column::Role::key) out.push_back(&column);
  return out;
}

Schema build_schema(const Hierarchy& h) {
  Schema schema;
  schema.columns.push_back({"IdVisitedLocation", Column::Role::key, nullptr});
  schema.columns.push_back({"IdPerson", Column::Role::key, nullptr});
  for (const Vertex* v : h.internal_vertices()) {
    schema.columns.push_back({column_name(*v), Column::Role::domain, v});
    LookupTable table{lookup_table_name(*v), lookup_key_column(*v), {}};
    for (const Vertex& child : v->children) table.rows.emplace_back(child.bit_id, child.name);
    schema.lookup_tables.push_back(std::move(table));
  }
  schema.columns.push_back({"IdReasons", Column::Role::reasons, nullptr});
  LookupTable reasons{"Reason", "IdReason", {}};
  for (const Reason& r : h.reasons()) reasons.rows.emplace_back(r.bit_id, r.name);
  schema.lookup_tables.push_back(std::move(reasons));
  return schema;
}

std::string emit_schema_ddl(const Hierarchy& h) {
  const Schema schema = build_schema(h);
  std::ostringstream out;
  out << "CREATE TABLE Person (\n"
      << "  IdPerson BIGINT NOT NULL PRIMARY KEY,\n"
      << "  Name VARCHAR(100) NOT NULL\n"
      << ");\n\n";
  for (const LookupTable& table : schema.lookup_tables) {
    emit_lookup(out, table);
    out << "\n";
  }
  out << "CREATE TABLE " << kTable << " (\n";
  for (const Column& column : schema.columns) {
    out << "  " << column.name << " BIGINT NOT NULL";
    if (column.name == "IdVisitedLocation") out << " PRIMARY KEY";
    else if (column.name == "IdPerson") out << " UNIQUE";
    else out << " DEFAULT 0";
    out << ",\n";
  }
  out << "  FOREIGN KEY (IdPerson) REFERENCES Person (IdPerson)\n"
      << ");\n";
  return out.str();
}

std::string emit_report_view_ddl(const Hierarchy& h) {
  const std::size_t depth = h.max_depth();
  std::vector<std::string> branches;
  for (const Vertex* v : h.breadth_first())
    if (!v->is_root()) branches.push_back(frontier_branch(*v, depth));

  std::ostringstream out;
  out << "CREATE VIEW " << kReportView << " (IdVisitedLocation, IdPerson";
  for (std::size_t k = 1; k <= depth; ++k) out << ", " << level_column(k);
  out << ") AS\n";

  const bool chunked = branches.size() > kBranchesPerCompound;
  for (std::size_t begin = 0, part = 1; begin < branches.size(); begin += kBranchesPerCompound, ++part) {
    const std::size_t end = std::min(branches.size(), begin + kBranchesPerCompound);
    if (begin > 0) out << "\nUNION ALL\n";
    if (chunked) out << "SELECT * FROM (\n";
    for (std::size_t i = begin; i < end; ++i) {
      if (i > begin) out << "\nUNION ALL\n";
      out << branches[i];
    }
    if (chunked) out << "\n) AS part" << part;
  }
  out << ";\n";
  return out.str();
}

Store::Store(std::shared_ptr<const Hierarchy> h, std::unique_ptr<RowPort> port)
    : hierarchy_(std::move(h)), schema_(build_schema(*hierarchy_)), port_(std::move(port)) {}

void Store::initialize() {
  if (!port_->has_table(kTable)) port_->execute_ddl(emit_schema_ddl(*hierarchy_));
}

PersonId Store::create_person(std::string_view name) { return port_->insert_person(name); }

bool Store::has_person(PersonId person) { return port_->person_exists(person); }

std::mutex& Store::person_mutex(PersonId person) {
  return stripes_[static_cast<std::uint64_t>(to_int(person)) % stripes_.size()];
}

void Store::require_person(PersonId person) {
  if (!port_->person_exists(person))
    throw NotFoundError("unknown person " + std::to_string(to_int(person)));
}

int Store::write_unlocked(PersonId person, const SelectionRecord& r) {
  if (auto violations = validate_record(r, *hierarchy_); !violations.empty())
    throw InvalidRecordError("record rejected: " + std::string{to_string(violations.front().kind)} +
                             " at '" + violations.front().path + "'");
  require_person(person);
  std::vector<std::int64_t> cells;
  cells.reserve(schema_.columns.size());
  for (const Column* column : schema_.cell_columns()) {
    const Bitmap bits = column->role == Column::Role::reasons ? r.reasons : r.bitmap(column->vertex->path);
    cells.push_back(static_cast<std::int64_t>(bits));
  }
  return port_->upsert_row(person, cells);
}

SelectionRecord Store::read_unlocked(PersonId person) {
  require_person(person);
  SelectionRecord r;
  auto cells = port_->select_row(person);
  if (!cells) return r;
  const auto columns = schema_.cell_columns();
  for (std::size_t i = 0; i < columns.size(); ++i) {
    const auto bits = static_cast<Bitmap>((*cells)[i]);
    if (columns[i]->role == Column::Role::reasons)
      r.reasons = bits;
    else if (bits != 0)
      r.bitmaps[columns[i]->vertex->path] = bits;
  }
  return r;
}

int Store::upsert_record(PersonId person, const SelectionRecord& r) {
  std::lock_guard guard(person_mutex(person));
  return write_unlocked(person, r);
}

SelectionRecord Store::read_record(PersonId person) { return read_unlocked(person); }

SelectionRecord Store::modify_record(PersonId person,
                                     const std::function<SelectionRecord(const SelectionRecord&)>& fn) {
  std::lock_guard guard(person_mutex(person));
  SelectionRecord next = canonical(fn(read_unlocked(person)));
  write_unlocked(person, next);
  return next;
}

void Store::create_report_view() {
  if (!port_->has_table(kReportView)) port_->execute_ddl(emit_report_view_ddl(*hierarchy_));
}

std::vector<ReportRow> Store::query_report_view(PersonId person) {
  require_person(person);
  return port_->select_report_view(person, hierarchy_->max_depth());
}

StorageReport Store::measure_storage() {
  StorageReport report;
  const auto count = [&](const std::string& table, std::uint64_t width) {
    const std::int64_t rows = port_->row_count(table);
    report.row_counts[table] = rows;
    report.logical_bytes += static_cast<std::uint64_t>(rows) * width;
  };
  count("Person", kBigintBytes + kNameBytes);
  count(std::string{kTable}, schema_.row_width());
  for (const LookupTable& table : schema_.lookup_tables) count(table.name, kBigintBytes + kNameBytes);
  report.physical_bytes = port_->file_size();
  return report;
}

std::unique_ptr<Store> open_sqlite_store(std::shared_ptr<const Hierarchy> h, const std::string& dsn) {
  auto db = std::make_shared<sql::Database>(dsn);
  Schema schema = build_schema(*h);
  auto store = std::make_unique<Store>(std::move(h), make_sqlite_port(std::move(db), schema));
  store->initialize();
  return store;
}

std::unique_ptr<RowPort> make_sqlite_port(std::shared_ptr<sql::Database> db, const Schema& schema) {
  return std::make_unique<SqlitePort>(std::move(db), schema);
}

std::unique_ptr<RowPort> make_memory_port(const Schema& schema) {
  return std::make_unique<MemoryPort>(schema);
}

}  // namespace pbfd::wide
