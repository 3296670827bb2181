#include "pbfd/sqlite.hpp"

#include <filesystem>

#include <sqlite3.h>

#include "pbfd/types.hpp"

namespace pbfd::sql {
namespace {

[[noreturn]] void raise(sqlite3* db, std::string_view context) {
  throw StorageError(std::string{context} + ": " + sqlite3_errmsg(db));
}

}  // namespace

Statement::Statement(sqlite3* db, std::string_view text) : db_(db) {
  if (sqlite3_prepare_v2(db_, text.data(), static_cast<int>(text.size()), &stmt_, nullptr) !=
      SQLITE_OK)
    raise(db_, "prepare");
}

Statement::~Statement() { sqlite3_finalize(stmt_); }

Statement& Statement::bind(int index, std::int64_t value) {
  if (sqlite3_bind_int64(stmt_, index, value) != SQLITE_OK) raise(db_, "bind");
  return *this;
}

Statement& Statement::bind(int index, std::string_view value) {
  if (sqlite3_bind_text(stmt_, index, value.data(), static_cast<int>(value.size()),
                        SQLITE_TRANSIENT) != SQLITE_OK)
    raise(db_, "bind");
  return *this;
}

Statement& Statement::bind_null(int index) {
  if (sqlite3_bind_null(stmt_, index) != SQLITE_OK) raise(db_, "bind");
  return *this;
}

bool Statement::step() {
  switch (sqlite3_step(stmt_)) {
    case SQLITE_ROW: return true;
    case SQLITE_DONE: return false;
    default: {
      const std::string message = sqlite3_errmsg(db_);
      sqlite3_reset(stmt_);
      throw StorageError("step: " + message);
    }
  }
}

int Statement::execute() {
  while (step()) {
  }
  const int changes = sqlite3_changes(db_);
  reset();
  return changes;
}

void Statement::reset() {
  sqlite3_reset(stmt_);
  sqlite3_clear_bindings(stmt_);
}

std::int64_t Statement::column_int64(int index) const { return sqlite3_column_int64(stmt_, index); }

std::optional<std::string> Statement::column_text(int index) const {
  if (sqlite3_column_type(stmt_, index) == SQLITE_NULL) return std::nullopt;
  const auto* text = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, index));
  return std::string(text, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, index)));
}

int Statement::column_count() const { return sqlite3_column_count(stmt_); }

Database::Database(const std::string& dsn) : dsn_(dsn) {
  if (sqlite3_open_v2(dsn.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE, nullptr) !=
      SQLITE_OK) {
    const std::string message = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    throw StorageError("open '" + dsn + "': " + message);
  }
  execute("PRAGMA foreign_keys = ON");
  if (dsn != ":memory:") execute("PRAGMA journal_mode = WAL; PRAGMA synchronous = NORMAL");
}

Database::~Database() {
  cache_.clear();
  sqlite3_close(db_);
}

void Database::execute(std::string_view sql) {
  auto guard = lock();
  char* error = nullptr;
  if (sqlite3_exec(db_, std::string{sql}.c_str(), nullptr, nullptr, &error) != SQLITE_OK) {
    std::string message = error ? error : "unknown error";
    sqlite3_free(error);
    throw StorageError("execute: " + message);
  }
}

Statement& Database::prepare(const std::string& text) {
  auto it = cache_.find(text);
  if (it == cache_.end())
    it = cache_.emplace(text, std::make_unique<Statement>(db_, text)).first;
  it->second->reset();
  return *it->second;
}

std::int64_t Database::scalar_int64(const std::string& text) {
  auto guard = lock();
  Statement& stmt = prepare(text);
  const std::int64_t value = stmt.step() ? stmt.column_int64(0) : 0;
  stmt.reset();
  return value;
}

std::uint64_t Database::file_size() {
  if (dsn_ == ":memory:") return 0;
  auto guard = lock();
  sqlite3_wal_checkpoint_v2(db_, nullptr, SQLITE_CHECKPOINT_TRUNCATE, nullptr, nullptr);
  std::error_code ec;
  const auto size = std::filesystem::file_size(dsn_, ec);
  if (ec) throw StorageError("file size of '" + dsn_ + "': " + ec.message());
  return size;
}

Transaction::Transaction(Database& db) : db_(db) { db_.prepare("BEGIN IMMEDIATE").execute(); }

Transaction::~Transaction() {
  if (!done_) {
    try {
      db_.prepare("ROLLBACK").execute();
    } catch (...) {
    }
  }
}

void Transaction::commit() {
  db_.prepare("COMMIT").execute();
  done_ = true;
}

std::string quote(std::string_view text) {
  std::string out = "'";
  for (char c : text) {
    if (c == '\'') out.push_back('\'');
    out.push_back(c);
  }
  out.push_back('\'');
  return out;
}

}  // namespace pbfd::sql
