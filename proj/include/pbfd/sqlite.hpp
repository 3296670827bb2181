#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

struct sqlite3;
struct sqlite3_stmt;

namespace pbfd::sql {

/// Prepared statement. Owned by the Database statement cache; parameters are
/// 1-based like the C API, columns 0-based.
class Statement {
 public:
  Statement(sqlite3* db, std::string_view text);
  ~Statement();
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;

  Statement& bind(int index, std::int64_t value);
  Statement& bind(int index, std::string_view value);
  Statement& bind_null(int index);

  /// True while a row is available.
  bool step();
  /// Runs to completion and resets; returns sqlite3_changes().
  int execute();
  void reset();

  std::int64_t column_int64(int index) const;
  std::optional<std::string> column_text(int index) const;
  int column_count() const;

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

/// One SQLite connection. All access goes through lock(); callers hold the
/// returned guard for the duration of a statement or transaction.
class Database {
 public:
  /// `dsn` is a file path or ":memory:".
  explicit Database(const std::string& dsn);
  ~Database();
  Database(const Database&) = delete;
  Database& operator=(const Database&) = delete;

  std::unique_lock<std::recursive_mutex> lock() { return std::unique_lock{mutex_}; }

  /// Executes one or more semicolon-separated statements.
  void execute(std::string_view sql);

  /// Cached prepared statement, reset and ready to bind.
  Statement& prepare(const std::string& text);

  std::int64_t scalar_int64(const std::string& text);

  /// Main database file size in bytes after a WAL checkpoint; 0 for in-memory.
  std::uint64_t file_size();

  const std::string& dsn() const { return dsn_; }
  sqlite3* handle() { return db_; }

 private:
  std::string dsn_;
  sqlite3* db_ = nullptr;
  std::recursive_mutex mutex_;
  std::map<std::string, std::unique_ptr<Statement>, std::less<>> cache_;
};

/// BEGIN IMMEDIATE on construction; rolls back unless commit() ran.
class Transaction {
 public:
  explicit Transaction(Database& db);
  ~Transaction();
  Transaction(const Transaction&) = delete;
  Transaction& operator=(const Transaction&) = delete;

  void commit();

 private:
  Database& db_;
  bool done_ = false;
};

/// Single-quoted SQL string literal.
std::string quote(std::string_view text);

}  // namespace pbfd::sql
