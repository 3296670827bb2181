#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pbfd/hierarchy.hpp"
#include "pbfd/selection.hpp"
#include "pbfd/storage.hpp"
#include "pbfd/types.hpp"

namespace pbfd::bench {

struct Visit {
  PathSet paths;
  Bitmap reasons = 0;

  friend bool operator==(const Visit&, const Visit&) = default;
};

/// Seeded synthetic selections. A deterministic function of
/// (hierarchy, seed, visitors, density).
struct Workload {
  std::uint64_t seed = 0;
  std::size_t visitors = 0;
  double density = 0.0;
  std::string hierarchy_digest;
  std::vector<Visit> visits;

  /// Stable text form (JSON lines); used for byte comparisons.
  std::string serialize() const;
  /// Identifies the parameters; equal ids mean equal workloads.
  std::string id() const;
};

/// Top-down sampling: every child of a checked vertex (and every top-level
/// vertex) is checked independently with probability `density`; each reason
/// likewise. Throws std::invalid_argument unless density is in [0, 1].
Workload generate_workload(const Hierarchy& h, std::uint64_t seed, std::size_t visitors,
                           double density);

enum class Op { write, read, report };
std::string_view to_string(Op op);

struct Stats {
  double mean = 0.0;
  std::int64_t median = 0;  // lower middle for even n
  std::int64_t p95 = 0;     // nearest rank: sorted[ceil(0.95 n)], 1-based
  std::int64_t min = 0;
  std::int64_t max = 0;
};

/// Throws std::invalid_argument on empty input.
Stats summarize(std::span<const std::int64_t> samples);

struct BenchResult {
  BackendKind backend = BackendKind::pbfd;
  Op op = Op::write;
  std::string workload_id;
  std::vector<std::int64_t> latencies_ns;
  std::optional<Stats> stats;  // empty for an empty workload
  StorageReport storage;
};

/// Thrown when a backend returns something other than what was written.
class CorrectnessError : public Error {
 public:
  using Error::Error;
};

/// What the timing loop needs from a backend.
class Target {
 public:
  virtual ~Target() = default;
  virtual BackendKind kind() const = 0;
  virtual PersonId add_person(std::string_view name) = 0;
  /// Persists one visitor in one transaction; returns rows written.
  virtual int write(PersonId person, const Visit& visit) = 0;
  virtual Visit read(PersonId person) = 0;
  virtual std::vector<ReportRow> report(PersonId person) = 0;
  virtual StorageReport storage() = 0;
};

/// SQLite-backed target. The PBFD target reports through the generated view.
std::unique_ptr<Target> make_target(BackendKind kind, std::shared_ptr<const Hierarchy> h,
                                    const std::string& dsn);

/// Times write, read-back and report for every visitor. Read-back and report
/// are checked against the workload, and write row counts against the schema
/// shape, before any result is returned; a mismatch throws CorrectnessError.
/// Returns one result per op in write, read, report order.
std::vector<BenchResult> run(Target& target, const Hierarchy& h, const Workload& workload,
                             std::size_t threads = 1);

struct SpeedRatio {
  Op op = Op::write;
  double mean = 0.0;
  double median = 0.0;
  double p95 = 0.0;
};

struct ComparisonReport {
  std::string workload_id;
  std::vector<SpeedRatio> speed;  // traditional / pbfd, per op
  double storage_ratio = 0.0;     // traditional logical bytes / pbfd logical bytes
  std::uint64_t traditional_logical_bytes = 0;
  std::uint64_t pbfd_logical_bytes = 0;
};

/// Throws std::invalid_argument when the results come from different workloads.
ComparisonReport compare(std::span<const BenchResult> traditional, std::span<const BenchResult> pbfd);

/// Human-readable table with the published reference ratios alongside.
std::string render(const ComparisonReport& report);

inline constexpr std::string_view kCsvHeader =
    "backend,op,n,mean_ns,median_ns,p95_ns,logical_bytes,physical_bytes,ratio_vs_baseline";

/// ratio_vs_baseline is traditional logical bytes over the row's backend
/// logical bytes; empty when no traditional result is present.
std::string to_csv(std::span<const BenchResult> results);
void write_csv(std::span<const BenchResult> results, const std::filesystem::path& file);

}  // namespace pbfd::bench
