#include "pbfd/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <exception>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "pbfd/storage_traditional.hpp"
#include "pbfd/storage_wide.hpp"

namespace pbfd::bench {
namespace {

using Clock = std::chrono::steady_clock;

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << hash;
  return out.str();
}

// Uniform in [0, 1) from the top 53 bits; identical on every standard library.
double unit_interval(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::string fixed(double value, int precision) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(precision) << value;
  return out.str();
}

class WideTarget final : public Target {
 public:
  WideTarget(std::shared_ptr<const Hierarchy> h, const std::string& dsn)
      : hierarchy_(h), store_(wide::open_sqlite_store(std::move(h), dsn)) {
    store_->create_report_view();
  }

  BackendKind kind() const override { return BackendKind::pbfd; }
  PersonId add_person(std::string_view name) override { return store_->create_person(name); }
  int write(PersonId person, const Visit& visit) override {
    return store_->upsert_record(person, record_from_checked_set(visit.paths, *hierarchy_, visit.reasons));
  }
  Visit read(PersonId person) override {
    const SelectionRecord r = store_->read_record(person);
    return Visit{checked_set(r, *hierarchy_), r.reasons};
  }
  std::vector<ReportRow> report(PersonId person) override { return store_->query_report_view(person); }
  StorageReport storage() override { return store_->measure_storage(); }

 private:
  std::shared_ptr<const Hierarchy> hierarchy_;
  std::unique_ptr<wide::Store> store_;
};

class TraditionalTarget final : public Target {
 public:
  TraditionalTarget(std::shared_ptr<const Hierarchy> h, const std::string& dsn)
      : store_(traditional::open_sqlite_store(std::move(h), dsn)) {}

  BackendKind kind() const override { return BackendKind::traditional; }
  PersonId add_person(std::string_view name) override { return store_->create_person(name); }
  int write(PersonId person, const Visit& visit) override {
    return store_->write_visits(person, visit.paths, visit.reasons);
  }
  Visit read(PersonId person) override {
    auto visits = store_->read_visits(person);
    return Visit{std::move(visits.paths), visits.reasons};
  }
  std::vector<ReportRow> report(PersonId person) override { return store_->report_query(person); }
  StorageReport storage() override { return store_->measure_storage(); }

 private:
  std::unique_ptr<traditional::Store> store_;
};

int expected_rows_written(BackendKind kind, const Visit& visit) {
  if (kind == BackendKind::pbfd) return 1;
  return static_cast<int>(visit.paths.size()) + std::popcount(visit.reasons);
}

std::vector<ReportRow> sorted(std::vector<ReportRow> rows) {
  std::sort(rows.begin(), rows.end());
  return rows;
}

template <typename Fn>
std::int64_t time_ns(Fn&& fn) {
  const auto start = Clock::now();
  fn();
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
}

}  // namespace

std::string Workload::serialize() const {
  std::ostringstream out;
  out << nlohmann::json{{"seed", seed},
                        {"visitors", visitors},
                        {"density", density},
                        {"hierarchy", hierarchy_digest}}
             .dump()
      << "\n";
  for (const Visit& visit : visits)
    out << nlohmann::json{{"reasons", visit.reasons}, {"paths", visit.paths}}.dump() << "\n";
  return out.str();
}

std::string Workload::id() const {
  return "seed=" + std::to_string(seed) + ",visitors=" + std::to_string(visitors) +
         ",density=" + fixed(density, 6) + ",hierarchy=" + hierarchy_digest;
}

Workload generate_workload(const Hierarchy& h, std::uint64_t seed, std::size_t visitors,
                           double density) {
  if (!(density >= 0.0 && density <= 1.0))
    throw std::invalid_argument("density must be within [0, 1]");
  Workload w{seed, visitors, density, fnv1a_hex(serialize_hierarchy(h)), {}};
  w.visits.reserve(visitors);

  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < visitors; ++i) {
    Visit visit;
    std::deque<const Vertex*> open{&h.root()};
    while (!open.empty()) {
      const Vertex* v = open.front();
      open.pop_front();
      for (const Vertex& child : v->children) {
        if (unit_interval(rng) < density) {
          visit.paths.insert(child.path);
          open.push_back(&child);
        }
      }
    }
    for (const Reason& reason : h.reasons())
      if (unit_interval(rng) < density) visit.reasons |= reason.bit_id;
    w.visits.push_back(std::move(visit));
  }
  return w;
}

std::string_view to_string(Op op) {
  switch (op) {
    case Op::write: return "write";
    case Op::read: return "read";
    case Op::report: return "report";
  }
  return "unknown";
}

Stats summarize(std::span<const std::int64_t> samples) {
  if (samples.empty()) throw std::invalid_argument("summarize: no samples");
  std::vector<std::int64_t> v(samples.begin(), samples.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  Stats s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0,
                           [](double acc, std::int64_t x) { return acc + static_cast<double>(x); }) /
           static_cast<double>(n);
  s.median = v[(n - 1) / 2];
  // ceil(0.95 n) in integers: (95 n + 99) / 100.
  const std::size_t rank = (95 * n + 99) / 100;
  s.p95 = v[std::max<std::size_t>(rank, 1) - 1];
  s.min = v.front();
  s.max = v.back();
  return s;
}

std::unique_ptr<Target> make_target(BackendKind kind, std::shared_ptr<const Hierarchy> h,
                                    const std::string& dsn) {
  if (kind == BackendKind::pbfd) return std::make_unique<WideTarget>(std::move(h), dsn);
  return std::make_unique<TraditionalTarget>(std::move(h), dsn);
}

std::vector<BenchResult> run(Target& target, const Hierarchy& h, const Workload& workload,
                             std::size_t threads) {
  const std::size_t n = workload.visits.size();
  std::vector<PersonId> persons;
  persons.reserve(n);
  for (std::size_t i = 0; i < n; ++i) persons.push_back(target.add_person("visitor-" + std::to_string(i)));

  std::vector<std::vector<ReportRow>> expected_reports(n);
  for (std::size_t i = 0; i < n; ++i) expected_reports[i] = sorted(report_rows(workload.visits[i].paths, h));

  std::vector<std::int64_t> writes(n), reads(n), reports(n);
  const auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Visit& visit = workload.visits[i];
      int rows_written = 0;
      Visit back;
      std::vector<ReportRow> rows;
      writes[i] = time_ns([&] { rows_written = target.write(persons[i], visit); });
      reads[i] = time_ns([&] { back = target.read(persons[i]); });
      reports[i] = time_ns([&] { rows = target.report(persons[i]); });

      const std::string where = std::string{to_string(target.kind())} + " visitor " + std::to_string(i);
      if (rows_written != expected_rows_written(target.kind(), visit))
        throw CorrectnessError(where + ": write touched " + std::to_string(rows_written) + " rows, expected " +
                               std::to_string(expected_rows_written(target.kind(), visit)));
      if (back != visit) throw CorrectnessError(where + ": read-back differs from the written selection");
      if (sorted(std::move(rows)) != expected_reports[i])
        throw CorrectnessError(where + ": report rows differ from the frontier oracle");
    }
  };

  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    work(0, n);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          work(std::min(n, t * chunk), std::min(n, (t + 1) * chunk));
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& thread : pool) thread.join();
    for (auto& error : errors)
      if (error) std::rethrow_exception(error);
  }

  const StorageReport storage = target.storage();
  std::vector<BenchResult> results;
  for (auto [op, samples] : {std::pair{Op::write, &writes}, {Op::read, &reads}, {Op::report, &reports}}) {
    BenchResult r{target.kind(), op, workload.id(), std::move(*samples), std::nullopt, storage};
    if (!r.latencies_ns.empty()) r.stats = summarize(r.latencies_ns);
    results.push_back(std::move(r));
  }
  return results;
}

ComparisonReport compare(std::span<const BenchResult> traditional, std::span<const BenchResult> pbfd) {
  if (traditional.empty() || pbfd.empty()) throw std::invalid_argument("compare: missing results");
  ComparisonReport report;
  report.workload_id = traditional.front().workload_id;
  for (const auto* side : {&traditional, &pbfd})
    for (const BenchResult& r : *side)
      if (r.workload_id != report.workload_id)
        throw std::invalid_argument("compare: results come from different workloads");

  for (const BenchResult& t : traditional) {
    auto p = std::find_if(pbfd.begin(), pbfd.end(), [&](const BenchResult& r) { return r.op == t.op; });
    if (p == pbfd.end() || !t.stats || !p->stats) continue;
    const auto ratio = [](double a, double b) { return b > 0 ? a / b : 0.0; };
    report.speed.push_back({t.op, ratio(t.stats->mean, p->stats->mean),
                            ratio(static_cast<double>(t.stats->median), static_cast<double>(p->stats->median)),
                            ratio(static_cast<double>(t.stats->p95), static_cast<double>(p->stats->p95))});
  }
  report.traditional_logical_bytes = traditional.front().storage.logical_bytes;
  report.pbfd_logical_bytes = pbfd.front().storage.logical_bytes;
  report.storage_ratio = report.pbfd_logical_bytes == 0
                             ? 0.0
                             : static_cast<double>(report.traditional_logical_bytes) /
                                   static_cast<double>(report.pbfd_logical_bytes);
  return report;
}

std::string render(const ComparisonReport& report) {
  std::ostringstream out;
  out << "workload: " << report.workload_id << "\n"
      << "speed ratio traditional/pbfd (mean, median, p95):\n";
  for (const SpeedRatio& s : report.speed)
    out << "  " << std::left << std::setw(7) << to_string(s.op) << fixed(s.mean, 2) << "x  "
        << fixed(s.median, 2) << "x  " << fixed(s.p95, 2) << "x\n";
  out << "storage ratio traditional/pbfd: " << fixed(report.storage_ratio, 2) << "x ("
      << report.traditional_logical_bytes << " / " << report.pbfd_logical_bytes << " logical bytes)\n"
      << "published reference (production deployment, cited for context only): "
         "7-8x faster, ~11x storage\n";
  return out.str();
}

std::string to_csv(std::span<const BenchResult> results) {
  std::optional<std::uint64_t> baseline;
  for (const BenchResult& r : results)
    if (r.backend == BackendKind::traditional) baseline = r.storage.logical_bytes;

  std::ostringstream out;
  out << kCsvHeader << "\n";
  for (const BenchResult& r : results) {
    out << to_string(r.backend) << ',' << to_string(r.op) << ',' << r.latencies_ns.size() << ',';
    if (r.stats)
      out << fixed(r.stats->mean, 1) << ',' << r.stats->median << ',' << r.stats->p95 << ',';
    else
      out << ",,,";
    out << r.storage.logical_bytes << ',' << r.storage.physical_bytes << ',';
    if (baseline && r.storage.logical_bytes > 0)
      out << fixed(static_cast<double>(*baseline) / static_cast<double>(r.storage.logical_bytes), 6);
    out << "\n";
  }
  return out.str();
}

void write_csv(std::span<const BenchResult> results, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << to_csv(results);
  if (!out) throw std::runtime_error("write failed for " + file.string());
}

}  // namespace pbfd::bench
