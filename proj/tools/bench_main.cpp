#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>

#include "pbfd/bench.hpp"
#include "pbfd/hierarchy.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Write/read/report latency and storage: pbfd vs traditional"};
  std::string hierarchy_path = "places.json";
  std::string backend = "both";
  std::size_t visitors = 10000;
  double density = 0.5;
  std::uint64_t seed = 42;
  std::string out;
  std::size_t threads = 1;
  std::string dir;
  app.add_option("--hierarchy", hierarchy_path, "hierarchy JSON file")->check(CLI::ExistingFile);
  app.add_option("--backend", backend, "pbfd, traditional or both")
      ->check(CLI::IsMember({"pbfd", "traditional", "both"}));
  app.add_option("--visitors", visitors, "number of synthetic visitors");
  app.add_option("--density", density, "per-child check probability")->check(CLI::Range(0.0, 1.0));
  app.add_option("--seed", seed, "workload seed");
  app.add_option("--out", out, "CSV output file");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--dir", dir, "directory for database files (default: a fresh temp dir)");
  CLI11_PARSE(app, argc, argv);

  try {
    auto h = std::make_shared<const pbfd::Hierarchy>(pbfd::load_hierarchy(hierarchy_path));
    const auto workload = pbfd::bench::generate_workload(*h, seed, visitors, density);

    const bool keep = !dir.empty();
    const fs::path base = keep ? fs::path(dir)
                               : fs::temp_directory_path() / ("pbfd-bench-" + std::to_string(::getpid()));
    fs::create_directories(base);

    std::vector<pbfd::BackendKind> kinds;
    if (backend != "pbfd") kinds.push_back(pbfd::BackendKind::traditional);
    if (backend != "traditional") kinds.push_back(pbfd::BackendKind::pbfd);

    std::vector<pbfd::bench::BenchResult> all, trad, wide;
    for (pbfd::BackendKind kind : kinds) {
      const fs::path db = base / (std::string{pbfd::to_string(kind)} + ".sqlite");
      for (const char* suffix : {"", "-wal", "-shm"}) fs::remove(db.string() + suffix);
      auto target = pbfd::bench::make_target(kind, h, db.string());
      std::cerr << "running " << pbfd::to_string(kind) << " (" << visitors << " visitors)\n";
      auto results = pbfd::bench::run(*target, *h, workload, threads);
      (kind == pbfd::BackendKind::traditional ? trad : wide) = results;
      all.insert(all.end(), results.begin(), results.end());
    }
    if (!keep) fs::remove_all(base);

    if (!out.empty()) pbfd::bench::write_csv(all, out);
    std::cout << pbfd::bench::to_csv(all);
    if (!trad.empty() && !wide.empty() && !workload.visits.empty())
      std::cout << "\n" << pbfd::bench::render(pbfd::bench::compare(trad, wide));
    return EXIT_SUCCESS;
  } catch (const pbfd::bench::CorrectnessError& e) {
    std::cerr << "correctness gate failed: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return EXIT_FAILURE;
  }
}
