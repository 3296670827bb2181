#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "pbfd/service.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical selection service"};
  pbfd::service::ServiceConfig config;
  std::string hierarchy = config.hierarchy_path.string();
  std::string backend = "pbfd";
  app.add_option("--hierarchy", hierarchy, "hierarchy JSON file")
      ->envname("PBFD_HIERARCHY")
      ->check(CLI::ExistingFile);
  app.add_option("--dsn", config.store_dsn, "SQLite database file or :memory:")->envname("PBFD_DSN");
  app.add_option("--listen", config.listen_address, "host:port")->envname("PBFD_LISTEN");
  app.add_option("--backend", backend, "pbfd or traditional")
      ->envname("PBFD_BACKEND")
      ->check(CLI::IsMember({"pbfd", "traditional"}));
  CLI11_PARSE(app, argc, argv);

  try {
    config.hierarchy_path = hierarchy;
    config.backend = pbfd::parse_backend(backend);
    return pbfd::service::run_server(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return EXIT_FAILURE;
  }
}
