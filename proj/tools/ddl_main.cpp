#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "pbfd/hierarchy.hpp"
#include "pbfd/storage_traditional.hpp"
#include "pbfd/storage_wide.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Print generated DDL"};
  std::string hierarchy_path = "places.json";
  std::string what = "schema";
  app.add_option("--hierarchy", hierarchy_path, "hierarchy JSON file")->check(CLI::ExistingFile);
  app.add_option("what", what, "schema, view or traditional")
      ->check(CLI::IsMember({"schema", "view", "traditional"}));
  CLI11_PARSE(app, argc, argv);

  try {
    if (what == "traditional") {
      std::cout << pbfd::traditional::emit_schema_ddl();
      return EXIT_SUCCESS;
    }
    const auto h = pbfd::load_hierarchy(hierarchy_path);
    std::cout << (what == "schema" ? pbfd::wide::emit_schema_ddl(h) : pbfd::wide::emit_report_view_ddl(h));
    return EXIT_SUCCESS;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return EXIT_FAILURE;
  }
}
