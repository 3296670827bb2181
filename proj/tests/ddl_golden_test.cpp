#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "generators.hpp"
#include "pbfd/storage_traditional.hpp"
#include "pbfd/storage_wide.hpp"

namespace pbfd {
namespace {

std::string read_fixture(const std::string& name) {
  std::ifstream in(std::string{PBFD_FIXTURES_DIR} + "/ddl/" + name, std::ios::binary);
  EXPECT_TRUE(in) << name;
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Regenerate with: pbfd-ddl --hierarchy places.json schema|view, pbfd-ddl traditional
TEST(DdlGolden, WideSchema) {
  EXPECT_EQ(wide::emit_schema_ddl(testing::sample_hierarchy()), read_fixture("pbfd_schema.sql"));
}

TEST(DdlGolden, ReportView) {
  EXPECT_EQ(wide::emit_report_view_ddl(testing::sample_hierarchy()), read_fixture("pbfd_report_view.sql"));
}

TEST(DdlGolden, Traditional) { EXPECT_EQ(traditional::emit_schema_ddl(), read_fixture("traditional.sql")); }

TEST(DdlGolden, IndependentOfParseInstance) {
  const Hierarchy again = load_hierarchy(testing::sample_hierarchy_path());
  EXPECT_EQ(wide::emit_schema_ddl(again), wide::emit_schema_ddl(testing::sample_hierarchy()));
  EXPECT_EQ(wide::emit_report_view_ddl(again), wide::emit_report_view_ddl(testing::sample_hierarchy()));
}

}  // namespace
}  // namespace pbfd
