#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include <json.hpp>

#include "pbfd/hierarchy.hpp"
#include "pbfd/selection.hpp"

namespace httplib {
class Server;
}

namespace pbfd::service {

struct ServiceConfig {
  std::filesystem::path hierarchy_path = "places.json";
  std::string store_dsn = ":memory:";
  std::string listen_address = "127.0.0.1:8080";
  BackendKind backend = BackendKind::pbfd;
};

/// Storage seen through SelectionRecords, whichever schema sits underneath.
class SelectionBackend {
 public:
  using Update = std::function<SelectionRecord(const SelectionRecord&)>;

  virtual ~SelectionBackend() = default;
  virtual BackendKind kind() const = 0;
  virtual PersonId create_person(std::string_view name) = 0;
  virtual bool has_person(PersonId person) = 0;
  virtual SelectionRecord read_record(PersonId person) = 0;
  /// Applies `update` and persists the result atomically for the person.
  virtual SelectionRecord modify_record(PersonId person, const Update& update) = 0;
  virtual std::vector<ReportRow> report(PersonId person) = 0;
};

std::unique_ptr<SelectionBackend> make_backend(BackendKind kind, std::shared_ptr<const Hierarchy> h,
                                               const std::string& dsn);

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// Transport-independent request handlers; mount() wires them onto HTTP routes.
class Service {
 public:
  Service(std::shared_ptr<const Hierarchy> h, std::unique_ptr<SelectionBackend> backend);

  ApiResponse create_person(std::string_view body);
  ApiResponse get_hierarchy() const;
  ApiResponse get_checkboxes(std::int64_t person, std::string_view path);
  ApiResponse put_checkboxes(std::int64_t person, std::string_view path, std::string_view body);
  ApiResponse get_reasons(std::int64_t person);
  ApiResponse put_reasons(std::int64_t person, std::string_view body);
  ApiResponse get_report(std::int64_t person);
  ApiResponse get_record(std::int64_t person);

  void mount(httplib::Server& server);

 private:
  template <typename Fn>
  ApiResponse guarded(Fn&& fn);
  SelectionRecord load(std::int64_t person);

  std::shared_ptr<const Hierarchy> hierarchy_;
  std::unique_ptr<SelectionBackend> backend_;
};

nlohmann::json record_to_json(const SelectionRecord& r);
nlohmann::json report_to_json(const std::vector<ReportRow>& rows);

/// Loads the hierarchy, opens the backend and serves until the process exits.
int run_server(const ServiceConfig& config);

}  // namespace pbfd::service
