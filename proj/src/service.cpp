#include "pbfd/service.hpp"

#include <iostream>

#include <httplib.h>

#include "pbfd/storage_traditional.hpp"
#include "pbfd/storage_wide.hpp"

namespace pbfd::service {
namespace {

using nlohmann::json;

constexpr std::size_t kMaxPersonName = 100;

class BadRequest : public Error {
 public:
  using Error::Error;
};

class WideBackend final : public SelectionBackend {
 public:
  explicit WideBackend(std::unique_ptr<wide::Store> store) : store_(std::move(store)) {}

  BackendKind kind() const override { return BackendKind::pbfd; }
  PersonId create_person(std::string_view name) override { return store_->create_person(name); }
  bool has_person(PersonId person) override { return store_->has_person(person); }
  SelectionRecord read_record(PersonId person) override { return store_->read_record(person); }
  SelectionRecord modify_record(PersonId person, const Update& update) override {
    return store_->modify_record(person, update);
  }
  std::vector<ReportRow> report(PersonId person) override {
    return report_rows(store_->read_record(person), store_->hierarchy());
  }

 private:
  std::unique_ptr<wide::Store> store_;
};

class TraditionalBackend final : public SelectionBackend {
 public:
  explicit TraditionalBackend(std::unique_ptr<traditional::Store> store) : store_(std::move(store)) {}

  BackendKind kind() const override { return BackendKind::traditional; }
  PersonId create_person(std::string_view name) override { return store_->create_person(name); }
  bool has_person(PersonId person) override { return store_->has_person(person); }

  SelectionRecord read_record(PersonId person) override {
    const traditional::Visits visits = store_->read_visits(person);
    return record_from_checked_set(visits.paths, store_->hierarchy(), visits.reasons);
  }

  SelectionRecord modify_record(PersonId person, const Update& update) override {
    const Hierarchy& h = store_->hierarchy();
    SelectionRecord result;
    store_->modify_visits(person, [&](const traditional::Visits& current) {
      result = canonical(update(record_from_checked_set(current.paths, h, current.reasons)));
      return traditional::Visits{checked_set(result, h), result.reasons};
    });
    return result;
  }

  std::vector<ReportRow> report(PersonId person) override { return store_->report_query(person); }

 private:
  std::unique_ptr<traditional::Store> store_;
};

json parse_body(std::string_view body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw BadRequest(std::string{"malformed JSON body: "} + e.what());
  }
}

std::vector<CheckBoxListItem> parse_items(std::string_view body) {
  json doc = parse_body(body);
  if (doc.is_object() && doc.contains("items")) doc = doc["items"];
  if (!doc.is_array()) throw BadRequest("expected a JSON array of checkbox items");
  return doc.get<std::vector<CheckBoxListItem>>();
}

std::string css_class_for(const Vertex& child) { return child.is_leaf() ? "leaf" : "branch"; }

}  // namespace

std::unique_ptr<SelectionBackend> make_backend(BackendKind kind, std::shared_ptr<const Hierarchy> h,
                                               const std::string& dsn) {
  if (kind == BackendKind::pbfd)
    return std::make_unique<WideBackend>(wide::open_sqlite_store(std::move(h), dsn));
  return std::make_unique<TraditionalBackend>(traditional::open_sqlite_store(std::move(h), dsn));
}

json record_to_json(const SelectionRecord& r) {
  json bitmaps = json::object();
  for (const auto& [path, bits] : r.bitmaps)
    if (bits != 0) bitmaps[path] = bits;
  return json{{"bitmaps", std::move(bitmaps)}, {"reasons", r.reasons}};
}

json report_to_json(const std::vector<ReportRow>& rows) {
  json out = json::array();
  for (const ReportRow& row : rows) {
    json cells = json::array();
    for (const auto& cell : row.cells) cells.push_back(cell ? json(*cell) : json(nullptr));
    out.push_back(std::move(cells));
  }
  return out;
}

Service::Service(std::shared_ptr<const Hierarchy> h, std::unique_ptr<SelectionBackend> backend)
    : hierarchy_(std::move(h)), backend_(std::move(backend)) {}

template <typename Fn>
ApiResponse Service::guarded(Fn&& fn) {
  const auto error = [](int status, const std::exception& e) {
    return ApiResponse{status, json{{"error", e.what()}}};
  };
  try {
    return fn();
  } catch (const BadRequest& e) {
    return error(400, e);
  } catch (const OutOfDomainError& e) {
    return error(400, e);
  } catch (const NotFoundError& e) {
    return error(404, e);
  } catch (const OrphanStepError& e) {
    return error(409, e);
  } catch (const InvalidRecordError& e) {
    return error(422, e);
  } catch (const json::exception& e) {
    return error(400, e);
  } catch (const std::exception& e) {
    return error(500, e);
  }
}

SelectionRecord Service::load(std::int64_t person) {
  if (!backend_->has_person(PersonId{person}))
    throw NotFoundError("unknown person " + std::to_string(person));
  return backend_->read_record(PersonId{person});
}

ApiResponse Service::create_person(std::string_view body) {
  return guarded([&] {
    const json doc = parse_body(body);
    if (!doc.is_object() || !doc.contains("name") || !doc["name"].is_string())
      throw BadRequest("expected {\"name\": string}");
    const auto name = doc["name"].get<std::string>();
    if (name.empty()) throw BadRequest("person name must not be empty");
    if (name.size() > kMaxPersonName) throw BadRequest("person name longer than 100 bytes");
    const PersonId id = backend_->create_person(name);
    return ApiResponse{201, json{{"id", to_int(id)}, {"name", name}}};
  });
}

ApiResponse Service::get_hierarchy() const {
  const Hierarchy& h = *hierarchy_;
  json vertices = json::array();
  for (const Vertex* v : h.breadth_first()) {
    json entry{{"path", v->path}, {"name", v->name}, {"depth", v->depth}, {"internal", !v->is_leaf()}};
    if (!v->is_root()) {
      entry["levelLabel"] = v->level_label;
      entry["bitId"] = v->bit_id;
    }
    if (!v->is_leaf()) {
      entry["childLevelLabel"] = v->child_level_label;
      entry["domain"] = domain_mask(*v);
      entry["column"] = column_name(*v);
    }
    vertices.push_back(std::move(entry));
  }
  json reasons = json::array();
  for (const Reason& r : h.reasons()) reasons.push_back({{"id", r.bit_id}, {"name", r.name}});
  return {200, json{{"levelLabel", h.root().child_level_label},
                    {"rootDomain", domain_mask(h.root())},
                    {"rootDomainSize", h.root().children.size()},
                    {"vertexCount", h.vertex_count()},
                    {"maxDepth", h.max_depth()},
                    {"vertices", std::move(vertices)},
                    {"reasons", std::move(reasons)}}};
}

ApiResponse Service::get_checkboxes(std::int64_t person, std::string_view path) {
  return guarded([&] {
    const Vertex& v = vertex_by_path(*hierarchy_, path);
    if (v.is_leaf()) throw NotFoundError("'" + std::string{path} + "' has no checkbox step");
    const SelectionRecord r = load(person);
    if (!v.is_root() && (r.bitmap(v.parent->path) & v.bit_id) == 0)
      throw OrphanStepError("step '" + std::string{path} + "' is not reachable");
    auto items = to_checkbox_items(v, r.bitmap(path));
    for (std::size_t i = 0; i < items.size(); ++i) items[i].css_class = css_class_for(v.children[i]);
    return ApiResponse{200, json{{"path", v.path},
                                 {"levelLabel", v.child_level_label},
                                 {"bitmap", r.bitmap(path)},
                                 {"items", items}}};
  });
}

ApiResponse Service::put_checkboxes(std::int64_t person, std::string_view path, std::string_view body) {
  return guarded([&] {
    const Vertex& v = vertex_by_path(*hierarchy_, path);
    if (v.is_leaf()) throw NotFoundError("'" + std::string{path} + "' has no checkbox step");
    const auto items = parse_items(body);
    if (!backend_->has_person(PersonId{person}))
      throw NotFoundError("unknown person " + std::to_string(person));

    const SelectionRecord updated = backend_->modify_record(
        PersonId{person},
        [&](const SelectionRecord& current) { return apply_update(current, *hierarchy_, path, items); });
    if (!validate_record(updated, *hierarchy_).empty())
      throw InvalidRecordError("stored record failed validation");

    const Bitmap bits = updated.bitmap(path);
    json next_steps = json::array();
    for (const Vertex& child : v.children)
      if ((bits & child.bit_id) != 0 && !child.is_leaf()) next_steps.push_back(child.path);
    return ApiResponse{200, json{{"path", v.path},
                                 {"bitmap", bits},
                                 {"record", record_to_json(updated)},
                                 {"nextSteps", std::move(next_steps)}}};
  });
}

ApiResponse Service::get_reasons(std::int64_t person) {
  return guarded([&] {
    const SelectionRecord r = load(person);
    return ApiResponse{200, json{{"bitmap", r.reasons}, {"items", reason_items(*hierarchy_, r.reasons)}}};
  });
}

ApiResponse Service::put_reasons(std::int64_t person, std::string_view body) {
  return guarded([&] {
    const auto items = parse_items(body);
    if (!backend_->has_person(PersonId{person}))
      throw NotFoundError("unknown person " + std::to_string(person));
    const SelectionRecord updated = backend_->modify_record(
        PersonId{person},
        [&](const SelectionRecord& current) { return apply_reasons_update(current, *hierarchy_, items); });
    return ApiResponse{200, json{{"bitmap", updated.reasons},
                                 {"reasons", decode_reasons(updated, *hierarchy_)},
                                 {"record", record_to_json(updated)}}};
  });
}

ApiResponse Service::get_report(std::int64_t person) {
  return guarded([&] {
    if (!backend_->has_person(PersonId{person}))
      throw NotFoundError("unknown person " + std::to_string(person));
    const auto rows = backend_->report(PersonId{person});
    return ApiResponse{200, json{{"depth", hierarchy_->max_depth()}, {"rows", report_to_json(rows)}}};
  });
}

ApiResponse Service::get_record(std::int64_t person) {
  return guarded([&] { return ApiResponse{200, record_to_json(load(person))}; });
}

void Service::mount(httplib::Server& server) {
  const auto reply = [](httplib::Response& res, const ApiResponse& api) {
    res.status = api.status;
    res.set_content(api.body.dump(), "application/json");
  };
  // Ids too large for int64 cannot exist; -1 maps them onto a 404.
  const auto person_of = [](const httplib::Request& req) -> std::int64_t {
    try {
      return std::stoll(req.matches[1]);
    } catch (const std::out_of_range&) {
      return -1;
    }
  };
  const auto path_of = [](const httplib::Request& req) {
    return req.has_param("path") ? req.get_param_value("path") : std::string{};
  };

  server.Post("/api/persons", [=, this](const httplib::Request& req, httplib::Response& res) {
    reply(res, create_person(req.body));
  });
  server.Get("/api/hierarchy", [=, this](const httplib::Request&, httplib::Response& res) {
    reply(res, get_hierarchy());
  });
  server.Get(R"(/api/persons/(\d+)/checkboxes)", [=, this](const httplib::Request& req, httplib::Response& res) {
    reply(res, get_checkboxes(person_of(req), path_of(req)));
  });
  server.Put(R"(/api/persons/(\d+)/checkboxes)", [=, this](const httplib::Request& req, httplib::Response& res) {
    reply(res, put_checkboxes(person_of(req), path_of(req), req.body));
  });
  server.Get(R"(/api/persons/(\d+)/reasons)", [=, this](const httplib::Request& req, httplib::Response& res) {
    reply(res, get_reasons(person_of(req)));
  });
  server.Put(R"(/api/persons/(\d+)/reasons)", [=, this](const httplib::Request& req, httplib::Response& res) {
    reply(res, put_reasons(person_of(req), req.body));
  });
  server.Get(R"(/api/persons/(\d+)/report)", [=, this](const httplib::Request& req, httplib::Response& res) {
    reply(res, get_report(person_of(req)));
  });
  server.Get(R"(/api/persons/(\d+)/record)", [=, this](const httplib::Request& req, httplib::Response& res) {
    reply(res, get_record(person_of(req)));
  });
}

int run_server(const ServiceConfig& config) {
  auto hierarchy = std::make_shared<const Hierarchy>(load_hierarchy(config.hierarchy_path));
  Service service(hierarchy, make_backend(config.backend, hierarchy, config.store_dsn));

  const auto colon = config.listen_address.rfind(':');
  if (colon == std::string::npos) throw std::invalid_argument("listen address must be host:port");
  const std::string host = config.listen_address.substr(0, colon);
  const int port = std::stoi(config.listen_address.substr(colon + 1));

  httplib::Server server;
  service.mount(server);
  std::cerr << "pbfd-server: " << to_string(config.backend) << " backend on " << host << ":" << port
            << "\n";
  return server.listen(host, port) ? 0 : 1;
}

}  // namespace pbfd::service
