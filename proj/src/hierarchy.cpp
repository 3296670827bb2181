#include "pbfd/hierarchy.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace pbfd {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::size_t kMaxNameBytes = 100;
constexpr std::size_t kMaxLabelBytes = 50;

std::string display(std::string_view path) {
  return path.empty() ? std::string{"<root>"} : std::string{path};
}

[[noreturn]] void fail(std::string_view path, const std::string& what) {
  throw HierarchyError("hierarchy: " + what + " at '" + display(path) + "'");
}

bool is_identifier_chars(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_';
  });
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string alnum_only(std::string_view s) {
  std::string out;
  for (unsigned char c : s)
    if (std::isalnum(c)) out.push_back(static_cast<char>(c));
  return out;
}

const json& member_or_null(const json& object, const char* key) {
  static const json null_value;
  auto it = object.find(key);
  return it == object.end() ? null_value : *it;
}

std::string optional_string(const json& object, const char* key, std::string_view path) {
  const json& value = member_or_null(object, key);
  if (value.is_null()) return {};
  if (!value.is_string()) fail(path, std::string{"'"} + key + "' must be a string");
  return value.get<std::string>();
}

void check_keys(const json& object, std::initializer_list<std::string_view> allowed,
                std::string_view path) {
  for (const auto& [key, value] : object.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      fail(path, "unknown key '" + key + "'");
  }
}

void check_label(const std::string& label, std::string_view path) {
  if (label.size() > kMaxLabelBytes) fail(path, "level label longer than 50 bytes");
}

// Builds the subtree for `node`. Parent pointers are wired later, once the
// tree no longer moves.
void build_children(Vertex& v, const json& node) {
  const json& children = member_or_null(node, "children");
  if (children.is_null()) return;
  if (!children.is_array()) fail(v.path, "'children' must be an array");
  if (children.size() > kMaxChildren)
    fail(v.path, "more than 63 children (" + std::to_string(children.size()) + ")");

  std::unordered_set<std::string> seen;
  v.children.reserve(children.size());
  for (std::size_t k = 0; k < children.size(); ++k) {
    const json& child_node = children[k];
    if (!child_node.is_object()) fail(v.path, "child #" + std::to_string(k) + " is not an object");
    check_keys(child_node, {"name", "levelLabel", "columnToken", "children"}, v.path);

    const json& name = member_or_null(child_node, "name");
    if (!name.is_string()) fail(v.path, "child #" + std::to_string(k) + " has no string 'name'");

    Vertex child;
    child.name = name.get<std::string>();
    child.path = child_path(v.path, child.name);
    if (child.name.empty()) fail(v.path, "empty name for child #" + std::to_string(k));
    if (child.name.find('/') != std::string::npos) fail(child.path, "name contains '/'");
    if (child.name.size() > kMaxNameBytes) fail(child.path, "name longer than 100 bytes");
    if (!seen.insert(child.name).second) fail(child.path, "duplicate sibling name");

    child.bit_id = Bitmap{1} << k;
    child.depth = v.depth + 1;
    child.level_label = v.child_level_label;

    // Labels first: grandchildren inherit them during the recursion.
    const json& grandchildren = member_or_null(child_node, "children");
    if (grandchildren.is_array() && !grandchildren.empty()) {
      child.child_level_label = optional_string(child_node, "levelLabel", child.path);
      if (child.child_level_label.empty())
        child.child_level_label = "Level " + std::to_string(child.depth + 1);
      check_label(child.child_level_label, child.path);
      child.column_token = optional_string(child_node, "columnToken", child.path);
      if (child.column_token.empty()) child.column_token = default_column_token(child.name);
      if (!is_identifier_chars(child.column_token))
        fail(child.path, "column token '" + child.column_token + "' is not [A-Za-z0-9_]+");
    }
    build_children(child, child_node);
    v.children.push_back(std::move(child));
  }
}

void wire_parents(Vertex& v) {
  for (Vertex& child : v.children) {
    child.parent = &v;
    wire_parents(child);
  }
}

// SQL identifiers are case-insensitive, so uniqueness is checked on lowercase.
void check_identifiers(const Hierarchy& h) {
  std::unordered_set<std::string> columns{"idvisitedlocation", "idperson", "idreasons"};
  std::unordered_set<std::string> tables{"person", "visitedlocation", "reason",
                                         "visitedlocationreport"};
  for (const Vertex* v : h.internal_vertices()) {
    const std::string column = column_name(*v);
    if (!columns.insert(lowercase(column)).second)
      fail(v->path, "duplicate derived column name '" + column + "'");
    const std::string table = lookup_table_name(*v);
    if (!tables.insert(lowercase(table)).second)
      fail(v->path, "duplicate derived table name '" + table + "'");
  }
}

ordered_json to_document(const Vertex& v) {
  ordered_json node;
  node["name"] = v.name;
  if (!v.is_leaf()) {
    node["levelLabel"] = v.child_level_label;
    node["columnToken"] = v.column_token;
    ordered_json children = ordered_json::array();
    for (const Vertex& child : v.children) children.push_back(to_document(child));
    node["children"] = std::move(children);
  }
  return node;
}

}  // namespace

VertexPath parent_path(std::string_view path) {
  const auto slash = path.rfind('/');
  return slash == std::string_view::npos ? VertexPath{} : VertexPath{path.substr(0, slash)};
}

VertexPath child_path(std::string_view parent, std::string_view name) {
  if (parent.empty()) return VertexPath{name};
  VertexPath out{parent};
  out.push_back('/');
  out.append(name);
  return out;
}

std::string default_column_token(std::string_view name) { return alnum_only(name) + "s"; }

const Vertex* Hierarchy::find(std::string_view path) const {
  auto it = by_path_.find(std::string{path});
  return it == by_path_.end() ? nullptr : it->second;
}

void Hierarchy::index() {
  wire_parents(*root_);
  std::deque<Vertex*> queue{root_.get()};
  while (!queue.empty()) {
    Vertex* v = queue.front();
    queue.pop_front();
    v->bfs_index = breadth_first_.size();
    breadth_first_.push_back(v);
    by_path_.emplace(v->path, v);
    max_depth_ = std::max(max_depth_, v->depth);
    if (!v->is_leaf()) internal_.push_back(v);
    for (Vertex& child : v->children) queue.push_back(&child);
  }
}

Hierarchy parse_hierarchy(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw HierarchyError(std::string{"hierarchy: malformed JSON: "} + e.what());
  }
  if (!doc.is_object()) fail("", "document must be a JSON object");
  check_keys(doc, {"levelLabel", "columnToken", "children", "reasons"}, "");

  auto root = std::make_unique<Vertex>();
  root->child_level_label = optional_string(doc, "levelLabel", "");
  root->column_token = optional_string(doc, "columnToken", "");
  if (root->child_level_label.empty()) fail("", "missing 'levelLabel'");
  if (alnum_only(root->child_level_label).empty())
    fail("", "top-level 'levelLabel' has no alphanumeric characters");
  check_label(root->child_level_label, "");
  if (root->column_token.empty()) fail("", "missing 'columnToken'");
  if (!is_identifier_chars(root->column_token))
    fail("", "column token '" + root->column_token + "' is not [A-Za-z0-9_]+");
  build_children(*root, doc);
  if (root->is_leaf()) fail("", "hierarchy has no vertices");

  Hierarchy h;
  const json& reasons = member_or_null(doc, "reasons");
  if (!reasons.is_null()) {
    if (!reasons.is_array()) fail("", "'reasons' must be an array");
    if (reasons.size() > kMaxChildren) fail("", "more than 63 reasons");
    std::unordered_set<std::string> seen;
    for (std::size_t k = 0; k < reasons.size(); ++k) {
      const json& r = reasons[k];
      if (!r.is_object() || !member_or_null(r, "name").is_string())
        fail("", "reason #" + std::to_string(k) + " has no string 'name'");
      check_keys(r, {"name"}, "");
      Reason reason{Bitmap{1} << k, r["name"].get<std::string>()};
      if (reason.name.empty()) fail("", "empty reason name #" + std::to_string(k));
      if (reason.name.size() > kMaxNameBytes) fail("", "reason name longer than 100 bytes");
      if (!seen.insert(reason.name).second) fail("", "duplicate reason '" + reason.name + "'");
      h.reasons_.push_back(std::move(reason));
    }
  }

  h.root_ = std::move(root);
  h.index();
  check_identifiers(h);
  return h;
}

Hierarchy load_hierarchy(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw HierarchyError("hierarchy: cannot open " + file.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_hierarchy(buffer.str());
}

std::string serialize_hierarchy(const Hierarchy& h) {
  ordered_json doc;
  doc["levelLabel"] = h.root().child_level_label;
  doc["columnToken"] = h.root().column_token;
  ordered_json children = ordered_json::array();
  for (const Vertex& child : h.root().children) children.push_back(to_document(child));
  doc["children"] = std::move(children);
  ordered_json reasons = ordered_json::array();
  for (const Reason& r : h.reasons()) reasons.push_back({{"name", r.name}});
  doc["reasons"] = std::move(reasons);
  return doc.dump(2) + "\n";
}

const Vertex& vertex_by_path(const Hierarchy& h, std::string_view path) {
  const Vertex* v = h.find(path);
  if (v == nullptr) throw NotFoundError("unknown vertex path '" + std::string{path} + "'");
  return *v;
}

Bitmap domain_mask(const Vertex& v) {
  if (v.is_leaf()) throw NotFoundError("leaf vertex '" + display(v.path) + "' has no domain");
  Bitmap mask = 0;
  for (const Vertex& child : v.children) mask |= child.bit_id;
  return mask;
}

Bitmap domain_mask(const Hierarchy& h, std::string_view path) {
  return domain_mask(vertex_by_path(h, path));
}

std::string column_name(const Vertex& v) {
  if (v.is_leaf()) throw NotFoundError("leaf vertex '" + display(v.path) + "' has no column");
  return "Id" + v.column_token;
}

std::string lookup_table_name(const Vertex& v) {
  if (v.is_leaf()) throw NotFoundError("leaf vertex '" + display(v.path) + "' has no lookup table");
  if (v.is_root()) return alnum_only(v.child_level_label);
  return "Lookup" + v.column_token;
}

std::string lookup_key_column(const Vertex& v) { return "Id" + lookup_table_name(v); }

}  // namespace pbfd
