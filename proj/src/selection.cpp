#include "pbfd/selection.hpp"

#include <algorithm>

namespace pbfd {
namespace {

std::string display(std::string_view path) {
  return path.empty() ? std::string{"<root>"} : std::string{path};
}

const Vertex& internal_vertex(const Hierarchy& h, std::string_view path) {
  const Vertex& v = vertex_by_path(h, path);
  if (v.is_leaf()) throw NotFoundError("'" + display(path) + "' is a leaf and has no step");
  return v;
}

void check_item_ids(std::span<const CheckBoxListItem> items, Bitmap mask, std::string_view where) {
  for (const CheckBoxListItem& item : items) {
    if (!is_single_bit(item.id) || !is_subset(item.id, mask))
      throw OutOfDomainError("id " + std::to_string(item.id) + " is outside the domain of '" +
                             std::string{where} + "'");
  }
}

void clear_subtree(SelectionRecord& r, const Vertex& v) {
  r.bitmaps.erase(v.path);
  for (const Vertex& child : v.children)
    if (!child.is_leaf()) clear_subtree(r, child);
}

}  // namespace

void to_json(nlohmann::json& j, const CheckBoxListItem& item) {
  j = nlohmann::json{{"id", item.id},
                     {"description", item.description},
                     {"isChecked", item.is_checked},
                     {"class", item.css_class}};
}

void from_json(const nlohmann::json& j, CheckBoxListItem& item) {
  if (!j.is_object()) throw OutOfDomainError("checkbox item must be an object");
  auto id = j.find("id");
  if (id == j.end() || !id->is_number_unsigned())
    throw OutOfDomainError("checkbox item needs a non-negative integer 'id'");
  item.id = id->get<Bitmap>();
  item.description = j.value("description", std::string{});
  item.is_checked = j.value("isChecked", false);
  item.css_class = j.value("class", std::string{});
}

Bitmap SelectionRecord::bitmap(std::string_view path) const {
  auto it = bitmaps.find(std::string{path});
  return it == bitmaps.end() ? 0 : it->second;
}

SelectionRecord canonical(SelectionRecord r) {
  std::erase_if(r.bitmaps, [](const auto& entry) { return entry.second == 0; });
  return r;
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::out_of_domain: return "out-of-domain";
    case ViolationKind::orphan_child: return "orphan-child";
    case ViolationKind::reasons_out_of_domain: return "reasons-out-of-domain";
  }
  return "unknown";
}

Bitmap calculate_ids(std::span<const CheckBoxListItem> items) {
  Bitmap ids = 0;
  for (const CheckBoxListItem& item : items)
    if (item.is_checked) ids |= item.id;
  return ids;
}

std::vector<CheckBoxListItem> to_checkbox_items(const Vertex& v, Bitmap selected) {
  if (!is_subset(selected, domain_mask(v)))
    throw OutOfDomainError("bitmap " + std::to_string(selected) + " is outside the domain of '" +
                           display(v.path) + "'");
  std::vector<CheckBoxListItem> items;
  items.reserve(v.children.size());
  for (const Vertex& child : v.children)
    items.push_back({child.bit_id, child.name, (selected & child.bit_id) != 0, {}});
  return items;
}

std::vector<Violation> validate_record(const SelectionRecord& r, const Hierarchy& h) {
  std::vector<Violation> violations;
  for (const auto& [path, bits] : r.bitmaps) {
    if (bits == 0) continue;
    const Vertex* v = h.find(path);
    if (v == nullptr || v->is_leaf() || !is_subset(bits, domain_mask(*v))) {
      violations.push_back({path, ViolationKind::out_of_domain});
      continue;
    }
    if (!v->is_root() && (r.bitmap(v->parent->path) & v->bit_id) == 0)
      violations.push_back({path, ViolationKind::orphan_child});
  }
  if (!is_subset(r.reasons, h.reasons_mask()))
    violations.push_back({"", ViolationKind::reasons_out_of_domain});
  return violations;
}

SelectionRecord apply_update(const SelectionRecord& r, const Hierarchy& h, std::string_view path,
                             std::span<const CheckBoxListItem> items) {
  const Vertex& v = internal_vertex(h, path);
  if (!v.is_root() && (r.bitmap(v.parent->path) & v.bit_id) == 0)
    throw OrphanStepError("step '" + display(path) + "' is not reachable: '" +
                          display(v.parent->path) + "' does not have it checked");
  check_item_ids(items, domain_mask(v), display(path));

  const Bitmap updated = calculate_ids(items);
  const Bitmap cleared = r.bitmap(path) & ~updated;

  SelectionRecord next = r;
  next.bitmaps[v.path] = updated;
  for (const Vertex& child : v.children)
    if ((cleared & child.bit_id) != 0 && !child.is_leaf()) clear_subtree(next, child);
  next = canonical(std::move(next));

  if (auto violations = validate_record(next, h); !violations.empty())
    throw InvalidRecordError("update leaves an invalid record: " +
                             std::string{to_string(violations.front().kind)} + " at '" +
                             display(violations.front().path) + "'");
  return next;
}

SelectionRecord apply_reasons_update(const SelectionRecord& r, const Hierarchy& h,
                                     std::span<const CheckBoxListItem> items) {
  check_item_ids(items, h.reasons_mask(), "reasons");
  SelectionRecord next = r;
  next.reasons = calculate_ids(items);
  return next;
}

std::vector<CheckBoxListItem> reason_items(const Hierarchy& h, Bitmap selected) {
  if (!is_subset(selected, h.reasons_mask()))
    throw OutOfDomainError("reasons bitmap " + std::to_string(selected) + " is outside the domain");
  std::vector<CheckBoxListItem> items;
  for (const Reason& reason : h.reasons())
    items.push_back({reason.bit_id, reason.name, (selected & reason.bit_id) != 0, {}});
  return items;
}

PathSet checked_set(const SelectionRecord& r, const Hierarchy& h) {
  if (auto violations = validate_record(r, h); !violations.empty())
    throw InvalidRecordError("invalid record: " + std::string{to_string(violations.front().kind)} +
                             " at '" + display(violations.front().path) + "'");
  PathSet out;
  for (const auto& [path, bits] : r.bitmaps) {
    if (bits == 0) continue;
    for (const Vertex& child : h.find(path)->children)
      if ((bits & child.bit_id) != 0) out.insert(child.path);
  }
  return out;
}

bool is_upward_closed(const PathSet& paths) {
  return std::all_of(paths.begin(), paths.end(), [&](const VertexPath& p) {
    const VertexPath parent = parent_path(p);
    return parent.empty() || paths.contains(parent);
  });
}

SelectionRecord record_from_checked_set(const PathSet& paths, const Hierarchy& h, Bitmap reasons) {
  SelectionRecord r;
  r.reasons = reasons;
  for (const VertexPath& path : paths) {
    const Vertex& v = vertex_by_path(h, path);
    if (v.is_root()) throw InvalidRecordError("the root cannot be checked");
    if (!v.parent->is_root() && !paths.contains(v.parent->path))
      throw InvalidRecordError("path set is not upward-closed: '" + path +
                               "' is checked without '" + v.parent->path + "'");
    r.bitmaps[v.parent->path] |= v.bit_id;
  }
  if (!is_subset(reasons, h.reasons_mask()))
    throw OutOfDomainError("reasons bitmap " + std::to_string(reasons) + " is outside the domain");
  return r;
}

ReportRow report_row_for(const Vertex& frontier, std::size_t depth) {
  ReportRow row;
  row.cells.resize(depth);
  for (const Vertex* v = &frontier; !v->is_root(); v = v->parent) row.cells[v->depth - 1] = v->name;
  return row;
}

std::vector<ReportRow> report_rows(const PathSet& checked, const Hierarchy& h) {
  std::vector<const Vertex*> frontier;
  for (const VertexPath& path : checked) {
    const Vertex& v = vertex_by_path(h, path);
    const bool has_checked_child = std::any_of(v.children.begin(), v.children.end(),
                                               [&](const Vertex& c) { return checked.contains(c.path); });
    if (!has_checked_child) frontier.push_back(&v);
  }
  std::sort(frontier.begin(), frontier.end(),
            [](const Vertex* a, const Vertex* b) { return a->bfs_index < b->bfs_index; });

  std::vector<ReportRow> rows;
  rows.reserve(frontier.size());
  for (const Vertex* v : frontier) rows.push_back(report_row_for(*v, h.max_depth()));
  return rows;
}

std::vector<ReportRow> report_rows(const SelectionRecord& r, const Hierarchy& h) {
  return report_rows(checked_set(r, h), h);
}

std::vector<std::string> decode_reasons(Bitmap reasons, const Hierarchy& h) {
  if (!is_subset(reasons, h.reasons_mask()))
    throw OutOfDomainError("reasons bitmap " + std::to_string(reasons) + " is outside the domain");
  std::vector<std::string> names;
  for (const Reason& reason : h.reasons())
    if ((reasons & reason.bit_id) != 0) names.push_back(reason.name);
  return names;
}

std::vector<std::string> decode_reasons(const SelectionRecord& r, const Hierarchy& h) {
  return decode_reasons(r.reasons, h);
}

}  // namespace pbfd
