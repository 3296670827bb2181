#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pbfd/hierarchy.hpp"
#include "pbfd/types.hpp"

namespace pbfd {

/// Checkbox view model exchanged with the UI. Wire form:
/// {"id": number, "description": string, "isChecked": bool, "class": string}.
struct CheckBoxListItem {
  Bitmap id = 0;
  std::string description;
  bool is_checked = false;
  std::string css_class;

  friend bool operator==(const CheckBoxListItem&, const CheckBoxListItem&) = default;
};

void to_json(nlohmann::json& j, const CheckBoxListItem& item);
/// Missing "isChecked"/"class"/"description" default; a missing or non-numeric
/// "id" throws OutOfDomainError.
void from_json(const nlohmann::json& j, CheckBoxListItem& item);

/// One person's selection state: the VisitedLocation row in value form.
/// A missing entry and a zero entry mean the same thing; see canonical().
struct SelectionRecord {
  std::map<VertexPath, Bitmap> bitmaps;
  Bitmap reasons = 0;

  Bitmap bitmap(std::string_view path) const;

  friend bool operator==(const SelectionRecord&, const SelectionRecord&) = default;
};

/// Drops zero entries so equal selections compare equal.
SelectionRecord canonical(SelectionRecord r);

enum class ViolationKind {
  out_of_domain,   // bits outside the vertex's children (or unknown/leaf path)
  orphan_child,    // non-zero bitmap under a vertex whose parent bit is clear
  reasons_out_of_domain,
};

struct Violation {
  VertexPath path;
  ViolationKind kind;

  friend bool operator==(const Violation&, const Violation&) = default;
};

std::string_view to_string(ViolationKind kind);

/// One root-to-frontier path; cell k is the name at depth k+1, trailing cells empty.
struct ReportRow {
  std::vector<std::optional<std::string>> cells;

  friend auto operator<=>(const ReportRow&, const ReportRow&) = default;
  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

/// OR of the ids of checked items.
Bitmap calculate_ids(std::span<const CheckBoxListItem> items);

/// One item per child of `v`, in declaration order. Throws OutOfDomainError
/// when `selected` has bits outside the domain.
std::vector<CheckBoxListItem> to_checkbox_items(const Vertex& v, Bitmap selected);

std::vector<Violation> validate_record(const SelectionRecord& r, const Hierarchy& h);

/// Replaces the bitmap at `path` with the checked items and clears every
/// descendant bitmap under children that were unchecked.
///
/// Throws NotFoundError for unknown or leaf paths, OrphanStepError when the
/// parent bit of `path` is clear, OutOfDomainError for foreign item ids.
SelectionRecord apply_update(const SelectionRecord& r, const Hierarchy& h, std::string_view path,
                             std::span<const CheckBoxListItem> items);

/// Replaces the reasons bitmap. Throws OutOfDomainError for foreign ids.
SelectionRecord apply_reasons_update(const SelectionRecord& r, const Hierarchy& h,
                                     std::span<const CheckBoxListItem> items);

std::vector<CheckBoxListItem> reason_items(const Hierarchy& h, Bitmap selected);

/// Every vertex whose bit is set in its parent's bitmap. Throws
/// InvalidRecordError for records with violations.
PathSet checked_set(const SelectionRecord& r, const Hierarchy& h);

/// Inverse of checked_set. Throws NotFoundError for unknown paths and
/// InvalidRecordError when `paths` is not upward-closed.
SelectionRecord record_from_checked_set(const PathSet& paths, const Hierarchy& h,
                                        Bitmap reasons = 0);

bool is_upward_closed(const PathSet& paths);

/// One row per frontier vertex (checked, no checked children), ordered
/// breadth-first by declaration order; cells padded to h.max_depth().
std::vector<ReportRow> report_rows(const SelectionRecord& r, const Hierarchy& h);

/// Same rows, computed from an upward-closed path set.
std::vector<ReportRow> report_rows(const PathSet& checked, const Hierarchy& h);

ReportRow report_row_for(const Vertex& frontier, std::size_t depth);

/// Reason names for the set bits, in declaration order.
std::vector<std::string> decode_reasons(Bitmap reasons, const Hierarchy& h);
std::vector<std::string> decode_reasons(const SelectionRecord& r, const Hierarchy& h);

}  // namespace pbfd
