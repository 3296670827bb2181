#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pbfd/types.hpp"

namespace pbfd {

/// One node of the selection tree.
///
/// `level_label` names the step in which this vertex is chosen (for "Hunan"
/// that is "Province"); `child_level_label` names the step that opens when the
/// vertex is checked. Only internal vertices carry a column token.
struct Vertex {
  std::string name;
  VertexPath path;
  std::string level_label;
  std::string child_level_label;
  Bitmap bit_id = 0;
  std::string column_token;
  std::size_t depth = 0;
  std::size_t bfs_index = 0;
  const Vertex* parent = nullptr;
  std::vector<Vertex> children;

  bool is_root() const { return parent == nullptr; }
  bool is_leaf() const { return children.empty(); }
};

struct Reason {
  Bitmap bit_id = 0;
  std::string name;
};

/// Immutable, validated selection hierarchy.
///
/// Vertices hold parent pointers into the tree, so the type is move-only;
/// share it across threads through `std::shared_ptr<const Hierarchy>`.
class Hierarchy {
 public:
  Hierarchy(Hierarchy&&) noexcept = default;
  Hierarchy& operator=(Hierarchy&&) noexcept = default;
  Hierarchy(const Hierarchy&) = delete;
  Hierarchy& operator=(const Hierarchy&) = delete;

  const Vertex& root() const { return *root_; }

  /// Number of vertices excluding the virtual root.
  std::size_t vertex_count() const { return breadth_first_.size() - 1; }

  /// Depth of the deepest vertex; top-level vertices have depth 1.
  std::size_t max_depth() const { return max_depth_; }

  const std::vector<Reason>& reasons() const { return reasons_; }
  Bitmap reasons_mask() const { return mask_of_width(reasons_.size()); }

  /// nullptr when the path is unknown.
  const Vertex* find(std::string_view path) const;

  /// Every vertex in breadth-first declaration order, root first.
  std::span<const Vertex* const> breadth_first() const { return breadth_first_; }

  /// Internal vertices (root included) in breadth-first declaration order.
  std::span<const Vertex* const> internal_vertices() const { return internal_; }

 private:
  friend Hierarchy parse_hierarchy(std::string_view text);
  Hierarchy() = default;
  void index();

  std::unique_ptr<Vertex> root_;
  std::vector<Reason> reasons_;
  std::vector<const Vertex*> breadth_first_;
  std::vector<const Vertex*> internal_;
  std::unordered_map<std::string, const Vertex*> by_path_;
  std::size_t max_depth_ = 0;
};

/// Parses the JSON hierarchy document. Sibling bits follow declaration order.
/// Throws HierarchyError naming the offending path.
Hierarchy parse_hierarchy(std::string_view text);
Hierarchy load_hierarchy(const std::filesystem::path& file);

/// Canonical document form: every internal vertex carries its resolved label
/// and column token, so parse(serialize(h)) serializes byte-identically.
std::string serialize_hierarchy(const Hierarchy& h);

const Vertex& vertex_by_path(const Hierarchy& h, std::string_view path);

/// OR of the children's bit ids. Throws for leaves and unknown paths.
Bitmap domain_mask(const Vertex& v);
Bitmap domain_mask(const Hierarchy& h, std::string_view path);

/// "Id" + column token, e.g. "IdChinas". Throws for leaves.
std::string column_name(const Vertex& v);

/// Lookup table listing a vertex's children as (bit id, name) rows. The root
/// table is named after the top-level step label ("Continent"); every other
/// internal vertex gets "Lookup" + column token.
std::string lookup_table_name(const Vertex& v);
std::string lookup_key_column(const Vertex& v);

/// Name with non-alphanumerics removed plus a trailing "s".
std::string default_column_token(std::string_view name);

VertexPath parent_path(std::string_view path);
VertexPath child_path(std::string_view parent, std::string_view name);

}  // namespace pbfd
