#pragma once

#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "scadscope/syntax.hpp"
#include "scadscope/value.hpp"

namespace scadscope {

enum class ComponentKind {
  kRoot,
  kModuleInstance,
  kPrimitive,
  kBooleanGroup,
  kLoopGroup,
  kLoopIteration,
  kGroup,      // consecutive top-level primitives in module-free code
  kOpaque,     // builtins outside the subset, unknown modules, unresolved ifs
  kTruncated,  // module expansion stopped at the depth limit
};

std::string_view to_string(ComponentKind kind);

struct ComponentNode {
  std::string id;
  std::string name;
  std::string label;
  std::string comment;  // harvested source comment, may be empty
  ComponentKind kind = ComponentKind::kRoot;
  SourceSpan span;  // instantiation site
  std::optional<SourceSpan> def_span;
  std::vector<std::string> modifiers;  // enclosing transforms, outermost first
  std::vector<ComponentNode> children;

  // Links into the parse tree owned by the ComponentTree.
  const SyntaxNode* site = nullptr;  // statement covering `span`
  const SyntaxNode* call = nullptr;  // the call/for/if node inside `site`
  const SyntaxNode* definition = nullptr;

  std::string loop_variable;  // loop iterations only
  Value loop_value;
  int iteration_index = 0;
  int iteration_count = 0;

  int module_depth = 0;
  bool expandable = false;  // module instance whose children were not built
};

struct BuildOptions {
  int expand_depth = 1;                  // module nesting expanded by default
  std::set<std::string> expanded_ids;    // instances deepened on demand
  int max_module_depth = 32;
  std::size_t max_loop_iterations = 64;
};

/// Immutable component hierarchy with id and span indexes.
class ComponentTree {
 public:
  ComponentTree(std::shared_ptr<const ParseResult> parse, std::unique_ptr<ComponentNode> root,
                std::vector<std::string> notes, BuildOptions options);
  ComponentTree(ComponentTree&&) noexcept = default;
  ComponentTree& operator=(ComponentTree&&) noexcept = default;

  const ComponentNode& root() const { return *root_; }
  const ParseResult& parse() const { return *parse_; }
  const std::shared_ptr<const ParseResult>& parse_ptr() const { return parse_; }
  const BuildOptions& options() const { return options_; }
  const std::vector<std::string>& notes() const { return notes_; }

  const ComponentNode* find(std::string_view id) const;
  const ComponentNode* parent(const ComponentNode& node) const;
  /// Root first, `node` last.
  std::vector<const ComponentNode*> path_to(const ComponentNode& node) const;
  const std::vector<const ComponentNode*>& preorder() const { return preorder_; }
  int depth(const ComponentNode& node) const;
  std::size_t preorder_index(const ComponentNode& node) const;

  /// Deepest component whose span (or definition span) contains the
  /// selection; ties go to the earliest in preorder. An empty selection
  /// at offset p selects the byte at p.
  const ComponentNode& deepest_containing(const SourceSpan& selection) const;

  /// Number of module-instance nodes expanding `definition`.
  std::size_t instance_count(const SyntaxNode* definition) const;
  /// Number of nodes sharing the instantiation site.
  std::size_t site_count(const ComponentNode& node) const;

 private:
  struct Interval {
    std::size_t start, end;
    const ComponentNode* node;
  };

  std::shared_ptr<const ParseResult> parse_;
  std::unique_ptr<ComponentNode> root_;
  std::vector<std::string> notes_;
  BuildOptions options_;
  std::vector<const ComponentNode*> preorder_;
  std::unordered_map<std::string_view, const ComponentNode*> by_id_;
  std::unordered_map<const ComponentNode*, const ComponentNode*> parent_;
  std::unordered_map<const ComponentNode*, std::size_t> order_;
  std::unordered_map<const ComponentNode*, int> depth_;
  std::vector<Interval> intervals_;  // sorted by start
};

/// Builds the hierarchy. Diagnostics-free parses are expected; a tree is
/// still built from whatever statements were recovered.
ComponentTree build_hierarchy(std::shared_ptr<const ParseResult> parse,
                              const BuildOptions& options = {});

const ComponentNode& component_for_span(const ComponentTree& tree, const SourceSpan& span);

/// Throws Error(kNotFound) for unknown ids.
const ComponentNode& resolve_component(const ComponentTree& tree, std::string_view id);

std::string label_component(const ComponentNode& node);

/// True for the marker comments inserted by highlight emission.
bool is_marker_comment(std::string_view comment_text);

}  // namespace scadscope
