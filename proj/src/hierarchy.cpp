#include "scadscope/hierarchy.hpp"

#include <algorithm>
#include <functional>
#include <map>

#include "scadscope/error.hpp"

namespace scadscope {

std::string_view to_string(ComponentKind kind) {
  switch (kind) {
    case ComponentKind::kRoot: return "root";
    case ComponentKind::kModuleInstance: return "module-instance";
    case ComponentKind::kPrimitive: return "primitive";
    case ComponentKind::kBooleanGroup: return "boolean-group";
    case ComponentKind::kLoopGroup: return "loop-group";
    case ComponentKind::kLoopIteration: return "loop-iteration";
    case ComponentKind::kGroup: return "group";
    case ComponentKind::kOpaque: return "opaque";
    case ComponentKind::kTruncated: return "truncated";
  }
  return "?";
}

bool is_marker_comment(std::string_view text) {
  return text.starts_with("/*@scadscope") || text.starts_with("/*}scadscope");
}

namespace {

using ModuleTable = std::map<std::string, const SyntaxNode*, std::less<>>;

struct Context {
  Environment env;
  ModuleTable modules;
  int module_depth = 0;
  std::string owner;  // nearest enclosing module instance name
};

struct Pending {
  ComponentNode node;
  // Builds the children; empty for leaves.
  std::function<std::vector<Pending>()> expand;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string comment_body(std::string_view text) {
  if (text.starts_with("//")) return trim(text.substr(2));
  if (text.starts_with("/*")) {
    text.remove_prefix(2);
    if (text.ends_with("*/")) text.remove_suffix(2);
    return trim(text);
  }
  return trim(text);
}

class Builder {
 public:
  Builder(const ParseResult& parse, const BuildOptions& options)
      : parse_(parse), src_(parse.source), options_(options) {}

  std::unique_ptr<ComponentNode> build() {
    auto root = std::make_unique<ComponentNode>();
    root->kind = ComponentKind::kRoot;
    root->id = "root";
    root->name = "root";
    root->label = "model";
    root->span = parse_.root.span;
    root->site = &parse_.root;
    Context ctx;
    auto pending = collect_list(parse_.root.children, ctx, {}, /*is_root=*/true);
    group_loose_primitives(pending);
    root->children = finish(root->id, pending);
    return root;
  }

  std::vector<std::string> take_notes() { return std::move(notes_); }

 private:
  // ---- comments -------------------------------------------------------

  bool only_space(std::size_t from, std::size_t to) const {
    for (std::size_t i = from; i < to; ++i)
      if (src_[i] != ' ' && src_[i] != '\t' && src_[i] != '\r') return false;
    return true;
  }

  std::size_t line_begin(std::size_t offset) const {
    const auto nl = src_.rfind('\n', offset == 0 ? 0 : offset - 1);
    if (offset == 0 || nl == std::string::npos) return 0;
    return nl + 1;
  }

  /// Standalone comment on the line above `key`, else a trailing comment on
  /// the line where `stmt` ends.
  std::string harvest_comment(const SourceSpan& key, const SourceSpan& stmt) const {
    for (const auto& c : parse_.comments) {
      if (is_marker_comment(c.text)) continue;
      if (c.span.end_line == key.start_line - 1 && c.span.end_byte <= key.start_byte &&
          only_space(line_begin(c.span.start_byte), c.span.start_byte))
        return comment_body(c.text);
    }
    for (const auto& c : parse_.comments) {
      if (is_marker_comment(c.text)) continue;
      if (c.span.start_byte >= stmt.end_byte && c.span.start_line == stmt.end_line &&
          only_space(stmt.end_byte, c.span.start_byte))
        return comment_body(c.text);
    }
    return {};
  }

  // ---- scope handling -------------------------------------------------

  void enter_scope(const std::vector<SyntaxNode>& stmts, Context& ctx) {
    for (const auto& s : stmts)
      if (s.kind == NodeKind::kModuleDef) ctx.modules[s.name] = &s;
    for (const auto& s : stmts) {
      if (s.kind == NodeKind::kAssign && !s.args.empty())
        ctx.env[s.name] = eval_const(s.args[0].value, ctx.env);
    }
  }

  std::string modifier_text(const SyntaxNode& s) const {
    const std::size_t end = s.args_span ? s.args_span->end_byte : s.name_span.end_byte;
    return std::string(src_.substr(s.name_span.start_byte, end - s.name_span.start_byte));
  }

  std::vector<Pending> collect_list(const std::vector<SyntaxNode>& stmts, Context ctx,
                                    const std::vector<std::string>& mods, bool is_root = false) {
    enter_scope(stmts, ctx);
    if (is_root) globals_ = ctx.env;
    std::vector<Pending> out;
    for (const auto& s : stmts) {
      auto part = collect(s, ctx, mods, nullptr);
      std::move(part.begin(), part.end(), std::back_inserter(out));
    }
    return out;
  }

  // Components produced by the child of a transform/if.
  std::vector<Pending> collect_child(const SyntaxNode& child, const Context& ctx,
                                     const std::vector<std::string>& mods,
                                     const SyntaxNode* site) {
    if (child.kind == NodeKind::kBlock) {
      // `;` bodies are empty blocks spanning the semicolon
      return collect_list(child.children, ctx, mods);
    }
    return collect(child, ctx, mods, site);
  }

  Pending leaf(ComponentKind kind, const SyntaxNode& s, const SyntaxNode* site,
               const std::vector<std::string>& mods) {
    Pending p;
    p.node.kind = kind;
    p.node.name = s.name;
    p.node.site = site ? site : &s;
    p.node.call = &s;
    p.node.span = p.node.site->span;
    p.node.modifiers = mods;
    p.node.comment = harvest_comment(s.name_span, p.node.span);
    return p;
  }

  std::vector<Pending> collect(const SyntaxNode& s, const Context& ctx,
                               std::vector<std::string> mods, const SyntaxNode* site) {
    switch (s.kind) {
      case NodeKind::kComment:
      case NodeKind::kAssign:
      case NodeKind::kModuleDef:
      case NodeKind::kOpaque:
      case NodeKind::kExpr:
        return {};
      case NodeKind::kBlock:
        return collect_list(s.children, ctx, mods);
      case NodeKind::kTransform:
        mods.push_back(modifier_text(s));
        if (s.children.empty()) return {};
        return collect_child(s.children[0], ctx, mods, site ? site : &s);
      case NodeKind::kIf:
        return collect_if(s, ctx, mods, site);
      case NodeKind::kFor:
        return {collect_for(s, ctx, mods, site)};
      case NodeKind::kPrimitive: {
        Pending p = leaf(ComponentKind::kPrimitive, s, site, mods);
        p.node.label = p.node.comment.empty() ? s.name : s.name + " — " + p.node.comment;
        return {std::move(p)};
      }
      case NodeKind::kBoolean: {
        Pending p = leaf(ComponentKind::kBooleanGroup, s, site, mods);
        p.node.label = s.name;
        if (!s.children.empty()) {
          const SyntaxNode* child = &s.children[0];
          p.expand = [this, child, ctx] { return collect_child(*child, ctx, {}, nullptr); };
        }
        return {std::move(p)};
      }
      case NodeKind::kModuleCall:
        return collect_call(s, ctx, mods, site);
    }
    return {};
  }

  std::vector<Pending> collect_if(const SyntaxNode& s, const Context& ctx,
                                  const std::vector<std::string>& mods, const SyntaxNode* site) {
    const auto cond = truthy(eval_const(s.args[0].value, ctx.env));
    if (!cond) {
      Pending p = leaf(ComponentKind::kOpaque, s, site, mods);
      const auto& c = s.args[0].value.span;
      p.node.label = "if (" + std::string(slice(src_, c)) + ")";
      return {std::move(p)};
    }
    if (*cond) return collect_child(s.children[0], ctx, mods, site ? site : &s);
    if (s.has_else) return collect_child(s.children[1], ctx, mods, site ? site : &s);
    return {};
  }

  Pending collect_for(const SyntaxNode& s, const Context& ctx, const std::vector<std::string>& mods,
                      const SyntaxNode* site) {
    Pending p = leaf(ComponentKind::kLoopGroup, s, site, mods);
    const std::string var = s.args.size() == 1 && s.args[0].name ? *s.args[0].name : "";
    p.node.loop_variable = var;
    p.node.label = var.empty() ? "loop" : "loop over " + var;
    if (var.empty() || s.children.empty()) return p;
    const auto values =
        enumerate(eval_const(s.args[0].value, ctx.env), options_.max_loop_iterations);
    if (!values) return p;  // unresolved bounds: no fabricated iterations
    const SyntaxNode* body = &s.children[0];
    const std::string noun = p.node.comment.empty() ? "iteration" : p.node.comment;
    const std::string owner = ctx.owner;
    p.expand = [this, body, values = *values, var, noun, owner, ctx]() {
      std::vector<Pending> iterations;
      const int n = static_cast<int>(values.size());
      for (int k = 0; k < n; ++k) {
        Pending it;
        it.node.kind = ComponentKind::kLoopIteration;
        it.node.name = "iter";
        it.node.site = body;
        it.node.call = body;
        it.node.span = body->span;
        it.node.loop_variable = var;
        it.node.loop_value = values[static_cast<std::size_t>(k)];
        it.node.iteration_index = k;
        it.node.iteration_count = n;
        it.node.label = (owner.empty() ? "" : owner + " ") + noun + " " + std::to_string(k + 1) +
                        " of " + std::to_string(n);
        Context inner = ctx;
        inner.env[var] = values[static_cast<std::size_t>(k)];
        it.expand = [this, body, inner] { return collect_child(*body, inner, {}, nullptr); };
        iterations.push_back(std::move(it));
      }
      return iterations;
    };
    return p;
  }

  std::vector<Pending> collect_call(const SyntaxNode& s, const Context& ctx,
                                    const std::vector<std::string>& mods, const SyntaxNode* site) {
    auto def_it = ctx.modules.find(s.name);
    if (def_it == ctx.modules.end()) {
      if ((s.name == "echo" || s.name == "assert") && s.children.empty()) return {};
      Pending p = leaf(ComponentKind::kOpaque, s, site, mods);
      p.node.label = s.name;
      return {std::move(p)};
    }
    const SyntaxNode* def = def_it->second;
    Pending p = leaf(ComponentKind::kModuleInstance, s, site, mods);
    p.node.label = s.name;
    p.node.definition = def;
    p.node.def_span = def->span;
    p.node.module_depth = ctx.module_depth + 1;
    if (p.node.module_depth > options_.max_module_depth) {
      p.node.kind = ComponentKind::kTruncated;
      p.node.label = s.name + " (expansion stopped at depth " +
                     std::to_string(options_.max_module_depth) + ")";
      notes_.push_back("module '" + s.name + "' instantiated beyond depth " +
                       std::to_string(options_.max_module_depth) + "; truncated");
      return {std::move(p)};
    }
    Context callee;
    callee.env = globals_;
    for (const auto& [k, v] : ctx.env)
      if (!k.empty() && k[0] == '$') callee.env[k] = v;
    std::size_t positional = 0;
    Environment bound;
    for (const auto& a : s.args) {
      Value v = eval_const(a.value, ctx.env);
      if (a.name) {
        bound[*a.name] = std::move(v);
      } else if (positional < def->params.size()) {
        bound[def->params[positional++].name] = std::move(v);
      }
    }
    for (const auto& param : def->params) {
      if (auto it = bound.find(param.name); it != bound.end()) {
        callee.env[param.name] = it->second;
      } else if (param.default_value) {
        callee.env[param.name] = eval_const(*param.default_value, callee.env);
      } else {
        callee.env.erase(param.name);
      }
    }
    for (const auto& [k, v] : bound)
      if (!k.empty() && k[0] == '$') callee.env[k] = v;
    callee.modules = ctx.modules;
    callee.module_depth = p.node.module_depth;
    callee.owner = s.name;
    p.expand = [this, def, callee] {
      return collect_child(def->children[0], callee, {}, nullptr);
    };
    return {std::move(p)};
  }

  void group_loose_primitives(std::vector<Pending>& list) {
    for (const auto& p : list)
      if (p.node.kind == ComponentKind::kModuleInstance) return;
    std::vector<Pending> out;
    std::size_t i = 0;
    while (i < list.size()) {
      std::size_t j = i;
      while (j < list.size() && list[j].node.kind == ComponentKind::kPrimitive &&
             is_top_level(list[j].node.site))
        ++j;
      if (j - i >= 2) {
        Pending g;
        g.node.kind = ComponentKind::kGroup;
        g.node.name = "parts";
        g.node.label = "ungrouped parts";
        g.node.span = parse_.root.span;
        g.node.span.start_byte = list[i].node.span.start_byte;
        g.node.span.start_line = list[i].node.span.start_line;
        g.node.span.start_col = list[i].node.span.start_col;
        g.node.span.end_byte = list[j - 1].node.span.end_byte;
        g.node.span.end_line = list[j - 1].node.span.end_line;
        g.node.span.end_col = list[j - 1].node.span.end_col;
        std::vector<Pending> members(std::make_move_iterator(list.begin() + static_cast<long>(i)),
                                     std::make_move_iterator(list.begin() + static_cast<long>(j)));
        g.expand = [members] { return members; };
        out.push_back(std::move(g));
        i = j;
      } else {
        out.push_back(std::move(list[i]));
        ++i;
      }
    }
    list = std::move(out);
  }

  bool is_top_level(const SyntaxNode* site) const {
    const auto& top = parse_.root.children;
    return !top.empty() && site >= top.data() && site < top.data() + top.size();
  }

  // ---- ids and expansion ----------------------------------------------

  static std::string base_segment(const ComponentNode& n) {
    switch (n.kind) {
      case ComponentKind::kLoopGroup: return "for";
      case ComponentKind::kLoopIteration: return "iter";
      case ComponentKind::kGroup: return "parts";
      case ComponentKind::kTruncated: return n.name;
      default: return n.name.empty() ? "stmt" : n.name;
    }
  }

  void assign_segments(std::vector<Pending>& list) {
    std::map<std::string, int> totals;
    for (const auto& p : list)
      if (p.node.kind == ComponentKind::kModuleInstance) ++totals[p.node.name];
    std::map<std::string, int> seen;
    std::set<std::string> used;
    for (auto& p : list) {
      auto& n = p.node;
      const std::string base = base_segment(n);
      std::string seg;
      if (n.kind == ComponentKind::kModuleInstance) {
        const int k = ++seen["m:" + base];
        seg = totals[n.name] > 1 ? base + "#" + std::to_string(k) : base;
      } else if (n.kind == ComponentKind::kLoopIteration) {
        seg = base + std::to_string(n.iteration_index);
      } else {
        seg = base + std::to_string(seen["p:" + base]++);
      }
      for (int extra = 2; used.contains(seg); ++extra) seg = base + "~" + std::to_string(extra);
      used.insert(seg);
      n.id = seg;
    }
  }

  bool should_expand(const ComponentNode& n) const {
    if (n.kind != ComponentKind::kModuleInstance) return true;
    return n.module_depth <= options_.expand_depth || options_.expanded_ids.contains(n.id);
  }

  std::vector<ComponentNode> finish(const std::string& parent_id, std::vector<Pending>& list) {
    assign_segments(list);
    std::vector<ComponentNode> out;
    out.reserve(list.size());
    for (auto& p : list) {
      p.node.id = parent_id + "/" + p.node.id;
      if (p.expand) {
        if (should_expand(p.node)) {
          auto kids = p.expand();
          p.node.children = finish(p.node.id, kids);
        } else {
          p.node.expandable = true;
        }
      }
      out.push_back(std::move(p.node));
    }
    return out;
  }

  const ParseResult& parse_;
  const std::string& src_;
  BuildOptions options_;
  Environment globals_;
  std::vector<std::string> notes_;
};

}  // namespace

ComponentTree::ComponentTree(std::shared_ptr<const ParseResult> parse,
                             std::unique_ptr<ComponentNode> root, std::vector<std::string> notes,
                             BuildOptions options)
    : parse_(std::move(parse)),
      root_(std::move(root)),
      notes_(std::move(notes)),
      options_(std::move(options)) {
  std::function<void(const ComponentNode&, const ComponentNode*, int)> visit =
      [&](const ComponentNode& n, const ComponentNode* parent, int depth) {
        order_[&n] = preorder_.size();
        preorder_.push_back(&n);
        by_id_[n.id] = &n;
        parent_[&n] = parent;
        depth_[&n] = depth;
        intervals_.push_back({n.span.start_byte, n.span.end_byte, &n});
        if (n.def_span) intervals_.push_back({n.def_span->start_byte, n.def_span->end_byte, &n});
        for (const auto& c : n.children) visit(c, &n, depth + 1);
      };
  visit(*root_, nullptr, 0);
  std::stable_sort(intervals_.begin(), intervals_.end(),
                   [](const Interval& a, const Interval& b) { return a.start < b.start; });
}

const ComponentNode* ComponentTree::find(std::string_view id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : it->second;
}

const ComponentNode* ComponentTree::parent(const ComponentNode& node) const {
  auto it = parent_.find(&node);
  return it == parent_.end() ? nullptr : it->second;
}

std::vector<const ComponentNode*> ComponentTree::path_to(const ComponentNode& node) const {
  std::vector<const ComponentNode*> path;
  for (const ComponentNode* n = &node; n; n = parent(*n)) path.push_back(n);
  std::reverse(path.begin(), path.end());
  return path;
}

int ComponentTree::depth(const ComponentNode& node) const { return depth_.at(&node); }

std::size_t ComponentTree::preorder_index(const ComponentNode& node) const {
  return order_.at(&node);
}

const ComponentNode& ComponentTree::deepest_containing(const SourceSpan& selection) const {
  std::size_t start = selection.start_byte;
  std::size_t end = selection.end_byte;
  if (start == end && start < parse_->source.size()) end = start + 1;
  const ComponentNode* best = root_.get();
  int best_depth = 0;
  std::size_t best_order = 0;
  const auto last = std::upper_bound(intervals_.begin(), intervals_.end(), start,
                                     [](std::size_t s, const Interval& iv) { return s < iv.start; });
  for (auto it = intervals_.begin(); it != last; ++it) {
    if (it->end < end) continue;
    const int d = depth_.at(it->node);
    const std::size_t o = order_.at(it->node);
    if (d > best_depth || (d == best_depth && o < best_order)) {
      best = it->node;
      best_depth = d;
      best_order = o;
    }
  }
  return *best;
}

std::size_t ComponentTree::instance_count(const SyntaxNode* definition) const {
  return static_cast<std::size_t>(
      std::count_if(preorder_.begin(), preorder_.end(), [&](const ComponentNode* n) {
        return n->definition == definition &&
               (n->kind == ComponentKind::kModuleInstance || n->kind == ComponentKind::kTruncated);
      }));
}

std::size_t ComponentTree::site_count(const ComponentNode& node) const {
  return static_cast<std::size_t>(
      std::count_if(preorder_.begin(), preorder_.end(), [&](const ComponentNode* n) {
        return n->site == node.site && n->kind == node.kind;
      }));
}

ComponentTree build_hierarchy(std::shared_ptr<const ParseResult> parse, const BuildOptions& options) {
  Builder builder(*parse, options);
  auto root = builder.build();
  auto notes = builder.take_notes();
  return ComponentTree(std::move(parse), std::move(root), std::move(notes), options);
}

const ComponentNode& component_for_span(const ComponentTree& tree, const SourceSpan& span) {
  return tree.deepest_containing(span);
}

const ComponentNode& resolve_component(const ComponentTree& tree, std::string_view id) {
  if (const ComponentNode* n = tree.find(id)) return *n;
  throw Error(ErrorCode::kNotFound, "unknown component id '" + std::string(id) + "'");
}

std::string label_component(const ComponentNode& node) { return node.label; }

}  // namespace scadscope
