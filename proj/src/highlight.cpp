#include "scadscope/highlight.hpp"

#include <cctype>
#include <memory>

#include "scadscope/error.hpp"
#include "scadscope/splice.hpp"

namespace scadscope {
namespace {

std::string wrap(std::string_view text) {
  std::string out;
  out.reserve(kMarkerOpen.size() + text.size() + kMarkerClose.size());
  out.append(kMarkerOpen).append(text).append(kMarkerClose);
  return out;
}

Edit insert_at(std::size_t offset, std::string_view text) {
  Edit e;
  e.span.start_byte = offset;
  e.span.end_byte = offset;
  e.replacement = wrap(text);
  return e;
}

std::string color_call(const Rgba& c) {
  return "color([" + format_number(c.r) + "," + format_number(c.g) + "," + format_number(c.b) +
         "," + format_number(c.a) + "])";
}

std::string join_conditions(const std::vector<std::string>& conds) {
  if (conds.size() == 1) return conds[0];
  std::string out;
  for (const auto& c : conds) {
    if (!out.empty()) out += " && ";
    out += "(" + c + ")";
  }
  return out;
}

bool is_geometry_statement(const SyntaxNode& s) {
  switch (s.kind) {
    case NodeKind::kPrimitive:
    case NodeKind::kTransform:
    case NodeKind::kBoolean:
    case NodeKind::kModuleCall:
    case NodeKind::kFor:
    case NodeKind::kIf:
      return s.modifiers.find('*') == std::string::npos;
    default:
      return false;
  }
}

// Statements through which a path can pass without being a component.
bool is_transparent(const SyntaxNode& s) {
  return s.kind == NodeKind::kBlock || s.kind == NodeKind::kTransform ||
         s.kind == NodeKind::kIf;
}

void collect_background(const SyntaxNode& s, std::vector<const SyntaxNode*>& out) {
  if (s.kind == NodeKind::kBlock) {
    for (const auto& c : s.children) collect_background(c, out);
  } else if (is_geometry_statement(s)) {
    out.push_back(&s);
  }
}

// Finds `site` below `list`, gathering the geometry statements passed on the way.
bool route(const std::vector<const SyntaxNode*>& list, const SyntaxNode* site,
           std::vector<const SyntaxNode*>& siblings) {
  bool found = false;
  for (const SyntaxNode* s : list) {
    if (s == site) {
      found = true;
      continue;
    }
    if (!found && is_transparent(*s) && s->span.start_byte <= site->span.start_byte &&
        site->span.end_byte <= s->span.end_byte) {
      std::vector<const SyntaxNode*> inner;
      for (const auto& c : s->children) inner.push_back(&c);
      std::vector<const SyntaxNode*> nested;
      if (route(inner, site, nested)) {
        siblings.insert(siblings.end(), nested.begin(), nested.end());
        found = true;
        continue;
      }
    }
    collect_background(*s, siblings);
  }
  return found;
}

std::vector<const SyntaxNode*> content_of(const ComponentTree& tree, const ComponentNode& n) {
  std::vector<const SyntaxNode*> out;
  switch (n.kind) {
    case ComponentKind::kRoot:
      for (const auto& c : tree.parse().root.children) out.push_back(&c);
      break;
    case ComponentKind::kGroup:
      for (const auto& c : tree.parse().root.children)
        if (n.span.start_byte <= c.span.start_byte && c.span.end_byte <= n.span.end_byte)
          out.push_back(&c);
      break;
    case ComponentKind::kModuleInstance:
      if (n.definition && !n.definition->children.empty())
        out.push_back(&n.definition->children[0]);
      break;
    case ComponentKind::kBooleanGroup:
    case ComponentKind::kLoopGroup:
      if (n.call && !n.call->children.empty()) out.push_back(&n.call->children[0]);
      break;
    case ComponentKind::kLoopIteration:
      if (n.site) out.push_back(n.site);
      break;
    default:
      break;
  }
  return out;
}

enum class Mode { kHighlight, kIsolate };

std::string plan(const ComponentTree& tree, const ComponentNode& target, Mode mode,
                 const HighlightStyle& style) {
  const std::string& src = tree.parse().source;
  if (target.kind == ComponentKind::kTruncated)
    throw Error(ErrorCode::kUnsupportedSelection,
                "component '" + target.id + "' lies beyond the expansion limit");
  if (target.kind == ComponentKind::kRoot) {
    if (mode == Mode::kIsolate) return src;
    std::vector<Edit> edits;
    edits.push_back(insert_at(0, color_call(style.color) + " {\n"));
    edits.push_back(insert_at(src.size(), "\n}"));
    return splice(src, std::move(edits));
  }
  if (target.kind == ComponentKind::kGroup) {
    // members are top-level statements; each one is wrapped on its own
    std::vector<Edit> edits;
    for (const auto& c : tree.parse().root.children) {
      if (!target.span.contains(c.span)) {
        if (mode == Mode::kIsolate || style.context_mode == ContextMode::kBackground) {
          std::vector<const SyntaxNode*> bg;
          collect_background(c, bg);
          for (const SyntaxNode* b : bg) edits.push_back(insert_at(b->span.start_byte, "%"));
        }
      } else if (mode == Mode::kHighlight && is_geometry_statement(c)) {
        edits.push_back(insert_at(c.span.start_byte, color_call(style.color) + " "));
      }
    }
    return splice(src, std::move(edits));
  }
  if (!target.site)
    throw Error(ErrorCode::kUnsupportedSelection,
                "component '" + target.id + "' has no instantiation site");

  const bool background = mode == Mode::kIsolate || style.context_mode == ContextMode::kBackground;
  const auto path = tree.path_to(target);
  std::vector<Edit> edits;
  std::vector<std::string> decls;
  std::vector<std::string> conds;
  std::vector<const SyntaxNode*> to_background;

  for (std::size_t i = 1; i < path.size(); ++i) {
    const ComponentNode& owner = *path[i - 1];
    const ComponentNode& step = *path[i];
    std::vector<const SyntaxNode*> siblings;
    if (step.kind == ComponentKind::kGroup) {
      if (background)
        for (const auto& c : tree.parse().root.children)
          if (!step.span.contains(c.span)) collect_background(c, to_background);
      continue;
    }
    if (!step.site || !route(content_of(tree, owner), step.site, siblings))
      throw Error(ErrorCode::kUnsupportedSelection,
                  "cannot locate the statement for '" + step.id + "'");
    if (background) to_background.insert(to_background.end(), siblings.begin(), siblings.end());

    if (step.kind == ComponentKind::kLoopIteration && !step.loop_variable.empty()) {
      conds.push_back(step.loop_variable + " == " + step.loop_value.to_source());
    }
    if (step.kind == ComponentKind::kModuleInstance && &step != &target &&
        (!conds.empty() || tree.instance_count(step.definition) > 1)) {
      const std::string var = "$scadscope_hl" + std::to_string(decls.size());
      decls.push_back(var);
      const SourceSpan& args = *step.call->args_span;
      std::size_t close = args.end_byte - 1;
      std::size_t k = close;
      while (k > args.start_byte + 1 && std::isspace(static_cast<unsigned char>(src[k - 1]))) --k;
      const bool need_comma = src[k - 1] != '(' && src[k - 1] != ',';
      const std::string value = conds.empty() ? "true" : join_conditions(conds);
      edits.push_back(insert_at(close, (need_comma ? ", " : "") + var + " = " + value));
      conds = {var};
    }
  }

  for (const SyntaxNode* s : to_background) edits.push_back(insert_at(s->span.start_byte, "%"));

  const SourceSpan& site = target.site->span;
  const std::string copy(slice(src, site));
  const std::string cond = join_conditions(conds);
  if (mode == Mode::kHighlight) {
    if (cond.empty()) {
      edits.push_back(insert_at(site.start_byte, color_call(style.color) + " "));
    } else {
      edits.push_back(insert_at(site.start_byte, "if (" + cond + ") " + color_call(style.color) + " { "));
      edits.push_back(insert_at(site.end_byte, " } else { " + copy + " }"));
    }
  } else if (!cond.empty()) {
    edits.push_back(insert_at(site.start_byte, "if (" + cond + ") { "));
    edits.push_back(insert_at(site.end_byte, " } else { %translate([0, 0, 0]) { " + copy + " } }"));
  }

  std::string decl_text;
  for (const auto& d : decls) decl_text += d + " = false;\n";
  if (!decl_text.empty()) edits.insert(edits.begin(), insert_at(0, decl_text));
  return splice(src, std::move(edits));
}

struct Prepared {
  std::unique_ptr<ComponentTree> owned;
  const ComponentTree* tree = nullptr;
};

// Re-derives the tree when `source` is not the text `tree` was built from
// (for example, a previously emitted source).
Prepared prepare(std::string_view source, const ComponentTree& tree) {
  Prepared p;
  if (source == tree.parse().source) {
    p.tree = &tree;
  } else {
    auto parsed = parse(strip_wrappers(source));
    p.owned = std::make_unique<ComponentTree>(build_hierarchy(std::move(parsed), tree.options()));
    p.tree = p.owned.get();
  }
  if (!p.tree->parse().ok())
    throw Error(ErrorCode::kPrecondition, "source has syntax errors; fix them before highlighting");
  return p;
}

}  // namespace

std::string strip_wrappers(std::string_view emitted) {
  std::string out;
  out.reserve(emitted.size());
  std::size_t pos = 0;
  while (pos < emitted.size()) {
    const auto open = emitted.find(kMarkerOpen, pos);
    if (open == std::string_view::npos) break;
    const auto close = emitted.find(kMarkerClose, open + kMarkerOpen.size());
    if (close == std::string_view::npos) break;
    out.append(emitted.substr(pos, open - pos));
    pos = close + kMarkerClose.size();
  }
  out.append(emitted.substr(pos));
  return out;
}

std::string emit_highlighted(std::string_view source, const ComponentTree& tree,
                             std::string_view component_id, const HighlightStyle& style) {
  const auto& c = style.color;
  for (double v : {c.r, c.g, c.b, c.a})
    if (!(v >= 0.0 && v <= 1.0))
      throw Error(ErrorCode::kPrecondition, "color channels must lie in [0, 1]");
  const Prepared p = prepare(source, tree);
  return plan(*p.tree, resolve_component(*p.tree, component_id), Mode::kHighlight, style);
}

std::string emit_isolated(std::string_view source, const ComponentTree& tree,
                          std::string_view component_id) {
  const Prepared p = prepare(source, tree);
  return plan(*p.tree, resolve_component(*p.tree, component_id), Mode::kIsolate, {});
}

HighlightBundle cross_reference(const ComponentTree& tree, const Selection& selection,
                                const HighlightStyle& style) {
  const ComponentNode& node = std::holds_alternative<SourceSpan>(selection)
                                  ? component_for_span(tree, std::get<SourceSpan>(selection))
                                  : resolve_component(tree, std::get<std::string>(selection));
  HighlightBundle b;
  b.component_id = node.id;
  b.label = node.label;
  b.code_span = node.span;
  for (const ComponentNode* n : tree.path_to(node)) b.hierarchy_path.push_back(n->id);
  const std::string& src = tree.parse().source;
  b.highlighted_source = emit_highlighted(src, tree, node.id, style);
  b.isolated_source = emit_isolated(src, tree, node.id);

  std::string text = "Highlighted " + node.label;
  if (node.kind == ComponentKind::kModuleInstance && node.definition) {
    const auto n = tree.instance_count(node.definition);
    if (n > 1) {
      std::size_t index = 1;
      for (const ComponentNode* other : tree.preorder()) {
        if (other == &node) break;
        if (other->kind == ComponentKind::kModuleInstance && other->definition == node.definition)
          ++index;
      }
      text += ", instance " + std::to_string(index) + " of " + std::to_string(n);
    }
  }
  if (node.kind != ComponentKind::kRoot) {
    text += ", lines " + std::to_string(node.span.start_line) + " to " +
            std::to_string(node.span.end_line);
  }
  b.announce = text + ".";
  return b;
}

}  // namespace scadscope
