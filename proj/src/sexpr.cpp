// S-expression reader and writer for queries.
//
//   query := "(" "e" name ")"
//          | "(" "p" name query ")"
//          | "(" "i" query query+ ")"
//          | "(" "u" query query+ ")"
//          | "(" "n" query ")"
//   name  := bare-atom | '"' (char | '\"' | '\\')* '"'

#include <cctype>

#include "hyq/error.hpp"
#include "hyq/query.hpp"

namespace hyq {

namespace {

bool is_bare_char(char ch) {
  return !std::isspace(static_cast<unsigned char>(ch)) && ch != '(' && ch != ')' && ch != '"' && ch != '\\';
}

class Reader {
 public:
  Reader(std::string_view text, const KnowledgeGraph& g) : text_(text), g_(g) {}

  Query read() {
    Query q;
    read_node(q);
    skip_space();
    if (pos_ != text_.size()) fail("trailing input after query");
    q.validate();
    return q;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { fail_at(what, pos_); }
  [[noreturn]] void fail_at(const std::string& what, std::size_t at) const {
    throw ParseError("query parse error at byte " + std::to_string(at) + ": " + what, at);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool at_close() {
    skip_space();
    return pos_ < text_.size() && text_[pos_] == ')';
  }

  void expect(char ch) {
    skip_space();
    if (pos_ >= text_.size()) fail(std::string("unexpected end of input, expected '") + ch + "'");
    if (text_[pos_] != ch) fail(std::string("expected '") + ch + "'");
    ++pos_;
  }

  std::string atom() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input, expected a name");
    if (text_[pos_] == '"') {
      const auto start = pos_++;
      std::string out;
      while (true) {
        if (pos_ >= text_.size()) fail_at("unterminated quoted name", start);
        const char ch = text_[pos_++];
        if (ch == '"') break;
        if (ch == '\\') {
          if (pos_ >= text_.size()) fail_at("unterminated quoted name", start);
          out.push_back(text_[pos_++]);
        } else {
          out.push_back(ch);
        }
      }
      return out;
    }
    const auto start = pos_;
    while (pos_ < text_.size() && is_bare_char(text_[pos_])) ++pos_;
    if (pos_ == start) fail("expected a name");
    return std::string(text_.substr(start, pos_ - start));
  }

  NodeRef read_node(Query& q) {
    expect('(');
    skip_space();
    const auto op_at = pos_;
    const auto op = atom();
    if (op == "e") {
      const auto at = (skip_space(), pos_);
      const auto name = atom();
      const auto id = g_.dictionaries().entities.find(name);
      if (!id) fail_at("unknown entity '" + name + "'", at);
      expect(')');
      return q.anchor(EntityId{*id});
    }
    if (op == "p") {
      const auto at = (skip_space(), pos_);
      const auto name = atom();
      RelationId rel;
      try {
        rel = g_.relation(name);
      } catch (const LookupError&) {
        fail_at("unknown relation '" + name + "'", at);
      }
      const auto child = read_node(q);
      expect(')');
      return q.project(rel, child);
    }
    if (op == "n") {
      const auto child = read_node(q);
      expect(')');
      return q.negate(child);
    }
    if (op == "i" || op == "u") {
      std::vector<NodeRef> children;
      while (!at_close()) {
        if (pos_ >= text_.size()) fail("unexpected end of input, expected ')'");
        children.push_back(read_node(q));
      }
      if (children.size() < 2) fail_at("'" + op + "' needs at least two operands", op_at);
      expect(')');
      return op == "i" ? q.intersect(std::move(children)) : q.unite(std::move(children));
    }
    fail_at("unknown operator '" + op + "'", op_at);
  }

  std::string_view text_;
  const KnowledgeGraph& g_;
  std::size_t pos_ = 0;
};

void write_name(std::string& out, std::string_view name) {
  const bool bare = !name.empty() && std::all_of(name.begin(), name.end(), is_bare_char);
  if (bare) {
    out += name;
    return;
  }
  out += '"';
  for (char ch : name) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  out += '"';
}

void write_node(std::string& out, const Query& q, NodeRef n, const KnowledgeGraph& g) {
  const auto& node = q.node(n);
  switch (node.op) {
    case QueryOp::Anchor:
      out += "(e ";
      write_name(out, g.entity_name(node.entity));
      break;
    case QueryOp::Projection:
      out += "(p ";
      write_name(out, g.relation_name(node.rel));
      out += ' ';
      write_node(out, q, node.children[0], g);
      break;
    case QueryOp::Negation:
      out += "(n ";
      write_node(out, q, node.children[0], g);
      break;
    case QueryOp::Intersection:
    case QueryOp::Union:
      out += node.op == QueryOp::Intersection ? "(i" : "(u";
      for (auto c : node.children) {
        out += ' ';
        write_node(out, q, c, g);
      }
      break;
  }
  out += ')';
}

}  // namespace

Query parse_query(std::string_view text, const KnowledgeGraph& g) {
  try {
    return Reader(text, g).read();
  } catch (const ValidationError& e) {
    throw ParseError(std::string("invalid query: ") + e.what(), 0);
  }
}

std::string serialize_query(const Query& q, const KnowledgeGraph& g) {
  q.validate(g);
  std::string out;
  write_node(out, q, q.root(), g);
  return out;
}

}  // namespace hyq
