#include "hyq/graph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "hyq/error.hpp"

namespace hyq {

std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  for (Split s : kSplits) {
    if (split_name(s) == name) return s;
  }
  throw UsageError("unknown split '" + std::string(name) + "' (expected train, valid or test)");
}

std::optional<std::uint32_t> Dictionary::find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t Dictionary::intern(std::string_view name) {
  if (auto id = find(name)) return *id;
  const auto id = static_cast<std::uint32_t>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

const std::string& Dictionary::name(std::uint32_t id) const {
  if (id >= names_.size()) throw BoundsError("dictionary id " + std::to_string(id) + " out of range");
  return names_[id];
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    cols.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cols;
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

KnowledgeGraph::KnowledgeGraph(Dictionaries dicts, std::array<std::vector<Triple>, 3> forward_triples)
    : dicts_(std::move(dicts)), triples_(std::move(forward_triples)) {
  const auto nv = num_entities();
  const auto nr = num_relation_ids();
  std::set<Triple> seen;
  for (auto& split : triples_) {
    for (const auto& t : split) {
      if (index(t.head) >= nv || index(t.tail) >= nv || index(t.rel) >= nr || is_inverse(t.rel)) {
        throw BoundsError("triple references an id outside the dictionaries");
      }
    }
    std::sort(split.begin(), split.end());
    split.erase(std::unique(split.begin(), split.end()), split.end());
    std::erase_if(split, [&](const Triple& t) { return seen.contains(t); });
    seen.insert(split.begin(), split.end());
  }

  for (std::size_t s = 0; s < 3; ++s) {
    auto& csr = csr_[s];
    csr.offsets.assign(nv * nr + 1, 0);
    for (const auto& t : triples_[s]) {
      ++csr.offsets[index(t.head) * nr + index(t.rel) + 1];
      ++csr.offsets[index(t.tail) * nr + index(inverse(t.rel)) + 1];
    }
    for (std::size_t i = 1; i < csr.offsets.size(); ++i) csr.offsets[i] += csr.offsets[i - 1];
    csr.targets.resize(csr.offsets.back());
    auto cursor = csr.offsets;
    for (const auto& t : triples_[s]) {
      csr.targets[cursor[index(t.head) * nr + index(t.rel)]++] = t.tail;
      csr.targets[cursor[index(t.tail) * nr + index(inverse(t.rel))]++] = t.head;
    }
    for (std::size_t row = 0; row + 1 < csr.offsets.size(); ++row) {
      std::sort(csr.targets.begin() + csr.offsets[row], csr.targets.begin() + csr.offsets[row + 1]);
    }
  }
}

std::vector<Triple> KnowledgeGraph::triples(SplitMask mask) const {
  std::vector<Triple> out;
  for (Split s : kSplits) {
    if (mask.contains(s)) out.insert(out.end(), triples(s).begin(), triples(s).end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool KnowledgeGraph::contains(const Triple& t, SplitMask mask) const {
  const Triple fwd = is_inverse(t.rel) ? Triple{t.tail, inverse(t.rel), t.head} : t;
  for (Split s : kSplits) {
    if (mask.contains(s) && std::binary_search(triples(s).begin(), triples(s).end(), fwd)) return true;
  }
  return false;
}

void KnowledgeGraph::check(EntityId e) const {
  if (index(e) >= num_entities()) {
    throw BoundsError("entity id " + std::to_string(index(e)) + " out of range (|V| = " +
                      std::to_string(num_entities()) + ")");
  }
}

void KnowledgeGraph::check(RelationId r) const {
  if (index(r) >= num_relation_ids()) {
    throw BoundsError("relation id " + std::to_string(index(r)) + " out of range (2|R| = " +
                      std::to_string(num_relation_ids()) + ")");
  }
}

std::span<const EntityId> KnowledgeGraph::neighbors(EntityId v, RelationId r, Split s) const {
  check(v);
  check(r);
  const auto& csr = csr_[static_cast<int>(s)];
  const auto row = index(v) * num_relation_ids() + index(r);
  return {csr.targets.data() + csr.offsets[row], csr.offsets[row + 1] - csr.offsets[row]};
}

std::vector<EntityId> KnowledgeGraph::neighbors(EntityId v, RelationId r, SplitMask mask) const {
  std::vector<EntityId> out;
  for (Split s : kSplits) {
    if (!mask.contains(s)) continue;
    auto part = neighbors(v, r, s);
    const auto mid = out.size();
    out.insert(out.end(), part.begin(), part.end());
    std::inplace_merge(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(mid), out.end());
  }
  return out;
}

std::vector<RelationId> KnowledgeGraph::relations_from(EntityId v, SplitMask mask) const {
  std::vector<RelationId> out;
  for (std::uint32_t r = 0; r < num_relation_ids(); ++r) {
    for (Split s : kSplits) {
      if (mask.contains(s) && !neighbors(v, RelationId{r}, s).empty()) {
        out.push_back(RelationId{r});
        break;
      }
    }
  }
  return out;
}

const std::string& KnowledgeGraph::entity_name(EntityId e) const {
  check(e);
  return dicts_.entities.name(index(e));
}

std::string KnowledgeGraph::relation_name(RelationId r) const {
  if (index(r) == num_relation_ids()) return "<self>";
  check(r);
  const auto& base = dicts_.relations.name(index(r) / 2);
  return is_inverse(r) ? "~" + base : base;
}

EntityId KnowledgeGraph::entity(std::string_view name) const {
  if (auto id = dicts_.entities.find(name)) return EntityId{*id};
  throw LookupError("unknown entity '" + std::string(name) + "'");
}

RelationId KnowledgeGraph::relation(std::string_view name) const {
  if (auto id = dicts_.relations.find(name)) return forward_relation(*id);
  if (name.starts_with('~')) {
    if (auto id = dicts_.relations.find(name.substr(1))) return inverse(forward_relation(*id));
  }
  throw LookupError("unknown relation '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

std::uint32_t GraphBuilder::lookup(Dictionary& d, std::string_view name, std::string_view kind) {
  if (!frozen_) return d.intern(name);
  if (auto id = d.find(name)) return *id;
  throw LookupError("unknown " + std::string(kind) + " '" + std::string(name) + "'");
}

EntityId GraphBuilder::add_entity(std::string_view name) {
  return EntityId{lookup(dicts_.entities, name, "entity")};
}

RelationId GraphBuilder::add_relation(std::string_view name) {
  return forward_relation(lookup(dicts_.relations, name, "relation"));
}

void GraphBuilder::add(std::string_view head, std::string_view rel, std::string_view tail, Split s) {
  const auto h = add_entity(head);
  const auto r = add_relation(rel);
  const auto t = add_entity(tail);
  triples_[static_cast<int>(s)].push_back({h, r, t});
}

void GraphBuilder::add(Triple t, Split s) {
  if (is_inverse(t.rel)) t = {t.tail, inverse(t.rel), t.head};
  triples_[static_cast<int>(s)].push_back(t);
}

void GraphBuilder::read_tsv(std::istream& in, Split s, std::string_view source) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = strip_cr(line);
    if (text.empty()) continue;
    const auto cols = split_tabs(text);
    if (cols.size() != 3) {
      throw ParseError(std::string(source) + ":" + std::to_string(line_no) + ": expected 3 tab-separated columns, got " +
                           std::to_string(cols.size()),
                       line_no);
    }
    try {
      add(cols[0], cols[1], cols[2], s);
    } catch (const LookupError& e) {
      throw LookupError(std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

KnowledgeGraph GraphBuilder::build() && {
  return KnowledgeGraph(std::move(dicts_), std::move(triples_));
}

// ---------------------------------------------------------------------------

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

KnowledgeGraph load_triples(const std::filesystem::path& path, Split split, const Dictionaries* dicts) {
  GraphBuilder builder = dicts ? GraphBuilder(*dicts, true) : GraphBuilder();
  auto in = open_in(path);
  builder.read_tsv(in, split, path.string());
  return std::move(builder).build();
}

KnowledgeGraph load_splits(const std::filesystem::path& train, const std::filesystem::path& valid,
                           const std::filesystem::path& test) {
  GraphBuilder builder;
  const std::array<std::pair<const std::filesystem::path*, Split>, 3> files = {
      {{&train, Split::Train}, {&valid, Split::Valid}, {&test, Split::Test}}};
  for (const auto& [path, split] : files) {
    auto in = open_in(*path);
    builder.read_tsv(in, split, path->string());
  }
  return std::move(builder).build();
}

void write_triples_tsv(const KnowledgeGraph& g, Split s, std::ostream& out) {
  for (const auto& t : g.triples(s)) {
    out << g.entity_name(t.head) << '\t' << g.relation_name(t.rel) << '\t' << g.entity_name(t.tail) << '\n';
  }
}

void write_dictionary_tsv(const Dictionary& d, std::ostream& out) {
  for (std::uint32_t i = 0; i < d.size(); ++i) out << d.name(i) << '\t' << i << '\n';
}

Dictionary read_dictionary_tsv(std::istream& in, std::string_view source) {
  Dictionary d;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = strip_cr(line);
    if (text.empty()) continue;
    const auto cols = split_tabs(text);
    if (cols.size() != 2) {
      throw ParseError(std::string(source) + ":" + std::to_string(line_no) + ": expected name<TAB>id", line_no);
    }
    std::uint32_t id = 0;
    try {
      id = static_cast<std::uint32_t>(std::stoul(std::string(cols[1])));
    } catch (const std::exception&) {
      throw ParseError(std::string(source) + ":" + std::to_string(line_no) + ": bad id '" + std::string(cols[1]) + "'",
                       line_no);
    }
    if (id != d.size() || d.find(cols[0])) {
      throw ParseError(std::string(source) + ":" + std::to_string(line_no) + ": ids must be dense, unique and in order",
                       line_no);
    }
    d.intern(cols[0]);
  }
  return d;
}

void save_graph_dir(const KnowledgeGraph& g, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "entities.tsv");
    write_dictionary_tsv(g.dictionaries().entities, out);
  }
  {
    auto out = open_out(dir / "relations.tsv");
    write_dictionary_tsv(g.dictionaries().relations, out);
  }
  for (Split s : kSplits) {
    auto out = open_out(dir / (std::string(split_name(s)) + ".tsv"));
    write_triples_tsv(g, s, out);
  }
}

KnowledgeGraph load_graph_dir(const std::filesystem::path& dir) {
  Dictionaries dicts;
  {
    auto in = open_in(dir / "entities.tsv");
    dicts.entities = read_dictionary_tsv(in, (dir / "entities.tsv").string());
  }
  {
    auto in = open_in(dir / "relations.tsv");
    dicts.relations = read_dictionary_tsv(in, (dir / "relations.tsv").string());
  }
  GraphBuilder builder(std::move(dicts), true);
  for (Split s : kSplits) {
    const auto path = dir / (std::string(split_name(s)) + ".tsv");
    auto in = open_in(path);
    builder.read_tsv(in, s, path.string());
  }
  return std::move(builder).build();
}

EdgeList adjacency_matrix(const KnowledgeGraph& g, SplitMask mask) {
  EdgeList edges;
  edges.num_entities = g.num_entities();
  edges.num_relations = g.num_relation_ids() + 1;
  struct Edge {
    std::uint32_t rel, src, dst;
    auto operator<=>(const Edge&) const = default;
  };
  std::vector<Edge> all;
  for (const auto& t : g.triples(mask)) {
    all.push_back({index(t.rel), index(t.head), index(t.tail)});
    all.push_back({index(inverse(t.rel)), index(t.tail), index(t.head)});
  }
  for (std::uint32_t v = 0; v < g.num_entities(); ++v) all.push_back({edges.self_loop(), v, v});
  std::sort(all.begin(), all.end());
  edges.src.reserve(all.size());
  edges.dst.reserve(all.size());
  edges.rel.reserve(all.size());
  for (const auto& e : all) {
    edges.src.push_back(e.src);
    edges.dst.push_back(e.dst);
    edges.rel.push_back(e.rel);
  }
  return edges;
}

}  // namespace hyq
