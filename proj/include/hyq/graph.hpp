#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hyq {

/// Dense entity index in [0, |V|).
enum class EntityId : std::uint32_t {};

/// Dense relation index in [0, 2|R|). Even ids are relations as loaded, odd ids
/// their inverses. The self-loop pseudo-relation used by message passing is
/// 2|R| and only appears in EdgeList.
enum class RelationId : std::uint32_t {};

constexpr std::uint32_t index(EntityId e) { return static_cast<std::uint32_t>(e); }
constexpr std::uint32_t index(RelationId r) { return static_cast<std::uint32_t>(r); }
constexpr RelationId inverse(RelationId r) { return RelationId{index(r) ^ 1u}; }
constexpr bool is_inverse(RelationId r) { return (index(r) & 1u) != 0; }
constexpr RelationId forward_relation(std::uint32_t k) { return RelationId{2 * k}; }

struct Triple {
  EntityId head;
  RelationId rel;
  EntityId tail;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

enum class Split : std::uint8_t { Train = 0, Valid = 1, Test = 2 };

/// Union of splits, e.g. `Split::Train | Split::Valid`.
class SplitMask {
 public:
  constexpr SplitMask() = default;
  constexpr SplitMask(Split s) : bits_(static_cast<std::uint8_t>(1u << static_cast<unsigned>(s))) {}
  constexpr bool contains(Split s) const {
    return (bits_ >> static_cast<unsigned>(s)) & 1u;
  }
  constexpr SplitMask operator|(SplitMask o) const { return from_bits(bits_ | o.bits_); }
  constexpr bool operator==(const SplitMask&) const = default;
  static constexpr SplitMask all() { return from_bits(0b111); }

 private:
  static constexpr SplitMask from_bits(unsigned b) {
    SplitMask m;
    m.bits_ = static_cast<std::uint8_t>(b);
    return m;
  }
  std::uint8_t bits_ = 0;
};

constexpr SplitMask operator|(Split a, Split b) { return SplitMask(a) | SplitMask(b); }

inline constexpr std::array<Split, 3> kSplits = {Split::Train, Split::Valid, Split::Test};
std::string_view split_name(Split s);
Split parse_split(std::string_view name);

/// Bijective name <-> dense id map, ids handed out in first-seen order.
class Dictionary {
 public:
  std::size_t size() const { return names_.size(); }
  std::optional<std::uint32_t> find(std::string_view name) const;
  std::uint32_t intern(std::string_view name);
  const std::string& name(std::uint32_t id) const;
  const std::vector<std::string>& names() const { return names_; }

  friend bool operator==(const Dictionary& a, const Dictionary& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

/// Entity names and forward relation names.
struct Dictionaries {
  Dictionary entities;
  Dictionary relations;
};

/// Immutable triple store. Each split keeps its duplicate-free forward triples;
/// neighborhood access goes through one CSR per split that already contains
/// the inverse edges.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  /// Deduplicates each split, then drops from later splits any triple already
  /// present in an earlier one (train wins over valid wins over test).
  KnowledgeGraph(Dictionaries dicts, std::array<std::vector<Triple>, 3> forward_triples);

  std::size_t num_entities() const { return dicts_.entities.size(); }
  /// Number of relations as loaded (not counting inverses).
  std::size_t num_relations() const { return dicts_.relations.size(); }
  /// Number of relation ids including inverses, i.e. 2|R|.
  std::size_t num_relation_ids() const { return 2 * num_relations(); }

  /// Forward triples of one split, sorted.
  const std::vector<Triple>& triples(Split s) const { return triples_[static_cast<int>(s)]; }
  std::vector<Triple> triples(SplitMask mask) const;
  bool contains(const Triple& t, SplitMask mask) const;

  /// Tails t with (v, r, t) in the masked splits, ascending.
  std::vector<EntityId> neighbors(EntityId v, RelationId r, SplitMask mask) const;
  std::span<const EntityId> neighbors(EntityId v, RelationId r, Split s) const;
  /// Relation ids with at least one edge out of v in the masked splits.
  std::vector<RelationId> relations_from(EntityId v, SplitMask mask) const;

  const Dictionaries& dictionaries() const { return dicts_; }
  const std::string& entity_name(EntityId e) const;
  /// Forward relations print as their name, inverses as `~name`.
  std::string relation_name(RelationId r) const;
  EntityId entity(std::string_view name) const;
  RelationId relation(std::string_view name) const;

  void check(EntityId e) const;
  void check(RelationId r) const;

 private:
  struct Csr {
    std::vector<std::uint32_t> offsets;  // row = v * 2|R| + r
    std::vector<EntityId> targets;
  };

  Dictionaries dicts_;
  std::array<std::vector<Triple>, 3> triples_;
  std::array<Csr, 3> csr_;
};

/// Accumulates triples by name or id and freezes them into a KnowledgeGraph.
class GraphBuilder {
 public:
  GraphBuilder() = default;
  /// With `frozen`, unknown names raise LookupError instead of being added.
  GraphBuilder(Dictionaries dicts, bool frozen) : dicts_(std::move(dicts)), frozen_(frozen) {}

  EntityId add_entity(std::string_view name);
  RelationId add_relation(std::string_view name);
  void add(std::string_view head, std::string_view rel, std::string_view tail, Split s = Split::Train);
  /// `rel` may be an inverse id; it is stored as the equivalent forward triple.
  void add(Triple t, Split s = Split::Train);
  /// Reads `head<TAB>relation<TAB>tail` lines. Blank lines are skipped.
  void read_tsv(std::istream& in, Split s, std::string_view source = "<stream>");

  KnowledgeGraph build() &&;

 private:
  std::uint32_t lookup(Dictionary& d, std::string_view name, std::string_view kind);

  Dictionaries dicts_;
  bool frozen_ = false;
  std::array<std::vector<Triple>, 3> triples_;
};

/// Loads one TSV into `split`. When `dicts` is given the names are resolved
/// against it and unknown names are an error.
KnowledgeGraph load_triples(const std::filesystem::path& path, Split split = Split::Train,
                            const Dictionaries* dicts = nullptr);
KnowledgeGraph load_splits(const std::filesystem::path& train, const std::filesystem::path& valid,
                           const std::filesystem::path& test);

void write_triples_tsv(const KnowledgeGraph& g, Split s, std::ostream& out);
void write_dictionary_tsv(const Dictionary& d, std::ostream& out);
Dictionary read_dictionary_tsv(std::istream& in, std::string_view source = "<stream>");

/// Graph directory layout: entities.tsv, relations.tsv, train.tsv, valid.tsv,
/// test.tsv. Dictionaries are written first so reloading reproduces ids.
void save_graph_dir(const KnowledgeGraph& g, const std::filesystem::path& dir);
KnowledgeGraph load_graph_dir(const std::filesystem::path& dir);

/// Message-passing edge structure: every edge of the masked splits in both
/// directions plus one self-loop per entity under the pseudo-relation
/// `self_loop` = 2|R|. Edges are grouped by relation id, then (src, dst).
struct EdgeList {
  std::size_t num_entities = 0;
  std::size_t num_relations = 0;  // 2|R| + 1
  std::vector<std::uint32_t> src;
  std::vector<std::uint32_t> dst;
  std::vector<std::uint32_t> rel;

  std::size_t size() const { return src.size(); }
  std::uint32_t self_loop() const { return static_cast<std::uint32_t>(num_relations - 1); }
};

EdgeList adjacency_matrix(const KnowledgeGraph& g, SplitMask mask);

}  // namespace hyq
