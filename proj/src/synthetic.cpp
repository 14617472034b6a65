#include "hyq/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "hyq/error.hpp"
#include "hyq/random.hpp"

namespace hyq {

namespace {

std::string padded(char prefix, std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%04zu", prefix, k);
  return buf;
}

/// Assigns each triple to a split with the requested fractions.
std::array<std::vector<Triple>, 3> split_triples(std::vector<Triple> all, double valid_fraction, double test_fraction,
                                                 Rng& rng) {
  if (valid_fraction < 0.0 || test_fraction < 0.0 || valid_fraction + test_fraction >= 1.0) {
    throw ValidationError("held-out fractions must be non-negative and sum below 1");
  }
  rng.shuffle(all);
  const auto n_test = static_cast<std::size_t>(test_fraction * static_cast<double>(all.size()) + 0.5);
  const auto n_valid = static_cast<std::size_t>(valid_fraction * static_cast<double>(all.size()) + 0.5);
  std::array<std::vector<Triple>, 3> splits;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const int s = i < n_test ? 2 : (i < n_test + n_valid ? 1 : 0);
    splits[s].push_back(all[i]);
  }
  for (auto& s : splits) std::sort(s.begin(), s.end());
  return splits;
}

}  // namespace

KnowledgeGraph family_tree_graph(const SyntheticConfig& config) {
  if (config.entities < 4) throw ValidationError("family tree needs at least 4 entities");
  if (config.branching < 2) throw ValidationError("family tree branching must be at least 2");
  Rng rng(config.seed, Stream::Synthetic);

  // Tree positions are shuffled onto entity ids so ids carry no structure.
  std::vector<std::uint32_t> id(config.entities);
  for (std::uint32_t i = 0; i < id.size(); ++i) id[i] = i;
  rng.shuffle(id);

  Dictionaries dicts;
  for (std::size_t k = 0; k < config.entities; ++k) dicts.entities.intern(padded('e', k));
  for (const char* r : {"parent", "child", "sibling", "grandparent", "uncle"}) dicts.relations.intern(r);
  const auto parent_rel = forward_relation(0), child_rel = forward_relation(1), sibling_rel = forward_relation(2),
             grandparent_rel = forward_relation(3), uncle_rel = forward_relation(4);

  const auto b = config.branching;
  auto parent_of = [&](std::size_t i) { return (i - 1) / b; };
  auto children_of = [&](std::size_t p) {
    std::vector<std::size_t> out;
    for (std::size_t c = p * b + 1; c <= p * b + b && c < config.entities; ++c) out.push_back(c);
    return out;
  };
  auto triple = [&](std::size_t h, RelationId r, std::size_t t) {
    return Triple{EntityId{id[h]}, r, EntityId{id[t]}};
  };

  std::vector<Triple> all;
  for (std::size_t x = 1; x < config.entities; ++x) {
    const auto p = parent_of(x);
    all.push_back(triple(x, parent_rel, p));
    all.push_back(triple(p, child_rel, x));
    for (auto s : children_of(p)) {
      if (s != x) all.push_back(triple(x, sibling_rel, s));
    }
    if (p == 0) continue;
    const auto g = parent_of(p);
    all.push_back(triple(x, grandparent_rel, g));
    for (auto u : children_of(g)) {
      if (u != p) all.push_back(triple(x, uncle_rel, u));
    }
  }
  return KnowledgeGraph(std::move(dicts), split_triples(std::move(all), config.valid_fraction, config.test_fraction, rng));
}

KnowledgeGraph random_graph(std::size_t entities, std::size_t relations, std::size_t edges, std::uint64_t seed,
                            double test_fraction) {
  if (entities == 0 || relations == 0) throw ValidationError("random graph needs entities and relations");
  if (edges > entities * entities * relations) throw ValidationError("more edges requested than possible");
  Rng rng(seed, Stream::Synthetic);
  Dictionaries dicts;
  for (std::size_t k = 0; k < entities; ++k) dicts.entities.intern("e" + std::to_string(k));
  for (std::size_t k = 0; k < relations; ++k) dicts.relations.intern("r" + std::to_string(k));
  std::set<Triple> chosen;
  while (chosen.size() < edges) {
    const EntityId h{static_cast<std::uint32_t>(rng.index(entities))};
    const EntityId t{static_cast<std::uint32_t>(rng.index(entities))};
    const auto r = forward_relation(static_cast<std::uint32_t>(rng.index(relations)));
    chosen.insert({h, r, t});
  }
  return KnowledgeGraph(std::move(dicts),
                        split_triples(std::vector<Triple>(chosen.begin(), chosen.end()), 0.0, test_fraction, rng));
}

}  // namespace hyq
