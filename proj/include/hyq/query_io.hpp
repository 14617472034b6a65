#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "hyq/graph.hpp"
#include "hyq/query.hpp"

namespace hyq {

/// JSON lines, one object per sample:
///   {"structure": "2in", "query": "(i ...)", "easy": [names], "hard": [names]}
void write_samples(std::ostream& out, const std::vector<QuerySample>& samples, const KnowledgeGraph& g);
std::vector<QuerySample> read_samples(std::istream& in, const KnowledgeGraph& g, std::string_view source = "<stream>");

void save_samples(const std::filesystem::path& path, const std::vector<QuerySample>& samples,
                  const KnowledgeGraph& g);
std::vector<QuerySample> load_samples(const std::filesystem::path& path, const KnowledgeGraph& g);

}  // namespace hyq
