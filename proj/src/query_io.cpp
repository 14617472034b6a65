#include "hyq/query_io.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "hyq/error.hpp"

namespace hyq {

namespace {

nlohmann::ordered_json names(const EntitySet& s, const KnowledgeGraph& g) {
  auto out = nlohmann::ordered_json::array();
  for (auto e : s) out.push_back(g.entity_name(e));
  return out;
}

EntitySet entities(const nlohmann::json& j, const KnowledgeGraph& g) {
  EntitySet out;
  for (const auto& name : j) out.push_back(g.entity(name.get<std::string>()));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

void write_samples(std::ostream& out, const std::vector<QuerySample>& samples, const KnowledgeGraph& g) {
  for (const auto& s : samples) {
    nlohmann::ordered_json j;
    j["structure"] = structure_name(s.structure);
    j["query"] = serialize_query(s.query, g);
    j["easy"] = names(s.easy, g);
    j["hard"] = names(s.hard, g);
    out << j.dump() << '\n';
  }
}

std::vector<QuerySample> read_samples(std::istream& in, const KnowledgeGraph& g, std::string_view source) {
  std::vector<QuerySample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = std::string(source) + ":" + std::to_string(line_no) + ": ";
    try {
      const auto j = nlohmann::json::parse(line);
      QuerySample s;
      s.query = parse_query(j.at("query").get<std::string>(), g);
      s.structure = j.contains("structure") ? parse_structure(j.at("structure").get<std::string>())
                                            : classify_structure(s.query);
      s.easy = entities(j.value("easy", nlohmann::json::array()), g);
      s.hard = entities(j.value("hard", nlohmann::json::array()), g);
      samples.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + e.what(), line_no);
    } catch (const ParseError& e) {
      throw ParseError(where + e.what(), line_no);
    } catch (const LookupError& e) {
      throw LookupError(where + e.what());
    } catch (const UsageError& e) {
      throw ParseError(where + e.what(), line_no);
    }
  }
  return samples;
}

void save_samples(const std::filesystem::path& path, const std::vector<QuerySample>& samples,
                  const KnowledgeGraph& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  write_samples(out, samples, g);
}

std::vector<QuerySample> load_samples(const std::filesystem::path& path, const KnowledgeGraph& g) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  return read_samples(in, g, path.string());
}

}  // namespace hyq
