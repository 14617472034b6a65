#include "hyq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "hyq/error.hpp"
#include "hyq/graph.hpp"

namespace hyq {

namespace {

void check_answers(std::size_t n, const EntitySet& answers) {
  if (answers.empty()) throw ValidationError("degenerate instance: empty answer set");
  if (answers.size() >= n) throw ValidationError("degenerate instance: every entity is an answer");
  for (auto a : answers) {
    if (index(a) >= n) throw BoundsError("answer entity out of range");
  }
}

}  // namespace

double bce_loss(const FuzzySetd& pred, const EntitySet& answers) {
  const auto n = static_cast<std::size_t>(pred.size());
  check_answers(n, answers);
  std::vector<char> is_answer(n, 0);
  for (auto a : answers) is_answer[index(a)] = 1;
  std::vector<double> pos, neg;
  pos.reserve(answers.size());
  neg.reserve(n - answers.size());
  for (std::size_t v = 0; v < n; ++v) {
    const double p = std::clamp(pred[static_cast<Eigen::Index>(v)], kProbabilityClamp, 1.0 - kProbabilityClamp);
    if (is_answer[v]) {
      pos.push_back(-std::log(p));
    } else {
      neg.push_back(-std::log(1.0 - p));
    }
  }
  // Summing in sorted order makes the result independent of entity numbering.
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  return std::accumulate(pos.begin(), pos.end(), 0.0) / static_cast<double>(pos.size()) +
         std::accumulate(neg.begin(), neg.end(), 0.0) / static_cast<double>(neg.size());
}

ad::Tensor bce_loss(const ad::Tensor& pred, const EntitySet& answers) {
  if (pred.cols() != 1) throw DimensionError("bce_loss expects a column vector");
  const auto n = static_cast<std::size_t>(pred.rows());
  check_answers(n, answers);
  const double wp = 1.0 / static_cast<double>(answers.size());
  const double wn = 1.0 / static_cast<double>(n - answers.size());
  ad::Matrix pos_w = ad::Matrix::Zero(pred.rows(), 1);
  ad::Matrix neg_w = ad::Matrix::Constant(pred.rows(), 1, -wn);
  for (auto a : answers) {
    pos_w(index(a), 0) = -wp;
    neg_w(index(a), 0) = 0.0;
  }
  auto& tape = pred.tape();
  const auto p = ad::clamp(pred, kProbabilityClamp, 1.0 - kProbabilityClamp);
  const auto pos = ad::sum(ad::mul(ad::log(p), tape.constant(std::move(pos_w))));
  const auto neg = ad::sum(ad::mul(ad::log(ad::add_scalar(ad::scale(p, -1.0), 1.0)), tape.constant(std::move(neg_w))));
  return ad::add(pos, neg);
}

std::size_t filtered_rank(const FuzzySetd& scores, EntityId hard_answer, const EntitySet& all_answers) {
  const auto n = static_cast<std::size_t>(scores.size());
  if (index(hard_answer) >= n) throw UsageError("hard answer out of range");
  if (!std::binary_search(all_answers.begin(), all_answers.end(), hard_answer)) {
    throw UsageError("hard answer is not among the answers");
  }
  const double sa = scores[index(hard_answer)];
  std::size_t above = 0, tied = 0;
  auto it = all_answers.begin();
  for (std::uint32_t v = 0; v < n; ++v) {
    while (it != all_answers.end() && index(*it) < v) ++it;
    if (it != all_answers.end() && index(*it) == v) continue;
    const double s = scores[v];
    if (s > sa) {
      ++above;
    } else if (s == sa) {
      ++tied;
    }
  }
  return 1 + above + tied / 2;
}

double predict_cardinality(const FuzzySetd& scores, double threshold, CardinalityMode mode) {
  double total = 0.0;
  for (Eigen::Index v = 0; v < scores.size(); ++v) {
    if (scores[v] > threshold) total += mode == CardinalityMode::Sum ? scores[v] : 1.0;
  }
  return total;
}

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ValidationError("spearman: sequences differ in length");
  if (xs.size() < 2) throw ValidationError("spearman: need at least two observations");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw ValidationError("spearman: correlation undefined for a constant sequence");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double mean_reciprocal_rank(std::span<const std::size_t> ranks) {
  if (ranks.empty()) throw ValidationError("no ranks");
  double total = 0.0;
  for (auto r : ranks) total += 1.0 / static_cast<double>(r);
  return total / static_cast<double>(ranks.size());
}

double hits_at(std::span<const std::size_t> ranks, std::size_t k) {
  if (ranks.empty()) throw ValidationError("no ranks");
  const auto hit = std::count_if(ranks.begin(), ranks.end(), [&](auto r) { return r <= k; });
  return static_cast<double>(hit) / static_cast<double>(ranks.size());
}

double random_scorer_mrr(std::span<const QuerySample> samples, std::size_t num_entities) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& s : samples) {
    const auto answers = s.easy.size() + s.hard.size();
    const auto candidates = num_entities - answers + 1;
    double harmonic = 0.0;
    for (std::size_t k = 1; k <= candidates; ++k) harmonic += 1.0 / static_cast<double>(k);
    total += static_cast<double>(s.hard.size()) * harmonic / static_cast<double>(candidates);
    count += s.hard.size();
  }
  if (count == 0) throw ValidationError("no hard answers");
  return total / static_cast<double>(count);
}

RankingReport evaluate(std::span<const QuerySample> samples, const Scorer& scorer, const EvalOptions& options) {
  std::vector<FuzzySetd> scores(samples.size());
  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, samples.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < samples.size(); ++i) scores[i] = scorer(samples[i].query);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < samples.size(); i += threads) scores[i] = scorer(samples[i].query);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  RankingReport report;
  std::map<QueryStructure, std::vector<std::size_t>> ranks;
  std::map<QueryStructure, std::pair<std::vector<double>, std::vector<double>>> cards;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.hard.empty()) throw ValidationError("sample " + std::to_string(i) + " has no hard answers");
    const auto all = s.answers();
    for (auto a : s.hard) {
      const auto r = filtered_rank(scores[i], a, all);
      ranks[s.structure].push_back(r);
      report.ranks.push_back({i, s.structure, a, r});
    }
    auto& [pred, truth] = cards[s.structure];
    pred.push_back(predict_cardinality(scores[i], options.cardinality_threshold, options.cardinality_mode));
    truth.push_back(static_cast<double>(all.size()));
    report.by_structure[s.structure].queries += 1;
  }
  for (auto& [structure, m] : report.by_structure) {
    const auto& r = ranks[structure];
    m.answers = r.size();
    m.mrr = mean_reciprocal_rank(r);
    for (auto k : options.ks) m.hits[k] = hits_at(r, k);
    const auto& [pred, truth] = cards[structure];
    try {
      m.cardinality_spearman = spearman(pred, truth);
    } catch (const ValidationError&) {
      m.cardinality_spearman.reset();
    }
  }
  auto macro = [&](auto structures) -> std::optional<double> {
    double total = 0.0;
    std::size_t n = 0;
    for (auto s : structures) {
      auto it = report.by_structure.find(s);
      if (it == report.by_structure.end()) continue;
      total += it->second.mrr;
      ++n;
    }
    if (n == 0) return std::nullopt;
    return total / static_cast<double>(n);
  };
  report.avg_p_mrr = macro(kEpfoStructures);
  report.avg_n_mrr = macro(kNegationStructures);
  for (auto s : kAllStructures) {
    if (!report.by_structure.contains(s)) {
      report.warnings.push_back("no samples for structure '" + std::string(structure_name(s)) + "'");
    }
  }
  return report;
}

namespace {

nlohmann::ordered_json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

nlohmann::ordered_json RankingReport::to_json() const {
  nlohmann::ordered_json j;
  auto types = nlohmann::ordered_json::object();
  for (const auto& [structure, m] : by_structure) {
    nlohmann::ordered_json t;
    t["queries"] = m.queries;
    t["answers"] = m.answers;
    t["mrr"] = m.mrr;
    for (const auto& [k, v] : m.hits) t["hits@" + std::to_string(k)] = v;
    t["cardinality_spearman"] = optional_number(m.cardinality_spearman);
    types[std::string(structure_name(structure))] = std::move(t);
  }
  j["structures"] = std::move(types);
  j["avg_p_mrr"] = optional_number(avg_p_mrr);
  j["avg_n_mrr"] = optional_number(avg_n_mrr);
  j["warnings"] = warnings;
  return j;
}

std::string RankingReport::ranks_tsv(const KnowledgeGraph& g) const {
  std::ostringstream out;
  out << "query\tstructure\tentity\trank\n";
  for (const auto& r : ranks) {
    out << r.query << '\t' << structure_name(r.structure) << '\t' << g.entity_name(r.answer) << '\t' << r.rank << '\n';
  }
  return out.str();
}

}  // namespace hyq
