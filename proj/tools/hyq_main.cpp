// hyq: command-line front end for the query-answering pipeline.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hyq/error.hpp"
#include "hyq/executor.hpp"
#include "hyq/graph.hpp"
#include "hyq/metrics.hpp"
#include "hyq/model.hpp"
#include "hyq/query_io.hpp"
#include "hyq/sampler.hpp"
#include "hyq/synthetic.hpp"
#include "hyq/train.hpp"

namespace fs = std::filesystem;
using namespace hyq;

namespace {

struct Options {
  std::size_t threads = 1;
  std::string config_path;

  // ingest
  std::string train_tsv, valid_tsv, test_tsv;
  // shared
  std::string graph_dir, out, queries, checkpoint;
  std::uint64_t seed = 0;
  std::string observed = "train,valid";
  // synth
  std::size_t entities = 200, branching = 3;
  double valid_fraction = 0.0, test_fraction = 0.1;
  // gen-queries
  std::vector<std::string> structures;
  std::size_t count = 100;
  std::string split = "test";
  // train
  std::size_t epochs = 10, batch = 16, dim = 32, layers = 4, max_steps = 0;
  double lr = 1e-3, dropout = 0.0, relation_init_std = 0.1;
  // eval / answer / cardinality
  std::vector<std::size_t> ks = {1, 3, 10};
  std::string ranks_tsv, trace_path, query_text, cardinality_mode = "sum";
  std::size_t top_k = 10;
  double threshold = 0.5;
};

SplitMask parse_mask(const std::string& text) {
  SplitMask mask;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    if (!part.empty()) mask = mask | SplitMask(parse_split(part));
  }
  return mask;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty() || !fs::exists(path)) throw ValidationError(std::string(what) + " '" + path + "' does not exist");
}

/// Options of a subcommand as JSON, echoed next to its outputs.
nlohmann::ordered_json resolved(const CLI::App& cmd) {
  nlohmann::ordered_json j;
  j["command"] = cmd.get_name();
  for (const auto* opt : cmd.get_options()) {
    const auto name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    const auto results = opt->results();
    std::string value = results.empty() ? opt->get_default_str() : results.back();
    if (results.size() > 1) {
      value.clear();
      for (const auto& r : results) value += (value.empty() ? "" : ",") + r;
    }
    j["options"][name] = value;
  }
  return j;
}

void echo_config(const CLI::App& cmd, const fs::path& path) { write_text(path, resolved(cmd).dump(2) + "\n"); }

MessageGraph observed_graph(const KnowledgeGraph& g, const std::string& observed) {
  return MessageGraph(adjacency_matrix(g, parse_mask(observed)));
}

/// Keys of the JSON config file (top level, or an object named after the
/// subcommand) become option defaults, so flags given on the command line win.
void apply_config(CLI::App& cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw ValidationError("config '" + path + "' must hold a JSON object");
  const nlohmann::json& section = j.contains(cmd.get_name()) ? j.at(cmd.get_name()) : j;
  for (const auto& [key, value] : section.items()) {
    if (value.is_object()) continue;
    CLI::Option* opt = nullptr;
    try {
      opt = cmd.get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw ValidationError("config '" + path + "': unknown option '" + key + "' for " + cmd.get_name());
    }
    std::string text;
    auto item = [](const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (value.is_array()) {
      for (const auto& v : value) text += (text.empty() ? "" : ",") + item(v);
    } else {
      text = item(value);
    }
    opt->default_val(text);
    opt->required(false);
  }
}

/// Finds `--config <path>` and the subcommand before CLI11 parses argv.
std::pair<std::string, std::string> prescan(int argc, char** argv, const CLI::App& app) {
  std::string config, sub;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) {
      config = argv[++i];
    } else if (arg.rfind("--config=", 0) == 0) {
      config = arg.substr(9);
    } else if (sub.empty()) {
      for (const auto* cmd : app.get_subcommands({})) {
        if (cmd->get_name() == arg) sub = arg;
      }
    }
  }
  return {config, sub};
}

int run_ingest(const Options& o, const CLI::App& cmd) {
  require_file(o.train_tsv, "train file");
  require_file(o.valid_tsv, "valid file");
  require_file(o.test_tsv, "test file");
  const auto g = load_splits(o.train_tsv, o.valid_tsv, o.test_tsv);
  save_graph_dir(g, o.out);
  echo_config(cmd, fs::path(o.out) / "config.json");
  std::cout << "entities\t" << g.num_entities() << "\nrelations\t" << g.num_relations() << "\ntrain\t"
            << g.triples(Split::Train).size() << "\nvalid\t" << g.triples(Split::Valid).size() << "\ntest\t"
            << g.triples(Split::Test).size() << "\n";
  return 0;
}

int run_synth(const Options& o, const CLI::App& cmd) {
  const auto g = family_tree_graph({o.entities, o.branching, o.valid_fraction, o.test_fraction, o.seed});
  save_graph_dir(g, o.out);
  echo_config(cmd, fs::path(o.out) / "config.json");
  std::cout << "entities\t" << g.num_entities() << "\nrelations\t" << g.num_relations() << "\ntrain\t"
            << g.triples(Split::Train).size() << "\nvalid\t" << g.triples(Split::Valid).size() << "\ntest\t"
            << g.triples(Split::Test).size() << "\n";
  return 0;
}

int run_gen_queries(const Options& o, const CLI::App& cmd) {
  const auto g = load_graph_dir(o.graph_dir);
  const auto split = parse_split(o.split);
  std::vector<QuerySample> all;
  for (const auto& name : o.structures) {
    auto samples = sample_queries(g, parse_structure(name), o.count, split, o.seed);
    all.insert(all.end(), std::make_move_iterator(samples.begin()), std::make_move_iterator(samples.end()));
  }
  save_samples(o.out, all, g);
  echo_config(cmd, o.out + ".config.json");
  std::cout << "wrote " << all.size() << " queries to " << o.out << "\n";
  return 0;
}

int run_train(const Options& o, const CLI::App& cmd) {
  const auto g = load_graph_dir(o.graph_dir);
  require_file(o.queries, "query file");
  const auto samples = load_samples(o.queries, g);
  fs::create_directories(o.out);
  echo_config(cmd, fs::path(o.out) / "config.json");

  ModelConfig mc;
  mc.dim = o.dim;
  mc.layers = o.layers;
  mc.relation_init_std = o.relation_init_std;
  ProjectionModel model(g.num_entities(), g.num_relation_ids(), mc, o.seed);
  if (o.epochs == 0) {
    model.save(fs::path(o.out) / "model.hyqr");
    write_loss_csv(fs::path(o.out) / "loss.csv", {});
    return 0;
  }
  TrainConfig tc;
  tc.epochs = o.epochs;
  tc.batch_size = o.batch;
  tc.learning_rate = o.lr;
  tc.seed = o.seed;
  tc.max_steps = o.max_steps;
  tc.traversal_dropout = o.dropout;
  tc.out_dir = o.out;
  train(g, samples, tc, model, [](std::size_t epoch, double loss) {
    std::cerr << "epoch " << epoch << " loss " << std::setprecision(6) << loss << "\n";
  });
  model.save(fs::path(o.out) / "model.hyqr");
  return 0;
}

RankingReport evaluate_file(const Options& o, const KnowledgeGraph& g, const std::vector<QuerySample>& samples) {
  const auto model = ProjectionModel::load(o.checkpoint);
  const auto graph = observed_graph(g, o.observed);
  EvalOptions eo;
  eo.ks = o.ks;
  eo.threads = o.threads;
  eo.cardinality_threshold = o.threshold;
  if (o.cardinality_mode == "count") {
    eo.cardinality_mode = CardinalityMode::Count;
  } else if (o.cardinality_mode != "sum") {
    throw ValidationError("cardinality mode must be 'sum' or 'count'");
  }
  return evaluate(samples, [&](const Query& q) { return execute_neural(q, model, graph); }, eo);
}

int run_eval(const Options& o, const CLI::App& cmd) {
  const auto g = load_graph_dir(o.graph_dir);
  require_file(o.queries, "query file");
  require_file(o.checkpoint, "checkpoint");
  const auto samples = load_samples(o.queries, g);
  const auto report = evaluate_file(o, g, samples);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  const auto text = report.to_json().dump(2) + "\n";
  std::cout << text;
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_text(fs::path(o.out) / "report.json", text);
    write_text(fs::path(o.out) / "ranks.tsv", report.ranks_tsv(g));
    echo_config(cmd, fs::path(o.out) / "config.json");
  }
  if (!o.ranks_tsv.empty()) write_text(o.ranks_tsv, report.ranks_tsv(g));
  return 0;
}

int run_answer(const Options& o) {
  const auto g = load_graph_dir(o.graph_dir);
  require_file(o.checkpoint, "checkpoint");
  const auto model = ProjectionModel::load(o.checkpoint);
  const auto q = parse_query(o.query_text, g);
  std::vector<FuzzySetd> trace;
  const auto scores = execute_neural(q, model, observed_graph(g, o.observed), &trace);
  std::vector<std::uint32_t> order(static_cast<std::size_t>(scores.size()));
  for (std::uint32_t v = 0; v < order.size(); ++v) order[v] = v;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  order.resize(std::min(order.size(), o.top_k));
  std::cout << std::fixed << std::setprecision(6);
  for (auto v : order) std::cout << g.entity_name(EntityId{v}) << '\t' << scores[v] << '\n';
  if (!o.trace_path.empty()) write_text(o.trace_path, trace_to_json(q, g, trace).dump(2) + "\n");
  return 0;
}

int run_cardinality(const Options& o) {
  const auto g = load_graph_dir(o.graph_dir);
  require_file(o.queries, "query file");
  require_file(o.checkpoint, "checkpoint");
  const auto report = evaluate_file(o, g, load_samples(o.queries, g));
  std::cout << "structure\tqueries\tspearman\n";
  for (const auto& [s, m] : report.by_structure) {
    std::cout << structure_name(s) << '\t' << m.queries << '\t';
    if (m.cardinality_spearman) {
      std::cout << std::fixed << std::setprecision(4) << *m.cardinality_spearman << '\n';
    } else {
      std::cout << "nan\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Complex query answering over knowledge graphs with a hyperbolic projection network", "hyq"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("hyq ") + HYQ_VERSION);
  app.add_option("--threads", o.threads, "Worker threads for evaluation (1 is bit-deterministic)")
      ->check(CLI::PositiveNumber);
  app.add_option("--config", o.config_path, "JSON file with option defaults (flags take precedence)");

  auto* ingest = app.add_subcommand("ingest", "Index train/valid/test TSV triple files into a graph directory");
  ingest->add_option("--train", o.train_tsv, "Train triples")->required();
  ingest->add_option("--valid", o.valid_tsv, "Valid triples")->required();
  ingest->add_option("--test", o.test_tsv, "Test triples")->required();
  ingest->add_option("--out", o.out, "Output graph directory")->required();

  auto* synth = app.add_subcommand("synth", "Write a synthetic family-tree graph directory");
  synth->add_option("--out", o.out, "Output graph directory")->required();
  synth->add_option("--entities", o.entities, "Entity count")->capture_default_str();
  synth->add_option("--branching", o.branching, "Children per entity")->capture_default_str();
  synth->add_option("--valid-fraction", o.valid_fraction, "Share of edges held out as valid")->capture_default_str();
  synth->add_option("--test-fraction", o.test_fraction, "Share of edges held out as test")->capture_default_str();
  synth->add_option("--seed", o.seed, "Random seed")->required();

  auto* gen = app.add_subcommand("gen-queries", "Sample benchmark-shaped queries with easy/hard answers");
  gen->add_option("--graph", o.graph_dir, "Graph directory")->required()->check(CLI::ExistingDirectory);
  gen->add_option("--structures", o.structures, "Structures, e.g. 1p,2in")->required()->delimiter(',');
  gen->add_option("--count", o.count, "Samples per structure")->capture_default_str();
  gen->add_option("--split", o.split, "Answer split: train, valid or test")->capture_default_str();
  gen->add_option("--seed", o.seed, "Random seed")->required();
  gen->add_option("--out", o.out, "Output JSON-lines file")->required();

  auto* tr = app.add_subcommand("train", "Train the projection model");
  tr->add_option("--graph", o.graph_dir, "Graph directory")->required()->check(CLI::ExistingDirectory);
  tr->add_option("--queries", o.queries, "Training queries (JSON lines)")->required();
  tr->add_option("--out", o.out, "Output directory for checkpoints and loss.csv")->required();
  tr->add_option("--epochs", o.epochs, "Epochs (0 writes the initial model)")->capture_default_str();
  tr->add_option("--batch", o.batch, "Queries per step")->capture_default_str();
  tr->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
  tr->add_option("--dim", o.dim, "Embedding dimension")->capture_default_str();
  tr->add_option("--layers", o.layers, "Message-passing layers")->capture_default_str();
  tr->add_option("--relation-init-std", o.relation_init_std, "Relation embedding init scale")->capture_default_str();
  tr->add_option("--dropout", o.dropout, "Traversal dropout probability")->capture_default_str();
  tr->add_option("--max-steps", o.max_steps, "Stop after this many steps (0 = none)")->capture_default_str();
  tr->add_option("--seed", o.seed, "Random seed")->required();

  auto* ev = app.add_subcommand("eval", "Filtered ranking metrics for a query file");
  auto* card = app.add_subcommand("cardinality", "Per-structure Spearman correlation of predicted answer counts");
  for (auto* cmd : {ev, card}) {
    cmd->add_option("--graph", o.graph_dir, "Graph directory")->required()->check(CLI::ExistingDirectory);
    cmd->add_option("--queries", o.queries, "Evaluation queries (JSON lines)")->required();
    cmd->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required();
    cmd->add_option("--observed", o.observed, "Splits used for message passing")->capture_default_str();
    cmd->add_option("--threshold", o.threshold, "Cardinality threshold")->capture_default_str();
    cmd->add_option("--cardinality-mode", o.cardinality_mode, "sum or count")->capture_default_str();
  }
  ev->add_option("--ks", o.ks, "HITS@K cut-offs")->delimiter(',')->capture_default_str();
  ev->add_option("--out", o.out, "Directory for report.json and ranks.tsv");
  ev->add_option("--ranks", o.ranks_tsv, "Write per-answer ranks TSV here");

  auto* ans = app.add_subcommand("answer", "Answer one s-expression query");
  ans->add_option("--graph", o.graph_dir, "Graph directory")->required()->check(CLI::ExistingDirectory);
  ans->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required();
  ans->add_option("query", o.query_text, "Query, e.g. \"(p born_in (e Turing))\"")->required();
  ans->add_option("--top-k", o.top_k, "Entities to print")->capture_default_str();
  ans->add_option("--observed", o.observed, "Splits used for message passing")->capture_default_str();
  ans->add_option("--trace", o.trace_path, "Write the execution trace as JSON here");

  try {
    const auto [config, sub] = prescan(argc, argv, app);
    if (!config.empty() && !sub.empty()) apply_config(*app.get_subcommand(sub), config);
    app.parse(argc, argv);
    CLI::App* cmd = app.get_subcommands().front();
    if (cmd == ingest) return run_ingest(o, *cmd);
    if (cmd == synth) return run_synth(o, *cmd);
    if (cmd == gen) return run_gen_queries(o, *cmd);
    if (cmd == tr) return run_train(o, *cmd);
    if (cmd == ev) return run_eval(o, *cmd);
    if (cmd == card) return run_cardinality(o);
    if (cmd == ans) return run_answer(o);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
