// neuradp: command-line driver for network generation, training, evaluation,
// benchmarking and the oracle suites.
//
// Exit codes: 0 success, 1 runtime failure, 2 invalid configuration or usage.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "neuradp/config.hpp"
#include "neuradp/sim.hpp"
#include "neuradp/verify.hpp"

namespace fs = std::filesystem;
using namespace neuradp;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::string out = "out";
};

RunConfig resolve(const Common& c) {
  if (c.config.empty()) return parse_config_text("", c.overrides);
  return load_config(c.config, c.overrides);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

void write_resolved(const fs::path& dir, const RunConfig& cfg) {
  fs::create_directories(dir);
  open_out(dir / "resolved-config.ini") << resolved_config(cfg);
}

int cmd_gen_network(const Common& c) {
  const RunConfig cfg = resolve(c);
  const fs::path dir(c.out);
  write_resolved(dir, cfg);
  const RoadNetwork net = make_city(cfg);
  if (cfg.network_file.empty()) {
    auto f = open_out(dir / "network.txt");
    write_edge_list(f, make_grid_edges(cfg.grid_rows, cfg.grid_cols, cfg.grid_edge_seconds));
  }
  const DaySeeds seeds = day_seeds(cfg, "eval-day", 0);
  const DemandStream stream = make_demand(net, cfg, seeds.demand);
  auto trips = open_out(dir / "trips.csv");
  trips << "pickup_time_s,origin_node,dest_node\n";
  for (const auto& b : stream)
    for (const auto& r : b.requests)
      trips << r.arrival_time << ',' << net.node_id(r.origin) << ',' << net.node_id(r.destination) << '\n';
  std::cout << "network: " << net.size() << " locations, " << net.num_edges() << " edges, diameter "
            << net.diameter() << " s\n"
            << "trips: " << total_requests(stream) << " requests over " << stream.size() << " epochs\n";
  return 0;
}

int cmd_train(const Common& c) {
  const RunConfig cfg = resolve(c);
  const fs::path dir(c.out);
  write_resolved(dir, cfg);
  const RoadNetwork net = make_city(cfg);
  auto log = open_out(dir / "train-log.jsonl");
  TrainOptions opt;
  opt.out_dir = dir.string();
  opt.log = &log;
  opt.on_episode = [](const TrainProgress& p) {
    std::cout << "episode " << p.episode << ": train " << p.train_service_rate << ", validation "
              << p.validation_service_rate << ", loss " << p.mean_loss << ", steps " << p.steps << " ("
              << p.seconds << " s)" << std::endl;
  };
  const TrainResult res = train(net, cfg, opt);
  std::cout << "best validation service rate " << res.best_validation << "\n";
  if (res.diverged) {
    std::cerr << "training diverged; last checkpoint written to " << (dir / "last.ckpt").string() << "\n";
    return 1;
  }
  return 0;
}

int run_evaluation(const Common& c, const std::string& checkpoint) {
  const RunConfig cfg = resolve(c);
  const fs::path dir(c.out);
  write_resolved(dir, cfg);
  const RoadNetwork net = make_city(cfg);
  std::optional<Checkpoint> ck;
  if (!checkpoint.empty()) ck = load_checkpoint(checkpoint);
  auto metrics = open_out(dir / "metrics.jsonl");
  auto timing = open_out(dir / "timing.jsonl");
  EpisodeSinks sinks;
  sinks.metrics = &metrics;
  sinks.timing = &timing;
  const EvalSummary s = evaluate(net, cfg, ck ? &*ck : nullptr, cfg.eval_days, sinks);
  open_out(dir / "summary.json") << to_json(s).dump(2) << '\n';
  for (const auto& r : s.rows) {
    std::cout << "day " << r.day << ": served " << r.served << " of " << r.generated << " (" << r.service_rate
              << ")\n";
  }
  std::cout << "mean service rate " << s.mean_service_rate << " +- " << s.sd_service_rate << ", mean served "
            << s.mean_served << " +- " << s.sd_served << "\n";
  return 0;
}

int cmd_bench(const Common& c) {
  const RunConfig cfg = resolve(c);
  const fs::path dir(c.out);
  write_resolved(dir, cfg);
  const RoadNetwork net = make_city(cfg);
  const Checkpoint ck = initial_checkpoint(net, cfg);
  const DaySeeds seeds = day_seeds(cfg, "eval-day", 0);
  nlohmann::json report;
  auto one = [&](const char* name, const PolicyView& policy) {
    EpisodeSinks keep;
    keep.keep_epochs = true;
    const auto r = run_episode(net, cfg, seeds, policy, keep);
    double sum = 0.0, worst = 0.0;
    for (const auto& m : r.epochs) {
      sum += m.timing.dispatch_ms();
      worst = std::max(worst, m.timing.dispatch_ms());
    }
    const double mean = sum / static_cast<double>(std::max<std::size_t>(1, r.epochs.size()));
    report[name] = {{"epochs", r.epochs.size()}, {"mean_dispatch_ms", mean}, {"max_dispatch_ms", worst},
                    {"delta_ms", cfg.delta * 1000.0}, {"service_rate", r.service_rate}};
    std::cout << name << ": mean dispatch " << mean << " ms, max " << worst << " ms over " << r.epochs.size()
              << " epochs (budget " << cfg.delta * 1000.0 << " ms)\n";
  };
  one("baseline", baseline_policy());
  one("value", value_policy(ck.trainer.online, ck.embedding, ck.scales));
  open_out(dir / "bench.json") << report.dump(2) << '\n';
  return 0;
}

int cmd_verify(const Common& c) {
  const RunConfig cfg = resolve(c);
  const RoadNetwork net = make_city(cfg);
  std::vector<verify::SuiteResult> results;
  results.push_back(verify::assignment_suite());
  results.push_back(verify::feasibility_suite());
  results.push_back(verify::gradient_suite());
  results.push_back(verify::rebalance_suite());
  results.push_back(verify::replay_suite());
  results.push_back(verify::zero_network_suite(net, cfg));
  bool ok = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.cases << " cases, " << r.seconds << " s)";
    if (!r.detail.empty()) std::cout << ": " << r.detail;
    std::cout << '\n';
    ok &= r.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ride-pool dispatch: myopic baseline and learned future-value assignment"};
  app.require_subcommand(1);
  Common common;
  std::string checkpoint;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config, "Configuration file");
    sub->add_option("-s,--set", common.overrides, "Override section.key=value (repeatable)");
    sub->add_option("-o,--out", common.out, "Output directory");
    return sub;
  };
  auto* gen = add_common(app.add_subcommand("gen-network", "Write the grid city edge list and a sample trip file"));
  auto* tr = add_common(app.add_subcommand("train", "Train the value function; writes checkpoints"));
  auto* ev = add_common(app.add_subcommand("evaluate", "Evaluate a checkpoint on held-out days"));
  ev->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  auto* bl = add_common(app.add_subcommand("baseline", "Evaluate the myopic baseline on held-out days"));
  auto* be = add_common(app.add_subcommand("bench", "Per-epoch dispatch timing"));
  auto* ve = add_common(app.add_subcommand("verify", "Run the oracle suites"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_gen_network(common);
    if (*tr) return cmd_train(common);
    if (*ev) return run_evaluation(common, checkpoint);
    if (*bl) return run_evaluation(common, "");
    if (*be) return cmd_bench(common);
    if (*ve) return cmd_verify(common);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
