// SPDX-License-Identifier: Apache-2.0
/**
 * @file   birnn.cpp
 * @brief  Command-line front end: dataset generation, training, BER
 *         evaluation, complexity report and gradient check.
 */
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <birnn/channel.hpp>
#include <birnn/complexity.hpp>
#include <birnn/evaluation.hpp>
#include <birnn/parallel.hpp>
#include <birnn/training.hpp>

namespace fs = std::filesystem;
using namespace birnn;

namespace {

struct Common {
  std::string out = ".";
  std::uint64_t seed = 1;
  int workers = default_workers();
  std::string profile;
};

struct GenOpts {
  std::string scenario = "very_high";
  std::string modulation = "qpsk";
  int frames = 16000;
  int test_frames = 2000;
  double snr = 40.0;
  int frame_length = 100;
  int basis_length = 0;
};

struct TrainOpts {
  std::string train_path;
  std::string test_path;
  std::string cell = "gru";
  int hidden = 32;
  int epochs = 500;
  int batch = 128;
  double lr = 1e-3;
  double clip = 0.0;
  std::string candidate = "relu";
  std::string output = "identity";
};

struct EvalOpts {
  std::vector<std::string> estimators{"perfect", "als_wi"};
  std::string gru_weights;
  std::string lstm_weights;
  std::string srnn_weights;
  std::string scenario = "very_high";
  std::string modulation = "qpsk";
  std::string snr = "0:5:40";
  int frames = 2000;
  int frame_length = 100;
  int basis_length = 0;
  bool plot = false;
};

struct ComplexityOpts {
  long long kon = 52;
  long long hidden = 32;
  long long pilots = 3;
  long long frame_length = 100;
  bool json = false;
};

void add_common(CLI::App *cmd, Common &c, bool with_profile) {
  cmd->add_option("-o,--out", c.out, "Output directory")->capture_default_str();
  cmd->add_option("--seed", c.seed, "Seed for all randomness of this command")->capture_default_str();
  cmd->add_option("--workers", c.workers, "Worker threads")->capture_default_str()->check(
    CLI::PositiveNumber);
  if (with_profile)
    cmd->add_option("--profile", c.profile, "Channel profile JSON (taps, numerology)");
}

ChannelProfile load_profile(const Common &c) {
  return c.profile.empty() ? ChannelProfile::vehicular_default(0.0) : ChannelProfile::load(c.profile);
}

fs::path prepare_out(const Common &c) {
  fs::path dir(c.out);
  fs::create_directories(dir);
  return dir;
}

void echo_config(const CLI::App *cmd, const fs::path &dir) {
  std::ofstream out(dir / (cmd->get_name() + ".config.toml"), std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot write resolved config to " + dir.string());
  out << '[' << cmd->get_name() << "]\n";
  // Unset paths stay out so the file reloads through --config.
  std::istringstream lines(cmd->config_to_str(true, false));
  for (std::string line; std::getline(lines, line);)
    if (!line.ends_with("=\"\""))
      out << line << '\n';
}

void write_text(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int cmd_gen_dataset(const Common &c, const GenOpts &g) {
  const fs::path dir = prepare_out(c);
  DatasetSpec spec;
  spec.scenario = parse_mobility(g.scenario);
  spec.modulation = parse_modulation(g.modulation);
  spec.snr_db = g.snr;
  spec.frame_length = g.frame_length;
  spec.profile = load_profile(c);
  spec.basis_length = g.basis_length;
  spec.workers = c.workers;

  struct Part {
    const char *name;
    int frames;
    std::uint64_t stream;
  };
  for (const Part &p : {Part{"train", g.frames, 1}, Part{"test", g.test_frames, 2}}) {
    if (p.frames <= 0)
      continue;
    spec.frames = p.frames;
    spec.seed = c.seed * 2 + p.stream - 1;
    const Dataset d = generate_dataset(spec);
    const fs::path file = dir / (std::string(p.name) + ".brds");
    d.save(file);
    write_text(dir / (std::string(p.name) + ".brds.json"), d.metadata_json() + "\n");
    std::cout << p.name << ": " << d.size() << " frames -> " << file.string() << '\n';
  }
  return 0;
}

int cmd_train(const Common &c, const TrainOpts &t) {
  const fs::path dir = prepare_out(c);
  const Dataset train_set = Dataset::load(t.train_path);
  Dataset test_set;
  if (!t.test_path.empty())
    test_set = Dataset::load(t.test_path);

  ModelShape shape;
  shape.kind = parse_cell_kind(t.cell);
  shape.hidden = t.hidden;
  shape.k_on = train_set.meta.k_on;
  shape.input_size = 2 * train_set.meta.k_on;
  shape.frame_length = train_set.meta.frame_length;
  shape.candidate = parse_activation(t.candidate);
  shape.output = parse_activation(t.output);

  TrainingConfig cfg;
  cfg.epochs = t.epochs;
  cfg.batch_size = t.batch;
  cfg.adam.lr = t.lr;
  cfg.seed = c.seed;
  cfg.clip_norm = t.clip;
  cfg.train_snr_db = train_set.meta.snr_db;

  try {
    TrainResult r = train(RnnModel::glorot(shape, c.seed), train_set,
                          test_set.size() ? &test_set : nullptr, cfg, [](const EpochRecord &e) {
                            std::cout << "epoch " << e.epoch << " train " << e.train_mse
                                      << " val " << e.val_mse << '\n';
                          });
    r.model.save(dir / "model.brnw");
    write_text(dir / "model.brnw.json", r.model.metadata_json() + "\n");
    write_history_csv(r.history, dir / "history.csv");
    std::cout << "best epoch " << r.best_epoch << " -> " << (dir / "model.brnw").string() << '\n';
  } catch (const TrainingDiverged &e) {
    write_history_csv(e.history(), dir / "history.csv");
    throw;
  }
  return 0;
}

std::shared_ptr<const RnnModel> load_model(const std::string &path, const char *what) {
  if (path.empty())
    throw std::invalid_argument(std::string(what) + " requires weights (--" + what + "-weights)");
  return std::make_shared<const RnnModel>(RnnModel::load(path));
}

int cmd_evaluate(const Common &c, const EvalOpts &e) {
  const fs::path dir = prepare_out(c);
  SweepConfig cfg = SweepConfig::for_scenario(parse_mobility(e.scenario),
                                              parse_modulation(e.modulation), load_profile(c));
  cfg.snr_db = parse_snr_list(e.snr);
  cfg.frames = e.frames;
  cfg.frame_length = e.frame_length;
  cfg.basis_length = e.basis_length;
  cfg.seed = c.seed;
  cfg.workers = c.workers;

  std::vector<EstimatorChoice> choices;
  for (const std::string &name : e.estimators) {
    const EstimatorKind k = parse_estimator(name);
    switch (k) {
    case EstimatorKind::Bi_GRU:
      choices.push_back(EstimatorChoice::network(k, load_model(e.gru_weights, "gru")));
      break;
    case EstimatorKind::Bi_LSTM:
      choices.push_back(EstimatorChoice::network(k, load_model(e.lstm_weights, "lstm")));
      break;
    case EstimatorKind::Bi_SRNN:
      choices.push_back(EstimatorChoice::network(k, load_model(e.srnn_weights, "srnn")));
      break;
    default: choices.push_back(EstimatorChoice::classical(k));
    }
  }

  std::vector<BerReport> reports;
  for (const EstimatorChoice &choice : choices) {
    reports.push_back(ber_sweep(choice, cfg));
    for (const BerPoint &p : reports.back().points)
      std::cout << choice.name() << " snr " << p.snr_db << " ber " << p.ber << " nmse " << p.nmse
                << '\n';
  }
  const fs::path csv = dir / "ber.csv";
  write_ber_csv(reports, csv);
  if (e.plot)
    write_plot_script(csv, dir / "plot_ber.py");
  return 0;
}

int cmd_complexity(const Common &c, const ComplexityOpts &o) {
  ComplexityParams p;
  p.k_on = o.kon;
  p.q = o.hidden;
  p.p = o.pilots;
  p.frame_length = o.frame_length;
  const ComplexityReport r = complexity_report(p);
  if (o.json)
    std::cout << complexity_json(r) << '\n';
  else
    std::cout << complexity_table(r);
  const fs::path dir = prepare_out(c);
  write_text(dir / "complexity.csv", complexity_csv(r));
  write_text(dir / "complexity.json", complexity_json(r) + "\n");
  return 0;
}

int cmd_gradcheck(const Common &c) {
  bool ok = true;
  for (CellKind k : {CellKind::SRNN, CellKind::LSTM, CellKind::GRU}) {
    const GradCheckReport r = grad_check(k, {}, c.seed);
    const bool pass = r.max_rel_error < 1e-5;
    ok = ok && pass;
    std::cout << to_string(k) << ": max relative error " << r.max_rel_error << " at "
              << r.worst_tensor << "[" << r.worst_index << "] over " << r.parameters
              << " parameters -> " << (pass ? "PASS" : "FAIL") << '\n';
  }
  return ok ? 0 : 2;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Bi-RNN channel estimation: data, training, evaluation, complexity"};
  app.set_config("--config", "", "TOML/INI config file; command-line flags take precedence");
  app.require_subcommand(1);

  Common common;
  GenOpts gen;
  TrainOpts tr;
  EvalOpts ev;
  ComplexityOpts cx;

  auto *g = app.add_subcommand("gen-dataset", "Generate train/test datasets");
  add_common(g, common, true);
  g->add_option("--scenario", gen.scenario, "low | high | very_high")->capture_default_str();
  g->add_option("--modulation", gen.modulation, "qpsk | 16qam")->capture_default_str();
  g->add_option("--frames", gen.frames, "Training frames")->capture_default_str();
  g->add_option("--test-frames", gen.test_frames, "Test frames")->capture_default_str();
  g->add_option("--snr", gen.snr, "Training SNR in dB")->capture_default_str();
  g->add_option("--frame-length", gen.frame_length, "OFDM symbols per frame")->capture_default_str();
  g->add_option("--basis-length", gen.basis_length, "ALS basis length (0: channel length)")
    ->capture_default_str();

  auto *t = app.add_subcommand("train", "Train a bidirectional recurrent estimator");
  add_common(t, common, false);
  t->add_option("--train", tr.train_path, "Training dataset")->required()->check(CLI::ExistingFile);
  t->add_option("--test", tr.test_path, "Validation dataset")->check(CLI::ExistingFile);
  t->add_option("--cell", tr.cell, "gru | lstm | srnn")->capture_default_str();
  t->add_option("--hidden", tr.hidden, "Hidden units per direction")->capture_default_str();
  t->add_option("--epochs", tr.epochs)->capture_default_str();
  t->add_option("--batch", tr.batch, "Batch size")->capture_default_str();
  t->add_option("--lr", tr.lr, "ADAM learning rate")->capture_default_str();
  t->add_option("--clip", tr.clip, "Gradient norm clip, 0 disables")->capture_default_str();
  t->add_option("--candidate", tr.candidate, "Cell activation: relu | tanh")->capture_default_str();
  t->add_option("--output-activation", tr.output, "identity | relu")->capture_default_str();

  auto *e = app.add_subcommand("evaluate", "BER/NMSE sweep over SNR");
  add_common(e, common, true);
  e->add_option("--estimator", ev.estimators,
                "perfect, sls_interp, als_wi, bi_srnn, bi_lstm, bi_gru")
    ->capture_default_str();
  e->add_option("--gru-weights", ev.gru_weights)->check(CLI::ExistingFile);
  e->add_option("--lstm-weights", ev.lstm_weights)->check(CLI::ExistingFile);
  e->add_option("--srnn-weights", ev.srnn_weights)->check(CLI::ExistingFile);
  e->add_option("--scenario", ev.scenario)->capture_default_str();
  e->add_option("--modulation", ev.modulation)->capture_default_str();
  e->add_option("--snr", ev.snr, "start:step:stop or comma list, dB")->capture_default_str();
  e->add_option("--frames", ev.frames, "Frames per SNR point")->capture_default_str();
  e->add_option("--frame-length", ev.frame_length)->capture_default_str();
  e->add_option("--basis-length", ev.basis_length)->capture_default_str();
  e->add_flag("--plot", ev.plot, "Also write a plotting script");

  auto *x = app.add_subcommand("complexity", "Multiplication/division counts");
  add_common(x, common, false);
  x->add_option("--kon", cx.kon, "Active subcarriers")->capture_default_str();
  x->add_option("--hidden", cx.hidden, "Hidden units Q")->capture_default_str();
  x->add_option("--pilots", cx.pilots, "Pilot symbols P")->capture_default_str();
  x->add_option("--frame-length", cx.frame_length)->capture_default_str();
  x->add_flag("--json", cx.json, "Print JSON instead of a table");

  auto *gc = app.add_subcommand("gradcheck", "Finite-difference gradient check per cell");
  add_common(gc, common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &err) {
    return app.exit(err);
  }

  try {
    CLI::App *cmd = app.get_subcommands().front();
    echo_config(cmd, prepare_out(common));
    if (cmd == g)
      return cmd_gen_dataset(common, gen);
    if (cmd == t)
      return cmd_train(common, tr);
    if (cmd == e)
      return cmd_evaluate(common, ev);
    if (cmd == x)
      return cmd_complexity(common, cx);
    return cmd_gradcheck(common);
  } catch (const std::exception &err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
}
