#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vaemir/dataset_io.hpp"
#include "vaemir/error.hpp"
#include "vaemir/eval.hpp"
#include "vaemir/metrics.hpp"
#include "vaemir/serialization.hpp"
#include "vaemir/synth.hpp"
#include "vaemir/vae.hpp"

namespace vaemir::cli {

namespace fs = std::filesystem;

namespace {

struct YearRange {
  int first = 0;
  int last = 0;
};

// "2008:2021" or a single year.
YearRange parse_years(const std::string& text) {
  YearRange range;
  const auto colon = text.find(':');
  try {
    std::size_t used = 0;
    if (colon == std::string::npos) {
      range.first = range.last = std::stoi(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
    } else {
      const std::string a = text.substr(0, colon), b = text.substr(colon + 1);
      range.first = std::stoi(a, &used);
      if (used != a.size()) throw std::invalid_argument(text);
      range.last = std::stoi(b, &used);
      if (used != b.size()) throw std::invalid_argument(text);
    }
  } catch (const std::logic_error&) {
    throw InvalidArgument("invalid year range '" + text + "' (expected FIRST:LAST)");
  }
  if (range.first > range.last) throw InvalidArgument("empty year range '" + text + "'");
  return range;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

std::vector<int> parse_ints(const std::string& text, const char* what) {
  std::vector<int> out;
  for (const auto& part : split_list(text)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::logic_error&) {
      throw InvalidArgument(std::string("invalid ") + what + " '" + part + "'");
    }
  }
  if (out.empty()) throw InvalidArgument(std::string("empty ") + what + " list");
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_writable(const fs::path& path) {
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  if (!fs::is_directory(dir)) {
    throw DataError("output directory '" + dir.string() + "' does not exist");
  }
}

std::vector<mir::Bag> restrict_years(std::vector<mir::Bag> bags, const YearRange& years) {
  std::erase_if(bags, [&](const mir::Bag& b) { return b.year < years.first || b.year > years.last; });
  if (bags.empty()) throw DataError("no bags in the requested years");
  return bags;
}

Eigen::MatrixXd all_instances(const std::vector<mir::Bag>& bags) {
  Eigen::Index total = 0;
  for (const auto& b : bags) total += b.size();
  Eigen::MatrixXd out(bags.front().dim(), total);
  Eigen::Index col = 0;
  for (const auto& b : bags) {
    out.middleCols(col, b.size()) = b.instances;
    col += b.size();
  }
  return out;
}

struct GlobalOptions {
  std::uint64_t seed = 1;
  int threads = 1;
};

// ---------------------------------------------------------------- generate

struct GenerateOptions {
  synth::SynthConfig synth;
  std::string years = "2008:2021";
  std::string out;
};

void add_generate(CLI::App& app, GenerateOptions& o) {
  auto* cmd = app.add_subcommand("generate", "Write a synthetic contaminated-bag dataset");
  cmd->fallthrough();
  cmd->add_option("--bags-per-year", o.synth.n_bags_per_year, "Bags per year")->capture_default_str();
  cmd->add_option("--years", o.years, "Year range FIRST:LAST")->capture_default_str();
  cmd->add_option("--n", o.synth.instances_per_bag, "Instances per bag")->capture_default_str();
  cmd->add_option("--dim", o.synth.feature_dim, "Feature dimension")->capture_default_str();
  cmd->add_option("--signal-dim", o.synth.signal_dim, "Latent signal dimension")->capture_default_str();
  cmd->add_option("--contamination", o.synth.contamination, "Mixed-pixel probability")->capture_default_str();
  cmd->add_option("--alpha", o.synth.mixing, "Crop weight inside a mixed pixel")->capture_default_str();
  cmd->add_option("--noise-sigma", o.synth.noise_sigma, "Pure-pixel noise")->capture_default_str();
  cmd->add_option("--year-drift", o.synth.year_drift, "Signal drift per year")->capture_default_str();
  cmd->add_option("--background-shift", o.synth.background_shift, "Background mean scale")->capture_default_str();
  cmd->add_option("--background-scale", o.synth.background_scale, "Background spread")->capture_default_str();
  cmd->add_option("--label-noise", o.synth.label_noise, "Label noise")->capture_default_str();
  cmd->add_option("--out", o.out, "Dataset path (.jsonl)")->required();
}

int run_generate(GenerateOptions o, const GlobalOptions& g, std::ostream& out) {
  const YearRange years = parse_years(o.years);
  o.synth.first_year = years.first;
  o.synth.last_year = years.last;
  o.synth.seed = g.seed;
  o.synth.validate();
  const fs::path path(o.out);
  check_writable(path);

  const synth::SynthDataset ds = synth::generate(o.synth);
  std::size_t flagged = 0, instances = 0;
  for (const auto& b : ds.bags) {
    instances += static_cast<std::size_t>(b.size());
    flagged += static_cast<std::size_t>(std::count(b.anomaly_flags->begin(), b.anomaly_flags->end(), true));
  }

  nlohmann::ordered_json truth;
  const auto& c = o.synth;
  truth["config"] = {{"bags_per_year", c.n_bags_per_year}, {"first_year", c.first_year},
                     {"last_year", c.last_year}, {"instances_per_bag", c.instances_per_bag},
                     {"feature_dim", c.feature_dim}, {"signal_dim", c.signal_dim},
                     {"contamination", c.contamination}, {"alpha", c.mixing},
                     {"noise_sigma", c.noise_sigma}, {"year_drift", c.year_drift},
                     {"background_shift", c.background_shift},
                     {"background_scale", c.background_scale}, {"label_noise", c.label_noise},
                     {"seed", c.seed}};
  truth["bags"] = ds.bags.size();
  truth["instances"] = instances;
  truth["flagged"] = flagged;
  truth["flag_rate"] = ds.truth.flag_rate;
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  truth["coefficients"] = vec(ds.truth.coefficients);
  truth["background_mean"] = vec(ds.truth.background_mean);
  std::vector<double> mixing;
  for (Eigen::Index r = 0; r < ds.truth.mixing_matrix.rows(); ++r) {
    for (Eigen::Index col = 0; col < ds.truth.mixing_matrix.cols(); ++col) {
      mixing.push_back(ds.truth.mixing_matrix(r, col));
    }
  }
  truth["mixing_matrix"] = mixing;
  nlohmann::ordered_json signals = nlohmann::ordered_json::array();
  for (std::size_t b = 0; b < ds.bags.size(); ++b) {
    signals.push_back({{"bag_id", ds.bags[b].bag_id},
                       {"signal", vec(ds.truth.signals.col(static_cast<Eigen::Index>(b)))}});
  }
  truth["signals"] = std::move(signals);

  fs::path truth_path = path;
  truth_path += ".truth.json";
  io::write_file_atomic(path, [&](std::ostream& os) { io::write_dataset(os, ds.bags); });
  io::write_file_atomic(truth_path, [&](std::ostream& os) { os << truth.dump(2) << '\n'; });
  out << "wrote " << ds.bags.size() << " bags (" << instances << " instances) to " << path.string()
      << "\nflag rate: " << io::format_number(ds.truth.flag_rate) << '\n';
  return kOk;
}

// ---------------------------------------------------------------- train-vae

struct TrainVaeOptions {
  std::string data;
  std::string train_years;
  vae::VaeTrainConfig vae;
  std::string hidden = "64,32";
  std::string trace;
  std::string out;
};

void add_train_vae(CLI::App& app, TrainVaeOptions& o) {
  auto* cmd = app.add_subcommand("train-vae", "Train the VAE on every instance of a dataset");
  cmd->fallthrough();
  cmd->add_option("--data", o.data, "Dataset path (.jsonl)")->required();
  cmd->add_option("--train-years", o.train_years, "Restrict to years FIRST:LAST");
  cmd->add_option("--epochs", o.vae.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--batch-size", o.vae.batch_size, "Mini-batch size")->capture_default_str();
  cmd->add_option("--latent-dim", o.vae.latent_dim, "Latent dimension")->capture_default_str();
  cmd->add_option("--hidden", o.hidden, "Encoder hidden widths (decoder mirrors)")->capture_default_str();
  cmd->add_option("--lr", o.vae.learning_rate, "Adam learning rate")->capture_default_str();
  cmd->add_option("--trace", o.trace, "Optional CSV of per-epoch losses");
  cmd->add_option("--out", o.out, "Model path (.json)")->required();
}

double window_mean(const std::vector<double>& v, bool head) {
  const std::size_t w = std::max<std::size_t>(1, v.size() / 10);
  double sum = 0.0;
  for (std::size_t i = 0; i < w; ++i) sum += head ? v[i] : v[v.size() - 1 - i];
  return sum / static_cast<double>(w);
}

int run_train_vae(TrainVaeOptions o, const GlobalOptions& g, std::ostream& out) {
  o.vae.hidden_dims = parse_ints(o.hidden, "hidden width");
  o.vae.seed = g.seed;
  o.vae.validate();
  std::optional<YearRange> years;
  if (!o.train_years.empty()) years = parse_years(o.train_years);
  check_writable(o.out);
  if (!o.trace.empty()) check_writable(o.trace);

  auto bags = io::read_dataset_file(o.data);
  if (years) bags = restrict_years(std::move(bags), *years);
  const auto result = vae::train_vae(all_instances(bags), o.vae);

  io::write_file_atomic(o.out, [&](std::ostream& os) {
    os << serialization::vae_to_json(result.model) << '\n';
  });
  if (!o.trace.empty()) {
    io::write_file_atomic(o.trace, [&](std::ostream& os) {
      os << "epoch,loss\n";
      for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
        os << e << ',' << io::format_number(result.epoch_losses[e]) << '\n';
      }
    });
  }
  out << "final epoch loss: " << io::format_number(result.epoch_losses.back()) << '\n'
      << "mean loss first 10% of epochs: " << io::format_number(window_mean(result.epoch_losses, true))
      << "\nmean loss last 10% of epochs: " << io::format_number(window_mean(result.epoch_losses, false))
      << '\n';
  return kOk;
}

// ---------------------------------------------------------------- score

struct ScoreOptions {
  std::string data;
  std::string model;
  std::string out;
};

void add_score(CLI::App& app, ScoreOptions& o) {
  auto* cmd = app.add_subcommand("score", "Anomaly-score every instance with a trained VAE");
  cmd->fallthrough();
  cmd->add_option("--data", o.data, "Dataset path (.jsonl)")->required();
  cmd->add_option("--model", o.model, "VAE model path (.json)")->required();
  cmd->add_option("--out", o.out, "Scores CSV path")->required();
}

int run_score(const ScoreOptions& o, std::ostream& out) {
  check_writable(o.out);
  const vae::VaeModel model = serialization::vae_from_json(read_text(o.model));
  const auto bags = io::read_dataset_file(o.data);
  if (bags.front().dim() != model.feature_dim()) {
    throw DataError("model expects " + std::to_string(model.feature_dim()) +
                    " features but the dataset has " + std::to_string(bags.front().dim()));
  }
  const bool flagged = std::all_of(bags.begin(), bags.end(),
                                   [](const mir::Bag& b) { return b.anomaly_flags.has_value(); });
  std::vector<double> scores;
  std::vector<bool> flags;
  std::vector<Eigen::VectorXd> per_bag;
  for (const auto& b : bags) {
    per_bag.push_back(vae::anomaly_scores(model, b.instances));
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      scores.push_back(per_bag.back()[i]);
      if (flagged) flags.push_back((*b.anomaly_flags)[static_cast<std::size_t>(i)]);
    }
  }
  io::write_file_atomic(o.out, [&](std::ostream& os) {
    os << "bag_id,instance_index,score" << (flagged ? ",flag" : "") << '\n';
    for (std::size_t b = 0; b < bags.size(); ++b) {
      for (Eigen::Index i = 0; i < bags[b].size(); ++i) {
        os << bags[b].bag_id << ',' << i << ',' << io::format_number(per_bag[b][i]);
        if (flagged) os << ',' << ((*bags[b].anomaly_flags)[static_cast<std::size_t>(i)] ? 1 : 0);
        os << '\n';
      }
    }
  });
  out << "scored " << scores.size() << " instances\n";
  if (flagged) {
    const bool both = std::find(flags.begin(), flags.end(), true) != flags.end() &&
                      std::find(flags.begin(), flags.end(), false) != flags.end();
    if (both) out << "roc_auc: " << io::format_number(roc_auc(scores, flags)) << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------- eval / sweep-k

struct ProtocolOptions {
  std::string data;
  int first_test_year = 0;
  int repeats = 5;
  std::string seeds;
  int vae_epochs = 200;
  int vae_batch = 64;
  int latent_dim = 8;
  int reg_epochs = 300;
  int reg_batch = 32;
  int instance_epochs = 10;
  int prime_iters = 20;
  int clusters = 5;
  std::string aggregation = "mean";
  bool transductive = false;
  std::string out;
};

void add_protocol_options(CLI::App* cmd, ProtocolOptions& o) {
  cmd->add_option("--data", o.data, "Dataset path (.jsonl)")->required();
  cmd->add_option("--first-test-year", o.first_test_year, "First held-out year")->required();
  cmd->add_option("--repeats", o.repeats, "Seeds --seed .. --seed+repeats-1")->capture_default_str();
  cmd->add_option("--seeds", o.seeds, "Explicit comma-separated seed list");
  cmd->add_option("--vae-epochs", o.vae_epochs)->capture_default_str();
  cmd->add_option("--vae-batch-size", o.vae_batch)->capture_default_str();
  cmd->add_option("--latent-dim", o.latent_dim)->capture_default_str();
  cmd->add_option("--reg-epochs", o.reg_epochs, "Epochs for bag-level regressors")->capture_default_str();
  cmd->add_option("--reg-batch-size", o.reg_batch)->capture_default_str();
  cmd->add_option("--instance-epochs", o.instance_epochs, "Epochs for instance-level regressors")
      ->capture_default_str();
  cmd->add_option("--prime-iters", o.prime_iters)->capture_default_str();
  cmd->add_option("--clusters", o.clusters)->capture_default_str();
  cmd->add_option("--aggregation", o.aggregation, "Instance-MIR bag aggregation: mean|median")
      ->capture_default_str();
  cmd->add_flag("--transductive", o.transductive, "Train the VAE on test-year instances too");
}

std::vector<std::uint64_t> seed_list(const ProtocolOptions& o, const GlobalOptions& g) {
  std::vector<std::uint64_t> seeds;
  if (!o.seeds.empty()) {
    for (int s : parse_ints(o.seeds, "seed")) {
      if (s < 0) throw InvalidArgument("seeds must be non-negative");
      seeds.push_back(static_cast<std::uint64_t>(s));
    }
  } else {
    if (o.repeats < 1) throw InvalidArgument("--repeats must be at least 1");
    for (int r = 0; r < o.repeats; ++r) seeds.push_back(g.seed + static_cast<std::uint64_t>(r));
  }
  return seeds;
}

eval::MethodSettings method_settings(const ProtocolOptions& o) {
  eval::MethodSettings s;
  s.vae.epochs = o.vae_epochs;
  s.vae.batch_size = o.vae_batch;
  s.vae.latent_dim = o.latent_dim;
  s.bag_regressor.epochs = o.reg_epochs;
  s.bag_regressor.batch_size = o.reg_batch;
  s.instance_regressor.epochs = o.instance_epochs;
  s.prime_max_iters = o.prime_iters;
  s.cluster_count = o.clusters;
  if (o.aggregation == "mean") {
    s.instance_aggregation = mir::Aggregation::kMean;
  } else if (o.aggregation == "median") {
    s.instance_aggregation = mir::Aggregation::kMedian;
  } else {
    throw InvalidArgument("--aggregation must be mean or median");
  }
  s.vae.validate();
  s.bag_regressor.validate();
  s.instance_regressor.validate();
  if (s.prime_max_iters < 1) throw InvalidArgument("--prime-iters must be at least 1");
  if (s.cluster_count < 1) throw InvalidArgument("--clusters must be at least 1");
  return s;
}

struct EvalOptions {
  ProtocolOptions protocol;
  std::string methods = "instance,mean,prime,cluster,vaemir";
  std::optional<int> k;
};

void add_eval(CLI::App& app, EvalOptions& o) {
  auto* cmd = app.add_subcommand("eval", "Expanding-window evaluation of MIR methods");
  cmd->fallthrough();
  add_protocol_options(cmd, o.protocol);
  cmd->add_option("--methods", o.methods, "Comma list of instance,mean,prime,cluster,vaemir")
      ->capture_default_str();
  cmd->add_option("--k", o.k, "Instances per VAEMIR prototype");
  cmd->add_option("--out", o.protocol.out,
                  "Report CSV path; the JSON summary and predictions CSV are written beside it")
      ->required();
}

fs::path sibling(const fs::path& csv, const std::string& suffix, const std::string& ext) {
  fs::path p = csv;
  p.replace_filename(csv.stem().string() + suffix + ext);
  return p;
}

int run_eval(const EvalOptions& o, const GlobalOptions& g, std::ostream& out) {
  eval::ExperimentConfig cfg;
  std::set<mir::Method> seen;
  for (const auto& name : split_list(o.methods)) {
    const mir::Method m = mir::method_from_string(name);
    if (seen.insert(m).second) cfg.methods.push_back(m);
  }
  if (cfg.methods.empty()) throw InvalidArgument("--methods is empty");
  cfg.k = o.k;
  if (seen.count(mir::Method::kVaemir) && !cfg.k) throw InvalidArgument("method vaemir requires --k");
  cfg.seeds = seed_list(o.protocol, g);
  cfg.settings = method_settings(o.protocol);
  cfg.transductive = o.protocol.transductive;
  cfg.threads = g.threads;

  const fs::path csv(o.protocol.out);
  const fs::path json = sibling(csv, "", ".json");
  const fs::path preds = sibling(csv, "_predictions", ".csv");
  check_writable(csv);

  const auto bags = io::read_dataset_file(o.protocol.data);
  const auto plan = eval::build_splits(eval::years_of(bags), o.protocol.first_test_year);
  const auto report = eval::run_experiment(bags, plan, cfg);

  io::write_file_atomic(csv, [&](std::ostream& os) { eval::write_report_csv(os, report); });
  io::write_file_atomic(json, [&](std::ostream& os) { eval::write_report_json(os, report); });
  io::write_file_atomic(preds, [&](std::ostream& os) { eval::write_predictions_csv(os, report); });

  out << "method,mean_rmse,mean_r2\n";
  for (const auto& a : report.average) {
    out << mir::to_string(a.method) << ',' << io::format_number(a.mean_rmse) << ','
        << io::format_number(a.mean_r2) << '\n';
  }
  return kOk;
}

struct SweepOptions {
  ProtocolOptions protocol;
  std::string k_values;
};

void add_sweep(CLI::App& app, SweepOptions& o) {
  auto* cmd = app.add_subcommand("sweep-k", "VAEMIR performance across prototype sizes k");
  cmd->fallthrough();
  add_protocol_options(cmd, o.protocol);
  cmd->add_option("--k-values", o.k_values, "Comma list, e.g. 1,10,20,...,100")->required();
  cmd->add_option("--out", o.protocol.out, "Curve CSV path")->required();
}

int run_sweep(const SweepOptions& o, const GlobalOptions& g, std::ostream& out) {
  eval::SweepConfig cfg;
  cfg.k_values = parse_ints(o.k_values, "k value");
  cfg.seeds = seed_list(o.protocol, g);
  cfg.settings = method_settings(o.protocol);
  cfg.transductive = o.protocol.transductive;
  cfg.threads = g.threads;
  for (int k : cfg.k_values) {
    if (k < 1) throw InvalidArgument("k values must be positive");
  }
  check_writable(o.protocol.out);

  const auto bags = io::read_dataset_file(o.protocol.data);
  const auto plan = eval::build_splits(eval::years_of(bags), o.protocol.first_test_year);
  const auto result = eval::sweep_k(bags, plan, cfg);

  io::write_file_atomic(o.protocol.out, [&](std::ostream& os) { eval::write_sweep_csv(os, result); });
  for (const auto& best : result.best_k) {
    out << "test year " << best.test_year << ": best k = " << best.k
        << " (mean r2 " << io::format_number(best.mean_r2) << ")\n";
  }
  out << "all years: best k = " << result.best_overall.k << '\n';
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"VAE-based multiple instance regression for bag-level yield prediction", "vaemir"};
  app.require_subcommand(1);
  GlobalOptions global;
  app.add_option("--seed", global.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", global.threads, "Evaluation worker threads")->capture_default_str();

  GenerateOptions gen;
  TrainVaeOptions train;
  ScoreOptions score;
  EvalOptions ev;
  SweepOptions sweep;
  add_generate(app, gen);
  add_train_vae(app, train);
  add_score(app, score);
  add_eval(app, ev);
  add_sweep(app, sweep);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (global.threads < 1) throw InvalidArgument("--threads must be at least 1");
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "generate") return run_generate(gen, global, out);
    if (name == "train-vae") return run_train_vae(train, global, out);
    if (name == "score") return run_score(score, out);
    if (name == "eval") return run_eval(ev, global, out);
    if (name == "sweep-k") return run_sweep(sweep, global, out);
    throw InvalidArgument("unknown subcommand " + name);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace vaemir::cli
