// uaptool: command-line front end for crafting and evaluating universal
// audio perturbations.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "uap/blob.hpp"
#include "uap/dataset.hpp"
#include "uap/errors.hpp"
#include "uap/eval.hpp"
#include "uap/greedy.hpp"
#include "uap/penalty.hpp"
#include "uap/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace uap;

namespace {

// Everything a run manifest records, in a fixed key order.
void write_manifest(const fs::path& artifact, const std::string& command, json config, json summary = json()) {
  json j;
  j["command"] = command;
  j["library_version"] = kLibraryVersion;
  j["artifact"] = artifact.filename().string();
  j["config"] = std::move(config);
  if (!summary.is_null()) j["summary"] = std::move(summary);
  write_text_file(fs::path(artifact.string() + ".run.json"), j.dump(2) + "\n");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct AttackOptions {
  std::string mode = "untargeted";
  int target = -1;
  std::optional<double> c;
  std::optional<double> kappa;
  std::optional<double> delta;
  std::optional<double> xi;
  std::string p;
  std::optional<int> batch;
  std::optional<int> iters;
  std::optional<double> lr;
  std::optional<double> project_l2;
  std::uint64_t seed = 0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--mode", mode, "targeted or untargeted")->check(CLI::IsMember({"targeted", "untargeted"}));
    cmd->add_option("--target", target, "target class (targeted mode)");
    cmd->add_option("--c", c, "penalty coefficient");
    cmd->add_option("--kappa", kappa, "confidence margin");
    cmd->add_option("--delta", delta, "fooling tolerance");
    cmd->add_option("--xi", xi, "greedy ball radius");
    cmd->add_option("--p", p, "greedy ball norm")->check(CLI::IsMember({"2", "inf"}));
    cmd->add_option("--batch", batch, "penalty mini-batch size");
    cmd->add_option("--iters", iters, "iteration / epoch cap");
    cmd->add_option("--lr", lr, "penalty Adam learning rate");
    cmd->add_option("--project-l2", project_l2, "penalty: project the rendered perturbation onto this l2 ball");
    cmd->add_option("--seed", seed, "random seed");
  }

  AttackGoal goal() const {
    if (parse_mode(mode) == AttackMode::targeted) {
      if (target < 0) throw InvalidInput("targeted mode needs --target");
      return AttackGoal::targeted(target);
    }
    return AttackGoal::untargeted();
  }

  PenaltyConfig penalty() const {
    PenaltyConfig cfg = PenaltyConfig::defaults(goal());
    if (c) cfg.c = *c;
    if (kappa) cfg.kappa = *kappa;
    if (delta) cfg.delta = *delta;
    if (batch) cfg.batch_size = *batch;
    if (iters) cfg.max_iterations = *iters;
    if (lr) cfg.adam.learning_rate = *lr;
    if (project_l2) cfg.projection = Projection{NormOrder::l2, *project_l2};
    cfg.seed = seed;
    return cfg;
  }

  GreedyConfig greedy() const {
    GreedyConfig cfg = GreedyConfig::defaults(goal());
    if (xi) cfg.xi = *xi;
    if (!p.empty()) cfg.p = parse_norm(p);
    if (delta) cfg.delta = *delta;
    if (iters) cfg.max_epochs = *iters;
    cfg.seed = seed;
    return cfg;
  }
};

Perturbation craft(const VictimModel& model, const std::vector<AudioSample>& X, Method method,
                   const AttackOptions& opt, json& config, json& summary) {
  if (method == Method::penalty) {
    const PenaltyConfig cfg = opt.penalty();
    config = config_json(cfg);
    const PenaltyResult r = penalty_uap(model, X, labels_of(X), cfg);
    summary["iterations"] = r.trace.size();
    summary["converged"] = r.converged;
    summary["initial_asr"] = r.initial_asr;
    summary["train_asr"] = r.final_asr;
    return r.perturbation;
  }
  const GreedyConfig cfg = opt.greedy();
  config = config_json(cfg);
  const GreedyResult r = greedy_uap(model, X, cfg);
  summary["epochs"] = r.epochs;
  summary["converged"] = r.converged;
  summary["inner_calls"] = r.inner_calls;
  summary["train_asr"] = r.asr_trace.back();
  return r.perturbation;
}

void print_report(const EvalReport& r) {
  std::printf("test_asr %.4f  mean_snr_db %.2f  mean_l_db %.2f  (%zu samples, %.2fs)\n", r.test_asr, r.mean_snr_db,
              r.mean_l_db, r.rows.size(), r.wall_clock_s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Universal adversarial perturbations for audio classifiers"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate the synthetic tone dataset");
  SyntheticConfig data_cfg;
  fs::path data_out;
  gen->add_option("--classes", data_cfg.classes)->check(CLI::PositiveNumber);
  gen->add_option("--per-class", data_cfg.per_class)->check(CLI::PositiveNumber);
  gen->add_option("--dim", data_cfg.dim)->check(CLI::PositiveNumber);
  gen->add_option("--noise", data_cfg.noise);
  gen->add_option("--seed", data_cfg.seed);
  gen->add_option("--out", data_out)->required();

  // train-victim
  auto* tv = app.add_subcommand("train-victim", "train a victim classifier");
  std::string arch = "rand-cnn";
  fs::path tv_data, tv_out;
  TrainConfig train_cfg;
  tv->add_option("--arch", arch)->check(CLI::IsMember(registry_architectures()));
  tv->add_option("--data", tv_data)->required();
  tv->add_option("--out", tv_out)->required();
  tv->add_option("--epochs", train_cfg.epochs);
  tv->add_option("--seed", train_cfg.seed);

  // craft
  auto* cr = app.add_subcommand("craft", "craft a universal perturbation");
  std::string method_name;
  fs::path cr_model, cr_data, cr_out;
  AttackOptions cr_opt;
  cr->add_option("--method", method_name)->required()->check(CLI::IsMember({"greedy", "penalty"}));
  cr->add_option("--model", cr_model)->required();
  cr->add_option("--data", cr_data)->required();
  cr->add_option("--out", cr_out)->required();
  cr_opt.add_to(cr);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "evaluate a perturbation on the test split");
  fs::path ev_model, ev_data, ev_pert, ev_report;
  ev->add_option("--model", ev_model)->required();
  ev->add_option("--data", ev_data)->required();
  ev->add_option("--pert", ev_pert)->required();
  ev->add_option("--report", ev_report)->required();

  // sweep
  auto* sw = app.add_subcommand("sweep", "confidence or data-count sweep");
  std::string sweep_kind;
  fs::path sw_model, sw_data, sw_out;
  std::string sw_grid;
  AttackOptions sw_opt;
  sw->add_option("kind", sweep_kind)->required()->check(CLI::IsMember({"confidence", "datacount"}));
  sw->add_option("--model", sw_model)->required();
  sw->add_option("--data", sw_data)->required();
  sw->add_option("--out", sw_out)->required();
  sw->add_option("--grid", sw_grid, "comma-separated kappa or m values");
  sw_opt.add_to(sw);

  // single-sample
  auto* ss = app.add_subcommand("single-sample", "one penalty UAP per class from a single sample each");
  fs::path ss_model, ss_data, ss_out;
  AttackOptions ss_opt;
  ss->add_option("--model", ss_model)->required();
  ss->add_option("--data", ss_data)->required();
  ss->add_option("--out", ss_out)->required();
  ss_opt.add_to(ss);

  // transfer
  auto* tr = app.add_subcommand("transfer", "transferability matrix across models");
  std::string tr_models, tr_perts;
  fs::path tr_data, tr_out;
  std::string tr_method = "penalty";
  AttackOptions tr_opt;
  tr->add_option("--models", tr_models)->required();
  tr->add_option("--perts", tr_perts, "one perturbation per model; crafted when omitted");
  tr->add_option("--method", tr_method)->check(CLI::IsMember({"greedy", "penalty"}));
  tr->add_option("--data", tr_data)->required();
  tr->add_option("--out", tr_out)->required();
  tr_opt.add_to(tr);

  // ztest
  auto* zt = app.add_subcommand("ztest", "two-proportion z test");
  double pl = 0, ph = 0, critical = kZCritical;
  long long m = 0;
  zt->add_option("--pl", pl)->required();
  zt->add_option("--ph", ph)->required();
  zt->add_option("--m", m)->required();
  zt->add_option("--critical", critical);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const SyntheticDataset ds = generate_synthetic_dataset(data_cfg);
      export_dataset(ds, data_out);
      json cfg{{"classes", data_cfg.classes}, {"per_class", data_cfg.per_class}, {"dim", data_cfg.dim},
               {"noise", data_cfg.noise},     {"seed", data_cfg.seed},           {"sample_rate", data_cfg.sample_rate}};
      write_manifest(data_out / "labels.csv", "gen-data", cfg,
                     {{"train", ds.train.size()}, {"val", ds.val.size()}, {"test", ds.test.size()}});
      std::printf("wrote %zu train / %zu test samples to %s\n", ds.train.size(), ds.test.size(),
                  data_out.string().c_str());
    } else if (*tv) {
      const SyntheticDataset ds = load_dataset(tv_data);
      VictimModel model = make_model(arch, ds.dim, ds.classes, train_cfg.seed, ds.sample_rate);
      const TrainHistory h = train(model, ds, train_cfg);
      save_model(model, tv_out);
      const double acc = ds.test.empty() ? 0.0 : accuracy(model, ds.test);
      write_manifest(tv_out, "train-victim",
                     {{"arch", arch}, {"epochs", train_cfg.epochs}, {"batch_size", train_cfg.batch_size},
                      {"learning_rate", train_cfg.adam.learning_rate}, {"seed", train_cfg.seed}},
                     {{"train_accuracy", h.train_accuracy.empty() ? 0.0 : h.train_accuracy.back()},
                      {"test_accuracy", acc}});
      std::printf("test accuracy %.4f\n", acc);
    } else if (*cr) {
      const VictimModel model = load_model(cr_model);
      const SyntheticDataset ds = load_dataset(cr_data);
      json config, summary;
      const Perturbation pert = craft(model, ds.train, parse_method(method_name), cr_opt, config, summary);
      save_perturbation(pert, cr_out);
      summary["l2"] = pert.l2();
      summary["linf"] = pert.linf();
      write_manifest(cr_out, "craft", config, summary);
      std::printf("train_asr %.4f  converged %s\n", summary["train_asr"].get<double>(),
                  summary["converged"].get<bool>() ? "yes" : "no");
    } else if (*ev) {
      const VictimModel model = load_model(ev_model);
      const SyntheticDataset ds = load_dataset(ev_data);
      const Perturbation pert = load_perturbation(ev_pert);
      EvalReport r = evaluate_uap(model, ds.test, pert);
      if (!ds.train.empty()) r.train_asr = asr(model, ds.train, pert);
      write_text_file(ev_report, to_csv(report_table(r)));
      write_manifest(ev_report, "evaluate",
                     {{"model", ev_model.filename().string()}, {"pert", ev_pert.filename().string()}},
                     report_summary(r));
      print_report(r);
    } else if (*sw) {
      const VictimModel model = load_model(sw_model);
      const SyntheticDataset ds = load_dataset(sw_data);
      std::vector<SweepCell> cells;
      json config;
      if (sweep_kind == "confidence") {
        std::vector<double> grid;
        for (const auto& s : split_list(sw_grid)) grid.push_back(std::stod(s));
        if (grid.empty()) grid = default_kappa_grid();
        const PenaltyConfig cfg = sw_opt.penalty();
        cells = sweep_confidence(model, ds.train, ds.test, grid, cfg);
        config = {{"kind", "confidence"}, {"grid", grid}, {"penalty", config_json(cfg)}};
      } else {
        std::vector<int> grid;
        for (const auto& s : split_list(sw_grid)) grid.push_back(std::stoi(s));
        if (grid.empty()) grid = default_count_grid(ds.train.size());
        const PenaltyConfig pc = sw_opt.penalty();
        const GreedyConfig gc = sw_opt.greedy();
        cells = sweep_datacount(model, ds.train, ds.test, grid, pc, gc, sw_opt.seed);
        config = {{"kind", "datacount"}, {"grid", grid}, {"penalty", config_json(pc)}, {"greedy", config_json(gc)}};
      }
      write_text_file(sw_out, to_csv(sweep_table(cells)));
      write_manifest(sw_out, "sweep", config);
      for (const auto& c : cells) {
        std::printf("%-8s kappa %-5s m %-4d ", to_string(c.method).c_str(),
                    c.method == Method::penalty ? format_number(c.kappa).c_str() : "-", c.count);
        print_report(c.report);
      }
    } else if (*ss) {
      const VictimModel model = load_model(ss_model);
      const SyntheticDataset ds = load_dataset(ss_data);
      PenaltyConfig cfg = single_sample_defaults(ss_opt.goal());
      const PenaltyConfig over = ss_opt.penalty();
      if (ss_opt.c) cfg.c = over.c;
      if (ss_opt.kappa) cfg.kappa = over.kappa;
      if (ss_opt.iters) cfg.max_iterations = over.max_iterations;
      if (ss_opt.lr) cfg.adam = over.adam;
      cfg.seed = ss_opt.seed;
      const auto reports = single_sample_attack(model, first_sample_per_class(ds.train, ss_opt.seed), ds.test, cfg);
      CsvTable t;
      t.header = {"class", "train_asr", "test_asr", "mean_snr_db", "mean_l_db"};
      for (const auto& r : reports) {
        t.rows.push_back({std::to_string(r.config["class"].get<int>()), format_number(*r.train_asr),
                          format_number(r.test_asr), format_number(r.mean_snr_db), format_number(r.mean_l_db)});
        std::printf("class %d  ", r.config["class"].get<int>());
        print_report(r);
      }
      write_text_file(ss_out, to_csv(t));
      write_manifest(ss_out, "single-sample", config_json(cfg));
    } else if (*tr) {
      const SyntheticDataset ds = load_dataset(tr_data);
      const auto model_paths = split_list(tr_models);
      std::vector<VictimModel> models;
      std::vector<std::string> names;
      for (const auto& p : model_paths) {
        models.push_back(load_model(p));
        names.push_back(fs::path(p).stem().string());
      }
      std::vector<Perturbation> perts;
      json config{{"models", names}};
      if (!tr_perts.empty()) {
        const auto pert_paths = split_list(tr_perts);
        for (const auto& p : pert_paths) perts.push_back(load_perturbation(p));
        std::vector<std::string> pnames;
        for (const auto& p : pert_paths) pnames.push_back(fs::path(p).filename().string());
        config["perts"] = pnames;
      } else {
        json crafted = json::array();
        for (const auto& model : models) {
          json c, s;
          perts.push_back(craft(model, ds.train, parse_method(tr_method), tr_opt, c, s));
          crafted.push_back({{"config", c}, {"summary", s}});
        }
        config["crafted"] = crafted;
      }
      std::vector<const VictimModel*> ptrs;
      for (const auto& m : models) ptrs.push_back(&m);
      const TransferMatrix tm = transfer_matrix(ptrs, names, perts, ds.test);
      const std::string csv = to_csv(transfer_table(tm));
      write_text_file(tr_out, csv);
      write_manifest(tr_out, "transfer", config);
      std::fputs(csv.c_str(), stdout);
    } else if (*zt) {
      const ZTest t = two_proportion_z(pl, ph, m, critical);
      std::printf("Z = %.3f  %s H0 at z_crit = %.2f\n", t.z, t.reject ? "reject" : "accept", critical);
    }
  } catch (const InvalidInput& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
