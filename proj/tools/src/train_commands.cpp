// make-data, train, qat, eval, study.
#include <sstream>

#include "common.hpp"
#include "xrnpe/checkpoint.hpp"
#include "xrnpe/error.hpp"
#include "xrnpe/study.hpp"
#include "xrnpe/training.hpp"

namespace xrnpe::cli {

namespace {

struct TrainOptions {
  int epochs = 30;
  double lr = 0.05;
  std::size_t batch = 32;

  void add_to(CLI::App* app) {
    app->add_option("--epochs", epochs, "passes over the training split")->check(CLI::Range(0, 1000000));
    app->add_option("--lr", lr, "SGD learning rate")->check(CLI::PositiveNumber);
    app->add_option("--batch", batch, "minibatch size")->check(CLI::Range(1, 1 << 30));
  }

  nn::TrainConfig config(const Globals& g, RunManifest& m) const {
    m.param("epochs", epochs);
    m.param("lr", number_json(lr));
    m.param("batch", batch);
    return {epochs, lr, batch, g.seed, g.threads};
  }
};

std::string history_csv(const nn::TrainHistory& h, bool regression) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,loss," << (regression ? "train_rmse" : "train_accuracy") << '\n';
  for (const nn::EpochRecord& r : h) out << r.epoch << ',' << r.loss << ',' << r.accuracy << '\n';
  return out.str();
}

json eval_json(const nn::EvalResult& r, bool regression, const ArrayConfig& cfg) {
  json j;
  j["samples"] = r.samples;
  if (regression) {
    j["rmse"] = number_json(r.rmse);
  } else {
    j["correct"] = r.correct;
    j["accuracy"] = ratio_json(r.correct, r.samples);
  }
  j["quantized"] = r.quantized;
  if (r.quantized) j["array"] = json::parse(report_json(r.stats, cfg));
  return j;
}

void add_make_data(CLI::App& app, const Globals& g, Registry& reg) {
  struct Opts {
    DataOptions data;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* sub = app.add_subcommand("make-data", "Write the synthetic Gaussian-cluster set as CSV");
  o->data.add_to(sub);
  sub->add_option("--out", o->out, "CSV path")->required();
  reg.push_back({sub, [o, &g](RunManifest& m) {
    if (!o->data.path.empty()) throw std::invalid_argument("make-data generates data; --data is not accepted");
    m.seed(g.seed);
    nn::save_csv(o->out, o->data.load(m, g.seed));
    m.output(o->out);
  }});
}

void add_train(CLI::App& app, const Globals& g, Registry& reg, bool qat) {
  struct Opts {
    std::string model;
    std::string map;
    DataOptions data;
    TrainOptions train;
    std::string out;
    std::string history;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* sub = qat ? app.add_subcommand("qat", "Quantization-aware training under a precision map")
                      : app.add_subcommand("train", "Full-precision SGD training");
  sub->add_option("--model", o->model, "checkpoint manifest")->required();
  if (qat) sub->add_option("--map", o->map, "precision map file or all_fp4 / all_posit8 ...")->required();
  o->data.add_to(sub);
  o->train.add_to(sub);
  sub->add_option("--out", o->out, "trained checkpoint manifest")->required();
  sub->add_option("--history", o->history, "per-epoch CSV (stdout when omitted)");
  reg.push_back({sub, [o, &g, qat](RunManifest& m) {
    m.input(o->model);
    Checkpoint ck = load_checkpoint(o->model);
    if (ck.size_only) throw DataError("a size-only model cannot be trained");
    m.seed(g.seed);
    const nn::Dataset data = o->data.load(m, g.seed);
    const nn::TrainConfig cfg = o->train.config(g, m);
    nn::TrainHistory h;
    if (qat) {
      const PrecisionMap map = map_arg(o->map, ck.net.ids(), m);
      h = nn::qat_train(ck.net, data, map, cfg);
    } else {
      h = nn::train_reference(ck.net, data, cfg);
    }
    save_checkpoint(o->out, ck.net);
    m.output(o->out);
    emit(m, o->history, history_csv(h, data.is_regression()));
  }});
}

void add_eval(CLI::App& app, const Globals& g, Registry& reg) {
  struct Opts {
    std::string model;
    std::string map;
    DataOptions data;
    int array = 8;
    std::string output_format;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* sub = app.add_subcommand("eval", "Accuracy (or RMSE) on the test split, optionally on the array");
  sub->add_option("--model", o->model, "checkpoint manifest")->required();
  sub->add_option("--map", o->map, "run quantized under this precision map");
  o->data.add_to(sub);
  sub->add_option("--array", o->array, "array side")->check(CLI::IsMember({8, 16}));
  sub->add_option("--output-format", o->output_format, "format the array rounds dot products into");
  sub->add_option("--out", o->out, "JSON report (stdout when omitted)");
  reg.push_back({sub, [o, &g](RunManifest& m) {
    m.input(o->model);
    const Checkpoint ck = load_checkpoint(o->model);
    if (ck.size_only) throw DataError("a size-only model cannot be evaluated");
    m.seed(g.seed);
    const nn::Dataset data = o->data.load(m, g.seed);
    ArrayConfig cfg = array_arg(o->array, g.threads);
    if (!o->output_format.empty()) cfg.output = format_arg(o->output_format);
    nn::EvalResult r;
    if (o->map.empty()) {
      r = nn::evaluate(ck.net, data);
    } else {
      const PrecisionMap map = map_arg(o->map, ck.net.ids(), m);
      r = nn::evaluate(ck.net, data, &map, cfg);
    }
    emit(m, o->out, dump(eval_json(r, data.is_regression(), cfg)));
  }});
}

void add_study(CLI::App& app, const Globals& g, Registry& reg) {
  struct Opts {
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* sub = app.add_subcommand("study", "Accuracy per format on the synthetic task, before and after QAT");
  sub->add_option("--out", o->out, "CSV (stdout when omitted)");
  reg.push_back({sub, [o, &g](RunManifest& m) {
    nn::StudyConfig cfg;
    if (g.seed_given) {
      cfg.seed = g.seed;
      cfg.train.seed = g.seed;
      cfg.qat.seed = g.seed + 1;
    }
    cfg.train.threads = g.threads;
    cfg.qat.threads = g.threads;
    cfg.array.threads = g.threads;
    m.seed(cfg.seed);
    emit(m, o->out, nn::study_csv(nn::run_precision_study(cfg)));
  }});
}

}  // namespace

void add_train_commands(CLI::App& app, const Globals& g, Registry& reg) {
  add_make_data(app, g, reg);
  add_train(app, g, reg, false);
  add_train(app, g, reg, true);
  add_eval(app, g, reg);
  add_study(app, g, reg);
}

}  // namespace xrnpe::cli
