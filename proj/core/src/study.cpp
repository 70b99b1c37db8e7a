#include "xrnpe/study.hpp"

#include <sstream>
#include <stdexcept>

namespace xrnpe::nn {

namespace {

Network build(const StudyConfig& cfg) {
  Network net;
  net.loss = LossKind::CrossEntropy;
  std::size_t in = static_cast<std::size_t>(cfg.dims);
  for (std::size_t i = 0; i < cfg.hidden.size(); ++i) {
    Layer l = Layer::dense("fc" + std::to_string(i + 1), in, cfg.hidden[i], cfg.activation);
    l.alpha = cfg.alpha;
    net.layers.push_back(std::move(l));
    in = cfg.hidden[i];
  }
  net.layers.push_back(Layer::dense("out", in, static_cast<std::size_t>(cfg.classes), Activation::None));
  init_weights(net, cfg.seed);
  return net;
}

void write_row(std::ostringstream& out, const std::string& format, const char* mode, const EvalResult& r,
               double reference) {
  out << format << ',' << mode << ',' << r.correct << ',' << r.samples << ',' << r.correct << '/' << r.samples
      << ',' << r.accuracy << ',' << 100.0 * (reference - r.accuracy) << '\n';
}

}  // namespace

const StudyRow& StudyResult::find(const FormatSpec& format, bool qat) const {
  for (const StudyRow& r : rows) {
    if (r.format == format && r.qat == qat) return r;
  }
  throw std::out_of_range("study has no " + format.name() + (qat ? " QAT" : " PTQ") + " run");
}

StudyResult run_precision_study(const StudyConfig& cfg) {
  const Dataset data = make_gaussian_clusters(cfg.classes, cfg.dims, cfg.samples_per_class, cfg.spread, cfg.seed);
  Network net = build(cfg);
  StudyResult result;
  result.history = train_reference(net, data, cfg.train);
  result.reference = evaluate(net, data);
  for (const FormatSpec& f : cfg.ptq) {
    const PrecisionMap map = PrecisionMap::uniform(net.ids(), f);
    result.rows.push_back({f, false, evaluate(net, data, &map, cfg.array)});
  }
  for (const FormatSpec& f : cfg.qat_formats) {
    const PrecisionMap map = PrecisionMap::uniform(net.ids(), f);
    Network tuned = net;
    qat_train(tuned, data, map, cfg.qat);
    result.rows.push_back({f, true, evaluate(tuned, data, &map, cfg.array)});
  }
  return result;
}

std::string study_csv(const StudyResult& result) {
  std::ostringstream out;
  out.precision(17);
  out << "format,mode,correct,samples,accuracy_exact,accuracy,drop_pp\n";
  const double ref = result.reference.accuracy;
  write_row(out, "real64", "reference", result.reference, ref);
  for (const StudyRow& r : result.rows) write_row(out, r.format.name(), r.qat ? "qat" : "ptq", r.result, ref);
  return out.str();
}

}  // namespace xrnpe::nn
