#include "uap/perturbation.hpp"

#include <algorithm>
#include <json.hpp>

#include "uap/blob.hpp"
#include "uap/errors.hpp"

namespace uap {

std::string to_string(AttackMode mode) { return mode == AttackMode::targeted ? "targeted" : "untargeted"; }
std::string to_string(Method method) { return method == Method::penalty ? "penalty" : "greedy"; }
std::string to_string(NormOrder p) { return p == NormOrder::l2 ? "2" : "inf"; }

AttackMode parse_mode(const std::string& s) {
  if (s == "targeted") return AttackMode::targeted;
  if (s == "untargeted") return AttackMode::untargeted;
  throw InvalidInput("unknown attack mode: " + s);
}

Method parse_method(const std::string& s) {
  if (s == "greedy") return Method::greedy;
  if (s == "penalty") return Method::penalty;
  throw InvalidInput("unknown method: " + s);
}

NormOrder parse_norm(const std::string& s) {
  if (s == "2") return NormOrder::l2;
  if (s == "inf") return NormOrder::linf;
  throw InvalidInput("unsupported norm order: " + s);
}

double Perturbation::l2() const { return l2_norm(v_signal); }
double Perturbation::linf() const { return linf_norm(v_signal); }
double Perturbation::spl_signal() const { return spl(v_signal); }

std::vector<double> add_clipped(std::span<const double> x, std::span<const double> v) {
  if (x.size() != v.size()) throw InvalidInput("perturbation dimension does not match sample");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::clamp(x[i] + v[i], 0.0, 1.0);
  return out;
}

std::vector<double> apply_perturbation(const Perturbation& pert, std::span<const double> x) {
  if (pert.method == Method::penalty) {
    if (!pert.v_tanh) throw InvalidInput("penalty perturbation without tanh-space vector");
    if (pert.v_tanh->size() != x.size()) throw InvalidInput("perturbation dimension does not match sample");
    return perturbed_sample(to_tanh_space(x, pert.epsilon), *pert.v_tanh);
  }
  return add_clipped(x, pert.v_signal);
}

std::vector<double> applied_difference(const Perturbation& pert, std::span<const double> x) {
  std::vector<double> w = apply_perturbation(pert, x);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= x[i];
  return w;
}

std::vector<int> clean_predictions(const VictimModel& model, const std::vector<AudioSample>& X) {
  std::vector<int> out;
  out.reserve(X.size());
  for (const AudioSample& s : X) out.push_back(predict(model, s.samples));
  return out;
}

double asr(const VictimModel& model, const std::vector<AudioSample>& X, const Perturbation& pert) {
  if (X.empty()) throw InvalidInput("asr: empty sample set");
  std::size_t hits = 0;
  for (const AudioSample& s : X) {
    const int clean = predict(model, s.samples);
    hits += pert.goal.satisfied(predict(model, apply_perturbation(pert, s.samples)), clean) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(X.size());
}

double asr(const VictimModel& model, const std::vector<AudioSample>& X, std::span<const double> v,
           const AttackGoal& goal) {
  if (X.empty()) throw InvalidInput("asr: empty sample set");
  std::size_t hits = 0;
  for (const AudioSample& s : X) {
    const int clean = predict(model, s.samples);
    hits += goal.satisfied(predict(model, add_clipped(s.samples, v)), clean) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(X.size());
}

void save_perturbation(const Perturbation& pert, const std::filesystem::path& path) {
  if (pert.v_tanh && pert.v_tanh->size() != pert.v_signal.size()) {
    throw InvalidInput("save_perturbation: v_tanh and v_signal differ in length");
  }
  const std::filesystem::path blob = path.string() + ".bin";
  nlohmann::ordered_json m;
  m["format"] = "uap-perturbation";
  m["version"] = 1;
  m["library_version"] = kLibraryVersion;
  m["method"] = to_string(pert.method);
  m["mode"] = to_string(pert.goal.mode);
  if (pert.goal.mode == AttackMode::targeted) m["target"] = pert.goal.target;
  m["p"] = pert.ball ? nlohmann::ordered_json(to_string(pert.ball->p)) : nlohmann::ordered_json(nullptr);
  m["xi"] = pert.ball ? nlohmann::ordered_json(pert.ball->xi) : nlohmann::ordered_json(nullptr);
  m["d"] = pert.dim();
  m["norms"] = {{"l2", pert.l2()}, {"linf", pert.linf()}};
  m["spl"] = pert.spl_signal();
  m["seed"] = pert.seed;
  m["epsilon"] = pert.epsilon;
  if (pert.method == Method::penalty) {
    m["c"] = pert.c.value_or(0.0);
    m["kappa"] = pert.kappa.value_or(0.0);
    m["S"] = pert.batch_size.value_or(0);
    m["lr"] = pert.learning_rate.value_or(0.0);
    m["projection"] = pert.ball ? nlohmann::ordered_json{{"p", to_string(pert.ball->p)}, {"xi", pert.ball->xi}}
                                : nlohmann::ordered_json(nullptr);
  }
  m["dtype"] = "f32le";
  m["blob"] = blob.filename().string();
  m["has_v_tanh"] = pert.v_tanh.has_value();
  write_text_file(path, m.dump(2) + "\n");

  std::vector<unsigned char> bytes;
  append_f32(bytes, pert.v_signal);
  if (pert.v_tanh) append_f32(bytes, *pert.v_tanh);
  write_text_file(blob, std::string(bytes.begin(), bytes.end()));
}

Perturbation load_perturbation(const std::filesystem::path& path) {
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("perturbation manifest is not valid JSON: " + std::string(e.what()));
  }
  try {
    if (m.at("format").get<std::string>() != "uap-perturbation") throw FormatError("not a perturbation file");
    Perturbation p;
    p.method = parse_method(m.at("method").get<std::string>());
    p.goal.mode = parse_mode(m.at("mode").get<std::string>());
    if (p.goal.mode == AttackMode::targeted) p.goal.target = m.at("target").get<int>();
    p.epsilon = m.value("epsilon", kTanhEpsilon);
    p.seed = m.value("seed", std::uint64_t{0});
    const auto d = m.at("d").get<std::size_t>();
    if (p.method == Method::greedy && !m.at("p").is_null()) {
      p.ball = Projection{parse_norm(m.at("p").get<std::string>()), m.at("xi").get<double>()};
    }
    if (p.method == Method::penalty) {
      p.c = m.at("c").get<double>();
      p.kappa = m.at("kappa").get<double>();
      p.batch_size = m.at("S").get<int>();
      p.learning_rate = m.at("lr").get<double>();
      if (!m.at("projection").is_null()) {
        p.ball = Projection{parse_norm(m["projection"].at("p").get<std::string>()),
                            m["projection"].at("xi").get<double>()};
      }
    }
    const bool has_tanh = m.at("has_v_tanh").get<bool>();
    const std::vector<double> values = read_f32_blob(path.parent_path() / m.at("blob").get<std::string>());
    if (values.size() != d * (has_tanh ? 2 : 1)) throw FormatError("perturbation blob has wrong length");
    p.v_signal.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(d));
    if (has_tanh) p.v_tanh = std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(d), values.end());
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed perturbation manifest: " + std::string(e.what()));
  } catch (const InvalidInput& e) {
    throw FormatError("malformed perturbation manifest: " + std::string(e.what()));
  }
}

}  // namespace uap
