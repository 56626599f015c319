#include "lund/ensemble.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "lund/error.hpp"
#include "lund/preprocess.hpp"
#include "lund/util/io.hpp"
#include "lund/util/parallel.hpp"

namespace lund::ensemble {

std::string_view to_string(PredictorKind kind) {
  return kind == PredictorKind::InProcessModel ? "model" : "scorer";
}

ModelPredictor::ModelPredictor(std::string id, classifiers::TrainedModel model)
    : id_(std::move(id)), model_(std::move(model)) {}

std::vector<Outcome> ModelPredictor::predict(std::span<const PreparedItem> items) {
  std::vector<Outcome> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back({classifiers::predict(model_, item.features), ""});
  return out;
}

ScorerPredictor::ScorerPredictor(std::string id, scorer::Endpoint endpoint)
    : id_(std::move(id)), client_(std::move(endpoint)) {}

void ScorerPredictor::prepare() {
  if (!client_.handshaken()) client_.handshake();
}

std::vector<Outcome> ScorerPredictor::predict(std::span<const PreparedItem> items) {
  std::vector<std::string> texts;
  texts.reserve(items.size());
  for (const auto& item : items) texts.push_back(item.cleaned);
  const auto scores = client_.score_batch(texts);
  std::vector<Outcome> out;
  out.reserve(scores.size());
  for (const auto& s : scores) out.push_back({s, ""});
  return out;
}

namespace {

// Order-independent sum.
double sorted_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum;
}

}  // namespace

Decision aggregate(std::span<const PredictorOutput> outputs) {
  if (outputs.empty()) throw Error(ErrorKind::NoVotes, "no predictor produced an output");
  Decision d;
  std::vector<double> legit, fake;
  for (const auto& o : outputs) {
    ++d.tally[index_of(o.predicted)];
    legit.push_back(o.prob(Label::Legit));
    fake.push_back(o.prob(Label::Fake));
  }
  const std::size_t n_legit = d.tally[index_of(Label::Legit)];
  const std::size_t n_fake = d.tally[index_of(Label::Fake)];
  if (n_legit != n_fake) {
    d.label = n_fake > n_legit ? Label::Fake : Label::Legit;
    return d;
  }
  d.tie_broken = true;
  // Equal voter counts, so comparing sums compares means.
  d.label = sorted_sum(legit) > sorted_sum(fake) ? Label::Legit : Label::Fake;
  return d;
}

nlohmann::ordered_json to_json(const VoteRecord& r) {
  nlohmann::ordered_json j;
  j["item_id"] = r.item_id;
  auto votes = nlohmann::ordered_json::array();
  for (const auto& v : r.votes) {
    nlohmann::ordered_json vj;
    vj["predictor"] = v.predictor_id;
    if (v.output) {
      vj["legit"] = v.output->prob(Label::Legit);
      vj["fake"] = v.output->prob(Label::Fake);
      vj["predicted"] = std::string(lund::to_string(v.output->predicted));
    } else {
      vj["error"] = v.error;
    }
    votes.push_back(std::move(vj));
  }
  j["votes"] = std::move(votes);
  j["tally"] = {{"legit", r.tally[index_of(Label::Legit)]}, {"fake", r.tally[index_of(Label::Fake)]}};
  j["decision"] = std::string(lund::to_string(r.decision));
  j["tie_broken"] = r.tie_broken;
  return j;
}

namespace {

Label label_field(const nlohmann::json& j, const char* key) {
  const auto l = parse_label(j.at(key).get<std::string>());
  if (!l) throw Error(ErrorKind::ParseError, std::string("bad label in field ") + key);
  return *l;
}

}  // namespace

VoteRecord vote_record_from_json(const nlohmann::json& j) {
  VoteRecord r;
  try {
    r.item_id = j.at("item_id").get<std::string>();
    for (const auto& vj : j.at("votes")) {
      Vote v;
      v.predictor_id = vj.at("predictor").get<std::string>();
      if (vj.contains("error")) {
        v.error = vj["error"].get<std::string>();
      } else {
        PredictorOutput o = PredictorOutput::from_probs(vj.at("legit").get<double>(),
                                                        vj.at("fake").get<double>());
        o.predicted = label_field(vj, "predicted");
        v.output = o;
      }
      r.votes.push_back(std::move(v));
    }
    r.tally[index_of(Label::Legit)] = j.at("tally").at("legit").get<std::size_t>();
    r.tally[index_of(Label::Fake)] = j.at("tally").at("fake").get<std::size_t>();
    r.decision = label_field(j, "decision");
    r.tie_broken = j.at("tie_broken").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("vote record: ") + e.what());
  }
  return r;
}

std::string write_vote_records(std::span<const VoteRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<VoteRecord> read_vote_records(std::string_view jsonl) {
  std::vector<VoteRecord> out;
  std::size_t line_no = 0;
  for (const auto& line : io::split_lines(jsonl)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(vote_record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::ParseError, std::string("vote records: ") + e.what(),
                  "line " + std::to_string(line_no));
    } catch (const Error& e) {
      throw Error(ErrorKind::ParseError, e.what(), "line " + std::to_string(line_no));
    }
  }
  return out;
}

namespace {

std::vector<Outcome> collect(Predictor& p, std::span<const PreparedItem> items) {
  try {
    auto out = p.predict(items);
    if (out.size() != items.size())
      throw std::runtime_error("predictor returned " + std::to_string(out.size()) +
                               " outcomes for " + std::to_string(items.size()) + " items");
    return out;
  } catch (const std::exception& e) {
    if (items.size() == 1) return {Outcome{std::nullopt, e.what()}};
    spdlog::warn("predictor {}: batch of {} failed ({}); retrying item by item", p.id(),
                 items.size(), e.what());
  }
  std::vector<Outcome> out;
  out.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    try {
      auto one = p.predict(items.subspan(i, 1));
      if (one.size() != 1) throw std::runtime_error("predictor returned no outcome");
      out.push_back(std::move(one[0]));
    } catch (const std::exception& e) {
      out.push_back(Outcome{std::nullopt, e.what()});
    }
  }
  return out;
}

}  // namespace

std::vector<VoteRecord> run_ensemble(std::span<Predictor* const> predictors,
                                     const features::FeatureSpace& space,
                                     std::span<const Item> items, const RunOptions& options) {
  std::set<std::string> ids;
  for (const auto* p : predictors)
    if (!ids.insert(p->id()).second)
      throw std::invalid_argument("duplicate predictor id: " + p->id());
  if (predictors.empty()) throw std::invalid_argument("ensemble has no predictors");
  for (auto* p : predictors) p->prepare();

  std::vector<PreparedItem> prepared(items.size());
  parallel_for(items.size(), options.jobs, [&](std::size_t i) {
    prepared[i].id = items[i].id;
    prepared[i].cleaned = preprocess::clean_text(items[i].text, space.preprocess_config());
    prepared[i].features = space.featurize_cleaned(prepared[i].cleaned);
  });

  std::vector<VoteRecord> records;
  records.reserve(items.size());
  const std::size_t chunk = std::max<std::size_t>(1, options.chunk_size);
  for (std::size_t start = 0; start < prepared.size(); start += chunk) {
    const auto batch = std::span<const PreparedItem>(prepared).subspan(
        start, std::min(chunk, prepared.size() - start));
    std::vector<std::vector<Outcome>> outcomes(predictors.size());
    parallel_for(predictors.size(), options.fan_out,
                 [&](std::size_t k) { outcomes[k] = collect(*predictors[k], batch); });

    for (std::size_t i = 0; i < batch.size(); ++i) {
      VoteRecord r;
      r.item_id = batch[i].id;
      std::vector<PredictorOutput> valid;
      for (std::size_t k = 0; k < predictors.size(); ++k) {
        Outcome& o = outcomes[k][i];
        if (!o.output)
          spdlog::warn("item {}: predictor {} excluded: {}", r.item_id, predictors[k]->id(), o.error);
        else
          valid.push_back(*o.output);
        r.votes.push_back(Vote{predictors[k]->id(), o.output, o.error});
      }
      if (valid.empty())
        throw Error(ErrorKind::AllPredictorsFailed, "every predictor failed on item " + r.item_id,
                    r.item_id);
      const Decision d = aggregate(valid);
      r.tally = d.tally;
      r.decision = d.label;
      r.tie_broken = d.tie_broken;
      records.push_back(std::move(r));
    }
  }
  return records;
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

EnsembleConfig ensemble_config_from_json(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir) {
  EnsembleConfig c;
  try {
    if (j.contains("feature_space")) c.feature_space = resolve(base_dir, j["feature_space"].get<std::string>());
    c.options.fan_out = j.value("fan_out", c.options.fan_out);
    c.options.chunk_size = j.value("chunk_size", c.options.chunk_size);
    if (c.options.fan_out < 1) throw std::invalid_argument("fan_out must be at least 1");
    std::set<std::string> ids;
    for (const auto& pj : j.at("predictors")) {
      PredictorSpec p;
      p.id = pj.at("id").get<std::string>();
      if (!ids.insert(p.id).second) throw std::invalid_argument("duplicate predictor id: " + p.id);
      const std::string kind = pj.value("kind", "model");
      if (kind == "model") {
        p.kind = PredictorKind::InProcessModel;
        p.model_path = resolve(base_dir, pj.at("model").get<std::string>());
      } else if (kind == "scorer") {
        p.kind = PredictorKind::ExternalScorer;
        p.endpoint = scorer::endpoint_from_json(pj.contains("endpoint") ? pj["endpoint"] : pj);
      } else {
        throw std::invalid_argument("predictor kind must be model or scorer: " + kind);
      }
      c.predictors.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("ensemble config: ") + e.what());
  }
  if (c.predictors.empty()) throw std::invalid_argument("ensemble config lists no predictors");
  return c;
}

nlohmann::ordered_json to_json(const EnsembleConfig& c) {
  nlohmann::ordered_json j;
  j["feature_space"] = c.feature_space.generic_string();
  j["fan_out"] = c.options.fan_out;
  j["chunk_size"] = c.options.chunk_size;
  auto preds = nlohmann::ordered_json::array();
  for (const auto& p : c.predictors) {
    nlohmann::ordered_json pj;
    pj["id"] = p.id;
    pj["kind"] = std::string(to_string(p.kind));
    if (p.kind == PredictorKind::InProcessModel)
      pj["model"] = p.model_path.generic_string();
    else
      pj["endpoint"] = scorer::to_json(*p.endpoint);
    preds.push_back(std::move(pj));
  }
  j["predictors"] = std::move(preds);
  return j;
}

std::vector<std::unique_ptr<Predictor>> make_predictors(const EnsembleConfig& config) {
  std::vector<std::unique_ptr<Predictor>> out;
  for (const auto& p : config.predictors) {
    if (p.kind == PredictorKind::InProcessModel)
      out.push_back(std::make_unique<ModelPredictor>(p.id, classifiers::load_model(p.model_path)));
    else
      out.push_back(std::make_unique<ScorerPredictor>(p.id, *p.endpoint));
  }
  return out;
}

}  // namespace lund::ensemble
