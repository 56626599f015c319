#include "lund/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_map>

#include "lund/error.hpp"
#include "lund/util/io.hpp"

namespace lund::evaluate {

ConfusionMatrix confusion(std::span<const Label> predictions, std::span<const Label> gold) {
  if (predictions.size() != gold.size())
    throw Error(ErrorKind::LengthMismatch,
                std::to_string(predictions.size()) + " predictions for " +
                    std::to_string(gold.size()) + " gold labels");
  if (predictions.empty()) throw Error(ErrorKind::EmptyMatrix, "nothing to evaluate");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool pred_fake = predictions[i] == Label::Fake;
    const bool gold_fake = gold[i] == Label::Fake;
    if (pred_fake && gold_fake) ++m.tp;
    else if (pred_fake) ++m.fp;
    else if (gold_fake) ++m.fn;
    else ++m.tn;
  }
  return m;
}

double harmonic_f1(double precision, double recall) {
  const double s = precision + recall;
  return s > 0 ? 2.0 * precision * recall / s : 0.0;
}

bool EvalReport::is_undefined(std::string_view metric) const {
  return std::find(undefined.begin(), undefined.end(), metric) != undefined.end();
}

namespace {

struct Ratio {
  double value = 0.0;
  bool defined = false;
};

Ratio ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return {};
  return {static_cast<double>(num) / static_cast<double>(den), true};
}

struct ClassScores {
  Ratio precision, recall, f1;
};

ClassScores class_scores(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  ClassScores s;
  s.precision = ratio(tp, tp + fp);
  s.recall = ratio(tp, tp + fn);
  const double sum = s.precision.value + s.recall.value;
  s.f1 = {harmonic_f1(s.precision.value, s.recall.value),
          s.precision.defined && s.recall.defined && sum > 0};
  return s;
}

}  // namespace

EvalReport metrics(const ConfusionMatrix& m) {
  if (m.total() == 0) throw Error(ErrorKind::EmptyMatrix, "confusion matrix is empty");
  EvalReport r;
  r.matrix = m;
  r.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(m.total());
  const ClassScores fake = class_scores(m.tp, m.fp, m.fn);
  const ClassScores legit = class_scores(m.tn, m.fn, m.fp);
  r.precision = fake.precision.value;
  r.recall = fake.recall.value;
  r.f1 = fake.f1.value;
  r.macro_f1 = (fake.f1.value + legit.f1.value) / 2.0;
  if (!fake.precision.defined) r.undefined.push_back("precision");
  if (!fake.recall.defined) r.undefined.push_back("recall");
  if (!fake.f1.defined) r.undefined.push_back("f1");
  if (!fake.f1.defined || !legit.f1.defined) r.undefined.push_back("macro_f1");
  return r;
}

nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["model_id"] = r.model_id;
  j["config_hash"] = r.config_hash;
  j["confusion"] = {{"tp", r.matrix.tp}, {"fp", r.matrix.fp}, {"fn", r.matrix.fn}, {"tn", r.matrix.tn}};
  j["total"] = r.matrix.total();
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["macro_f1"] = r.macro_f1;
  j["undefined"] = r.undefined;
  return j;
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  try {
    ConfusionMatrix m;
    const auto& c = j.at("confusion");
    m.tp = c.at("tp").get<std::uint64_t>();
    m.fp = c.at("fp").get<std::uint64_t>();
    m.fn = c.at("fn").get<std::uint64_t>();
    m.tn = c.at("tn").get<std::uint64_t>();
    EvalReport r = metrics(m);
    r.model_id = j.value("model_id", "");
    r.config_hash = j.value("config_hash", "");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("evaluation report: ") + e.what());
  }
}

CrossDatasetReport cross_dataset_eval(std::span<const LabeledPrediction> predictions,
                                      const std::vector<std::string>& sources) {
  std::map<std::string, ConfusionMatrix> per;
  std::map<std::string, std::pair<std::vector<Label>, std::vector<Label>>> split;
  for (const auto& p : predictions) {
    auto& [pred, gold] = split[p.source_id];
    pred.push_back(p.predicted);
    gold.push_back(p.gold);
  }
  std::set<std::string> wanted(sources.begin(), sources.end());
  for (const auto& s : wanted)
    if (!split.contains(s)) throw Error(ErrorKind::UnknownSource, "no predictions for source " + s, s);

  CrossDatasetReport out;
  ConfusionMatrix pooled;
  for (const auto& [source, pg] : split) {
    if (!wanted.empty() && !wanted.contains(source)) continue;
    const ConfusionMatrix m = confusion(pg.first, pg.second);
    pooled = pooled + m;
    EvalReport r = metrics(m);
    r.model_id = source;
    out.per_source.emplace_back(source, std::move(r));
  }
  out.pooled = metrics(pooled);
  out.pooled.model_id = "pooled";
  return out;
}

nlohmann::ordered_json to_json(const CrossDatasetReport& r) {
  nlohmann::ordered_json j;
  auto per = nlohmann::ordered_json::object();
  for (const auto& [source, report] : r.per_source) per[source] = to_json(report);
  j["per_source"] = std::move(per);
  j["pooled"] = to_json(r.pooled);
  return j;
}

namespace {

std::unordered_map<std::string, const NewsRecord*> index_gold(std::span<const NewsRecord> gold) {
  std::unordered_map<std::string, const NewsRecord*> by_id;
  for (const auto& g : gold) by_id.emplace(g.id, &g);
  return by_id;
}

const NewsRecord& lookup(const std::unordered_map<std::string, const NewsRecord*>& by_id,
                         const std::string& id) {
  auto it = by_id.find(id);
  if (it == by_id.end()) throw Error(ErrorKind::UnknownItemId, "no gold label for item " + id, id);
  return *it->second;
}

}  // namespace

std::vector<LabeledPrediction> join_gold(std::span<const ensemble::VoteRecord> records,
                                         std::span<const NewsRecord> gold) {
  const auto by_id = index_gold(gold);
  std::vector<LabeledPrediction> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const NewsRecord& g = lookup(by_id, r.item_id);
    out.push_back({r.item_id, g.source_id, r.decision, g.label});
  }
  return out;
}

std::vector<ReviewItem> export_review(std::span<const ensemble::VoteRecord> records,
                                      std::span<const NewsRecord> gold) {
  const auto by_id = index_gold(gold);
  std::vector<ReviewItem> out;
  for (const auto& r : records) {
    const NewsRecord& g = lookup(by_id, r.item_id);
    if (g.label == r.decision) continue;
    ReviewItem item;
    item.item_id = r.item_id;
    item.text = g.text;
    item.gold = g.label;
    item.predicted = r.decision;
    for (const auto& v : r.votes)
      item.votes.push_back(
          {v.predictor_id, v.output ? std::string(to_string(v.output->predicted)) : "error"});
    out.push_back(std::move(item));
  }
  return out;
}

nlohmann::ordered_json to_json(const ReviewItem& item) {
  nlohmann::ordered_json j;
  j["item_id"] = item.item_id;
  j["text"] = item.text;
  j["gold"] = std::string(to_string(item.gold));
  j["predicted"] = std::string(to_string(item.predicted));
  auto votes = nlohmann::ordered_json::object();
  for (const auto& v : item.votes) votes[v.predictor_id] = v.vote;
  j["votes"] = std::move(votes);
  if (item.verdict) {
    j["expert_verdict"] = {{"label", std::string(to_string(item.verdict->corrected))},
                           {"reviewer", item.verdict->reviewer},
                           {"note", item.verdict->note}};
  } else {
    j["expert_verdict"] = nullptr;
  }
  return j;
}

namespace {

Label label_at(const nlohmann::json& j, const char* key) {
  const auto l = parse_label(j.at(key).get<std::string>());
  if (!l) throw Error(ErrorKind::ParseError, std::string("bad label in ") + key);
  return *l;
}

}  // namespace

ReviewItem review_item_from_json(const nlohmann::json& j) {
  try {
    ReviewItem item;
    item.item_id = j.at("item_id").get<std::string>();
    item.text = j.value("text", "");
    item.gold = label_at(j, "gold");
    item.predicted = label_at(j, "predicted");
    if (j.contains("votes"))
      for (const auto& [k, v] : j["votes"].items()) item.votes.push_back({k, v.get<std::string>()});
    if (j.contains("expert_verdict") && !j["expert_verdict"].is_null()) {
      const auto& v = j["expert_verdict"];
      item.verdict = Verdict{label_at(v, "label"), v.value("reviewer", ""), v.value("note", "")};
    }
    return item;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("review item: ") + e.what());
  }
}

std::string write_review(std::span<const ReviewItem> items) {
  std::string out;
  for (const auto& item : items) {
    out += to_json(item).dump();
    out += '\n';
  }
  return out;
}

std::vector<ReviewItem> read_review(std::string_view jsonl) {
  std::vector<ReviewItem> out;
  std::size_t line_no = 0;
  for (const auto& line : io::split_lines(jsonl)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(review_item_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::ParseError, std::string("review file: ") + e.what(),
                  "line " + std::to_string(line_no));
    } catch (const Error& e) {
      throw Error(ErrorKind::ParseError, e.what(), "line " + std::to_string(line_no));
    }
  }
  return out;
}

namespace {

std::string escape_tsv(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_tsv(std::string_view s, std::size_t line_no) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out += s[i];
      continue;
    }
    if (++i == s.size())
      throw Error(ErrorKind::ParseError, "dangling backslash", "line " + std::to_string(line_no));
    switch (s[i]) {
      case '\\': out += '\\'; break;
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default:
        throw Error(ErrorKind::ParseError, std::string("unknown escape \\") + s[i],
                    "line " + std::to_string(line_no));
    }
  }
  return out;
}

constexpr std::string_view kTsvHeader = "item_id\ttext\tgold\tpredicted\tvotes\tverdict\treviewer\tnote";

}  // namespace

std::string review_to_tsv(std::span<const ReviewItem> items) {
  std::string out(kTsvHeader);
  out += '\n';
  for (const auto& item : items) {
    std::string votes;
    for (const auto& v : item.votes) {
      if (!votes.empty()) votes += ';';
      votes += v.predictor_id + "=" + v.vote;
    }
    out += escape_tsv(item.item_id) + '\t' + escape_tsv(item.text) + '\t' +
           std::string(to_string(item.gold)) + '\t' + std::string(to_string(item.predicted)) +
           '\t' + escape_tsv(votes) + '\t';
    if (item.verdict)
      out += std::string(to_string(item.verdict->corrected)) + '\t' +
             escape_tsv(item.verdict->reviewer) + '\t' + escape_tsv(item.verdict->note);
    else
      out += "\t\t";
    out += '\n';
  }
  return out;
}

std::vector<ReviewItem> review_from_tsv(std::string_view tsv) {
  const auto lines = io::split_lines(tsv);
  if (lines.empty() || lines[0] != kTsvHeader)
    throw Error(ErrorKind::ParseError, "review TSV lacks the expected header", "line 1");
  std::vector<ReviewItem> out;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    const std::size_t line_no = n + 1;
    if (lines[n].empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      const auto tab = lines[n].find('\t', start);
      cols.emplace_back(lines[n].substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 8)
      throw Error(ErrorKind::ParseError, "expected 8 columns, found " + std::to_string(cols.size()),
                  "line " + std::to_string(line_no));
    auto label = [&](const std::string& text) {
      const auto l = parse_label(text);
      if (!l) throw Error(ErrorKind::ParseError, "bad label: " + text, "line " + std::to_string(line_no));
      return *l;
    };
    ReviewItem item;
    item.item_id = unescape_tsv(cols[0], line_no);
    item.text = unescape_tsv(cols[1], line_no);
    item.gold = label(cols[2]);
    item.predicted = label(cols[3]);
    const std::string votes = unescape_tsv(cols[4], line_no);
    std::size_t at = 0;
    while (at < votes.size()) {
      const auto semi = votes.find(';', at);
      const std::string pair = votes.substr(at, semi == std::string::npos ? std::string::npos : semi - at);
      const auto eq = pair.rfind('=');
      if (eq == std::string::npos)
        throw Error(ErrorKind::ParseError, "bad vote entry: " + pair, "line " + std::to_string(line_no));
      item.votes.push_back({pair.substr(0, eq), pair.substr(eq + 1)});
      if (semi == std::string::npos) break;
      at = semi + 1;
    }
    if (!cols[5].empty())
      item.verdict = Verdict{label(cols[5]), unescape_tsv(cols[6], line_no), unescape_tsv(cols[7], line_no)};
    out.push_back(std::move(item));
  }
  return out;
}

ReviewOutcome import_review(std::span<const ensemble::VoteRecord> records,
                            std::span<const NewsRecord> gold,
                            std::span<const ReviewItem> reviewed) {
  const auto exported = export_review(records, gold);
  std::set<std::string> exported_ids;
  for (const auto& e : exported) exported_ids.insert(e.item_id);

  std::map<std::string, Verdict> verdicts;
  for (const auto& item : reviewed) {
    if (!item.verdict) continue;
    if (!exported_ids.contains(item.item_id))
      throw Error(ErrorKind::UnknownItemId, "verdict for an item that was not exported: " + item.item_id,
                  item.item_id);
    auto [it, inserted] = verdicts.emplace(item.item_id, *item.verdict);
    if (!inserted && it->second.corrected != item.verdict->corrected)
      throw Error(ErrorKind::ConflictingVerdicts, "conflicting verdicts for item " + item.item_id,
                  item.item_id);
  }

  const auto joined = join_gold(records, gold);
  std::vector<Label> pred, original, amended;
  for (const auto& j : joined) {
    pred.push_back(j.predicted);
    original.push_back(j.gold);
    auto it = verdicts.find(j.item_id);
    amended.push_back(it == verdicts.end() ? j.gold : it->second.corrected);
  }
  ReviewOutcome out;
  out.original = metrics(confusion(pred, original));
  out.amended = metrics(confusion(pred, amended));
  for (auto& [id, v] : verdicts) out.applied.emplace_back(id, v);
  return out;
}

nlohmann::ordered_json to_json(const ReviewOutcome& o) {
  nlohmann::ordered_json j;
  j["original"] = to_json(o.original);
  j["amended"] = to_json(o.amended);
  auto applied = nlohmann::ordered_json::array();
  for (const auto& [id, v] : o.applied)
    applied.push_back({{"item_id", id},
                       {"label", std::string(to_string(v.corrected))},
                       {"reviewer", v.reviewer},
                       {"note", v.note}});
  j["verdicts"] = std::move(applied);
  return j;
}

std::string render_table(std::span<const EvalReport> reports) {
  std::size_t width = 5;
  for (const auto& r : reports) width = std::max(width, r.model_id.size());
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(w, s.size()), ' ');
    return s;
  };
  std::string out = pad("Model", width) + "  Accuracy  Precision  Recall  F1-Score\n";
  out += std::string(width, '-') + "  --------  ---------  ------  --------\n";
  char buf[128];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "  %8.3f  %9.3f  %6.3f  %8.3f\n", r.accuracy, r.precision,
                  r.recall, r.f1);
    out += pad(r.model_id, width) + buf;
  }
  return out;
}

}  // namespace lund::evaluate
