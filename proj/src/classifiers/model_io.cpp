#include <bit>
#include <cstring>
#include <string>

#include "lund/classifiers.hpp"
#include "lund/error.hpp"
#include "lund/util/hashing.hpp"
#include "lund/util/io.hpp"

namespace lund::classifiers {

namespace {

constexpr std::string_view kMagic = "LUNDMDL1";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(std::string_view bytes, std::size_t at, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
  return v;
}

[[noreturn]] void corrupt(const std::string& why) {
  throw Error(ErrorKind::CorruptModel, why);
}

class Writer {
 public:
  void put(double v) { values.push_back(v); }
  void put(std::span<const double> vs) { values.insert(values.end(), vs.begin(), vs.end()); }
  std::vector<double> values;
};

class Reader {
 public:
  explicit Reader(std::vector<double> v) : values_(std::move(v)) {}
  double next() {
    if (at_ >= values_.size()) corrupt("payload shorter than its layout");
    return values_[at_++];
  }
  std::vector<double> take(std::size_t n) {
    if (values_.size() - at_ < n) corrupt("payload shorter than its layout");
    std::vector<double> out(values_.begin() + static_cast<std::ptrdiff_t>(at_),
                            values_.begin() + static_cast<std::ptrdiff_t>(at_ + n));
    at_ += n;
    return out;
  }
  std::size_t index() {
    const double v = next();
    if (!(v >= 0) || v != std::floor(v) || v > 9.0e15) corrupt("bad index in payload");
    return static_cast<std::size_t>(v);
  }
  void finish() const {
    if (at_ != values_.size()) corrupt("payload longer than its layout");
  }

 private:
  std::vector<double> values_;
  std::size_t at_ = 0;
};

void write_tree(const TreeParams& t, Writer& w) {
  for (const auto& node : t.nodes) {
    w.put(static_cast<double>(node.feature));
    w.put(node.threshold);
    w.put(node.left);
    w.put(node.right);
    w.put(node.fake_fraction);
  }
}

TreeParams read_tree(Reader& r, std::size_t n_nodes, std::size_t dimension) {
  TreeParams t;
  t.nodes.resize(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    auto& node = t.nodes[i];
    const double f = r.next();
    node.feature = static_cast<std::int64_t>(f);
    node.threshold = r.next();
    node.left = static_cast<std::uint32_t>(r.index());
    node.right = static_cast<std::uint32_t>(r.index());
    node.fake_fraction = r.next();
    if (node.feature >= 0 &&
        (static_cast<std::size_t>(node.feature) >= dimension || node.left <= i ||
         node.right <= i || node.left >= n_nodes || node.right >= n_nodes))
      corrupt("tree node out of range");
  }
  if (n_nodes == 0) corrupt("empty tree");
  return t;
}

std::string label_name(Label l) { return std::string(to_string(l)); }

}  // namespace

std::string serialize_model(const TrainedModel& model) {
  nlohmann::ordered_json header;
  header["algorithm"] = std::string(to_string(model.algorithm));
  header["version"] = model.version;
  header["vocabulary_hash"] = to_hex(model.vocabulary_hash);
  header["dimension"] = model.dimension;
  header["degenerate"] = model.degenerate;
  header["config"] = to_json(model.config);
  nlohmann::ordered_json layout = nlohmann::ordered_json::object();
  Writer w;

  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ConstantParams>) {
          layout["kind"] = "constant";
          layout["label"] = label_name(p.label);
        } else if constexpr (std::is_same_v<P, NaiveBayesParams>) {
          layout["kind"] = "naive_bayes";
          w.put(p.log_prior);
          w.put(p.log_prob[0]);
          w.put(p.log_prob[1]);
        } else if constexpr (std::is_same_v<P, LinearParams>) {
          layout["kind"] = "linear";
          w.put(p.weights);
          w.put(p.bias);
        } else if constexpr (std::is_same_v<P, TreeParams>) {
          layout["kind"] = "tree";
          layout["nodes"] = p.nodes.size();
          write_tree(p, w);
        } else if constexpr (std::is_same_v<P, ForestParams>) {
          layout["kind"] = "forest";
          auto sizes = nlohmann::ordered_json::array();
          for (const auto& t : p.trees) {
            sizes.push_back(t.nodes.size());
            write_tree(t, w);
          }
          layout["trees"] = sizes;
        } else if constexpr (std::is_same_v<P, BoostParams>) {
          layout["kind"] = "boosting";
          layout["stumps"] = p.stumps.size();
          w.put(p.base_score);
          for (const auto& s : p.stumps) {
            w.put(s.feature);
            w.put(s.threshold);
            w.put(s.left_value);
            w.put(s.right_value);
          }
        } else if constexpr (std::is_same_v<P, KnnParams>) {
          layout["kind"] = "knn";
          layout["k"] = p.k;
          layout["vectors"] = p.vectors.size();
          for (std::size_t i = 0; i < p.vectors.size(); ++i) {
            w.put(static_cast<double>(index_of(p.labels[i])));
            w.put(static_cast<double>(p.vectors[i].entries().size()));
            for (const auto& [id, v] : p.vectors[i].entries()) {
              w.put(id);
              w.put(v);
            }
          }
        } else {
          layout["kind"] = "mlp";
          layout["input"] = p.input;
          layout["hidden"] = p.hidden;
          w.put(p.w1);
          w.put(p.b1);
          w.put(p.w2);
          w.put(p.b2);
        }
      },
      model.params);
  header["layout"] = layout;

  const std::string head = header.dump();
  std::string out(kMagic);
  put_u32(out, static_cast<std::uint32_t>(head.size()));
  out += head;
  put_u64(out, w.values.size());
  for (double v : w.values) put_u64(out, std::bit_cast<std::uint64_t>(v));
  put_u32(out, crc32(out));
  return out;
}

TrainedModel deserialize_model(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 4 + 8 + 4 || bytes.substr(0, kMagic.size()) != kMagic)
    corrupt("not a model file");
  const std::size_t body = bytes.size() - 4;
  if (crc32(bytes.substr(0, body)) != get_le(bytes, body, 4)) corrupt("checksum mismatch");
  const std::size_t head_len = get_le(bytes, kMagic.size(), 4);
  std::size_t at = kMagic.size() + 4;
  if (head_len > body - at - 8) corrupt("truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(at, head_len));
  } catch (const nlohmann::json::exception& e) {
    corrupt(std::string("unreadable header: ") + e.what());
  }
  at += head_len;
  const std::uint64_t count = get_le(bytes, at, 8);
  at += 8;
  if (count != (body - at) / 8 || (body - at) % 8 != 0) corrupt("truncated payload");
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i)
    values[i] = std::bit_cast<double>(get_le(bytes, at + 8 * i, 8));

  TrainedModel model;
  try {
    model.version = header.at("version").get<std::string>();
    const auto dot = model.version.find('.');
    const int major = std::stoi(model.version.substr(0, dot));
    const int ours = std::stoi(std::string(kModelFormatVersion.substr(0, kModelFormatVersion.find('.'))));
    if (major > ours)
      throw Error(ErrorKind::VersionMismatch,
                  "model format " + model.version + " is newer than supported " +
                      std::string(kModelFormatVersion),
                  model.version);
    model.algorithm = parse_algorithm(header.at("algorithm").get<std::string>());
    model.vocabulary_hash = from_hex(header.at("vocabulary_hash").get<std::string>());
    model.dimension = header.at("dimension").get<std::size_t>();
    model.degenerate = header.at("degenerate").get<bool>();
    model.config = train_config_from_json(header.at("config"));
    const auto& layout = header.at("layout");
    const std::string kind = layout.at("kind").get<std::string>();
    Reader r(std::move(values));
    const std::size_t d = model.dimension;
    if (kind == "constant") {
      const auto label = parse_label(layout.at("label").get<std::string>());
      if (!label) corrupt("bad constant label");
      model.params = ConstantParams{*label};
    } else if (kind == "naive_bayes") {
      NaiveBayesParams p;
      p.log_prior[0] = r.next();
      p.log_prior[1] = r.next();
      p.log_prob[0] = r.take(d);
      p.log_prob[1] = r.take(d);
      model.params = std::move(p);
    } else if (kind == "linear") {
      LinearParams p;
      p.weights = r.take(d);
      p.bias = r.next();
      model.params = std::move(p);
    } else if (kind == "tree") {
      model.params = read_tree(r, layout.at("nodes").get<std::size_t>(), d);
    } else if (kind == "forest") {
      ForestParams p;
      for (const auto& size : layout.at("trees")) p.trees.push_back(read_tree(r, size.get<std::size_t>(), d));
      model.params = std::move(p);
    } else if (kind == "boosting") {
      BoostParams p;
      p.base_score = r.next();
      const std::size_t n = layout.at("stumps").get<std::size_t>();
      for (std::size_t i = 0; i < n; ++i) {
        Stump s;
        s.feature = static_cast<std::uint32_t>(r.index());
        if (s.feature >= d) corrupt("stump feature out of range");
        s.threshold = r.next();
        s.left_value = r.next();
        s.right_value = r.next();
        p.stumps.push_back(s);
      }
      model.params = std::move(p);
    } else if (kind == "knn") {
      KnnParams p;
      p.k = layout.at("k").get<std::size_t>();
      const std::size_t n = layout.at("vectors").get<std::size_t>();
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t label = r.index();
        if (label > 1) corrupt("bad label in payload");
        p.labels.push_back(static_cast<Label>(label));
        const std::size_t nnz = r.index();
        std::vector<FeatureVector::Entry> entries;
        for (std::size_t e = 0; e < nnz; ++e) {
          const std::size_t id = r.index();
          if (id >= d) corrupt("knn feature out of range");
          entries.emplace_back(static_cast<std::uint32_t>(id), r.next());
        }
        p.vectors.push_back(FeatureVector::from_entries(std::move(entries)));
      }
      model.params = std::move(p);
    } else if (kind == "mlp") {
      MlpParams p;
      p.input = layout.at("input").get<std::size_t>();
      p.hidden = layout.at("hidden").get<std::size_t>();
      if (p.input != d) corrupt("mlp input size differs from dimension");
      p.w1 = r.take(p.input * p.hidden);
      p.b1 = r.take(p.hidden);
      p.w2 = r.take(p.hidden * 2);
      p.b2 = r.take(2);
      model.params = std::move(p);
    } else {
      corrupt("unknown layout kind: " + kind);
    }
    r.finish();
  } catch (const nlohmann::json::exception& e) {
    corrupt(std::string("malformed header: ") + e.what());
  } catch (const std::logic_error& e) {
    corrupt(std::string("malformed header: ") + e.what());
  }
  return model;
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  io::write_file(path, serialize_model(model));
}

TrainedModel load_model(const std::filesystem::path& path) {
  return deserialize_model(io::read_file(path));
}

}  // namespace lund::classifiers
