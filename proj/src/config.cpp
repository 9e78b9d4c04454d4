#include "metricdepth/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "metricdepth/error.hpp"

namespace metricdepth {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Maps JSON pointers ("/schedule/seeds/2") to the 1-based line where the
// member key (or array element) starts. nlohmann::json keeps no source
// positions, so this is a separate structural scan of the same text; it is
// only consulted after json::parse accepted the document.
class LineIndex {
 public:
  explicit LineIndex(const std::string& text) { scan(text); }

  int line_of(std::string pointer) const {
    for (;;) {
      if (auto it = lines_.find(pointer); it != lines_.end()) return it->second;
      if (pointer.empty()) return 1;
      pointer.erase(pointer.rfind('/'));
    }
  }

 private:
  struct Frame {
    bool object;
    std::string path;
    std::string key;
    std::size_t index = 0;
    bool expect_key = true;
  };

  static std::string escape(const std::string& key) {
    std::string out;
    for (char c : key) {
      if (c == '~') out += "~0";
      else if (c == '/') out += "~1";
      else out += c;
    }
    return out;
  }

  std::string current(const std::vector<Frame>& stack) const {
    if (stack.empty()) return "";
    const Frame& top = stack.back();
    return top.path + "/" + (top.object ? escape(top.key) : std::to_string(top.index));
  }

  void mark(const std::string& pointer, int line) { lines_.emplace(pointer, line); }

  void scan(const std::string& text) {
    std::vector<Frame> stack;
    int line = 1;
    for (std::size_t i = 0; i < text.size(); ++i) {
      const char c = text[i];
      if (c == '\n') {
        ++line;
      } else if (c == '"') {
        std::string s;
        for (++i; i < text.size() && text[i] != '"'; ++i) {
          if (text[i] == '\\' && i + 1 < text.size()) ++i;
          s += text[i];
        }
        if (!stack.empty() && stack.back().object && stack.back().expect_key) {
          stack.back().key = s;
          stack.back().expect_key = false;
          mark(current(stack), line);
        } else {
          mark(current(stack), line);
        }
      } else if (c == '{' || c == '[') {
        const std::string here = current(stack);
        mark(here, line);
        stack.push_back(Frame{c == '{', here, "", 0, c == '{'});
      } else if (c == '}' || c == ']') {
        if (!stack.empty()) stack.pop_back();
      } else if (c == ',') {
        if (!stack.empty()) {
          if (stack.back().object) stack.back().expect_key = true;
          else ++stack.back().index;
        }
      } else if (c != ':' && c != ' ' && c != '\t' && c != '\r') {
        mark(current(stack), line);
      }
    }
  }

  std::map<std::string, int> lines_;
};

class Reader {
 public:
  Reader(const json& node, std::string pointer, const LineIndex& index, const std::string& source)
      : node_(node), pointer_(std::move(pointer)), index_(index), source_(source) {}

  [[noreturn]] void fail(const std::string& what, const std::string& child = "") const {
    const std::string at = child.empty() ? pointer_ : pointer_ + "/" + child;
    throw Error(ErrorCode::InvalidConfig, source_ + ":" + std::to_string(index_.line_of(at)) +
                                              ": " + (at.empty() ? "/" : at) + ": " + what);
  }

  void expect_object(std::initializer_list<const char*> allowed) const {
    if (!node_.is_object()) fail("expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : node_.items()) {
      if (!ok.count(key)) fail("unknown key \"" + key + "\"", key);
    }
  }

  bool has(const char* key) const { return node_.contains(key); }

  Reader child(const char* key) const {
    return Reader(node_.at(key), pointer_ + "/" + key, index_, source_);
  }
  Reader element(std::size_t i) const {
    return Reader(node_.at(i), pointer_ + "/" + std::to_string(i), index_, source_);
  }
  const json& node() const { return node_; }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    const auto& v = node_.at(key);
    if (!v.is_number()) fail("expected a number", key);
    return v.get<double>();
  }

  std::uint64_t unsigned_int(const char* key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    return as_unsigned(node_.at(key), key);
  }

  std::string text(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const auto& v = node_.at(key);
    if (!v.is_string()) fail("expected a string", key);
    return v.get<std::string>();
  }

  std::vector<std::uint64_t> unsigned_list(const char* key,
                                           const std::vector<std::uint64_t>& fallback) const {
    if (!has(key)) return fallback;
    const auto& v = node_.at(key);
    if (!v.is_array()) fail("expected an array of non-negative integers", key);
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(as_unsigned(v[i], std::string(key) + "/" + std::to_string(i)));
    }
    return out;
  }

  /// Runs a module's validate() and re-raises its complaint at this node.
  template <typename Fn>
  void checked(Fn&& fn) const {
    try {
      fn();
    } catch (const Error& e) {
      fail(e.detail());
    }
  }

 private:
  std::uint64_t as_unsigned(const json& v, const std::string& child) const {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
      return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    fail("expected a non-negative integer", child);
  }

  const json& node_;
  std::string pointer_;
  const LineIndex& index_;
  const std::string& source_;
};

SceneParams read_scene(const Reader& r) {
  r.expect_object({"height", "width", "d_min", "d_max", "input_channels"});
  SceneParams s;
  s.height = r.unsigned_int("height", s.height);
  s.width = r.unsigned_int("width", s.width);
  s.d_min = r.number("d_min", s.d_min);
  s.d_max = r.number("d_max", s.d_max);
  s.input_channels = r.unsigned_int("input_channels", s.input_channels);
  r.checked([&] { s.validate(); });
  return s;
}

ModelShape read_model(const Reader& r) {
  r.expect_object({"hidden", "feature_channels"});
  ModelShape m;
  m.hidden = r.unsigned_int("hidden", m.hidden);
  m.feature_channels = r.unsigned_int("feature_channels", m.feature_channels);
  return m;
}

DepthLossParams read_depth_loss(const Reader& r) {
  r.expect_object({"variance_focus", "output_scale"});
  DepthLossParams d;
  d.variance_focus = r.number("variance_focus", d.variance_focus);
  d.output_scale = r.number("output_scale", d.output_scale);
  r.checked([&] { d.validate(); });
  return d;
}

Schedule read_schedule(const Reader& r) {
  r.expect_object({"steps", "batch_size", "learning_rate", "lr_decay", "seeds", "train_scenes",
                   "eval_scenes", "eval_seed", "eval_every"});
  Schedule s;
  s.steps = r.unsigned_int("steps", s.steps);
  s.batch_size = r.unsigned_int("batch_size", s.batch_size);
  s.learning_rate = r.number("learning_rate", s.learning_rate);
  const std::string decay = r.text("lr_decay", "cosine");
  if (decay == "cosine") s.decay = LrDecay::Cosine;
  else if (decay == "constant") s.decay = LrDecay::Constant;
  else r.fail("lr_decay must be \"cosine\" or \"constant\"", "lr_decay");
  s.seeds = r.unsigned_list("seeds", s.seeds);
  s.train_scenes = r.unsigned_int("train_scenes", s.train_scenes);
  s.eval_scenes = r.unsigned_int("eval_scenes", s.eval_scenes);
  s.eval_seed = r.unsigned_int("eval_seed", s.eval_seed);
  s.eval_every = r.unsigned_int("eval_every", s.eval_every);
  r.checked([&] { s.validate(); });
  return s;
}

SeparationParams read_separation(const Reader& r) {
  r.expect_object({"near_below", "far_above", "pairs", "seed"});
  SeparationParams s;
  s.near_below = r.number("near_below", s.near_below);
  s.far_above = r.number("far_above", s.far_above);
  s.pairs = r.unsigned_int("pairs", s.pairs);
  s.seed = r.unsigned_int("seed", s.seed);
  r.checked([&] { s.validate(); });
  return s;
}

LossReduction read_reduction(const Reader& r) {
  const std::string v = r.text("loss_reduction", "mean");
  if (v == "mean") return LossReduction::MeanOverContributing;
  if (v == "sum") return LossReduction::Sum;
  r.fail("loss_reduction must be \"mean\" or \"sum\"", "loss_reduction");
}

NamedStrategy read_strategy(const Reader& r) {
  if (!r.node().is_object()) r.fail("expected an object");
  const std::string type = r.text("type", "");
  NamedStrategy out;
  RegConfig& reg = out.reg;
  if (type == "none") {
    r.expect_object({"name", "type", "depth_loss_weight"});
    reg.strategy = NoRegularization{};
  } else if (type == "uniform") {
    r.expect_object({"name", "type", "r_p", "r_n", "margin", "n_within", "n_across",
                     "loss_reduction", "depth_loss_weight"});
    UniformStrategy u;
    u.r_n = r.number("r_n", u.r_n);
    u.margin = r.number("margin", u.margin);
    reg.strategy = u;
  } else if (type == "multi_range") {
    r.expect_object({"name", "type", "r_p", "ranges", "n_within", "n_across", "loss_reduction",
                     "depth_loss_weight"});
    MultiRangeStrategy m;
    if (!r.has("ranges") || !r.node().at("ranges").is_array()) {
      r.fail("multi_range strategy needs a \"ranges\" array", "ranges");
    }
    const Reader ranges = r.child("ranges");
    for (std::size_t j = 0; j < ranges.node().size(); ++j) {
      const Reader e = ranges.element(j);
      e.expect_object({"low", "high", "margin"});
      if (!e.has("low") || !e.has("high") || !e.has("margin")) {
        e.fail("range needs \"low\", \"high\" and \"margin\"");
      }
      m.ranges.push_back({e.number("low", 0.0), e.number("high", 0.0), e.number("margin", 0.0)});
    }
    reg.strategy = m;
  } else {
    r.fail("strategy type must be \"none\", \"uniform\" or \"multi_range\"", "type");
  }
  out.name = r.text("name", "");
  if (out.name.empty()) r.fail("strategy needs a non-empty \"name\"", "name");
  reg.r_p = r.number("r_p", reg.r_p);
  reg.n_within = r.unsigned_int("n_within", reg.n_within);
  reg.n_across = r.unsigned_int("n_across", reg.n_across);
  reg.loss_reduction = read_reduction(r);
  reg.depth_loss_weight = r.number("depth_loss_weight", reg.depth_loss_weight);
  r.checked([&] { reg.validate(); });
  return out;
}

std::vector<std::size_t> to_sizes(const std::vector<std::uint64_t>& v) {
  return {v.begin(), v.end()};
}

SweepConfig read_sweep(const Reader& r) {
  r.expect_object({"strategy", "n_within", "n_across"});
  SweepConfig s;
  s.strategy = r.text("strategy", "");
  s.n_within = to_sizes(r.unsigned_list("n_within", {}));
  s.n_across = to_sizes(r.unsigned_list("n_across", {}));
  return s;
}

ordered_json strategy_json(const NamedStrategy& s) {
  ordered_json j;
  j["name"] = s.name;
  const RegConfig& reg = s.reg;
  if (std::holds_alternative<NoRegularization>(reg.strategy)) {
    j["type"] = "none";
    j["depth_loss_weight"] = reg.depth_loss_weight;
    return j;
  }
  if (const auto* u = std::get_if<UniformStrategy>(&reg.strategy)) {
    j["type"] = "uniform";
    j["r_p"] = reg.r_p;
    j["r_n"] = u->r_n;
    j["margin"] = u->margin;
  } else {
    const auto& m = std::get<MultiRangeStrategy>(reg.strategy);
    j["type"] = "multi_range";
    j["r_p"] = reg.r_p;
    j["ranges"] = ordered_json::array();
    for (const auto& range : m.ranges) {
      j["ranges"].push_back({{"low", range.low}, {"high", range.high}, {"margin", range.margin}});
    }
  }
  j["n_within"] = reg.n_within;
  j["n_across"] = reg.n_across;
  j["loss_reduction"] = reg.loss_reduction == LossReduction::Sum ? "sum" : "mean";
  j["depth_loss_weight"] = reg.depth_loss_weight;
  return j;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (strategies.empty()) throw Error(ErrorCode::InvalidConfig, "at least one strategy is required");
  std::set<std::string> names;
  for (const auto& s : strategies) {
    if (!names.insert(s.name).second) {
      throw Error(ErrorCode::InvalidConfig, "duplicate strategy name \"" + s.name + "\"");
    }
    train_config(s.reg).validate();
  }
  if (schedule.seeds.empty()) throw Error(ErrorCode::InvalidConfig, "schedule.seeds must not be empty");
  if (sweep) {
    const RegConfig& base = strategy(sweep->strategy).reg;
    for (std::size_t n : sweep->n_across) {
      RegConfig r = base;
      r.n_across = n;
      train_config(r).validate();
    }
  }
}

const NamedStrategy& ExperimentConfig::strategy(const std::string& name) const {
  for (const auto& s : strategies) {
    if (s.name == name) return s;
  }
  throw Error(ErrorCode::InvalidConfig, "no strategy named \"" + name + "\"");
}

TrainConfig ExperimentConfig::train_config(const RegConfig& reg) const {
  TrainConfig t;
  t.scene = scene;
  t.model = model;
  t.model.input_channels = scene.input_channels;
  t.reg = reg;
  t.depth_loss = depth_loss;
  t.schedule = schedule;
  t.separation = separation;
  return t;
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line:column.
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorCode::ParseError, source + ":" + std::to_string(line) + ":" +
                                           std::to_string(col) + ": " + e.what());
  }

  const LineIndex index(text);
  const Reader root(doc, "", index, source);
  root.expect_object({"scene", "model", "depth_loss", "schedule", "separation", "strategies",
                      "sweep", "output_dir"});

  ExperimentConfig cfg;
  if (root.has("scene")) cfg.scene = read_scene(root.child("scene"));
  if (root.has("model")) cfg.model = read_model(root.child("model"));
  cfg.model.input_channels = cfg.scene.input_channels;
  if (root.has("depth_loss")) cfg.depth_loss = read_depth_loss(root.child("depth_loss"));
  if (root.has("schedule")) cfg.schedule = read_schedule(root.child("schedule"));
  if (root.has("separation")) cfg.separation = read_separation(root.child("separation"));
  cfg.output_dir = root.text("output_dir", cfg.output_dir);

  if (!root.has("strategies") || !doc.at("strategies").is_array() || doc.at("strategies").empty()) {
    root.fail("\"strategies\" must be a non-empty array", "strategies");
  }
  const Reader strategies = root.child("strategies");
  for (std::size_t i = 0; i < doc.at("strategies").size(); ++i) {
    cfg.strategies.push_back(read_strategy(strategies.element(i)));
  }
  if (root.has("sweep")) cfg.sweep = read_sweep(root.child("sweep"));

  const Reader model = root.has("model") ? root.child("model") : root;
  model.checked([&] { cfg.model.validate(); });
  if (cfg.sweep) {
    root.child("sweep").checked([&] { (void)cfg.strategy(cfg.sweep->strategy); });
  }
  root.checked([&] { cfg.validate(); });
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str(), path.string());
}

std::string to_json_text(const ExperimentConfig& c) {
  ordered_json j;
  j["scene"] = {{"height", c.scene.height},
                {"width", c.scene.width},
                {"d_min", c.scene.d_min},
                {"d_max", c.scene.d_max},
                {"input_channels", c.scene.input_channels}};
  j["model"] = {{"hidden", c.model.hidden}, {"feature_channels", c.model.feature_channels}};
  j["depth_loss"] = {{"variance_focus", c.depth_loss.variance_focus},
                     {"output_scale", c.depth_loss.output_scale}};
  j["schedule"] = {{"steps", c.schedule.steps},
                   {"batch_size", c.schedule.batch_size},
                   {"learning_rate", c.schedule.learning_rate},
                   {"lr_decay", c.schedule.decay == LrDecay::Cosine ? "cosine" : "constant"},
                   {"seeds", c.schedule.seeds},
                   {"train_scenes", c.schedule.train_scenes},
                   {"eval_scenes", c.schedule.eval_scenes},
                   {"eval_seed", c.schedule.eval_seed},
                   {"eval_every", c.schedule.eval_every}};
  j["separation"] = {{"near_below", c.separation.near_below},
                     {"far_above", c.separation.far_above},
                     {"pairs", c.separation.pairs},
                     {"seed", c.separation.seed}};
  j["strategies"] = ordered_json::array();
  for (const auto& s : c.strategies) j["strategies"].push_back(strategy_json(s));
  if (c.sweep) {
    j["sweep"] = {{"strategy", c.sweep->strategy},
                  {"n_within", c.sweep->n_within},
                  {"n_across", c.sweep->n_across}};
  }
  j["output_dir"] = c.output_dir;
  return j.dump(2) + "\n";
}

}  // namespace metricdepth
