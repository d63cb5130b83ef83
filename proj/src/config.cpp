#include "idstyle/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace idstyle {

namespace {

const std::vector<std::string> kDefaultAttributeNames = {"gender", "glasses", "age", "smile"};

const std::set<std::string, std::less<>> kKeys = {
    "layers",          "dim",
    "attributes",      "attribute_names",
    "image_dim",       "identity_dim",
    "layer_weights",   "planted_sparsity",
    "world_seed",      "lambda_class",
    "lambda_nb",       "lambda_sparsity",
    "lambda_direction", "lambda_id",
    "learning_rate",   "beta1",
    "beta2",           "eps",
    "batch_size",      "iterations",
    "seed",            "disable_direction_loss",
    "disable_sparsity_loss", "disable_cfc",
    "disable_input_pe", "disable_output_embedding",
    "direction_norm",  "target_mode",
    "clip_grad_norm",
};

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  while (true) {
    const auto p = s.find(sep);
    out.push_back(trim(s.substr(0, p)));
    if (p == std::string_view::npos) break;
    s.remove_prefix(p + 1);
  }
  return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ConfigError("config key '" + std::string(key) + "': expected " + std::string(expected) + ", got '" +
                    std::string(value) + "'");
}

double parse_double(std::string_view key, std::string_view v) {
  double x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(x)) bad_value(key, v, "a finite number");
  return x;
}

std::int64_t parse_int(std::string_view key, std::string_view v) {
  std::int64_t x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return x;
}

int parse_dim(std::string_view key, std::string_view v) {
  const std::int64_t x = parse_int(key, v);
  if (x < 1 || x > 1'000'000) bad_value(key, v, "a positive integer");
  return static_cast<int>(x);
}

std::uint64_t parse_seed(std::string_view key, std::string_view v) {
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "an unsigned integer");
  return x;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

}  // namespace

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.world.planted_sparsity = c.world.dim / 5;
  c.attribute_names = kDefaultAttributeNames;
  return c;
}

EditorOptions TrainConfig::editor_options() const {
  EditorOptions o;
  o.direction_norm = direction_norm;
  o.use_cfc = !ablations.disable_cfc;
  o.use_input_pe = !ablations.disable_input_pe;
  o.use_output_gate = !ablations.disable_output_embedding;
  return o;
}

LossWeights TrainConfig::effective_weights() const {
  LossWeights w = weights;
  if (ablations.disable_direction_loss) w.direction = 0.0;
  if (ablations.disable_sparsity_loss) w.sparsity = 0.0;
  return w;
}

int TrainConfig::attribute_index(std::string_view name) const {
  const auto it = std::find(attribute_names.begin(), attribute_names.end(), name);
  if (it == attribute_names.end()) throw ConfigError("unknown attribute '" + std::string(name) + "'");
  return static_cast<int>(it - attribute_names.begin());
}

void TrainConfig::validate() const {
  try {
    world.validate();
  } catch (const WorldError& e) {
    throw ConfigError(e.what());
  }
  weights.validate();
  if (world.dim % 2 != 0) throw ConfigError("dim must be even for the positional encoding");
  if (static_cast<int>(attribute_names.size()) != world.attributes) {
    throw ConfigError("attribute_names must list exactly " + std::to_string(world.attributes) + " names");
  }
  if (std::set<std::string>(attribute_names.begin(), attribute_names.end()).size() != attribute_names.size()) {
    throw ConfigError("attribute_names must be distinct");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("eps must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (clip_grad_norm < 0.0) throw ConfigError("clip_grad_norm must be >= 0");
}

TrainConfig parse_config(std::string_view text) {
  std::map<std::string, std::string, std::less<>> kv;
  int line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!kKeys.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    if (!kv.emplace(key, value).second) throw ConfigError("duplicate config key '" + key + "'");
  }

  TrainConfig c = TrainConfig::desk();
  auto get = [&](std::string_view key) -> const std::string* {
    const auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };

  if (auto v = get("layers")) c.world.layers = parse_dim("layers", *v);
  if (auto v = get("dim")) c.world.dim = parse_dim("dim", *v);
  c.world.planted_sparsity = c.world.dim / 5 > 0 ? std::optional<int>(c.world.dim / 5) : std::nullopt;
  if (auto v = get("attribute_names")) {
    c.attribute_names.clear();
    for (auto name : split(*v, ',')) {
      if (name.empty()) bad_value("attribute_names", *v, "a comma-separated list of names");
      c.attribute_names.emplace_back(name);
    }
    c.world.attributes = static_cast<int>(c.attribute_names.size());
  }
  if (auto v = get("attributes")) {
    c.world.attributes = parse_dim("attributes", *v);
    if (!get("attribute_names")) {
      c.attribute_names.clear();
      for (int m = 0; m < c.world.attributes; ++m) {
        c.attribute_names.push_back(m < static_cast<int>(kDefaultAttributeNames.size())
                                        ? kDefaultAttributeNames[static_cast<std::size_t>(m)]
                                        : "attr" + std::to_string(m));
      }
    }
  }
  if (auto v = get("image_dim")) c.world.image_dim = parse_dim("image_dim", *v);
  if (auto v = get("identity_dim")) c.world.identity_dim = parse_dim("identity_dim", *v);
  if (auto v = get("layer_weights")) {
    c.world.layer_weights.clear();
    for (auto w : split(*v, ',')) c.world.layer_weights.push_back(parse_double("layer_weights", w));
  }
  if (auto v = get("planted_sparsity")) {
    c.world.planted_sparsity =
        *v == "dense" ? std::nullopt : std::optional<int>(parse_dim("planted_sparsity", *v));
  }
  if (auto v = get("seed")) c.seed = parse_seed("seed", *v);
  c.world.seed = c.seed;
  if (auto v = get("world_seed")) c.world.seed = parse_seed("world_seed", *v);

  if (auto v = get("lambda_class")) c.weights.classification = parse_double("lambda_class", *v);
  if (auto v = get("lambda_nb")) c.weights.neighborhood = parse_double("lambda_nb", *v);
  if (auto v = get("lambda_sparsity")) c.weights.sparsity = parse_double("lambda_sparsity", *v);
  if (auto v = get("lambda_direction")) c.weights.direction = parse_double("lambda_direction", *v);
  if (auto v = get("lambda_id")) c.weights.identity = parse_double("lambda_id", *v);
  if (auto v = get("learning_rate")) c.learning_rate = parse_double("learning_rate", *v);
  if (auto v = get("beta1")) c.beta1 = parse_double("beta1", *v);
  if (auto v = get("beta2")) c.beta2 = parse_double("beta2", *v);
  if (auto v = get("eps")) c.eps = parse_double("eps", *v);
  if (auto v = get("batch_size")) c.batch_size = parse_dim("batch_size", *v);
  if (auto v = get("iterations")) c.iterations = parse_dim("iterations", *v);
  if (auto v = get("disable_direction_loss")) c.ablations.disable_direction_loss = parse_bool("disable_direction_loss", *v);
  if (auto v = get("disable_sparsity_loss")) c.ablations.disable_sparsity_loss = parse_bool("disable_sparsity_loss", *v);
  if (auto v = get("disable_cfc")) c.ablations.disable_cfc = parse_bool("disable_cfc", *v);
  if (auto v = get("disable_input_pe")) c.ablations.disable_input_pe = parse_bool("disable_input_pe", *v);
  if (auto v = get("disable_output_embedding")) {
    c.ablations.disable_output_embedding = parse_bool("disable_output_embedding", *v);
  }
  if (auto v = get("direction_norm")) {
    if (*v == "l2") c.direction_norm = DirectionNorm::L2;
    else if (*v == "l1") c.direction_norm = DirectionNorm::L1;
    else bad_value("direction_norm", *v, "l2 or l1");
  }
  if (auto v = get("target_mode")) {
    if (*v == "toggle") c.target_mode = TargetMode::Toggle;
    else if (*v == "random") c.target_mode = TargetMode::Random;
    else bad_value("target_mode", *v, "toggle or random");
  }
  if (auto v = get("clip_grad_norm")) c.clip_grad_norm = parse_double("clip_grad_norm", *v);

  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_text(const TrainConfig& c) {
  std::ostringstream os;
  auto b = [](bool x) { return x ? "true" : "false"; };
  os << "layers = " << c.world.layers << '\n';
  os << "dim = " << c.world.dim << '\n';
  os << "attributes = " << c.world.attributes << '\n';
  os << "attribute_names = ";
  for (std::size_t i = 0; i < c.attribute_names.size(); ++i) os << (i ? "," : "") << c.attribute_names[i];
  os << '\n';
  os << "image_dim = " << c.world.image_dim << '\n';
  os << "identity_dim = " << c.world.identity_dim << '\n';
  if (!c.world.layer_weights.empty()) {
    os << "layer_weights = ";
    for (std::size_t i = 0; i < c.world.layer_weights.size(); ++i) {
      os << (i ? "," : "") << format_double(c.world.layer_weights[i]);
    }
    os << '\n';
  }
  os << "planted_sparsity = "
     << (c.world.planted_sparsity ? std::to_string(*c.world.planted_sparsity) : std::string("dense")) << '\n';
  os << "seed = " << c.seed << '\n';
  os << "world_seed = " << c.world.seed << '\n';
  os << "lambda_class = " << format_double(c.weights.classification) << '\n';
  os << "lambda_nb = " << format_double(c.weights.neighborhood) << '\n';
  os << "lambda_sparsity = " << format_double(c.weights.sparsity) << '\n';
  os << "lambda_direction = " << format_double(c.weights.direction) << '\n';
  os << "lambda_id = " << format_double(c.weights.identity) << '\n';
  os << "learning_rate = " << format_double(c.learning_rate) << '\n';
  os << "beta1 = " << format_double(c.beta1) << '\n';
  os << "beta2 = " << format_double(c.beta2) << '\n';
  os << "eps = " << format_double(c.eps) << '\n';
  os << "batch_size = " << c.batch_size << '\n';
  os << "iterations = " << c.iterations << '\n';
  os << "disable_direction_loss = " << b(c.ablations.disable_direction_loss) << '\n';
  os << "disable_sparsity_loss = " << b(c.ablations.disable_sparsity_loss) << '\n';
  os << "disable_cfc = " << b(c.ablations.disable_cfc) << '\n';
  os << "disable_input_pe = " << b(c.ablations.disable_input_pe) << '\n';
  os << "disable_output_embedding = " << b(c.ablations.disable_output_embedding) << '\n';
  os << "direction_norm = " << (c.direction_norm == DirectionNorm::L2 ? "l2" : "l1") << '\n';
  os << "target_mode = " << (c.target_mode == TargetMode::Toggle ? "toggle" : "random") << '\n';
  os << "clip_grad_norm = " << format_double(c.clip_grad_norm) << '\n';
  return os.str();
}

}  // namespace idstyle
