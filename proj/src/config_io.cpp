#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hetfl/errors.hpp"
#include "hetfl/reporting.hpp"

namespace hetfl {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ValidationError("config key '" + key + "' expects a real, got '" + text + "'");
  return value;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& text) {
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError("config key '" + key + "' expects a non-negative integer, got '" + text + "'");
  }
  return value;
}

int to_int(const std::string& key, const std::string& text) {
  int value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ValidationError("config key '" + key + "' expects an integer, got '" + text + "'");
  return value;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ValidationError("config key '" + key + "' expects true or false, got '" + text + "'");
}

std::string real_text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct KeyBinding {
  const char* key;
  bool required;
  std::function<void(FederationConfig&, const std::string&)> set;
  std::function<std::string(const FederationConfig&)> get;
};

const std::vector<KeyBinding>& bindings() {
  using C = FederationConfig;
  using S = std::string;
  static const std::vector<KeyBinding> table = {
      {"num_clients", true, [](C& c, const S& v) { c.num_clients = to_unsigned("num_clients", v); },
       [](const C& c) { return std::to_string(c.num_clients); }},
      {"seed", true, [](C& c, const S& v) { c.seed = to_unsigned("seed", v); },
       [](const C& c) { return std::to_string(c.seed); }},
      {"rounds", false, [](C& c, const S& v) { c.rounds = to_int("rounds", v); },
       [](const C& c) { return std::to_string(c.rounds); }},
      {"local_epochs", false, [](C& c, const S& v) { c.local_epochs = to_int("local_epochs", v); },
       [](const C& c) { return std::to_string(c.local_epochs); }},
      {"learning_rate", false, [](C& c, const S& v) { c.learning_rate = to_double("learning_rate", v); },
       [](const C& c) { return real_text(c.learning_rate); }},
      {"batch_size", false, [](C& c, const S& v) { c.batch_size = to_unsigned("batch_size", v); },
       [](const C& c) { return std::to_string(c.batch_size); }},
      {"lambda", false, [](C& c, const S& v) { c.lambda = to_double("lambda", v); },
       [](const C& c) { return real_text(c.lambda); }},
      {"noise_rate", false, [](C& c, const S& v) { c.noise_rate = to_double("noise_rate", v); },
       [](const C& c) { return real_text(c.noise_rate); }},
      {"noise_kind", false,
       [](C& c, const S& v) {
         try {
           c.noise_kind = parse_noise_kind(v);
         } catch (const ConfigError& e) {
           throw ValidationError(std::string("config key 'noise_kind': ") + e.what());
         }
       },
       [](const C& c) { return to_string(c.noise_kind); }},
      {"gamma", false, [](C& c, const S& v) { c.gamma = to_double("gamma", v); },
       [](const C& c) { return real_text(c.gamma); }},
      {"architecture", false, [](C& c, const S& v) { c.architecture = v; }, [](const C& c) { return c.architecture; }},
      {"dataset", false, [](C& c, const S& v) { c.dataset = v; }, [](const C& c) { return c.dataset; }},
      {"synthetic_classes", false, [](C& c, const S& v) { c.synthetic_classes = to_unsigned("synthetic_classes", v); },
       [](const C& c) { return std::to_string(c.synthetic_classes); }},
      {"synthetic_dim", false, [](C& c, const S& v) { c.synthetic_dim = to_unsigned("synthetic_dim", v); },
       [](const C& c) { return std::to_string(c.synthetic_dim); }},
      {"synthetic_samples", false, [](C& c, const S& v) { c.synthetic_samples = to_unsigned("synthetic_samples", v); },
       [](const C& c) { return std::to_string(c.synthetic_samples); }},
      {"synthetic_separation", false,
       [](C& c, const S& v) { c.synthetic_separation = to_double("synthetic_separation", v); },
       [](const C& c) { return real_text(c.synthetic_separation); }},
      {"test_fraction", false, [](C& c, const S& v) { c.test_fraction = to_double("test_fraction", v); },
       [](const C& c) { return real_text(c.test_fraction); }},
      {"public_fraction", false, [](C& c, const S& v) { c.public_fraction = to_double("public_fraction", v); },
       [](const C& c) { return real_text(c.public_fraction); }},
      {"temperature", false, [](C& c, const S& v) { c.temperature = to_double("temperature", v); },
       [](const C& c) { return real_text(c.temperature); }},
      {"use_symmetric_loss", false, [](C& c, const S& v) { c.use_symmetric_loss = to_bool("use_symmetric_loss", v); },
       [](const C& c) { return std::string(c.use_symmetric_loss ? "true" : "false"); }},
      {"use_collaboration", false, [](C& c, const S& v) { c.use_collaboration = to_bool("use_collaboration", v); },
       [](const C& c) { return std::string(c.use_collaboration ? "true" : "false"); }},
  };
  return table;
}

const KeyBinding* find_binding(const std::string& key) {
  for (const auto& b : bindings()) {
    if (key == b.key) return &b;
  }
  return nullptr;
}

}  // namespace

FederationConfig parse_config_text(const std::string& text) {
  FederationConfig config;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected `key = value`");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const KeyBinding* binding = find_binding(key);
    if (!binding) throw ValidationError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) {
      throw ValidationError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    if (value.empty()) throw ValidationError("config key '" + key + "' has no value");
    binding->set(config, value);
  }
  for (const auto& b : bindings()) {
    if (b.required && !seen.contains(b.key)) {
      throw ValidationError(std::string("config key '") + b.key + "' is required");
    }
  }
  config.validate();
  return config;
}

FederationConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

std::string format_config(const FederationConfig& config) {
  std::string out;
  for (const auto& b : bindings()) out += std::string(b.key) + " = " + b.get(config) + "\n";
  return out;
}

std::string config_to_json(const FederationConfig& config) {
  nlohmann::ordered_json j;
  j["num_clients"] = config.num_clients;
  j["seed"] = config.seed;
  j["rounds"] = config.rounds;
  j["local_epochs"] = config.local_epochs;
  j["learning_rate"] = config.learning_rate;
  j["batch_size"] = config.batch_size;
  j["lambda"] = config.lambda;
  j["noise_rate"] = config.noise_rate;
  j["noise_kind"] = to_string(config.noise_kind);
  j["gamma"] = config.gamma;
  j["architecture"] = config.architecture;
  j["dataset"] = config.dataset;
  j["synthetic_classes"] = config.synthetic_classes;
  j["synthetic_dim"] = config.synthetic_dim;
  j["synthetic_samples"] = config.synthetic_samples;
  j["synthetic_separation"] = config.synthetic_separation;
  j["test_fraction"] = config.test_fraction;
  j["public_fraction"] = config.public_fraction;
  j["temperature"] = config.temperature;
  j["use_symmetric_loss"] = config.use_symmetric_loss;
  j["use_collaboration"] = config.use_collaboration;
  j["method"] = method_name(config);
  return j.dump(2) + "\n";
}

FederationConfig config_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config json: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("config json must be an object");
  FederationConfig c;
  try {
    c.num_clients = j.at("num_clients").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.rounds = j.at("rounds").get<int>();
    c.local_epochs = j.at("local_epochs").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.lambda = j.at("lambda").get<double>();
    c.noise_rate = j.at("noise_rate").get<double>();
    c.noise_kind = parse_noise_kind(j.at("noise_kind").get<std::string>());
    c.gamma = j.at("gamma").get<double>();
    c.architecture = j.at("architecture").get<std::string>();
    c.dataset = j.at("dataset").get<std::string>();
    c.synthetic_classes = j.at("synthetic_classes").get<std::size_t>();
    c.synthetic_dim = j.at("synthetic_dim").get<std::size_t>();
    c.synthetic_samples = j.at("synthetic_samples").get<std::size_t>();
    c.synthetic_separation = j.at("synthetic_separation").get<double>();
    c.test_fraction = j.at("test_fraction").get<double>();
    c.public_fraction = j.at("public_fraction").get<double>();
    c.temperature = j.at("temperature").get<double>();
    c.use_symmetric_loss = j.at("use_symmetric_loss").get<bool>();
    c.use_collaboration = j.at("use_collaboration").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config json: ") + e.what());
  }
  return c;
}

}  // namespace hetfl
