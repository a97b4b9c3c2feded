#include "pbcert/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace pbcert {

std::string_view to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::f_pbq: return "f_pbq";
    case ObjectiveKind::f_rts: return "f_rts";
    case ObjectiveKind::f_mb: return "f_mb";
    case ObjectiveKind::tf_pbq: return "tf_pbq";
    case ObjectiveKind::tf_rts: return "tf_rts";
    case ObjectiveKind::tf_mb: return "tf_mb";
  }
  return "unknown";
}

ObjectiveKind parse_objective_kind(std::string_view name) {
  for (ObjectiveKind kind : {ObjectiveKind::f_pbq, ObjectiveKind::f_rts, ObjectiveKind::f_mb,
                             ObjectiveKind::tf_pbq, ObjectiveKind::tf_rts, ObjectiveKind::tf_mb}) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown objective: " + std::string(name));
}

BoundKind objective_bound(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::f_pbq:
    case ObjectiveKind::tf_pbq:
      return BoundKind::PBQ;
    case ObjectiveKind::f_rts:
    case ObjectiveKind::tf_rts:
      return BoundKind::RTS;
    case ObjectiveKind::f_mb:
    case ObjectiveKind::tf_mb:
      return BoundKind::MaurerInverse;
  }
  return BoundKind::MaurerInverse;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("config: " + field + " " + why);
  };
  if (arch.size() < 2) fail("arch", "needs at least input and output sizes");
  for (std::size_t s : arch) {
    if (s == 0) fail("arch", "sizes must be positive");
  }
  if (!(sigma0 > 0.0)) fail("sigma0", "must be > 0");
  if (!(eta > 0.0)) fail("eta", "must be > 0");
  if (epochs == 0) fail("epochs", "must be >= 1");
  if (batch_size == 0) fail("batch_size", "must be >= 1");
  if (!(learning_rate > 0.0)) fail("learning_rate", "must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum", "must lie in [0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) fail("delta", "must lie in (0, 1)");
  if (!(delta_mc > 0.0 && delta_mc < 1.0)) fail("delta_mc", "must lie in (0, 1)");
  if (!(delta + delta_mc < 1.0)) fail("delta_mc", "delta + delta_mc must be < 1");
  if (mc_samples < 100) fail("mc_samples", "must be >= 100");
  if (!(p_min > 0.0 && p_min < 1.0 / static_cast<double>(arch.back()))) {
    fail("p_min", "must lie in (0, 1/classes)");
  }
  if (n_train < 8) fail("n_train", "must be >= 8");
  if (slope_window == 0) fail("slope_window", "must be >= 1");
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("config: cannot parse " + key + " = '" + value + "'");
  }
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& value) {
  std::vector<std::size_t> sizes;
  std::string token;
  for (char ch : value + ",") {
    if (ch == ',' || ch == '-' || ch == 'x') {
      const std::string t = trim(token);
      if (!t.empty()) sizes.push_back(parse_number<std::size_t>("arch", t));
      token.clear();
    } else {
      token += ch;
    }
  }
  return sizes;
}

}  // namespace

TrainConfig parse_config(std::istream& in) {
  TrainConfig c;
  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"arch", [&](const std::string& v) { c.arch = parse_sizes(v); }},
      {"sigma0", [&](const std::string& v) { c.sigma0 = parse_number<double>("sigma0", v); }},
      {"objective", [&](const std::string& v) { c.objective = parse_objective_kind(v); }},
      {"eta", [&](const std::string& v) { c.eta = parse_number<double>("eta", v); }},
      {"epochs", [&](const std::string& v) { c.epochs = parse_number<std::size_t>("epochs", v); }},
      {"batch_size",
       [&](const std::string& v) { c.batch_size = parse_number<std::size_t>("batch_size", v); }},
      {"learning_rate",
       [&](const std::string& v) { c.learning_rate = parse_number<double>("learning_rate", v); }},
      {"momentum", [&](const std::string& v) { c.momentum = parse_number<double>("momentum", v); }},
      {"seed", [&](const std::string& v) { c.seed = parse_number<std::uint64_t>("seed", v); }},
      {"delta", [&](const std::string& v) { c.delta = parse_number<double>("delta", v); }},
      {"delta_mc", [&](const std::string& v) { c.delta_mc = parse_number<double>("delta_mc", v); }},
      {"mc_samples",
       [&](const std::string& v) { c.mc_samples = parse_number<std::size_t>("mc_samples", v); }},
      {"p_min", [&](const std::string& v) { c.p_min = parse_number<double>("p_min", v); }},
      {"n_train",
       [&](const std::string& v) { c.n_train = parse_number<std::size_t>("n_train", v); }},
      {"slope_window",
       [&](const std::string& v) { c.slope_window = parse_number<std::size_t>("slope_window", v); }},
      {"train_images", [&](const std::string& v) { c.train_images = v; }},
      {"train_labels", [&](const std::string& v) { c.train_labels = v; }},
  };

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" +
                                  key + "'");
    }
    it->second(value);
  }
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config file not found: " + path.string());
  return parse_config(in);
}

void write_config(std::ostream& out, const TrainConfig& c) {
  auto g17 = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "arch = ";
  for (std::size_t i = 0; i < c.arch.size(); ++i) out << (i ? "," : "") << c.arch[i];
  out << "\nsigma0 = " << g17(c.sigma0) << "\nobjective = " << to_string(c.objective)
      << "\neta = " << g17(c.eta) << "\nepochs = " << c.epochs << "\nbatch_size = " << c.batch_size
      << "\nlearning_rate = " << g17(c.learning_rate) << "\nmomentum = " << g17(c.momentum)
      << "\nseed = " << c.seed << "\ndelta = " << g17(c.delta) << "\ndelta_mc = " << g17(c.delta_mc)
      << "\nmc_samples = " << c.mc_samples << "\np_min = " << g17(c.p_min)
      << "\nn_train = " << c.n_train << "\nslope_window = " << c.slope_window << '\n';
  if (!c.train_images.empty()) out << "train_images = " << c.train_images << '\n';
  if (!c.train_labels.empty()) out << "train_labels = " << c.train_labels << '\n';
}

}  // namespace pbcert
