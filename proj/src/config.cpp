#include "neuclust/config.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "neuclust/error.hpp"
#include "neuclust/textio.hpp"

namespace neuclust::config {

namespace {

using textio::trim;

std::string where(std::size_t line, std::string_view key) {
  return "config line " + std::to_string(line) + " (" + std::string(key) + ")";
}

bool parse_bool(std::string_view v, const std::string& at) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidArgument(at + ": expected true/false, got '" + std::string(v) + "'");
}

double to_double(std::string_view v, const std::string& at) {
  try {
    return textio::parse_double(v, at);
  } catch (const ParseError& e) {
    throw InvalidArgument(e.what());
  }
}

std::size_t to_size(std::string_view v, const std::string& at) {
  long long x = 0;
  try {
    x = textio::parse_int(v, at);
  } catch (const ParseError& e) {
    throw InvalidArgument(e.what());
  }
  if (x < 0) throw InvalidArgument(at + ": must be >= 0");
  return static_cast<std::size_t>(x);
}

using Setter = std::function<void(std::string_view value, const std::string& at)>;

std::map<std::string, Setter, std::less<>> policy_setters(policy::PolicyConfig& c, bool& k_set) {
  std::map<std::string, Setter, std::less<>> s;
  auto size_field = [](std::size_t& f) { return [&f](std::string_view v, const std::string& at) { f = to_size(v, at); }; };
  auto real_field = [](double& f) { return [&f](std::string_view v, const std::string& at) { f = to_double(v, at); }; };
  s["K"] = [&c, &k_set](std::string_view v, const std::string& at) {
    c.K = to_size(v, at);
    k_set = true;
  };
  s["M"] = size_field(c.M);
  s["lambda1"] = real_field(c.lambda1);
  s["lambda2"] = real_field(c.lambda2);
  s["eta1"] = real_field(c.eta1);
  s["eta2"] = real_field(c.eta2);
  s["J"] = size_field(c.J);
  s["m"] = size_field(c.m);
  s["n"] = size_field(c.n);
  s["L"] = size_field(c.L);
  s["Lm"] = size_field(c.Lm);
  s["i_c"] = size_field(c.i_c);
  s["gamma"] = real_field(c.gamma_const);
  s["gamma_mode"] = [&c](std::string_view v, const std::string& at) {
    if (v == "constant") c.gamma_mode = policy::GammaMode::Constant;
    else if (v == "theoretical") c.gamma_mode = policy::GammaMode::Theoretical;
    else throw InvalidArgument(at + ": expected constant or theoretical");
  };
  s["theory.zeta"] = real_field(c.theory.zeta);
  s["theory.S"] = real_field(c.theory.S);
  s["theory.delta"] = real_field(c.theory.delta);
  s["theory.C1"] = real_field(c.theory.C1);
  s["theory.C_gamma1"] = real_field(c.theory.C_gamma1);
  s["theory.C_gamma2"] = real_field(c.theory.C_gamma2);
  s["theory.C_gamma3"] = real_field(c.theory.C_gamma3);
  s["clustering"] = [&c](std::string_view v, const std::string& at) {
    if (v == "offline") c.clustering_mode = policy::ClusteringMode::Offline;
    else if (v == "online") c.clustering_mode = policy::ClusteringMode::Online;
    else throw InvalidArgument(at + ": expected online or offline");
  };
  s["score_f_once"] = [&c](std::string_view v, const std::string& at) { c.score_f_once = parse_bool(v, at); };
  s["loss_scale"] = [&c](std::string_view v, const std::string& at) {
    if (v == "mean") c.loss_scale = neural::LossScale::Mean;
    else if (v == "sum") c.loss_scale = neural::LossScale::Sum;
    else throw InvalidArgument(at + ": expected mean or sum");
  };
  s["batch_size"] = size_field(c.batch_size);
  s["refresh_interval"] = size_field(c.refresh_interval);
  s["alpha"] = real_field(c.alpha);
  return s;
}

env::Observation parse_observation(std::string_view v, const std::string& at) {
  if (v == "joint") return env::Observation::Joint;
  if (v == "masked") return env::Observation::ItemMasked;
  if (v == "profile") return env::Observation::Profile;
  throw InvalidArgument(at + ": expected joint, masked or profile");
}

struct PolicyDraft {
  NamedPolicy p;
  bool kind_set = false;
  bool k_set = false;
  std::size_t order = 0;
};

}  // namespace

std::vector<std::uint64_t> parse_uint_list(std::string_view text) {
  std::vector<std::uint64_t> out;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    const std::string t = trim(item);
    if (t.empty()) throw InvalidArgument("empty entry in list '" + std::string(text) + "'");
    const auto dots = t.find("..");
    if (dots != std::string::npos) {
      const auto lo = to_size(trim(t.substr(0, dots)), "range start");
      const auto hi = to_size(trim(t.substr(dots + 2)), "range end");
      if (hi < lo) throw InvalidArgument("descending range '" + t + "'");
      for (auto v = lo; v <= hi; ++v) out.push_back(v);
    } else {
      out.push_back(to_size(t, "list entry"));
    }
  }
  if (out.empty()) throw InvalidArgument("empty list");
  return out;
}

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  std::map<std::string, PolicyDraft, std::less<>> drafts;
  std::vector<std::string> listed;
  bool policies_listed = false;
  std::set<std::string, std::less<>> seen_keys;

  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string at = where(line_no, key);
    if (key.empty()) throw InvalidArgument(at + ": empty key");
    if (!seen_keys.insert(key).second) throw InvalidArgument(at + ": duplicate key");

    if (key.rfind("policy.", 0) == 0) {
      const std::string rest = key.substr(7);
      const auto dot = rest.find('.');
      if (dot == std::string::npos || dot == 0) throw InvalidArgument(at + ": expected policy.<name>.<field>");
      const std::string name = rest.substr(0, dot);
      const std::string field = rest.substr(dot + 1);
      auto [it, fresh] = drafts.try_emplace(name);
      if (fresh) {
        it->second.p.name = name;
        it->second.order = drafts.size();
      }
      auto& d = it->second;
      if (field == "kind") {
        d.p.kind = policy::parse_policy_kind(value);
        d.kind_set = true;
        continue;
      }
      auto setters = policy_setters(d.p.cfg, d.k_set);
      const auto s = setters.find(field);
      if (s == setters.end()) throw InvalidArgument(at + ": unknown policy field '" + field + "'");
      s->second(value, at);
      continue;
    }

    if (key == "run.T") cfg.T = to_size(value, at);
    else if (key == "run.seeds") cfg.seeds = parse_uint_list(value);
    else if (key == "run.out") cfg.out_dir = value;
    else if (key == "run.svg") cfg.emit_svg = parse_bool(value, at);
    else if (key == "run.policies") {
      policies_listed = true;
      std::istringstream names(value);
      std::string n;
      while (std::getline(names, n, ',')) listed.push_back(trim(n));
    }
    else if (key == "env.source") {
      if (value == "synthetic") cfg.source = EnvSource::Synthetic;
      else if (value == "files") cfg.source = EnvSource::Files;
      else throw InvalidArgument(at + ": expected synthetic or files");
    }
    else if (key == "env.dir") {
      std::filesystem::path p = value;
      cfg.env_dir = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    else if (key == "env.K") cfg.env.K = to_size(value, at);
    else if (key == "env.arrival") {
      if (value == "uniform") cfg.env.arrival = env::Arrival::Uniform;
      else if (value == "fixed") cfg.env.arrival = env::Arrival::FixedSequence;
      else throw InvalidArgument(at + ": expected uniform or fixed");
    }
    else if (key == "env.sequence") {
      cfg.env.fixed_sequence.clear();
      for (auto v : parse_uint_list(value)) cfg.env.fixed_sequence.push_back(static_cast<std::size_t>(v));
    }
    else if (key == "env.threshold") cfg.env.threshold_frac = to_double(value, at);
    else if (key == "env.online_updates") cfg.env.online_updates = parse_bool(value, at);
    else if (key == "env.rating_scale") cfg.env.rating_scale = to_double(value, at);
    else if (key == "env.observation") cfg.env.observation = parse_observation(value, at);
    else if (key == "env.observation_scale") cfg.env.observation_scale = to_double(value, at);
    else if (key == "synthetic.arms") cfg.synthetic.arms = to_size(value, at);
    else if (key == "synthetic.dim") cfg.synthetic.dim = to_size(value, at);
    else if (key == "synthetic.clusters") cfg.synthetic.planted_clusters = to_size(value, at);
    else if (key == "synthetic.items") cfg.synthetic.items = to_size(value, at);
    else if (key == "synthetic.min_genres") cfg.synthetic.min_item_genres = to_size(value, at);
    else if (key == "synthetic.max_genres") cfg.synthetic.max_item_genres = to_size(value, at);
    else if (key == "synthetic.noise") cfg.synthetic.noise = to_double(value, at);
    else if (key == "synthetic.unrated_prob") cfg.synthetic.unrated_prob = to_double(value, at);
    else if (key == "synthetic.noise_on_unrated") cfg.synthetic.noise_on_unrated = parse_bool(value, at);
    else if (key == "synthetic.min_rating") cfg.synthetic.min_rating = to_double(value, at);
    else if (key == "synthetic.max_rating") cfg.synthetic.max_rating = to_double(value, at);
    else if (key == "synthetic.seed") {
      cfg.synthetic.seed = to_size(value, at);
      cfg.synthetic_seed_fixed = true;
    }
    else if (key == "wcss.max_iter") cfg.wcss_max_iter = to_size(value, at);
    else if (key == "wcss.restarts") cfg.wcss_restarts = to_size(value, at);
    else throw InvalidArgument(at + ": unknown key");
  }

  if (!policies_listed) {
    std::vector<const PolicyDraft*> ordered;
    for (const auto& [n, d] : drafts) ordered.push_back(&d);
    std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->order < b->order; });
    for (auto* d : ordered) listed.push_back(d->p.name);
  }
  std::set<std::string, std::less<>> unique;
  for (const auto& name : listed) {
    if (name.empty()) throw InvalidArgument("run.policies: empty policy name");
    if (!unique.insert(name).second) throw InvalidArgument("run.policies: duplicate policy '" + name + "'");
    auto it = drafts.find(name);
    PolicyDraft d;
    if (it != drafts.end()) d = it->second;
    d.p.name = name;
    if (!d.kind_set) d.p.kind = policy::parse_policy_kind(name);
    if (!d.k_set) d.p.cfg.K = cfg.env.K;
    cfg.policies.push_back(d.p);
  }
  for (const auto& [n, d] : drafts)
    if (!unique.contains(n)) throw InvalidArgument("policy '" + n + "' configured but not in run.policies");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(textio::read_file(path), path.parent_path());
}

void validate(const RunConfig& cfg) {
  if (cfg.T == 0) throw InvalidArgument("run.T must be >= 1");
  if (cfg.seeds.empty()) throw InvalidArgument("run.seeds must be nonempty");
  if (cfg.policies.empty()) throw InvalidArgument("no policies configured");
  if (cfg.source == EnvSource::Files && cfg.env_dir.empty())
    throw InvalidArgument("env.source = files needs env.dir");
  for (const auto& p : cfg.policies) {
    if (p.cfg.K != cfg.env.K)
      throw InvalidArgument("policy '" + p.name + "': K=" + std::to_string(p.cfg.K) +
                            " differs from env.K=" + std::to_string(cfg.env.K));
    try {
      policy::validate(p.cfg, p.kind);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("policy '" + p.name + "': " + e.what());
    }
  }
}

}  // namespace neuclust::config
