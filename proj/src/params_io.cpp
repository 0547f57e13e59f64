#include "cmrf/params_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace cmrf {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("line " + std::to_string(number) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw std::runtime_error("line " + std::to_string(number) + ": empty key");
    if (!kv.emplace(key, trim(line.substr(eq + 1))).second)
      throw std::runtime_error("line " + std::to_string(number) + ": duplicate key " + key);
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoErrorKind::FileNotFound, path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_key_values(text.str());
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

double kv_double(const KeyValues& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw std::runtime_error("missing key " + key);
  double x = 0.0;
  const char* end = it->second.data() + it->second.size();
  const auto [ptr, ec] = std::from_chars(it->second.data(), end, x);
  if (ec != std::errc() || ptr != end) throw std::runtime_error("key " + key + ": not a number: " + it->second);
  return x;
}

long long kv_int(const KeyValues& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw std::runtime_error("missing key " + key);
  long long x = 0;
  const char* end = it->second.data() + it->second.size();
  const auto [ptr, ec] = std::from_chars(it->second.data(), end, x);
  if (ec != std::errc() || ptr != end) throw std::runtime_error("key " + key + ": not an integer: " + it->second);
  return x;
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

namespace {

struct Field {
  const char* key;
  std::function<void(RunConfig&, const KeyValues&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Member>
Field real(const char* key, Member member) {
  return {key, [member](RunConfig& c, const KeyValues& kv, const std::string& k) { member(c) = kv_double(kv, k); },
          [member](const RunConfig& c) { return format_double(member(const_cast<RunConfig&>(c))); }};
}

template <typename Member>
Field integer(const char* key, Member member) {
  return {key,
          [member](RunConfig& c, const KeyValues& kv, const std::string& k) {
            member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(kv_int(kv, k));
          },
          [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> list = {
      real("K", [](RunConfig& c) -> double& { return c.model.K; }),
      real("lambda_occ", [](RunConfig& c) -> double& { return c.model.lambda_occ; }),
      real("lambda_hinge", [](RunConfig& c) -> double& { return c.model.lambda_hinge; }),
      real("lambda_imp", [](RunConfig& c) -> double& { return c.model.lambda_imp; }),
      real("lambda_col", [](RunConfig& c) -> double& { return c.model.lambda_col; }),
      real("kappa", [](RunConfig& c) -> double& { return c.model.kappa; }),
      real("w_seg", [](RunConfig& c) -> double& { return c.model.w.seg; }),
      real("w_bdy1", [](RunConfig& c) -> double& { return c.model.w.bdy1; }),
      real("w_bdy2", [](RunConfig& c) -> double& { return c.model.w.bdy2; }),
      real("w_jct3", [](RunConfig& c) -> double& { return c.model.w.jct3; }),
      real("w_crs4", [](RunConfig& c) -> double& { return c.model.w.crs4; }),
      real("w_col", [](RunConfig& c) -> double& { return c.model.w.col; }),
      integer("particles", [](RunConfig& c) -> int& { return c.pcbp.n_particles; }),
      integer("outer_iters", [](RunConfig& c) -> int& { return c.pcbp.n_outer_iters; }),
      real("sigma_alpha0", [](RunConfig& c) -> double& { return c.pcbp.sigma_alpha0; }),
      real("sigma_beta0", [](RunConfig& c) -> double& { return c.pcbp.sigma_beta0; }),
      real("sigma_gamma0", [](RunConfig& c) -> double& { return c.pcbp.sigma_gamma0; }),
      real("sigma_decay", [](RunConfig& c) -> double& { return c.pcbp.decay; }),
      integer("bp_max_sweeps", [](RunConfig& c) -> int& { return c.pcbp.bp_max_sweeps; }),
      real("bp_tolerance", [](RunConfig& c) -> double& { return c.pcbp.bp_tolerance; }),
      integer("seed", [](RunConfig& c) -> std::uint64_t& { return c.pcbp.seed; }),
      integer("superpixels", [](RunConfig& c) -> int& { return c.slic.n_target; }),
      real("compactness", [](RunConfig& c) -> double& { return c.slic.compactness; }),
      integer("slic_iterations", [](RunConfig& c) -> int& { return c.slic.iterations; }),
      integer("max_disparity", [](RunConfig& c) -> int& { return c.match.max_disparity; }),
      integer("block_radius", [](RunConfig& c) -> int& { return c.match.block_radius; }),
      integer("n_paths", [](RunConfig& c) -> int& { return c.match.n_paths; }),
      integer("p1", [](RunConfig& c) -> int& { return c.match.p1; }),
      integer("p2", [](RunConfig& c) -> int& { return c.match.p2; }),
      real("lr_threshold", [](RunConfig& c) -> double& { return c.match.lr_threshold; }),
      real("uniqueness", [](RunConfig& c) -> double& { return c.match.uniqueness; }),
  };
  return list;
}

}  // namespace

void apply_overrides(RunConfig& cfg, const KeyValues& kv) {
  for (const auto& [key, value] : kv) {
    const auto& list = fields();
    const auto it = std::find_if(list.begin(), list.end(), [&](const Field& f) { return key == f.key; });
    if (it == list.end()) throw std::runtime_error("unknown configuration key: " + key);
    it->set(cfg, kv, key);
  }
  try {
    check(cfg.model);
    check(cfg.pcbp);
    check(cfg.match);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(e.what());
  }
  if (cfg.slic.n_target < 1 || cfg.slic.iterations < 1 || !(cfg.slic.compactness > 0.0))
    throw std::runtime_error("superpixels, slic_iterations and compactness must be positive");
}

RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig cfg;
  apply_overrides(cfg, read_key_values(path));
  return cfg;
}

std::string format_run_config(const RunConfig& cfg) {
  std::string out;
  for (const Field& f : fields()) out += std::string(f.key) + " = " + f.get(cfg) + "\n";
  return out;
}

}  // namespace cmrf
