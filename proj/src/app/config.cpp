#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <variant>

#include <openssl/evp.h>

#include "mfk/app.hpp"
#include "mfk/error.hpp"
#include "mfk/expression.hpp"

namespace mfk::app {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::ConfigInvalid, what); }

using Scalar = std::variant<std::string, double, bool>;
struct Value {
  bool is_array = false;
  std::vector<Scalar> items;
  int line = 0;
};

std::string trim(std::string_view s) {
  size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  return std::string(s.substr(a, b - a));
}

class LineParser {
 public:
  LineParser(std::string_view text, int line) : s_(text), line_(line) {}

  Value value() {
    Value v;
    v.line = line_;
    skip_ws();
    if (peek() == '[') {
      ++pos_;
      v.is_array = true;
      skip_ws();
      if (peek() == ']') {
        ++pos_;
      } else {
        for (;;) {
          v.items.push_back(scalar());
          skip_ws();
          if (peek() == ',') {
            ++pos_;
            skip_ws();
            if (peek() == ']') {  // trailing comma
              ++pos_;
              break;
            }
            continue;
          }
          if (peek() == ']') {
            ++pos_;
            break;
          }
          fail("expected ',' or ']' in array");
        }
      }
    } else {
      v.items.push_back(scalar());
    }
    skip_ws();
    if (peek() == '#') pos_ = s_.size();
    if (pos_ != s_.size()) fail("trailing characters after value");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { invalid("line " + std::to_string(line_) + ": " + what); }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
  }

  Scalar scalar() {
    skip_ws();
    const char c = peek();
    if (c == '"') return string();
    if (s_.compare(pos_, 4, "true") == 0) {
      pos_ += 4;
      return true;
    }
    if (s_.compare(pos_, 5, "false") == 0) {
      pos_ += 5;
      return false;
    }
    size_t end = pos_;
    while (end < s_.size() && std::string_view("+-.0123456789eE_").find(s_[end]) != std::string_view::npos) ++end;
    std::string digits;
    for (size_t i = pos_; i < end; ++i)
      if (s_[i] != '_') digits.push_back(s_[i]);
    if (!digits.empty() && digits[0] == '+') digits.erase(0, 1);
    double d = 0.0;
    const auto r = std::from_chars(digits.data(), digits.data() + digits.size(), d);
    if (digits.empty() || r.ec != std::errc() || r.ptr != digits.data() + digits.size()) fail("malformed value");
    pos_ = end;
    return d;
  }

  std::string string() {
    ++pos_;
    std::string out;
    for (;;) {
      if (pos_ >= s_.size()) fail("unterminated string");
      const char c = s_[pos_++];
      if (c == '"') return out;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (pos_ >= s_.size()) fail("unterminated escape");
      const char e = s_[pos_++];
      switch (e) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        default: fail(std::string("unsupported escape \\") + e);
      }
    }
  }

  std::string_view s_;
  int line_;
  size_t pos_ = 0;
};

std::map<std::string, Value> parse_pairs(std::string_view text) {
  std::map<std::string, Value> out;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string t = trim(raw);
    if (t.empty() || t[0] == '#') continue;
    if (t[0] == '[') invalid("line " + std::to_string(line) + ": tables are not supported (flat keys only)");
    const size_t eq = t.find('=');
    if (eq == std::string::npos) invalid("line " + std::to_string(line) + ": expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty() || key.find_first_not_of("abcdefghijklmnopqrstuvwxyzJN0123456789_") != std::string::npos)
      invalid("line " + std::to_string(line) + ": bad key '" + key + "'");
    if (out.count(key)) invalid("line " + std::to_string(line) + ": duplicate key '" + key + "'");
    out.emplace(key, LineParser(std::string_view(t).substr(eq + 1), line).value());
  }
  return out;
}

std::string where(const std::string& key, const Value& v) { return "line " + std::to_string(v.line) + ": " + key; }

const Scalar& single(const std::string& key, const Value& v) {
  if (v.is_array || v.items.size() != 1) invalid(where(key, v) + " must not be an array");
  return v.items[0];
}

double as_double(const std::string& key, const Scalar& s, const Value& v) {
  if (auto d = std::get_if<double>(&s)) return *d;
  invalid(where(key, v) + " must be a number");
}

int64_t as_int(const std::string& key, const Scalar& s, const Value& v) {
  const double d = as_double(key, s, v);
  if (d != std::floor(d) || std::abs(d) > 9.0e15) invalid(where(key, v) + " must be an integer");
  return static_cast<int64_t>(d);
}

std::string as_string(const std::string& key, const Scalar& s, const Value& v) {
  if (auto p = std::get_if<std::string>(&s)) return *p;
  invalid(where(key, v) + " must be a string");
}

bool as_bool(const std::string& key, const Scalar& s, const Value& v) {
  if (auto p = std::get_if<bool>(&s)) return *p;
  invalid(where(key, v) + " must be true or false");
}

template <class T, class Conv>
std::vector<T> as_list(const std::string& key, const Value& v, Conv conv) {
  if (!v.is_array) invalid(where(key, v) + " must be an array");
  std::vector<T> out;
  for (const auto& s : v.items) out.push_back(static_cast<T>(conv(key, s, v)));
  return out;
}

void require(bool ok, const std::string& what) {
  if (!ok) invalid(what);
}

void validate(const ExperimentConfig& c) {
  require(c.potential == "quartic" || c.potential == "effective_quartic" || c.potential == "general",
          "potential must be quartic, effective_quartic or general");
  if (c.potential == "general") {
    require(!c.expression.empty(), "general potential needs an expression");
    try {
      Expression::parse(c.expression);
    } catch (const Error& e) {
      invalid(std::string("expression: ") + e.what());
    }
    require(c.growth_alpha > 0.0 && c.growth_radius >= 0.0, "general potential needs growth_alpha > 0 and growth_radius >= 0");
  } else {
    require(c.expression.empty(), "expression is only used with potential = \"general\"");
  }
  require(std::isfinite(c.J) && c.J >= 0.0, "J must be finite and non-negative");
  require(std::isfinite(c.eps) && c.eps > 0.0, "eps must be positive");
  require(c.regime == "low" || c.regime == "high", "regime must be low or high");
  if (c.regime == "high") require(c.eps == 1.0, "the high-temperature regime fixes eps = 1");
  require(!c.N.empty(), "N must list at least one particle number");
  for (int n : c.N) require(n >= 1 && n <= 131072, "N entries must lie in 1..131072");
  for (const auto& s : c.stages)
    require(std::find(kStages.begin(), kStages.end(), s) != kStages.end(), "unknown stage '" + s + "'");
  require(c.threads >= 1 && c.threads <= 1024, "threads must lie in 1..1024");
  require(!c.out.empty(), "out must not be empty");
  require(c.landscape_points >= 3 && c.landscape_points <= 100001, "landscape_points must lie in 3..100001");
  require(c.landscape_range > 0.0, "landscape_range must be positive");
  require(c.poincare > 0.0, "poincare must be positive");
  require(c.sim_dt > 0.0, "sim_dt must be positive");
  require(c.sim_transitions >= 1, "sim_transitions must be positive");
  require(c.sim_burn_in >= 1, "sim_burn_in must be positive");
  require(c.sim_level == "asymptotic" || c.sim_level == "wells", "sim_level must be asymptotic or wells");
  require(c.sim_init == "hyperplane" || c.sim_init == "deterministic", "sim_init must be hyperplane or deterministic");
  require(c.sim_max_steps_ceiling >= 1, "sim_max_steps_ceiling must be positive");
  require(c.sim_state_bound > 0.0, "sim_state_bound must be positive");
  for (int n : c.verify_N) require(n >= 1 && n <= 4, "verify_N entries must lie in 1..4");
  require(!c.verify_m.empty(), "verify_m must not be empty");
  for (double x : c.char_fn_xi) require(x > 0.0, "char_fn_xi entries must be positive");
  try {
    Expression::parse(c.observable);
  } catch (const Error& e) {
    invalid(std::string("observable: ") + e.what());
  }
  require(std::isfinite(c.laplace_minimizer), "laplace_minimizer must be finite");
  for (double e : c.laplace_eps) require(e > 0.0 && e < 1.0, "laplace_eps entries must lie in (0, 1)");
  for (int k : c.laplace_k) require(k >= 0 && k <= 4, "laplace_k entries must lie in 0..4");
}

}  // namespace

std::vector<std::string> parse_stage_list(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    const std::string t = trim(cur);
    if (t.empty()) invalid("empty entry in stage list");
    if (std::find(kStages.begin(), kStages.end(), t) == kStages.end()) invalid("unknown stage '" + t + "'");
    out.push_back(t);
    cur.clear();
  };
  for (char c : text) {
    if (c == ',') flush();
    else cur.push_back(c);
  }
  flush();
  return out;
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  for (const auto& [key, v] : parse_pairs(text)) {
    auto num = [&] { return as_double(key, single(key, v), v); };
    auto integer = [&] { return as_int(key, single(key, v), v); };
    auto str = [&] { return as_string(key, single(key, v), v); };
    auto flag = [&] { return as_bool(key, single(key, v), v); };
    auto ints = [&] { return as_list<int>(key, v, as_int); };
    auto nums = [&] { return as_list<double>(key, v, as_double); };

    if (key == "potential") c.potential = str();
    else if (key == "expression") c.expression = str();
    else if (key == "growth_alpha") c.growth_alpha = num();
    else if (key == "growth_radius") c.growth_radius = num();
    else if (key == "J") c.J = num();
    else if (key == "eps") c.eps = num();
    else if (key == "regime") c.regime = str();
    else if (key == "N") c.N = ints();
    else if (key == "stages") c.stages = as_list<std::string>(key, v, as_string);
    else if (key == "seed") {
      const int64_t s = integer();
      if (s < 0) invalid(where(key, v) + " must be non-negative");
      c.seed = static_cast<uint64_t>(s);
    } else if (key == "threads") c.threads = static_cast<int>(integer());
    else if (key == "out") c.out = str();
    else if (key == "landscape_points") c.landscape_points = static_cast<int>(integer());
    else if (key == "landscape_range") c.landscape_range = num();
    else if (key == "poincare") c.poincare = num();
    else if (key == "sim_dt") c.sim_dt = num();
    else if (key == "sim_transitions") c.sim_transitions = static_cast<int>(integer());
    else if (key == "sim_burn_in") c.sim_burn_in = integer();
    else if (key == "sim_level") c.sim_level = str();
    else if (key == "sim_init") c.sim_init = str();
    else if (key == "sim_sensitivity") c.sim_sensitivity = flag();
    else if (key == "sim_dt_halving") c.sim_dt_halving = flag();
    else if (key == "sim_max_steps_ceiling") c.sim_max_steps_ceiling = integer();
    else if (key == "sim_state_bound") c.sim_state_bound = num();
    else if (key == "verify_N") c.verify_N = ints();
    else if (key == "verify_m") c.verify_m = nums();
    else if (key == "verify_char_fn") c.verify_char_fn = flag();
    else if (key == "char_fn_xi") c.char_fn_xi = nums();
    else if (key == "observable") c.observable = str();
    else if (key == "laplace_minimizer") c.laplace_minimizer = num();
    else if (key == "laplace_eps") c.laplace_eps = nums();
    else if (key == "laplace_k") c.laplace_k = ints();
    else invalid(where(key, v) + ": unknown key");
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) invalid("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["potential"] = c.potential;
  j["expression"] = c.expression;
  j["growth_alpha"] = c.growth_alpha;
  j["growth_radius"] = c.growth_radius;
  j["J"] = c.J;
  j["eps"] = c.eps;
  j["regime"] = c.regime;
  j["N"] = c.N;
  j["stages"] = c.stages;
  j["seed"] = c.seed;
  j["landscape_points"] = c.landscape_points;
  j["landscape_range"] = c.landscape_range;
  j["poincare"] = c.poincare;
  j["sim_dt"] = c.sim_dt;
  j["sim_transitions"] = c.sim_transitions;
  j["sim_burn_in"] = c.sim_burn_in;
  j["sim_level"] = c.sim_level;
  j["sim_init"] = c.sim_init;
  j["sim_sensitivity"] = c.sim_sensitivity;
  j["sim_dt_halving"] = c.sim_dt_halving;
  j["sim_max_steps_ceiling"] = c.sim_max_steps_ceiling;
  j["sim_state_bound"] = c.sim_state_bound;
  j["verify_N"] = c.verify_N;
  j["verify_m"] = c.verify_m;
  j["verify_char_fn"] = c.verify_char_fn;
  j["char_fn_xi"] = c.char_fn_xi;
  j["observable"] = c.observable;
  j["laplace_minimizer"] = c.laplace_minimizer;
  j["laplace_eps"] = c.laplace_eps;
  j["laplace_k"] = c.laplace_k;
  // threads and out do not affect results and stay out of the echo.
  return j;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::InvalidArgument, "SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

}  // namespace mfk::app
