#include "dcfit/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dcfit/errors.hpp"

namespace dcfit {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// Splits on commas that sit outside parentheses.
std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  const std::string last = trim(cur);
  if (!last.empty() || !out.empty()) out.push_back(last);
  return out;
}

bool parse_int(const std::string& s, long long& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  return ec == std::errc{} && ptr == t.data() + t.size();
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  return ec == std::errc{} && ptr == t.data() + t.size();
}

bool parse_real(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  return ec == std::errc{} && ptr == t.data() + t.size();
}

// Shortest decimal representation that parses back to the same double.
std::string fmt_num(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0.0;
    std::from_chars(buf, buf + std::strlen(buf), back);
    if (back == v) break;
  }
  return buf;
}

}  // namespace

LearnerLibrary parse_library(const std::string& text) {
  LearnerLibrary lib;
  std::vector<std::string> violations;
  for (const std::string& token : split_list(text)) {
    if (token.empty()) {
      violations.push_back("library: empty entry");
      continue;
    }
    const auto paren = token.find('(');
    const std::string head = trim(paren == std::string::npos
                                      ? token
                                      : token.substr(0, paren));
    std::vector<std::string> args;
    if (paren != std::string::npos) {
      if (token.back() != ')') {
        violations.push_back("library: malformed entry '" + token + "'");
        continue;
      }
      args = split_list(token.substr(paren + 1, token.size() - paren - 2));
    }
    auto want_args = [&](std::size_t k) {
      if (args.size() != k) {
        violations.push_back("library: '" + head + "' expects " +
                             std::to_string(k) + " arguments, got " +
                             std::to_string(args.size()));
        return false;
      }
      return true;
    };
    if (head == "mean") {
      if (want_args(0)) lib.push_back({"mean", MeanSpec{}});
    } else if (head == "logistic") {
      if (want_args(0)) lib.push_back({"logistic", LogisticSpec{}});
    } else if (head == "gam") {
      long long splines = 0;
      double ridge = 0.0;
      if (want_args(2) && parse_int(args[0], splines) &&
          parse_real(args[1], ridge) && splines >= 1 && ridge >= 0.0) {
        GamSpec spec;
        spec.n_splines = static_cast<int>(splines);
        spec.ridge = ridge;
        lib.push_back({"gam(" + std::to_string(spec.n_splines) + "," +
                           fmt_num(ridge) + ")",
                       spec});
      } else if (args.size() == 2) {
        violations.push_back("library: bad gam arguments '" + text + "'");
      }
    } else if (head == "forest") {
      long long trees = 0, leaf = 0;
      if (want_args(2) && parse_int(args[0], trees) &&
          parse_int(args[1], leaf) && trees >= 1 && leaf >= 1) {
        ForestSpec spec;
        spec.n_trees = static_cast<int>(trees);
        spec.min_leaf = static_cast<int>(leaf);
        lib.push_back({"forest(" + std::to_string(spec.n_trees) + "," +
                           std::to_string(spec.min_leaf) + ")",
                       spec});
      } else if (args.size() == 2) {
        violations.push_back("library: bad forest arguments '" + token + "'");
      }
    } else if (head == "net") {
      long long hidden = 0, epochs = 0;
      double lr = 0.0;
      if (want_args(3) && parse_int(args[0], hidden) &&
          parse_int(args[1], epochs) && parse_real(args[2], lr) &&
          hidden >= 1 && epochs >= 1 && lr > 0.0) {
        NetSpec spec;
        spec.hidden = static_cast<int>(hidden);
        spec.epochs = static_cast<int>(epochs);
        spec.learning_rate = lr;
        lib.push_back({"net(" + std::to_string(spec.hidden) + "," +
                           std::to_string(spec.epochs) + "," + fmt_num(lr) +
                           ")",
                       spec});
      } else if (args.size() == 3) {
        violations.push_back("library: bad net arguments '" + token + "'");
      }
    } else {
      violations.push_back("library: unknown learner '" + head + "'");
    }
  }
  if (!violations.empty()) throw ConfigError(violations);
  if (lib.empty()) throw ConfigError("library: no learners specified");
  return lib;
}

std::string library_to_text(const LearnerLibrary& library) {
  std::string out;
  for (const auto& entry : library) {
    if (!out.empty()) out += ", ";
    out += entry.name;
  }
  return out;
}

SimConfig parse_config_text(const std::string& text, bool require_seed) {
  std::vector<std::string> violations;

  // First pass: collect (section, key, value) triples in order.
  struct Entry {
    std::string section, key, value;
    int line;
  };
  std::vector<Entry> entries;
  {
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') {
          violations.push_back("line " + std::to_string(lineno) +
                               ": malformed section header");
          continue;
        }
        section = trim(line.substr(1, line.size() - 2));
        if (section != "campaign" && section != "superlearner") {
          violations.push_back("line " + std::to_string(lineno) +
                               ": unknown section [" + section + "]");
          section.clear();
        }
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        violations.push_back("line " + std::to_string(lineno) +
                             ": expected key = value");
        continue;
      }
      if (section.empty()) {
        violations.push_back("line " + std::to_string(lineno) +
                             ": key outside a section");
        continue;
      }
      entries.push_back({section, trim(line.substr(0, eq)),
                         trim(line.substr(eq + 1)), lineno});
    }
  }

  // Preset applies first, then explicit keys override in file order.
  SimConfig config = paper_preset();
  for (const auto& e : entries) {
    if (e.section == "campaign" && e.key == "preset") {
      if (e.value == "desk") {
        config = desk_preset();
      } else if (e.value == "paper") {
        config = paper_preset();
      } else {
        violations.push_back("line " + std::to_string(e.line) +
                             ": unknown preset '" + e.value + "'");
      }
    }
  }

  auto bad = [&](const Entry& e, const std::string& why) {
    violations.push_back("line " + std::to_string(e.line) + ": " + e.key +
                         ": " + why);
  };

  for (const auto& e : entries) {
    if (e.section == "campaign") {
      if (e.key == "preset") {
        // handled above
      } else if (e.key == "n") {
        long long v = 0;
        if (parse_int(e.value, v) && v >= 1) config.n = static_cast<std::size_t>(v);
        else bad(e, "expected a positive integer");
      } else if (e.key == "replicates") {
        long long v = 0;
        if (parse_int(e.value, v) && v >= 1) config.replicates = static_cast<int>(v);
        else bad(e, "expected a positive integer");
      } else if (e.key == "seed") {
        std::uint64_t v = 0;
        if (parse_u64(e.value, v)) {
          config.seed = v;
          config.has_seed = true;
        } else {
          bad(e, "expected an unsigned integer");
        }
      } else if (e.key == "oracle_size") {
        long long v = 0;
        if (parse_int(e.value, v) && v >= 1) config.oracle_size = static_cast<std::size_t>(v);
        else bad(e, "expected a positive integer");
      } else if (e.key == "estimators") {
        std::vector<EstimatorKind> kinds;
        try {
          for (const auto& tok : split_list(e.value)) {
            kinds.push_back(estimator_from_name(tok));
          }
          config.estimators = kinds;
        } catch (const ConfigError& err) {
          bad(e, err.what());
        }
      } else if (e.key == "nuisances") {
        std::vector<NuisanceKind> kinds;
        try {
          for (const auto& tok : split_list(e.value)) {
            kinds.push_back(nuisance_from_name(tok));
          }
          config.nuisances = kinds;
        } catch (const ConfigError& err) {
          bad(e, err.what());
        }
      } else if (e.key == "partitions") {
        long long v = 0;
        if (parse_int(e.value, v) && v >= 1) config.partitions = static_cast<int>(v);
        else bad(e, "expected a positive integer");
      } else if (e.key == "bootstrap") {
        long long v = 0;
        if (parse_int(e.value, v) && v >= 2) config.bootstrap_b = static_cast<int>(v);
        else bad(e, "expected an integer >= 2");
      } else if (e.key == "aggregation") {
        if (e.value == "median") config.aggregation = Aggregation::kMedian;
        else if (e.value == "mean") config.aggregation = Aggregation::kMean;
        else bad(e, "expected median or mean");
      } else if (e.key == "threads") {
        long long v = 0;
        if (parse_int(e.value, v) && v >= 0) config.threads = static_cast<int>(v);
        else bad(e, "expected a non-negative integer");
      } else if (e.key == "pi_bounds") {
        const auto parts = split_list(e.value);
        double lo = 0.0, hi = 0.0;
        if (parts.size() == 2 && parse_real(parts[0], lo) &&
            parse_real(parts[1], hi) && 0.0 <= lo && lo < hi && hi <= 1.0) {
          config.bounds.pi_lo = lo;
          config.bounds.pi_hi = hi;
        } else {
          bad(e, "expected 'lo, hi' with 0 <= lo < hi <= 1");
        }
      } else if (e.key == "m_bounds") {
        const auto parts = split_list(e.value);
        double lo = 0.0, hi = 0.0;
        if (parts.size() == 2 && parse_real(parts[0], lo) &&
            parse_real(parts[1], hi) && 0.0 <= lo && lo < hi && hi <= 1.0) {
          config.bounds.m_lo = lo;
          config.bounds.m_hi = hi;
        } else {
          bad(e, "expected 'lo, hi' with 0 <= lo < hi <= 1");
        }
      } else {
        bad(e, "unknown key in [campaign]");
      }
    } else if (e.section == "superlearner") {
      if (e.key == "folds") {
        long long v = 0;
        if (parse_int(e.value, v) && v >= 2) config.sl_folds = static_cast<int>(v);
        else bad(e, "expected an integer >= 2");
      } else if (e.key == "library") {
        try {
          config.sl_library = parse_library(e.value);
        } catch (const ConfigError& err) {
          for (const auto& v : err.violations()) {
            violations.push_back("line " + std::to_string(e.line) + ": " + v);
          }
        }
      } else {
        bad(e, "unknown key in [superlearner]");
      }
    }
  }

  if (require_seed && !config.has_seed) {
    violations.push_back("campaign.seed is required "
                         "(unseeded simulations are not reproducible)");
  }
  if (!violations.empty()) throw ConfigError(violations);
  return config;
}

SimConfig read_config_file(const std::string& path, bool require_seed) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), require_seed);
}

std::string config_to_text(const SimConfig& config) {
  std::ostringstream out;
  out << "[campaign]\n";
  out << "n = " << config.n << "\n";
  out << "replicates = " << config.replicates << "\n";
  if (config.has_seed) out << "seed = " << config.seed << "\n";
  out << "oracle_size = " << config.oracle_size << "\n";
  out << "estimators = ";
  for (std::size_t i = 0; i < config.estimators.size(); ++i) {
    if (i) out << ", ";
    out << estimator_name(config.estimators[i]);
  }
  out << "\n";
  out << "nuisances = ";
  for (std::size_t i = 0; i < config.nuisances.size(); ++i) {
    if (i) out << ", ";
    out << nuisance_kind_name(config.nuisances[i]);
  }
  out << "\n";
  out << "partitions = " << config.partitions << "\n";
  out << "bootstrap = " << config.bootstrap_b << "\n";
  out << "aggregation = "
      << (config.aggregation == Aggregation::kMedian ? "median" : "mean")
      << "\n";
  out << "threads = " << config.threads << "\n";
  out << "pi_bounds = " << fmt_num(config.bounds.pi_lo) << ", "
      << fmt_num(config.bounds.pi_hi) << "\n";
  out << "m_bounds = " << fmt_num(config.bounds.m_lo) << ", "
      << fmt_num(config.bounds.m_hi) << "\n";
  out << "\n[superlearner]\n";
  out << "folds = " << config.sl_folds << "\n";
  out << "library = " << library_to_text(config.sl_library) << "\n";
  return out.str();
}

}  // namespace dcfit
