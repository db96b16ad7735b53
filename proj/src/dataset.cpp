#include "dcfit/dataset.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "dcfit/errors.hpp"

namespace dcfit {

Dataset Dataset::from_sample(const GeneratedSample& sample) {
  Dataset ds;
  const std::size_t n = sample.rows.size();
  ds.age.reserve(n);
  ds.log_ldl.reserve(n);
  ds.diabetes.reserve(n);
  ds.risk_score.reserve(n);
  ds.x.reserve(n);
  ds.y.reserve(n);
  for (const auto& r : sample.rows) {
    ds.age.push_back(r.z.age);
    ds.log_ldl.push_back(r.z.log_ldl);
    ds.diabetes.push_back(r.z.diabetes);
    ds.risk_score.push_back(r.z.risk_score);
    ds.x.push_back(r.x);
    ds.y.push_back(r.y);
  }
  return ds;
}

Dataset Dataset::subset(const std::vector<int>& rows) const {
  Dataset out;
  out.age.reserve(rows.size());
  out.log_ldl.reserve(rows.size());
  out.diabetes.reserve(rows.size());
  out.risk_score.reserve(rows.size());
  out.x.reserve(rows.size());
  out.y.reserve(rows.size());
  for (int i : rows) {
    out.age.push_back(age[i]);
    out.log_ldl.push_back(log_ldl[i]);
    out.diabetes.push_back(diabetes[i]);
    out.risk_score.push_back(risk_score[i]);
    out.x.push_back(x[i]);
    out.y.push_back(y[i]);
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, const std::string& path,
                    std::size_t lineno, const std::string& col) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    throw IoError(path + ": line " + std::to_string(lineno) +
                  ": cannot parse '" + s + "' in column " + col);
  }
  return v;
}

int parse_binary(const std::string& s, const std::string& path,
                 std::size_t lineno, const std::string& col) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw IoError(path + ": line " + std::to_string(lineno) + ": column " +
                col + " must be 0 or 1, got '" + s + "'");
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  const auto header = split_csv_line(line);
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t j = 0; j < header.size(); ++j) col[header[j]] = j;
  for (const char* required : {"A", "L", "D", "R", "X", "Y"}) {
    if (!col.count(required)) {
      throw IoError(path + ": missing required column " +
                    std::string(required));
    }
  }
  Dataset ds;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw IoError(path + ": line " + std::to_string(lineno) + ": expected " +
                    std::to_string(header.size()) + " fields, got " +
                    std::to_string(fields.size()));
    }
    ds.age.push_back(parse_double(fields[col["A"]], path, lineno, "A"));
    ds.log_ldl.push_back(parse_double(fields[col["L"]], path, lineno, "L"));
    ds.diabetes.push_back(parse_binary(fields[col["D"]], path, lineno, "D"));
    ds.risk_score.push_back(parse_double(fields[col["R"]], path, lineno, "R"));
    ds.x.push_back(parse_binary(fields[col["X"]], path, lineno, "X"));
    ds.y.push_back(parse_binary(fields[col["Y"]], path, lineno, "Y"));
  }
  if (ds.n() == 0) throw IoError(path + ": no data rows");
  return ds;
}

void write_sample_csv(const GeneratedSample& sample, const std::string& path,
                      bool oracle_view) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  if (oracle_view) {
    out << "A,L,D,F,R,X,Y0,Y1,Y\n";
    for (const auto& r : sample.rows) {
      out << fmt17(r.z.age) << ',' << fmt17(r.z.log_ldl) << ','
          << r.z.diabetes << ',' << fmt17(r.z.frailty) << ','
          << fmt17(r.z.risk_score) << ',' << r.x << ',' << r.y0 << ','
          << r.y1 << ',' << r.y << '\n';
    }
  } else {
    out << "A,L,D,R,X,Y\n";
    for (const auto& r : sample.rows) {
      out << fmt17(r.z.age) << ',' << fmt17(r.z.log_ldl) << ','
          << r.z.diabetes << ',' << fmt17(r.z.risk_score) << ',' << r.x << ','
          << r.y << '\n';
    }
  }
  if (!out.good()) throw IoError("write failed for " + path);
}

}  // namespace dcfit
