#include "common.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "iclflow/version.hpp"

namespace icltool {

namespace {

iclflow::Mat lambda_from_json_text(const std::string& text, int& d) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw usage_error(std::string("covariance file is not valid JSON: ") +
                      e.what());
  }
  if (j.is_object()) {
    if (!j.contains("lambda"))
      throw usage_error("covariance file object lacks a \"lambda\" key");
    j = j.at("lambda");
  }
  if (!j.is_array() || j.empty())
    throw usage_error("covariance must be a non-empty square array");
  const int n = static_cast<int>(j.size());
  iclflow::Mat L(n, n);
  for (int i = 0; i < n; ++i) {
    const auto& row = j.at(i);
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      throw usage_error("covariance rows must all have the matrix dimension");
    for (int k = 0; k < n; ++k) {
      if (!row.at(k).is_number())
        throw usage_error("covariance entries must be numbers");
      L(i, k) = row.at(k).get<double>();
    }
  }
  if (d > 0 && d != n)
    throw usage_error("--d disagrees with the covariance file dimension");
  d = n;
  return L;
}

}  // namespace

iclflow::Mat parse_lambda(const std::string& text, int& d) {
  if (text == "identity") {
    if (d <= 0) d = 1;
    return iclflow::Mat::Identity(d, d);
  }
  if (text.rfind("diag:", 0) == 0) {
    std::vector<double> vals;
    std::stringstream ss(text.substr(5));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t pos = 0;
        vals.push_back(std::stod(item, &pos));
        if (pos != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw usage_error("bad diag: entry '" + item + "'");
      }
    }
    if (vals.empty()) throw usage_error("diag: needs at least one value");
    const int n = static_cast<int>(vals.size());
    if (d > 0 && d != n)
      throw usage_error("--d disagrees with the diag: entry count");
    d = n;
    iclflow::Mat L = iclflow::Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) L(i, i) = vals[i];
    return L;
  }
  std::ifstream in(text);
  if (!in) throw usage_error("cannot open covariance file '" + text + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return lambda_from_json_text(buf.str(), d);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_output(const std::string& path, const std::string& payload) {
  if (path.empty() || path == "-") {
    std::fwrite(payload.data(), 1, payload.size(), stdout);
    if (payload.empty() || payload.back() != '\n') std::fputc('\n', stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw usage_error("cannot open output file '" + path + "'");
  out << payload;
  if (payload.empty() || payload.back() != '\n') out << '\n';
}

ordered_json make_envelope(const std::string& command) {
  ordered_json j;
  j["tool"] = "iclflow";
  j["version"] = iclflow::kVersion;
  j["command"] = command;
  return j;
}

ordered_json to_json(const iclflow::Vec& v) {
  ordered_json arr = ordered_json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

ordered_json to_json(const iclflow::Mat& m) {
  ordered_json arr = ordered_json::array();
  for (int i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    arr.push_back(row);
  }
  return arr;
}

}  // namespace icltool
