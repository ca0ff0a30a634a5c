#include "iclflow/serialize.hpp"

#include <stdexcept>

#include <json.hpp>

namespace iclflow {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json matrix_to_json(const Mat& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

ordered_json vector_to_json(const Vec& v) {
  ordered_json arr = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Mat matrix_from_json(const ordered_json& j, const char* what) {
  if (!j.is_array() || j.empty()) {
    throw std::invalid_argument(std::string(what) +
                                ": expected non-empty array of rows");
  }
  const auto rows = j.size();
  const auto cols = j.at(0).size();
  Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& row = j.at(i);
    if (!row.is_array() || row.size() != cols) {
      throw std::invalid_argument(std::string(what) + ": ragged rows");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          row.at(c).get<double>();
    }
  }
  return m;
}

Vec vector_from_json(const ordered_json& j, const char* what) {
  if (!j.is_array()) {
    throw std::invalid_argument(std::string(what) + ": expected array");
  }
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
  }
  return v;
}

ordered_json parse(std::string_view text, const char* what) {
  ordered_json j = ordered_json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    throw std::invalid_argument(std::string(what) + ": malformed JSON");
  }
  return j;
}

}  // namespace

std::string to_json_string(const ModelSpec& spec) {
  ordered_json j;
  j["d"] = spec.d;
  j["N"] = spec.N;
  j["lambda"] = matrix_to_json(spec.lambda);
  return j.dump();
}

ModelSpec model_spec_from_json(std::string_view text) {
  const ordered_json j = parse(text, "ModelSpec");
  try {
    ModelSpec spec;
    spec.d = j.at("d").get<int>();
    spec.N = j.at("N").get<int>();
    spec.lambda = matrix_from_json(j.at("lambda"), "ModelSpec.lambda");
    if (spec.lambda.rows() != spec.d || spec.lambda.cols() != spec.d) {
      throw std::invalid_argument("ModelSpec: lambda shape does not match d");
    }
    return spec;
  } catch (const ordered_json::exception& e) {
    throw std::invalid_argument(std::string("ModelSpec: ") + e.what());
  }
}

std::string to_json_string(const FullState& state) {
  ordered_json j;
  j["U"] = matrix_to_json(state.U);
  j["z"] = vector_to_json(state.z);
  j["Z"] = vector_to_json(state.Z);
  j["v"] = state.v;
  return j.dump();
}

FullState full_state_from_json(std::string_view text) {
  const ordered_json j = parse(text, "FullState");
  try {
    FullState s;
    s.U = matrix_from_json(j.at("U"), "FullState.U");
    s.z = vector_from_json(j.at("z"), "FullState.z");
    s.Z = vector_from_json(j.at("Z"), "FullState.Z");
    s.v = j.at("v").get<double>();
    const auto d = s.U.rows();
    if (s.U.cols() != d || s.z.size() != d || s.Z.size() != d) {
      throw std::invalid_argument("FullState: inconsistent dimensions");
    }
    if (!is_finite(s)) {
      throw std::invalid_argument("FullState: non-finite entries");
    }
    return s;
  } catch (const ordered_json::exception& e) {
    throw std::invalid_argument(std::string("FullState: ") + e.what());
  }
}

}  // namespace iclflow
