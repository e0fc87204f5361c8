#ifndef PERTURBENCH_SERIALIZE_HPP
#define PERTURBENCH_SERIALIZE_HPP

#include <Eigen/Dense>
#include <json.hpp>

namespace perturbench {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  auto& data = j["data"] = nlohmann::json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) data.push_back(m(r, c));
  return j;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  Eigen::MatrixXd m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != m.size())
    throw std::invalid_argument("matrix_from_json: size mismatch");
  Eigen::Index i = 0;
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = data[i++].get<double>();
  return m;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(v(i));
  return data;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

}  // namespace perturbench

#endif  // PERTURBENCH_SERIALIZE_HPP
