#include "report.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tilq::cli {

using nlohmann::json;

std::string fingerprint_bytes(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a:") + buf;
}

std::string fingerprint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open file for fingerprint: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return fingerprint_bytes(ss.str());
}

json matrix_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

json operator_summary(const BackwardTables& tables) {
  json stages = json::array();
  for (int k = tables.start_stage(); k < tables.horizon(); ++k) {
    const StageOperators& op = tables.ops(k);
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(op.convexity), Eigen::EigenvaluesOnly);
    Eigen::JacobiSVD<Matrix> svd(op.stationarity);
    json st;
    st["stage"] = k;
    st["convexity"] = matrix_json(op.convexity);
    st["convexity_eigenvalues"] = vector_json(es.eigenvalues());
    st["convexity_exchanged"] = matrix_json(op.convexity_exchanged);
    st["stationarity"] = matrix_json(op.stationarity);
    st["stationarity_singular_values"] = vector_json(svd.singularValues());
    st["stationarity_asymmetry"] = op.stationarity_asymmetry;
    st["stationarity_state"] = matrix_json(op.stationarity_state);
    st["stationarity_offset"] = vector_json(op.stationarity_offset);
    st["gain"] = matrix_json(op.gain);
    st["open_gain"] = matrix_json(op.open_gain);
    st["feedforward"] = vector_json(op.feedforward);
    stages.push_back(std::move(st));
  }
  return stages;
}

json policy_json(const EquilibriumPolicy& policy) {
  json doc;
  switch (policy.kind) {
    case SolverKind::mixed: doc["kind"] = "mixed"; break;
    case SolverKind::open_loop: doc["kind"] = "open"; break;
    case SolverKind::feedback: doc["kind"] = "feedback"; break;
  }
  doc["t"] = policy.t0;
  json K = json::array(), Phi = json::array(), Gamma = json::array(), c = json::array();
  for (int i = 0; i < policy.stages(); ++i) {
    K.push_back(matrix_json(policy.gain[i]));
    Phi.push_back(matrix_json(policy.feedback_part[i]));
    Gamma.push_back(matrix_json(policy.open_gain[i]));
    c.push_back(vector_json(policy.feedforward[i]));
  }
  doc["K"] = std::move(K);
  doc["Phi"] = std::move(Phi);
  doc["Gamma"] = std::move(Gamma);
  doc["c"] = std::move(c);
  return doc;
}

namespace {

Matrix matrix_from_json(const json& j, int rows, int cols, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows) {
    throw std::invalid_argument(std::string(what) + ": wrong row count");
  }
  Matrix M(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != cols) {
      throw std::invalid_argument(std::string(what) + ": wrong column count");
    }
    for (int c = 0; c < cols; ++c) M(r, c) = j[r][c].get<double>();
  }
  return M;
}

Vector vector_from_json(const json& j, int size, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != size) {
    throw std::invalid_argument(std::string(what) + ": wrong length");
  }
  Vector v(size);
  for (int i = 0; i < size; ++i) v(i) = j[i].get<double>();
  return v;
}

}  // namespace

EquilibriumPolicy policy_from_json(const json& doc, int n, int m) {
  EquilibriumPolicy pol;
  const std::string kind = doc.value("kind", "mixed");
  if (kind == "open") {
    pol.kind = SolverKind::open_loop;
  } else if (kind == "feedback") {
    pol.kind = SolverKind::feedback;
  } else if (kind == "mixed") {
    pol.kind = SolverKind::mixed;
  } else {
    throw std::invalid_argument("policy: unknown kind \"" + kind + "\"");
  }
  if (!doc.contains("t")) throw std::invalid_argument("policy: missing field \"t\"");
  pol.t0 = doc["t"].get<int>();
  if (!doc.contains("K") || !doc["K"].is_array()) {
    throw std::invalid_argument("policy: missing stage array \"K\"");
  }
  const int stages = static_cast<int>(doc["K"].size());
  auto stage_matrices = [&](const char* key) {
    std::vector<Matrix> out;
    if (!doc.contains(key) || static_cast<int>(doc[key].size()) != stages) {
      throw std::invalid_argument(std::string("policy: missing stage array \"") + key + "\"");
    }
    for (int i = 0; i < stages; ++i) out.push_back(matrix_from_json(doc[key][i], m, n, key));
    return out;
  };
  pol.gain = stage_matrices("K");
  pol.feedback_part = stage_matrices("Phi");
  pol.open_gain = stage_matrices("Gamma");
  if (!doc.contains("c") || static_cast<int>(doc["c"].size()) != stages) {
    throw std::invalid_argument("policy: missing stage array \"c\"");
  }
  for (int i = 0; i < stages; ++i) {
    pol.feedforward.push_back(vector_from_json(doc["c"][i], m, "c"));
  }
  return pol;
}

void write_file_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << text;
  }
  fs::rename(tmp, target);
}

}  // namespace tilq::cli
