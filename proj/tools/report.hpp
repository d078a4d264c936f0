#pragma once

#include <chrono>
#include <string>

#include <nlohmann/json.hpp>

#include "tilq/equilibrium.hpp"

namespace tilq::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNoSolution = 3;
inline constexpr int kExitResource = 4;
inline constexpr int kExitMismatch = 5;

/// FNV-1a 64-bit over the raw bytes, rendered as hex. Identifies the problem
/// document a report was produced from.
std::string fingerprint_bytes(const std::string& bytes);
std::string fingerprint_file(const std::string& path);

nlohmann::json matrix_json(const Matrix& M);
nlohmann::json vector_json(const Vector& v);

/// Eigen/singular-value summaries of the per-stage operators.
nlohmann::json operator_summary(const BackwardTables& tables);

nlohmann::json policy_json(const EquilibriumPolicy& policy);
EquilibriumPolicy policy_from_json(const nlohmann::json& doc, int n, int m);

/// Writes text to path atomically (temp file + rename).
void write_file_atomic(const std::string& path, const std::string& text);

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace tilq::cli
