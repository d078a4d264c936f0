#include "tilq/problem.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace tilq {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void check_dims(const Matrix& M, int rows, int cols, const std::string& name) {
  if (M.rows() != rows || M.cols() != cols) {
    fail(name + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
         std::to_string(M.rows()) + "x" + std::to_string(M.cols()));
  }
  require_finite(M, name.c_str());
}

void check_vec(const Vector& v, int size, const std::string& name) {
  if (v.size() != size) {
    fail(name + ": expected length " + std::to_string(size) + ", got " +
         std::to_string(v.size()));
  }
  if (!v.allFinite()) fail(name + ": non-finite entries");
}

// Symmetrizes in place, records the defect, rejects beyond the loader bound.
void enforce_symmetric(Matrix& M, const std::string& name, double* max_defect) {
  const double defect = (M - M.transpose()).cwiseAbs().maxCoeff();
  if (defect > 1e-9) {
    fail(name + ": asymmetric weight (defect " + std::to_string(defect) + ")");
  }
  *max_defect = std::max(*max_defect, defect);
  M = symmetrize(M);
}

}  // namespace

StageCoeffs ProblemSpec::zero_stage(int n, int m, int p) {
  StageCoeffs s;
  s.A = Matrix::Zero(n, n);
  s.A_bar = Matrix::Zero(n, n);
  s.B = Matrix::Zero(n, m);
  s.B_bar = Matrix::Zero(n, m);
  s.C.assign(p, Matrix::Zero(n, n));
  s.C_bar.assign(p, Matrix::Zero(n, n));
  s.D.assign(p, Matrix::Zero(n, m));
  s.D_bar.assign(p, Matrix::Zero(n, m));
  s.f = Vector::Zero(n);
  s.d.assign(p, Vector::Zero(n));
  s.Q = Matrix::Zero(n, n);
  s.Q_bar = Matrix::Zero(n, n);
  s.R = Matrix::Zero(m, m);
  s.R_bar = Matrix::Zero(m, m);
  s.q = Vector::Zero(n);
  s.rho = Vector::Zero(m);
  return s;
}

TerminalCoeffs ProblemSpec::zero_terminal(int n) {
  TerminalCoeffs t;
  t.G = Matrix::Zero(n, n);
  t.G_bar = Matrix::Zero(n, n);
  t.F = Matrix::Zero(n, n);
  t.g = Vector::Zero(n);
  return t;
}

ProblemSpec::ProblemSpec(int n, int m, int p, int N, bool stationary_in_t,
                         std::vector<StageCoeffs> stages, std::vector<TerminalCoeffs> terminals,
                         std::vector<Matrix> delta)
    : n_(n), m_(m), p_(p), N_(N), stationary_(stationary_in_t) {
  if (n <= 0 || m <= 0 || p <= 0 || N <= 0) fail("dimensions must be positive");

  if (stationary_in_t) {
    if (static_cast<int>(stages.size()) != N) fail("stationary spec needs N stage entries");
    stages_.reserve(static_cast<size_t>(N) * N);
    for (int t = 0; t < N; ++t) {
      for (int k = 0; k < N; ++k) {
        stages_.push_back(k >= t ? stages[k] : StageCoeffs{});
      }
    }
  } else {
    if (static_cast<int>(stages.size()) != N * (N + 1) / 2) {
      fail("general spec needs N(N+1)/2 stage entries ordered t-major");
    }
    stages_.resize(static_cast<size_t>(N) * N);
    int idx = 0;
    for (int t = 0; t < N; ++t) {
      for (int k = t; k < N; ++k) {
        stages_[static_cast<size_t>(t) * N + k] = std::move(stages[idx++]);
      }
    }
  }

  if (terminals.size() == 1) {
    terminals_.assign(N, terminals[0]);
  } else if (static_cast<int>(terminals.size()) == N) {
    terminals_ = std::move(terminals);
  } else {
    fail("terminal data: expected 1 or N entries");
  }

  if (static_cast<int>(delta.size()) != N) fail("noise: expected N second-moment matrices");
  delta_ = std::move(delta);

  // validation + symmetrization
  for (int t = 0; t < N_; ++t) {
    for (int k = t; k < N_; ++k) {
      auto& s = stages_[static_cast<size_t>(t) * N_ + k];
      const std::string at = " at (" + std::to_string(t) + "," + std::to_string(k) + ")";
      check_dims(s.A, n_, n_, "A" + at);
      check_dims(s.A_bar, n_, n_, "A_bar" + at);
      check_dims(s.B, n_, m_, "B" + at);
      check_dims(s.B_bar, n_, m_, "B_bar" + at);
      if (static_cast<int>(s.C.size()) != p_ || static_cast<int>(s.C_bar.size()) != p_ ||
          static_cast<int>(s.D.size()) != p_ || static_cast<int>(s.D_bar.size()) != p_ ||
          static_cast<int>(s.d.size()) != p_) {
        fail("noise-channel family size mismatch" + at);
      }
      for (int i = 0; i < p_; ++i) {
        check_dims(s.C[i], n_, n_, "C" + at);
        check_dims(s.C_bar[i], n_, n_, "C_bar" + at);
        check_dims(s.D[i], n_, m_, "D" + at);
        check_dims(s.D_bar[i], n_, m_, "D_bar" + at);
        check_vec(s.d[i], n_, "d" + at);
      }
      check_vec(s.f, n_, "f" + at);
      check_dims(s.Q, n_, n_, "Q" + at);
      check_dims(s.Q_bar, n_, n_, "Q_bar" + at);
      check_dims(s.R, m_, m_, "R" + at);
      check_dims(s.R_bar, m_, m_, "R_bar" + at);
      check_vec(s.q, n_, "q" + at);
      check_vec(s.rho, m_, "rho" + at);
      enforce_symmetric(s.Q, "Q" + at, &max_asymmetry_);
      enforce_symmetric(s.Q_bar, "Q_bar" + at, &max_asymmetry_);
      enforce_symmetric(s.R, "R" + at, &max_asymmetry_);
      enforce_symmetric(s.R_bar, "R_bar" + at, &max_asymmetry_);
    }
  }
  for (int t = 0; t < N_; ++t) {
    auto& tc = terminals_[t];
    const std::string at = " at t=" + std::to_string(t);
    check_dims(tc.G, n_, n_, "G" + at);
    check_dims(tc.G_bar, n_, n_, "G_bar" + at);
    check_dims(tc.F, n_, n_, "F" + at);
    check_vec(tc.g, n_, "g" + at);
    enforce_symmetric(tc.G, "G" + at, &max_asymmetry_);
    enforce_symmetric(tc.G_bar, "G_bar" + at, &max_asymmetry_);
  }
  for (int k = 0; k < N_; ++k) {
    auto& dk = delta_[k];
    const std::string at = " at k=" + std::to_string(k);
    check_dims(dk, p_, p_, "delta" + at);
    enforce_symmetric(dk, "delta" + at, &max_asymmetry_);
    if (min_eig_sym(dk) < -1e-12 * std::max(1.0, sym_norm(dk))) {
      fail("delta" + at + ": noise second moment is not PSD");
    }
  }
}

int ProblemSpec::index(int t, int k) const {
  if (t < 0 || k < t || k >= N_) {
    throw std::out_of_range("stage index (" + std::to_string(t) + "," + std::to_string(k) +
                            ") outside 0 <= t <= k < N");
  }
  return t * N_ + k;
}

const StageCoeffs& ProblemSpec::stage(int t, int k) const { return stages_[index(t, k)]; }

const TerminalCoeffs& ProblemSpec::terminal(int t) const {
  if (t < 0 || t >= N_) throw std::out_of_range("terminal index out of range");
  return terminals_[t];
}

const Matrix& ProblemSpec::delta(int k) const {
  if (k < 0 || k >= N_) throw std::out_of_range("noise index out of range");
  return delta_[k];
}

CompositeCoeffs ProblemSpec::composites(int t, int k) const {
  const StageCoeffs& s = stage(t, k);
  CompositeCoeffs c;
  c.A = s.A + s.A_bar;
  c.B = s.B + s.B_bar;
  c.C.reserve(p_);
  c.D.reserve(p_);
  for (int i = 0; i < p_; ++i) {
    c.C.push_back(s.C[i] + s.C_bar[i]);
    c.D.push_back(s.D[i] + s.D_bar[i]);
  }
  c.Q = s.Q + s.Q_bar;
  c.R = s.R + s.R_bar;
  return c;
}

Matrix ProblemSpec::terminal_composite(int t) const {
  const TerminalCoeffs& tc = terminal(t);
  return tc.G + tc.G_bar;
}

bool ProblemSpec::is_homogeneous() const {
  for (int t = 0; t < N_; ++t) {
    if (terminal(t).g.norm() != 0.0) return false;
    for (int k = t; k < N_; ++k) {
      const StageCoeffs& s = stage(t, k);
      if (s.f.norm() != 0.0 || s.q.norm() != 0.0 || s.rho.norm() != 0.0) return false;
      for (const auto& di : s.d) {
        if (di.norm() != 0.0) return false;
      }
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// JSON document parsing

namespace {

Matrix parse_matrix(const json& j, int rows, int cols, const std::string& name) {
  Matrix M(rows, cols);
  if (j.is_number()) {
    if (rows != 1 || cols != 1) fail(name + ": scalar given for non-1x1 matrix");
    M(0, 0) = j.get<double>();
    return M;
  }
  if (!j.is_array()) fail(name + ": expected array");
  if (!j.empty() && j[0].is_number()) {
    // flat array: column vector or row vector
    if (cols == 1 && static_cast<int>(j.size()) == rows) {
      for (int r = 0; r < rows; ++r) M(r, 0) = j[r].get<double>();
      return M;
    }
    if (rows == 1 && static_cast<int>(j.size()) == cols) {
      for (int c = 0; c < cols; ++c) M(0, c) = j[c].get<double>();
      return M;
    }
    fail(name + ": flat array length does not match shape");
  }
  if (static_cast<int>(j.size()) != rows) fail(name + ": wrong row count");
  for (int r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || static_cast<int>(row.size()) != cols) {
      fail(name + ": wrong column count in row " + std::to_string(r));
    }
    for (int c = 0; c < cols; ++c) M(r, c) = row[c].get<double>();
  }
  return M;
}

Vector parse_vector(const json& j, int size, const std::string& name) {
  Matrix M = parse_matrix(j, size, 1, name);
  return M.col(0);
}

std::vector<Matrix> parse_channels(const json& j, int p, int rows, int cols,
                                   const std::string& name) {
  if (!j.is_array() || static_cast<int>(j.size()) != p) {
    fail(name + ": expected one entry per noise channel");
  }
  std::vector<Matrix> out;
  out.reserve(p);
  for (int i = 0; i < p; ++i) {
    out.push_back(parse_matrix(j[i], rows, cols, name + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<Vector> parse_channel_vectors(const json& j, int p, int size,
                                          const std::string& name) {
  if (!j.is_array() || static_cast<int>(j.size()) != p) {
    fail(name + ": expected one entry per noise channel");
  }
  std::vector<Vector> out;
  out.reserve(p);
  for (int i = 0; i < p; ++i) {
    out.push_back(parse_vector(j[i], size, name + "[" + std::to_string(i) + "]"));
  }
  return out;
}

// Fetch the document entry for family `key` at (t, k). Stationary documents
// index by k only; general documents use objects keyed "t,k".
const json* family_entry(const json& families, const std::string& key, bool stationary, int t,
                         int k, int N) {
  auto it = families.find(key);
  if (it == families.end()) return nullptr;
  if (stationary) {
    if (!it->is_array() || static_cast<int>(it->size()) != N) {
      fail(key + ": stationary family must be an array of length N");
    }
    return &(*it)[k];
  }
  if (!it->is_object()) fail(key + ": general family must be an object keyed \"t,k\"");
  const std::string tk = std::to_string(t) + "," + std::to_string(k);
  auto e = it->find(tk);
  if (e == it->end()) fail(key + ": missing (t,k) entry \"" + tk + "\"");
  return &(*e);
}

int json_depth(const json& j) {
  if (!j.is_array()) return 0;
  if (j.empty()) return 1;
  return 1 + json_depth(j[0]);
}

// Terminal families are a single entry replicated over t, or an array of N
// entries indexed by t. Matrix entries nest two deep, so per-t matrix arrays
// nest three deep; length-1 vectors given as N scalars are read per-t.
const json* terminal_entry(const json& families, const std::string& key, int t, int N,
                           bool matrix_valued, int n) {
  auto it = families.find(key);
  if (it == families.end()) return nullptr;
  const int depth = json_depth(*it);
  if (matrix_valued) {
    if (depth == 3) {
      if (static_cast<int>(it->size()) != N) fail(key + ": per-t family must have N entries");
      return &(*it)[t];
    }
    if (depth == 1 && n == 1 && static_cast<int>(it->size()) == N && N != 1) return &(*it)[t];
    return &(*it);  // scalar or single matrix, replicated
  }
  // vector valued
  if (depth == 2) {
    if (static_cast<int>(it->size()) != N) fail(key + ": per-t family must have N entries");
    return &(*it)[t];
  }
  if (depth == 1 && n == 1 && static_cast<int>(it->size()) == N && N != 1) return &(*it)[t];
  return &(*it);
}

}  // namespace

ProblemSpec load_problem(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(std::string("problem document: ") + e.what());
  }
  for (const char* key : {"n", "m", "p", "N"}) {
    if (!doc.contains(key) || !doc[key].is_number_integer()) {
      fail(std::string("problem document: missing integer field \"") + key + "\"");
    }
  }
  const int n = doc["n"].get<int>();
  const int m = doc["m"].get<int>();
  const int p = doc["p"].get<int>();
  const int N = doc["N"].get<int>();
  if (n <= 0 || m <= 0 || p <= 0 || N <= 0) fail("dimensions must be positive");
  const bool stationary = doc.value("stationary_in_t", false);
  const json families = doc.value("matrices", json::object());

  auto get_stage = [&](int t, int k) {
    StageCoeffs s = ProblemSpec::zero_stage(n, m, p);
    struct Slot {
      const char* key;
      Matrix* out;
      int rows, cols;
    };
    const Slot mats[] = {
        {"A", &s.A, n, n},         {"A_bar", &s.A_bar, n, n}, {"B", &s.B, n, m},
        {"B_bar", &s.B_bar, n, m}, {"Q", &s.Q, n, n},         {"Q_bar", &s.Q_bar, n, n},
        {"R", &s.R, m, m},         {"R_bar", &s.R_bar, m, m},
    };
    for (const auto& slot : mats) {
      if (const json* e = family_entry(families, slot.key, stationary, t, k, N)) {
        *slot.out = parse_matrix(*e, slot.rows, slot.cols, slot.key);
      }
    }
    if (const json* e = family_entry(families, "C", stationary, t, k, N)) {
      s.C = parse_channels(*e, p, n, n, "C");
    }
    if (const json* e = family_entry(families, "C_bar", stationary, t, k, N)) {
      s.C_bar = parse_channels(*e, p, n, n, "C_bar");
    }
    if (const json* e = family_entry(families, "D", stationary, t, k, N)) {
      s.D = parse_channels(*e, p, n, m, "D");
    }
    if (const json* e = family_entry(families, "D_bar", stationary, t, k, N)) {
      s.D_bar = parse_channels(*e, p, n, m, "D_bar");
    }
    if (const json* e = family_entry(families, "d", stationary, t, k, N)) {
      s.d = parse_channel_vectors(*e, p, n, "d");
    }
    if (const json* e = family_entry(families, "f", stationary, t, k, N)) {
      s.f = parse_vector(*e, n, "f");
    }
    if (const json* e = family_entry(families, "q", stationary, t, k, N)) {
      s.q = parse_vector(*e, n, "q");
    }
    if (const json* e = family_entry(families, "rho", stationary, t, k, N)) {
      s.rho = parse_vector(*e, m, "rho");
    }
    return s;
  };

  std::vector<StageCoeffs> stages;
  if (stationary) {
    stages.reserve(N);
    for (int k = 0; k < N; ++k) stages.push_back(get_stage(0, k));
  } else {
    stages.reserve(N * (N + 1) / 2);
    for (int t = 0; t < N; ++t) {
      for (int k = t; k < N; ++k) stages.push_back(get_stage(t, k));
    }
  }

  std::vector<TerminalCoeffs> terminals;
  terminals.reserve(N);
  for (int t = 0; t < N; ++t) {
    TerminalCoeffs tc = ProblemSpec::zero_terminal(n);
    if (const json* e = terminal_entry(families, "G", t, N, true, n)) {
      tc.G = parse_matrix(*e, n, n, "G");
    }
    if (const json* e = terminal_entry(families, "G_bar", t, N, true, n)) {
      tc.G_bar = parse_matrix(*e, n, n, "G_bar");
    }
    if (const json* e = terminal_entry(families, "F", t, N, true, n)) {
      tc.F = parse_matrix(*e, n, n, "F");
    }
    if (const json* e = terminal_entry(families, "g", t, N, false, n)) {
      tc.g = parse_vector(*e, n, "g");
    }
    terminals.push_back(std::move(tc));
  }

  std::vector<Matrix> delta(N, Matrix::Zero(p, p));
  if (doc.contains("noise")) {
    const auto& noise = doc["noise"];
    if (noise.contains("delta")) {
      const auto& darr = noise["delta"];
      if (!darr.is_array() || static_cast<int>(darr.size()) != N) {
        fail("noise.delta: expected array of length N");
      }
      for (int k = 0; k < N; ++k) {
        delta[k] = parse_matrix(darr[k], p, p, "delta[" + std::to_string(k) + "]");
      }
    }
  }

  return ProblemSpec(n, m, p, N, stationary, std::move(stages), std::move(terminals),
                     std::move(delta));
}

ProblemSpec load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open problem file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_problem(ss.str());
}

namespace {

json dump_matrix(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json dump_vector(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

json dump_channels(const std::vector<Matrix>& ms) {
  json arr = json::array();
  for (const auto& m : ms) arr.push_back(dump_matrix(m));
  return arr;
}

json dump_channel_vectors(const std::vector<Vector>& vs) {
  json arr = json::array();
  for (const auto& v : vs) arr.push_back(dump_vector(v));
  return arr;
}

}  // namespace

std::string save_problem(const ProblemSpec& spec) {
  const int N = spec.horizon();
  json families = json::object();
  auto emit_stage = [&](const char* key, auto&& extract) {
    if (spec.stationary_in_t()) {
      json arr = json::array();
      for (int k = 0; k < N; ++k) arr.push_back(extract(spec.stage(0, k)));
      families[key] = std::move(arr);
    } else {
      json obj = json::object();
      for (int t = 0; t < N; ++t) {
        for (int k = t; k < N; ++k) {
          obj[std::to_string(t) + "," + std::to_string(k)] = extract(spec.stage(t, k));
        }
      }
      families[key] = std::move(obj);
    }
  };
  emit_stage("A", [](const StageCoeffs& s) { return dump_matrix(s.A); });
  emit_stage("A_bar", [](const StageCoeffs& s) { return dump_matrix(s.A_bar); });
  emit_stage("B", [](const StageCoeffs& s) { return dump_matrix(s.B); });
  emit_stage("B_bar", [](const StageCoeffs& s) { return dump_matrix(s.B_bar); });
  emit_stage("C", [](const StageCoeffs& s) { return dump_channels(s.C); });
  emit_stage("C_bar", [](const StageCoeffs& s) { return dump_channels(s.C_bar); });
  emit_stage("D", [](const StageCoeffs& s) { return dump_channels(s.D); });
  emit_stage("D_bar", [](const StageCoeffs& s) { return dump_channels(s.D_bar); });
  emit_stage("f", [](const StageCoeffs& s) { return dump_vector(s.f); });
  emit_stage("d", [](const StageCoeffs& s) { return dump_channel_vectors(s.d); });
  emit_stage("Q", [](const StageCoeffs& s) { return dump_matrix(s.Q); });
  emit_stage("Q_bar", [](const StageCoeffs& s) { return dump_matrix(s.Q_bar); });
  emit_stage("R", [](const StageCoeffs& s) { return dump_matrix(s.R); });
  emit_stage("R_bar", [](const StageCoeffs& s) { return dump_matrix(s.R_bar); });
  emit_stage("q", [](const StageCoeffs& s) { return dump_vector(s.q); });
  emit_stage("rho", [](const StageCoeffs& s) { return dump_vector(s.rho); });

  json G = json::array(), G_bar = json::array(), F = json::array(), g = json::array();
  for (int t = 0; t < N; ++t) {
    G.push_back(dump_matrix(spec.terminal(t).G));
    G_bar.push_back(dump_matrix(spec.terminal(t).G_bar));
    F.push_back(dump_matrix(spec.terminal(t).F));
    g.push_back(dump_vector(spec.terminal(t).g));
  }
  families["G"] = std::move(G);
  families["G_bar"] = std::move(G_bar);
  families["F"] = std::move(F);
  families["g"] = std::move(g);

  json delta = json::array();
  for (int k = 0; k < N; ++k) delta.push_back(dump_matrix(spec.delta(k)));

  json doc;
  doc["n"] = spec.n();
  doc["m"] = spec.m();
  doc["p"] = spec.p();
  doc["N"] = N;
  doc["stationary_in_t"] = spec.stationary_in_t();
  doc["matrices"] = std::move(families);
  doc["noise"] = json{{"delta", std::move(delta)}};
  return doc.dump(2);
}

}  // namespace tilq
