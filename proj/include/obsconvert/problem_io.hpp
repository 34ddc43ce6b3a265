// Problem / certificate / witness file formats: JSON parsing (nlohmann)
// and a canonical serializer with fixed key order and fixed float
// formatting so canonical files round-trip byte-identically.
#pragma once

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "obsconvert/choi.hpp"
#include "obsconvert/families.hpp"

namespace obsconvert {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProblemFile {
  std::string version = "1";
  MapClass cls = MapClass::CPUnital;
  std::string source_kind = "operators";  // "operators" | "vectors"
  std::string target_kind = "operators";
  OperatorFamily source, target;          // vectors stored as rank-1 ops too
  std::optional<VectorFamily> source_vectors, target_vectors;
  double tol = 1e-7;
  std::uint64_t seed = 0;
  std::vector<double> error_budgets;      // empty = exact conversion
};

struct CertificateFile {
  std::string version = "1";
  MapClass cls = MapClass::CPUnital;
  KrausMap map;
};

struct WitnessFile {
  std::string version = "1";
  MapClass cls = MapClass::CPUnital;
  std::vector<int> theta0;
  std::vector<double> p;
  std::vector<Matrix> x;
  double lhs_upper = 0.0, rhs_lower = 0.0;
};

namespace io_detail {

using nlohmann::json;

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline cplx parse_complex(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ParseError("complex scalar must be a two-element number array");
  return cplx(j[0].get<double>(), j[1].get<double>());
}

inline Matrix parse_matrix(const json& j, int dim) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw DimensionMismatchError("matrix row count does not match dim");
  Matrix m(dim, dim);
  for (int r = 0; r < dim; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != dim)
      throw DimensionMismatchError("matrix is not square with declared dim");
    for (int c = 0; c < dim; ++c) m(r, c) = parse_complex(j[r][c]);
  }
  return m;
}

inline Vector parse_vector(const json& j, int dim) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw DimensionMismatchError("vector length does not match dim");
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = parse_complex(j[i]);
  return v;
}

inline MapClass parse_class(const std::string& s) {
  if (s == "cp") return MapClass::CP;
  if (s == "subunital") return MapClass::CPSubunital;
  if (s == "unital") return MapClass::CPUnital;
  if (s == "cptp") return MapClass::CPTP;
  throw ParseError("unknown map class: " + s);
}

inline void write_complex(std::string& out, cplx v) {
  out += '[';
  out += fmt_double(v.real());
  out += ',';
  out += fmt_double(v.imag());
  out += ']';
}

inline void write_matrix(std::string& out, const Matrix& m) {
  out += '[';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (r) out += ',';
    out += '[';
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      write_complex(out, m(r, c));
    }
    out += ']';
  }
  out += ']';
}

inline void write_vector(std::string& out, const Vector& v) {
  out += '[';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    write_complex(out, v(i));
  }
  out += ']';
}

}  // namespace io_detail

inline ProblemFile parse_problem(const nlohmann::json& j) {
  using io_detail::json;
  if (!j.is_object()) throw ParseError("problem file must be a JSON object");
  ProblemFile p;
  if (!j.contains("version") || !j["version"].is_string())
    throw ParseError("missing version tag");
  p.version = j["version"].get<std::string>();
  if (p.version != "1") throw ParseError("unrecognized version: " + p.version);
  if (!j.contains("class") || !j["class"].is_string())
    throw ParseError("missing map class");
  p.cls = io_detail::parse_class(j["class"].get<std::string>());
  auto parse_family = [&](const json& f, std::string& kind, OperatorFamily& ops,
                          std::optional<VectorFamily>& vecs) {
    if (!f.is_object() || !f.contains("kind") || !f.contains("dim") ||
        !f.contains("items"))
      throw ParseError("family must have kind, dim, items");
    kind = f["kind"].get<std::string>();
    const int dim = f["dim"].get<int>();
    if (dim < 1) throw DimensionMismatchError("family dim must be >= 1");
    ops.dim = dim;
    if (kind == "operators") {
      for (const auto& it : f["items"])
        ops.ops.push_back(io_detail::parse_matrix(it, dim));
      for (const auto& op : ops.ops)
        if ((op - op.adjoint()).norm() > 1e-9 * std::max(1.0, op.norm()))
          throw ParseError("operator item is not Hermitian");
    } else if (kind == "vectors") {
      VectorFamily vf;
      vf.dim = dim;
      for (const auto& it : f["items"])
        vf.vectors.push_back(io_detail::parse_vector(it, dim));
      for (const auto& v : vf.vectors)
        ops.ops.push_back((v * v.adjoint()).eval());
      vecs = std::move(vf);
    } else {
      throw ParseError("unknown family kind: " + kind);
    }
  };
  if (!j.contains("source") || !j.contains("target"))
    throw ParseError("missing source or target family");
  parse_family(j["source"], p.source_kind, p.source, p.source_vectors);
  parse_family(j["target"], p.target_kind, p.target, p.target_vectors);
  if (p.source.size() != p.target.size())
    throw DimensionMismatchError("source and target differ in family size");
  if (p.source.size() == 0) throw ParseError("families must be nonempty");
  if (j.contains("tol")) p.tol = j["tol"].get<double>();
  if (j.contains("seed")) p.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("error_budgets") && !j["error_budgets"].is_null()) {
    for (const auto& e : j["error_budgets"])
      p.error_budgets.push_back(e.get<double>());
    if (!p.error_budgets.empty() &&
        static_cast<int>(p.error_budgets.size()) != p.source.size())
      throw ParseError("error_budgets length differs from family size");
  }
  return p;
}

inline ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open problem file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("JSON parse error: ") + e.what());
  }
  return parse_problem(j);
}

// Canonical serialization: fixed key order, no whitespace, %.17g floats,
// trailing newline.  parse(serialize(p)) == p and serialize is stable.
inline std::string serialize_problem(const ProblemFile& p) {
  using namespace io_detail;
  std::string out = "{\"version\":\"" + p.version + "\",\"class\":\"" +
                    map_class_name(p.cls) + "\"";
  auto family = [&](const char* name, const std::string& kind,
                    const OperatorFamily& ops,
                    const std::optional<VectorFamily>& vecs) {
    out += std::string(",\"") + name + "\":{\"kind\":\"" + kind +
           "\",\"dim\":" + std::to_string(ops.dim) + ",\"items\":[";
    if (kind == "vectors" && vecs) {
      for (int t = 0; t < vecs->size(); ++t) {
        if (t) out += ',';
        write_vector(out, vecs->vectors[t]);
      }
    } else {
      for (int t = 0; t < ops.size(); ++t) {
        if (t) out += ',';
        write_matrix(out, ops.ops[t]);
      }
    }
    out += "]}";
  };
  family("source", p.source_kind, p.source, p.source_vectors);
  family("target", p.target_kind, p.target, p.target_vectors);
  out += ",\"tol\":" + fmt_double(p.tol);
  out += ",\"seed\":" + std::to_string(p.seed);
  out += ",\"error_budgets\":";
  if (p.error_budgets.empty()) {
    out += "null";
  } else {
    out += '[';
    for (size_t i = 0; i < p.error_budgets.size(); ++i) {
      if (i) out += ',';
      out += fmt_double(p.error_budgets[i]);
    }
    out += ']';
  }
  out += "}\n";
  return out;
}

inline std::string serialize_certificate(const CertificateFile& c) {
  using namespace io_detail;
  std::string out = "{\"version\":\"" + c.version + "\",\"kind\":\"certificate\"";
  out += std::string(",\"class\":\"") + map_class_name(c.cls) + "\"";
  out += ",\"din\":" + std::to_string(c.map.din);
  out += ",\"dout\":" + std::to_string(c.map.dout);
  out += ",\"kraus\":[";
  for (size_t i = 0; i < c.map.ops.size(); ++i) {
    if (i) out += ',';
    std::string m;
    // Kraus operators are dout x din (possibly rectangular)
    m += '[';
    for (Eigen::Index r = 0; r < c.map.ops[i].rows(); ++r) {
      if (r) m += ',';
      m += '[';
      for (Eigen::Index cc = 0; cc < c.map.ops[i].cols(); ++cc) {
        if (cc) m += ',';
        write_complex(m, c.map.ops[i](r, cc));
      }
      m += ']';
    }
    m += ']';
    out += m;
  }
  out += "]}\n";
  return out;
}

inline CertificateFile parse_certificate(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") ||
      j["kind"].get<std::string>() != "certificate")
    throw ParseError("not a certificate file");
  CertificateFile c;
  c.version = j.value("version", std::string("1"));
  c.cls = io_detail::parse_class(j.value("class", std::string("unital")));
  c.map.din = j["din"].get<int>();
  c.map.dout = j["dout"].get<int>();
  if (c.map.din < 1 || c.map.dout < 1)
    throw DimensionMismatchError("certificate dimensions must be >= 1");
  for (const auto& k : j["kraus"]) {
    if (!k.is_array() || static_cast<int>(k.size()) != c.map.dout)
      throw DimensionMismatchError("Kraus operator row count");
    Matrix w(c.map.dout, c.map.din);
    for (int r = 0; r < c.map.dout; ++r) {
      if (static_cast<int>(k[r].size()) != c.map.din)
        throw DimensionMismatchError("Kraus operator column count");
      for (int cc = 0; cc < c.map.din; ++cc)
        w(r, cc) = io_detail::parse_complex(k[r][cc]);
    }
    c.map.ops.push_back(w);
  }
  return c;
}

inline CertificateFile load_certificate(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open certificate file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("JSON parse error: ") + e.what());
  }
  return parse_certificate(j);
}

inline std::string serialize_witness(const WitnessFile& w) {
  using namespace io_detail;
  std::string out = "{\"version\":\"" + w.version + "\",\"kind\":\"witness\"";
  out += std::string(",\"class\":\"") + map_class_name(w.cls) + "\"";
  out += ",\"theta0\":[";
  for (size_t i = 0; i < w.theta0.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(w.theta0[i]);
  }
  out += "],\"p\":[";
  for (size_t i = 0; i < w.p.size(); ++i) {
    if (i) out += ',';
    out += fmt_double(w.p[i]);
  }
  out += "],\"x\":[";
  for (size_t i = 0; i < w.x.size(); ++i) {
    if (i) out += ',';
    write_matrix(out, w.x[i]);
  }
  out += "],\"lhs_upper\":" + fmt_double(w.lhs_upper);
  out += ",\"rhs_lower\":" + fmt_double(w.rhs_lower);
  out += "}\n";
  return out;
}

}  // namespace obsconvert
