#ifndef QSLRAND_IO_HPP
#define QSLRAND_IO_HPP

// Result records, CSV emission and atomic file output.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>
#include <unistd.h>

#include "qslrand/coherent.hpp"
#include "qslrand/core_sets.hpp"
#include "qslrand/dual_solver.hpp"

namespace qslrand {

using json = nlohmann::json;

inline constexpr const char *certificate_schema = "qslrand.certificate/1";

/// Thrown when a serialized record fails revalidation.
class RecordError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// %.17g, enough for a lossless round trip of any double.
inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct CertificateRecord {
  std::string schema_version = certificate_schema;
  double c0 = 0.0, c1 = 0.0;
  double energy = 0.0, dt = 1.0, u = 0.0;
  DiscretizationParams params;
  double h_cert = 0.0, h_dual_raw = 0.0;
  DualVector best_t;
  bool classical_member = false;
  bool quantum_member = true;
  long long runtime_ms = 0;

  static CertificateRecord from_bound(const CertifiedBound &b, double energy, double dt,
                                      long long runtime_ms) {
    CertificateRecord r;
    r.c0 = b.input.c0;
    r.c1 = b.input.c1;
    r.energy = energy;
    r.dt = dt;
    r.u = b.budget.value();
    r.params = b.params;
    r.h_cert = b.h_cert;
    r.h_dual_raw = b.h_dual_raw;
    r.best_t = b.best_t;
    r.classical_member = b.classical_member;
    r.quantum_member = b.quantum_member;
    r.runtime_ms = runtime_ms;
    return r;
  }

  /// Throws RecordError on a violated invariant.
  void validate() const {
    if (schema_version != certificate_schema)
      throw RecordError("unknown schema_version '" + schema_version + "'");
    if (!Correlation{c0, c1}.valid())
      throw RecordError("input correlation outside [-1, 1]^2");
    if (!(u >= 0.0) || !std::isfinite(u))
      throw RecordError("u must be finite and >= 0");
    if (std::abs(energy * dt - u) > 1e-12 * std::max(1.0, std::abs(u)))
      throw RecordError("u != energy * dt");
    try {
      params.validate();
    } catch (const std::exception &e) {
      throw RecordError(e.what());
    }
    if (h_cert != std::max(0.0, h_dual_raw))
      throw RecordError("h_cert != max(0, h_dual_raw)");
    if (runtime_ms < 0)
      throw RecordError("negative runtime");
  }

  [[nodiscard]] json to_json() const {
    return json{{"schema_version", schema_version},
                {"input", {{"c0", c0}, {"c1", c1}, {"energy", energy}, {"dt", dt}, {"u", u}}},
                {"params", {{"L", params.L}, {"M", params.M}, {"N", params.N}, {"S", params.S}}},
                {"results",
                 {{"h_cert", h_cert},
                  {"h_dual_raw", h_dual_raw},
                  {"best_t", {best_t.t1, best_t.t2, best_t.t3}},
                  {"classical_member", classical_member},
                  {"quantum_member", quantum_member}}},
                {"runtime_ms", runtime_ms}};
  }

  static CertificateRecord from_json(const json &j) {
    CertificateRecord r;
    try {
      r.schema_version = j.at("schema_version").get<std::string>();
      const auto &in = j.at("input");
      r.c0 = in.at("c0").get<double>();
      r.c1 = in.at("c1").get<double>();
      r.energy = in.at("energy").get<double>();
      r.dt = in.at("dt").get<double>();
      r.u = in.at("u").get<double>();
      const auto &p = j.at("params");
      r.params = {p.at("L").get<int>(), p.at("M").get<int>(), p.at("N").get<int>(),
                  p.at("S").get<int>()};
      const auto &res = j.at("results");
      r.h_cert = res.at("h_cert").get<double>();
      r.h_dual_raw = res.at("h_dual_raw").get<double>();
      const auto t = res.at("best_t").get<std::vector<double>>();
      if (t.size() != 3)
        throw RecordError("best_t must have 3 entries");
      r.best_t = {t[0], t[1], t[2]};
      r.classical_member = res.at("classical_member").get<bool>();
      r.quantum_member = res.at("quantum_member").get<bool>();
      r.runtime_ms = j.at("runtime_ms").get<long long>();
    } catch (const json::exception &e) {
      throw RecordError(std::string("malformed certificate: ") + e.what());
    }
    r.validate();
    return r;
  }

  [[nodiscard]] std::string csv() const {
    std::ostringstream os;
    os << "c0,c1,energy,dt,u,L,M,N,S,h_cert,h_dual_raw,t1,t2,t3,classical_member,quantum_"
          "member,runtime_ms\n";
    for (double v : {c0, c1, energy, dt, u})
      os << format_real(v) << ',';
    os << params.L << ',' << params.M << ',' << params.N << ',' << params.S << ',';
    for (double v : {h_cert, h_dual_raw, best_t.t1, best_t.t2, best_t.t3})
      os << format_real(v) << ',';
    os << (classical_member ? "true" : "false") << ',' << (quantum_member ? "true" : "false")
       << ',' << runtime_ms << '\n';
    return os.str();
  }
};

inline constexpr const char *sweep_csv_header = "c0,c1,h_cert";
inline constexpr const char *sets_csv_header = "curve_id,s,c0,c1";

/// Row-major sweep grid; cells outside the quantum set leave h_cert empty.
inline std::string sweep_csv(const SweepGrid &g) {
  std::string out = std::string(sweep_csv_header) + '\n';
  for (int i0 = 0; i0 < g.n; ++i0)
    for (int i1 = 0; i1 < g.n; ++i1) {
      out += format_real(g.coords[i0]) + ',' + format_real(g.coords[i1]) + ',';
      const double h = g.at(i0, i1);
      if (!std::isnan(h))
        out += format_real(h);
      out += '\n';
    }
  return out;
}

/// One vertex or sample of a set boundary.
struct SetRecord {
  std::string curve_id; ///< q1, q2, classical_upper, classical_lower
  double s = 0.0;       ///< curve parameter, or vertex index for the classical polygon
  Correlation c;
};

/// Quantum boundary polylines followed by the classical wedge edges.
inline std::vector<SetRecord> set_boundaries(EnergyTimeBudget u, int samples) {
  if (samples < 2)
    throw DomainError("need at least 2 samples per curve");
  std::vector<SetRecord> rows;
  const double ue = u.effective();
  for (BoundaryCurve curve : {BoundaryCurve::One, BoundaryCurve::Two}) {
    const auto [lo, hi] = curve_interval(ue, curve);
    for (int i = 0; i < samples; ++i) {
      const double s = i + 1 == samples ? hi : lo + (hi - lo) * i / (samples - 1);
      rows.push_back({to_string(curve), s, boundary_point(EnergyTimeBudget(ue), curve, s)});
    }
  }
  const double w = std::min(2.0, 4.0 * u.value() / std::numbers::pi);
  auto polyline = [&](const char *id, std::vector<Correlation> pts) {
    int index = 0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (k > 0 && pts[k] == pts[k - 1])
        continue;
      rows.push_back({id, static_cast<double>(index++), pts[k]});
    }
  };
  polyline("classical_upper", {{-1.0, -1.0}, {-1.0, -1.0 + w}, {1.0 - w, 1.0}, {1.0, 1.0}});
  polyline("classical_lower", {{-1.0, -1.0}, {-1.0 + w, -1.0}, {1.0, 1.0 - w}, {1.0, 1.0}});
  return rows;
}

inline std::string sets_csv(const std::vector<SetRecord> &rows) {
  std::string out = std::string(sets_csv_header) + '\n';
  for (const auto &r : rows)
    out += r.curve_id + ',' + format_real(r.s) + ',' + format_real(r.c.c0) + ',' +
           format_real(r.c.c1) + '\n';
  return out;
}

inline json sets_json(EnergyTimeBudget u, const std::vector<SetRecord> &rows) {
  json records = json::array();
  for (const auto &r : rows)
    records.push_back({{"curve_id", r.curve_id}, {"s", r.s}, {"c0", r.c.c0}, {"c1", r.c.c1}});
  return {{"u", u.value()}, {"records", records}};
}

inline std::string region_csv(const RegionMask &m) {
  std::string out = "omega_dt,e_dt,nonzero,constraint_e_dt\n";
  for (std::size_t r = 0; r < m.e_dt.size(); ++r)
    for (std::size_t c = 0; c < m.omega_dt.size(); ++c)
      out += format_real(m.omega_dt[c]) + ',' + format_real(m.e_dt[r]) + ',' +
             (m.at(r, c) ? "1" : "0") + ',' + format_real(m.constraint_e_dt[c]) + '\n';
  return out;
}

/// Writes through a temporary file in the target directory and renames it into place.
inline void write_atomic(const std::filesystem::path &path, const std::string &content) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f)
      throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    f << content;
    f.flush();
    if (!f) {
      f.close();
      fs::remove(tmp);
      throw std::runtime_error("write to " + tmp.string() + " failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot move output into " + path.string() + ": " + ec.message());
  }
}

} // namespace qslrand

#endif // QSLRAND_IO_HPP
