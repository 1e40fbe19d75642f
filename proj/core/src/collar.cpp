#include "radscat/collar.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <future>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>

namespace radscat {

const char* x_spacing_name(XSpacing s) {
  switch (s) {
    case XSpacing::LogUniform: return "log_uniform";
    case XSpacing::InverseUniform: return "inverse_uniform";
    case XSpacing::Custom: return "custom";
  }
  return "?";
}

cplx CollarGrid::field(size_t i, size_t j) const {
  const cplx a = at(i, j);
  if (!phase) return a;
  return std::polar(1.0, (*phase)[j] / x[i]) * a;
}

double CollarGrid::dy() const {
  if (y.size() < 2) return 0.0;
  return periodic_y ? b.circumference() / double(y.size()) : (y.back() - y.front()) / double(y.size() - 1);
}

namespace {

CollarGrid base_grid(const BoundaryData& b, double lambda, double x_min, double x_max, size_t nx) {
  if (!(x_min > 0.0 && x_max > x_min) || nx < 2)
    fail(ErrorCode::InvalidInput, "collar needs 0 < x_min < x_max and nx >= 2");
  CollarGrid g;
  g.b = b;
  g.lambda = lambda;
  g.x.resize(nx);
  return g;
}

}  // namespace

CollarGrid CollarGrid::log_uniform(const BoundaryData& b, double lambda, double x_min,
                                   double x_max, size_t nx, size_t ny) {
  CollarGrid g = base_grid(b, lambda, x_min, x_max, nx);
  const double l0 = std::log(x_min), l1 = std::log(x_max);
  for (size_t i = 0; i < nx; ++i) g.x[i] = std::exp(l0 + (l1 - l0) * double(i) / double(nx - 1));
  g.x.front() = x_min;
  g.x.back() = x_max;
  g.spacing = XSpacing::LogUniform;
  g.y.resize(ny);
  for (size_t j = 0; j < ny; ++j) g.y[j] = b.circumference() * double(j) / double(ny);
  g.values.assign(nx * ny, 0.0);
  return g;
}

CollarGrid CollarGrid::inverse_uniform(const BoundaryData& b, double lambda, double x_min,
                                       double x_max, size_t nx, size_t ny) {
  CollarGrid g = base_grid(b, lambda, x_min, x_max, nx);
  const double s0 = 1.0 / x_max, s1 = 1.0 / x_min;
  // x ascending means s descending.
  for (size_t i = 0; i < nx; ++i) g.x[i] = 1.0 / (s1 - (s1 - s0) * double(i) / double(nx - 1));
  g.spacing = XSpacing::InverseUniform;
  g.y.resize(ny);
  for (size_t j = 0; j < ny; ++j) g.y[j] = b.circumference() * double(j) / double(ny);
  g.values.assign(nx * ny, 0.0);
  return g;
}

CollarGrid CollarGrid::windowed(const BoundaryData& b, double lambda, double x_min, double x_max,
                                size_t nx, double y_lo, double y_hi, size_t ny) {
  CollarGrid g = log_uniform(b, lambda, x_min, x_max, nx, 2);
  if (!(y_hi > y_lo) || ny < 2) fail(ErrorCode::InvalidInput, "bad y window");
  g.periodic_y = false;
  g.y.resize(ny);
  for (size_t j = 0; j < ny; ++j) g.y[j] = y_lo + (y_hi - y_lo) * double(j) / double(ny - 1);
  g.values.assign(nx * ny, 0.0);
  return g;
}

CollarGrid CollarGrid::empty_like() const {
  CollarGrid g = *this;
  g.values.assign(x.size() * y.size(), 0.0);
  g.phase.reset();
  return g;
}

void CollarGrid::validate() const {
  if (x.size() < 2 || y.size() < 1) fail(ErrorCode::InvalidInput, "empty collar grid");
  for (size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1])) fail(ErrorCode::InvalidInput, "x samples must increase");
  if (!(x.front() > 0.0)) fail(ErrorCode::InvalidInput, "x samples must be positive");
  for (size_t j = 1; j < y.size(); ++j)
    if (!(y[j] > y[j - 1])) fail(ErrorCode::InvalidInput, "y samples must increase");
  if (values.size() != x.size() * y.size()) fail(ErrorCode::InvalidInput, "value count mismatch");
  if (phase && phase->size() != y.size()) fail(ErrorCode::InvalidInput, "phase size mismatch");
}

// ---------------------------------------------------------------------------
// field blocks

namespace {

void put_f64(std::ostream& os, double v) {
  uint64_t u;
  std::memcpy(&u, &v, 8);
  if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
  char buf[8];
  for (int k = 0; k < 8; ++k) buf[k] = char((u >> (8 * k)) & 0xff);
  os.write(buf, 8);
}

double get_f64(std::istream& is) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8)) fail(ErrorCode::InvalidInput, "truncated field block");
  uint64_t u = 0;
  for (int k = 0; k < 8; ++k) u |= uint64_t(buf[k]) << (8 * k);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace

void write_field_block(std::ostream& os, const CollarGrid& g) {
  g.validate();
  nlohmann::json h;
  h["schema"] = "radscat.field/1";
  h["nx"] = g.nx();
  h["ny"] = g.ny();
  h["x"] = g.x;
  h["y"] = g.y;
  h["periodic_y"] = g.periodic_y;
  h["spacing"] = x_spacing_name(g.spacing);
  h["lambda"] = g.lambda;
  h["problem"] = nlohmann::json::parse(g.b.to_json_text());
  h["phase"] = g.phase ? nlohmann::json(*g.phase) : nlohmann::json(nullptr);
  h["layout"] = "f64le re,im pairs; row-major; y fastest";
  os << h.dump() << '\n';
  for (const auto& v : g.values) {
    put_f64(os, v.real());
    put_f64(os, v.imag());
  }
}

CollarGrid read_field_block(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) fail(ErrorCode::InvalidInput, "missing field block header");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const std::exception& e) {
    fail(ErrorCode::InvalidInput, std::string("bad field block header: ") + e.what());
  }
  if (h.value("schema", "") != "radscat.field/1")
    fail(ErrorCode::InvalidInput, "unknown field block schema");
  CollarGrid g;
  g.x = h.at("x").get<RealVec>();
  g.y = h.at("y").get<RealVec>();
  g.periodic_y = h.at("periodic_y").get<bool>();
  const std::string sp = h.at("spacing").get<std::string>();
  g.spacing = sp == "log_uniform"       ? XSpacing::LogUniform
              : sp == "inverse_uniform" ? XSpacing::InverseUniform
                                        : XSpacing::Custom;
  g.lambda = h.at("lambda").get<double>();
  g.b = BoundaryData::from_json_text(h.at("problem").dump());
  if (!h.at("phase").is_null()) g.phase = h.at("phase").get<RealVec>();
  g.values.resize(g.x.size() * g.y.size());
  for (auto& v : g.values) {
    const double re = get_f64(is);
    v = cplx(re, get_f64(is));
  }
  g.validate();
  return g;
}

// ---------------------------------------------------------------------------
// residuals

namespace {

// Sixth-order central differences.
template <class F>
void diff6(F&& f, double h, cplx& d1, cplx& d2, cplx f0) {
  const cplx m3 = f(-3 * h), m2 = f(-2 * h), m1 = f(-h), p1 = f(h), p2 = f(2 * h), p3 = f(3 * h);
  d1 = (-m3 + 9.0 * m2 - 45.0 * m1 + 45.0 * p1 - 9.0 * p2 + p3) / (60.0 * h);
  d2 = (2.0 * m3 - 27.0 * m2 + 270.0 * m1 - 490.0 * f0 + 270.0 * p1 - 27.0 * p2 + 2.0 * p3) /
       (180.0 * h * h);
}

}  // namespace

cplx model_residual_at(const FieldModel& f, const BoundaryData& b, double lambda, double x,
                       double z) {
  const double s = 1.0 / x;
  double ph[3];
  f.phase(z, ph);
  const double y = f.y_c() + z;
  const cplx a = f.amplitude(x, z);
  cplx as, ass, az, azz;
  const double hs = 2e-3 * s;
  diff6([&](double d) { return f.amplitude(1.0 / (s + d), z); }, hs, as, ass, a);
  const double hz = 2e-3 * f.z_scale(x);
  diff6([&](double d) { return f.amplitude(x, z + d); }, hz, az, azz, a);
  const double defect = ph[0] * ph[0] + ph[1] * ph[1] + b.v0().value(y) - lambda;
  const double v1 = b.v1().is_zero() ? 0.0 : b.v1().value(y);
  return defect * a - 2.0 * kI * ph[0] * as - ass - (kI * ph[0] / s) * a -
         as / s - (kI * ph[2] / s) * a - (2.0 * kI * ph[1] / s) * az - azz / (s * s) + v1 * a / s;
}

void sample_model(const FieldModel& f, CollarGrid& g) {
  g.values.assign(g.nx() * g.ny(), 0.0);
  RealVec ph(g.ny());
  for (size_t j = 0; j < g.ny(); ++j) {
    const double z = g.periodic_y ? g.b.periodic_diff(g.y[j], f.y_c()) : g.y[j] - f.y_c();
    double p[3];
    f.phase(z, p);
    ph[j] = p[0];
    for (size_t i = 0; i < g.nx(); ++i) g.at(i, j) = f.amplitude(g.x[i], z);
  }
  g.phase = ph;
}

SlopeFit fit_loglog(const RealVec& x, const RealVec& v, double x_lo, double x_hi) {
  std::vector<double> lx, lv;
  for (size_t i = 0; i < x.size(); ++i)
    if (x[i] >= x_lo && x[i] <= x_hi && v[i] > 0.0 && std::isfinite(v[i])) {
      lx.push_back(std::log(x[i]));
      lv.push_back(std::log(v[i]));
    }
  SlopeFit out;
  out.n = int(lx.size());
  if (out.n < 3) fail(ErrorCode::InsufficientRange, "fewer than three usable samples for a fit");
  double mx = 0, mv = 0;
  for (int i = 0; i < out.n; ++i) {
    mx += lx[i];
    mv += lv[i];
  }
  mx /= out.n;
  mv /= out.n;
  double sxx = 0, sxv = 0;
  for (int i = 0; i < out.n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxv += (lx[i] - mx) * (lv[i] - mv);
  }
  if (sxx <= 0) fail(ErrorCode::InsufficientRange, "degenerate x range");
  out.slope = sxv / sxx;
  out.intercept = mv - out.slope * mx;
  double ss = 0;
  for (int i = 0; i < out.n; ++i) {
    const double r = lv[i] - out.intercept - out.slope * lx[i];
    ss += r * r;
  }
  out.std_err = std::sqrt(ss / std::max(1, out.n - 2) / sxx);
  out.band = 2.0 * out.std_err;
  return out;
}

namespace {

void finish_fit(ResidualReport& rep, double lo, double hi) {
  RealVec xs, vs;
  for (const auto& s : rep.shells) {
    xs.push_back(s.x);
    vs.push_back(rep.norm == ResidualNorm::Sup ? s.sup : s.l2);
  }
  int usable = 0;
  for (size_t i = 0; i < xs.size(); ++i)
    if (xs[i] >= lo && xs[i] <= hi && vs[i] > 0) ++usable;
  if (usable >= 3) rep.fit = fit_loglog(xs, vs, lo, hi);
}

}  // namespace

ResidualReport residual(const CollarGrid& g, ResidualNorm norm, double fit_lo, double fit_hi) {
  g.validate();
  const size_t nx = g.nx(), ny = g.ny();
  if (nx < 5) fail(ErrorCode::InvalidInput, "need at least five x shells");
  if (!g.periodic_y && ny < 5) fail(ErrorCode::InvalidInput, "need at least five y samples");

  // Resolution of the radial oscillation at x_max.
  {
    const size_t a = nx - 2, c = nx - 1;
    double worst = 0.0;
    for (size_t j = 0; j < ny; ++j) {
      const cplx u0 = g.field(a, j), u1 = g.field(c, j);
      if (std::abs(u0) > 0 && std::abs(u1) > 0) worst = std::max(worst, std::abs(std::arg(u1 / u0)));
      if (g.phase)
        worst = std::max(worst, std::abs((*g.phase)[j]) * std::abs(1.0 / g.x[a] - 1.0 / g.x[c]));
    }
    if (worst > 2.0 * kPi / 8.0)
      fail(ErrorCode::UnresolvedOscillation,
           "phase advance " + std::to_string(worst) + " per shell at x_max exceeds 2pi/8");
  }

  auto uniform = [](const RealVec& t) {
    const double h = t[1] - t[0];
    for (size_t i = 2; i < t.size(); ++i)
      if (std::abs((t[i] - t[i - 1]) - h) > 1e-9 * std::abs(h) + 1e-14) return false;
    return true;
  };
  RealVec t(nx);
  bool log_axis;
  if (g.spacing == XSpacing::LogUniform) {
    for (size_t i = 0; i < nx; ++i) t[i] = std::log(g.x[i]);
    log_axis = true;
  } else if (g.spacing == XSpacing::InverseUniform) {
    for (size_t i = 0; i < nx; ++i) t[i] = 1.0 / g.x[i];
    log_axis = false;
  } else {
    fail(ErrorCode::InvalidInput, "grid residual needs log- or inverse-uniform x");
  }
  if (!uniform(t)) fail(ErrorCode::InvalidInput, "x samples are not uniform in the tagged variable");
  const double ht = t[1] - t[0];
  const double hy = g.dy();
  const double ell = g.b.circumference();
  RealVec V0(ny), V1(ny);
  for (size_t j = 0; j < ny; ++j) {
    V0[j] = g.b.v0().value(g.y[j]);
    V1[j] = g.b.v1().is_zero() ? 0.0 : g.b.v1().value(g.y[j]);
  }
  (void)ell;

  ResidualReport rep;
  rep.norm = norm;
  const size_t j0 = g.periodic_y ? 0 : 2, j1 = g.periodic_y ? ny : ny - 2;
  auto U = [&](size_t i, long j) {
    if (g.periodic_y) j = ((j % long(ny)) + long(ny)) % long(ny);
    return g.field(i, size_t(j));
  };
  for (size_t i = 2; i + 2 < nx; ++i) {
    const double x = g.x[i];
    ShellResidual sh{x, 0.0, 0.0, 0.0};
    for (size_t j = j0; j < j1; ++j) {
      const long jj = long(j);
      const cplx u = U(i, jj);
      const cplx ut = (U(i - 2, jj) - 8.0 * U(i - 1, jj) + 8.0 * U(i + 1, jj) - U(i + 2, jj)) / (12.0 * ht);
      const cplx utt = (-U(i - 2, jj) + 16.0 * U(i - 1, jj) - 30.0 * u + 16.0 * U(i + 1, jj) - U(i + 2, jj)) /
                       (12.0 * ht * ht);
      const cplx uyy = (-U(i, jj - 2) + 16.0 * U(i, jj - 1) - 30.0 * u + 16.0 * U(i, jj + 1) - U(i, jj + 2)) /
                       (12.0 * hy * hy);
      cplx r;
      if (log_axis) {
        r = -x * x * (utt + uyy) + (V0[j] + x * V1[j] - g.lambda) * u;
      } else {
        const double s = 1.0 / x;
        // t holds s, ascending index means descending s; derivative signs follow t.
        r = -utt - ut / s - uyy / (s * s) + (V0[j] + V1[j] / s - g.lambda) * u;
      }
      const double m = std::abs(r);
      sh.l2 += m * m * hy;
      sh.sup = std::max(sh.sup, m);
      sh.field_sup = std::max(sh.field_sup, std::abs(u));
    }
    sh.l2 = std::sqrt(sh.l2);
    rep.shells.push_back(sh);
  }
  finish_fit(rep, fit_lo, fit_hi);
  return rep;
}

ResidualReport residual(const FieldModel& f, const CollarGrid& layout, ResidualNorm norm,
                        double fit_lo, double fit_hi, int jobs) {
  const size_t nx = layout.nx(), ny = layout.ny();
  const double hy = layout.dy();
  RealVec zs(ny);
  for (size_t j = 0; j < ny; ++j)
    zs[j] = layout.periodic_y ? layout.b.periodic_diff(layout.y[j], f.y_c()) : layout.y[j] - f.y_c();
  std::vector<ShellResidual> shells(nx);
  auto shell = [&](size_t i) {
    const double x = layout.x[i];
    ShellResidual sh{x, 0.0, 0.0, 0.0};
    for (size_t j = 0; j < ny; ++j) {
      const double m = std::abs(model_residual_at(f, layout.b, layout.lambda, x, zs[j]));
      sh.l2 += m * m * hy;
      sh.sup = std::max(sh.sup, m);
      sh.field_sup = std::max(sh.field_sup, std::abs(f.amplitude(x, zs[j])));
    }
    sh.l2 = std::sqrt(sh.l2);
    shells[i] = sh;
  };
  jobs = std::max(1, jobs);
  if (jobs == 1) {
    for (size_t i = 0; i < nx; ++i) shell(i);
  } else {
    std::vector<std::future<void>> fs;
    for (int w = 0; w < jobs; ++w)
      fs.push_back(std::async(std::launch::async, [&, w] {
        for (size_t i = size_t(w); i < nx; i += size_t(jobs)) shell(i);
      }));
    for (auto& fu : fs) fu.get();
  }
  ResidualReport rep;
  rep.norm = norm;
  rep.shells = std::move(shells);
  finish_fit(rep, fit_lo, fit_hi);
  return rep;
}

}  // namespace radscat
