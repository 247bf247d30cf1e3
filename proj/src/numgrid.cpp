#include "fiolab/numgrid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <tuple>

#include "fiolab/error.hpp"

namespace fiolab {

std::size_t UniformGrid::size() const noexcept {
  std::size_t n = static_cast<std::size_t>(points_);
  return dim_ == 1 ? n : n * n;
}

double UniformGrid::cell_volume() const noexcept { return std::pow(spacing(), dim_); }

double UniformGrid::freq_cell_volume() const noexcept { return std::pow(freq_spacing(), dim_); }

std::array<int, 2> UniformGrid::unflatten(std::size_t flat) const noexcept {
  if (dim_ == 1) return {static_cast<int>(flat), 0};
  return {static_cast<int>(flat / static_cast<std::size_t>(points_)),
          static_cast<int>(flat % static_cast<std::size_t>(points_))};
}

std::array<double, 2> UniformGrid::point(std::size_t flat) const noexcept {
  auto idx = unflatten(flat);
  return {coordinate(idx[0]), dim_ == 1 ? 0.0 : coordinate(idx[1])};
}

std::array<double, 2> UniformGrid::freq_point(std::size_t flat) const noexcept {
  auto idx = unflatten(flat);
  return {frequency(idx[0]), dim_ == 1 ? 0.0 : frequency(idx[1])};
}

bool UniformGrid::operator==(const UniformGrid& other) const noexcept {
  return dim_ == other.dim_ && points_ == other.points_ && halfwidth_ == other.halfwidth_;
}

UniformGrid make_grid(int dim, int points_per_dim, double space_halfwidth) {
  if (dim != 1 && dim != 2) throw ValidationError("unsupported dimension");
  if (points_per_dim < 8 || !std::has_single_bit(static_cast<unsigned>(points_per_dim))) {
    throw ValidationError("points_per_dim must be a power of two >= 8");
  }
  if (!(space_halfwidth > 0.0) || !std::isfinite(space_halfwidth)) {
    throw ValidationError("space_halfwidth must be positive and finite");
  }
  UniformGrid g;
  g.dim_ = dim;
  g.points_ = points_per_dim;
  g.halfwidth_ = space_halfwidth;
  return g;
}

SampledField::SampledField(UniformGrid g, Domain d)
    : grid(g), values(g.size(), cplx(0.0)), domain(d) {}

SampledField::SampledField(UniformGrid g, std::vector<cplx> v, Domain d)
    : grid(g), values(std::move(v)), domain(d) {
  if (values.size() != grid.size()) throw ValidationError("field length does not match grid");
}

double lp_norm(const SampledField& field, double p) {
  if (!(p > 0.0)) throw ValidationError("lp_norm requires p > 0");
  if (std::isinf(p)) {
    double m = 0.0;
    for (const auto& v : field.values) m = std::max(m, std::abs(v));
    return m;
  }
  NeumaierSum sum;
  for (const auto& v : field.values) {
    double a = std::abs(v);
    if (a > 0.0) sum.add(std::pow(a, p));
  }
  return std::pow(sum.result() * field.grid.cell_volume(), 1.0 / p);
}

double lorentz_norm(const SampledField& field, double r, double q) {
  if (!(r > 0.0) || std::isinf(r)) throw ValidationError("lorentz_norm requires 0 < r < inf");
  if (!(q > 0.0)) throw ValidationError("lorentz_norm requires q > 0");
  std::vector<double> mags(field.values.size());
  std::transform(field.values.begin(), field.values.end(), mags.begin(),
                 [](const cplx& v) { return std::abs(v); });
  std::sort(mags.begin(), mags.end(), std::greater<>());
  const double cell = field.grid.cell_volume();

  // The rearrangement is a step function: f*(t) = mags[k-1] on ((k-1)v, kv].
  if (std::isinf(q)) {
    double best = 0.0;
    for (std::size_t k = 1; k <= mags.size(); ++k) {
      best = std::max(best, std::pow(static_cast<double>(k) * cell, 1.0 / r) * mags[k - 1]);
    }
    return best;
  }
  const double e = q / r;
  NeumaierSum sum;
  for (std::size_t k = 1; k <= mags.size(); ++k) {
    const double a = mags[k - 1];
    if (a == 0.0) break;
    const double kd = static_cast<double>(k);
    // (kv)^e - ((k-1)v)^e without cancellation.
    double weight = std::pow(kd * cell, e);
    if (k > 1) weight *= -std::expm1(e * std::log1p(-1.0 / kd));
    sum.add(std::pow(a, q) * weight / e);
  }
  return std::pow(sum.result(), 1.0 / q);
}

namespace {

struct PlanKey {
  int dim;
  int n;
  int sign;
  bool operator<(const PlanKey& o) const { return std::tie(dim, n, sign) < std::tie(o.dim, o.n, o.sign); }
};

// Plans are created once under a lock; fftw_execute_dft on an existing plan is thread safe.
fftw_plan cached_plan(int dim, int n, int sign) {
  static std::mutex mutex;
  static std::map<PlanKey, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(mutex);
  PlanKey key{dim, n, sign};
  auto it = plans.find(key);
  if (it != plans.end()) return it->second;
  std::size_t total = dim == 1 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) * n;
  std::vector<fftw_complex> scratch(total);
  fftw_plan plan = dim == 1 ? fftw_plan_dft_1d(n, scratch.data(), scratch.data(), sign,
                                               FFTW_ESTIMATE | FFTW_UNALIGNED)
                            : fftw_plan_dft_2d(n, n, scratch.data(), scratch.data(), sign,
                                               FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans.emplace(key, plan);
  return plan;
}

void execute(std::vector<cplx>& data, int dim, int n, int sign) {
  fftw_plan plan = cached_plan(dim, n, sign);
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, ptr, ptr);
}

// (-1)^(sum of per-axis indices), optionally shifted by N/2 per axis.
double checker(const UniformGrid& g, std::size_t flat, bool shifted) {
  auto idx = g.unflatten(flat);
  int s = idx[0] + (g.dim() == 2 ? idx[1] : 0);
  if (shifted) s += (g.points_per_dim() / 2) * g.dim();
  return (s % 2 == 0) ? 1.0 : -1.0;
}

}  // namespace

SampledField fourier_transform(const SampledField& field, Direction direction) {
  const UniformGrid& g = field.grid;
  if (field.values.size() != g.size()) throw ValidationError("field length does not match grid");
  std::vector<cplx> data = field.values;
  const bool forward = direction == Direction::forward;
  // x_i xi_k = h dxi (i - N/2)(k - N/2) per axis, so e^{-i x xi} factors into
  // checkerboards around a plain DFT.
  for (std::size_t i = 0; i < data.size(); ++i) data[i] *= checker(g, i, !forward);
  execute(data, g.dim(), g.points_per_dim(), forward ? FFTW_FORWARD : FFTW_BACKWARD);
  const double scale = forward ? g.cell_volume() : g.freq_cell_volume() / std::pow(2.0 * kPi, g.dim());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] *= checker(g, i, forward) * scale;
  return SampledField(g, std::move(data), forward ? Domain::frequency : Domain::space);
}

SampledField forward_transform_adjoint(const SampledField& spectrum) {
  // The forward matrix h e^{-i x_i xi_k} is symmetric in (i, k), so
  // F^H g = conj(F conj(g)).
  SampledField tmp = spectrum;
  for (auto& v : tmp.values) v = std::conj(v);
  tmp.domain = Domain::space;
  SampledField out = fourier_transform(tmp, Direction::forward);
  for (auto& v : out.values) v = std::conj(v);
  out.domain = Domain::space;
  return out;
}

double truncation_tail_estimate(double order_m, int dim, double freq_halfwidth) {
  if (order_m < -dim) return std::pow(freq_halfwidth, order_m + dim);
  return kInf;
}

double relative_l2_error(const SampledField& a, const SampledField& b) {
  if (a.values.size() != b.values.size()) throw ValidationError("field sizes differ");
  NeumaierSum num;
  NeumaierSum den;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    num.add(std::norm(a.values[i] - b.values[i]));
    den.add(std::norm(b.values[i]));
  }
  if (den.result() == 0.0) return std::sqrt(num.result());
  return std::sqrt(num.result() / den.result());
}

void write_csv(std::ostream& out, const SampledField& field) {
  const UniformGrid& g = field.grid;
  out << (g.dim() == 1 ? "i,re,im\n" : "i,j,re,im\n");
  char buf[128];
  for (std::size_t flat = 0; flat < field.values.size(); ++flat) {
    auto idx = g.unflatten(flat);
    const cplx v = field.values[flat];
    if (g.dim() == 1) {
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", idx[0], v.real(), v.imag());
    } else {
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g\n", idx[0], idx[1], v.real(), v.imag());
    }
    out << buf;
  }
}

SampledField read_csv(std::istream& in, const UniformGrid& grid) {
  SampledField field(grid, Domain::space);
  std::vector<bool> seen(grid.size(), false);
  std::string line;
  int lineno = 0;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1 && (line[0] == 'i' || line[0] == '#')) continue;
    // strtod rather than stream extraction: subnormal values must parse.
    const std::size_t want = grid.dim() == 1 ? 3 : 4;
    std::array<double, 4> cells{};
    std::size_t got = 0;
    const char* p = line.c_str();
    bool ok = true;
    while (ok && got < want) {
      char* end = nullptr;
      cells[got] = std::strtod(p, &end);
      if (end == p) {
        ok = false;
        break;
      }
      ++got;
      while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
      if (got < want) {
        if (*end != ',') ok = false;
        ++end;
      }
      p = end;
    }
    while (ok && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
    if (!ok || got != want || *p != '\0') throw ValidationError("csv line " + std::to_string(lineno) + " is malformed");
    const double ii = cells[0];
    const double jj = grid.dim() == 1 ? 0.0 : cells[1];
    if (ii != std::floor(ii) || jj != std::floor(jj)) {
      throw ValidationError("csv line " + std::to_string(lineno) + " has a non-integer index");
    }
    const long n = grid.points_per_dim();
    if (ii < 0 || ii >= n || jj < 0 || jj >= n) {
      throw ValidationError("csv line " + std::to_string(lineno) + " index out of range");
    }
    const long i = static_cast<long>(ii);
    const long j = static_cast<long>(jj);
    const double re = cells[want - 2];
    const double im = cells[want - 1];
    std::size_t flat = grid.dim() == 1 ? static_cast<std::size_t>(i)
                                       : static_cast<std::size_t>(i * n + j);
    if (seen[flat]) throw ValidationError("csv line " + std::to_string(lineno) + " duplicates a sample");
    seen[flat] = true;
    field.values[flat] = cplx(re, im);
    ++count;
  }
  if (count != grid.size()) {
    throw ValidationError("csv has " + std::to_string(count) + " samples, grid needs " +
                          std::to_string(grid.size()));
  }
  return field;
}

namespace {

template <class T>
void put_le(std::ostream& out, T value) {
  static_assert(sizeof(T) == 8);
  std::uint64_t bits;
  std::memcpy(&bits, &value, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  out.write(reinterpret_cast<const char*>(&bits), 8);
}

template <class T>
T get_le(std::istream& in) {
  std::uint64_t bits = 0;
  in.read(reinterpret_cast<char*>(&bits), 8);
  if (!in) throw ValidationError("binary field truncated");
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  T value;
  std::memcpy(&value, &bits, 8);
  return value;
}

}  // namespace

void write_binary(std::ostream& out, const SampledField& field) {
  put_le<std::int64_t>(out, field.grid.dim());
  put_le<std::int64_t>(out, field.grid.points_per_dim());
  put_le<double>(out, field.grid.space_halfwidth());
  for (const auto& v : field.values) {
    put_le<double>(out, v.real());
    put_le<double>(out, v.imag());
  }
}

SampledField read_binary(std::istream& in) {
  auto dim = get_le<std::int64_t>(in);
  auto n = get_le<std::int64_t>(in);
  auto halfwidth = get_le<double>(in);
  UniformGrid grid = make_grid(static_cast<int>(dim), static_cast<int>(n), halfwidth);
  SampledField field(grid, Domain::space);
  for (auto& v : field.values) {
    double re = get_le<double>(in);
    double im = get_le<double>(in);
    v = cplx(re, im);
  }
  return field;
}

}  // namespace fiolab
