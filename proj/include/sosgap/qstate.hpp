#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "sosgap/errors.hpp"
#include "sosgap/monomial.hpp"
#include "sosgap/pseudoexp.hpp"

namespace sosgap {

using cplx = std::complex<double>;

inline constexpr std::size_t kDefaultDimCap = std::size_t{1} << 14;

// r qudits of dimension n. Subsystem 0 is the most significant digit of a flat index.
struct HilbertShape {
  int local_dim = 2;
  int num_subsystems = 1;

  std::size_t dim() const {
    std::size_t d = 1;
    for (int s = 0; s < num_subsystems; ++s) d *= static_cast<std::size_t>(local_dim);
    return d;
  }

  void check(std::size_t cap = kDefaultDimCap) const {
    if (local_dim < 2) throw InvalidInstance("local dimension must be >= 2");
    if (num_subsystems < 0) throw InvalidInstance("negative subsystem count");
    double d = std::pow(static_cast<double>(local_dim), num_subsystems);
    if (d > static_cast<double>(cap))
      throw ResourceLimit("Hilbert dimension " + std::to_string(local_dim) + "^" +
                          std::to_string(num_subsystems) + " exceeds cap " + std::to_string(cap));
  }

  std::vector<int> digits(std::size_t idx) const {
    std::vector<int> d(num_subsystems);
    for (int s = num_subsystems - 1; s >= 0; --s) {
      d[s] = static_cast<int>(idx % local_dim);
      idx /= local_dim;
    }
    return d;
  }

  std::size_t index(const std::vector<int>& d) const {
    std::size_t idx = 0;
    for (int v : d) idx = idx * local_dim + v;
    return idx;
  }

  friend bool operator==(const HilbertShape&, const HilbertShape&) = default;
};

struct PureState {
  HilbertShape shape;
  Eigen::VectorXcd amplitudes;
};

template <class Scalar>
struct DensityMatrixT {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  HilbertShape shape;
  Matrix entries;

  std::size_t dim() const { return static_cast<std::size_t>(entries.rows()); }
  Scalar entry(std::size_t i, std::size_t j) const { return entries(i, j); }
  Scalar trace() const { return entries.trace(); }
  double hermiticity_residual() const {
    return entries.rows() ? (entries - entries.adjoint()).cwiseAbs().maxCoeff() : 0.0;
  }
  double min_eig() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(entries, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
  }
};

using DensityMatrix = DensityMatrixT<cplx>;
using RealDensityMatrix = DensityMatrixT<double>;

// (1/sqrt(n) sum_i x_i |i>)^{tensor c}.
inline PureState honest_witness(const std::vector<int>& x, int copies, std::size_t cap = kDefaultDimCap) {
  if (copies < 1) throw InvalidInstance("copies must be >= 1");
  validate_assignment(x, static_cast<int>(x.size()));
  const int n = static_cast<int>(x.size());
  HilbertShape shape{n, copies};
  shape.check(cap);
  Eigen::VectorXcd one(n);
  for (int i = 0; i < n; ++i) one(i) = x[i] / std::sqrt(static_cast<double>(n));
  Eigen::VectorXcd out = one;
  for (int c = 1; c < copies; ++c) {
    Eigen::VectorXcd next(out.size() * n);
    for (Eigen::Index a = 0; a < out.size(); ++a) next.segment(a * n, n) = out(a) * one;
    out = std::move(next);
  }
  return {shape, out};
}

inline DensityMatrix pure_density(const PureState& psi) {
  return {psi.shape, psi.amplitudes * psi.amplitudes.adjoint()};
}

// Lazy view of a pure state as |psi><psi|.
struct PureStateView {
  const PureState* psi;
  HilbertShape shape() const { return psi->shape; }
  std::size_t dim() const { return static_cast<std::size_t>(psi->amplitudes.size()); }
  cplx entry(std::size_t i, std::size_t j) const { return psi->amplitudes(i) * std::conj(psi->amplitudes(j)); }
};

template <class Scalar>
struct DenseView {
  const DensityMatrixT<Scalar>* rho;
  HilbertShape shape() const { return rho->shape; }
  std::size_t dim() const { return rho->dim(); }
  Scalar entry(std::size_t i, std::size_t j) const { return rho->entries(i, j); }
};

// ---------------------------------------------------------------------------
// Moment states

// rho[I, J] = psi[x_I x_J] / n^r. Entries depend only on the reduced monomials of the two
// tuples, so the view stores rho = W^T G W: a tuple -> monomial index and the Gram
// matrix G on the distinct monomials.
class MomentStateView {
 public:
  MomentStateView(const PseudoExpectation& pe, int registers, std::size_t cap = kDefaultDimCap)
      : shape_{pe.nvars(), registers} {
    if (registers < 0) throw DegreeError("negative register count");
    if (2 * registers > pe.degree() && !pe.complete())
      throw DegreeError("moment state on " + std::to_string(registers) + " registers needs pe degree " +
                        std::to_string(2 * registers));
    if (registers > 0) shape_.check(cap);
    const std::size_t dim = shape_.dim();
    std::unordered_map<Monomial, int, MonomialHash> id;
    tuple_mono_.resize(dim);
    for (std::size_t t = 0; t < dim; ++t) {
      Monomial m(shape_.digits(t));
      auto [it, fresh] = id.emplace(m, static_cast<int>(monos_.size()));
      if (fresh) {
        monos_.push_back(m);
        counts_.push_back(0);
      }
      tuple_mono_[t] = it->second;
      ++counts_[it->second];
    }
    const auto k = static_cast<Eigen::Index>(monos_.size());
    const double scale = std::pow(static_cast<double>(pe.nvars()), -registers);
    gram_.resize(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = a; b < k; ++b)
        gram_(a, b) = gram_(b, a) = to_double(pe.at(sym_diff(monos_[a], monos_[b]))) * scale;
  }

  HilbertShape shape() const { return shape_; }
  std::size_t dim() const { return tuple_mono_.size(); }
  double entry(std::size_t i, std::size_t j) const { return gram_(tuple_mono_[i], tuple_mono_[j]); }

  const std::vector<Monomial>& monomials() const { return monos_; }
  const std::vector<std::size_t>& counts() const { return counts_; }
  const Eigen::MatrixXd& gram() const { return gram_; }

  RealDensityMatrix materialize() const {
    RealDensityMatrix rho{shape_, Eigen::MatrixXd(dim(), dim())};
    for (std::size_t i = 0; i < dim(); ++i)
      for (std::size_t j = 0; j < dim(); ++j) rho.entries(i, j) = entry(i, j);
    return rho;
  }

  // Nonzero spectrum of rho equals that of D^{1/2} G D^{1/2} with D the tuple counts per
  // monomial; rho has extra zero eigenvalues whenever dim exceeds the monomial count.
  double compressed_min_eig() const {
    const auto k = static_cast<Eigen::Index>(monos_.size());
    Eigen::VectorXd s(k);
    for (Eigen::Index a = 0; a < k; ++a) s(a) = std::sqrt(static_cast<double>(counts_[a]));
    Eigen::MatrixXd kmat = s.asDiagonal() * gram_ * s.asDiagonal();
    double ev = min_eigenvalue(kmat);
    if (static_cast<std::size_t>(k) < dim()) ev = std::min(ev, 0.0);
    return ev;
  }

 private:
  HilbertShape shape_;
  std::vector<int> tuple_mono_;
  std::vector<Monomial> monos_;
  std::vector<std::size_t> counts_;
  Eigen::MatrixXd gram_;
};

inline RealDensityMatrix moment_state(const PseudoExpectation& pe, int registers,
                                      std::size_t cap = kDefaultDimCap) {
  if (registers == 0) return {HilbertShape{std::max(pe.nvars(), 2), 0}, Eigen::MatrixXd::Constant(1, 1, to_double(pe.at(Monomial{})))};
  return MomentStateView(pe, registers, cap).materialize();
}

// ---------------------------------------------------------------------------
// Partial operations

template <class Scalar>
DensityMatrixT<Scalar> partial_trace(const DensityMatrixT<Scalar>& rho, const std::vector<int>& keep) {
  const auto& sh = rho.shape;
  std::vector<char> kept(sh.num_subsystems, 0);
  for (int s : keep) {
    if (s < 0 || s >= sh.num_subsystems) throw InvalidInstance("partial_trace: subsystem out of range");
    kept[s] = 1;
  }
  HilbertShape out_shape{sh.local_dim, static_cast<int>(std::count(kept.begin(), kept.end(), 1))};
  HilbertShape traced{sh.local_dim, sh.num_subsystems - out_shape.num_subsystems};
  const std::size_t dout = out_shape.dim(), dtr = traced.dim();
  // Flat index of the kept digits and the traced digits for every full index.
  auto split = [&](std::size_t idx, std::size_t& k, std::size_t& t) {
    auto d = sh.digits(idx);
    k = t = 0;
    for (int s = 0; s < sh.num_subsystems; ++s) {
      if (kept[s]) k = k * sh.local_dim + d[s];
      else t = t * sh.local_dim + d[s];
    }
  };
  std::vector<std::size_t> by_pair(dout * dtr);
  for (std::size_t idx = 0; idx < sh.dim(); ++idx) {
    std::size_t k, t;
    split(idx, k, t);
    by_pair[k * dtr + t] = idx;
  }
  DensityMatrixT<Scalar> out{out_shape, DensityMatrixT<Scalar>::Matrix::Zero(dout, dout)};
  for (std::size_t a = 0; a < dout; ++a)
    for (std::size_t b = 0; b < dout; ++b) {
      Scalar s(0);
      for (std::size_t t = 0; t < dtr; ++t) s += rho.entries(by_pair[a * dtr + t], by_pair[b * dtr + t]);
      out.entries(a, b) = s;
    }
  return out;
}

namespace detail {

// Index pair after exchanging the row and column digits of the flipped subsystems.
inline std::pair<std::size_t, std::size_t> transpose_indices(const HilbertShape& sh, const std::vector<char>& flip,
                                                             std::size_t i, std::size_t j) {
  std::size_t ri = 0, rj = 0, pw = 1;
  for (int s = sh.num_subsystems - 1; s >= 0; --s) {
    std::size_t di = i % sh.local_dim, dj = j % sh.local_dim;
    i /= sh.local_dim;
    j /= sh.local_dim;
    if (flip[s]) std::swap(di, dj);
    ri += di * pw;
    rj += dj * pw;
    pw *= sh.local_dim;
  }
  return {ri, rj};
}

inline std::vector<char> subsystem_mask(const HilbertShape& sh, const std::vector<int>& subs) {
  std::vector<char> m(sh.num_subsystems, 0);
  for (int s : subs) {
    if (s < 0 || s >= sh.num_subsystems) throw InvalidInstance("subsystem out of range");
    m[s] = 1;
  }
  return m;
}

// Flat index with subsystem digits permuted: digit s of the result is digit perm[s] of idx.
inline std::size_t permute_index(const HilbertShape& sh, const std::vector<int>& perm, std::size_t idx) {
  auto d = sh.digits(idx);
  std::size_t out = 0;
  for (int s = 0; s < sh.num_subsystems; ++s) out = out * sh.local_dim + d[perm[s]];
  return out;
}

}  // namespace detail

template <class Scalar>
DensityMatrixT<Scalar> partial_transpose(const DensityMatrixT<Scalar>& rho, const std::vector<int>& flip) {
  auto mask = detail::subsystem_mask(rho.shape, flip);
  DensityMatrixT<Scalar> out{rho.shape, typename DensityMatrixT<Scalar>::Matrix(rho.entries.rows(), rho.entries.cols())};
  for (std::size_t i = 0; i < rho.dim(); ++i)
    for (std::size_t j = 0; j < rho.dim(); ++j) {
      auto [a, b] = detail::transpose_indices(rho.shape, mask, i, j);
      out.entries(a, b) = rho.entries(i, j);
    }
  return out;
}

// Max entrywise |rho^Gamma - rho| and ||rho^Gamma - rho||_F for any view with entry(i, j).
template <class View>
std::pair<double, double> partial_transpose_deviation(const View& v, const std::vector<int>& flip) {
  auto sh = v.shape();
  auto mask = detail::subsystem_mask(sh, flip);
  double mx = 0.0, fro = 0.0;
  for (std::size_t i = 0; i < v.dim(); ++i)
    for (std::size_t j = 0; j < v.dim(); ++j) {
      auto [a, b] = detail::transpose_indices(sh, mask, i, j);
      double d = std::abs(v.entry(a, b) - v.entry(i, j));
      mx = std::max(mx, d);
      fro += d * d;
    }
  return {mx, std::sqrt(fro)};
}

// Max entrywise |P rho P^T - rho| for the subsystem permutation perm.
template <class View>
double permutation_deviation(const View& v, const std::vector<int>& perm) {
  auto sh = v.shape();
  std::vector<std::size_t> p(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) p[i] = detail::permute_index(sh, perm, i);
  double mx = 0.0;
  for (std::size_t i = 0; i < v.dim(); ++i)
    for (std::size_t j = 0; j < v.dim(); ++j) mx = std::max(mx, std::abs(v.entry(p[i], p[j]) - v.entry(i, j)));
  return mx;
}

// tr(P_perm rho) = sum_i rho[perm(i), i].
template <class View>
auto permutation_expectation(const View& v, const std::vector<int>& perm) {
  auto sh = v.shape();
  decltype(v.entry(0, 0)) s{};
  for (std::size_t i = 0; i < v.dim(); ++i) s += v.entry(detail::permute_index(sh, perm, i), i);
  return s;
}

inline std::vector<std::vector<int>> all_permutations(int r) {
  std::vector<int> p(r);
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> out;
  do out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

// (1/r!) sum_pi P_pi on (C^n)^{tensor r}.
inline Eigen::MatrixXd sym_projector(const HilbertShape& shape, std::size_t cap = kDefaultDimCap) {
  shape.check(cap);
  const std::size_t d = shape.dim();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(d, d);
  auto perms = all_permutations(shape.num_subsystems);
  const double w = 1.0 / static_cast<double>(perms.size());
  for (const auto& perm : perms)
    for (std::size_t i = 0; i < d; ++i) p(detail::permute_index(shape, perm, i), i) += w;
  return p;
}

// ---------------------------------------------------------------------------
// DPS certificate

struct DpsOptions {
  std::size_t cap = kDefaultDimCap;
  // Dense eigendecompositions up to this dimension; the compressed spectrum above it.
  std::size_t dense_cap = 1500;
  bool full_cuts = false;
  double tolerance = 1e-9;
};

struct DpsReport {
  int registers = 0;
  int copies_per_side = 0;
  int level = 0;
  int local_dim = 0;
  std::size_t dim = 0;
  std::string method;
  double trace_residual = 0.0;
  double min_eig = 0.0;
  double perm_deviation = 0.0;
  struct Cut {
    std::vector<int> flip;
    double min_eig;
    double deviation;  // max |rho^Gamma - rho|
  };
  std::vector<Cut> ppt;
  // max |Tr_rest(rho_global) - rho_tilde| over entries.
  double reduction_residual = 0.0;
  double tolerance = 1e-9;

  double min_ppt_eig() const {
    double m = 1e300;
    for (const auto& c : ppt) m = std::min(m, c.min_eig);
    return ppt.empty() ? 0.0 : m;
  }
  bool passed() const {
    return trace_residual <= tolerance && min_eig >= -tolerance && perm_deviation <= tolerance &&
           min_ppt_eig() >= -tolerance && reduction_residual <= tolerance;
  }
  std::string first_failure() const {
    if (trace_residual > tolerance) return "trace residual " + std::to_string(trace_residual);
    if (min_eig < -tolerance) return "min eigenvalue " + std::to_string(min_eig);
    if (perm_deviation > tolerance) return "permutation deviation " + std::to_string(perm_deviation);
    if (min_ppt_eig() < -tolerance) return "partial transpose min eigenvalue " + std::to_string(min_ppt_eig());
    if (reduction_residual > tolerance) return "reduction residual " + std::to_string(reduction_residual);
    return "";
  }
};

// Certifies the 2k-register moment state as the symmetric PPT extension of the
// 2c-register protocol state.
inline DpsReport dps_certificate(const PseudoExpectation& pe, int copies_per_side, int level,
                                 const DpsOptions& opt = {}) {
  if (copies_per_side < 1 || level < copies_per_side)
    throw ConfigError("DPS level must be >= copies per side >= 1");
  DpsReport rep;
  rep.copies_per_side = copies_per_side;
  rep.level = level;
  rep.registers = 2 * level;
  rep.local_dim = pe.nvars();
  rep.tolerance = opt.tolerance;
  MomentStateView view(pe, rep.registers, opt.cap);
  rep.dim = view.dim();

  double tr = 0.0;
  for (std::size_t i = 0; i < view.dim(); ++i) tr += view.entry(i, i);
  rep.trace_residual = std::abs(tr - 1.0);

  for (int s = 0; s + 1 < rep.registers; ++s) {
    std::vector<int> perm(rep.registers);
    std::iota(perm.begin(), perm.end(), 0);
    std::swap(perm[s], perm[s + 1]);
    rep.perm_deviation = std::max(rep.perm_deviation, permutation_deviation(view, perm));
  }

  std::vector<std::vector<int>> cuts;
  if (opt.full_cuts) {
    for (std::uint32_t mask = 1; mask + 1 < (1u << rep.registers); ++mask) {
      std::vector<int> f;
      for (int s = 0; s < rep.registers; ++s)
        if (mask >> s & 1) f.push_back(s);
      cuts.push_back(f);
    }
  } else {
    for (int s = 0; s < rep.registers; ++s) cuts.push_back({s});
    std::vector<int> half(level);
    std::iota(half.begin(), half.end(), 0);
    if (level > 1) cuts.push_back(half);
  }

  if (view.dim() <= opt.dense_cap) {
    rep.method = "dense";
    auto rho = view.materialize();
    rep.min_eig = rho.min_eig();
    for (const auto& f : cuts) {
      auto pt = partial_transpose(rho, f);
      rep.ppt.push_back({f, pt.min_eig(), (pt.entries - rho.entries).cwiseAbs().maxCoeff()});
    }
  } else {
    // rho = W^T G W exactly; PPT follows from Weyl: lambda_min(rho^Gamma) >= lambda_min(rho) - ||rho^Gamma - rho||_F.
    rep.method = "compressed";
    rep.min_eig = view.compressed_min_eig();
    for (const auto& f : cuts) {
      auto [mx, fro] = partial_transpose_deviation(view, f);
      rep.ppt.push_back({f, rep.min_eig - fro, mx});
    }
  }

  if (level > copies_per_side) {
    MomentStateView reduced(pe, 2 * copies_per_side, opt.cap);
    HilbertShape rest{pe.nvars(), rep.registers - 2 * copies_per_side};
    const std::size_t dr = rest.dim();
    for (std::size_t a = 0; a < reduced.dim(); ++a)
      for (std::size_t b = 0; b < reduced.dim(); ++b) {
        double s = 0.0;
        for (std::size_t t = 0; t < dr; ++t) s += view.entry(a * dr + t, b * dr + t);
        rep.reduction_residual = std::max(rep.reduction_residual, std::abs(s - reduced.entry(a, b)));
      }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// IO: little-endian binary ("SGDM", uint32 local_dim, uint32 subsystems, uint64 dim, then
// dim*dim complex doubles row-major) and a JSON summary.

inline void write_binary(std::ostream& os, const DensityMatrix& rho) {
  static_assert(std::endian::native == std::endian::little, "binary format is little-endian");
  os.write("SGDM", 4);
  std::uint32_t ld = rho.shape.local_dim, ns = rho.shape.num_subsystems;
  std::uint64_t d = rho.dim();
  os.write(reinterpret_cast<const char*>(&ld), 4);
  os.write(reinterpret_cast<const char*>(&ns), 4);
  os.write(reinterpret_cast<const char*>(&d), 8);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double re = rho.entries(i, j).real(), im = rho.entries(i, j).imag();
      os.write(reinterpret_cast<const char*>(&re), 8);
      os.write(reinterpret_cast<const char*>(&im), 8);
    }
}

inline DensityMatrix read_binary(std::istream& is, std::size_t cap = kDefaultDimCap) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "SGDM", 4) != 0) throw ConfigError("not a density-matrix file");
  std::uint32_t ld = 0, ns = 0;
  std::uint64_t d = 0;
  is.read(reinterpret_cast<char*>(&ld), 4);
  is.read(reinterpret_cast<char*>(&ns), 4);
  is.read(reinterpret_cast<char*>(&d), 8);
  HilbertShape shape{static_cast<int>(ld), static_cast<int>(ns)};
  if (!is || d > cap || shape.dim() != d) throw ConfigError("bad density-matrix header");
  DensityMatrix rho{shape, Eigen::MatrixXcd(d, d)};
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double re = 0, im = 0;
      is.read(reinterpret_cast<char*>(&re), 8);
      is.read(reinterpret_cast<char*>(&im), 8);
      rho.entries(i, j) = {re, im};
    }
  if (!is) throw ConfigError("truncated density-matrix file");
  return rho;
}

template <class Scalar>
nlohmann::json summary_json(const DensityMatrixT<Scalar>& rho) {
  auto tr = rho.trace();
  return {{"local_dim", rho.shape.local_dim},
          {"subsystems", rho.shape.num_subsystems},
          {"dim", rho.dim()},
          {"trace", std::real(tr)},
          {"trace_imag", std::imag(tr)},
          {"min_eig", rho.min_eig()},
          {"hermiticity_residual", rho.hermiticity_residual()}};
}

inline nlohmann::json to_json(const DpsReport& r) {
  nlohmann::json cuts = nlohmann::json::array();
  for (const auto& c : r.ppt) cuts.push_back({{"flip", c.flip}, {"min_eig", c.min_eig}, {"deviation", c.deviation}});
  return {{"registers", r.registers},     {"copies_per_side", r.copies_per_side},
          {"level", r.level},             {"local_dim", r.local_dim},
          {"dim", r.dim},                 {"method", r.method},
          {"trace_residual", r.trace_residual}, {"min_eig", r.min_eig},
          {"perm_deviation", r.perm_deviation}, {"ppt", cuts},
          {"reduction_residual", r.reduction_residual}, {"tolerance", r.tolerance},
          {"passed", r.passed()}};
}

}  // namespace sosgap
