#include "qmve/oracle.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <cstring>

namespace qmve::oracle {

namespace {

using std::complex;
constexpr complex<double> kI{0.0, 1.0};

Matrix identity(long d) { return Matrix::Identity(d, d); }

// Standard normal pairs via Box-Muller on the deterministic stream.
double gaussian(RandomStream& stream) {
  double u1 = stream.next_uniform();
  while (u1 == 0.0) {
    u1 = stream.next_uniform();
  }
  const double u2 = stream.next_uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Matrix haar_unitary(long d, RandomStream& stream) {
  Matrix g(d, d);
  for (long r = 0; r < d; ++r) {
    for (long c = 0; c < d; ++c) {
      g(r, c) = complex<double>(gaussian(stream), gaussian(stream));
    }
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Fix the phase ambiguity so the distribution is Haar.
  for (long c = 0; c < d; ++c) {
    const complex<double> diag = r(c, c);
    const double mag = std::abs(diag);
    q.col(c) *= (mag > 0.0) ? (diag / mag) : complex<double>(1.0, 0.0);
  }
  return q;
}

const Matrix& pauli(int which) {
  static const Matrix x = [] {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
  }();
  static const Matrix y = [] {
    Matrix m(2, 2);
    m << complex<double>(0, 0), -kI, kI, complex<double>(0, 0);
    return m;
  }();
  static const Matrix z = [] {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
  }();
  static const Matrix id = Matrix::Identity(2, 2);
  switch (which) {
    case 1:
      return x;
    case 2:
      return y;
    case 3:
      return z;
    default:
      return id;
  }
}

Matrix random_pauli_string(int n_qubits, RandomStream& stream) {
  while (true) {
    std::vector<int> letters(static_cast<std::size_t>(n_qubits));
    bool nontrivial = false;
    for (int& letter : letters) {
      letter = static_cast<int>(stream.next_u64() % 4);
      nontrivial |= (letter != 0);
    }
    if (!nontrivial) {
      continue;  // identity string is not a valid observable here
    }
    Matrix op = pauli(letters[0]);
    for (int qb = 1; qb < n_qubits; ++qb) {
      Matrix next(op.rows() * 2, op.cols() * 2);
      const Matrix& p = pauli(letters[static_cast<std::size_t>(qb)]);
      for (long r = 0; r < op.rows(); ++r) {
        for (long c = 0; c < op.cols(); ++c) {
          next.block(2 * r, 2 * c, 2, 2) = op(r, c) * p;
        }
      }
      op = std::move(next);
    }
    return op;
  }
}

double real_mean_value(const SmallSystem& sys) {
  const Vector a = sys.prep.col(0);  // A|0>
  return (a.adjoint() * sys.observable * a)(0, 0).real();
}

Matrix depolarize(const Matrix& rho, double p) {
  const long d = rho.rows();
  return p * rho + ((1.0 - p) / static_cast<double>(d)) * identity(d);
}

// Orthonormal in-subspace basis {|A>, |A_perp>} with |A_perp> from
// Gram-Schmidt applied to O|A>.
struct SubspaceBasis {
  Vector a;
  Vector a_perp;
};

SubspaceBasis subspace_basis(const SmallSystem& sys) {
  SubspaceBasis basis;
  basis.a = sys.prep.col(0);
  Vector oa = sys.observable * basis.a;
  oa -= (basis.a.adjoint() * oa)(0, 0) * basis.a;
  const double norm = oa.norm();
  if (norm < 1e-8) {
    throw std::invalid_argument(
        "oracle: prepared state is (numerically) an observable eigenstate");
  }
  basis.a_perp = oa / norm;
  return basis;
}

}  // namespace

SmallSystem SmallSystem::make(int n_qubits, Matrix prep, Matrix observable) {
  if (n_qubits < 1 || n_qubits > 4) {
    throw std::invalid_argument("SmallSystem: n_qubits must be in [1, 4]");
  }
  const long d = 1L << n_qubits;
  if (prep.rows() != d || prep.cols() != d || observable.rows() != d ||
      observable.cols() != d) {
    throw std::invalid_argument("SmallSystem: operator dimension mismatch");
  }
  SmallSystem sys;
  sys.n_qubits = n_qubits;
  sys.prep = std::move(prep);
  sys.observable = std::move(observable);
  if ((sys.prep.adjoint() * sys.prep - identity(d)).norm() > 1e-12 * d) {
    throw std::invalid_argument("SmallSystem: A is not unitary");
  }
  if ((sys.observable - sys.observable.adjoint()).norm() > 1e-12 * d ||
      (sys.observable * sys.observable - identity(d)).norm() > 1e-12 * d) {
    throw std::invalid_argument(
        "SmallSystem: O must be Hermitian with O^2 = I");
  }
  const double mean = real_mean_value(sys);
  if (std::abs(mean) > 0.999) {
    throw std::invalid_argument(
        "SmallSystem: |<O>| too close to 1 (eigenstate)");
  }
  sys.theta_star = std::acos(mean);
  return sys;
}

SmallSystem SmallSystem::random(int n_qubits, std::uint64_t seed) {
  if (n_qubits < 1 || n_qubits > 4) {
    throw std::invalid_argument("SmallSystem: n_qubits must be in [1, 4]");
  }
  const long d = 1L << n_qubits;
  for (std::uint64_t attempt = 0;; ++attempt) {
    RandomStream stream(seed, /*stream_id=*/0xC0FFEE ^ attempt);
    Matrix a = haar_unitary(d, stream);
    Matrix o = random_pauli_string(n_qubits, stream);
    SmallSystem candidate;
    candidate.n_qubits = n_qubits;
    candidate.prep = std::move(a);
    candidate.observable = std::move(o);
    const double mean = real_mean_value(candidate);
    if (std::abs(mean) > 0.999) {
      continue;
    }
    candidate.theta_star = std::acos(mean);
    return candidate;
  }
}

Matrix build_grover(const SmallSystem& sys) {
  const long d = sys.dim();
  Matrix reflect = -identity(d);
  reflect(0, 0) = 1.0;
  const Matrix q = sys.prep * reflect * sys.prep.adjoint() * sys.observable;

  // Q must act as exp(i theta* Ybar) on Span{|A>, |A_perp>}.
  const SubspaceBasis basis = subspace_basis(sys);
  Eigen::Matrix2cd on_subspace;
  on_subspace(0, 0) = (basis.a.adjoint() * q * basis.a)(0, 0);
  on_subspace(0, 1) = (basis.a.adjoint() * q * basis.a_perp)(0, 0);
  on_subspace(1, 0) = (basis.a_perp.adjoint() * q * basis.a)(0, 0);
  on_subspace(1, 1) = (basis.a_perp.adjoint() * q * basis.a_perp)(0, 0);
  Eigen::Matrix2cd rotation;
  const double c = std::cos(sys.theta_star);
  const double s = std::sin(sys.theta_star);
  rotation << c, s, -s, c;
  if ((on_subspace - rotation).norm() > 1e-10) {
    throw std::runtime_error(
        "build_grover: restriction to the invariant subspace is not the "
        "expected rotation");
  }
  return q;
}

Matrix amplified_state(const SmallSystem& sys, AmplifiedLevel level,
                       const NoiseModel& noise) {
  if (noise.n_qubits != sys.n_qubits) {
    throw std::invalid_argument("amplified_state: qubit count mismatch");
  }
  const long d = sys.dim();
  Matrix reflect = -identity(d);
  reflect(0, 0) = 1.0;
  const Matrix& a = sys.prep;
  const Matrix& o = sys.observable;
  const double p = noise.p_q;

  Matrix rho = Matrix::Zero(d, d);
  rho(0, 0) = 1.0;
  const auto apply = [&rho](const Matrix& u) { rho = u * rho * u.adjoint(); };

  apply(a);
  rho = depolarize(rho, p);
  for (int i = 0; i < level.m(); ++i) {
    apply(o);
    apply(a.adjoint());
    rho = depolarize(rho, p);
    apply(reflect);
    apply(a);
    rho = depolarize(rho, p);
  }
  if (level.even()) {
    apply(o);
    apply(a.adjoint());
    rho = depolarize(rho, p);
  }
  return rho;
}

double oracle_prob_one(const SmallSystem& sys, AmplifiedLevel level,
                       const NoiseModel& noise) {
  const Matrix rho = amplified_state(sys, level, noise);
  const long d = sys.dim();
  if (level.odd()) {
    // "1" is the negative-eigenvalue outcome of the observable projector.
    const Matrix m0 = 0.5 * (identity(d) + sys.observable);
    return 1.0 - (m0 * rho).trace().real();
  }
  return 1.0 - rho(0, 0).real();
}

std::array<double, 3> oracle_three_valued_probs(const SmallSystem& sys,
                                                AmplifiedLevel level,
                                                const NoiseModel& noise) {
  if (!level.even()) {
    throw std::invalid_argument(
        "oracle_three_valued_probs: level must be even");
  }
  const SubspaceBasis basis = subspace_basis(sys);
  const Vector back = sys.prep.adjoint() * basis.a_perp;  // A^dag |A_perp>
  const Matrix rho = amplified_state(sys, level, noise);
  const double p0 = rho(0, 0).real();
  const double p1 = (back.adjoint() * rho * back)(0, 0).real();
  const double p2 = 1.0 - p0 - p1;
  return {p0, p1, p2};
}

SmallSystem reprepare(const SmallSystem& sys, double theta_new) {
  require_theta_domain(theta_new);
  const SubspaceBasis basis = subspace_basis(sys);
  // Rotating the preparation by (theta* - theta)/2 inside the invariant
  // subspace shifts the mean-value angle to theta while leaving the basis
  // vector A^dag|A_perp> of the even-level circuit unchanged.
  const double rot = 0.5 * (sys.theta_star - theta_new);
  const long d = sys.dim();
  const Matrix outer_aa = basis.a * basis.a.adjoint();
  const Matrix outer_pp = basis.a_perp * basis.a_perp.adjoint();
  const Matrix outer_pa = basis.a_perp * basis.a.adjoint();
  const Matrix outer_ap = basis.a * basis.a_perp.adjoint();
  const Matrix rotate = identity(d) +
                        (std::cos(rot) - 1.0) * (outer_aa + outer_pp) +
                        std::sin(rot) * (outer_pa - outer_ap);
  SmallSystem out;
  out.n_qubits = sys.n_qubits;
  out.prep = rotate * sys.prep;
  out.observable = sys.observable;
  out.theta_star = theta_new;
  return out;
}

double oracle_three_valued_fisher(const SmallSystem& sys, AmplifiedLevel level,
                                  const NoiseModel& noise) {
  const double h = 1e-5;
  const auto probs = [&](double theta) {
    return oracle_three_valued_probs(reprepare(sys, theta), level, noise);
  };
  const std::array<double, 3> plus = probs(sys.theta_star + h);
  const std::array<double, 3> minus = probs(sys.theta_star - h);
  const std::array<double, 3> center =
      oracle_three_valued_probs(sys, level, noise);
  double info = 0.0;
  for (int k = 0; k < 3; ++k) {
    if (center[static_cast<std::size_t>(k)] < 1e-14) {
      continue;  // outcome has (numerically) no support
    }
    const double derivative = (plus[static_cast<std::size_t>(k)] -
                               minus[static_cast<std::size_t>(k)]) /
                              (2.0 * h);
    info += derivative * derivative / center[static_cast<std::size_t>(k)];
  }
  return info;
}

double oracle_qfi(const SmallSystem& sys, AmplifiedLevel level,
                  const NoiseModel& noise) {
  const auto state_at = [&](double theta) {
    return amplified_state(reprepare(sys, theta), level, noise);
  };
  const double theta = sys.theta_star;
  // Central differences with Richardson extrapolation (steps h and h/2).
  const double h = 1e-5;
  const Matrix d_coarse = (state_at(theta + h) - state_at(theta - h)) / (2 * h);
  const Matrix d_fine =
      (state_at(theta + h / 2) - state_at(theta - h / 2)) / h;
  const Matrix drho = (4.0 * d_fine - d_coarse) / 3.0;

  const Matrix rho = amplified_state(sys, level, noise);
  Eigen::SelfAdjointEigenSolver<Matrix> eigen(rho);
  const auto& values = eigen.eigenvalues();
  const auto& vectors = eigen.eigenvectors();
  const long d = sys.dim();
  double info = 0.0;
  for (long i = 0; i < d; ++i) {
    for (long j = 0; j < d; ++j) {
      const double weight = values(i) + values(j);
      if (weight < 1e-12) {
        continue;
      }
      const complex<double> element =
          (vectors.col(i).adjoint() * drho * vectors.col(j))(0, 0);
      info += 2.0 * std::norm(element) / weight;
    }
  }
  return info;
}

VerificationReport verify_grid(const std::vector<int>& qubit_counts,
                               int seeds_per_count,
                               const std::vector<int>& alphas,
                               const std::vector<double>& p_list,
                               std::uint64_t base_seed) {
  VerificationReport report;
  char line[256] = {0};
  const auto fail = [&report, &line](double got, double want) {
    ++report.failures;
    std::snprintf(line + std::strlen(line), sizeof(line) - std::strlen(line),
                  " got=%.17g want=%.17g", got, want);
    report.failure_lines.emplace_back(line);
  };

  for (int n : qubit_counts) {
    for (int s = 0; s < seeds_per_count; ++s) {
      const std::uint64_t seed =
          base_seed + 1000003ULL * static_cast<std::uint64_t>(n) +
          static_cast<std::uint64_t>(s);
      const SmallSystem sys = SmallSystem::random(n, seed);
      ++report.instances;
      for (double p : p_list) {
        const NoiseModel noise(p, n);
        for (int a : alphas) {
          const AmplifiedLevel level(a);
          ++report.checks;
          const double got = oracle_prob_one(sys, level, noise);
          const double want = prob_one(level, sys.theta_star, noise);
          const double err = std::abs(got - want);
          report.worst_prob_error = std::max(report.worst_prob_error, err);
          if (err >= 1e-10) {
            std::snprintf(line, sizeof(line),
                          "prob_one n=%d seed=%d p=%g alpha=%d", n, s, p, a);
            fail(got, want);
          }

          ++report.checks;
          const double qfi = oracle_qfi(sys, level, noise);
          const double qfi_want = quantum_fisher(level, noise);
          const double qfi_rel = std::abs(qfi - qfi_want) / qfi_want;
          report.worst_qfi_rel_error =
              std::max(report.worst_qfi_rel_error, qfi_rel);
          if (qfi_rel >= 1e-4) {
            std::snprintf(line, sizeof(line),
                          "qfi n=%d seed=%d p=%g alpha=%d", n, s, p, a);
            fail(qfi, qfi_want);
          }

          if (level.even()) {
            ++report.checks;
            const double three = oracle_three_valued_fisher(sys, level, noise);
            const double three_want =
                three_valued_fisher(level, sys.theta_star, noise);
            const double scale = std::max(std::abs(three_want), 1e-9);
            const double three_rel = std::abs(three - three_want) / scale;
            report.worst_three_valued_rel =
                std::max(report.worst_three_valued_rel, three_rel);
            if (three_rel >= 1e-5) {
              std::snprintf(line, sizeof(line),
                            "three_valued n=%d seed=%d p=%g alpha=%d", n, s,
                            p, a);
              fail(three, three_want);
            }
          }
        }
      }
    }
  }
  return report;
}

}  // namespace qmve::oracle
