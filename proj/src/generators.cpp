#include "gcs/generators.hpp"

#include <json.hpp>

#include <cmath>
#include <numbers>
#include <utility>

#include "gcs/errors.hpp"
#include "gcs/rng.hpp"

namespace gcs {

namespace {

void check_latent(const LatentBall& ball, const Eigen::VectorXd& z) {
  if (z.size() != ball.dim)
    throw InvalidInputError("latent vector has dimension " + std::to_string(z.size()) +
                            ", expected " + std::to_string(ball.dim));
  if (!z.allFinite()) throw InvalidInputError("latent vector has non-finite entries");
  if (z.norm() > ball.radius * (1.0 + 1e-12))
    throw OutOfBallError("latent norm " + std::to_string(z.norm()) + " exceeds radius " +
                         std::to_string(ball.radius));
}

const std::vector<Eigen::MatrixXd>& weights_for(const ReluGeneratorSpec& spec,
                                                const ConditionId& c) {
  const auto it = spec.weights.find(c);
  if (it == spec.weights.end()) throw UnknownConditionError("unknown condition: " + c);
  return it->second;
}

const Eigen::MatrixXd& basis_for(const LinearClassSpec& spec, const ConditionId& c) {
  const auto it = spec.bases.find(c);
  if (it == spec.bases.end()) throw UnknownConditionError("unknown condition: " + c);
  return it->second;
}

Signal pack_signal(const Eigen::VectorXd& out, int channels, Eigen::Index per_channel_len) {
  Signal s = zero_signal(channels, per_channel_len);
  s.data = out.cast<std::complex<double>>();
  return s;
}

double spectral_norm(const Eigen::MatrixXd& M) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues()(0);
}

// Cyclic projections onto the shifted halfspaces sign * (row . z) >= 1; a
// point exists iff the strict sign system is feasible (the cone is scale
// invariant).
bool pocs_witness(const std::vector<std::pair<Eigen::VectorXd, double>>& constraints,
                  Eigen::Index k, const Eigen::VectorXd& seed_point, int restarts, int sweeps,
                  Rng& rng, Eigen::VectorXd& out) {
  if (constraints.empty()) {
    out = Eigen::VectorXd::Zero(k);
    return true;
  }
  for (int attempt = 0; attempt < restarts; ++attempt) {
    Eigen::VectorXd z(k);
    if (attempt == 0 && seed_point.size() == k) {
      z = seed_point;
    } else {
      for (Eigen::Index i = 0; i < k; ++i) z(i) = rng.normal();
    }
    for (int sweep = 0; sweep < sweeps; ++sweep) {
      bool satisfied = true;
      for (const auto& [row, sign] : constraints) {
        const double v = sign * row.dot(z);
        if (v < 1.0) {
          z += ((1.0 - v) * sign / row.squaredNorm()) * row;
          satisfied = false;
        }
      }
      if (satisfied) {
        out = z;
        return true;
      }
    }
  }
  return false;
}

}  // namespace

void validate(const ReluGeneratorSpec& spec) {
  const std::size_t d = spec.widths.empty() ? 0 : spec.widths.size() - 1;
  if (d < 2) throw InvalidInputError("ReluGeneratorSpec: depth must be at least 2");
  for (Eigen::Index w : spec.widths)
    if (w < 1) throw InvalidInputError("ReluGeneratorSpec: widths must be positive");
  for (std::size_t l = 1; l < d; ++l)
    if (spec.widths[l] < spec.widths[0])
      throw InvalidInputError("ReluGeneratorSpec: hidden widths must be >= latent width");
  if (spec.channels < 1 || spec.per_channel_len < 1)
    throw InvalidInputError("ReluGeneratorSpec: channels and per_channel_len must be positive");
  if (spec.widths.back() != static_cast<Eigen::Index>(spec.channels) * spec.per_channel_len)
    throw InvalidInputError("ReluGeneratorSpec: output width must equal channels * per_channel_len");
  if (spec.ball.dim != spec.widths[0] || !(spec.ball.radius > 0.0))
    throw InvalidInputError("ReluGeneratorSpec: ball must match latent width with positive radius");
  if (spec.weights.empty()) throw InvalidInputError("ReluGeneratorSpec: no conditions");
  for (const auto& [cid, Ws] : spec.weights) {
    if (cid.empty()) throw InvalidInputError("ReluGeneratorSpec: empty condition id");
    if (Ws.size() != d)
      throw InvalidInputError("ReluGeneratorSpec: condition " + cid + " must carry " +
                              std::to_string(d) + " weight matrices");
    for (std::size_t l = 0; l < d; ++l) {
      if (Ws[l].rows() != spec.widths[l + 1] || Ws[l].cols() != spec.widths[l])
        throw InvalidInputError("ReluGeneratorSpec: weight shape mismatch at layer " +
                                std::to_string(l + 1) + " for condition " + cid);
      if (!Ws[l].allFinite())
        throw InvalidInputError("ReluGeneratorSpec: non-finite weights for condition " + cid);
    }
  }
}

void validate(const LinearClassSpec& spec) {
  if (spec.channels < 1 || spec.per_channel_len < 1)
    throw InvalidInputError("LinearClassSpec: channels and per_channel_len must be positive");
  if (spec.ball.dim < 1 || !(spec.ball.radius > 0.0))
    throw InvalidInputError("LinearClassSpec: ball must have positive dimension and radius");
  if (spec.bases.empty()) throw InvalidInputError("LinearClassSpec: no conditions");
  const Eigen::Index ambient = static_cast<Eigen::Index>(spec.channels) * spec.per_channel_len;
  for (const auto& [cid, B] : spec.bases) {
    if (cid.empty()) throw InvalidInputError("LinearClassSpec: empty condition id");
    if (B.rows() != ambient || B.cols() != spec.ball.dim)
      throw InvalidInputError("LinearClassSpec: basis shape mismatch for condition " + cid);
    if (!B.allFinite())
      throw InvalidInputError("LinearClassSpec: non-finite basis for condition " + cid);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
    qr.setThreshold(1e-10);
    if (qr.rank() < spec.ball.dim)
      throw InvalidInputError("LinearClassSpec: dependent basis columns for condition " + cid);
  }
}

void validate(const GeneratorSpec& spec) {
  std::visit([](const auto& s) { validate(s); }, spec);
}

Eigen::Index latent_dim(const GeneratorSpec& spec) {
  return std::visit([](const auto& s) { return s.ball.dim; }, spec);
}

Eigen::Index ambient_dim(const GeneratorSpec& spec) {
  return std::visit(
      [](const auto& s) { return static_cast<Eigen::Index>(s.channels) * s.per_channel_len; },
      spec);
}

int channel_count(const GeneratorSpec& spec) {
  return std::visit([](const auto& s) { return s.channels; }, spec);
}

Eigen::Index signal_len(const GeneratorSpec& spec) {
  return std::visit([](const auto& s) { return s.per_channel_len; }, spec);
}

double ball_radius(const GeneratorSpec& spec) {
  return std::visit([](const auto& s) { return s.ball.radius; }, spec);
}

LatentBall latent_ball(const GeneratorSpec& spec) {
  return std::visit([](const auto& s) { return s.ball; }, spec);
}

std::vector<ConditionId> condition_ids(const GeneratorSpec& spec) {
  std::vector<ConditionId> out;
  std::visit(
      [&out](const auto& s) {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, ReluGeneratorSpec>) {
          for (const auto& [cid, w] : s.weights) out.push_back(cid);
        } else {
          for (const auto& [cid, b] : s.bases) out.push_back(cid);
        }
      },
      spec);
  return out;
}

bool has_condition(const GeneratorSpec& spec, const ConditionId& c) {
  return std::visit(
      [&c](const auto& s) {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, ReluGeneratorSpec>) {
          return s.weights.count(c) > 0;
        } else {
          return s.bases.count(c) > 0;
        }
      },
      spec);
}

Signal generate(const ReluGeneratorSpec& spec, const Eigen::VectorXd& z, const ConditionId& c) {
  const auto& Ws = weights_for(spec, c);
  check_latent(spec.ball, z);
  Eigen::VectorXd x = z;
  for (std::size_t l = 0; l + 1 < Ws.size(); ++l) x = (Ws[l] * x).cwiseMax(0.0);
  return pack_signal(Ws.back() * x, spec.channels, spec.per_channel_len);
}

Signal generate(const LinearClassSpec& spec, const Eigen::VectorXd& z, const ConditionId& c) {
  const auto& B = basis_for(spec, c);
  check_latent(spec.ball, z);
  return pack_signal(B * z, spec.channels, spec.per_channel_len);
}

Signal generate(const GeneratorSpec& spec, const Eigen::VectorXd& z, const ConditionId& c) {
  return std::visit([&](const auto& s) { return generate(s, z, c); }, spec);
}

Eigen::VectorXd generate_gradient(const ReluGeneratorSpec& spec, const Eigen::VectorXd& z,
                                  const ConditionId& c, const Eigen::VectorXd& cotangent) {
  const auto& Ws = weights_for(spec, c);
  check_latent(spec.ball, z);
  if (cotangent.size() != spec.widths.back())
    throw InvalidInputError("generate_gradient: cotangent has wrong dimension");
  const std::size_t d = Ws.size();
  std::vector<Eigen::VectorXd> activations(d);  // post-ReLU inputs to layer l+1
  Eigen::VectorXd x = z;
  for (std::size_t l = 0; l + 1 < d; ++l) {
    activations[l] = Ws[l] * x;
    x = activations[l].cwiseMax(0.0);
  }
  Eigen::VectorXd u = Ws.back().transpose() * cotangent;
  for (std::size_t l = d - 1; l-- > 0;) {
    for (Eigen::Index i = 0; i < u.size(); ++i)
      if (!(activations[l](i) > 0.0)) u(i) = 0.0;
    u = Ws[l].transpose() * u;
  }
  return u;
}

Eigen::VectorXd generate_gradient(const LinearClassSpec& spec, const Eigen::VectorXd& z,
                                  const ConditionId& c, const Eigen::VectorXd& cotangent) {
  const auto& B = basis_for(spec, c);
  check_latent(spec.ball, z);
  if (cotangent.size() != B.rows())
    throw InvalidInputError("generate_gradient: cotangent has wrong dimension");
  return B.transpose() * cotangent;
}

Eigen::VectorXd generate_gradient(const GeneratorSpec& spec, const Eigen::VectorXd& z,
                                  const ConditionId& c, const Eigen::VectorXd& cotangent) {
  return std::visit([&](const auto& s) { return generate_gradient(s, z, c, cotangent); }, spec);
}

Eigen::MatrixXd generate_jacobian(const GeneratorSpec& spec, const Eigen::VectorXd& z,
                                  const ConditionId& c) {
  if (const auto* lin = std::get_if<LinearClassSpec>(&spec)) {
    check_latent(lin->ball, z);
    return basis_for(*lin, c);
  }
  const auto& relu = std::get<ReluGeneratorSpec>(spec);
  const auto& Ws = weights_for(relu, c);
  check_latent(relu.ball, z);
  Eigen::MatrixXd J = Ws[0];
  Eigen::VectorXd x = z;
  for (std::size_t l = 0; l + 1 < Ws.size(); ++l) {
    const Eigen::VectorXd pre = Ws[l] * x;
    for (Eigen::Index i = 0; i < pre.size(); ++i)
      if (!(pre(i) > 0.0)) J.row(i).setZero();
    x = pre.cwiseMax(0.0);
    J = Ws[l + 1] * J;
  }
  return J;
}

std::vector<std::uint32_t> activation_pattern(const ReluGeneratorSpec& spec,
                                              const Eigen::VectorXd& z, const ConditionId& c) {
  const auto& Ws = weights_for(spec, c);
  if (z.size() != spec.ball.dim)
    throw InvalidInputError("activation_pattern: latent dimension mismatch");
  std::vector<std::uint32_t> bits;
  Eigen::VectorXd x = z;
  for (std::size_t l = 0; l + 1 < Ws.size(); ++l) {
    const Eigen::VectorXd pre = Ws[l] * x;
    if (pre.size() > 32)
      throw CapacityError("activation_pattern: hidden layer wider than 32 units");
    std::uint32_t mask = 0;
    for (Eigen::Index i = 0; i < pre.size(); ++i)
      if (pre(i) > 0.0) mask |= (1u << i);
    bits.push_back(mask);
    x = pre.cwiseMax(0.0);
  }
  return bits;
}

ConeDecomposition enumerate_cones(const ReluGeneratorSpec& spec, const ConditionId& c,
                                  const ConeEnumerationOptions& options) {
  validate(spec);
  const auto& Ws = weights_for(spec, c);
  const std::size_t d = Ws.size();
  const Eigen::Index k = spec.ball.dim;
  Eigen::Index hidden_total = 0;
  for (std::size_t l = 1; l < d; ++l) hidden_total += spec.widths[l];
  if (hidden_total > options.unit_cap)
    throw CapacityError("enumerate_cones: " + std::to_string(hidden_total) +
                        " hidden units exceed cap " + std::to_string(options.unit_cap));

  Rng rng(options.seed);
  Rng sample_rng = rng.derive(1);
  Rng pocs_rng = rng.derive(2);

  // Probe latents: realized patterns come with free witnesses.
  std::vector<Eigen::VectorXd> samples;
  std::vector<std::vector<std::uint32_t>> sample_bits;
  samples.reserve(options.presamples);
  for (int s = 0; s < options.presamples; ++s) {
    Eigen::VectorXd g(k);
    for (Eigen::Index i = 0; i < k; ++i) g(i) = sample_rng.normal();
    const double nrm = g.norm();
    if (nrm == 0.0) continue;
    const double scale =
        spec.ball.radius * std::pow(sample_rng.uniform(), 1.0 / static_cast<double>(k)) / nrm;
    samples.push_back(g * scale);
    sample_bits.push_back(activation_pattern(spec, samples.back(), c));
  }

  struct Node {
    std::vector<std::uint32_t> bits;
    std::vector<Eigen::MatrixXd> pre;
    Eigen::MatrixXd carry;
    std::vector<int> matching;
    Eigen::VectorXd witness;
    std::vector<std::pair<Eigen::VectorXd, double>> constraints;
  };

  ConeDecomposition decomp;
  decomp.channels = spec.channels;
  decomp.per_channel_len = spec.per_channel_len;
  decomp.ball = spec.ball;

  Node root;
  root.carry = Eigen::MatrixXd::Identity(k, k);
  for (int s = 0; s < static_cast<int>(samples.size()); ++s) root.matching.push_back(s);

  std::vector<Node> stack;
  stack.push_back(std::move(root));
  while (!stack.empty()) {
    Node node = std::move(stack.back());
    stack.pop_back();
    const std::size_t layer = node.bits.size();

    if (layer == d - 1) {
      ConePiece piece;
      piece.pattern = node.bits;
      piece.map = Ws.back() * node.carry;
      piece.preactivations = node.pre;
      piece.witness = node.witness;
      if (piece.witness.norm() > spec.ball.radius)
        piece.witness *= 0.9 * spec.ball.radius / piece.witness.norm();
      if (activation_pattern(spec, piece.witness, c) != piece.pattern) {
        ++decomp.possibly_infeasible;
        continue;
      }
      decomp.pieces.push_back(std::move(piece));
      continue;
    }

    const Eigen::MatrixXd M = Ws[layer] * node.carry;
    const Eigen::Index units = M.rows();
    // Rows that are identically zero keep bit 0; only live rows branch.
    std::vector<Eigen::Index> free_rows;
    for (Eigen::Index i = 0; i < units; ++i)
      if (M.row(i).norm() != 0.0) free_rows.push_back(i);

    // Deterministic order: descending masks so the stack pops ascending.
    for (std::uint32_t mask = (1u << free_rows.size()); mask-- > 0;) {
      std::uint32_t full = 0;
      for (std::size_t b = 0; b < free_rows.size(); ++b)
        if (mask & (1u << b)) full |= (1u << free_rows[b]);

      Node child;
      child.bits = node.bits;
      child.bits.push_back(full);
      child.constraints = node.constraints;
      for (Eigen::Index i : free_rows)
        child.constraints.emplace_back(M.row(i).transpose(),
                                       (full & (1u << i)) ? 1.0 : -1.0);

      for (int s : node.matching)
        if (sample_bits[s][layer] == full) child.matching.push_back(s);

      if (!child.matching.empty()) {
        child.witness = samples[child.matching.front()];
      } else {
        Eigen::VectorXd w;
        if (!pocs_witness(child.constraints, k, node.witness, options.restarts,
                          options.pocs_sweeps, pocs_rng, w)) {
          ++decomp.possibly_infeasible;
          continue;
        }
        const auto realized = activation_pattern(spec, w, c);
        bool prefix_ok = true;
        for (std::size_t l = 0; l <= layer; ++l)
          prefix_ok = prefix_ok && (realized[l] == child.bits[l]);
        if (!prefix_ok) {
          ++decomp.possibly_infeasible;
          continue;
        }
        child.witness = w;
      }

      Eigen::MatrixXd D = Eigen::MatrixXd::Zero(units, units);
      for (Eigen::Index i = 0; i < units; ++i)
        if (full & (1u << i)) D(i, i) = 1.0;
      child.carry = D * M;
      child.pre = node.pre;
      child.pre.push_back(M);
      stack.push_back(std::move(child));
    }
  }
  return decomp;
}

ConeDecomposition enumerate_cones(const LinearClassSpec& spec, const ConditionId& c,
                                  const ConeEnumerationOptions& options) {
  (void)options;
  validate(spec);
  const auto& B = basis_for(spec, c);
  ConeDecomposition decomp;
  decomp.channels = spec.channels;
  decomp.per_channel_len = spec.per_channel_len;
  decomp.ball = spec.ball;
  ConePiece piece;
  piece.map = B;
  piece.witness = Eigen::VectorXd::Zero(spec.ball.dim);
  decomp.pieces.push_back(std::move(piece));
  return decomp;
}

ConeDecomposition enumerate_cones(const GeneratorSpec& spec, const ConditionId& c,
                                  const ConeEnumerationOptions& options) {
  return std::visit([&](const auto& s) { return enumerate_cones(s, c, options); }, spec);
}

Eigen::Index find_piece(const ConeDecomposition& decomp, const Eigen::VectorXd& z, double tol) {
  const double znorm = z.norm();
  for (std::size_t j = 0; j < decomp.pieces.size(); ++j) {
    const ConePiece& piece = decomp.pieces[j];
    bool inside = true;
    for (std::size_t l = 0; inside && l < piece.preactivations.size(); ++l) {
      const Eigen::MatrixXd& M = piece.preactivations[l];
      for (Eigen::Index i = 0; inside && i < M.rows(); ++i) {
        const double v = M.row(i).dot(z);
        const double scale = M.row(i).norm() * znorm;
        if (piece.pattern[l] & (1u << i))
          inside = v >= -tol * scale;
        else
          inside = v <= tol * scale;
      }
    }
    if (inside) return static_cast<Eigen::Index>(j);
  }
  return -1;
}

double log_cone_count_bound(const ReluGeneratorSpec& spec) {
  validate(spec);
  const double k = static_cast<double>(spec.widths[0]);
  const std::size_t d = spec.widths.size() - 1;
  double log_kbar = 0.0;
  for (std::size_t l = 1; l < d; ++l) log_kbar += std::log(static_cast<double>(spec.widths[l]));
  log_kbar /= static_cast<double>(d - 1);
  return k * static_cast<double>(d - 1) *
         (std::log(2.0 * std::numbers::e) + log_kbar - std::log(k));
}

double lipschitz_bound(const ReluGeneratorSpec& spec, const ConditionId& c) {
  const auto& Ws = weights_for(spec, c);
  double prod = 1.0;
  for (const auto& W : Ws) prod *= spectral_norm(W);
  return prod;
}

double lipschitz_bound(const LinearClassSpec& spec, const ConditionId& c) {
  return spectral_norm(basis_for(spec, c));
}

double lipschitz_bound(const GeneratorSpec& spec, const ConditionId& c) {
  return std::visit([&](const auto& s) { return lipschitz_bound(s, c); }, spec);
}

ReluGeneratorSpec tightness_relu_family(const std::vector<Eigen::Index>& hidden_widths,
                                        int channels, Eigen::Index per_channel_len, double radius,
                                        const std::vector<std::pair<ConditionId, double>>& thetas,
                                        std::uint64_t seed) {
  if (hidden_widths.size() < 2)
    throw InvalidInputError("tightness_relu_family: need latent width plus at least one hidden layer");
  if (thetas.empty()) throw InvalidInputError("tightness_relu_family: no conditions");
  ReluGeneratorSpec spec;
  spec.widths = hidden_widths;
  spec.widths.push_back(static_cast<Eigen::Index>(channels) * per_channel_len);
  spec.channels = channels;
  spec.per_channel_len = per_channel_len;
  spec.ball = LatentBall{hidden_widths[0], radius};

  const std::size_t d = spec.widths.size() - 1;
  Rng root(seed);
  Rng base_rng = root.derive(1);
  auto draw = [](Rng& r, Eigen::Index rows, Eigen::Index cols, double std) {
    Eigen::MatrixXd M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = std * r.normal();
    return M;
  };
  std::vector<Eigen::MatrixXd> base(d);
  for (std::size_t l = 0; l < d; ++l) {
    const double gain = (l + 1 < d) ? 2.0 : 1.0;
    base[l] = draw(base_rng, spec.widths[l + 1], spec.widths[l],
                   std::sqrt(gain / static_cast<double>(spec.widths[l])));
  }
  for (std::size_t ci = 0; ci < thetas.size(); ++ci) {
    const auto& [cid, theta] = thetas[ci];
    if (theta < 0.0) throw InvalidInputError("tightness_relu_family: negative theta");
    Rng cond_rng = root.derive(100 + ci);
    std::vector<Eigen::MatrixXd> Ws = base;
    for (std::size_t l = 0; l < d; ++l) {
      const double gain = (l + 1 < d) ? 2.0 : 1.0;
      Ws[l] += theta * draw(cond_rng, spec.widths[l + 1], spec.widths[l],
                            std::sqrt(gain / static_cast<double>(spec.widths[l])));
    }
    spec.weights[cid] = std::move(Ws);
  }
  validate(spec);
  return spec;
}

LinearClassSpec tightness_linear_family(Eigen::Index k, int channels,
                                        Eigen::Index per_channel_len, double radius,
                                        double envelope_decay,
                                        const std::vector<std::pair<ConditionId, double>>& thetas,
                                        std::uint64_t seed) {
  if (k < 1) throw InvalidInputError("tightness_linear_family: k must be positive");
  if (!(envelope_decay > 0.0))
    throw InvalidInputError("tightness_linear_family: envelope_decay must be positive");
  if (thetas.empty()) throw InvalidInputError("tightness_linear_family: no conditions");
  const Eigen::Index n = per_channel_len;
  const Eigen::Index ambient = static_cast<Eigen::Index>(channels) * n;
  if (k > ambient) throw InvalidInputError("tightness_linear_family: k exceeds ambient dimension");

  auto filter = [&](const Eigen::MatrixXd& cols) {
    Eigen::MatrixXd out(ambient, cols.cols());
    for (Eigen::Index j = 0; j < cols.cols(); ++j) {
      Signal s = zero_signal(channels, n);
      s.data = cols.col(j).cast<std::complex<double>>();
      Spectrum sp = dft(s);
      for (int ch = 0; ch < channels; ++ch)
        for (Eigen::Index i = 0; i < n; ++i)
          sp.coeffs(ch * n + i) *=
              std::exp(-static_cast<double>(std::min(i, n - i)) / envelope_decay);
      out.col(j) = idft(sp).data.real();
    }
    return out;
  };

  Rng root(seed);
  Rng base_rng = root.derive(1);
  auto draw = [](Rng& r, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = r.normal();
    return M;
  };
  const Eigen::MatrixXd base = filter(draw(base_rng, ambient, k));

  LinearClassSpec spec;
  spec.channels = channels;
  spec.per_channel_len = n;
  spec.ball = LatentBall{k, radius};
  for (std::size_t ci = 0; ci < thetas.size(); ++ci) {
    const auto& [cid, theta] = thetas[ci];
    if (theta < 0.0) throw InvalidInputError("tightness_linear_family: negative theta");
    Rng cond_rng = root.derive(100 + ci);
    Eigen::MatrixXd raw = base + theta * filter(draw(cond_rng, ambient, k));
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    const Eigen::VectorXd diag = qr.matrixQR().diagonal().head(k).cwiseAbs();
    if (diag.minCoeff() < 1e-10 * diag.maxCoeff())
      throw DegenerateClassError("tightness_linear_family: dependent columns for condition " + cid);
    spec.bases[cid] = qr.householderQ() * Eigen::MatrixXd::Identity(ambient, k);
  }
  validate(spec);
  return spec;
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw InvalidInputError("generator_from_json: " + where + " must be an array of rows");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols)
      throw InvalidInputError("generator_from_json: ragged rows in " + where);
    for (Eigen::Index c = 0; c < cols; ++c) M(i, c) = j[i][c].get<double>();
  }
  return M;
}

}  // namespace

std::string generator_to_json(const GeneratorSpec& spec) {
  validate(spec);
  nlohmann::json j;
  if (const auto* relu = std::get_if<ReluGeneratorSpec>(&spec)) {
    j["kind"] = "relu";
    j["widths"] = relu->widths;
    j["channels"] = relu->channels;
    j["radius"] = relu->ball.radius;
    nlohmann::json conds = nlohmann::json::object();
    for (const auto& [cid, Ws] : relu->weights) {
      nlohmann::json entry = nlohmann::json::object();
      for (std::size_t l = 0; l < Ws.size(); ++l)
        entry["W" + std::to_string(l + 1)] = matrix_to_json(Ws[l]);
      conds[cid] = std::move(entry);
    }
    j["conditions"] = std::move(conds);
  } else {
    const auto& lin = std::get<LinearClassSpec>(spec);
    j["kind"] = "linear";
    j["widths"] = {lin.ball.dim, static_cast<Eigen::Index>(lin.channels) * lin.per_channel_len};
    j["channels"] = lin.channels;
    j["radius"] = lin.ball.radius;
    nlohmann::json conds = nlohmann::json::object();
    for (const auto& [cid, B] : lin.bases) conds[cid] = {{"B", matrix_to_json(B)}};
    j["conditions"] = std::move(conds);
  }
  return j.dump();
}

GeneratorSpec generator_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError(std::string("generator_from_json: parse failure: ") + e.what());
  }
  try {
    const std::string kind = j.at("kind").get<std::string>();
    const int channels = j.at("channels").get<int>();
    const double radius = j.at("radius").get<double>();
    const auto widths = j.at("widths").get<std::vector<Eigen::Index>>();
    if (widths.empty()) throw InvalidInputError("generator_from_json: widths is empty");
    if (channels < 1 || widths.back() % channels != 0)
      throw InvalidInputError("generator_from_json: output width not divisible by channels");
    const Eigen::Index n = widths.back() / channels;
    if (kind == "relu") {
      ReluGeneratorSpec spec;
      spec.widths = widths;
      spec.channels = channels;
      spec.per_channel_len = n;
      spec.ball = LatentBall{widths[0], radius};
      for (const auto& [cid, entry] : j.at("conditions").items()) {
        std::vector<Eigen::MatrixXd> Ws;
        for (std::size_t l = 1; l < widths.size(); ++l) {
          const std::string key = "W" + std::to_string(l);
          Ws.push_back(matrix_from_json(entry.at(key), "conditions." + cid + "." + key));
        }
        spec.weights[cid] = std::move(Ws);
      }
      validate(spec);
      return spec;
    }
    if (kind == "linear") {
      LinearClassSpec spec;
      spec.channels = channels;
      spec.per_channel_len = n;
      spec.ball = LatentBall{widths[0], radius};
      for (const auto& [cid, entry] : j.at("conditions").items())
        spec.bases[cid] = matrix_from_json(entry.at("B"), "conditions." + cid + ".B");
      validate(spec);
      return spec;
    }
    throw InvalidInputError("generator_from_json: unknown kind " + kind);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError(std::string("generator_from_json: ") + e.what());
  }
}

}  // namespace gcs
