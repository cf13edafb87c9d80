#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "infoclip/entropy.hpp"
#include "infoclip/errors.hpp"
#include "infoclip/gram.hpp"
#include "infoclip/matrix.hpp"

namespace infoclip {

struct LossWeights {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
};

struct LossBreakdown {
  double task = 0.0;
  double compression = 0.0;
  double distillation = 0.0;
  double total = 0.0;
};

namespace detail {

inline constexpr double kTwoOverLn2 = 2.0 / std::numbers::ln2;

inline void validate_weights(const LossWeights& w) {
  if (!std::isfinite(w.lambda1) || !std::isfinite(w.lambda2))
    throw InputError("LossWeights: non-finite weight");
  if (w.lambda1 < 0.0 || w.lambda2 < 0.0)
    throw InputError("LossWeights: weights must be >= 0");
}

/// Trace-normalized Gram of a raw feature matrix plus the quantities the
/// backward pass reuses.
struct TraceGram {
  DenseMatrix g; // X X^T / t
  double t = 0.0;   // tr(X X^T)
  double fro = 0.0; // ||g||_F^2
};

inline TraceGram trace_gram(const DenseMatrix& x) {
  TraceGram out;
  out.g = matmul_nt(x, x);
  for (std::size_t i = 0; i < out.g.rows(); ++i) out.t += out.g(i, i);
  if (!(out.t > 0.0))
    throw DegenerateError("trace_gram: tr(X X^T) = " + std::to_string(out.t) +
                          " is not positive");
  for (double& e : out.g.data()) e /= out.t;
  out.fro = frobenius_sq(out.g);
  return out;
}

/// Gradient of a scalar through G = X X^T / tr(X X^T) given the (symmetric)
/// upstream dL/dG: dL/dX = (2/t) (U X - <U, G> X).
inline DenseMatrix backprop_trace_gram(const DenseMatrix& upstream, const TraceGram& fwd,
                                       const DenseMatrix& x) {
  const double c = inner(upstream, fwd.g);
  DenseMatrix out = matmul(upstream, x);
  add_scaled(out, -c, x);
  const double scale = 2.0 / fwd.t;
  for (double& e : out.data()) e *= scale;
  return out;
}

struct RowNormed {
  DenseMatrix y; // unit-row version of x
  std::vector<double> norms;
};

inline RowNormed row_normalize_cached(const DenseMatrix& x) {
  RowNormed out;
  out.y = DenseMatrix(x.rows(), x.cols());
  out.norms.resize(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double n2 = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) n2 += x(i, j) * x(i, j);
    const double n = std::sqrt(n2);
    if (!(n > 0.0))
      throw DegenerateError("row normalization: row " + std::to_string(i) + " has zero norm");
    out.norms[i] = n;
    for (std::size_t j = 0; j < x.cols(); ++j) out.y(i, j) = x(i, j) / n;
  }
  return out;
}

/// dL/dx_i = (u_i - <u_i, y_i> y_i) / ||x_i|| for y_i = x_i / ||x_i||.
inline DenseMatrix backprop_row_normalize(const DenseMatrix& upstream, const RowNormed& fwd) {
  DenseMatrix out(upstream.rows(), upstream.cols());
  for (std::size_t i = 0; i < upstream.rows(); ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < upstream.cols(); ++j) dot += upstream(i, j) * fwd.y(i, j);
    for (std::size_t j = 0; j < upstream.cols(); ++j)
      out(i, j) = (upstream(i, j) - dot * fwd.y(i, j)) / fwd.norms[i];
  }
  return out;
}

/// Shared forward state of the compression loss.
struct CompressionForward {
  RowNormed rn;                     // row-normalized alignment rows
  TraceGram gv, gl, gr;
  DenseMatrix joint_n;              // trace-normalized Gv o Gl o Gr
  double joint_tau = 0.0;
  double joint_fro = 0.0;
  DenseMatrix teacher_n;            // trace-normalized Gv o Gl (optional term)
  double teacher_tau = 0.0;
  double teacher_fro = 0.0;
  bool with_teacher_entropy = false;
  double value = 0.0;
};

inline CompressionForward compression_forward(const FeatureBatch& dv,
                                              const FeatureBatch& dl_expanded,
                                              const FeatureBatch& r,
                                              bool include_teacher_entropy) {
  const std::size_t n = dv.samples();
  if (dl_expanded.samples() != n || r.samples() != n)
    throw DimensionError("compression loss: sample counts differ (" + std::to_string(n) + ", " +
                         std::to_string(dl_expanded.samples()) + ", " +
                         std::to_string(r.samples()) + ")");
  CompressionForward f;
  f.with_teacher_entropy = include_teacher_entropy;
  f.rn = row_normalize_cached(r.values());
  f.gv = trace_gram(dv.values());
  f.gl = trace_gram(dl_expanded.values());
  f.gr = trace_gram(f.rn.y);

  DenseMatrix p = hadamard(hadamard(f.gv.g, f.gl.g), f.gr.g);
  f.joint_tau = trace(p);
  if (!(f.joint_tau > 0.0))
    throw DegenerateError("compression loss: joint Hadamard product has non-positive trace");
  for (double& e : p.data()) e /= f.joint_tau;
  f.joint_fro = frobenius_sq(p);
  f.joint_n = std::move(p);

  f.value = -log2_of(f.gr.fro) + log2_of(f.joint_fro);

  if (include_teacher_entropy) {
    DenseMatrix q = hadamard(f.gv.g, f.gl.g);
    f.teacher_tau = trace(q);
    if (!(f.teacher_tau > 0.0))
      throw DegenerateError("compression loss: teacher Hadamard product has non-positive trace");
    for (double& e : q.data()) e /= f.teacher_tau;
    f.teacher_fro = frobenius_sq(q);
    f.teacher_n = std::move(q);
    f.value += -log2_of(f.teacher_fro);
  }
  return f;
}

/// Shared forward state of the distillation loss.
struct DistillationForward {
  RowNormed rn_t, rn_s;
  TraceGram gt, gs;
  DenseMatrix joint_n;
  double joint_tau = 0.0;
  double joint_fro = 0.0;
  double value = 0.0;
};

inline DistillationForward distillation_forward(const FeatureBatch& r_teacher,
                                                const FeatureBatch& r_student) {
  if (r_teacher.samples() != r_student.samples())
    throw DimensionError("distillation loss: sample counts differ (" +
                         std::to_string(r_teacher.samples()) + " vs " +
                         std::to_string(r_student.samples()) + ")");
  DistillationForward f;
  f.rn_t = row_normalize_cached(r_teacher.values());
  f.rn_s = row_normalize_cached(r_student.values());
  f.gt = trace_gram(f.rn_t.y);
  f.gs = trace_gram(f.rn_s.y);

  DenseMatrix p = hadamard(f.gt.g, f.gs.g);
  f.joint_tau = trace(p);
  if (!(f.joint_tau > 0.0))
    throw DegenerateError("distillation loss: Hadamard product has non-positive trace");
  for (double& e : p.data()) e /= f.joint_tau;
  f.joint_fro = frobenius_sq(p);
  f.joint_n = std::move(p);

  f.value = log2_of(f.gt.fro) + log2_of(f.gs.fro) - log2_of(f.joint_fro);
  return f;
}

} // namespace detail

/// Compression loss -log2 ||G_R||_F^2 + log2 ||norm(G_V o G_L o G_R)||_F^2
/// over a common batch axis of (patch, class) pairs. Alignment rows are
/// L2-normalized before Gram construction; dv / dl_expanded are used as
/// given. The teacher entropy term -log2 ||norm(G_V o G_L)||_F^2 is constant
/// with respect to the trainables and excluded unless requested.
inline double compression_loss(const FeatureBatch& dv, const FeatureBatch& dl_expanded,
                               const FeatureBatch& r, bool include_teacher_entropy = false) {
  return detail::compression_forward(dv, dl_expanded, r, include_teacher_entropy).value;
}

/// Distillation loss, the negated teacher-student mutual information
/// log2 ||G_R^T||_F^2 + log2 ||G_R^S||_F^2 - log2 ||G_R^TS||_F^2 where
/// G^TS is the trace-normalized Hadamard product. Symmetric in its inputs.
inline double distillation_loss(const FeatureBatch& r_teacher, const FeatureBatch& r_student) {
  return detail::distillation_forward(r_teacher, r_student).value;
}

/// Combine the three terms: total = task + lambda1 * lc + lambda2 * ld.
inline LossBreakdown total_loss(double task, double lc, double ld, const LossWeights& w) {
  detail::validate_weights(w);
  if (!std::isfinite(task) || !std::isfinite(lc) || !std::isfinite(ld))
    throw InputError("total_loss: non-finite loss term");
  LossBreakdown b;
  b.task = task;
  b.compression = lc;
  b.distillation = ld;
  b.total = task + w.lambda1 * lc + w.lambda2 * ld;
  return b;
}

struct CompressionGradients {
  double value = 0.0;
  DenseMatrix dv, dl_expanded, r;
};

/// Analytic gradient of the compression loss with respect to every input
/// entry, chained through trace normalization, the Hadamard product, the
/// X X^T Gram construction and the row normalization of r.
inline CompressionGradients compression_loss_with_grad(const FeatureBatch& dv,
                                                       const FeatureBatch& dl_expanded,
                                                       const FeatureBatch& r,
                                                       bool include_teacher_entropy = false) {
  using namespace detail;
  const CompressionForward f =
      compression_forward(dv, dl_expanded, r, include_teacher_entropy);
  const std::size_t n = f.joint_n.rows();

  // d log2||N||_F^2 / dP for N = P / tr(P): (2/ln2) (N/||N||_F^2 - I) / tau
  DenseMatrix u_p(n, n);
  for (std::size_t k = 0; k < u_p.data().size(); ++k)
    u_p.data()[k] = kTwoOverLn2 * f.joint_n.data()[k] / f.joint_fro;
  for (std::size_t i = 0; i < n; ++i) u_p(i, i) -= kTwoOverLn2;
  for (double& e : u_p.data()) e /= f.joint_tau;

  DenseMatrix u_gv = hadamard(u_p, hadamard(f.gl.g, f.gr.g));
  DenseMatrix u_gl = hadamard(u_p, hadamard(f.gv.g, f.gr.g));
  DenseMatrix u_gr = hadamard(u_p, hadamard(f.gv.g, f.gl.g));
  add_scaled(u_gr, -kTwoOverLn2 / f.gr.fro, f.gr.g); // the -log2||G_R||_F^2 term

  if (include_teacher_entropy) {
    // -log2 ||norm(Gv o Gl)||_F^2 contributes to the dv / dl gradients only
    DenseMatrix u_q(n, n);
    for (std::size_t k = 0; k < u_q.data().size(); ++k)
      u_q.data()[k] = -kTwoOverLn2 * f.teacher_n.data()[k] / f.teacher_fro;
    for (std::size_t i = 0; i < n; ++i) u_q(i, i) += kTwoOverLn2;
    for (double& e : u_q.data()) e /= f.teacher_tau;
    DenseMatrix hv = hadamard(u_q, f.gl.g);
    DenseMatrix hl = hadamard(u_q, f.gv.g);
    for (std::size_t k = 0; k < u_gv.data().size(); ++k) {
      u_gv.data()[k] += hv.data()[k];
      u_gl.data()[k] += hl.data()[k];
    }
  }

  CompressionGradients out;
  out.value = f.value;
  out.dv = backprop_trace_gram(u_gv, f.gv, dv.values());
  out.dl_expanded = backprop_trace_gram(u_gl, f.gl, dl_expanded.values());
  const DenseMatrix d_y = backprop_trace_gram(u_gr, f.gr, f.rn.y);
  out.r = backprop_row_normalize(d_y, f.rn);
  return out;
}

struct DistillationGradients {
  double value = 0.0;
  DenseMatrix r_teacher, r_student;
};

inline DistillationGradients distillation_loss_with_grad(const FeatureBatch& r_teacher,
                                                         const FeatureBatch& r_student) {
  using namespace detail;
  const DistillationForward f = distillation_forward(r_teacher, r_student);
  const std::size_t n = f.joint_n.rows();

  // upstream of -log2||norm(Gt o Gs)||_F^2 at the Hadamard product
  DenseMatrix u_p(n, n);
  for (std::size_t k = 0; k < u_p.data().size(); ++k)
    u_p.data()[k] = -kTwoOverLn2 * f.joint_n.data()[k] / f.joint_fro;
  for (std::size_t i = 0; i < n; ++i) u_p(i, i) += kTwoOverLn2;
  for (double& e : u_p.data()) e /= f.joint_tau;

  DenseMatrix u_gt = hadamard(u_p, f.gs.g);
  add_scaled(u_gt, kTwoOverLn2 / f.gt.fro, f.gt.g);
  DenseMatrix u_gs = hadamard(u_p, f.gt.g);
  add_scaled(u_gs, kTwoOverLn2 / f.gs.fro, f.gs.g);

  DistillationGradients out;
  out.value = f.value;
  const DenseMatrix d_yt = backprop_trace_gram(u_gt, f.gt, f.rn_t.y);
  out.r_teacher = backprop_row_normalize(d_yt, f.rn_t);
  const DenseMatrix d_ys = backprop_trace_gram(u_gs, f.gs, f.rn_s.y);
  out.r_student = backprop_row_normalize(d_ys, f.rn_s);
  return out;
}

/// Every feature batch entering the weighted objective
/// lambda1 * L_c(dv, dl_expanded, r_teacher) + lambda2 * L_d(r_teacher, r_student).
struct LossInputs {
  FeatureBatch dv;
  FeatureBatch dl_expanded;
  FeatureBatch r_teacher;
  FeatureBatch r_student;
};

struct GradientBatch {
  DenseMatrix dv, dl_expanded, r_teacher, r_student;
};

/// Gradients of lambda1 * L_c + lambda2 * L_d with respect to every input
/// entry. A zero weight contributes exact zeros and skips the corresponding
/// loss evaluation entirely.
inline GradientBatch loss_gradients(const LossInputs& in, const LossWeights& w,
                                    bool include_teacher_entropy = false) {
  detail::validate_weights(w);
  GradientBatch g;
  g.dv = DenseMatrix(in.dv.samples(), in.dv.dim());
  g.dl_expanded = DenseMatrix(in.dl_expanded.samples(), in.dl_expanded.dim());
  g.r_teacher = DenseMatrix(in.r_teacher.samples(), in.r_teacher.dim());
  g.r_student = DenseMatrix(in.r_student.samples(), in.r_student.dim());

  if (w.lambda1 != 0.0) {
    const CompressionGradients cg =
        compression_loss_with_grad(in.dv, in.dl_expanded, in.r_teacher, include_teacher_entropy);
    add_scaled(g.dv, w.lambda1, cg.dv);
    add_scaled(g.dl_expanded, w.lambda1, cg.dl_expanded);
    add_scaled(g.r_teacher, w.lambda1, cg.r);
  }
  if (w.lambda2 != 0.0) {
    const DistillationGradients dg = distillation_loss_with_grad(in.r_teacher, in.r_student);
    add_scaled(g.r_teacher, w.lambda2, dg.r_teacher);
    add_scaled(g.r_student, w.lambda2, dg.r_student);
  }

  for (const DenseMatrix* m : {&g.dv, &g.dl_expanded, &g.r_teacher, &g.r_student})
    if (!m->all_finite()) throw DegenerateError("loss_gradients: non-finite gradient");
  return g;
}

/// Central-difference gradient of an arbitrary scalar evaluator, with the
/// step scaled per entry by max(1, |x_ij|). This is the verification oracle
/// for every analytic gradient in the library and deliberately knows nothing
/// about how those gradients are computed.
template <typename F>
DenseMatrix finite_diff_oracle(F&& evaluate, const DenseMatrix& x, double h) {
  if (!(h > 0.0)) throw InputError("finite_diff_oracle: h must be positive");
  DenseMatrix grad(x.rows(), x.cols());
  DenseMatrix probe = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double orig = x(i, j);
      const double step = h * std::max(1.0, std::abs(orig));
      probe(i, j) = orig + step;
      const double fp = evaluate(static_cast<const DenseMatrix&>(probe));
      probe(i, j) = orig - step;
      const double fm = evaluate(static_cast<const DenseMatrix&>(probe));
      probe(i, j) = orig;
      grad(i, j) = (fp - fm) / (2.0 * step);
    }
  }
  return grad;
}

/// FeatureBatch-facing wrapper of the central-difference oracle.
template <typename F>
DenseMatrix finite_diff_oracle_batch(F&& evaluate, const FeatureBatch& x, double h) {
  return finite_diff_oracle(
      [&](const DenseMatrix& m) { return evaluate(FeatureBatch(m)); }, x.values(), h);
}

} // namespace infoclip
