#include "pcf/gaussian.hpp"

#include <cmath>
#include <stdexcept>

namespace pcf {

double variance(double log_var) {
  double v = std::exp(log_var);
  if (v < kVarMin) return kVarMin;
  if (v > kVarMax) return kVarMax;
  return v;
}

double variance_grad(double log_var) {
  double v = std::exp(log_var);
  if (v < kVarMin || v > kVarMax) return 0.0;
  return v;
}

namespace {

void check_pair(const GaussianEmbedding& a, const GaussianEmbedding& b) {
  if (a.mu.size() != a.log_var.size() || b.mu.size() != b.log_var.size())
    throw std::invalid_argument("embedding mu/log_var length mismatch");
  if (a.mu.empty()) throw std::invalid_argument("empty embedding");
  if (a.mu.size() != b.mu.size())
    throw std::invalid_argument("embedding dimension mismatch");
  for (std::size_t d = 0; d < a.mu.size(); ++d) {
    if (!std::isfinite(a.mu[d]) || !std::isfinite(a.log_var[d]) ||
        !std::isfinite(b.mu[d]) || !std::isfinite(b.log_var[d]))
      throw std::invalid_argument("non-finite embedding component");
  }
}

}  // namespace

double log_pp_kernel(const GaussianEmbedding& a, const GaussianEmbedding& b) {
  check_pair(a, b);
  double acc = 0.0;
  for (std::size_t d = 0; d < a.mu.size(); ++d) {
    double va = variance(a.log_var[d]);
    double vb = variance(b.log_var[d]);
    double ratio = (va / vb + vb / va) / 2.0;
    double diff = a.mu[d] - b.mu[d];
    acc += -0.5 * std::log(ratio) - diff * diff / (4.0 * (va + vb));
  }
  return acc;
}

double pp_kernel(const GaussianEmbedding& a, const GaussianEmbedding& b) {
  return std::exp(log_pp_kernel(a, b));
}

double pp_kernel_grad(const GaussianEmbedding& a, const GaussianEmbedding& b,
                      KernelGradient& grad) {
  check_pair(a, b);
  const std::size_t n = a.mu.size();
  grad.d_mu_a.assign(n, 0.0);
  grad.d_logvar_a.assign(n, 0.0);
  grad.d_mu_b.assign(n, 0.0);
  grad.d_logvar_b.assign(n, 0.0);

  double log_k = 0.0;
  for (std::size_t d = 0; d < n; ++d) {
    double va = variance(a.log_var[d]);
    double vb = variance(b.log_var[d]);
    double ratio = (va / vb + vb / va) / 2.0;
    double diff = a.mu[d] - b.mu[d];
    double sum_v = va + vb;
    log_k += -0.5 * std::log(ratio) - diff * diff / (4.0 * sum_v);

    // d(logK)/d(mu), d(logK)/d(var); chained through log_var afterwards.
    double dmu = -diff / (2.0 * sum_v);
    grad.d_mu_a[d] = dmu;
    grad.d_mu_b[d] = -dmu;
    double common = diff * diff / (4.0 * sum_v * sum_v);
    double dva = -0.25 * (1.0 / vb - vb / (va * va)) / ratio + common;
    double dvb = -0.25 * (1.0 / va - va / (vb * vb)) / ratio + common;
    grad.d_logvar_a[d] = dva * variance_grad(a.log_var[d]);
    grad.d_logvar_b[d] = dvb * variance_grad(b.log_var[d]);
  }

  double k = std::exp(log_k);
  for (std::size_t d = 0; d < n; ++d) {
    grad.d_mu_a[d] *= k;
    grad.d_logvar_a[d] *= k;
    grad.d_mu_b[d] *= k;
    grad.d_logvar_b[d] *= k;
  }
  return k;
}

double rbf_kernel(const std::vector<double>& x, const std::vector<double>& y,
                  double sigma2) {
  if (x.size() != y.size()) throw std::invalid_argument("rbf dimension mismatch");
  if (x.empty()) throw std::invalid_argument("empty rbf input");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
  double sq = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    double diff = x[d] - y[d];
    sq += diff * diff;
  }
  return std::exp(-sq / (8.0 * sigma2));
}

GaussianEmbedding average_embeddings(const std::vector<const GaussianEmbedding*>& members,
                                     AverageMode mode) {
  if (members.empty()) throw std::invalid_argument("average of empty member list");
  const std::size_t n = members.front()->dims();
  GaussianEmbedding out;
  out.mu.assign(n, 0.0);
  std::vector<double> var(n, 0.0);
  for (const GaussianEmbedding* m : members) {
    if (m->dims() != n) throw std::invalid_argument("member dimension mismatch");
    for (std::size_t d = 0; d < n; ++d) {
      out.mu[d] += m->mu[d];
      var[d] += variance(m->log_var[d]);
    }
  }
  const double inv = 1.0 / static_cast<double>(members.size());
  const double var_inv = mode == AverageMode::IndependentMean ? inv * inv : inv;
  out.log_var.resize(n);
  for (std::size_t d = 0; d < n; ++d) {
    out.mu[d] *= inv;
    out.log_var[d] = std::log(var[d] * var_inv);
  }
  return out;
}

GaussianEmbedding average_embeddings(const std::vector<GaussianEmbedding>& members,
                                     AverageMode mode) {
  std::vector<const GaussianEmbedding*> ptrs;
  ptrs.reserve(members.size());
  for (const auto& m : members) ptrs.push_back(&m);
  return average_embeddings(ptrs, mode);
}

}  // namespace pcf
