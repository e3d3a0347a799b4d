#include "pcf/loss.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pcf {

namespace {

void check_batch(const SampleBatch& batch, const EmbeddingTable& table) {
  if (batch.size() < 2) throw std::invalid_argument("batch needs at least 2 samples");
  for (const Sample& s : batch.samples) {
    if (s.point >= table.size()) throw std::invalid_argument("sample point out of range");
  }
}

// Per-sample gradient staging: parallel loops write only their own row, the
// scatter into the shared table runs sequentially afterwards, so results do
// not depend on the thread count.
struct SampleGrads {
  std::size_t n_dims;
  std::vector<double> d_mu, d_lv;

  SampleGrads(std::size_t n_samples, std::size_t dims)
      : n_dims(dims), d_mu(n_samples * dims, 0.0), d_lv(n_samples * dims, 0.0) {}

  void scatter(const SampleBatch& batch, GradientTable& out, double scale) const {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const std::size_t src = i * n_dims;
      const std::size_t dst = batch.samples[i].point * n_dims;
      for (std::size_t d = 0; d < n_dims; ++d) {
        out.d_mu[dst + d] += scale * d_mu[src + d];
        out.d_log_var[dst + d] += scale * d_lv[src + d];
      }
    }
  }
};

}  // namespace

double pixel_contrastive_loss(const SampleBatch& batch, const EmbeddingTable& table,
                              GradientTable* grad) {
  check_batch(batch, table);
  const std::size_t n = batch.size();
  const std::size_t dims = table.n_dims;

  // Full kernel matrix; n is a ray batch (hundreds), so n^2 doubles are cheap.
  std::vector<double> kmat(n * n, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t u = 0; u < static_cast<std::ptrdiff_t>(n); ++u) {
    const GaussianEmbedding& eu = table.at(batch.samples[u].point);
    for (std::size_t v = 0; v <= static_cast<std::size_t>(u); ++v) {
      double k = pp_kernel(eu, table.at(batch.samples[v].point));
      kmat[u * n + v] = k;
      kmat[v * n + u] = k;
    }
  }

  std::vector<double> num(n, 0.0), den(n, 0.0);
  double loss = 0.0;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      double e = std::exp(kmat[u * n + v]);
      den[u] += e;
      if (batch.samples[v].instance_id == batch.samples[u].instance_id) num[u] += e;
    }
    loss += -std::log(num[u] / den[u]);
  }
  loss /= static_cast<double>(n);

  if (grad) {
    // d(loss)/dK(u,v) = (1/n) e^K (1/den_u - 1_pos/num_u); sample w collects
    // both its a-side and, via kernel symmetry, its b-side contributions.
    SampleGrads sg(n, dims);
    const double inv_n = 1.0 / static_cast<double>(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t w = 0; w < static_cast<std::ptrdiff_t>(n); ++w) {
      KernelGradient kg;
      const GaussianEmbedding& ew = table.at(batch.samples[w].point);
      for (std::size_t v = 0; v < n; ++v) {
        double e = std::exp(kmat[w * n + v]);
        bool pos = batch.samples[v].instance_id == batch.samples[w].instance_id;
        double c_wv = inv_n * e * (1.0 / den[w] - (pos ? 1.0 / num[w] : 0.0));
        double c_vw = inv_n * e * (1.0 / den[v] - (pos ? 1.0 / num[v] : 0.0));
        double coeff = c_wv + c_vw;
        if (coeff == 0.0) continue;
        pp_kernel_grad(ew, table.at(batch.samples[v].point), kg);
        const std::size_t base = w * dims;
        for (std::size_t d = 0; d < dims; ++d) {
          sg.d_mu[base + d] += coeff * kg.d_mu_a[d];
          sg.d_lv[base + d] += coeff * kg.d_logvar_a[d];
        }
      }
    }
    sg.scatter(batch, *grad, 1.0);
  }
  return loss;
}

double concentration_loss(const SampleBatch& batch, const EmbeddingTable& table,
                          GradientTable* grad) {
  check_batch(batch, table);
  const std::size_t n = batch.size();
  const std::size_t dims = table.n_dims;

  // Member lists and parameter-wise mean embedding per instance id.
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[batch.samples[i].instance_id].push_back(i);

  std::map<int, GaussianEmbedding> means;
  for (const auto& [id, members] : groups) {
    std::vector<const GaussianEmbedding*> ptrs;
    ptrs.reserve(members.size());
    for (std::size_t i : members) ptrs.push_back(&table.at(batch.samples[i].point));
    means.emplace(id, average_embeddings(ptrs));
  }

  double loss = 0.0;
  SampleGrads sg(grad ? n : 0, dims);
  std::map<int, std::vector<double>> d_mean_mu, d_mean_var;
  if (grad) {
    for (const auto& [id, members] : groups) {
      d_mean_mu[id].assign(dims, 0.0);
      d_mean_var[id].assign(dims, 0.0);
    }
  }

  KernelGradient kg;
  for (std::size_t u = 0; u < n; ++u) {
    const int id = batch.samples[u].instance_id;
    const GaussianEmbedding& eu = table.at(batch.samples[u].point);
    const GaussianEmbedding& m = means.at(id);
    if (!grad) {
      loss += -log_pp_kernel(eu, m);
      continue;
    }
    double k = pp_kernel_grad(eu, m, kg);
    loss += -std::log(k);
    const double c = -1.0 / (k * static_cast<double>(n));
    const std::size_t base = u * dims;
    for (std::size_t d = 0; d < dims; ++d) {
      sg.d_mu[base + d] += c * kg.d_mu_a[d];
      sg.d_lv[base + d] += c * kg.d_logvar_a[d];
      d_mean_mu[id][d] += c * kg.d_mu_b[d];
      // chain from the mean's log_var back to its raw variance
      d_mean_var[id][d] += c * kg.d_logvar_b[d] / variance(m.log_var[d]);
    }
  }
  loss /= static_cast<double>(n);

  if (grad) {
    // Distribute mean-side gradients to the group members.
    for (const auto& [id, members] : groups) {
      const double inv = 1.0 / static_cast<double>(members.size());
      for (std::size_t i : members) {
        const GaussianEmbedding& ei = table.at(batch.samples[i].point);
        const std::size_t base = i * dims;
        for (std::size_t d = 0; d < dims; ++d) {
          sg.d_mu[base + d] += d_mean_mu[id][d] * inv;
          sg.d_lv[base + d] += d_mean_var[id][d] * variance_grad(ei.log_var[d]) * inv;
        }
      }
    }
    sg.scatter(batch, *grad, 1.0);
  }
  return loss;
}

double combined_contrastive_loss(const SampleBatch& batch, const EmbeddingTable& table,
                                 GradientTable* grad) {
  return pixel_contrastive_loss(batch, table, grad) +
         concentration_loss(batch, table, grad);
}

PositivePairSet mine_cross_view_pairs(const std::vector<GaussianEmbedding>& emb_m,
                                      const std::vector<GaussianEmbedding>& emb_n,
                                      double tau, int view_m, int view_n) {
  if (emb_m.empty() || emb_n.empty())
    throw std::invalid_argument("mining needs non-empty embedding lists");
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must be in (0,1)");
  if (view_m == view_n) throw std::invalid_argument("mining needs two distinct views");

  std::vector<std::vector<std::size_t>> rows(emb_m.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(emb_m.size()); ++r) {
    for (std::size_t s = 0; s < emb_n.size(); ++s) {
      if (pp_kernel(emb_m[r], emb_n[s]) > tau) rows[r].push_back(s);
    }
  }
  PositivePairSet out;
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t s : rows[r]) out.pairs.emplace_back(r, s);
  return out;
}

double cross_view_loss(const PositivePairSet& pairs, const SampleBatch& batch_m,
                       const SampleBatch& batch_n, const EmbeddingTable& table,
                       GradientTable* grad) {
  if (pairs.pairs.empty()) return 0.0;
  const std::size_t dims = table.n_dims;
  const double inv = 1.0 / static_cast<double>(pairs.pairs.size());

  double loss = 0.0;
  KernelGradient kg;
  for (const auto& [r, s] : pairs.pairs) {
    if (r >= batch_m.size() || s >= batch_n.size())
      throw std::out_of_range("cross-view pair index out of range");
    const GaussianEmbedding& a = table.at(batch_m.samples[r].point);
    const GaussianEmbedding& b = table.at(batch_n.samples[s].point);
    if (!grad) {
      loss += -log_pp_kernel(a, b);
      continue;
    }
    double k = pp_kernel_grad(a, b, kg);
    loss += -std::log(k);
    const double c = -inv / k;
    grad->add(batch_m.samples[r].point, kg.d_mu_a, kg.d_logvar_a, c);
    grad->add(batch_n.samples[s].point, kg.d_mu_b, kg.d_logvar_b, c);
  }
  return loss * inv;
}

double regularization_loss(const GaussianEmbedding& e, std::vector<double>* d_log_var) {
  double loss = 0.0;
  for (double lv : e.log_var) loss += lv;
  if (d_log_var) d_log_var->assign(e.log_var.size(), 1.0);
  return loss;
}

LossBreakdown total_loss(const std::vector<const SampleBatch*>& batches,
                         const PositivePairSet* pairs, const EmbeddingTable& table,
                         double w_cross, double w_reg, GradientTable* grad) {
  if (batches.empty()) throw std::invalid_argument("total_loss needs at least one batch");
  if (w_cross < 0.0 || w_reg < 0.0) throw std::invalid_argument("negative loss weight");

  LossBreakdown out;
  const double inv_b = 1.0 / static_cast<double>(batches.size());

  // Contrastive terms, averaged over batches.
  GradientTable contra_grad;
  if (grad) contra_grad = GradientTable(table.size(), table.n_dims);
  for (const SampleBatch* b : batches) {
    out.pixel_contra += pixel_contrastive_loss(*b, table, grad ? &contra_grad : nullptr);
    out.concen += concentration_loss(*b, table, grad ? &contra_grad : nullptr);
  }
  out.pixel_contra *= inv_b;
  out.concen *= inv_b;
  if (grad) {
    for (std::size_t i = 0; i < contra_grad.d_mu.size(); ++i) {
      grad->d_mu[i] += inv_b * contra_grad.d_mu[i];
      grad->d_log_var[i] += inv_b * contra_grad.d_log_var[i];
    }
  }

  if (pairs && w_cross > 0.0) {
    if (batches.size() != 2)
      throw std::invalid_argument("cross-view term needs exactly two batches");
    GradientTable cross_grad;
    if (grad) cross_grad = GradientTable(table.size(), table.n_dims);
    out.cross = cross_view_loss(*pairs, *batches[0], *batches[1], table,
                                grad ? &cross_grad : nullptr);
    if (grad) {
      for (std::size_t i = 0; i < cross_grad.d_mu.size(); ++i) {
        grad->d_mu[i] += w_cross * cross_grad.d_mu[i];
        grad->d_log_var[i] += w_cross * cross_grad.d_log_var[i];
      }
    }
  }

  // Covariance regularizer, averaged over all batch samples.
  std::size_t total_samples = 0;
  for (const SampleBatch* b : batches) total_samples += b->size();
  const double reg_scale = w_reg / static_cast<double>(total_samples);
  for (const SampleBatch* b : batches) {
    for (const Sample& s : b->samples) {
      out.reg += regularization_loss(table.at(s.point), nullptr);
      if (grad && reg_scale > 0.0) {
        const std::size_t base = s.point * table.n_dims;
        for (std::size_t d = 0; d < table.n_dims; ++d)
          grad->d_log_var[base + d] += reg_scale;
      }
    }
  }
  out.reg /= static_cast<double>(total_samples);

  out.total = out.pixel_contra + out.concen + w_cross * out.cross + w_reg * out.reg;
  return out;
}

}  // namespace pcf
