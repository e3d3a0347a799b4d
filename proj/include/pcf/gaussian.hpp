#pragma once

#include <cstddef>
#include <vector>

namespace pcf {

// Diagonal-Gaussian feature embedding. Variance is stored as log_var so
// optimization over it is unconstrained; reads clamp exp(log_var) into
// [kVarMin, kVarMax].
struct GaussianEmbedding {
  std::vector<double> mu;
  std::vector<double> log_var;

  std::size_t dims() const { return mu.size(); }
};

inline constexpr double kVarMin = 1e-6;
inline constexpr double kVarMax = 1e6;

// Clamped variance read.
double variance(double log_var);
// d(variance)/d(log_var); zero in the clamped regions.
double variance_grad(double log_var);

struct KernelGradient {
  std::vector<double> d_mu_a;
  std::vector<double> d_logvar_a;
  std::vector<double> d_mu_b;
  std::vector<double> d_logvar_b;
};

// Probability product kernel between two diagonal Gaussians, in (0, 1].
double pp_kernel(const GaussianEmbedding& a, const GaussianEmbedding& b);

// ln(pp_kernel), computed as a sum of per-dimension log terms.
double log_pp_kernel(const GaussianEmbedding& a, const GaussianEmbedding& b);

// Kernel value together with analytic partial derivatives with respect to
// mu and log_var of both arguments.
double pp_kernel_grad(const GaussianEmbedding& a, const GaussianEmbedding& b,
                      KernelGradient& grad);

// exp(-||x - y||^2 / (8 sigma2)): the PP kernel under equal isotropic
// covariance sigma2 on both arguments.
double rbf_kernel(const std::vector<double>& x, const std::vector<double>& y,
                  double sigma2);

// How member variances combine when averaging embeddings. ParameterMean
// (the default everywhere) takes the arithmetic mean of the variances;
// IndependentMean divides that by the member count, i.e. the variance of an
// average of independent Gaussians.
enum class AverageMode { ParameterMean, IndependentMean };

// Average of members: mean of mu vectors and the mode-dependent combination
// of (clamped) variances, stored back as log_var.
GaussianEmbedding average_embeddings(const std::vector<const GaussianEmbedding*>& members,
                                     AverageMode mode = AverageMode::ParameterMean);
GaussianEmbedding average_embeddings(const std::vector<GaussianEmbedding>& members,
                                     AverageMode mode = AverageMode::ParameterMean);

}  // namespace pcf
