// Entropy and mutual information on small hand-built batches, showing the
// eigenvalue route and the Frobenius shortcut side by side.

#include <cstddef>
#include <iostream>

#include <infoclip/entropy.hpp>
#include <infoclip/gram.hpp>
#include <infoclip/matrix.hpp>
#include <infoclip/metrics_io.hpp>
#include <infoclip/rng.hpp>

using namespace infoclip;

int main() {
  // orthonormal features: the Gram is I/4, the most spread-out spectrum
  const FeatureBatch ortho(DenseMatrix::identity(4));
  // one repeated direction: rank-1 Gram, no uncertainty at all
  const FeatureBatch constant(DenseMatrix(4, 3, {1, 0.5, -2, 1, 0.5, -2, 1, 0.5, -2, 1, 0.5, -2}));

  const GramMatrix g_ortho = gram_from_features(ortho, Kernel::PolynomialDegree1, NormalizationMode::Trace);
  const GramMatrix g_const = gram_from_features(constant, Kernel::PolynomialDegree1, NormalizationMode::Trace);

  const EntropySpec fast{2.0, EntropyMethod::Frobenius};
  const EntropySpec eigen{2.0, EntropyMethod::Eigen};

  std::cout << "S2(orthonormal), frobenius: " << format_real(renyi_entropy(g_ortho, fast))
            << "\n";
  std::cout << "S2(orthonormal), eigen:     " << format_real(renyi_entropy(g_ortho, eigen))
            << "\n";
  std::cout << "S2(constant batch):         " << format_real(renyi_entropy(g_const, fast))
            << "\n";

  Rng rng(7);
  DenseMatrix x(16, 5);
  for (double& e : x.data()) e = rng.gaussian();
  DenseMatrix y = x;
  for (double& e : y.data()) e += 0.25 * rng.gaussian(); // y is a noisy copy of x

  DenseMatrix ones(16, 2);
  for (double& e : ones.data()) e = 1.0;

  const GramMatrix gx = gram_from_features(FeatureBatch(x), Kernel::PolynomialDegree1, NormalizationMode::Trace);
  const GramMatrix gy = gram_from_features(FeatureBatch(y), Kernel::PolynomialDegree1, NormalizationMode::Trace);
  std::cout << "I2(x; noisy x):             " << format_real(mutual_information(gx, gy, fast))
            << "\n";
  std::cout << "I2(x; constant):            "
            << format_real(
                   mutual_information(gx, gram_from_features(FeatureBatch(ones), Kernel::PolynomialDegree1,
                                      NormalizationMode::Trace), fast))
            << "\n";
  return 0;
}
