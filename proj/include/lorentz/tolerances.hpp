#pragma once

// Sample sizes, thresholds and targets of the acceptance checks. The CLI
// reports, the unit tests and the acceptance binary all read these values.

namespace lorentz::tolerances {

// 1. Golden kernel values.
inline constexpr double kGoldenAbs = 1e-12;

// 2. Symmetry and two-sided bounds on random triples.
inline constexpr long kSymmetryTriples = 100000;

// 3. Normalisation per w' and mean free path.
inline constexpr int kNormalizationPoints = 100;
inline constexpr double kNormalizationAbs = 1e-6;
inline constexpr double kMeanAbs = 1e-4;

// 4. xi^3 Psi_0(xi) against A_2 on [20, 100].
inline constexpr double kTailLo = 20;
inline constexpr double kTailHi = 100;
inline constexpr int kTailPoints = 81;
inline constexpr double kTailRel = 0.05;

// 5. Poisson configuration.
inline constexpr double kPoissonRadius = 1e-3;
inline constexpr long kPoissonFlights = 1000000;
inline constexpr long kPoissonFlightsPerPath = 1000;
inline constexpr double kPoissonFreepathKs = 0.01;
inline constexpr long kPoissonLimitPaths = 40000;
inline constexpr double kPoissonGaussTime = 1e4;
inline constexpr double kPoissonGaussKs = 0.02;
inline constexpr double kPoissonMsdRel = 0.05;

// 6. Periodic Z^2 configuration.
inline constexpr double kLatticeRadii[2] = {1e-2, 1e-3};
inline constexpr long kLatticePaths = 1000;
inline constexpr long kLatticeCollisionsPerPath = 10000;
inline constexpr int kKernelWBins = 8;
inline constexpr int kKernelXiCells = 32;
inline constexpr int kKernelWCells = 32;
inline constexpr double kKernelMinExpected = 20;
inline constexpr double kKernelCellSe = 3;
inline constexpr double kKernelCellFraction = 0.95;

// 7. Superdiffusive scaling of the lattice limit process.
inline constexpr long kSuperPaths = 200000;
inline constexpr double kSuperTimes[3] = {1e2, 1e3, 1e4};
inline constexpr double kSuperQ75Rel = 0.30;
inline constexpr double kSuperMsdRel = 0.35;

// 8. Growth of the running second moment of Psi_0 samples.
inline constexpr long kMomentEarly = 100000;
inline constexpr long kMomentLate = 10000000;
inline constexpr double kMomentRatio = 3;

// 9. Union of two incommensurable lattices.
inline constexpr double kUnionRadius = 1e-3;
inline constexpr long kUnionFlights = 4000000;
inline constexpr long kUnionFlightsPerPath = 1000;
inline constexpr double kUnionFitLo = 5;
inline constexpr double kUnionFitHi = 50;
inline constexpr double kUnionExponent = 3.0;
inline constexpr double kUnionExponentTol = 0.5;

// 10. Cut-and-project densities.
inline constexpr double kCutProjectRadius = 200;
inline constexpr double kCutProjectDensityRel = 0.01;
inline constexpr double kQuasicrystalRadius = 1e-2;
inline constexpr long kQuasicrystalFlights = 20000;

// 11. Stationarity of the lattice chain.
inline constexpr long kStationarySamples = 1000000;
inline constexpr int kStationarySteps = 50;
inline constexpr double kStationaryKs = 0.01;
inline constexpr long kResidualPaths = 100000;
inline constexpr double kResidualTime = 1e3;
inline constexpr double kResidualKs = 0.01;

// Estimator preconditions.
inline constexpr long kMinKsSamples = 100;
inline constexpr long kMinTailSamples = 1000;
inline constexpr long kMinGaussianPaths = 10000;

}  // namespace lorentz::tolerances
