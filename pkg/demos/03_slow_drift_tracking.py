"""Tracking a slowly drifting edge weight, nonlinear vs linear estimator.

All active coefficients of the generating graph drift sinusoidally.  The
demo follows the strongest edge and compares how closely the random-feature
estimator and a linear online baseline track its normalized trajectory.
"""

import numpy as np

from rffgraph import (
    EstimatorConfig,
    GeneratorConfig,
    LinearBaseline,
    OnlineEstimator,
    generate,
)


def main():
    gen = GeneratorConfig(N=5, P=2, T=3000, edge_probability=0.1, drift=True,
                          noise_std=0.01, kernel_variance=0.01,
                          beta_variance=30.0, M=10, seed=11)
    ts = generate(gen)
    offdiag = ~np.eye(5, dtype=bool)[:, :, None]
    a0 = np.where(offdiag & ts.active[2], np.abs(ts.coeffs[2]), -1.0)
    n, n2, p = np.unravel_index(int(np.argmax(a0)), a0.shape)
    print(f"following edge {n2 + 1} -> {n + 1} at lag {p + 1}")

    rf = OnlineEstimator(EstimatorConfig(N=5, P=2, D=50, lam=0.1, gamma=1000.0,
                                         kernel_variance=0.1, rff_seed=30_011)).run(ts.values)
    lin = LinearBaseline(N=5, P=2, lam=0.1, gamma=1000.0).run(ts.values)

    truth = np.abs(ts.coeffs[2:, n, n2, p])
    truth_n = truth / truth.max()
    rf_tr = rf.group_norms[2:, n, n2, p]
    rf_n = rf_tr / rf_tr.max()
    lin_tr = lin.group_norms[2:, n, n2, p]
    lin_n = lin_tr / max(lin_tr.max(), 1e-300)

    print()
    print("     t   truth   nonlinear   linear   (normalized traces)")
    for t in range(0, len(truth_n), 300):
        print(f"  {t + 2:5d}   {truth_n[t]:.3f}     {rf_n[t]:.3f}      {lin_n[t]:.3f}")
    mad_rf = np.mean(np.abs(rf_n - truth_n))
    mad_lin = np.mean(np.abs(lin_n - truth_n))
    print()
    print(f"mean absolute deviation: nonlinear {mad_rf:.3f}, linear {mad_lin:.3f}")
    print("the kernel features follow the oscillation; the linear fit cannot")
    print("represent the underlying nonlinearity and drifts off the trace.")


if __name__ == "__main__":
    main()
