"""Why a fixed feature budget matters for streaming estimation.

Times every iteration of the random-feature estimator against a reference
kernel learner that stores each incoming sample as a new dictionary atom.
The former's cost stays flat no matter how long the stream runs; the
latter's grows with every step.
"""

import time

import numpy as np

from rffgraph import (
    EstimatorConfig,
    GeneratorConfig,
    GrowingDictionaryEstimator,
    OnlineEstimator,
    generate,
)


def time_loop(runner, values):
    times = []
    for t in range(values.shape[1]):
        tic = time.perf_counter_ns()
        out = runner.step(values[:, t])
        toc = time.perf_counter_ns()
        if out is not None:
            times.append((toc - tic) * 1e-9)
    return np.array(times)


def main():
    gen = GeneratorConfig(N=5, P=2, T=3000, edge_probability=0.1, noise_std=0.3,
                          kernel_variance=0.01, beta_variance=30.0, M=10, seed=7)
    values = generate(gen).values

    fixed = time_loop(OnlineEstimator(EstimatorConfig(
        N=5, P=2, D=50, lam=0.1, gamma=1000.0, kernel_variance=0.1, rff_seed=7)), values)
    growing = time_loop(GrowingDictionaryEstimator(N=5, P=2, kernel_variance=1.0), values)

    print("mean iteration time (microseconds) by stream position")
    print("   window      fixed-budget    growing-dictionary")
    for lo, hi in ((100, 600), (1200, 1700), (2400, 2900)):
        print(f"  {lo:5d}-{hi:<5d}   {fixed[lo:hi].mean() * 1e6:10.1f}"
              f"     {growing[lo:hi].mean() * 1e6:12.1f}")
    slope = np.polyfit(np.arange(len(growing)), growing, 1)[0]
    print()
    print(f"growing-dictionary fitted slope: {slope * 1e9:.1f} ns per extra step")
    print("the fixed feature map does the same work at t=100 and t=3000; the")
    print("dictionary learner touches every stored atom and slows down linearly.")


if __name__ == "__main__":
    main()
