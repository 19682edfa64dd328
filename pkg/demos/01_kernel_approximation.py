"""How well do random Fourier features approximate the Gaussian kernel?

Draws feature maps of increasing size and compares the feature-space inner
product against the closed-form kernel on a grid of point pairs, both for a
single map and averaged over many independent maps.
"""

import numpy as np

from rffgraph import GaussianKernel, kernel_approx, kernel_exact, sample_frequencies


def main():
    spec = GaussianKernel(variance=1.0)
    deltas = np.linspace(0.0, 3.0, 7)
    exact = np.array([kernel_exact(spec, 0.0, d) for d in deltas])

    print("Gaussian kernel, variance 1.0")
    print("delta:     " + "  ".join(f"{d:6.2f}" for d in deltas))
    print("exact:     " + "  ".join(f"{v:6.3f}" for v in exact))
    print()

    for D in (10, 50, 200):
        single = np.array([kernel_approx(sample_frequencies(spec, D, seed=0), 0.0, d)
                           for d in deltas])
        avg = np.mean([[kernel_approx(sample_frequencies(spec, D, seed=s), 0.0, d)
                        for d in deltas] for s in range(100)], axis=0)
        print(f"D={D:4d} single map err: " + "  ".join(f"{abs(v):6.3f}" for v in single - exact))
        print(f"D={D:4d} 100-map  err:   " + "  ".join(f"{abs(v):6.3f}" for v in avg - exact))
    print()
    print("A single map is noisy; averaging maps (or growing D) tightens the")
    print("estimate at the 1/sqrt(maps * D) Monte-Carlo rate.")


if __name__ == "__main__":
    main()
