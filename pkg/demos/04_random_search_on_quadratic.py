"""Augmented Random Search on a synthetic quadratic objective.

The oracle scores a policy's weight matrix directly (no simulation), which
isolates the optimizer's behavior: fast drift toward the target followed by a
noise-floor plateau set by the alpha/(b sigma_R) step normalization.
"""
import functools

import numpy as np

from tensegrity_hopper import ArsConfig, QuadraticOracleEnv, train


def oracle_factory(params, env_config, target=None):
    return QuadraticOracleEnv(target)


def main():
    rng = np.random.default_rng(42)
    target = rng.uniform(-1.0, 1.0, (8, 44))
    factory = functools.partial(oracle_factory, target=target)

    print(f"target matrix: 8 x 44, |target| up to {np.abs(target).max():.2f}")
    for iters in (50, 150, 500, 1500):
        policy, _ = train(factory, None, None,
                          ArsConfig(iterations=iters, seed=0, eval_every=0))
        err = policy.weights - target
        print(f"  {iters:5d} iterations: ||err||_2 = {np.linalg.norm(err):6.3f}   "
              f"max|err| = {np.abs(err).max():.3f}")
    print("the L2 error collapses by two orders of magnitude, then the")
    print("self-normalized step size keeps the iterate random-walking near")
    print("the optimum instead of annealing into it.")


if __name__ == "__main__":
    main()
