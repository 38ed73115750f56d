"""Drop the hopper from 1 m with no controller and watch it topple.

Shows the core objects: the world state, the 44-dimensional observation,
the tilt metrics, and the reward/termination rule of the environment.
"""
import numpy as np

from tensegrity_hopper import (
    HopperEnv,
    LinearPolicy,
    build_hopper,
    frame_tilt,
    leg_tilt,
    observation,
    rollout,
)


def main():
    world = build_hopper()
    obs = observation(world)
    print(f"observation dimension: {len(obs)}  (8 cable lengths + 6 nodes x pos/vel)")
    print(f"nominal cable lengths: {world.cable_length}")
    print(f"nominal tilts: leg {leg_tilt(world):.1f} deg, frame {frame_tilt(world):.1f} deg")

    env = HopperEnv()
    env.reset()
    print("\nuncontrolled drop from 1 m (zero policy):")
    ep = rollout(LinearPolicy(), env, "eval")
    print(f"  survived {ep.episode_seconds:.3f} s ({ep.episode_control_steps} control steps)")
    print(f"  final tilts: leg {leg_tilt(env.world):.1f} deg, "
          f"frame {frame_tilt(env.world):.1f} deg")
    print("  the vertical stance is an unstable equilibrium: without control the")
    print("  structure lands, wobbles, and crosses the 20 degree leg limit.")

    env.reset()
    print("\nstep-by-step, first 5 decisions with a constant cable command:")
    action = np.full(8, 0.5)
    for i in range(5):
        result = env.step(action)
        print(f"  t={result.info['time']:.3f}s reward={result.reward:.0f} "
              f"leg={result.info['leg_tilt']:.2f} frame={result.info['frame_tilt']:.2f}")


if __name__ == "__main__":
    main()
