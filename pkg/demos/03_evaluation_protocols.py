"""The three evaluation protocols on a checkpoint: initial-height sweep,
decision-frequency sweep, and a long-horizon stability run.

Expects demo_checkpoint.json from 02_train_balance.py (or any checkpoint
trained with matching model/env settings).
"""
import os
import sys

from tensegrity_hopper import (
    ArsConfig,
    EnvConfig,
    HopperParams,
    RunConfig,
    cmd_long_horizon,
    cmd_sweep_frequency,
    cmd_sweep_height,
)


def main():
    checkpoint = sys.argv[1] if len(sys.argv) > 1 else "demo_checkpoint.json"
    if not os.path.exists(checkpoint):
        print(f"checkpoint {checkpoint} not found; run 02_train_balance.py first")
        return 1

    config = RunConfig(HopperParams(), EnvConfig(horizon_steps=3000), ArsConfig())

    print("== initial-height sweep (training height was 1.0 m) ==")
    cmd_sweep_height(config, checkpoint, "demo_out/sweep_height",
                     heights=(0.0, 0.1, 0.5, 1.0, 1.5), repeats=3)

    print("\n== decision-frequency sweep (trained at 1000 Hz) ==")
    cmd_sweep_frequency(config, checkpoint, "demo_out/sweep_frequency",
                        decision_intervals=(1, 2, 5), repeats=3)

    print("\n== long-horizon stability (beyond the training horizon) ==")
    cmd_long_horizon(config, checkpoint, "demo_out/long_horizon", duration_s=30.0)

    print("\nCSV tables under demo_out/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
