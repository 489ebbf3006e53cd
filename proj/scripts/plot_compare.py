#!/usr/bin/env python3
# Copyright 2026 The corrfed Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Plots cumulative regret curves from a `corrfed compare` output directory.

Usage: plot_compare.py OUTPUT_DIR [--out regret.png]
"""

import argparse
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("output_dir", type=pathlib.Path)
    parser.add_argument("--out", type=pathlib.Path, default=None)
    args = parser.parse_args()

    df = pd.read_csv(args.output_dir / "compare_long.csv")
    df["steps"] = df["round"] + 1
    # Normalize by elapsed rounds; tau cancels between curves.
    df["norm_regret"] = df["cum_dyn_regret"] / df["steps"]
    stats = df.groupby(["mechanism", "round"])["norm_regret"].agg(["mean", "std"])

    fig, ax = plt.subplots(figsize=(6, 4))
    for mechanism, group in stats.groupby(level="mechanism"):
        rounds = group.index.get_level_values("round")
        mean = group["mean"].to_numpy()
        std = group["std"].fillna(0.0).to_numpy()
        ax.plot(rounds, mean, label=mechanism)
        ax.fill_between(rounds, mean - std, mean + std, alpha=0.2)
    ax.set_xlabel("round")
    ax.set_ylabel("cumulative dynamic regret / round")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out or args.output_dir / "regret.png", dpi=150)


if __name__ == "__main__":
    main()
