"""Build the bundled 79-DMA sample input under src/lapret/data/.

The real DMA data (battery searches, census covariates, daily snowfall) is
proprietary, so this writes a synthetic stand-in with the same shape:

* 79 DMAs with log-normal populations and six census-style covariates on
  very different scales (income in k$, percentages, age, household size).
* 60 days (1 Feb - 1 Apr). Daily outcomes are Poisson counts whose medians
  sit near 13 overall with a 95th percentile near 60.
* Snowfall in kg/m^2. A latent latitude splits the DMAs into a snow belt,
  hit by storm systems on fixed calendar days, and a southern group whose
  snowfall never exceeds 0.3. Snow-belt DMAs see an anticipation bump in
  their expected outcome in the days before each heavy snow day and a drop
  on the day itself.

Usage: python scripts/make_sample_dmas.py [--seed 2015] [--out DIR]
"""
import argparse
import csv
from pathlib import Path

import numpy as np

N_DMA = 79
N_DAYS = 60
# storm systems, as day indices counted from 1 Feb
STORM_DAYS = (9, 15, 17, 21, 29, 33, 45)
# expected-outcome change around a heavy snow day, per unit of baseline/13
ANTICIPATION = {-2: 0.95, -1: 3.5, 0: -4.3, 1: -1.5}


def build(seed):
    rng = np.random.default_rng(seed)
    pop = np.clip(np.exp(rng.normal(np.log(1.2e6), 0.8, N_DMA)), 1.5e5, 2.0e7).round(-3).astype(int)
    lat = rng.uniform(0, 1, N_DMA)
    covs = np.column_stack([
        rng.normal(55, 10, N_DMA) + 8 * lat,      # median household income, k$
        rng.normal(14.5, 3, N_DMA),               # % over 65
        rng.normal(28, 7, N_DMA) + 4 * lat,       # % with bachelor's degree
        np.clip(rng.normal(70, 15, N_DMA), 20, 98),  # % white
        rng.normal(38, 3, N_DMA) + 2 * lat,       # median age
        rng.normal(2.6, 0.2, N_DMA),              # persons per household
    ]).round(2)

    # baseline daily searches scale sub-linearly with population
    base = 13 * (pop / np.median(pop)) ** 0.95
    week = 1 + 0.12 * (np.arange(N_DAYS) % 7 >= 5)
    snow = np.zeros((N_DMA, N_DAYS))
    expected = base[:, None] * week[None, :]
    for i in range(N_DMA):
        if lat[i] >= 0.5:
            hit_p = 0.25 + 0.6 * (lat[i] - 0.5) * 2
            hits = [d for d in STORM_DAYS if rng.random() < hit_p] or [int(rng.choice(STORM_DAYS))]
            flurries = rng.random(N_DAYS) < 0.2
            snow[i, flurries] = rng.uniform(0.0, 0.6, flurries.sum())
            for d in hits:
                snow[i, d - 1] = rng.gamma(2.0, 2.0) + 1.05
                scale = base[i] / 13
                for off, eff in ANTICIPATION.items():
                    if 1 <= d + off <= N_DAYS:
                        expected[i, d + off - 1] += eff * scale
        else:
            flurries = rng.random(N_DAYS) < 0.1
            snow[i, flurries] = rng.uniform(0.0, 0.3, flurries.sum())
    outcomes = rng.poisson(np.clip(expected, 0, None)).astype(float)
    return pop, covs, outcomes, snow.round(3)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=2015)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "src" / "lapret" / "data")
    args = ap.parse_args()
    pop, covs, outcomes, snow = build(args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    ids = [f"DMA{i + 1:02d}" for i in range(N_DMA)]
    with open(args.out / "dma.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dma_id", "population"] + [f"c{k}" for k in range(1, covs.shape[1] + 1)])
        for i, dma in enumerate(ids):
            w.writerow([dma, pop[i], *covs[i]])
    with open(args.out / "dma_panel.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dma_id", "day", "outcome", "snowfall_kg_m2"])
        for i, dma in enumerate(ids):
            for t in range(N_DAYS):
                w.writerow([dma, t + 1, outcomes[i, t], snow[i, t]])
    print(f"median outcome {np.median(outcomes):.1f}, 95th pct {np.percentile(outcomes, 95):.1f}, "
          f"snow-belt DMAs {(snow.max(axis=1) > 1).sum()}, controls {(snow.max(axis=1) <= 0.3).sum()}")


if __name__ == "__main__":
    main()
