"""Generate the synthetic demo datasets under data/.

The real counterparts of these fixtures ship inside R packages (see the
README for fetch instructions); the synthetic stand-ins reproduce each
configuration's shape: sample sizes, covariate ranges, and the qualitative
signal. Fixed seeds keep the files stable.

Run from the repository root:  python scripts/make_fixtures.py
"""

from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "data"


def write_csv(name, header, columns):
    rows = zip(*columns)
    lines = [header] + [",".join(str(v) for v in row) for row in rows]
    (OUT / name).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {name}")


def trypanosome():
    # 8 doses on [4.7, 5.4]: classic quantal-assay shape with a natural
    # mortality floor, a steep kill zone, and a ceiling; the plateaus bend
    # the logit-scale trend hard at both ends
    rng = np.random.default_rng(101)
    x = np.round(np.linspace(4.7, 5.4, 8), 2)
    m = rng.integers(40, 70, size=8)
    # deterministic counts: with n = 8 a sampled y too easily lands on a
    # logit-linear pattern, which is not what assay data look like
    p = np.array([0.03, 0.04, 0.08, 0.25, 0.70, 0.92, 0.96, 0.97])
    y = np.clip(np.round(m * p).astype(int), 0, m)
    write_csv("trypanosome.csv", "x,y,m", [x, y, m])


def hepatitis_b():
    # prevalence rising sharply through childhood then sagging with age,
    # 86 one-year age groups
    rng = np.random.default_rng(202)
    x = np.arange(1, 87)
    m = rng.integers(25, 120, size=86)
    p = 0.06 + 0.80 / (1.0 + np.exp(-(x - 16.0) / 4.0)) - 0.006 * np.maximum(x - 40, 0)
    y = rng.binomial(m, np.clip(p, 0.01, 0.95))
    write_csv("hepatitis_b.csv", "x,y,m", [x, y, m])


def hidalgo_stamps():
    # stamp paper thickness (thousandths of mm): several sharp modes over
    # the full 60-130 range, 485 obs, echoing the classic mixture analyses
    rng = np.random.default_rng(303)
    comps = [
        (0.30, 71.0, 1.6),
        (0.26, 78.5, 1.9),
        (0.16, 86.5, 2.2),
        (0.14, 99.0, 3.0),
        (0.09, 110.0, 3.2),
        (0.05, 121.0, 3.5),
    ]
    parts = []
    for w, mu, sd in comps:
        parts.append(rng.normal(mu, sd, size=int(round(485 * w))))
    x = np.concatenate(parts)[:485]
    x = np.round(np.clip(x, 60.0, 131.0), 1)
    write_csv("hidalgo_stamps.csv", "x", [x])


def zika_girardot():
    # 96-day epidemic curve: exponential growth, peak, slow decay
    rng = np.random.default_rng(404)
    t = np.arange(1, 97)
    mu = 95.0 * np.exp(-0.5 * ((t - 34.0) / 12.0) ** 2) + 4.0 * np.exp(-t / 50.0)
    rho = 6.0
    y = rng.negative_binomial(rho, rho / (rho + mu))
    write_csv("zika_girardot.csv", "x,y", [t, y])


if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    trypanosome()
    hepatitis_b()
    hidalgo_stamps()
    zika_girardot()
