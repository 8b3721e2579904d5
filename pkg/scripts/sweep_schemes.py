from pathlib import Path

import pandas as pd
import typer

from twodomain.hjb_grid import Grid1D
from twodomain.problem import builtin_problem
from twodomain.schemes import SCHEMES, sweep
from twodomain.verify import closed_form_evaluators


def main(
    fout: str = "output",
    problem: str = "pull_pull",
    lam: float = 1.0,
    eps: str = "0.2,0.1,0.05,0.02",
    xmax: float = 3.0,
    h: float = 5e-3,
    jobs: int = 1,
):
    ls_eps = [float(e) for e in eps.split(",")]
    grid = Grid1D(xmax, h)
    spec = builtin_problem(problem, lam)
    refs = closed_form_evaluators(problem, lam)

    ls_df = []
    for scheme in SCHEMES:
        print(f"[INFO] Sweeping {scheme} over eps = {ls_eps}...")
        df = sweep(spec, scheme, ls_eps, grid, references=refs, jobs=jobs, verbose=True)
        ls_df.append(df)
    df = pd.concat(ls_df, ignore_index=True)

    # Make sure the output directory exists
    folder = Path(fout)
    folder.mkdir(parents=True, exist_ok=True)
    file = folder / f"sweep_{spec.name}_lambda{lam:g}.csv"
    df.to_csv(file, index=False, float_format="%.12g")
    print(f"[INFO] Successfully wrote {len(df)} records to {file}!")


if __name__ == "__main__":
    typer.run(main)
