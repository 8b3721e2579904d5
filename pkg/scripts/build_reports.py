from pathlib import Path

import numpy as np
import pandas as pd
import typer

from twodomain.files import to_json
from twodomain.hjb_grid import Grid1D, assemble_structure, solve_state_constraint
from twodomain.problem import DICT_BUILTINS, builtin_problem
from twodomain.verify import closed_form_evaluators


def main(fout: str = "output", lam: float = 1.0, xmax: float = 3.0, h: float = 1e-3):
    grid = Grid1D(xmax, h)
    # Make sure the output directory exists
    folder = Path(fout)
    folder.mkdir(parents=True, exist_ok=True)

    ls_decisions = []
    for name in DICT_BUILTINS:
        problem = builtin_problem(name, lam)
        refs = closed_form_evaluators(name, lam)
        minus, plus = assemble_structure(problem, grid, "closed_form", refs)

        # One table per problem: grid fields, then the closed forms
        df = pd.DataFrame({"x": grid.nodes, "U_minus": minus.values, "U_plus": plus.values})
        ls_decisions.append(
            {"problem": name, "U_minus": minus.meta["structure"], "U_plus": plus.meta["structure"]}
        )
        for side, far_x in ((1, grid.xmax), (2, -grid.xmax)):
            kind = f"U_SC{side}"
            field = solve_state_constraint(problem, side, grid, "closed_form", float(refs[kind](far_x)))
            column = np.full(grid.nodes.size, np.nan)
            column[grid.half(side)] = field.values
            df[kind] = column
        for kind in ("U_SC1", "U_SC2", "U_minus", "U_plus"):
            # Closed forms next to the grid values, when catalogued
            if kind in refs:
                df[f"{kind}_exact"] = refs[kind](grid.nodes)
        file = folder / f"{name}_lambda{lam:g}.csv"
        df.to_csv(file, index=False, float_format="%.12g")
        print(f"[INFO] {name}: {minus.meta['structure']['summary']}; {plus.meta['structure']['summary']}")
        print(f"[INFO] Successfully wrote {len(df)} rows to {file}!")

    # Store the structure decisions at the interface
    file = folder / f"decisions_lambda{lam:g}.json"
    file.write_text(to_json(ls_decisions))
    print(f"[INFO] Decisions written to {file}")


if __name__ == "__main__":
    typer.run(main)
