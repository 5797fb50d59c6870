"""Smoke test for the seqbit_py extension.

Build and install first:
    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/seqbit_py-*.whl
"""

import math
import sys

import seqbit_py as sb


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    return cond


def main():
    results = []
    names = sb.bundled_names()
    results.append(check(len(names) == 3, f"bundled scenarios: {names}"))

    sc = sb.Scenario.bundled("paper-3obs")
    results.append(check(sc.n_dynamic == 3 and len(sc.statics) == 2, repr(sc)))

    plan = sc.plan(seed=3)
    straight = sb.heuristic_cost(sc.start[:2], sc.goal)
    results.append(check(plan.cost >= straight, f"{plan!r}, straight line {straight:.3f}"))
    costs = [c for c in plan.per_batch_costs if math.isfinite(c)]
    results.append(check(all(b <= a for a, b in zip(costs, costs[1:])), "anytime costs never rise"))

    rp = sc.replan(t_now=0.0, seed=3)
    results.append(
        check(rp.iterations >= 1 and rp.reference[0][0] >= rp.departure - 1e-9,
              f"replan: {rp.iterations} iterations, {len(rp.virtuals)} virtuals")
    )

    run = sc.run("seqbit", seed=7)
    results.append(check(run.outcome == "reached" and run.min_clearance > 0, repr(run)))
    dovs = sc.run("dovs", seed=7)
    results.append(check(dovs.outcome == "crashed", f"dovs: {dovs!r}"))

    text = run.trace_csv()
    svg = sb.render_trace(text)
    results.append(check(svg.startswith("<svg") and svg == sb.render_trace(text), "trace renders to SVG"))

    try:
        sb.Scenario.from_toml("not = [valid")
        results.append(check(False, "bad TOML rejected"))
    except ValueError:
        results.append(check(True, "bad TOML rejected"))

    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main())
