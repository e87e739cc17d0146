"""BP thresholds of coupled (3,6) chains against the uncoupled ensemble.

Run: ``python demos/threshold_saturation.py``. Coupling lifts the BEC
threshold from about 0.4294 to about 0.488, while the rate loss from
termination shrinks as ``m / L``.
"""

from __future__ import annotations

from sccodes.chain import CoupledChainSpec
from sccodes.density_evolution import bp_threshold, scalar_regular_threshold
from sccodes.protograph import build_coupled_base, edge_spread, uncoupled_base

SPREAD = [[[2, 2]], [[1, 1]]]


def main() -> None:
    print(f"uncoupled (3,6): protograph DE {bp_threshold(uncoupled_base([[3, 3]]), tol_eps=1e-5):.5f}, "
          f"scalar recursion {scalar_regular_threshold(3, 6):.5f}")
    print(f"{'L':>4} {'rate':>8} {'eps_BP':>8}")
    for L in (5, 10, 20, 40):
        base = build_coupled_base(edge_spread([[3, 3]], SPREAD), CoupledChainSpec(L, 1))
        print(f"{L:>4} {float(base.design_rate):8.4f} {bp_threshold(base, tol_eps=1e-4):8.4f}")


if __name__ == "__main__":
    main()
